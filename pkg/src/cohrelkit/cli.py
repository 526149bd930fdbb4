"""Command-line interface.

Subcommands::

    cohrelkit compute MEASURE [inputs] [--eps EPS]   JSON result on stdout
    cohrelkit verify SUITE [--seed S] [--trials N]   pass/fail report
    cohrelkit aep [--instance NAME | --process P --gamma-in GX --gamma-out GY] [--out CSV]
    cohrelkit demo {szilard,observer}

Exit codes: 0 success, 1 verification failure, 2 usage or input parse error,
3 precondition violation, 4 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from . import cohrel as cr
from . import entropies as ent
from . import linalg as la
from . import process as proc
from . import verify as vf

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_PRECONDITION = 3
EXIT_SOLVER = 4

MEASURES = (
    "rel_entropy",
    "d_min0",
    "d_max",
    "d_rob",
    "smooth_d_max",
    "d_hyp",
    "fidelity",
    "purified_distance",
    "gamma_factor",
    "cohrel",
    "bounds",
)


class InputError(Exception):
    """An input file could not be read or does not follow the JSON schema."""


def _round(x: Any) -> Any:
    """Stable JSON numbers: 12 significant digits, ``None`` for non-finite values."""
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not np.isfinite(x):
            return None
        return float(f"{x:.12g}")
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_round(v) for v in x]
    return x


def _dump(payload: dict, out: str | None) -> None:
    text = json.dumps(_round(payload), sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------


def _need(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise InputError(f"measure {args.measure!r} needs {flags}")


def _matrix(path: str) -> np.ndarray:
    try:
        a, _ = la.load_matrix(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc
    return a


def _process(path: str) -> proc.ProcessMatrix:
    try:
        return proc.load_process(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _channel(path: str) -> proc.ChoiMap:
    try:
        return proc.load_channel(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# compute
# ---------------------------------------------------------------------------


def _entropy_payload(measure: str, val: ent.EntropyValue, params: dict) -> dict:
    payload = {"measure": measure, "value_bits": val.value, "method": val.method, "gap": val.gap, "params": params}
    if val.bracket is not None:
        payload["bracket"] = list(val.bracket)
    return payload


def cmd_compute(args: argparse.Namespace) -> int:
    m = args.measure
    params: dict[str, Any] = {}
    # Loading phase: any problem here is an input error.
    if m in ("rel_entropy", "d_min0", "d_max", "d_rob", "smooth_d_max", "d_hyp"):
        _need(args, "rho", "gamma")
        inputs = {"rho": _matrix(args.rho), "gamma": _matrix(args.gamma)}
    elif m in ("fidelity", "purified_distance"):
        _need(args, "rho", "sigma")
        inputs = {"rho": _matrix(args.rho), "sigma": _matrix(args.sigma)}
    elif m == "gamma_factor":
        _need(args, "channel", "gamma_in", "gamma_out")
        inputs = {"channel": _channel(args.channel), "gamma_in": _matrix(args.gamma_in), "gamma_out": _matrix(args.gamma_out)}
    else:  # cohrel, bounds
        _need(args, "process", "gamma_in", "gamma_out")
        inputs = {"process": _process(args.process), "gamma_in": _matrix(args.gamma_in), "gamma_out": _matrix(args.gamma_out)}

    if m in ("rel_entropy", "d_min0", "d_max", "d_rob"):
        fn = {"rel_entropy": ent.rel_entropy, "d_min0": ent.d_min0, "d_max": ent.d_max, "d_rob": ent.d_rob}[m]
        payload = _entropy_payload(m, fn(inputs["rho"], inputs["gamma"]), params)
    elif m == "smooth_d_max":
        params["eps"] = args.eps
        payload = _entropy_payload(m, ent.smooth_d_max(args.eps, inputs["rho"], inputs["gamma"]), params)
    elif m == "d_hyp":
        params["eta"] = args.eta
        payload = _entropy_payload(m, ent.d_hyp(args.eta, inputs["rho"], inputs["gamma"]), params)
    elif m == "fidelity":
        f = la.fidelity(inputs["rho"], inputs["sigma"])
        payload = {"measure": m, "value": f, "method": "closed_form", "gap": 0.0, "params": params}
    elif m == "purified_distance":
        p = la.purified_distance(inputs["rho"], inputs["sigma"])
        payload = {"measure": m, "value": p, "method": "closed_form", "gap": 0.0, "params": params}
    elif m == "gamma_factor":
        alpha = proc.gamma_factor(inputs["channel"], inputs["gamma_in"], inputs["gamma_out"])
        payload = {"measure": m, "value": alpha, "value_bits": -float(np.log2(alpha)) if alpha > 0 else None,
                   "method": "closed_form", "gap": 0.0, "params": params}
    elif m == "cohrel":
        params.update(eps=args.eps, smoothing=args.smoothing)
        if args.env_dim is not None:
            params["env_dim"] = args.env_dim
        pm, gi, go = inputs["process"], inputs["gamma_in"], inputs["gamma_out"]
        if args.smoothing == "x_bracket":
            res = cr.cohrel_smooth_x_bracket(pm, gi, go, args.eps)
        else:
            res = cr.cohrel_smooth_z(pm, gi, go, args.eps, env_dim=args.env_dim)
        payload = {
            "measure": m,
            "value_bits": res.value_bits,
            "method": res.smoothing if res.status == "bracket" else ("sdp" if res.status != "closed_form" else "closed_form"),
            "status": res.status,
            "gap": res.gap,
            "primal_value": res.primal_value,
            "dual_value": res.dual_value,
            "bracket": [res.lower, res.upper],
            "params": params,
        }
        if args.work_temperature is not None:
            payload["work_joules"] = cr.work_from_bits(res.value_bits, args.work_temperature)
            params["temperature"] = args.work_temperature
        payload["value_nats"] = cr.bits_to_nats(res.value_bits)
    else:  # bounds
        params["eps"] = args.eps
        rec = cr.bounds_suite(inputs["process"], inputs["gamma_in"], inputs["gamma_out"], args.eps)
        payload = {
            "measure": m,
            "bounds": [
                {"name": b.name, "value_bits": b.value, "side": b.side, "target": b.target, "description": b.description}
                for b in rec.bounds
            ],
            "values": {k: list(v) for k, v in rec.values.items()},
            "violations": rec.violations(args.tol_gap if args.tol_gap is not None else cr.PROPERTY_SLACK),
            "method": "bounds",
            "params": params,
        }
    _dump(payload, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    if args.suite != "all" and args.suite not in vf.SUITES:
        sys.stderr.write(f"unknown suite {args.suite!r}; choose from {', '.join(vf.SUITES + ('all',))}\n")
        return EXIT_USAGE
    tol = vf.Tolerances(
        gap=args.tol_gap if args.tol_gap is not None else vf.Tolerances.gap,
        feas=args.tol_feas if args.tol_feas is not None else vf.Tolerances.feas,
    )
    report = vf.run_suite(args.suite, args.seed, args.trials, tol)
    text = "\n".join(report.lines(timing=args.timing)) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if report.ok else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# aep
# ---------------------------------------------------------------------------


def _aep_instance(name: str, seed: int):
    if name == "gibbs":
        pm, gi, go, _ = vf.aep_gibbs_instance()
        return pm, gi, go
    if name == "identity":
        g = np.diag([1.0, 0.5]).astype(complex)
        return proc.process_matrix(proc.identity_channel(2), np.diag([0.7, 0.3]).astype(complex)), g, g
    if name == "generic":
        return cr._random_instance(proc.rng_from_seed(seed), 2, 2)
    raise InputError(f"unknown AEP instance {name!r}")


def cmd_aep(args: argparse.Namespace) -> int:
    if args.process is not None:
        if args.gamma_in is None or args.gamma_out is None:
            raise InputError("--process needs --gamma-in and --gamma-out")
        pm, gi, go = _process(args.process), _matrix(args.gamma_in), _matrix(args.gamma_out)
    else:
        pm, gi, go = _aep_instance(args.instance, args.seed)
    table = cr.aep_study(pm, gi, go, args.eps, args.n_max, timing=args.timing)
    text = table.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# demos
# ---------------------------------------------------------------------------


def szilard_report() -> dict:
    """Information-battery bookkeeping for a one-bit Szilard engine (``Gamma = I``)."""
    g = np.eye(2, dtype=complex)
    mixed = np.eye(2, dtype=complex) / 2
    # Known position |L>, expanded to fill the box: pure input, maximally mixed output.
    expand = cr.special_cases("pure_input", rho_out=mixed, gamma_in=g, gamma_out=g, index=0)
    expand_sdp = cr.cohrel_nonsmooth(expand.details["process"], g, g)
    # Erasure of an unknown bit: maximally mixed input, pure output |0>.
    erase = cr.special_cases("pure_output", sigma=mixed, gamma_in=g, gamma_out=g, index=0)
    erase_sdp = cr.cohrel_nonsmooth(erase.details["process"], g, g)
    return {
        "scenario": "szilard",
        "expansion_known_position_bits": expand_sdp.value_bits,
        "expansion_closed_form_bits": expand.value_bits,
        "erasure_bits": erase_sdp.value_bits,
        "erasure_closed_form_bits": erase.value_bits,
        "erasure_work_joules_at_300K": cr.work_from_bits(erase_sdp.value_bits, 300.0),
        "ok": bool(abs(expand_sdp.value_bits - 1.0) <= 1e-6 and abs(erase_sdp.value_bits + 1.0) <= 1e-6),
    }


def observer_report(seed: int = 0) -> dict:
    """Coarse-graining ``F = tr_R`` with the Petz recovery map and transfer of sub-preservation."""
    rng = proc.rng_from_seed(seed)
    gs = np.diag([1.0, np.exp(-1.0)]).astype(complex)
    g_r = np.diag([1.0, np.exp(-0.5), np.exp(-2.0)]).astype(complex)
    ga = np.kron(gs, g_r)
    f = proc.partial_trace_channel(2, 3)
    gb = la.hermitize(proc.apply(f, ga))
    r = proc.petz_recovery(f, ga)
    recovery_error = la.opnorm(proc.apply(r, gb) - ga)
    e_a = proc.random_subpreserving_map(rng, ga, ga)
    e_b = proc.compose(f, proc.compose(e_a, r))
    e_b2 = proc.random_subpreserving_map(rng, gb, gb)
    e_a2 = proc.compose(r, proc.compose(e_b2, f))
    fwd = proc.gamma_factor(e_b, gb, gb)
    back = proc.gamma_factor(e_a2, ga, ga)
    return {
        "scenario": "observer",
        "petz_recovery_error": recovery_error,
        "fine_to_coarse_gamma_factor": fwd,
        "coarse_to_fine_gamma_factor": back,
        "ok": bool(recovery_error <= 1e-8 and fwd <= 1 + 1e-8 and back <= 1 + 1e-8),
    }


def cmd_demo(args: argparse.Namespace) -> int:
    report = szilard_report() if args.scenario == "szilard" else observer_report(args.seed)
    _dump(report, args.out)
    return EXIT_OK if report["ok"] else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed of the Philox generator (default 0)")
    p.add_argument("--out", default=None, help="write the output to this file instead of stdout")
    p.add_argument("--tol-gap", type=float, default=None, help="largest accepted certified gap")
    p.add_argument("--tol-feas", type=float, default=None, help="feasibility tolerance of exact identities")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cohrelkit", description="Coherent relative entropy toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="evaluate a quantity on JSON inputs")
    c.add_argument("measure", choices=MEASURES)
    for flag in ("--rho", "--sigma", "--gamma", "--gamma-in", "--gamma-out", "--process", "--channel"):
        c.add_argument(flag, default=None)
    c.add_argument("--eps", type=float, default=0.0)
    c.add_argument("--eta", type=float, default=0.9, help="success probability for d_hyp")
    c.add_argument("--smoothing", choices=cr.SMOOTHINGS, default="z")
    c.add_argument("--env-dim", type=int, default=None)
    c.add_argument("--work-temperature", type=float, default=None, help="also report work in joules at this temperature")
    _add_common(c)
    c.set_defaults(func=cmd_compute)

    v = sub.add_parser("verify", help="run seeded verification suites")
    v.add_argument("suite", help="one of " + ", ".join(vf.SUITES + ("all",)))
    v.add_argument("--trials", type=int, default=10)
    v.add_argument("--timing", action="store_true", help="include per-check runtimes (not reproducible)")
    _add_common(v)
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("aep", help="per-copy values of tensor powers (CSV)")
    a.add_argument("--instance", choices=("gibbs", "identity", "generic"), default="gibbs")
    a.add_argument("--process", default=None)
    a.add_argument("--gamma-in", default=None)
    a.add_argument("--gamma-out", default=None)
    a.add_argument("--eps", type=float, default=0.1)
    a.add_argument("--n-max", type=int, default=3)
    a.add_argument("--timing", action="store_true", help="fill the runtime_ms column (not reproducible)")
    _add_common(a)
    a.set_defaults(func=cmd_aep)

    d = sub.add_parser("demo", help="narrative scenarios")
    d.add_argument("scenario", choices=("szilard", "observer"))
    _add_common(d)
    d.set_defaults(func=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except ent.SolverFailure as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return EXIT_SOLVER
    except ValueError as exc:
        sys.stderr.write(f"precondition violated: {exc}\n")
        return EXIT_PRECONDITION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
