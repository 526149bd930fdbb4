"""Seeded verification suites for every module.

Each suite is a list of named :class:`Check` objects.  A check receives a
Philox generator derived from ``(seed, check index, trial)`` plus the
tolerance settings and returns ``(passed, detail)``.  Checks marked
``repeat=False`` examine a fixed instance and run once per suite invocation
(when ``trials > 0``).

The suites are used by ``cohrelkit verify`` and by the acceptance tests.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import cohrel as cr
from . import entropies as ent
from . import linalg as la
from . import process as proc
from .process import ProcessMatrix

SUITES = ("linalg", "sdp", "entropies", "process", "cohrel")


@dataclass(frozen=True)
class Tolerances:
    """Tolerance settings of a verification run.

    Attributes:
        gap: largest accepted certified primal-dual gap (bits) of an optimal solve.
        feas: tolerance for exact operator identities (trace/Gamma preservation).
        slack: slack for comparisons between two SDP values.
    """

    gap: float = 1e-7
    feas: float = 1e-8
    slack: float = 1e-5


Outcome = tuple[bool, str]


@dataclass(frozen=True)
class Check:
    name: str
    description: str
    run: Callable[[np.random.Generator, Tolerances], Outcome]
    repeat: bool = True


@dataclass
class CheckReport:
    suite: str
    name: str
    description: str
    passed: int = 0
    failed: int = 0
    errors: int = 0
    first_failure: str = ""
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.errors == 0


@dataclass
class SuiteReport:
    seed: int
    trials: int
    checks: list[CheckReport] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self, timing: bool = False) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.ok else "FAIL"
            line = f"{status} {c.suite}.{c.name}: {c.passed} passed, {c.failed} failed, {c.errors} errors"
            if timing:
                line += f" ({c.seconds:.2f} s)"
            line += f" -- {c.description}"
            if c.first_failure:
                line += f" [first failure: {c.first_failure}]"
            out.append(line)
        total_f = sum(c.failed + c.errors for c in self.checks)
        out.append(f"{'OK' if self.ok else 'FAILED'}: {len(self.checks)} checks, {total_f} failing trials")
        return out


def trial_rng(seed: int, check_index: int, trial: int) -> np.random.Generator:
    """Independent Philox stream for one trial of one check."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), check_index, trial])))


def run_checks(
    suite: str,
    checks: Sequence[Check],
    seed: int,
    trials: int,
    tol: Tolerances | None = None,
    report: SuiteReport | None = None,
) -> SuiteReport:
    """Run ``checks`` for ``trials`` seeded trials each.

    Exceptions raised by a check count as errors (the message is kept as the
    first failure), so a single broken instance does not abort the run.
    """
    tol = Tolerances() if tol is None else tol
    report = SuiteReport(seed, trials) if report is None else report
    if trials <= 0:
        return report
    for idx, chk in enumerate(checks):
        rec = CheckReport(suite, chk.name, chk.description)
        start = time.perf_counter()
        for t in range(trials if chk.repeat else 1):
            try:
                ok, detail = chk.run(trial_rng(seed, idx, t), tol)
            except Exception as exc:  # noqa: BLE001 -- reported, not swallowed
                rec.errors += 1
                if not rec.first_failure:
                    rec.first_failure = f"trial {t}: {type(exc).__name__}: {exc}"
                continue
            if ok:
                rec.passed += 1
            else:
                rec.failed += 1
                if not rec.first_failure:
                    rec.first_failure = f"trial {t}: {detail}"
        rec.seconds = time.perf_counter() - start
        report.checks.append(rec)
    return report


def run_suite(name: str, seed: int, trials: int, tol: Tolerances | None = None) -> SuiteReport:
    """Run one suite (or ``all``)."""
    if name == "all":
        report = SuiteReport(seed, trials)
        for s in SUITES:
            run_checks(s, suite_checks(s), seed, trials, tol, report)
        return report
    return run_checks(name, suite_checks(name), seed, trials, tol)


def suite_checks(name: str) -> list[Check]:
    if name not in SUITES:
        raise KeyError(name)
    return list(_SUITE_TABLE[name])


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _dim(rng: np.random.Generator, lo: int = 2, hi: int = 3) -> int:
    return int(rng.integers(lo, hi + 1))


def _fmt(a: float, b: float) -> str:
    return f"{a:.10g} vs {b:.10g} (diff {abs(a - b):.3e})"


def _eigen_projector(rng: np.random.Generator, gamma: np.ndarray) -> np.ndarray:
    """Random nonzero spectral projector of ``gamma`` (commutes with it)."""
    _, v = np.linalg.eigh(gamma)
    d = gamma.shape[0]
    mask = rng.integers(0, 2, size=d).astype(bool)
    if not mask.any():
        mask[int(rng.integers(d))] = True
    return v[:, mask] @ v[:, mask].conj().T


def _full_rank_state(rng: np.random.Generator, d: int) -> np.ndarray:
    s = proc.random_state(rng, d)
    return la.hermitize(0.9 * s + 0.1 * np.eye(d) / d)


# ---------------------------------------------------------------------------
# linalg
# ---------------------------------------------------------------------------


def check_partial_trace(rng, tol) -> Outcome:
    da, db = _dim(rng), _dim(rng)
    a = proc.random_state(rng, da)
    b = proc.random_state(rng, db)
    joint = proc.random_state(rng, da * db)
    err = la.opnorm(la.ptrace_second(np.kron(a, b), da, db) - a)
    err = max(err, la.opnorm(la.partial_trace(joint, [da, db], keep=[1]) - la.ptrace_first(joint, da, db)))
    swapped = la.permute_systems(joint, [da, db], [1, 0])
    err = max(err, la.opnorm(la.ptrace_second(swapped, db, da) - la.ptrace_first(joint, da, db)))
    return err <= 1e-12, f"error {err:.3e}"


def check_fidelity_metric(rng, tol) -> Outcome:
    d = _dim(rng, 2, 4)
    r, s, t = (proc.random_state(rng, d) for _ in range(3))
    sym = abs(la.fidelity(r, s) - la.fidelity(s, r))
    tri = la.purified_distance(r, t) - la.purified_distance(r, s) - la.purified_distance(s, t)
    return sym <= 1e-10 and tri <= 1e-10, f"symmetry {sym:.3e}, triangle excess {tri:.3e}"


def check_match_marginal(rng, tol) -> Outcome:
    da, db = _dim(rng), _dim(rng)
    rho = proc.random_state(rng, da * db)
    rho_a = la.ptrace_second(rho, da, db)
    target = la.hermitize(0.8 * rho_a + 0.2 * proc.random_state(rng, da))
    m = la.match_marginal_details(rho, target, (da, db))
    e_a = la.opnorm(la.ptrace_second(m.state, da, db) - target)
    e_b = la.opnorm(la.ptrace_first(m.state, da, db) - la.ptrace_first(rho, da, db))
    pd = la.purified_distance(m.state, rho)
    ok = e_a <= 1e-10 and e_b <= 1e-10 and pd <= la.match_marginal_bound(m.delta) + 1e-10
    return ok, f"marginal errors {e_a:.2e}/{e_b:.2e}, distance {pd:.4f} vs bound {la.match_marginal_bound(m.delta):.4f}"


def check_gentle_projection(rng, tol) -> Outcome:
    d = _dim(rng, 2, 4)
    rho = proc.random_state(rng, d)
    w, v = np.linalg.eigh(rho)
    p = v[:, 1:] @ v[:, 1:].conj().T
    weight = float(np.real(np.trace(p @ rho)))
    e = 1.0 - weight
    out = la.project_normalize(rho, p)
    bound = np.sqrt(2 * e) / np.sqrt(1 - e)
    pd = la.purified_distance(out, rho)
    return pd <= bound + 1e-10, f"distance {pd:.4f} vs {bound:.4f}"


LINALG_CHECKS = [
    Check("partial_trace", "partial traces of products and permuted systems", check_partial_trace),
    Check("fidelity_metric", "fidelity symmetric, purified distance obeys the triangle inequality", check_fidelity_metric),
    Check("match_marginal", "marginal matching hits the target and stays within 2 sqrt(2 delta)", check_match_marginal),
    Check("gentle_projection", "projecting onto a high-weight subspace is gentle", check_gentle_projection),
]


# ---------------------------------------------------------------------------
# sdp
# ---------------------------------------------------------------------------


def check_d_max_sdp(rng, tol) -> Outcome:
    d = _dim(rng, 2, 4)
    rho = proc.random_state(rng, d)
    g = proc.random_gamma(rng, d, "generic")
    sdp = ent.d_max_sdp(rho, g)
    closed = ent.d_max(rho, g).value
    ok = abs(sdp.value - closed) <= 1e-7 and sdp.gap <= tol.gap
    return ok, _fmt(sdp.value, closed) + f", gap {sdp.gap:.2e}"


def check_fidelity_sdp(rng, tol) -> Outcome:
    d = _dim(rng, 2, 4)
    r = proc.random_state(rng, d, rank=int(rng.integers(1, d + 1)))
    s = proc.random_state(rng, d)
    f_sdp, gap = ent.fidelity_sdp(r, s)
    f = la.fidelity(r, s)
    return abs(f_sdp - f) <= 1e-6 and gap <= tol.gap, _fmt(f_sdp, f) + f", gap {gap:.2e}"


def check_cohrel_gap(rng, tol) -> Outcome:
    pm, gi, go = cr._random_instance(rng, 2, 2)
    eps = float(rng.choice([0.0, 0.1]))
    res = cr.cohrel_smooth_z(pm, gi, go, eps)
    if res.status != "optimal":
        return True, f"status {res.status} (one-sided)"
    # Weak duality up to the certified tolerance: alpha_d <= alpha_p up to a gap of tol.gap bits.
    return abs(res.gap) <= tol.gap, f"gap {res.gap:.2e}"


SDP_CHECKS = [
    Check("d_max_vs_eigendecomposition", "D_max program agrees with the closed form to 1e-7", check_d_max_sdp),
    Check("fidelity_vs_closed_form", "fidelity program agrees with ||sqrt(rho) sqrt(sigma)||_1 to 1e-6", check_fidelity_sdp),
    Check("certified_gap", "optimal coherent-relative-entropy solves have certified gap <= tol", check_cohrel_gap),
]


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------


def check_entropy_ordering(rng, tol) -> Outcome:
    d = _dim(rng, 2, 4)
    rho = proc.random_state(rng, d)
    g = proc.random_gamma(rng, d)
    a = ent.d_min0(rho, g).value
    b = ent.rel_entropy(rho, g).value
    c = ent.d_max(rho, g).value
    return a <= b + 1e-10 and b <= c + 1e-10, f"{a:.6f} <= {b:.6f} <= {c:.6f}"


def check_battery_entropies(rng, tol) -> Outcome:
    d = _dim(rng, 2, 4)
    g = proc.random_gamma(rng, d)
    p = _eigen_projector(rng, g)
    vals = cr.battery_relative_entropy(p, g)
    ref = vals["closed_form"]
    err = max(abs(v - ref) for v in vals.values())
    return err <= 1e-9, f"max deviation {err:.3e}"


def check_conditional_duality(rng, tol) -> Outcome:
    psi = proc.random_pure_state(rng, 2 * 2 * 4)
    full = np.outer(psi, psi.conj())
    rho_er = la.partial_trace(la.permute_systems(full, [2, 2, 4], [2, 1, 0]), [4, 2, 2], keep=[0, 1])
    rho_ex = la.partial_trace(la.permute_systems(full, [2, 2, 4], [2, 0, 1]), [4, 2, 2], keep=[0, 1])
    a = ent.h_min_alt(rho_er, (4, 2)).value
    b = -ent.h_zero_alt(rho_ex, (4, 2)).value
    return abs(a - b) <= 1e-9, _fmt(a, b)


def check_continuity(rng, tol) -> Outcome:
    d = _dim(rng, 2, 4)
    g = proc.random_gamma(rng, d)
    r = proc.random_state(rng, d)
    s = la.hermitize((1 - 0.1) * r + 0.1 * proc.random_state(rng, d))
    return ent.verify_continuity(r, s, g), "continuity bound violated"


def check_smooth_d_max(rng, tol) -> Outcome:
    d = _dim(rng, 2, 3)
    rho = proc.random_state(rng, d)
    g = proc.random_gamma(rng, d)
    v0 = ent.d_max(rho, g).value
    v1 = ent.smooth_d_max(0.05, rho, g)
    v2 = ent.smooth_d_max(0.2, rho, g)
    state = v1.details["state"]
    pd = la.purified_distance(state, rho)
    ok = v2.lower <= v1.upper + 1e-7 and v1.lower <= v0 + 1e-7 and pd <= 0.05 + 1e-6
    return ok, f"{v2.value:.6f} <= {v1.value:.6f} <= {v0:.6f}, optimiser distance {pd:.4f}"


ENTROPY_CHECKS = [
    Check("min_rel_max_ordering", "D_min,0 <= D <= D_max for normalised states", check_entropy_ordering),
    Check("battery_states", "D, D_min,0 and D_max coincide on battery states", check_battery_entropies),
    Check("conditional_duality", "H_min(E|R) = -H_0(E|X') on pure tripartite states", check_conditional_duality),
    Check("continuity", "relative-entropy continuity bound", check_continuity),
    Check("smooth_d_max", "smooth D_max is monotone in eps and its optimiser lies in the ball", check_smooth_d_max),
]


# ---------------------------------------------------------------------------
# process
# ---------------------------------------------------------------------------


def _subpreserving_instance(rng):
    dk, dl = _dim(rng), _dim(rng)
    gk = proc.random_gamma(rng, dk)
    gl = proc.random_gamma(rng, dl)
    t = proc.random_subpreserving_map(rng, gk, gl)
    return t, gk, gl


def check_dilation_preserving(rng, tol) -> Outcome:
    t, gk, gl = _subpreserving_instance(rng)
    k_idx, l_idx = int(rng.integers(gk.shape[0])), int(rng.integers(gl.shape[0]))
    dil = proc.dilate(t, gk, gl, k_idx, l_idx)
    _, g_k = proc.gamma_eigenvector(gk, k_idx)
    _, g_l = proc.gamma_eigenvector(gl, l_idx)
    g_all = np.kron(np.kron(gk, gl), dil.gamma_q)
    tp = la.opnorm(dil.phi.trace_operator() - np.eye(dil.phi.d_in))
    gp = la.opnorm(proc.apply(dil.phi, g_all) - g_all) / max(1.0, la.opnorm(g_all))
    # Energy balance of the ancillas, g_l g_i = g_k g_f, holds exactly for the
    # constructed parameters g_i = 1, g_f = g_l / g_k.
    exact = dil.gamma_q[0, 0] == 1.0 and dil.gamma_q[1, 1] == g_l / g_k and dil.gamma_q[0, 1] == 0
    rel = abs(g_l * dil.gamma_q[0, 0].real - g_k * dil.gamma_q[1, 1].real) / max(g_l, 1e-300)
    ok = tp <= tol.feas and gp <= tol.feas and bool(exact) and rel <= 1e-15
    return ok, f"trace defect {tp:.2e}, Gamma defect {gp:.2e}, eigenvalue relation {rel:.2e}"


def _dilation_apply_with_reference(dil, sigma_kr, dk, dl, dr, gk, gl, k_idx, l_idx):
    li, kf = proc.dilation_inputs(dil, gk, gl, k_idx, l_idx)
    anc = np.outer(li, li.conj())
    x = la.permute_systems(np.kron(sigma_kr, anc), [dk, dr, dl * 2], [0, 2, 1])  # K LQ R
    out = proc.apply_extended(dil.phi, x, dr)  # K L Q R
    return out, kf


def check_dilation_recovery(rng, tol) -> Outcome:
    """Three recovery statements for the dilated channel."""
    dk, dl = _dim(rng), _dim(rng)
    gk = proc.random_gamma(rng, dk)
    gl0 = proc.random_gamma(rng, dl)
    # (a) a map trace preserving on the support of a projector P.
    k_idx, l_idx = 0, 0
    rank = int(rng.integers(1, dk))
    iso = proc.random_isometry(rng, dk, dk)
    p = iso[:, :rank] @ iso[:, :rank].conj().T
    e = proc.random_channel(rng, dk, dl)
    t_p = proc.compose(e, proc.kraus_channel([p]))
    alpha = proc.gamma_factor(t_p, gk, gl0)
    gl = gl0 * max(alpha, 1.0)
    dil = proc.dilate(t_p, gk, gl, k_idx, l_idx)
    tau = iso[:, :rank] @ proc.random_state(rng, rank) @ iso[:, :rank].conj().T
    li, kf = proc.dilation_inputs(dil, gk, gl, k_idx, l_idx)
    out = proc.apply(dil.phi, np.kron(tau, np.outer(li, li.conj())))  # K L Q
    want = la.permute_systems(np.kron(proc.apply(t_p, tau), np.outer(kf, kf.conj())), [dl, dk, 2], [1, 0, 2])
    err_a = la.opnorm(out - want)
    # (b) pure sigma_KR supported where the map is trace preserving.
    dr = rank
    psi = np.zeros(dk * dr, dtype=complex)
    coeff = proc.random_pure_state(rng, rank * dr).reshape(rank, dr)
    psi = (iso[:, :rank] @ coeff).reshape(-1)
    sigma_kr = np.outer(psi, psi.conj())
    out_b, kf = _dilation_apply_with_reference(dil, sigma_kr, dk, dl, dr, gk, gl, k_idx, l_idx)
    ideal = proc.apply_extended(t_p, sigma_kr, dr)  # L R
    want_b = la.permute_systems(np.kron(ideal, np.outer(kf, kf.conj())), [dl, dr, dk, 2], [2, 0, 3, 1])
    err_b = la.opnorm(out_b - want_b)
    # (c) generic map and pure input: distances to any target agree.
    t, gk2, gl2 = proc.random_subpreserving_map(rng, gk, gl0), gk, gl0
    dil2 = proc.dilate(t, gk2, gl2)
    dr = _dim(rng, 1, 2)
    psi = proc.random_pure_state(rng, dk * dr)
    sigma_kr = np.outer(psi, psi.conj())
    out_c, kf2 = _dilation_apply_with_reference(dil2, sigma_kr, dk, dl, dr, gk2, gl2, 0, 0)
    target = proc.random_state(rng, dl * dr)
    target_big = la.permute_systems(np.kron(target, np.outer(kf2, kf2.conj())), [dl, dr, dk, 2], [2, 0, 3, 1])
    lhs = la.purified_distance(la.hermitize(out_c), target_big)
    rhs = la.purified_distance(la.hermitize(proc.apply_extended(t, sigma_kr, dr)), target)
    err_c = abs(lhs - rhs)
    ok = max(err_a, err_b, err_c) <= tol.feas
    return ok, f"errors (a) {err_a:.2e}, (b) {err_b:.2e}, (c) {err_c:.2e}"


def check_battery_round_trip(rng, tol) -> Outcome:
    d_in, d_out = _dim(rng), _dim(rng)
    gi = proc.random_gamma(rng, d_in)
    go = proc.random_gamma(rng, d_out)
    e = proc.random_channel(rng, d_in, d_out)
    alpha = proc.gamma_factor(e, gi, go)
    # Information battery with enough room: budget 2^(k) >= alpha.
    dw = 4
    rank_out = 4
    rank_in = 1
    battery = proc.BatterySpec.information(dw, rank_in, rank_out)
    if alpha > battery.budget:
        go = go * alpha / battery.budget
    phi = proc.battery_implementation(e, gi, go, battery)
    t = proc.extract_system_map(phi, (battery.p_in, battery.gamma_w), (battery.p_out, battery.gamma_w))
    err = la.opnorm(t.choi - e.choi)
    sub = proc.is_gamma_subpreserving(phi, np.kron(gi, battery.gamma_w), np.kron(go, battery.gamma_w))
    return err <= 1e-9 and sub, f"round-trip error {err:.2e}, joint map sub-preserving: {sub}"


def check_petz(rng, tol) -> Outcome:
    ds, dr = _dim(rng), _dim(rng)
    gs = proc.random_gamma(rng, ds)
    g_r = proc.random_gamma(rng, dr)
    ga = np.kron(gs, g_r)
    if rng.uniform() < 0.5:
        f = proc.partial_trace_channel(ds, dr)
    else:
        f = proc.compose(proc.random_channel(rng, ds, ds, env_dim=3), proc.partial_trace_channel(ds, dr))
    gb = la.hermitize(proc.apply(f, ga))
    r = proc.petz_recovery(f, ga)
    err = la.opnorm(proc.apply(r, gb) - ga) / max(1.0, la.opnorm(ga))
    e_a = proc.random_subpreserving_map(rng, ga, ga)
    e_b = proc.compose(f, proc.compose(e_a, r))
    fwd = proc.gamma_factor(e_b, gb, gb)
    e_b2 = proc.random_subpreserving_map(rng, gb, gb)
    e_a2 = proc.compose(r, proc.compose(e_b2, f))
    back = proc.gamma_factor(e_a2, ga, ga)
    ok = err <= tol.feas and fwd <= 1 + tol.feas and back <= 1 + tol.feas
    return ok, f"R(Gamma_B) error {err:.2e}, factors {fwd:.10f} / {back:.10f}"


def check_apply_kraus(rng, tol) -> Outcome:
    d_in, d_out = _dim(rng), _dim(rng)
    e = proc.random_channel(rng, d_in, d_out, env_dim=3)
    x = proc.random_state(rng, d_in)
    ks = e.kraus()
    via_kraus = sum(k @ x @ k.conj().T for k in ks)
    err = la.opnorm(via_kraus - proc.apply(e, x))
    return err <= 1e-10, f"error {err:.2e}"


PROCESS_CHECKS = [
    Check("choi_kraus_consistency", "Choi and Kraus actions agree", check_apply_kraus),
    Check("dilation_gamma_preserving", "dilations are trace and Gamma preserving with g_l g_i = g_k g_f", check_dilation_preserving),
    Check("dilation_recovery", "dilated channel reproduces the map on TP subspaces and pure inputs, and preserves distances", check_dilation_recovery),
    Check("battery_round_trip", "battery implementation followed by extraction returns the map", check_battery_round_trip),
    Check("petz_observer", "Petz map recovers Gamma_A and transfers sub-preservation both ways", check_petz),
]


# ---------------------------------------------------------------------------
# cohrel
# ---------------------------------------------------------------------------


def check_identity_zero(rng, tol) -> Outcome:
    d = _dim(rng)
    g = proc.random_gamma(rng, d)
    sigma = _full_rank_state(rng, d)
    pm = proc.process_matrix(proc.identity_channel(d), sigma)
    start = time.perf_counter()
    res = cr.cohrel_nonsmooth(pm, g, g)
    secs = time.perf_counter() - start
    return abs(res.value_bits) <= 1e-5 and secs <= 1.0, f"value {res.value_bits:.3e} in {secs:.2f} s"


def check_gibbs_to_gibbs(rng, tol) -> Outcome:
    d_in, d_out = _dim(rng), _dim(rng)
    gi = proc.random_gamma(rng, d_in)
    go = proc.random_gamma(rng, d_out)
    p = _eigen_projector(rng, gi)
    q = _eigen_projector(rng, go)
    worst, detail = 0.0, ""
    for eps in (0.0, 0.1, 0.3):
        cf = cr.special_cases("gibbs_to_gibbs", gamma_in=gi, gamma_out=go, p_in=p, p_out=q, eps=eps)
        val = cr.cohrel_smooth_z(cf.details["process"], gi, go, eps).value_bits
        if abs(val - cf.value_bits) >= worst:
            worst, detail = abs(val - cf.value_bits), f"eps {eps}: " + _fmt(val, cf.value_bits)
    return worst <= 1e-6, detail


def check_trivial_output(rng, tol) -> Outcome:
    d = _dim(rng)
    sigma = proc.random_state(rng, d, rank=int(rng.integers(1, d + 1)))
    g = proc.random_gamma(rng, d, "generic")
    cf = cr.special_cases("trivial_output", sigma=sigma, gamma_in=g)
    val = cr.cohrel_nonsmooth(cf.details["process"], g, np.ones((1, 1))).value_bits
    return abs(val - cf.value_bits) <= 1e-6, _fmt(val, cf.value_bits)


def check_trivial_input(rng, tol) -> Outcome:
    d = _dim(rng)
    rho = proc.random_state(rng, d, rank=int(rng.integers(1, d + 1)))
    g = proc.random_gamma(rng, d, "generic")
    cf = cr.special_cases("trivial_input", rho_out=rho, gamma_out=g)
    val = cr.cohrel_nonsmooth(cf.details["process"], np.ones((1, 1)), g).value_bits
    return abs(val - cf.value_bits) <= 1e-6, _fmt(val, cf.value_bits)


def check_pure_eigenstates(rng, tol) -> Outcome:
    d_in, d_out = _dim(rng), _dim(rng)
    gi = proc.random_gamma(rng, d_in)
    go = proc.random_gamma(rng, d_out)
    sigma = proc.random_state(rng, d_in)
    rho_out = proc.random_state(rng, d_out)
    a = cr.special_cases("pure_output", sigma=sigma, gamma_in=gi, gamma_out=go, index=int(rng.integers(d_out)))
    b = cr.special_cases("pure_input", rho_out=rho_out, gamma_in=gi, gamma_out=go, index=int(rng.integers(d_in)))
    va = cr.cohrel_nonsmooth(a.details["process"], gi, go).value_bits
    vb = cr.cohrel_nonsmooth(b.details["process"], gi, go).value_bits
    ok = abs(va - a.value_bits) <= 1e-6 and abs(vb - b.value_bits) <= 1e-6
    return ok, f"output {_fmt(va, a.value_bits)}; input {_fmt(vb, b.value_bits)}"


def check_gibbs_to_arbitrary(rng, tol) -> Outcome:
    d_in, d_out = _dim(rng), _dim(rng)
    gi = proc.random_gamma(rng, d_in)
    go = proc.random_gamma(rng, d_out)
    e = proc.random_channel(rng, d_in, d_out)
    pm = proc.process_matrix(e, gi / np.real(np.trace(gi)))
    cf = cr.special_cases("gibbs_to_arbitrary", rho=pm, gamma_in=gi, gamma_out=go)
    val = cr.cohrel_nonsmooth(pm, gi, go).value_bits
    return abs(val - cf.value_bits) <= 1e-6, _fmt(val, cf.value_bits)


def check_max_entropy(rng, tol) -> Outcome:
    psi = proc.random_pure_state(rng, 2 * 2 * 4)
    cf = cr.special_cases("max_entropy", psi=psi, dims=(2, 2, 4))
    val = cr.cohrel_nonsmooth(cf.details["process"], np.eye(2), np.eye(2)).value_bits
    other = cf.details["minus_h_zero"]
    ok = abs(val - cf.value_bits) <= 1e-6 and abs(val - other) <= 1e-6
    return ok, f"SDP {val:.10f}, H_min {cf.value_bits:.10f}, -H_0 {other:.10f}"


def check_bound_sandwich(rng, tol) -> Outcome:
    d_in, d_out = _dim(rng), _dim(rng)
    pm, gi, go = cr._random_instance(rng, d_in, d_out)
    rec = cr.bounds_suite(pm, gi, go, 0.0)
    bad = rec.violations(tol.slack)
    lo, hi = rec.values["nonsmooth"]
    return not bad, f"violated {bad} at value [{lo:.6f}, {hi:.6f}]"


def check_smooth_bounds(rng, tol) -> Outcome:
    pm, gi, go = cr._random_instance(rng, 2, 2)
    eps = float(rng.choice([0.05, 0.1]))
    rec = cr.bounds_suite(pm, gi, go, eps)
    bad = rec.violations(tol.slack)
    lo_x, hi_x = rec.values["x"]
    ok = not bad and lo_x <= hi_x + tol.slack
    return ok, f"violated {bad}, x bracket [{lo_x:.5f}, {hi_x:.5f}]"


def _property(name: str) -> Callable[[np.random.Generator, Tolerances], Outcome]:
    def run(rng, tol) -> Outcome:
        seed = int(rng.integers(2**63))
        eps = float(rng.choice([0.0, 0.0, 0.1]))
        dims = (_dim(rng), _dim(rng)) if name not in ("superadditivity",) else (2, 2)
        res = cr.property_checks(seed, eps=eps, dims=dims, names=[name], slack=tol.slack)
        if not res:
            return True, "not applicable"
        r = res[0]
        return r.passed, f"{r.lhs:.10g} {r.relation} {r.rhs:.10g} (eps {eps}) {r.detail}"

    return run


def check_eps_monotone(rng, tol) -> Outcome:
    pm, gi, go = cr._random_instance(rng, 2, 2)
    vals = [cr.cohrel_smooth_z(pm, gi, go, e).value_bits for e in (0.0, 0.05, 0.1, 0.2)]
    ok = all(b >= a - tol.slack for a, b in zip(vals, vals[1:]))
    return ok, "values " + ", ".join(f"{v:.6f}" for v in vals)


def check_purification_independence(rng, tol) -> Outcome:
    pm, gi, go = cr._random_instance(rng, 2, 2)
    eps = 0.1
    n = pm.d_in * pm.d_out
    u1 = proc.random_isometry(rng, n, n)
    u2 = proc.random_isometry(rng, n, n)
    a = cr.cohrel_smooth_z(pm, gi, go, eps, env_dim=n, env_unitary=u1).value_bits
    b = cr.cohrel_smooth_z(pm, gi, go, eps, env_dim=n, env_unitary=u2).value_bits
    c = cr.cohrel_smooth_z(pm, gi, go, eps).value_bits
    ok = abs(a - b) <= tol.slack and abs(a - c) <= tol.slack
    return ok, f"purifications {a:.8f} / {b:.8f}, fidelity block {c:.8f}"


def check_trivial_bounds(rng, tol) -> Outcome:
    pm, gi, go = cr._random_instance(rng, _dim(rng), _dim(rng))
    eps = float(rng.choice([0.0, 0.1, 0.3]))
    val = cr.cohrel_smooth_z(pm, gi, go, eps).value_bits
    lo, hi = cr.trivial_bounds(gi, go, eps)
    return lo - tol.slack <= val <= hi + tol.slack, f"{lo:.5f} <= {val:.5f} <= {hi:.5f}"


def check_battery_robustness(rng, tol) -> Outcome:
    d = 2
    gi = proc.random_gamma(rng, d)
    go = proc.random_gamma(rng, d)
    e = proc.random_channel(rng, d, d)
    sigma = _full_rank_state(rng, d)
    alpha = proc.gamma_factor(e, gi, go)
    g1 = 1.0
    g2 = float(max(alpha, 1e-3) * rng.uniform(1.0, 1.5))
    battery = proc.BatterySpec.wit(g1, g2)
    noise = float(rng.uniform(0.01, 0.1))
    cand = cr.battery_robustness(e, sigma, gi, go, battery, noise)
    lower = -float(np.log2(battery.budget))
    ok = (
        cand.distance <= cand.perturbed_distance + tol.feas
        and cand.achieved_alpha <= battery.budget * (1 + tol.feas)
        and lower <= cand.smooth_value + 1e-6
        and cand.achieved_bits <= cand.smooth_value + 1e-6
    )
    return ok, (
        f"eps {cand.perturbed_distance:.4f}, candidate distance {cand.distance:.4f}, "
        f"y {cand.achieved_bits:.6f}, -log budget {lower:.6f}, smooth value {cand.smooth_value:.6f}"
    )


def check_swap(rng, tol) -> Outcome:
    sw = cr.swap_counterexample()
    ok = sw["gap"] >= 0.01 and abs(sw["sum"] - sw["closed_form_sum"]) <= 1e-6
    return ok, f"sum {sw['sum']:.6f}, joint {sw['joint']:.6f}, gap {sw['gap']:.6f}"


def aep_gibbs_instance() -> tuple[ProcessMatrix, np.ndarray, np.ndarray, float]:
    """Fixed Gibbs-to-Gibbs qubit instance and its closed-form value."""
    g_in = np.diag([1.0, 0.5]).astype(complex)
    g_out = np.diag([1.0, 0.3]).astype(complex)
    q = np.diag([1.0, 0.0]).astype(complex)
    pm = cr.gibbs_to_gibbs_process(g_in, g_out, None, q)
    value = cr.special_cases("gibbs_to_gibbs", gamma_in=g_in, gamma_out=g_out, p_out=q).value_bits
    return pm, g_in, g_out, value


def aep_generic_instance() -> tuple[ProcessMatrix, np.ndarray, np.ndarray]:
    """Fixed generic qubit instance (seed 11)."""
    rng = proc.rng_from_seed(11)
    return cr._random_instance(rng, 2, 2)


def check_aep_gibbs(rng, tol, n_max: int = 3, eps: float = 0.1) -> Outcome:
    pm, gi, go, value = aep_gibbs_instance()
    table = cr.aep_study(pm, gi, go, eps, n_max)
    devs = [abs(r.value_per_n - r.limit - (-np.log2(1 - eps**2)) / r.n) for r in table.rows]
    limit_ok = abs(table.rows[0].limit - value) <= 1e-9
    return max(devs) <= 1e-5 and limit_ok, "deviations " + ", ".join(f"{d:.2e}" for d in devs)


def check_aep_generic(rng, tol, n_max: int = 3, eps: float = 0.1) -> Outcome:
    pm, gi, go = aep_generic_instance()
    table = cr.aep_study(pm, gi, go, eps, n_max)
    ok = all(r.lower_per_n - tol.slack <= r.value_per_n <= r.upper_per_n + tol.slack for r in table.rows)
    return ok, "; ".join(f"n={r.n}: {r.lower_per_n:.4f} <= {r.value_per_n:.4f} <= {r.upper_per_n:.4f}" for r in table.rows)


COHREL_CHECKS = [
    Check("identity_zero", "identity process has value 0 (each solve within 1 s)", check_identity_zero),
    Check("gibbs_to_gibbs", "battery-to-battery closed form at eps in {0, 0.1, 0.3}", check_gibbs_to_gibbs),
    Check("trivial_output", "trivial output reduces to D_min,0", check_trivial_output),
    Check("trivial_input", "trivial input reduces to -D_max", check_trivial_input),
    Check("pure_eigenstates", "pure eigenstate input/output closed forms", check_pure_eigenstates),
    Check("gibbs_to_arbitrary", "Gibbs input closed form", check_gibbs_to_arbitrary),
    Check("max_entropy_duality", "Gamma = I value equals H_min(E|R) = -H_0(E|X')", check_max_entropy),
    Check("bound_sandwich", "D_rob - D_max <= value <= min(D diff, D_max diff) and trivial bounds", check_bound_sandwich),
    Check("smooth_bounds", "smoothed bounds against smooth values and the target-smoothing bracket", check_smooth_bounds),
    Check("trivial_bounds", "value + log(1 - eps^2) within the trivial interval", check_trivial_bounds),
    Check("eps_monotone", "smooth value nondecreasing in eps", check_eps_monotone),
    Check("purification_independence", "value independent of the purification", check_purification_independence),
] + [
    Check(name, f"structural property: {name.replace('_', ' ')}", _property(name))
    for name in cr.PROPERTY_NAMES
    if name != "swap_counterexample"
] + [
    Check("swap_counterexample", "strict superadditivity for the swap example", check_swap, repeat=False),
    Check("battery_robustness", "noisy battery implementations give feasible smooth candidates", check_battery_robustness),
    Check("aep_gibbs_family", "per-copy value equals limit + (1/n) log 1/(1-eps^2), n <= 3", check_aep_gibbs, repeat=False),
    Check("aep_generic_sandwich", "per-copy value inside the smooth sandwich, n <= 3", check_aep_generic, repeat=False),
]


_SUITE_TABLE: dict[str, list[Check]] = {
    "linalg": LINALG_CHECKS,
    "sdp": SDP_CHECKS,
    "entropies": ENTROPY_CHECKS,
    "process": PROCESS_CHECKS,
    "cohrel": COHREL_CHECKS,
}


def find_check(suite: str, name: str) -> Check:
    for chk in suite_checks(suite):
        if chk.name == name:
            return chk
    raise KeyError(f"{suite}.{name}")
