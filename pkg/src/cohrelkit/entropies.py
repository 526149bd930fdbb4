"""One-shot and smooth relative entropies with respect to a positive weight operator.

All quantities are in bits.  The second argument ``gamma`` is any positive
semidefinite operator (not necessarily normalised), so that for instance
``D(rho || Gamma)`` with ``Gamma = exp(-beta H)`` is the nonequilibrium free
energy in units of ``kT ln 2`` up to the constant ``log tr Gamma``.

Closed forms are used where they exist; smoothed quantities are computed
exactly by SDP (``smooth_d_max``) or bracketed (``smooth_d_min0_bracket``).
Smoothing balls are over *normalised* states in purified distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import linalg as la
from .sdp import (
    SdpBuilder,
    SdpProblem,
    SdpSolution,
    SolverOptions,
    fidelity_constraint_block,
    solve,
)

METHODS = ("closed_form", "sdp_primal", "sdp_dual", "bracket")

SDP_GAP_TOL = 1e-9
SDP_FEAS_TOL = 1e-9
FALLBACK_TOL = 1e-8
# Accepted relative objective gap for a stalled solve: keeps the gap in bits below 1e-7.
FALLBACK_REL_GAP = 5e-8


class EntropyError(ValueError):
    """Raised when the inputs violate a precondition (supports, ranges, ...)."""

    def __init__(self, message: str, leaked_weight: float | None = None) -> None:
        super().__init__(message)
        self.leaked_weight = leaked_weight


class SolverFailure(RuntimeError):
    """Raised when an SDP needed for a value did not reach optimality."""


@dataclass(frozen=True)
class EntropyValue:
    """A value in bits together with how it was obtained.

    Attributes:
        value: the number (bits).  For brackets this is the midpoint.
        method: ``closed_form``, ``sdp_primal``, ``sdp_dual`` or ``bracket``.
        bracket: ``(lower, upper)`` when ``method == "bracket"``.
        gap: certified primal-dual gap in bits for SDP values (0 otherwise).
        details: auxiliary data (optimal operators, candidates, ...).
    """

    value: float
    method: str = "closed_form"
    bracket: tuple[float, float] | None = None
    gap: float = 0.0
    details: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "bracket":
            if self.bracket is None:
                raise ValueError("bracket values need (lower, upper)")
            lo, hi = self.bracket
            if lo > hi + 1e-9:
                raise ValueError(f"invalid bracket ({lo}, {hi})")

    def __float__(self) -> float:
        return float(self.value)

    @property
    def lower(self) -> float:
        return self.bracket[0] if self.bracket else self.value

    @property
    def upper(self) -> float:
        return self.bracket[1] if self.bracket else self.value


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _state(rho: np.ndarray, name: str = "rho", normalized: bool = True) -> np.ndarray:
    rho = la.as_hermitian(rho, atol=1e-10, rtol=1e-9, name=name)
    w = np.linalg.eigvalsh(rho)
    if w.size and w[0] < -1e-9 * max(1.0, abs(w[-1])):
        raise EntropyError(f"{name} is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    if normalized and abs(np.trace(rho).real - 1.0) > 1e-8:
        raise EntropyError(f"{name} must be normalised (trace {np.trace(rho).real:.10g})")
    return rho


def _gamma(gamma: np.ndarray) -> np.ndarray:
    gamma = la.as_hermitian(gamma, atol=1e-10, rtol=1e-9, name="gamma")
    w = np.linalg.eigvalsh(gamma)
    if w.size and w[0] < -1e-10 * max(1.0, abs(w[-1])):
        raise EntropyError("gamma must be positive semidefinite")
    if w.size == 0 or w[-1] <= 0:
        raise EntropyError("gamma must be nonzero")
    return gamma


def support_leak(rho: np.ndarray, gamma: np.ndarray) -> float:
    """Weight ``tr[(I - Pi^Gamma) rho]`` of ``rho`` outside the support of ``Gamma``."""
    proj = la.support_projector(gamma)
    return float(np.real(np.trace(rho) - np.trace(proj @ rho)))


def _require_support(rho: np.ndarray, gamma: np.ndarray, what: str, tol: float = 1e-9) -> None:
    leak = support_leak(rho, gamma)
    scale = max(1.0, float(np.real(np.trace(rho))))
    # Off-diagonal leakage is controlled by the diagonal one for PSD rho.
    if leak > tol * scale:
        raise EntropyError(
            f"{what}: state not contained in the support of gamma (leaked weight {leak:.3e})",
            leaked_weight=leak,
        )


def binary_entropy(p: float) -> float:
    """``h(p) = -p log p - (1-p) log(1-p)`` in bits."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def sdp_value_bits(sol: SdpSolution, *, minimize_exponent: bool) -> tuple[float, float]:
    """Convert a solved ``2^{-value}`` (or ``2^{value}``) program to bits.

    Args:
        sol: solution of an SDP whose optimum equals ``2^{-v}``
            (``minimize_exponent=True``) or ``2^{v}``.

    Returns:
        ``(value, gap_bits)`` where ``value`` uses the primal objective.
    """
    p, d = sol.primal_obj, sol.dual_obj
    sign = -1.0 if minimize_exponent else 1.0
    value = sign * float(np.log2(p))
    if p > 0 and d > 0:
        gap = abs(float(np.log2(p) - np.log2(d)))
    else:
        gap = float("inf")
    return value, gap


def _merit(sol: SdpSolution) -> float:
    if not np.isfinite(sol.gap):
        return np.inf
    scale = max(abs(sol.primal_obj), abs(sol.dual_obj), 1e-300)
    return max(abs(sol.gap) / scale, sol.primal_residual, sol.dual_residual)


def solve_certified(problem: SdpProblem, *, what: str = "SDP", required: bool = True) -> SdpSolution:
    """Solve with tight tolerances, accepting the default solver tolerance as a fallback.

    The solver is run with ``gap_tol = feas_tol = 1e-9``.  If it stalls before
    meeting those, the returned best iterate is accepted provided its residuals
    are below ``1e-8`` and its objective gap, relative to the objective itself,
    is below ``5e-8`` (so that the gap of the logarithm stays below ``1e-7``
    bits); the status is then reported as ``optimal``.
    """
    sol = solve(problem, gap_tol=SDP_GAP_TOL, feas_tol=SDP_FEAS_TOL)
    if not sol.optimal and sol.status in ("numerical", "max_iter"):
        retry = solve(
            problem,
            options=SolverOptions(gap_tol=SDP_GAP_TOL, feas_tol=SDP_FEAS_TOL, init="scaled"),
        )
        if retry.optimal or _merit(retry) < _merit(sol):
            sol = retry
    if not sol.optimal and sol.status in ("numerical", "max_iter"):
        scale = max(abs(sol.primal_obj), abs(sol.dual_obj), 1e-300)
        rel_gap = abs(sol.gap) / scale if np.isfinite(sol.gap) else np.inf
        if rel_gap <= FALLBACK_REL_GAP and sol.primal_residual <= FALLBACK_TOL and sol.dual_residual <= FALLBACK_TOL:
            sol.status = "optimal"
    if required and not sol.optimal:
        raise SolverFailure(
            f"{what}: solver returned status {sol.status} (gap {sol.gap:.2e}, residuals "
            f"{sol.primal_residual:.2e}/{sol.dual_residual:.2e})"
        )
    return sol


def _restrict(gamma: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Isometry onto supp Gamma and Gamma in that basis (diagonal)."""
    v = la.support_basis(gamma)
    return v, la.hermitize(v.conj().T @ gamma @ v)


# ---------------------------------------------------------------------------
# Closed forms
# ---------------------------------------------------------------------------


def rel_entropy(rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """Relative entropy ``D(rho||Gamma) = tr rho (log rho - log Gamma)``.

    Raises:
        EntropyError: if ``rho`` leaks out of the support of ``Gamma``; the
            leaked weight is attached as ``leaked_weight``.
    """
    rho = _state(rho)
    gamma = _gamma(gamma)
    _require_support(rho, gamma, "rel_entropy")
    w = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    w = w[w > 1e-300]
    neg_entropy = float(np.sum(w * np.log2(w)))
    cross = float(np.real(np.trace(rho @ la.psd_fn(gamma, "log_on_support"))))
    return EntropyValue(neg_entropy - cross, "closed_form")


def von_neumann_entropy(rho: np.ndarray) -> float:
    w = np.clip(np.linalg.eigvalsh(la.hermitize(rho)), 0.0, None)
    w = w[w > 1e-300]
    return float(-np.sum(w * np.log2(w)))


def d_min0(rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """``D_min,0(rho||Gamma) = -log tr(Pi^rho Gamma)``."""
    rho = _state(rho)
    gamma = _gamma(gamma)
    weight = float(np.real(np.trace(la.support_projector(rho) @ gamma)))
    if weight <= 0:
        raise EntropyError("support of rho is orthogonal to gamma; D_min,0 is infinite")
    return EntropyValue(-float(np.log2(weight)), "closed_form")


def d_max(rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """``D_max(rho||Gamma) = log ||Gamma^{-1/2} rho Gamma^{-1/2}||_inf``.

    Raises:
        EntropyError: if ``rho`` is not contained in the support of ``Gamma``.
    """
    rho = _state(rho)
    gamma = _gamma(gamma)
    _require_support(rho, gamma, "d_max")
    g = la.psd_fn(gamma, "inv_sqrt_pinv")
    return EntropyValue(float(np.log2(la.opnorm(g @ rho @ g))), "closed_form")


def d_rob(rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """``D_rob(rho||Gamma) = -log ||rho^{-1/2} Gamma Pi^rho rho^{-1/2}||_inf``."""
    rho = _state(rho)
    gamma = _gamma(gamma)
    r = la.psd_fn(rho, "inv_sqrt_pinv")
    proj = la.support_projector(rho)
    norm = la.opnorm(r @ gamma @ proj @ r)
    if norm <= 0:
        raise EntropyError("gamma vanishes on the support of rho; D_rob is infinite")
    return EntropyValue(-float(np.log2(norm)), "closed_form")


def battery_state(projector: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """``P Gamma P / tr(P Gamma)`` for a projector commuting with ``Gamma``."""
    p = la.hermitize(projector)
    gamma = la.hermitize(gamma)
    if np.max(np.abs(p @ gamma - gamma @ p)) > 1e-9:
        raise EntropyError("battery projector must commute with gamma")
    st = p @ gamma @ p
    tr = float(np.real(np.trace(st)))
    if tr <= 0:
        raise EntropyError("tr(P Gamma) vanishes")
    return la.hermitize(st) / tr


def h_min_alt(rho: np.ndarray, dims: tuple[int, int]) -> EntropyValue:
    """``H_min(E|R) = -log ||rho_R^{-1/2} rho_ER rho_R^{-1/2}||_inf`` (conditioning on the second factor).

    Args:
        rho: normalised state on ``E (x) R``.
        dims: ``(d_E, d_R)``.
    """
    d_e, d_r = (int(d) for d in dims)
    rho = _state(rho)
    if rho.shape != (d_e * d_r, d_e * d_r):
        raise EntropyError("dimension mismatch in h_min_alt")
    rho_r = la.ptrace_first(rho, d_e, d_r)
    k = np.kron(np.eye(d_e), la.psd_fn(rho_r, "inv_sqrt_pinv"))
    return EntropyValue(-float(np.log2(la.opnorm(k @ rho @ k))), "closed_form")


def h_zero_alt(rho: np.ndarray, dims: tuple[int, int]) -> EntropyValue:
    """``H_0(E|X') = log ||tr_E Pi^{rho_EX'}||_inf`` (conditioning on the second factor).

    Args:
        rho: normalised state on ``E (x) X'``.
        dims: ``(d_E, d_X')``.
    """
    d_e, d_x = (int(d) for d in dims)
    rho = _state(rho)
    if rho.shape != (d_e * d_x, d_e * d_x):
        raise EntropyError("dimension mismatch in h_zero_alt")
    proj = la.support_projector(rho)
    return EntropyValue(float(np.log2(la.opnorm(la.ptrace_first(proj, d_e, d_x)))), "closed_form")


# ---------------------------------------------------------------------------
# SDP forms
# ---------------------------------------------------------------------------


def _matrix_inequality_ops(d: int) -> np.ndarray:
    return la.hermitian_basis(d)


def d_max_sdp(rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """``D_max`` via the program ``min t s.t. rho <= t Gamma`` (on supp Gamma).

    Used to validate the solver against the closed form :func:`d_max`.
    """
    rho = _state(rho)
    gamma = _gamma(gamma)
    _require_support(rho, gamma, "d_max_sdp")
    v, g = _restrict(gamma)
    r = la.hermitize(v.conj().T @ rho @ v)
    d = g.shape[0]
    b = SdpBuilder()
    t = b.add_block(1)
    s = b.add_block(d)
    b.set_objective(t, np.ones((1, 1)))
    basis = _matrix_inequality_ops(d)
    coef = np.einsum("kij,ji->k", basis, g).real
    b.add_constraints({t: coef[:, None, None].astype(complex), s: -basis},
                      np.einsum("kij,ji->k", basis, r).real)
    sol = solve_certified(b.build(), what="d_max_sdp")
    value, gap = sdp_value_bits(sol, minimize_exponent=False)
    return EntropyValue(value, "sdp_primal", gap=gap, details={"solution": sol})


def fidelity_sdp(rho: np.ndarray, sigma: np.ndarray) -> tuple[float, float]:
    """Root fidelity ``||sqrt(rho) sqrt(sigma)||_1`` of normalised states by SDP.

    Maximises ``Re tr Y`` over ``[[rho, Y], [Y^dagger, sigma]] >= 0``.

    Returns:
        ``(fidelity, gap)``.
    """
    rho = _state(rho)
    sigma = _state(sigma, "sigma")
    v_r = la.support_basis(rho)
    r_t = la.hermitize(v_r.conj().T @ rho @ v_r)
    fb = fidelity_constraint_block(v_r.shape[1], sigma, 0.0, var_map=v_r)
    b = SdpBuilder()
    z = b.add_block(fb.dim)
    b.set_objective(z, fb.fid_op)
    n_v = fb.var_dim
    basis = la.hermitian_basis(n_v)
    ops = np.zeros((basis.shape[0], fb.dim, fb.dim), dtype=complex)
    ops[:, :n_v, :n_v] = basis
    b.add_constraints({z: ops}, np.einsum("kij,ji->k", basis, r_t).real)
    b.add_constraints({z: fb.fixed_ops}, fb.fixed_rhs)
    sol = solve_certified(b.build("maximize"), what="fidelity_sdp")
    return float(sol.primal_obj), float(sol.gap)


@dataclass(frozen=True)
class HypothesisTest:
    """Optimal test of :func:`d_hyp`.

    Attributes:
        value: ``D_H^eta`` in bits (convention recorded in ``convention``).
        min_test_weight: ``min tr(Q Gamma)`` over admissible tests.
        test: optimal ``Q`` (``0 <= Q <= I``, ``tr(Q rho) >= eta``).
        eta: the type-I threshold.
        mu: optimal multiplier of ``tr(Q rho) >= eta``.
        gap: certified primal-dual gap in bits.
    """

    value: float
    min_test_weight: float
    test: np.ndarray
    eta: float
    mu: float
    gap: float
    convention: str

    def as_entropy(self) -> EntropyValue:
        return EntropyValue(self.value, "sdp_primal", gap=self.gap, details={"test": self.test})


def hypothesis_test(eta: float, rho: np.ndarray, gamma: np.ndarray, *, convention: str = "normalized") -> HypothesisTest:
    """Solve ``min tr(Q Gamma) s.t. 0 <= Q <= I, tr(Q rho) >= eta``.

    Args:
        eta: threshold in ``(0, 1]``.
        convention: ``"normalized"`` returns ``-log(min/eta)``; ``"prefactor"``
            returns ``-(1/eta) log(min)``.  The normalized convention is the one
            for which ``D_H`` shifts by ``-log a`` under ``Gamma -> a Gamma`` and
            under which the smoothing relations between ``D_H``, ``D_min,0`` and
            ``D_max`` hold; it is the default everywhere in this package.

    Raises:
        EntropyError: if ``eta`` is outside ``(0, 1]``.
    """
    if not 0.0 < eta <= 1.0:
        raise EntropyError(f"eta must lie in (0, 1], got {eta}")
    if convention not in ("normalized", "prefactor"):
        raise EntropyError(f"unknown convention {convention!r}")
    rho = _state(rho)
    gamma = _gamma(gamma)
    d = rho.shape[0]
    b = SdpBuilder()
    q = b.add_block(d)
    s = b.add_block(d)
    b.set_objective(q, gamma)
    basis = la.hermitian_basis(d)
    b.add_constraints({q: basis, s: basis}, np.einsum("kii->k", basis).real)
    b.add_constraints({q: -rho[None]}, [-eta], "less_equal")
    sol = solve_certified(b.build(), what="d_hyp")
    q_opt = la.hermitize(sol.X[q])
    min_w = float(sol.primal_obj)
    if min_w <= 0:
        raise EntropyError("optimal test has zero weight on gamma; D_H is infinite")
    if convention == "normalized":
        value = -float(np.log2(min_w / eta))
    else:
        value = -float(np.log2(min_w)) / eta
    gap = abs(float(np.log2(sol.primal_obj) - np.log2(sol.dual_obj))) if sol.dual_obj > 0 else float("inf")
    if convention == "prefactor":
        gap /= eta
    mu = float(-sol.y[-1])
    return HypothesisTest(value, min_w, q_opt, float(eta), mu, gap, convention)


def d_hyp(eta: float, rho: np.ndarray, gamma: np.ndarray, *, convention: str = "normalized") -> EntropyValue:
    """Hypothesis-testing relative entropy ``D_H^eta(rho||Gamma)``.

    See :func:`hypothesis_test` for the conventions; the optimal test ``Q`` is
    returned in ``details["test"]`` and the inner minimum in
    ``details["min_test_weight"]``.
    """
    ht = hypothesis_test(eta, rho, gamma, convention=convention)
    return EntropyValue(
        ht.value, "sdp_primal", gap=ht.gap,
        details={"test": ht.test, "min_test_weight": ht.min_test_weight, "mu": ht.mu},
    )


def smooth_d_max(eps: float, rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """Smooth max-relative entropy ``min_{P(rho_hat, rho) <= eps} D_max(rho_hat||Gamma)``.

    Solved exactly as ``min t`` over normalised ``rho_hat`` supported on
    ``supp Gamma`` with ``rho_hat <= t Gamma`` and the fidelity block
    ``F(rho_hat, rho) >= sqrt(1 - eps^2)``.

    Raises:
        EntropyError: if ``eps`` is outside ``[0, 1)`` or no state of the ball
            lies in the support of ``Gamma``.
    """
    if not 0.0 <= eps < 1.0:
        raise EntropyError(f"eps must lie in [0, 1), got {eps}")
    rho = _state(rho)
    gamma = _gamma(gamma)
    if eps == 0.0:
        return d_max(rho, gamma)
    v, g = _restrict(gamma)
    r = g.shape[0]
    fb = fidelity_constraint_block(r, rho, float(np.sqrt(1.0 - eps**2)), var_map=v)
    b = SdpBuilder()
    t = b.add_block(1)
    z = b.add_block(fb.dim)
    s = b.add_block(r)
    b.set_objective(t, np.ones((1, 1)))
    fb.attach(b, z)
    trace_op = np.zeros((fb.dim, fb.dim), dtype=complex)
    trace_op[:r, :r] = np.eye(r)
    b.add_constraints({z: trace_op[None]}, [1.0])
    basis = la.hermitian_basis(r)
    ops_z = np.zeros((basis.shape[0], fb.dim, fb.dim), dtype=complex)
    ops_z[:, :r, :r] = basis
    coef = np.einsum("kij,ji->k", basis, g).real
    b.add_constraints({t: coef[:, None, None].astype(complex), z: -ops_z, s: -basis}, np.zeros(basis.shape[0]))
    sol = solve_certified(b.build(), what="smooth_d_max", required=False)
    value, gap = sdp_value_bits(sol, minimize_exponent=False)
    rho_hat = la.hermitize(v @ sol.X[z][:r, :r] @ v.conj().T)
    details = {"state": rho_hat, "solution": sol, "status": sol.status}
    if sol.optimal:
        return EntropyValue(value, "sdp_primal", gap=gap, details=details)
    # Very small eps: the fidelity constraint is nearly tight and the solver may
    # stall short of the certified tolerance.  A (numerically) feasible primal
    # still upper-bounds the minimum and the dual lower-bounds it.
    if sol.primal_residual <= FALLBACK_TOL and sol.dual_residual <= FALLBACK_TOL and sol.dual_obj > 0:
        lower = float(np.log2(sol.dual_obj))
        return EntropyValue(0.5 * (lower + value), "bracket", (min(lower, value), value), gap=gap, details=details)
    raise SolverFailure(f"smooth_d_max: solver returned status {sol.status} without a usable bound")


def smooth_d_min0_bracket(eps: float, rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """Bracket on the smooth min-relative entropy ``max_{P <= eps} D_min,0``.

    Uses the hypothesis-testing sandwich (``0 < eps < 1/2``, ``eps' = eps^2/6``)::

        D_H^{1-eps'} - log((1-eps')/eps')  <=  D_min,0^eps  <=  D_H^{1-eps} - log(1-eps)

    with ``D_H`` in the normalized convention.

    Raises:
        EntropyError: if ``eps`` is outside ``(0, 1/2)``.
    """
    if not 0.0 < eps < 0.5:
        raise EntropyError(f"eps must lie in (0, 1/2), got {eps}")
    rho = _state(rho)
    gamma = _gamma(gamma)
    eps_p = eps**2 / 6.0
    upper_h = hypothesis_test(1.0 - eps, rho, gamma)
    lower_h = hypothesis_test(1.0 - eps_p, rho, gamma)
    upper = upper_h.value - float(np.log2(1.0 - eps))
    lower = lower_h.value - float(np.log2((1.0 - eps_p) / eps_p))
    lower = min(lower, upper)
    return EntropyValue(
        0.5 * (lower + upper), "bracket", (lower, upper),
        gap=max(upper_h.gap, lower_h.gap),
        details={"eps_prime": eps_p, "lower_test": lower_h.test, "upper_test": upper_h.test},
    )


def smooth_d_min0_candidates(eps: float, rho: np.ndarray, gamma: np.ndarray) -> EntropyValue:
    """Constructive lower bound on ``D_min,0^eps(rho||Gamma)``.

    Evaluates ``D_min,0`` on explicit states within purified distance ``eps``
    of ``rho`` and returns the best.  Candidates: ``rho`` itself, spectral
    truncations ``P rho P/tr`` of ``rho``, and truncations by eigenprojectors of
    optimal hypothesis tests (the construction behind the lower half of the
    ``D_H`` sandwich).  Only candidates whose purified distance to ``rho`` is
    verified to be at most ``eps`` are kept.
    """
    if not 0.0 <= eps < 1.0:
        raise EntropyError(f"eps must lie in [0, 1), got {eps}")
    rho = _state(rho)
    gamma = _gamma(gamma)
    candidates: list[np.ndarray] = [rho]
    w, vecs = np.linalg.eigh(rho)
    w, vecs = w[::-1], vecs[:, ::-1]
    for k in range(1, w.size + 1):
        if np.sum(w[:k]) <= 1e-14:
            continue
        p = vecs[:, :k] @ vecs[:, :k].conj().T
        candidates.append(la.project_normalize(rho, p))
    if eps > 0:
        for eta in sorted({1.0 - eps**2 / 6.0, 1.0 - eps**2 / 2.0, 1.0 - eps}):
            if not 0 < eta <= 1:
                continue
            try:
                ht = hypothesis_test(eta, rho, gamma)
            except (SolverFailure, EntropyError):
                continue
            qw, qv = np.linalg.eigh(ht.test)
            for thr in (eps**2 / 6.0, 0.5, 1.0 - 1e-6):
                sel = qw >= thr
                if not np.any(sel):
                    continue
                p = qv[:, sel] @ qv[:, sel].conj().T
                if np.real(np.trace(p @ rho)) > 1e-12:
                    candidates.append(la.project_normalize(rho, p))
    best = -np.inf
    best_state = rho
    for c in candidates:
        if la.purified_distance(c, rho) <= eps + 1e-12:
            val = d_min0(c, gamma).value
            if val > best:
                best, best_state = val, c
    return EntropyValue(best, "closed_form", details={"state": best_state})


@dataclass(frozen=True)
class RobLowerBound:
    """Certified output of :func:`smooth_d_rob_lower`."""

    bound: float
    candidate: np.ndarray
    candidate_value: float
    distance: float
    eps_prime: float
    certified: bool


def smooth_d_rob_lower(eps: float, rho: np.ndarray, gamma: np.ndarray) -> tuple[EntropyValue, RobLowerBound]:
    """Constructive lower bound ``D_rob^eps(rho||Gamma) >= D_min,0(rho||Gamma) + log eps'``.

    With ``eps' = eps^2/(2 + eps^2)`` (equivalently ``eps = sqrt(2 eps'/(1-eps'))``),
    the optimal test ``Q`` for ``D_H^{1-eps'}`` is thresholded at eigenvalue
    ``eps'``; ``rho`` projected onto that eigenspace and renormalised is the
    candidate.  The returned record states whether both certified
    postconditions hold: ``D_rob(candidate) >= D_min,0(rho) + log eps'`` and
    ``P(candidate, rho) <= eps``.

    Raises:
        EntropyError: if ``eps <= 0``.
    """
    if not eps > 0.0:
        raise EntropyError("eps must be positive")
    rho = _state(rho)
    gamma = _gamma(gamma)
    eps_p = eps**2 / (2.0 + eps**2)
    bound = d_min0(rho, gamma).value + float(np.log2(eps_p))
    ht = hypothesis_test(1.0 - eps_p, rho, gamma)
    qw, qv = np.linalg.eigh(ht.test)
    sel = qw >= eps_p
    proj = qv[:, sel] @ qv[:, sel].conj().T
    candidate = la.project_normalize(rho, proj)
    cand_val = d_rob(candidate, gamma).value
    dist = la.purified_distance(candidate, rho)
    ok = cand_val >= bound - 1e-7 and dist <= eps + 1e-9
    rec = RobLowerBound(bound, candidate, cand_val, dist, eps_p, bool(ok))
    return EntropyValue(bound, "closed_form", details={"candidate": candidate, "record": rec}), rec


def rob_eps_from_eps_prime(eps_prime: float) -> float:
    """Inverse parameter map ``eps = sqrt(2 eps'/(1 - eps'))``."""
    if not 0.0 < eps_prime < 1.0:
        raise EntropyError("eps' must lie in (0, 1)")
    return float(np.sqrt(2.0 * eps_prime / (1.0 - eps_prime)))


# ---------------------------------------------------------------------------
# Continuity
# ---------------------------------------------------------------------------


def continuity_bound(eps: float, gamma: np.ndarray, *, form: str = "corrected") -> float:
    """Continuity bound on ``|D(rho||Gamma) - D(sigma||Gamma)|`` for ``D(rho, sigma) <= eps``.

    Two forms are available:

    * ``"stated"``: ``eps log(r - 1) + h(eps) + eps ||log Gamma||_inf`` with
      ``r = rank Gamma`` (the ``log(r-1)`` term is 0 when ``r = 1``).
    * ``"corrected"`` (default): the Fannes-Audenaert part evaluated at
      ``min(eps, 1 - 1/r)`` (where it is monotone) plus
      ``eps (lambda_max - lambda_min)(log Gamma)``.  The stated form can fail
      because ``|tr (rho - sigma) L| <= D(rho,sigma) * spread(L)`` and the
      spread may reach ``2 ||L||_inf``; see the tests for an explicit pair.

    Logarithms are on the support of ``Gamma``.
    """
    if not 0.0 <= eps <= 1.0:
        raise EntropyError("eps must lie in [0, 1]")
    gamma = _gamma(gamma)
    w = np.linalg.eigvalsh(gamma)
    w = w[w > la.RANK_TOL * w[-1]]
    r = w.size
    logs = np.log2(w)
    if form == "stated":
        dim_term = eps * np.log2(r - 1) if r > 1 else 0.0
        return float(dim_term + binary_entropy(eps) + eps * np.max(np.abs(logs)))
    if form != "corrected":
        raise EntropyError(f"unknown form {form!r}")
    t = min(eps, 1.0 - 1.0 / r)
    dim_term = t * np.log2(r - 1) if r > 1 else 0.0
    return float(dim_term + binary_entropy(t) + eps * (logs.max() - logs.min()))


def verify_continuity(rho: np.ndarray, sigma: np.ndarray, gamma: np.ndarray, *, form: str = "corrected") -> bool:
    """Check ``|D(rho||Gamma) - D(sigma||Gamma)| <= continuity_bound(D(rho,sigma), Gamma)``."""
    eps = la.trace_distance(rho, sigma)
    diff = abs(rel_entropy(rho, gamma).value - rel_entropy(sigma, gamma).value)
    return bool(diff <= continuity_bound(eps, gamma, form=form) + 1e-9)
