"""The coherent relative entropy of a process matrix.

For a process matrix ``rho_{X'R}`` (output ``X'`` first, reference ``R``
mirroring the input ``X``) and weight operators ``Gamma_X``, ``Gamma_X'``, the
coherent relative entropy is ``-log2 alpha*`` where ``alpha*`` is the smallest
``alpha`` for which a completely positive, trace-nonincreasing map ``T``
reproduces the process (exactly, or up to purified distance ``eps``) while
satisfying ``T(Gamma_X) <= alpha Gamma_X'``.  It is the number of pure battery
qubits that an optimal Gamma-sub-preserving implementation extracts.

Evaluations provided here:

* :func:`cohrel_nonsmooth` -- exact value at ``eps = 0`` from a face-restricted
  program that is strictly feasible (the naive program is not).
* :func:`cohrel_smooth_z` -- smoothing of the implemented process inside the
  program, either with a fidelity block (default; scales to 64-dimensional
  joint systems) or with an explicit purification.
* :func:`cohrel_smooth_x_bracket` -- bracket on the variant that smooths the
  target process first.
* closed forms (:func:`special_cases`), bounds (:func:`bounds_suite`),
  structural checks (:func:`property_checks`) and the i.i.d. study
  (:func:`aep_study`).

Conventions: Kronecker products are row-major with the leftmost factor most
significant; ``Gamma_R`` is the transpose of ``Gamma_X``; all values are in
bits.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import constants

from . import entropies as ent
from . import linalg as la
from . import process as proc
from .linalg import SystemDims
from .process import ChoiMap, GammaOperator, ProcessMatrix
from .sdp import SdpBuilder, SdpSolution, fidelity_constraint_block

SMOOTHINGS = ("z", "x_bracket")
SUPPORT_TOL = 1e-9
"""Largest weight of the process matrix allowed outside the Gamma supports."""
FACE_RANK_TOL = 1e-10
"""Relative eigenvalue cutoff used to identify supports inside the face-restricted program."""
AEP_MAX_DIM = 256
"""Largest joint dimension ``(|X'||X|)^n`` accepted by :func:`aep_study`."""
PROPERTY_SLACK = 1e-5
"""Slack for comparisons between two SDP values."""


class CohRelError(ValueError):
    """Precondition violation (support leak, parameter range, hypothesis of a closed form)."""

    def __init__(self, message: str, leaked_weight: float | None = None) -> None:
        super().__init__(message)
        self.leaked_weight = leaked_weight


@dataclass(frozen=True)
class CohRelResult:
    """Value of a coherent relative entropy evaluation.

    Attributes:
        value_bits: the value in bits.  For SDP evaluations this is
            ``-log2`` of the primal ``alpha`` (achieved by ``certificate``); for
            brackets it is the midpoint.
        primal_value: primal optimum ``alpha_p`` (an achievable Gamma factor).
        dual_value: dual objective ``alpha_d <= alpha_p`` (a certified lower
            bound on every achievable Gamma factor).
        gap: ``log2(alpha_p / alpha_d)`` in bits.
        certificate: optimal map ``T`` on the original systems, if any.
        epsilon: smoothing parameter.
        smoothing: ``"z"`` (smoothing of the implemented process, including
            ``eps = 0``) or ``"x_bracket"``.
        status: solver status (``"optimal"`` or the degraded status whose
            dual bound was used), or ``"closed_form"`` / ``"bracket"``.
        bracket: ``(lower, upper)`` in bits.
        details: auxiliary data.
    """

    value_bits: float
    primal_value: float
    dual_value: float
    gap: float
    certificate: ChoiMap | None = None
    epsilon: float = 0.0
    smoothing: str = "z"
    status: str = "optimal"
    bracket: tuple[float, float] | None = None
    details: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.smoothing not in SMOOTHINGS:
            raise ValueError(f"smoothing must be one of {SMOOTHINGS}")

    def __float__(self) -> float:
        return float(self.value_bits)

    @property
    def lower(self) -> float:
        """Certified lower bound in bits."""
        if self.bracket is not None:
            return self.bracket[0]
        return self.value_bits

    @property
    def upper(self) -> float:
        """Certified upper bound in bits."""
        if self.bracket is not None:
            return self.bracket[1]
        if self.dual_value > 0:
            return -float(np.log2(self.dual_value))
        return float("inf")


# ---------------------------------------------------------------------------
# Units
# ---------------------------------------------------------------------------


def bits_to_nats(bits: float) -> float:
    """Convert bits to nats (multiply by ``ln 2``)."""
    return float(bits) * float(np.log(2.0))


def work_from_bits(bits: float, temperature: float) -> float:
    """Work in joules worth ``bits`` pure qubits at ``temperature`` kelvin (``bits kT ln 2``)."""
    if temperature <= 0:
        raise CohRelError("temperature must be positive")
    return float(bits) * constants.k * float(temperature) * float(np.log(2.0))


# ---------------------------------------------------------------------------
# Input handling and support restriction
# ---------------------------------------------------------------------------


def _as_gamma(gamma: np.ndarray | GammaOperator, name: str) -> np.ndarray:
    g = np.asarray(GammaOperator(np.asarray(gamma)).gamma)
    if not np.any(np.abs(g) > 0):
        raise CohRelError(f"{name} must be nonzero")
    return g


def as_process(
    rho: ProcessMatrix | np.ndarray, gamma_in: np.ndarray, gamma_out: np.ndarray
) -> ProcessMatrix:
    """Accept a :class:`ProcessMatrix` or a bare array sized by the Gamma operators."""
    if isinstance(rho, ProcessMatrix):
        return rho
    d_in, d_out = np.asarray(gamma_in).shape[0], np.asarray(gamma_out).shape[0]
    return ProcessMatrix.from_array(np.asarray(rho), d_out, d_in)


@dataclass(frozen=True)
class _Restricted:
    """Problem data restricted to the supports of the Gamma operators."""

    rho: np.ndarray
    gamma_ref: np.ndarray
    gamma_out: np.ndarray
    iso_in: np.ndarray
    iso_out: np.ndarray
    original: ProcessMatrix

    @property
    def d_in(self) -> int:
        return self.gamma_ref.shape[0]

    @property
    def d_out(self) -> int:
        return self.gamma_out.shape[0]

    @property
    def rho_ref(self) -> np.ndarray:
        return la.hermitize(la.ptrace_first(self.rho, self.d_out, self.d_in))

    def embed_choi(self, t: np.ndarray) -> ChoiMap:
        """Map a restricted Choi matrix back to the original systems.

        The reference isometry is the complex conjugate of the input one, so
        that the embedded map acts as ``V' T(V^dagger . V) V'^dagger``.
        """
        w = np.kron(self.iso_out, self.iso_in.conj())
        full = la.hermitize(w @ t @ w.conj().T)
        return ChoiMap(full, self.original.dims_in, self.original.dims_out, check=False)


def restrict_to_supports(
    rho: ProcessMatrix | np.ndarray, gamma_in: np.ndarray, gamma_out: np.ndarray
) -> _Restricted:
    """Restrict the problem to ``supp Gamma_X'`` and the mirror of ``supp Gamma_X``.

    Raises:
        CohRelError: if the input state or the output state of the process is
            not contained in the corresponding support (weight above
            :data:`SUPPORT_TOL`), or if dimensions do not match.
    """
    g_in = _as_gamma(gamma_in, "Gamma_X")
    g_out = _as_gamma(gamma_out, "Gamma_X'")
    pm = as_process(rho, g_in, g_out)
    if g_in.shape[0] != pm.d_in or g_out.shape[0] != pm.d_out:
        raise CohRelError(
            f"Gamma dimensions ({g_in.shape[0]}, {g_out.shape[0]}) do not match the process "
            f"matrix (|X| = {pm.d_in}, |X'| = {pm.d_out})"
        )
    v_in = la.support_basis(g_in)
    v_out = la.support_basis(g_out)
    sigma = pm.input_state
    leak_in = float(np.real(np.trace(sigma) - np.trace(v_in.conj().T @ sigma @ v_in)))
    if leak_in > SUPPORT_TOL:
        raise CohRelError(
            f"input state leaks out of the support of Gamma_X (weight {leak_in:.3e})", leak_in
        )
    out = pm.reduced_out
    leak_out = float(np.real(np.trace(out) - np.trace(v_out.conj().T @ out @ v_out)))
    if leak_out > SUPPORT_TOL:
        raise CohRelError(
            f"output state leaks out of the support of Gamma_X' (weight {leak_out:.3e})", leak_out
        )
    w = np.kron(v_out, v_in.conj())
    r = la.hermitize(w.conj().T @ pm.rho @ w)
    r = r / np.real(np.trace(r))
    g_ref = la.mirror_transpose(la.hermitize(v_in.conj().T @ g_in @ v_in))
    g_o = la.hermitize(v_out.conj().T @ g_out @ v_out)
    return _Restricted(r, g_ref, g_o, v_in, v_out, pm)


def _partial_trace_ops(d_out: int, d_in: int) -> np.ndarray:
    """Operators ``I_X' (x) B_k`` dual to ``tr_X'`` for the Hermitian basis ``B_k`` of ``R``."""
    basis = la.hermitian_basis(d_in)
    return np.stack([np.kron(np.eye(d_out), b) for b in basis])


def _gamma_ops(d_out: int, gamma_ref: np.ndarray) -> np.ndarray:
    """Operators ``B_k (x) Gamma_R`` dual to ``T -> tr_R[T (I (x) Gamma_R)]``."""
    basis = la.hermitian_basis(d_out)
    return np.stack([np.kron(b, gamma_ref) for b in basis])


def _embed(ops: np.ndarray, n: int) -> np.ndarray:
    """Place ``ops`` (shape ``(k, m, m)``) in the top-left corner of ``n x n`` zero matrices."""
    k, m, _ = ops.shape
    out = np.zeros((k, n, n), dtype=complex)
    out[:, :m, :m] = ops
    return out


def _image_of_gamma(t: np.ndarray, d_out: int, d_in: int, gamma_ref: np.ndarray) -> np.ndarray:
    """``tr_R[T (I (x) Gamma_R)]``, i.e. the map applied to ``Gamma_X``."""
    return la.hermitize(la.ptrace_second(t @ np.kron(np.eye(d_out), gamma_ref), d_out, d_in))


def _achieved_alpha(t: np.ndarray, red: _Restricted) -> float:
    img = _image_of_gamma(t, red.d_out, red.d_in, red.gamma_ref)
    inv = la.psd_fn(red.gamma_out, "inv_sqrt_pinv")
    return la.opnorm(inv @ img @ inv)


def _finish(
    sol: SdpSolution,
    red: _Restricted,
    t_restricted: np.ndarray | None,
    eps: float,
    what: str,
    details: dict[str, Any],
) -> CohRelResult:
    """Turn a solved ``min alpha`` program into a :class:`CohRelResult`."""
    a_p, a_d = float(sol.primal_obj), float(sol.dual_obj)
    details = dict(details)
    details["solution"] = sol
    cert = red.embed_choi(t_restricted) if t_restricted is not None else None
    if t_restricted is not None:
        details["achieved_alpha"] = _achieved_alpha(t_restricted, red)
    if sol.optimal and a_p > 0:
        gap = float(np.log2(a_p / a_d)) if a_d > 0 else float("inf")
        return CohRelResult(-float(np.log2(a_p)), a_p, a_d, gap, cert, eps, "z", "optimal", details=details)
    # Degraded solve: the dual objective still bounds every feasible alpha from below.
    if a_d > 0 and np.isfinite(a_d) and sol.dual_residual <= 1e-6:
        gap = float(np.log2(a_p / a_d)) if a_p > 0 and np.isfinite(a_p) else float("inf")
        return CohRelResult(-float(np.log2(a_d)), a_p, a_d, gap, cert, eps, "z", sol.status, details=details)
    raise ent.SolverFailure(f"{what}: solver status {sol.status} without a usable dual bound")


# ---------------------------------------------------------------------------
# Non-smooth value
# ---------------------------------------------------------------------------


def _hermitian_part_ops(f: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian ``H_re, H_im`` with ``tr(H M) = Re/Im tr(F W M W^dagger)`` for Hermitian ``M``."""
    g = w.conj().T @ f @ w
    h_re = 0.5 * (g + g.conj().T)
    g_im = -1j * g
    h_im = 0.5 * (g_im + g_im.conj().T)
    return h_re, h_im


def _independent_rows(ops: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal Hermitian combinations spanning the same constraints (rhs zero)."""
    if ops.shape[0] == 0:
        return ops
    n = ops.shape[1]
    flat = np.concatenate([ops.reshape(ops.shape[0], -1).real, ops.reshape(ops.shape[0], -1).imag], axis=1)
    _, s, vt = np.linalg.svd(flat, full_matrices=False)
    keep = s > tol * max(s[0], 1e-300)
    rows = vt[keep]
    half = n * n
    out = (rows[:, :half] + 1j * rows[:, half:]).reshape(-1, n, n)
    return np.stack([la.hermitize(o) for o in out]) if out.shape[0] else out


def cohrel_nonsmooth(
    rho: ProcessMatrix | np.ndarray,
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
) -> CohRelResult:
    """Non-smooth coherent relative entropy (``eps = 0``).

    The program fixes ``rho_R^{1/2} T rho_R^{1/2} = rho``, so on ``S = supp
    rho_R`` the Choi matrix is pinned to ``T_0 = rho_R^{-1/2} rho rho_R^{-1/2}``
    with ``tr_X' T_0 = I_S``.  Writing ``T = W M W^dagger`` with ``W``
    spanning ``range(T_0)`` and ``X' (x) S^perp`` removes the implicit
    equalities that make the direct program degenerate:

    * ``M = [[I, K], [K^dagger, C]] >= 0`` (the corner reproduces ``T_0``);
    * the ``S x S^perp`` block of ``tr_X' T`` vanishes (linear in ``K``);
    * ``tr_X' C <= I`` on ``S^perp``;
    * ``tr_R[T Gamma_R] <= alpha Gamma_X'``.

    This reduced program is strictly feasible, so primal and dual optima
    agree and both are returned.

    Raises:
        CohRelError: on support violations.
        SolverFailure: if the solver produced no usable bound.
    """
    red = restrict_to_supports(rho, gamma_in, gamma_out)
    d_out, d_in = red.d_out, red.d_in
    n = d_out * d_in
    w_ref, u_ref = np.linalg.eigh(red.rho_ref)
    w_ref, u_ref = w_ref[::-1], u_ref[:, ::-1]
    s = int(np.sum(w_ref > FACE_RANK_TOL * max(w_ref[0], 1e-300)))
    u_s, u_perp = u_ref[:, :s], u_ref[:, s:]
    q = d_in - s
    inv_root = u_s / np.sqrt(w_ref[:s])[None, :]  # R x S, equals rho_R^{-1/2} restricted
    lift = np.kron(np.eye(d_out), inv_root)  # (X'R) x (X'S)
    t0 = la.hermitize(lift.conj().T @ red.rho @ lift)
    w0, v0 = np.linalg.eigh(t0)
    keep = w0 > FACE_RANK_TOL * max(w0[-1], 1e-300)
    corner = v0[:, keep] * np.sqrt(w0[keep])[None, :]  # T0 = corner corner^dagger
    a_map = np.kron(np.eye(d_out), u_s) @ corner  # N x r0
    t_fixed = la.hermitize(a_map @ a_map.conj().T)
    img_fixed = _image_of_gamma(t_fixed, d_out, d_in, red.gamma_ref)
    details: dict[str, Any] = {"support_rank": s, "fixed_rank": int(corner.shape[1])}

    b = SdpBuilder()
    a_blk = b.add_block(1)
    s2 = b.add_block(d_out)
    b.set_objective(a_blk, np.ones((1, 1)))
    basis_out = la.hermitian_basis(d_out)
    coef_alpha = np.einsum("kij,ji->k", basis_out, red.gamma_out).real
    rhs_alpha = np.einsum("kij,ji->k", basis_out, img_fixed).real

    if q == 0:
        # T is completely determined; only alpha remains.
        b.add_constraints(
            {a_blk: coef_alpha[:, None, None].astype(complex), s2: -basis_out}, rhs_alpha
        )
        sol = ent.solve_certified(b.build(), what="cohrel_nonsmooth", required=False)
        inv = la.psd_fn(red.gamma_out, "inv_sqrt_pinv")
        closed = la.opnorm(inv @ img_fixed @ inv)
        details["closed_form_alpha"] = closed
        return _finish(sol, red, t_fixed, 0.0, "cohrel_nonsmooth", details)

    r0 = corner.shape[1]
    b_map = np.kron(np.eye(d_out), u_perp)  # N x (d_out q)
    wfull = np.concatenate([a_map, b_map], axis=1)
    n_m = r0 + d_out * q
    m_blk = b.add_block(n_m)
    s1 = b.add_block(q)

    # Corner pinned to the identity.
    corner_ops = la.hermitian_basis(r0)
    b.add_constraints({m_blk: _embed(corner_ops, n_m)}, np.einsum("kii->k", corner_ops).real)

    # Off-diagonal S x S^perp block of tr_X' T must vanish.
    off_ops = []
    for i in range(s):
        for j in range(q):
            f = np.kron(np.eye(d_out), np.outer(u_perp[:, j], u_s[:, i].conj()))
            h_re, h_im = _hermitian_part_ops(f, wfull)
            off_ops.extend([h_re, h_im])
    off = _independent_rows(np.array(off_ops)) if off_ops else np.zeros((0, n_m, n_m))
    if off.shape[0]:
        b.add_constraints({m_blk: off}, np.zeros(off.shape[0]))

    # tr_X' T + S1 = I on S^perp.
    basis_q = la.hermitian_basis(q)
    tp_ops = np.stack(
        [wfull.conj().T @ np.kron(np.eye(d_out), u_perp @ bk @ u_perp.conj().T) @ wfull for bk in basis_q]
    )
    b.add_constraints({m_blk: tp_ops, s1: basis_q}, np.einsum("kii->k", basis_q).real)

    # alpha Gamma' - T(Gamma) - S2 = 0.
    g_ops = np.stack([la.hermitize(wfull.conj().T @ g @ wfull) for g in _gamma_ops(d_out, red.gamma_ref)])
    b.add_constraints(
        {a_blk: coef_alpha[:, None, None].astype(complex), m_blk: -g_ops, s2: -basis_out},
        np.zeros(basis_out.shape[0]),
    )
    sol = ent.solve_certified(b.build(), what="cohrel_nonsmooth", required=False)
    t_opt = la.hermitize(wfull @ sol.X[m_blk] @ wfull.conj().T)
    return _finish(sol, red, t_opt, 0.0, "cohrel_nonsmooth", details)


# ---------------------------------------------------------------------------
# Smooth value (smoothing inside the program)
# ---------------------------------------------------------------------------


def purification(rho: np.ndarray, env_dim: int, isometry: np.ndarray | None = None) -> np.ndarray:
    """Purification ``|rho>`` on ``(system) (x) E`` from the eigendecomposition of ``rho``.

    Args:
        rho: state to purify.
        env_dim: dimension of ``E`` (at least the rank of ``rho``).
        isometry: optional unitary on ``E`` applied to the canonical
            purification (any purification arises this way).
    """
    rho = la.hermitize(np.asarray(rho, dtype=complex))
    w, v = np.linalg.eigh(rho)
    w, v = w[::-1], v[:, ::-1]
    rank = int(np.sum(w > 1e-14 * max(w[0], 1e-300)))
    if env_dim < rank:
        raise CohRelError(f"environment dimension {env_dim} is below the rank {rank} of the state")
    coeff = np.zeros((rho.shape[0], env_dim), dtype=complex)
    coeff[:, :rank] = v[:, :rank] * np.sqrt(np.clip(w[:rank], 0.0, None))[None, :]
    if isometry is not None:
        u = np.asarray(isometry, dtype=complex)
        if u.shape != (env_dim, env_dim):
            raise CohRelError("isometry on E must be square of size env_dim")
        coeff = coeff @ u.T
    return coeff.reshape(-1)


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps < 1.0:
        raise CohRelError(f"eps must lie in [0, 1), got {eps}")
    return eps


def cohrel_smooth_z(
    rho: ProcessMatrix | np.ndarray,
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
    eps: float,
    env_dim: int | None = None,
    *,
    env_unitary: np.ndarray | None = None,
) -> CohRelResult:
    """Smooth coherent relative entropy ``D^eps`` (smoothing of the implemented process).

    Minimises ``alpha`` over completely positive ``T`` with ``tr_X' T <= I_R``,
    ``tr_R[T Gamma_R] <= alpha Gamma_X'`` and ``F(T(sigma_XR), rho) >=
    sqrt(1 - eps^2)``.

    Two exact encodings of the fidelity condition are available:

    * ``env_dim=None`` (default): ``[[T, Y], [Y^dagger, rho_tilde]] >= 0`` with
      ``Re tr((I (x) rho_R^{1/2}) Y U^dagger) >= sqrt(1 - eps^2)``, where
      ``rho = U rho_tilde U^dagger`` on its support.  The block has size
      ``|X'R| + rank(rho)``.
    * ``env_dim`` given: a variable ``T_{X'RE}`` and the overlap
      ``tr(rho_R^{1/2} T_{X'RE} rho_R^{1/2} |rho><rho|) >= 1 - eps^2`` with a
      purification on ``E`` (``env_dim >= |X'R|``), optionally rotated by
      ``env_unitary``; the value does not depend on the purification.

    ``eps = 0`` is delegated to :func:`cohrel_nonsmooth`.

    Raises:
        CohRelError: on support violations, ``eps`` outside ``[0, 1)`` or a
            too small environment.
    """
    eps = _check_eps(eps)
    if eps == 0.0:
        return cohrel_nonsmooth(rho, gamma_in, gamma_out)
    red = restrict_to_supports(rho, gamma_in, gamma_out)
    if env_dim is not None:
        return _smooth_purified(red, eps, int(env_dim), env_unitary)
    d_out, d_in = red.d_out, red.d_in
    n = d_out * d_in
    var_map = np.kron(np.eye(d_out), la.psd_fn(red.rho_ref, "sqrt"))
    fb = fidelity_constraint_block(n, red.rho, float(np.sqrt(1.0 - eps**2)), var_map=var_map)
    b = SdpBuilder()
    a_blk = b.add_block(1)
    z_blk = b.add_block(fb.dim)
    s1 = b.add_block(d_in)
    s2 = b.add_block(d_out)
    b.set_objective(a_blk, np.ones((1, 1)))
    fb.attach(b, z_blk)
    basis_in = la.hermitian_basis(d_in)
    b.add_constraints(
        {z_blk: _embed(_partial_trace_ops(d_out, d_in), fb.dim), s1: basis_in},
        np.einsum("kii->k", basis_in).real,
    )
    basis_out = la.hermitian_basis(d_out)
    coef = np.einsum("kij,ji->k", basis_out, red.gamma_out).real
    b.add_constraints(
        {
            a_blk: coef[:, None, None].astype(complex),
            z_blk: -_embed(_gamma_ops(d_out, red.gamma_ref), fb.dim),
            s2: -basis_out,
        },
        np.zeros(basis_out.shape[0]),
    )
    sol = ent.solve_certified(b.build(), what="cohrel_smooth_z", required=False)
    t_opt = la.hermitize(sol.X[z_blk][:n, :n])
    res = _finish(sol, red, t_opt, eps, "cohrel_smooth_z", {"formulation": "fidelity_block"})
    return res


def _smooth_purified(red: _Restricted, eps: float, env_dim: int, env_unitary: np.ndarray | None) -> CohRelResult:
    d_out, d_in = red.d_out, red.d_in
    n = d_out * d_in
    if env_dim < n:
        raise CohRelError(f"environment dimension {env_dim} must be at least |X'R| = {n}")
    psi = purification(red.rho, env_dim, env_unitary)
    lift = np.kron(np.kron(np.eye(d_out), la.psd_fn(red.rho_ref, "sqrt")), np.eye(env_dim))
    v = lift @ psi
    big = n * env_dim
    b = SdpBuilder()
    a_blk = b.add_block(1)
    t_blk = b.add_block(big)
    s1 = b.add_block(d_in)
    s2 = b.add_block(d_out)
    b.set_objective(a_blk, np.ones((1, 1)))
    basis_in = la.hermitian_basis(d_in)
    eye_e = np.eye(env_dim)
    tp_ops = np.stack([np.kron(op, eye_e) for op in _partial_trace_ops(d_out, d_in)])
    b.add_constraints({t_blk: tp_ops, s1: basis_in}, np.einsum("kii->k", basis_in).real)
    basis_out = la.hermitian_basis(d_out)
    coef = np.einsum("kij,ji->k", basis_out, red.gamma_out).real
    g_ops = np.stack([np.kron(op, eye_e) for op in _gamma_ops(d_out, red.gamma_ref)])
    b.add_constraints(
        {a_blk: coef[:, None, None].astype(complex), t_blk: -g_ops, s2: -basis_out},
        np.zeros(basis_out.shape[0]),
    )
    overlap = np.outer(v, v.conj())
    b.add_constraints({t_blk: -overlap[None]}, [-(1.0 - eps**2)], "less_equal")
    sol = ent.solve_certified(b.build(), what="cohrel_smooth_z", required=False)
    t_big = la.hermitize(sol.X[t_blk])
    t_opt = la.hermitize(la.ptrace_second(t_big, n, env_dim))
    return _finish(sol, red, t_opt, eps, "cohrel_smooth_z", {"formulation": "purification", "env_dim": env_dim})


def implemented_process(t: ChoiMap, rho: ProcessMatrix) -> np.ndarray:
    """``T(sigma_XR) = (I (x) rho_R^{1/2}) T (I (x) rho_R^{1/2})`` (possibly subnormalised)."""
    root = la.psd_fn(rho.reduced_ref, "sqrt")
    big = np.kron(np.eye(t.d_out), root)
    return la.hermitize(big @ t.choi @ big)


# ---------------------------------------------------------------------------
# Trivial bounds and closed forms
# ---------------------------------------------------------------------------


def _log_inv_norm(gamma: np.ndarray) -> float:
    """``log ||Gamma^{-1}||_inf`` with the inverse taken on the support."""
    w = np.linalg.eigvalsh(la.hermitize(gamma))
    w = w[w > la.RANK_TOL * w[-1]]
    return -float(np.log2(w[0]))


def trivial_bounds(gamma_in: np.ndarray, gamma_out: np.ndarray, eps: float = 0.0) -> tuple[float, float]:
    """``(lower, upper)`` bounds valid for every process matrix.

    ``lower = -log tr Gamma_X - log ||Gamma_X'^{-1}|| - log(1 - eps^2)`` and
    ``upper = log ||Gamma_X^{-1}|| + log tr Gamma_X' - log(1 - eps^2)``.
    """
    eps = _check_eps(eps)
    g_in = _as_gamma(gamma_in, "Gamma_X")
    g_out = _as_gamma(gamma_out, "Gamma_X'")
    shift = -float(np.log2(1.0 - eps**2))
    lower = -float(np.log2(np.real(np.trace(g_in)))) - _log_inv_norm(g_out) + shift
    upper = _log_inv_norm(g_in) + float(np.log2(np.real(np.trace(g_out)))) + shift
    return lower, upper


def _closed(value: float, eps: float = 0.0, **details: Any) -> CohRelResult:
    alpha = float(2.0 ** (-value))
    return CohRelResult(float(value), alpha, alpha, 0.0, None, eps, "z", "closed_form", details=details)


def _projector_commutes(p: np.ndarray, g: np.ndarray, name: str) -> None:
    if la.opnorm(p @ p - p) > 1e-9 or la.hermitian_defect(p) > 1e-9:
        raise CohRelError(f"{name} is not a Hermitian projector")
    if la.opnorm(p @ g - g @ p) > 1e-9:
        raise CohRelError(f"{name} does not commute with its Gamma operator")


def gibbs_to_gibbs_process(
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
    p_in: np.ndarray | None = None,
    p_out: np.ndarray | None = None,
    channel: ChoiMap | None = None,
) -> ProcessMatrix:
    """Process matrix from ``P Gamma_X P/tr`` to ``P' Gamma_X' P'/tr``.

    Without ``channel`` the uncorrelated process (output state tensored with
    the reference marginal) is returned.  With ``channel`` the given map is
    applied to the input battery state; it must produce the target output.
    """
    g_in = _as_gamma(gamma_in, "Gamma_X")
    g_out = _as_gamma(gamma_out, "Gamma_X'")
    p_in = np.eye(g_in.shape[0]) if p_in is None else np.asarray(p_in, dtype=complex)
    p_out = np.eye(g_out.shape[0]) if p_out is None else np.asarray(p_out, dtype=complex)
    sigma = ent.battery_state(p_in, g_in)
    target = ent.battery_state(p_out, g_out)
    if channel is None:
        rho = np.kron(target, la.mirror_transpose(sigma))
        return ProcessMatrix.from_array(rho, g_out.shape[0], g_in.shape[0])
    pm = proc.process_matrix(channel, sigma)
    if la.opnorm(pm.reduced_out - target) > 1e-9:
        raise CohRelError("channel does not map the input battery state to the output battery state")
    return pm


def special_cases(kind: str, **params: Any) -> CohRelResult:
    """Closed-form values for the cases where the program can be solved by hand.

    Kinds and parameters:

    * ``identity``: ``gamma`` (and optionally ``sigma``); value 0 for the
      identity process with ``Gamma_X' = Gamma_X``.
    * ``gibbs_to_gibbs``: ``gamma_in``, ``gamma_out``, optional ``p_in``,
      ``p_out`` (commuting projectors), ``eps``; value
      ``log tr(P'Gamma') - log tr(P Gamma) + log(1/(1-eps^2))``.
    * ``gibbs_to_arbitrary``: ``rho`` with ``rho_R = Gamma_R / tr Gamma_R``,
      ``gamma_in``, ``gamma_out``; value ``-log tr Gamma_X - D_max(rho_X'||Gamma_X')``.
    * ``trivial_output``: ``sigma``, ``gamma_in``; value ``D_min,0(sigma||Gamma_X)``.
    * ``trivial_input``: ``rho_out``, ``gamma_out``; value ``-D_max(rho_out||Gamma_X')``.
    * ``pure_output``: ``sigma``, ``gamma_in``, ``gamma_out``, ``index``
      (eigenvector of ``Gamma_X'``); value ``D_min,0(sigma||Gamma_X) + log g_f``.
    * ``pure_input``: ``rho_out``, ``gamma_in``, ``gamma_out``, ``index``
      (eigenvector of ``Gamma_X``); value ``-log g_i - D_max(rho_out||Gamma_X')``.
    * ``max_entropy``: ``psi`` (pure state on ``X' R E``), ``dims`` =
      ``(d_out, d_in, d_env)``; value ``H_min(E|R) = -H_0(E|X')`` for
      ``Gamma = I`` on both sides.

    The corresponding process matrix (and Gamma operators) are returned in
    ``details`` so that callers can cross-check against the programs.

    Raises:
        CohRelError: if a hypothesis of the closed form is violated.
    """
    if kind == "identity":
        g = _as_gamma(params["gamma"], "Gamma")
        d = g.shape[0]
        sigma = params.get("sigma")
        sigma = np.eye(d) / d if sigma is None else np.asarray(sigma, dtype=complex)
        pm = proc.process_matrix(proc.identity_channel(d), sigma)
        return _closed(0.0, process=pm, gamma_in=g, gamma_out=g)
    if kind == "gibbs_to_gibbs":
        g_in = _as_gamma(params["gamma_in"], "Gamma_X")
        g_out = _as_gamma(params["gamma_out"], "Gamma_X'")
        p_in = np.eye(g_in.shape[0]) if params.get("p_in") is None else np.asarray(params["p_in"], dtype=complex)
        p_out = np.eye(g_out.shape[0]) if params.get("p_out") is None else np.asarray(params["p_out"], dtype=complex)
        _projector_commutes(p_in, g_in, "P")
        _projector_commutes(p_out, g_out, "P'")
        eps = _check_eps(params.get("eps", 0.0))
        value = (
            float(np.log2(np.real(np.trace(p_out @ g_out))))
            - float(np.log2(np.real(np.trace(p_in @ g_in))))
            - float(np.log2(1.0 - eps**2))
        )
        pm = params.get("rho")
        if pm is None:
            pm = gibbs_to_gibbs_process(g_in, g_out, p_in, p_out, params.get("channel"))
        else:
            pm = as_process(pm, g_in, g_out)
            if la.opnorm(pm.input_state - ent.battery_state(p_in, g_in)) > 1e-9:
                raise CohRelError("input marginal is not the battery state of (P, Gamma_X)")
            if la.opnorm(pm.reduced_out - ent.battery_state(p_out, g_out)) > 1e-9:
                raise CohRelError("output marginal is not the battery state of (P', Gamma_X')")
        return _closed(value, eps, process=pm, gamma_in=g_in, gamma_out=g_out)
    if kind == "gibbs_to_arbitrary":
        g_in = _as_gamma(params["gamma_in"], "Gamma_X")
        g_out = _as_gamma(params["gamma_out"], "Gamma_X'")
        pm = as_process(params["rho"], g_in, g_out)
        gibbs = g_in / np.real(np.trace(g_in))
        if la.opnorm(pm.input_state - gibbs) > 1e-9:
            raise CohRelError("input state of the process is not Gamma_X / tr Gamma_X")
        value = -float(np.log2(np.real(np.trace(g_in)))) - ent.d_max(pm.reduced_out, g_out).value
        return _closed(value, process=pm, gamma_in=g_in, gamma_out=g_out)
    if kind == "trivial_output":
        g_in = _as_gamma(params["gamma_in"], "Gamma_X")
        sigma = np.asarray(params["sigma"], dtype=complex)
        value = ent.d_min0(sigma, g_in).value
        pm = ProcessMatrix.from_array(la.mirror_transpose(sigma), 1, g_in.shape[0])
        return _closed(value, process=pm, gamma_in=g_in, gamma_out=np.ones((1, 1)))
    if kind == "trivial_input":
        g_out = _as_gamma(params["gamma_out"], "Gamma_X'")
        rho_out = np.asarray(params["rho_out"], dtype=complex)
        value = -ent.d_max(rho_out, g_out).value
        pm = ProcessMatrix.from_array(rho_out, g_out.shape[0], 1)
        return _closed(value, process=pm, gamma_in=np.ones((1, 1)), gamma_out=g_out)
    if kind == "pure_output":
        g_in = _as_gamma(params["gamma_in"], "Gamma_X")
        g_out = _as_gamma(params["gamma_out"], "Gamma_X'")
        sigma = np.asarray(params["sigma"], dtype=complex)
        ket, g_f = proc.gamma_eigenvector(g_out, params.get("index", 0))
        if g_f <= 0:
            raise CohRelError("output eigenvector must have a positive Gamma eigenvalue")
        value = ent.d_min0(sigma, g_in).value + float(np.log2(g_f))
        rho = np.kron(np.outer(ket, ket.conj()), la.mirror_transpose(sigma))
        pm = ProcessMatrix.from_array(rho, g_out.shape[0], g_in.shape[0])
        return _closed(value, process=pm, gamma_in=g_in, gamma_out=g_out)
    if kind == "pure_input":
        g_in = _as_gamma(params["gamma_in"], "Gamma_X")
        g_out = _as_gamma(params["gamma_out"], "Gamma_X'")
        rho_out = np.asarray(params["rho_out"], dtype=complex)
        ket, g_i = proc.gamma_eigenvector(g_in, params.get("index", 0))
        if g_i <= 0:
            raise CohRelError("input eigenvector must have a positive Gamma eigenvalue")
        value = -float(np.log2(g_i)) - ent.d_max(rho_out, g_out).value
        rho = np.kron(rho_out, la.mirror_transpose(np.outer(ket, ket.conj())))
        pm = ProcessMatrix.from_array(rho, g_out.shape[0], g_in.shape[0])
        return _closed(value, process=pm, gamma_in=g_in, gamma_out=g_out)
    if kind == "max_entropy":
        d_out, d_in, d_env = (int(x) for x in params["dims"])
        psi = np.asarray(params["psi"], dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        full = np.outer(psi, psi.conj())
        dims = [d_out, d_in, d_env]
        # Reorder X' R E -> E R and E X'.
        rho_er = la.partial_trace(la.permute_systems(full, dims, [2, 1, 0]), [d_env, d_in, d_out], keep=[0, 1])
        rho_ex = la.partial_trace(la.permute_systems(full, dims, [2, 0, 1]), [d_env, d_out, d_in], keep=[0, 1])
        h_min = ent.h_min_alt(rho_er, (d_env, d_in)).value
        h_zero = ent.h_zero_alt(rho_ex, (d_env, d_out)).value
        rho = la.partial_trace(full, dims, keep=[0, 1])
        pm = ProcessMatrix.from_array(rho, d_out, d_in)
        return _closed(h_min, process=pm, gamma_in=np.eye(d_in), gamma_out=np.eye(d_out), minus_h_zero=-h_zero)
    raise CohRelError(f"unknown special case {kind!r}")


def battery_relative_entropy(projector: np.ndarray, gamma: np.ndarray) -> dict[str, float]:
    """``D``, ``D_min,0`` and ``D_max`` of a battery state, all equal to ``-log tr(P Gamma)``."""
    state = ent.battery_state(projector, gamma)
    return {
        "closed_form": -float(np.log2(np.real(np.trace(np.asarray(projector) @ np.asarray(gamma))))),
        "relative_entropy": ent.rel_entropy(state, gamma).value,
        "d_min0": ent.d_min0(state, gamma).value,
        "d_max": ent.d_max(state, gamma).value,
    }


# ---------------------------------------------------------------------------
# Target smoothing: bracket
# ---------------------------------------------------------------------------


def _swap_sides(rho: np.ndarray, d_out: int, d_in: int) -> np.ndarray:
    return la.permute_systems(rho, [d_out, d_in], [1, 0])


def smoothing_candidates(
    rho: ProcessMatrix, gamma_in: np.ndarray, gamma_out: np.ndarray, eps: float
) -> list[tuple[str, np.ndarray]]:
    """Explicit states within purified distance ``eps`` of the process matrix.

    Candidates: the process itself; spectral truncations of it; the process
    with its output marginal replaced by a smooth-``D_max`` optimiser (via
    marginal matching); the process with its reference marginal replaced by
    the ``D_rob`` smoothing candidate; and both replacements in sequence.  Only
    candidates whose purified distance to ``rho`` is verified to be at most
    ``eps`` are returned.
    """
    d_out, d_in = rho.d_out, rho.d_in
    base = rho.rho
    out: list[tuple[str, np.ndarray]] = [("process", base)]
    if eps <= 0:
        return out
    w, v = np.linalg.eigh(base)
    w, v = w[::-1], v[:, ::-1]
    for k in range(1, w.size):
        if np.sum(w[:k]) <= 1e-14:
            continue
        p = v[:, :k] @ v[:, :k].conj().T
        out.append((f"truncation_{k}", la.project_normalize(base, p)))

    def output_smoothed(state: np.ndarray, budget: float) -> np.ndarray | None:
        target = ent.smooth_d_max(budget, la.ptrace_second(state, d_out, d_in), gamma_out).details.get("state")
        if target is None:
            return None
        target = la.hermitize(target) / np.real(np.trace(target))
        return la.match_marginal(state, target, (d_out, d_in))

    def input_smoothed(state: np.ndarray, budget: float) -> np.ndarray | None:
        ref = la.hermitize(la.ptrace_first(state, d_out, d_in))
        sigma = la.mirror_transpose(ref)
        try:
            _, rec = ent.smooth_d_rob_lower(budget, sigma, gamma_in)
        except (ent.EntropyError, ent.SolverFailure):
            return None
        target = la.mirror_transpose(rec.candidate)
        swapped = la.match_marginal(_swap_sides(state, d_out, d_in), target, (d_in, d_out))
        return _swap_sides(swapped, d_in, d_out)

    # 2 sqrt(2 delta) <= eps for delta <= eps^2/8 (one step) or eps^2/32 (two steps).
    for name, fn in (("output_smoothed", output_smoothed), ("input_smoothed", input_smoothed)):
        try:
            cand = fn(base, eps**2 / 8.0)
        except (ent.EntropyError, ent.SolverFailure, la.LinalgError):
            cand = None
        if cand is not None:
            out.append((name, cand))
    try:
        mid = input_smoothed(base, eps**2 / 32.0)
        if mid is not None:
            both = output_smoothed(mid, eps**2 / 32.0)
            if both is not None:
                out.append(("both_smoothed", both))
    except (ent.EntropyError, ent.SolverFailure, la.LinalgError):
        pass
    return [(n, c) for n, c in out if la.purified_distance(c, base) <= eps + 1e-12]


def cohrel_smooth_x_bracket(
    rho: ProcessMatrix | np.ndarray,
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
    eps: float,
) -> CohRelResult:
    """Bracket on the target-smoothed coherent relative entropy ``D_x^eps``.

    ``D_x^eps`` maximises the non-smooth value over states within purified
    distance ``eps`` of the process (a non-convex problem).  The lower end is
    the best non-smooth value over explicit candidates
    (:func:`smoothing_candidates`); the upper end is the certified upper bound
    of ``D_z^{3 sqrt(eps)}``, which dominates ``D_x^eps``.

    Raises:
        CohRelError: if ``eps < 0`` or ``3 sqrt(eps) >= 1``.
    """
    eps = float(eps)
    if eps < 0 or 3.0 * np.sqrt(eps) >= 1.0:
        raise CohRelError(f"eps must satisfy 0 <= eps and 3 sqrt(eps) < 1, got {eps}")
    g_in = _as_gamma(gamma_in, "Gamma_X")
    g_out = _as_gamma(gamma_out, "Gamma_X'")
    pm = as_process(rho, g_in, g_out)
    if eps == 0.0:
        base = cohrel_nonsmooth(pm, g_in, g_out)
        return CohRelResult(
            base.value_bits, base.primal_value, base.dual_value, base.gap, base.certificate, 0.0,
            "x_bracket", "bracket", (base.value_bits, base.value_bits), details={"candidate": "process"},
        )
    best, best_name, best_res = -np.inf, "process", None
    for name, cand in smoothing_candidates(pm, g_in, g_out, eps):
        try:
            res = cohrel_nonsmooth(ProcessMatrix(cand, pm.dims_out, pm.dims_in), g_in, g_out)
        except (CohRelError, ent.SolverFailure):
            continue
        if res.value_bits > best:
            best, best_name, best_res = res.value_bits, name, res
    up = cohrel_smooth_z(pm, g_in, g_out, 3.0 * np.sqrt(eps))
    upper = up.upper
    lower = min(best, upper)
    return CohRelResult(
        0.5 * (lower + upper),
        best_res.primal_value if best_res else float("nan"),
        up.dual_value,
        upper - lower,
        best_res.certificate if best_res else None,
        eps,
        "x_bracket",
        "bracket",
        (lower, upper),
        details={"candidate": best_name, "upper_eps": 3.0 * np.sqrt(eps)},
    )


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Bound:
    """A named bound.

    Attributes:
        name: identifier.
        value: the bound in bits.
        side: ``"lower"`` or ``"upper"``.
        target: which quantity it bounds: ``"nonsmooth"`` (``eps = 0``),
            ``"z"`` (smooth value at the record's ``eps``) or ``"x"``
            (target-smoothed value at the record's ``eps``).
        description: short statement of the bound.
    """

    name: str
    value: float
    side: str
    target: str
    description: str


@dataclass
class BoundsRecord:
    """Bounds evaluated for one instance, together with the bounded values."""

    eps: float
    bounds: list[Bound]
    values: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __getitem__(self, name: str) -> Bound:
        for b in self.bounds:
            if b.name == name:
                return b
        raise KeyError(name)

    def violations(self, slack: float = PROPERTY_SLACK) -> list[str]:
        """Names of bounds contradicted by the stored values.

        ``values`` maps a target to its certified ``(lower, upper)``; a lower
        bound is violated if it exceeds the target's upper end and vice versa.
        """
        bad = []
        for b in self.bounds:
            if b.target not in self.values:
                continue
            lo, hi = self.values[b.target]
            if b.side == "lower" and b.value > hi + slack:
                bad.append(b.name)
            if b.side == "upper" and b.value < lo - slack:
                bad.append(b.name)
        return bad


def _smooth_d_max_upper(eps: float, rho: np.ndarray, gamma: np.ndarray) -> float:
    """Certified upper bound on ``D_max^eps``; falls back to ``D_max`` (``eps = 0``) if the program stalls."""
    try:
        return ent.smooth_d_max(eps, rho, gamma).upper
    except ent.SolverFailure:
        return ent.d_max(rho, gamma).value


def _smooth_upper_params(eps: float) -> list[tuple[float, float]]:
    grid = [0.0, 0.01, 0.03, 0.05, 0.1, 0.2]
    return [(a, b) for a in grid for b in grid if a + b + eps < 0.9]


def bounds_suite(
    rho: ProcessMatrix | np.ndarray,
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
    eps: float = 0.0,
    *,
    evaluate: bool = True,
) -> BoundsRecord:
    """Evaluate the entropic bounds on the coherent relative entropy.

    Bounds on the non-smooth value: relative-entropy difference (upper),
    ``D_max`` difference (upper), ``D_rob - D_max`` (lower), trivial bounds.
    For ``eps > 0`` additionally:

    * ``smooth_upper_z``: ``D_max^a(sigma) - D_min,0(rho~') - log(1 - a - b -
      eps)`` minimised over a grid of ``(a, b)``, where ``rho~'`` is any
      explicit state within ``b`` of ``rho_X'`` (so the ``D_min,0`` term is a
      certified lower bound on its smooth version);
    * ``smooth_upper_x``: the same with ``-log(1 - a - b - 2 eps)``, bounding
      the target-smoothed value;
    * ``smooth_lower_z``: ``D_rob(sigma) - D_max^{eps^2/8}(rho_X')`` from the
      explicit map that reproduces the process with its output marginal
      smoothed;
    * ``smooth_lower_x``: ``D_min,0^{e''}(sigma) - D_max^{e'}(rho_X') +
      log(e'''^2/(2 + e'''^2))`` with ``e' = eps^2/32`` and ``e'' = e''' =
      eps^2/64`` (the ``D_min,0`` term from explicit candidates);
    * the trivial bounds at ``eps``.

    With ``evaluate=True`` the bounded values are computed as well (non-smooth
    SDP, smooth-z SDP and the target-smoothing bracket) so that
    :meth:`BoundsRecord.violations` can be used directly.
    """
    g_in = _as_gamma(gamma_in, "Gamma_X")
    g_out = _as_gamma(gamma_out, "Gamma_X'")
    pm = as_process(rho, g_in, g_out)
    eps = _check_eps(eps)
    restrict_to_supports(pm, g_in, g_out)
    sigma = pm.input_state
    rho_out = pm.reduced_out
    d_max_out = ent.d_max(rho_out, g_out).value
    bounds = [
        Bound("relative_entropy_difference", ent.rel_entropy(sigma, g_in).value - ent.rel_entropy(rho_out, g_out).value,
              "upper", "nonsmooth", "D(sigma||Gamma_X) - D(rho_X'||Gamma_X')"),
        Bound("d_max_difference", ent.d_max(sigma, g_in).value - d_max_out,
              "upper", "nonsmooth", "D_max(sigma||Gamma_X) - D_max(rho_X'||Gamma_X')"),
        Bound("rob_lower", ent.d_rob(sigma, g_in).value - d_max_out,
              "lower", "nonsmooth", "D_rob(sigma||Gamma_X) - D_max(rho_X'||Gamma_X')"),
    ]
    lo0, hi0 = trivial_bounds(g_in, g_out, 0.0)
    bounds += [
        Bound("trivial_lower", lo0, "lower", "nonsmooth", "-log tr Gamma_X - log ||Gamma_X'^-1||"),
        Bound("trivial_upper", hi0, "upper", "nonsmooth", "log ||Gamma_X^-1|| + log tr Gamma_X'"),
    ]
    if eps > 0:
        lo, hi = trivial_bounds(g_in, g_out, eps)
        bounds += [
            Bound("trivial_lower_smooth", lo, "lower", "z", "trivial lower bound - log(1 - eps^2)"),
            Bound("trivial_upper_smooth", hi, "upper", "z", "trivial upper bound - log(1 - eps^2)"),
        ]
        dmax_in = {0.0: ent.d_max(sigma, g_in).value}
        dmin_out = {0.0: ent.d_min0(rho_out, g_out).value}
        best_z, best_x = np.inf, np.inf
        for a, bb in _smooth_upper_params(eps):
            if a not in dmax_in:
                dmax_in[a] = _smooth_d_max_upper(a, sigma, g_in)
            if bb not in dmin_out:
                dmin_out[bb] = ent.smooth_d_min0_candidates(bb, rho_out, g_out).value
            core = dmax_in[a] - dmin_out[bb]
            best_z = min(best_z, core - float(np.log2(1.0 - a - bb - eps)))
            if a + bb + 2 * eps < 1:
                best_x = min(best_x, core - float(np.log2(1.0 - a - bb - 2.0 * eps)))
        bounds.append(Bound("smooth_upper_z", best_z, "upper", "z",
                            "D_max^a(sigma) - D_min,0^b(rho_X') - log(1 - a - b - eps)"))
        if np.isfinite(best_x):
            bounds.append(Bound("smooth_upper_x", best_x, "upper", "x",
                                "D_max^a(sigma) - D_min,0^b(rho_X') - log(1 - a - b - 2 eps)"))
        bounds.append(Bound(
            "smooth_lower_z",
            ent.d_rob(sigma, g_in).value - _smooth_d_max_upper(eps**2 / 8.0, rho_out, g_out),
            "lower", "z", "D_rob(sigma) - D_max^{eps^2/8}(rho_X')",
        ))
        e1, e2 = eps**2 / 32.0, eps**2 / 64.0
        bounds.append(Bound(
            "smooth_lower_x",
            ent.smooth_d_min0_candidates(e2, sigma, g_in).value
            - _smooth_d_max_upper(e1, rho_out, g_out)
            + float(np.log2(e2**2 / (2.0 + e2**2))),
            "lower", "x", "D_min,0^{e''}(sigma) - D_max^{e'}(rho_X') + log(e'''^2/(2+e'''^2))",
        ))
    rec = BoundsRecord(eps, bounds)
    if evaluate:
        ns = cohrel_nonsmooth(pm, g_in, g_out)
        rec.values["nonsmooth"] = (ns.lower, ns.upper)
        if eps > 0:
            zs = cohrel_smooth_z(pm, g_in, g_out, eps)
            rec.values["z"] = (zs.lower, zs.upper)
            if 3.0 * np.sqrt(eps) < 1:
                xb = cohrel_smooth_x_bracket(pm, g_in, g_out, eps)
                rec.values["x"] = xb.bracket
    return rec


# ---------------------------------------------------------------------------
# Structural properties
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one named property check (``lhs <= rhs`` or ``lhs == rhs``)."""

    name: str
    passed: bool
    lhs: float
    rhs: float
    relation: str
    detail: str = ""


def _value(rho: ProcessMatrix | np.ndarray, g_in: np.ndarray, g_out: np.ndarray, eps: float) -> CohRelResult:
    return cohrel_smooth_z(rho, g_in, g_out, eps)


def _le(name: str, lhs: float, rhs: float, slack: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(lhs <= rhs + slack), float(lhs), float(rhs), "<=", detail)


def _eq(name: str, lhs: float, rhs: float, tol: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(abs(lhs - rhs) <= tol), float(lhs), float(rhs), "==", detail)


def tensor_processes(a: ProcessMatrix, b: ProcessMatrix) -> ProcessMatrix:
    """Process matrix of two independent processes, ordered ``X1' X2' R1 R2``."""
    joint = np.kron(a.rho, b.rho)
    dims = [a.d_out, a.d_in, b.d_out, b.d_in]
    joint = la.permute_systems(joint, dims, [0, 2, 1, 3])
    return ProcessMatrix.from_array(joint, a.d_out * b.d_out, a.d_in * b.d_in)


def tensor_power_process(rho: ProcessMatrix, n: int) -> ProcessMatrix:
    """``rho^{(x) n}`` reordered to ``X'^n R^n``."""
    out = rho
    for _ in range(n - 1):
        out = tensor_processes(out, rho)
    return out


def swap_counterexample(g0: float = 1.0, g1: float = 0.25) -> dict[str, float]:
    """Strict superadditivity for two qubits with ``Gamma = diag(g0, g1)``.

    The process ``|0> -> |+>`` and its reverse ``|+> -> |0>`` have values whose
    sum is ``-log[(g0 + g1)^2 / (4 g0 g1)] < 0``, while the joint process
    ``|0>|+> -> |+>|0>`` is implemented by a Gamma-preserving swap.

    Returns:
        The two single values, their sum, the joint value and the gap
        ``joint - sum`` (all from the non-smooth program), plus the
        closed-form sum.
    """
    if g0 <= g1 or g1 <= 0:
        raise CohRelError("need g0 > g1 > 0")
    g = np.diag([g0, g1]).astype(complex)
    zero = np.array([1.0, 0.0], dtype=complex)
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    proj = lambda v: np.outer(v, v.conj())  # noqa: E731
    up = ProcessMatrix.from_array(np.kron(proj(plus), la.mirror_transpose(proj(zero))), 2, 2)
    down = ProcessMatrix.from_array(np.kron(proj(zero), la.mirror_transpose(proj(plus))), 2, 2)
    v_up = cohrel_nonsmooth(up, g, g).value_bits
    v_down = cohrel_nonsmooth(down, g, g).value_bits
    joint_out = np.kron(plus, zero)
    joint_in = np.kron(zero, plus)
    joint = ProcessMatrix.from_array(np.kron(proj(joint_out), la.mirror_transpose(proj(joint_in))), 4, 4)
    gg = np.kron(g, g)
    v_joint = cohrel_nonsmooth(joint, gg, gg).value_bits
    closed = -float(np.log2((g0 + g1) ** 2 / (4.0 * g0 * g1)))
    return {
        "up": v_up,
        "down": v_down,
        "sum": v_up + v_down,
        "closed_form_sum": closed,
        "joint": v_joint,
        "gap": v_joint - (v_up + v_down),
    }


def _random_instance(rng: np.random.Generator, d_in: int, d_out: int) -> tuple[ProcessMatrix, np.ndarray, np.ndarray]:
    g_in = proc.random_gamma(rng, d_in)
    g_out = proc.random_gamma(rng, d_out)
    sigma = proc.random_state(rng, d_in)
    e = proc.random_channel(rng, d_in, d_out, env_dim=2)
    return proc.process_matrix(e, sigma), g_in, g_out


PROPERTY_NAMES = (
    "scaling",
    "isometry_invariance",
    "data_processing",
    "chain_rule",
    "chain_rule_states",
    "superadditivity",
    "gamma_restriction",
    "gamma_ordering",
    "subpreserving_nonnegative",
    "product_state_lower_bound",
    "swap_counterexample",
)


def property_checks(
    seed: int,
    *,
    eps: float = 0.0,
    dims: tuple[int, int] = (2, 2),
    names: Sequence[str] | None = None,
    slack: float = PROPERTY_SLACK,
) -> list[CheckResult]:
    """Run the structural property checks on one seeded random instance.

    Args:
        seed: instance seed (Philox stream).
        eps: smoothing parameter for the single-process checks; composite
            quantities use the combined parameters of each statement.
        dims: ``(|X|, |X'|)`` of the base instance (each at most 3).
        names: subset of :data:`PROPERTY_NAMES` (all by default).
        slack: tolerance for SDP-to-SDP comparisons.

    Returns:
        One :class:`CheckResult` per executed check.
    """
    names = PROPERTY_NAMES if names is None else tuple(names)
    unknown = set(names) - set(PROPERTY_NAMES)
    if unknown:
        raise CohRelError(f"unknown property checks: {sorted(unknown)}")
    d_in, d_out = dims
    if max(d_in, d_out) > 3:
        raise CohRelError("property checks are limited to subsystem dimensions <= 3")
    rng = proc.rng_from_seed(seed)
    pm, g_in, g_out = _random_instance(rng, d_in, d_out)
    base = None
    results: list[CheckResult] = []

    def base_value() -> float:
        nonlocal base
        if base is None:
            base = _value(pm, g_in, g_out, eps).value_bits
        return base

    for name in names:
        if name == "scaling":
            a, b = 2.0, 3.0
            shifted = _value(pm, a * g_in, b * g_out, eps).value_bits
            results.append(_eq(name, shifted - base_value(), float(np.log2(b / a)), 1e-6))
        elif name == "isometry_invariance":
            v = proc.random_isometry(rng, d_in, d_in + 1)
            vp = proc.random_isometry(rng, d_out, d_out + 1)
            w = np.kron(vp, v.conj())
            moved = ProcessMatrix.from_array(w @ pm.rho @ w.conj().T, d_out + 1, d_in + 1)
            val = _value(moved, v @ g_in @ v.conj().T, vp @ g_out @ vp.conj().T, eps).value_bits
            results.append(_eq(name, val, base_value(), slack))
        elif name == "data_processing":
            d2 = int(rng.integers(2, 4))
            f = proc.random_channel(rng, d_out, d2, env_dim=2)
            after = proc.apply_extended(f, pm.rho, d_in)
            after_pm = ProcessMatrix.from_array(after, d2, d_in)
            val = _value(after_pm, g_in, proc.apply(f, g_out), eps).value_bits
            results.append(_le(name, base_value(), val, slack))
        elif name == "chain_rule":
            sigma = pm.input_state
            e1 = proc.random_channel(rng, d_in, d_out, env_dim=2)
            d2 = 2
            e2 = proc.random_channel(rng, d_out, d2, env_dim=2)
            g2 = proc.random_gamma(rng, d2)
            eps2 = eps / 2.0
            step1 = _value(proc.process_matrix(e1, sigma), g_in, g_out, eps2).value_bits
            step2 = _value(proc.process_matrix(e2, proc.apply(e1, sigma)), g_out, g2, eps - eps2).value_bits
            total = _value(proc.process_matrix(proc.compose(e2, e1), sigma), g_in, g2, eps).value_bits
            results.append(_le(name, step1 + step2, total, slack))
        elif name == "chain_rule_states":
            results.append(chain_rule_states_check(rng, eps, slack))
        elif name == "superadditivity":
            if d_in * d_out <= 4:
                pm1, g_in1, g_out1 = pm, g_in, g_out
            else:
                # keep the joint program small: use a qubit instance for the first factor
                pm1, g_in1, g_out1 = _random_instance(rng, 2, 2)
            pm2, g_in2, g_out2 = _random_instance(rng, 2, 2)
            e1, e2 = eps, eps / 2.0
            v1 = _value(pm1, g_in1, g_out1, e1).value_bits
            v2 = _value(pm2, g_in2, g_out2, e2).value_bits
            joint = _value(
                tensor_processes(pm1, pm2), np.kron(g_in1, g_in2), np.kron(g_out1, g_out2),
                float(np.sqrt(e1**2 + e2**2)),
            ).value_bits
            results.append(_le(name, v1 + v2, joint, slack))
        elif name == "gamma_restriction":
            results.append(gamma_restriction_check(rng, eps, slack))
        elif name == "gamma_ordering":
            c_in = proc.random_state(rng, d_in) * d_in
            c_in = c_in / max(la.opnorm(c_in), 1.0) * rng.uniform(0.3, 1.0)
            c_in = 0.5 * c_in + 0.5 * rng.uniform(0.2, 1.0) * np.eye(d_in)
            root = la.psd_fn(g_in, "sqrt")
            g_in_low = la.hermitize(root @ c_in @ root)  # <= Gamma_X since c_in <= I
            g_out_high = la.hermitize(g_out + proc.random_state(rng, d_out) * rng.uniform(0.1, 1.0))
            val = _value(pm, g_in_low, g_out_high, eps).value_bits
            results.append(_le(name, base_value(), val, slack))
        elif name == "subpreserving_nonnegative":
            e = gamma_preserving_channel(rng, g_in)
            g_big = g_in * rng.uniform(1.0, 2.0)
            val = _value(proc.process_matrix(e, pm.input_state), g_in, g_big, eps).value_bits
            results.append(_le(name, 0.0, val, slack, "Gamma-preserving channel, enlarged Gamma_X'"))
        elif name == "product_state_lower_bound":
            sigma = proc.random_state(rng, d_in)
            rho_out = proc.random_state(rng, d_out)
            prod = ProcessMatrix.from_array(np.kron(rho_out, la.mirror_transpose(sigma)), d_out, d_in)
            val = cohrel_nonsmooth(prod, g_in, g_out).value_bits
            bound = ent.d_min0(sigma, g_in).value - ent.d_max(rho_out, g_out).value
            results.append(_le(name, bound, val, slack))
        elif name == "swap_counterexample":
            sw = swap_counterexample()
            results.append(CheckResult(name, bool(sw["gap"] >= 0.01), sw["sum"], sw["joint"], "<", f"gap {sw['gap']:.6f}"))
    return results


def gamma_preserving_channel(seed: int | np.random.Generator, gamma: np.ndarray) -> ChoiMap:
    """Random channel with ``E(Gamma) = Gamma``.

    A mixture of a unitary diagonal in the eigenbasis of ``Gamma`` and the
    replacement by ``Gamma / tr Gamma``.
    """
    rng = proc.rng_from_seed(seed)
    g = la.hermitize(np.asarray(gamma, dtype=complex))
    d = g.shape[0]
    _, v = np.linalg.eigh(g)
    u = (v * np.exp(2j * np.pi * rng.uniform(size=d))) @ v.conj().T
    p = float(rng.uniform(0.2, 0.9))
    unitary = proc.unitary_channel(u)
    replace = proc.replacement_channel(d, g / np.real(np.trace(g)))
    return ChoiMap(p * unitary.choi + (1 - p) * replace.choi, unitary.dims_in, unitary.dims_out, "trace_preserving")


def chain_rule_states_check(rng: np.random.Generator, eps: float = 0.0, slack: float = PROPERTY_SLACK) -> CheckResult:
    """Chain rule in terms of states on qubits ``A, B, C``.

    Builds a random ``tau_{C R_A R_B}`` and ``Gamma_AB``, ``Gamma_C``; with
    ``rho_{AB R_A} = tr_{R_B}[tau_{R_A R_B}^{1/2} Phi_{AB:R_A R_B} tau_{R_A R_B}^{1/2}]``
    checks ``D(rho; A -> AB) + D(tau; AB -> C) <= D(tau_{C R_A}; A -> C)``
    with smoothing parameters ``eps/2``, ``eps/2`` and ``eps``.
    """
    da = db = dc = 2
    tau = proc.random_state(rng, dc * da * db, rank=2)
    g_ab = proc.random_gamma(rng, da * db)
    g_a = la.ptrace_second(g_ab, da, db)
    g_c = proc.random_gamma(rng, dc)
    tau_r = la.ptrace_first(tau, dc, da * db)  # on R_A R_B
    ket = la.max_entangled_ket(da * db)  # on (AB) (R_A R_B)
    root = la.psd_fn(tau_r, "sqrt")
    big = np.kron(np.eye(da * db), root)
    joint = big @ np.outer(ket, ket.conj()) @ big  # on A B R_A R_B
    rho_abra = la.partial_trace(joint, [da, db, da, db], keep=[0, 1, 2])
    rho = ProcessMatrix.from_array(rho_abra, da * db, da)
    step2 = ProcessMatrix.from_array(tau, dc, da * db)
    tau_cra = la.partial_trace(tau, [dc, da, db], keep=[0, 1])
    total = ProcessMatrix.from_array(tau_cra, dc, da)
    e1 = eps / 2.0
    v1 = _value(rho, g_a, g_ab, e1).value_bits
    v2 = _value(step2, g_ab, g_c, eps - e1).value_bits
    v = _value(total, g_a, g_c, eps).value_bits
    return _le("chain_rule_states", v1 + v2, v, slack)


def gamma_restriction_check(rng: np.random.Generator, eps: float = 0.0, slack: float = PROPERTY_SLACK) -> CheckResult:
    """Projecting the Gamma operators onto eigenspaces containing the process leaves the value unchanged."""
    d = 3
    h = np.sort(rng.uniform(0.0, 2.0, size=d))
    u = proc.random_isometry(rng, d, d)
    g = la.hermitize((u * np.exp(-h)) @ u.conj().T)
    p = u[:, :2] @ u[:, :2].conj().T
    # Process supported on the first two eigenvectors on both sides.
    sigma2 = proc.random_state(rng, 2)
    e2 = proc.random_channel(rng, 2, 2, env_dim=2)
    small = proc.process_matrix(e2, sigma2).rho
    v = u[:, :2]
    w = np.kron(v, v.conj())
    pm = ProcessMatrix.from_array(w @ small @ w.conj().T, d, d)
    full = _value(pm, g, g, eps).value_bits
    restricted = _value(pm, p @ g @ p, p @ g @ p, eps).value_bits
    return _eq("gamma_restriction", restricted, full, slack)


# ---------------------------------------------------------------------------
# Battery robustness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BatteryCandidate:
    """System map extracted from a perturbed battery-assisted implementation."""

    map: ChoiMap
    distance: float
    perturbed_distance: float
    achieved_alpha: float
    budget: float
    smooth_value: float

    @property
    def achieved_bits(self) -> float:
        return -float(np.log2(self.achieved_alpha))

    @property
    def feasible(self) -> bool:
        """The candidate meets the smooth program's constraints at ``eps = perturbed_distance``."""
        return bool(self.distance <= self.perturbed_distance + 1e-9 and self.achieved_alpha <= self.budget * (1 + 1e-9))


def battery_robustness(
    t: ChoiMap,
    sigma: np.ndarray,
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
    battery: proc.BatterySpec,
    noise: float,
) -> BatteryCandidate:
    """Perturb a battery implementation and extract a candidate for the smooth program.

    ``Phi`` implements ``T`` with ``battery``; the perturbed map is ``N o
    Phi`` with ``N(x) = (1 - noise) x + noise tr(x) Gamma/tr Gamma`` on the
    joint output (Gamma preserving), so it remains Gamma-sub-preserving.  Its
    error ``eps`` on ``sigma (x) tau(P) -> rho (x) tau(P')`` (reference of
    ``X`` included) is measured; the extracted system map then reproduces the
    process within ``eps`` and has Gamma factor at most the battery budget,
    hence ``-log budget <= D^eps``.
    """
    g_in = _as_gamma(gamma_in, "Gamma_X")
    g_out = _as_gamma(gamma_out, "Gamma_X'")
    if not 0.0 <= noise <= 1.0:
        raise CohRelError("noise must lie in [0, 1]")
    phi = proc.battery_implementation(t, g_in, g_out, battery)
    g_joint = np.kron(g_out, battery.gamma_w)
    thermal = g_joint / np.real(np.trace(g_joint))
    ident = proc.identity_channel(g_joint.shape[0])
    mix = proc.replacement_channel(g_joint.shape[0], thermal)
    n_map = ChoiMap((1 - noise) * ident.choi + noise * mix.choi, phi.dims_out, phi.dims_out, "trace_preserving")
    phi_noisy = proc.compose(n_map, phi)
    target = proc.process_matrix(t, sigma)
    d_out, dw = g_out.shape[0], battery.dim
    tau_in, tau_out = battery.state_in, battery.state_out
    # Process of x -> Phi(x (x) tau(P)) on sigma, ordered X' W R.
    fed = proc.choi_from_function(
        lambda x: proc.apply(phi_noisy, np.kron(x, tau_in)), g_in.shape[0], d_out * dw, check=False
    )
    achieved_joint = proc.process_operator(fed, sigma)
    want = la.permute_systems(np.kron(target.rho, tau_out), [d_out, g_in.shape[0], dw], [0, 2, 1])
    eps = la.purified_distance(achieved_joint, want)
    ext = proc.extract_system_map(phi_noisy, (battery.p_in, battery.gamma_w), (battery.p_out, battery.gamma_w))
    dist = la.purified_distance(proc.process_operator(ext, sigma), target.rho)
    alpha = proc.gamma_factor(ext, g_in, g_out)
    if eps > 0:
        smooth = cohrel_smooth_z(target, g_in, g_out, min(eps, 0.999)).upper
    else:
        smooth = cohrel_nonsmooth(target, g_in, g_out).upper
    return BatteryCandidate(ext, dist, eps, alpha, battery.budget, smooth)


# ---------------------------------------------------------------------------
# Asymptotic equipartition study
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AepRow:
    n: int
    value_per_n: float
    lower_per_n: float
    upper_per_n: float
    limit: float
    gap: float
    runtime_ms: float | None


AEP_COLUMNS = ("n", "value_per_n", "lower_per_n", "upper_per_n", "limit", "gap", "runtime_ms")


@dataclass
class AepTable:
    rows: list[AepRow]
    eps: float

    def to_csv(self) -> str:
        """CSV text; ``runtime_ms`` is left empty unless timing was requested."""
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(AEP_COLUMNS)
        for r in self.rows:
            wr.writerow([
                r.n, f"{r.value_per_n:.12g}", f"{r.lower_per_n:.12g}", f"{r.upper_per_n:.12g}",
                f"{r.limit:.12g}", f"{r.gap:.6g}", "" if r.runtime_ms is None else f"{r.runtime_ms:.1f}",
            ])
        return buf.getvalue()


def aep_sandwich(
    rho: ProcessMatrix, gamma_in: np.ndarray, gamma_out: np.ndarray, eps: float
) -> tuple[float, float]:
    """Bounds ``(lower, upper)`` on the smooth value used in :func:`aep_study`.

    Lower: ``max(D_rob(sigma) - D_max(rho_X'), D_rob(sigma) - D_max^{eps^2/8}(rho_X'))``.
    Upper: ``min_{a,b} D_max^a(sigma) - D_min,0^b(rho_X') - log(1 - a - b - eps)``.
    See :func:`bounds_suite` for the derivations.
    """
    rec = bounds_suite(rho, gamma_in, gamma_out, eps, evaluate=False)
    if eps > 0:
        lower = max(rec["rob_lower"].value, rec["smooth_lower_z"].value)
        upper = rec["smooth_upper_z"].value
    else:
        lower = rec["rob_lower"].value
        upper = min(rec["relative_entropy_difference"].value, rec["d_max_difference"].value)
    return lower, upper


def aep_study(
    rho: ProcessMatrix | np.ndarray,
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
    eps: float,
    n_max: int = 3,
    *,
    timing: bool = False,
    progress: Callable[[AepRow], None] | None = None,
) -> AepTable:
    """Per-copy smooth value of ``rho^{(x) n}`` for ``n = 1..n_max``.

    Each row holds the value per copy, the bounds of :func:`aep_sandwich` per
    copy, the i.i.d. limit ``D(sigma||Gamma_X) - D(rho_X'||Gamma_X')``, the
    certified gap and (with ``timing=True``) the runtime.

    Raises:
        CohRelError: if ``(|X'||X|)^{n_max}`` exceeds :data:`AEP_MAX_DIM` or
            ``n_max < 1``.
    """
    g_in = _as_gamma(gamma_in, "Gamma_X")
    g_out = _as_gamma(gamma_out, "Gamma_X'")
    pm = as_process(rho, g_in, g_out)
    eps = _check_eps(eps)
    if n_max < 1:
        raise CohRelError("n_max must be at least 1")
    joint = (pm.d_in * pm.d_out) ** n_max
    if joint > AEP_MAX_DIM:
        raise CohRelError(
            f"joint dimension (|X'||X|)^n = {joint} exceeds the limit {AEP_MAX_DIM}; reduce n_max"
        )
    limit = ent.rel_entropy(pm.input_state, g_in).value - ent.rel_entropy(pm.reduced_out, g_out).value
    rows = []
    for n in range(1, n_max + 1):
        start = time.perf_counter()
        pn = tensor_power_process(pm, n)
        gi, go = g_in, g_out
        for _ in range(n - 1):
            gi, go = np.kron(gi, g_in), np.kron(go, g_out)
        res = cohrel_smooth_z(pn, gi, go, eps)
        lo, hi = aep_sandwich(pn, gi, go, eps)
        ms = (time.perf_counter() - start) * 1e3 if timing else None
        row = AepRow(n, res.value_bits / n, lo / n, hi / n, limit, res.gap, ms)
        rows.append(row)
        if progress is not None:
            progress(row)
    return AepTable(rows, eps)
