"""A small dense primal-dual interior-point solver for Hermitian SDPs.

Problems are posed over a direct sum of Hermitian blocks ``X = X_1 (+) ... (+) X_k``
(``1 x 1`` blocks are nonnegative scalars) in the standard form::

    minimize / maximize   sum_j Re tr(C_j X_j)
    subject to            sum_j Re tr(A_ij X_j)  (= or <=)  b_i ,   X_j >= 0 .

Inequality rows receive a nonnegative slack.  The solver is an infeasible-start
path-following method using the Nesterov-Todd scaling direction with a
Mehrotra predictor-corrector step; the normal equations are formed densely.
Complex Hermitian blocks are handled natively (the real inner product
``Re tr(A X)`` makes the Hermitian matrices a real Euclidean space).

The conventions for the returned dual variables are those of the minimisation
form ``min <C, X> s.t. A(X) = b``, whose dual is ``max b.y s.t. A*(y) + S = C``.
For maximisation problems the objective is negated internally; ``y`` is
reported so that ``dual_obj = b.y`` holds in the caller's sign convention and
``S = A*(y) - C`` is the positive semidefinite dual slack.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .linalg import hermitize

logger = logging.getLogger(__name__)

GAP_TOL = 1e-8
FEAS_TOL = 1e-8
MAX_ITER = 200

STATUSES = ("optimal", "max_iter", "infeasible_primal", "infeasible_dual", "numerical")


class SdpError(RuntimeError):
    """Raised for malformed problems or when a caller requires optimality."""


# ---------------------------------------------------------------------------
# Problem description
# ---------------------------------------------------------------------------


@dataclass
class ConstraintGroup:
    """A batch of ``k`` scalar constraints sharing a sense.

    Attributes:
        ops: map from block index to an array of shape ``(k, n, n)`` holding the
            Hermitian operators ``A_i`` restricted to that block.
        rhs: right-hand sides ``b_i`` (shape ``(k,)``).
        sense: ``"equal"`` or ``"less_equal"``.
    """

    ops: dict[int, np.ndarray]
    rhs: np.ndarray
    sense: str = "equal"

    @property
    def size(self) -> int:
        return int(self.rhs.shape[0])


@dataclass
class SdpProblem:
    """Block-structured Hermitian SDP.

    Attributes:
        block_dims: dimension of every Hermitian block.
        objective: one ``C_j`` per block (``None`` means zero).
        groups: batched constraints; see :attr:`constraints` for the flat view.
        direction: ``"minimize"`` or ``"maximize"``.
    """

    block_dims: list[int]
    objective: list[np.ndarray | None]
    groups: list[ConstraintGroup] = field(default_factory=list)
    direction: str = "minimize"

    def __post_init__(self) -> None:
        if self.direction not in ("minimize", "maximize"):
            raise SdpError(f"unknown direction {self.direction!r}")
        if len(self.objective) != len(self.block_dims):
            raise SdpError("one objective block per variable block is required")
        for j, c in enumerate(self.objective):
            if c is not None:
                n = self.block_dims[j]
                if np.shape(c) != (n, n):
                    raise SdpError(f"objective block {j} has shape {np.shape(c)}, expected {(n, n)}")
        for g in self.groups:
            if g.sense not in ("equal", "less_equal"):
                raise SdpError(f"unknown constraint sense {g.sense!r}")
            for j, a in g.ops.items():
                n = self.block_dims[j]
                if a.shape != (g.size, n, n):
                    raise SdpError(
                        f"constraint operators for block {j} have shape {a.shape}, "
                        f"expected {(g.size, n, n)}"
                    )

    @property
    def num_constraints(self) -> int:
        return sum(g.size for g in self.groups)

    @property
    def constraints(self) -> list[tuple[dict[int, np.ndarray], float, str]]:
        """Flat list of ``(operators per block, b_i, sense)`` triples."""
        return list(self.iter_constraints())

    def iter_constraints(self) -> Iterator[tuple[dict[int, np.ndarray], float, str]]:
        for g in self.groups:
            for i in range(g.size):
                yield {j: a[i] for j, a in g.ops.items()}, float(g.rhs[i]), g.sense

    def scaled(self, factor: float) -> "SdpProblem":
        """Copy with every objective block multiplied by ``factor``."""
        obj = [None if c is None else factor * np.asarray(c) for c in self.objective]
        return SdpProblem(list(self.block_dims), obj, list(self.groups), self.direction)

    # -- JSON ------------------------------------------------------------
    def to_json(self) -> dict:
        def enc(a: np.ndarray) -> dict:
            a = np.asarray(a, dtype=complex)
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {
            "block_dims": list(map(int, self.block_dims)),
            "direction": self.direction,
            "objective": [None if c is None else enc(c) for c in self.objective],
            "constraints": [
                {
                    "sense": sense,
                    "rhs": b,
                    "ops": {str(j): enc(a) for j, a in ops.items()},
                }
                for ops, b, sense in self.iter_constraints()
            ],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "SdpProblem":
        def dec(d: Mapping) -> np.ndarray:
            return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)

        dims = [int(n) for n in payload["block_dims"]]
        obj = [None if c is None else dec(c) for c in payload["objective"]]
        groups = []
        for con in payload["constraints"]:
            ops = {int(j): dec(a)[None, :, :] for j, a in con["ops"].items()}
            groups.append(ConstraintGroup(ops, np.array([float(con["rhs"])]), con["sense"]))
        return cls(dims, obj, groups, payload.get("direction", "minimize"))

    def dump(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path: str) -> "SdpProblem":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


class SdpBuilder:
    """Incremental construction of an :class:`SdpProblem`.

    Example:
        >>> b = SdpBuilder()
        >>> x = b.add_block(1)
        >>> b.set_objective(x, np.ones((1, 1)))
        >>> b.add_constraints({x: -np.ones((1, 1, 1))}, [-1.0], "less_equal")
        >>> round(solve(b.build()).primal_obj, 6)
        1.0
    """

    def __init__(self) -> None:
        self.block_dims: list[int] = []
        self._objective: dict[int, np.ndarray] = {}
        self.groups: list[ConstraintGroup] = []

    def add_block(self, n: int) -> int:
        if n < 1:
            raise SdpError("block dimension must be positive")
        self.block_dims.append(int(n))
        return len(self.block_dims) - 1

    def set_objective(self, block: int, c: np.ndarray) -> None:
        self._objective[block] = np.asarray(c, dtype=complex)

    def add_constraints(
        self,
        ops: Mapping[int, np.ndarray],
        rhs: Sequence[float] | np.ndarray,
        sense: str = "equal",
    ) -> None:
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        k = rhs.shape[0]
        packed = {}
        for j, a in ops.items():
            a = np.asarray(a, dtype=complex)
            if a.ndim == 2:
                a = a[None, :, :]
            n = self.block_dims[j]
            if a.shape != (k, n, n):
                raise SdpError(f"operators for block {j} have shape {a.shape}, expected {(k, n, n)}")
            packed[j] = a
        self.groups.append(ConstraintGroup(packed, rhs, sense))

    def build(self, direction: str = "minimize") -> SdpProblem:
        obj = [self._objective.get(j) for j in range(len(self.block_dims))]
        return SdpProblem(list(self.block_dims), obj, list(self.groups), direction)


@dataclass
class FidelityBlock:
    """Description of the block ``Z = [[V, Y], [Y^dagger, rho_tilde]]``.

    ``V`` is the ``var_dim x var_dim`` variable block whose image under
    ``M V M^dagger`` must have fidelity at least ``threshold`` with ``rho``
    (``M`` is ``var_map``, the identity by default).  ``rho`` is represented on
    its support: ``rho = U rho_tilde U^dagger`` with ``rho_tilde`` diagonal.

    Attributes:
        dim: total dimension of the combined block.
        var_dim: size of the variable corner.
        support: isometry ``U`` onto the support of ``rho``.
        rho_tilde: diagonal matrix of the positive eigenvalues of ``rho``.
        fixed_ops, fixed_rhs: equalities pinning the lower-right corner.
        fid_op: operator ``A`` with ``Re tr(A Z) = Re tr(U^dagger M Y)``.
        threshold: required fidelity.
    """

    dim: int
    var_dim: int
    support: np.ndarray
    rho_tilde: np.ndarray
    fixed_ops: np.ndarray
    fixed_rhs: np.ndarray
    fid_op: np.ndarray
    threshold: float

    def attach(self, builder: SdpBuilder, block: int) -> None:
        """Append the pinning equalities and the fidelity inequality to ``builder``."""
        builder.add_constraints({block: self.fixed_ops}, self.fixed_rhs, "equal")
        builder.add_constraints({block: -self.fid_op[None]}, [-self.threshold], "less_equal")

    def split(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Return the variable corner and the off-diagonal block of a solution."""
        v = self.var_dim
        return z[:v, :v], z[:v, v:]


def fidelity_constraint_block(
    var_dim: int,
    rho: np.ndarray,
    threshold: float,
    var_map: np.ndarray | None = None,
    rank_tol: float = 1e-9,
) -> FidelityBlock:
    """SDP encoding of ``F(M V M^dagger, rho) >= threshold``.

    Uses ``F(sigma, rho) = max { Re tr Y : [[sigma, Y], [Y^dagger, rho]] >= 0 }``.
    Positivity of ``[[V, Y'], [Y'^dagger, rho_tilde]]`` implies positivity of the
    congruent block with ``sigma = M V M^dagger`` and ``Y = M Y' U^dagger``;
    conversely every feasible ``Y`` arises this way, so the encoding is exact.

    Args:
        var_dim: dimension of the variable block ``V``.
        rho: fixed normalised state.
        threshold: fidelity threshold in ``[0, 1]``; ``0`` is vacuous.
        var_map: optional ``dim(rho) x var_dim`` matrix ``M``.

    Raises:
        SdpError: if the threshold is outside ``[0, 1]`` or ``rho`` is not normalised.
    """
    if not 0.0 <= threshold <= 1.0:
        raise SdpError(f"fidelity threshold {threshold} outside [0, 1]")
    rho = hermitize(rho)
    if abs(np.trace(rho).real - 1.0) > 1e-8:
        raise SdpError("fidelity_constraint_block expects a normalised state")
    w, u = np.linalg.eigh(rho)
    w, u = w[::-1], u[:, ::-1]
    keep = w > rank_tol * max(w[0], 0.0)
    w, u = w[keep], u[:, keep]
    r = w.shape[0]
    m = np.eye(rho.shape[0], var_dim, dtype=complex) if var_map is None else np.asarray(var_map)
    if m.shape != (rho.shape[0], var_dim):
        raise SdpError("var_map has the wrong shape")
    n = var_dim + r
    fixed_ops = np.zeros((r * r, n, n), dtype=complex)
    fixed_rhs = np.zeros(r * r)
    k = 0
    s = 1.0 / np.sqrt(2.0)
    for i in range(r):
        fixed_ops[k, var_dim + i, var_dim + i] = 1.0
        fixed_rhs[k] = w[i]
        k += 1
    for i in range(r):
        for j in range(i + 1, r):
            fixed_ops[k, var_dim + i, var_dim + j] = s
            fixed_ops[k, var_dim + j, var_dim + i] = s
            k += 1
            fixed_ops[k, var_dim + i, var_dim + j] = 1j * s
            fixed_ops[k, var_dim + j, var_dim + i] = -1j * s
            k += 1
    # Re tr(K Y) with K = U^dagger M (r x var_dim) equals Re tr(A Z) for the
    # Hermitian A = [[0, K^dagger/2], [K/2, 0]].
    kmat = u.conj().T @ m
    fid_op = np.zeros((n, n), dtype=complex)
    fid_op[:var_dim, var_dim:] = kmat.conj().T / 2.0
    fid_op[var_dim:, :var_dim] = kmat / 2.0
    return FidelityBlock(n, var_dim, u, np.diag(w).astype(complex), fixed_ops, fixed_rhs, fid_op, float(threshold))


# ---------------------------------------------------------------------------
# Solution
# ---------------------------------------------------------------------------


@dataclass
class SdpSolution:
    """Result of :func:`solve`.

    Attributes:
        X: primal blocks (positive semidefinite).
        y: dual multipliers, one per constraint of the original problem.
        S: dual slack blocks.
        primal_obj, dual_obj: objective values in the caller's sign convention.
        gap: ``|primal_obj - dual_obj|``.
        status: one of ``optimal``, ``max_iter``, ``infeasible_primal``,
            ``infeasible_dual``, ``numerical``.
        iterations: number of interior-point iterations.
        primal_residual, dual_residual: relative residual norms at return.
    """

    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    primal_obj: float
    dual_obj: float
    gap: float
    status: str
    iterations: int = 0
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    slacks: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def require_optimal(self) -> "SdpSolution":
        if not self.optimal:
            raise SdpError(
                f"SDP did not converge (status {self.status}, gap {self.gap:.2e}, "
                f"residuals {self.primal_residual:.2e}/{self.dual_residual:.2e})"
            )
        return self


@dataclass
class SolverOptions:
    """Tuning knobs of :func:`solve`.

    Attributes:
        gap_tol, feas_tol, max_iter, debug, presolve: as in :func:`solve`.
        step_factor: fraction of the distance to the cone boundary taken per step.
        stall_iters: iterations without merit improvement before giving up.
        init: ``"uniform"`` starts from ``(1 + max|eig C|) I`` for both ``X`` and
            ``S``; ``"scaled"`` uses separate, data-scaled multiples of the identity.
        recenter_below: after a step shorter than this, the centering
            parameter is raised to ``(1 - step)^2``.
    """

    gap_tol: float = GAP_TOL
    feas_tol: float = FEAS_TOL
    max_iter: int = MAX_ITER
    debug: bool = False
    presolve: bool = True
    step_factor: float = 0.98
    stall_iters: int = 25
    init: str = "uniform"
    recenter_below: float = 0.2


# ---------------------------------------------------------------------------
# Internal standard form
# ---------------------------------------------------------------------------


class _Standard:
    """Problem in the internal form ``min <C,X> s.t. A(X) = b`` with PSD + LP parts."""

    def __init__(self, problem: SdpProblem) -> None:
        self.problem = problem
        sign = 1.0 if problem.direction == "minimize" else -1.0
        self.sign = sign
        m = problem.num_constraints
        self.m = m
        psd_idx = [j for j, n in enumerate(problem.block_dims) if n > 1]
        lp_idx = [j for j, n in enumerate(problem.block_dims) if n == 1]
        self.psd_idx = psd_idx
        self.lp_idx = lp_idx
        self.psd_dims = [problem.block_dims[j] for j in psd_idx]
        senses = np.concatenate(
            [np.full(g.size, g.sense == "less_equal") for g in problem.groups]
        ) if problem.groups else np.zeros(0, dtype=bool)
        self.ineq_rows = np.flatnonzero(senses)
        n_lp = len(lp_idx) + self.ineq_rows.size
        self.n_lp = n_lp
        self.b = np.concatenate([g.rhs for g in problem.groups]) if problem.groups else np.zeros(0)
        # PSD operator stacks.
        self.A = []
        for j, n in zip(psd_idx, self.psd_dims):
            stack = np.zeros((m, n, n), dtype=complex)
            row = 0
            for g in problem.groups:
                if j in g.ops:
                    stack[row : row + g.size] = g.ops[j]
                row += g.size
            self.A.append(hermitize_stack(stack))
        self.C = []
        for j, n in zip(psd_idx, self.psd_dims):
            c = problem.objective[j]
            self.C.append(sign * hermitize(c) if c is not None else np.zeros((n, n), dtype=complex))
        a_lp = np.zeros((m, n_lp))
        c_lp = np.zeros(n_lp)
        for col, j in enumerate(lp_idx):
            row = 0
            for g in problem.groups:
                if j in g.ops:
                    a_lp[row : row + g.size, col] = g.ops[j][:, 0, 0].real
                row += g.size
            c = problem.objective[j]
            if c is not None:
                c_lp[col] = sign * float(np.real(c[0, 0]))
        for k, row in enumerate(self.ineq_rows):
            a_lp[row, len(lp_idx) + k] = 1.0
        self.A_lp = a_lp
        self.c_lp = c_lp
        self.nu = sum(self.psd_dims) + n_lp
        self.keep_rows = np.arange(m)

    # -- preprocessing -------------------------------------------------
    def presolve(self) -> bool:
        """Drop linearly dependent equality rows; return False if inconsistent."""
        m = self.m
        if m == 0:
            return True
        gram = self.A_lp @ self.A_lp.T
        for a in self.A:
            flat = a.reshape(m, -1)
            gram = gram + np.real(flat.conj() @ flat.T)
        diag = np.sqrt(np.clip(np.diag(gram), 0.0, None))
        if np.any(diag == 0.0):
            zero = np.flatnonzero(diag == 0.0)
            if np.any(np.abs(self.b[zero]) > 1e-12):
                return False
        scale = np.where(diag > 0, diag, 1.0)
        g_scaled = gram / np.outer(scale, scale)
        _, r, piv = sla.qr(g_scaled, pivoting=True)
        rd = np.abs(np.diag(r))
        rank = int(np.sum(rd > 1e-11 * max(rd[0], 1e-300)))
        if rank == m:
            return True
        keep = np.sort(piv[:rank])
        drop = np.setdiff1d(np.arange(m), keep)
        # Consistency: dropped rows must be implied by kept rows.
        mat_keep = self._row_matrix(keep)
        mat_drop = self._row_matrix(drop)
        coef, *_ = np.linalg.lstsq(mat_keep.T, mat_drop.T, rcond=None)
        implied = coef.T @ self.b[keep]
        if np.max(np.abs(implied - self.b[drop])) > 1e-8 * (1.0 + np.max(np.abs(self.b))):
            return False
        self._restrict(keep)
        logger.debug("presolve removed %d dependent constraints", drop.size)
        return True

    def _row_matrix(self, rows: np.ndarray) -> np.ndarray:
        parts = [self.A_lp[rows]]
        for a in self.A:
            flat = a[rows].reshape(rows.size, -1)
            parts.append(flat.real)
            parts.append(flat.imag)
        return np.concatenate(parts, axis=1)

    def _restrict(self, keep: np.ndarray) -> None:
        self.A = [a[keep] for a in self.A]
        self.A_lp = self.A_lp[keep]
        self.b = self.b[keep]
        self.keep_rows = self.keep_rows[keep]
        self.m = keep.size

    # -- linear maps ---------------------------------------------------
    def op(self, xs: list[np.ndarray], x_lp: np.ndarray) -> np.ndarray:
        out = self.A_lp @ x_lp
        for a, x in zip(self.A, xs):
            out = out + np.real(a.reshape(self.m, -1).conj() @ x.reshape(-1))
        return out

    def adj(self, y: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        mats = [np.tensordot(y, a, axes=(0, 0)) for a in self.A]
        return mats, self.A_lp.T @ y

    def inner(self, xs, x_lp, ss, s_lp) -> float:
        val = float(x_lp @ s_lp)
        for x, s in zip(xs, ss):
            val += float(np.real(np.vdot(x, s)))
        return val


def hermitize_stack(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


# ---------------------------------------------------------------------------
# Interior-point iteration
# ---------------------------------------------------------------------------


class _Scaling:
    """Nesterov-Todd scaling of one PSD block: ``W S W = X``."""

    __slots__ = ("g", "g_inv", "w", "lam")

    def __init__(self, x: np.ndarray, s: np.ndarray) -> None:
        lx = np.linalg.cholesky(x)
        ls = np.linalg.cholesky(s)
        u, sv, vh = np.linalg.svd(ls.conj().T @ lx)
        v = vh.conj().T
        root = 1.0 / np.sqrt(sv)
        self.g = (lx @ v) * root[None, :]
        # G^{-1} = diag(sv^{1/2}) V^dagger L_X^{-1}
        linv = sla.solve_triangular(lx, np.eye(lx.shape[0]), lower=True)
        self.g_inv = (np.sqrt(sv)[:, None]) * (vh @ linv)
        self.w = self.g @ self.g.conj().T
        self.lam = sv


def _scaled_start(std: "_Standard", cmax: float) -> tuple[float, float]:
    """Heuristic starting magnitudes balancing ``b`` against the constraint norms."""
    norms = np.sqrt(
        sum(np.sum(np.abs(a) ** 2, axis=(1, 2)) for a in std.A) + np.sum(std.A_lp**2, axis=1)
    ) if std.m else np.zeros(0)
    n_max = max(std.psd_dims + [1])
    tau_x = max(10.0, np.sqrt(n_max))
    if std.m:
        tau_x = max(tau_x, n_max * float(np.max((1.0 + np.abs(std.b)) / (1.0 + norms))))
    tau_s = max(10.0, np.sqrt(n_max), 1.0 + cmax, float(np.max(norms)) if std.m else 0.0)
    return tau_x, tau_s


def _max_step_psd(lam: np.ndarray, d_scaled: np.ndarray) -> float:
    r = 1.0 / np.sqrt(lam)
    m = hermitize(r[:, None] * d_scaled * r[None, :])
    wmin = np.linalg.eigvalsh(m)[0]
    return np.inf if wmin >= 0 else -1.0 / wmin


def _max_step_lp(x: np.ndarray, dx: np.ndarray) -> float:
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def solve(
    problem: SdpProblem,
    gap_tol: float = GAP_TOL,
    feas_tol: float = FEAS_TOL,
    max_iter: int = MAX_ITER,
    *,
    debug: bool = False,
    presolve: bool = True,
    options: SolverOptions | None = None,
) -> SdpSolution:
    """Solve an :class:`SdpProblem` with a primal-dual interior-point method.

    Args:
        problem: the SDP.
        gap_tol: relative duality-gap tolerance,
            ``|p - d| <= gap_tol * (1 + |p|)``.
        feas_tol: relative primal and dual residual tolerance.
        max_iter: iteration cap.
        debug: assert the residual-corrected weak-duality identity at every
            iteration (``p - d - <R_d, X> + r_p.y = <X, S> >= 0``).
        presolve: remove linearly dependent equality rows first.

    Returns:
        SdpSolution; ``status == "optimal"`` only when all tolerances are met.
    """
    opts = options or SolverOptions(gap_tol, feas_tol, max_iter, debug, presolve)
    std = _Standard(problem)
    if opts.presolve and not std.presolve():
        return _infeasible_result(problem, std)
    m = std.m
    b = std.b
    norm_b = float(np.linalg.norm(b))
    norm_c = float(
        np.sqrt(sum(np.linalg.norm(c) ** 2 for c in std.C) + np.linalg.norm(std.c_lp) ** 2)
    )
    cmax = max(
        [np.max(np.abs(np.linalg.eigvalsh(c))) for c in std.C if c.size]
        + [float(np.max(np.abs(std.c_lp))) if std.c_lp.size else 0.0]
    ) if (std.C or std.c_lp.size) else 0.0
    tau = 1.0 + cmax
    tau_x = tau_s = tau
    if opts.init == "scaled":
        tau_x, tau_s = _scaled_start(std, cmax)
    xs = [tau_x * np.eye(n, dtype=complex) for n in std.psd_dims]
    ss = [tau_s * np.eye(n, dtype=complex) for n in std.psd_dims]
    x_lp = tau_x * np.ones(std.n_lp)
    s_lp = tau_s * np.ones(std.n_lp)
    y = np.zeros(m)
    prev_step = 1.0

    best = None
    best_merit = np.inf
    since_best = 0
    status = "max_iter"
    it = 0

    def snapshot(merit_vals):
        return (
            [x.copy() for x in xs], x_lp.copy(), y.copy(), [s.copy() for s in ss], s_lp.copy(), merit_vals
        )

    for it in range(opts.max_iter + 1):
        ax = std.op(xs, x_lp)
        r_p = b - ax
        aty, aty_lp = std.adj(y)
        r_d = [c - s - a for c, s, a in zip(std.C, ss, aty)]
        r_d_lp = std.c_lp - s_lp - aty_lp
        pobj = float(sum(np.real(np.vdot(c, x)) for c, x in zip(std.C, xs)) + std.c_lp @ x_lp)
        dobj = float(b @ y)
        xs_inner = std.inner(xs, x_lp, ss, s_lp)
        mu = xs_inner / std.nu
        pres = float(np.linalg.norm(r_p)) / (1.0 + norm_b)
        dres = float(
            np.sqrt(sum(np.linalg.norm(r) ** 2 for r in r_d) + np.linalg.norm(r_d_lp) ** 2)
        ) / (1.0 + norm_c)
        rel_gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        if opts.debug:
            corrected = (
                pobj - dobj
                - sum(np.real(np.vdot(r, x)) for r, x in zip(r_d, xs))
                - r_d_lp @ x_lp
                + r_p @ y
            )
            assert corrected >= -1e-9 * (1.0 + abs(pobj) + abs(dobj)), (
                f"weak duality violated at iteration {it}: {corrected}"
            )
            assert abs(corrected - xs_inner) <= 1e-7 * (1.0 + abs(pobj) + abs(dobj) + xs_inner)
        # Complementarity is part of the merit so that an accidental crossing
        # of the primal and dual objectives is not mistaken for progress.
        merit = max(rel_gap, pres, dres, xs_inner / (1.0 + abs(pobj)))
        if merit < best_merit * 0.999:
            best_merit = merit
            best = snapshot((pobj, dobj, pres, dres))
            since_best = 0
        else:
            since_best += 1
        if rel_gap <= opts.gap_tol and pres <= opts.feas_tol and dres <= opts.feas_tol:
            status = "optimal"
            best = snapshot((pobj, dobj, pres, dres))
            break
        # Farkas-type infeasibility heuristics on diverging iterates.
        aty_norm = np.sqrt(sum(np.linalg.norm(a + s) ** 2 for a, s in zip(aty, ss)) + np.linalg.norm(aty_lp + s_lp) ** 2)
        if dobj > 1e-12 and aty_norm / dobj < opts.feas_tol and float(np.linalg.norm(y)) > 1e6:
            status = "infeasible_primal"
            break
        x_norm = np.sqrt(sum(np.linalg.norm(x) ** 2 for x in xs) + np.linalg.norm(x_lp) ** 2)
        if pobj < -1e-12 and float(np.linalg.norm(ax)) / -pobj < opts.feas_tol and x_norm > 1e6:
            status = "infeasible_dual"
            break
        if it == opts.max_iter:
            status = "max_iter"
            break
        if since_best > opts.stall_iters:
            status = "numerical"
            break
        try:
            scal = [_Scaling(x, s) for x, s in zip(xs, ss)]
        except np.linalg.LinAlgError:
            status = "numerical"
            break
        w_lp = np.sqrt(x_lp / s_lp)
        lam_lp = np.sqrt(x_lp * s_lp)
        # Schur complement M_kl = <A_k, W A_l W>.
        schur = (std.A_lp * (w_lp**2)[None, :]) @ std.A_lp.T
        waw_list = []
        for a, sc in zip(std.A, scal):
            waw = np.matmul(np.matmul(sc.w[None], a), sc.w[None])
            waw_list.append(waw)
            schur += np.real(a.reshape(m, -1).conj() @ waw.reshape(m, -1).T)
        schur = 0.5 * (schur + schur.T)
        try:
            factor = sla.cho_factor(schur, lower=True, check_finite=False)
            solve_m = lambda rhs: sla.cho_solve(factor, rhs, check_finite=False)  # noqa: E731
        except (np.linalg.LinAlgError, sla.LinAlgError):
            try:
                lu = sla.lu_factor(schur + 1e-14 * np.trace(schur) / max(m, 1) * np.eye(m))
                solve_m = lambda rhs: sla.lu_solve(lu, rhs)  # noqa: E731
            except (np.linalg.LinAlgError, ValueError):
                status = "numerical"
                break
        wrw = [sc.w @ r @ sc.w for sc, r in zip(scal, r_d)]
        wrw_lp = w_lp**2 * r_d_lp

        def direction(k_blocks, k_lp):
            rhs = r_p - std.op(k_blocks, k_lp) + std.op(wrw, wrw_lp)
            dy = solve_m(rhs)
            at_dy, at_dy_lp = std.adj(dy)
            ds = [r - a for r, a in zip(r_d, at_dy)]
            ds_lp = r_d_lp - at_dy_lp
            dx = [k - sc.w @ d @ sc.w for k, sc, d in zip(k_blocks, scal, ds)]
            dx_lp = k_lp - w_lp**2 * ds_lp
            # Iterative refinement of the normal equations: the exact direction
            # satisfies A(dX) = r_p; correct the round-off in one extra solve.
            for _ in range(2):
                res = r_p - std.op(dx, dx_lp)
                if not np.any(res):
                    break
                dy_c = solve_m(res)
                at_c, at_c_lp = std.adj(dy_c)
                dy = dy + dy_c
                ds = [d - a for d, a in zip(ds, at_c)]
                ds_lp = ds_lp - at_c_lp
                dx = [d + sc.w @ a @ sc.w for d, sc, a in zip(dx, scal, at_c)]
                dx_lp = dx_lp + w_lp**2 * at_c_lp
            dx = [hermitize(d) for d in dx]
            ds = [hermitize(d) for d in ds]
            return dx, dx_lp, dy, ds, ds_lp

        def steps(dx, dx_lp, ds, ds_lp):
            ap, ad = np.inf, np.inf
            dx_sc, ds_sc = [], []
            for sc, d1, d2 in zip(scal, dx, ds):
                t1 = sc.g_inv @ d1 @ sc.g_inv.conj().T
                t2 = sc.g.conj().T @ d2 @ sc.g
                dx_sc.append(t1)
                ds_sc.append(t2)
                ap = min(ap, _max_step_psd(sc.lam, t1))
                ad = min(ad, _max_step_psd(sc.lam, t2))
            ap = min(ap, _max_step_lp(x_lp, dx_lp))
            ad = min(ad, _max_step_lp(s_lp, ds_lp))
            return ap, ad, dx_sc, ds_sc

        # Predictor (affine scaling): complementarity target zero.
        k_aff = [-x for x in xs]
        k_aff_lp = -x_lp
        dxa, dxa_lp, _, dsa, dsa_lp = direction(k_aff, k_aff_lp)
        apa, ada, dxa_sc, dsa_sc = steps(dxa, dxa_lp, dsa, dsa_lp)
        apa, ada = min(1.0, apa), min(1.0, ada)
        mu_aff = (
            std.inner(
                [x + apa * d for x, d in zip(xs, dxa)], x_lp + apa * dxa_lp,
                [s + ada * d for s, d in zip(ss, dsa)], s_lp + ada * dsa_lp,
            )
            / std.nu
        )
        sigma = float(np.clip((max(mu_aff, 0.0) / mu) ** 3, 0.0, 1.0)) if mu > 0 else 0.0
        # After a blocked step, lean towards the central path to recover centrality.
        if prev_step < opts.recenter_below:
            sigma = max(sigma, (1.0 - prev_step) ** 2)
        # Corrector: rc = sigma mu I - lam^2 - sym(dX~ dS~).
        k_cor = []
        for sc, t1, t2 in zip(scal, dxa_sc, dsa_sc):
            lam = sc.lam
            prod = t1 @ t2
            rc = -0.5 * (prod + prod.conj().T)
            rc[np.diag_indices_from(rc)] += sigma * mu - lam**2
            u = 2.0 * rc / (lam[:, None] + lam[None, :])
            k_cor.append(sc.g @ u @ sc.g.conj().T)
        t1_lp = dxa_lp / w_lp
        t2_lp = dsa_lp * w_lp
        rc_lp = sigma * mu - lam_lp**2 - t1_lp * t2_lp
        k_cor_lp = w_lp * rc_lp / lam_lp
        dx, dx_lp, dy, ds, ds_lp = direction(k_cor, k_cor_lp)
        ap, ad, _, _ = steps(dx, dx_lp, ds, ds_lp)
        gamma = max(opts.step_factor, 0.9 + 0.09 * min(apa, ada))
        ap = min(1.0, gamma * ap)
        ad = min(1.0, gamma * ad)
        prev_step = min(ap, ad)
        logger.debug(
            "it %3d pobj % .10e dobj % .10e pres %.2e dres %.2e mu %.2e sigma %.2e ap %.3f ad %.3f",
            it, pobj, dobj, pres, dres, mu, sigma, ap, ad,
        )
        xs = [hermitize(x + ap * d) for x, d in zip(xs, dx)]
        x_lp = x_lp + ap * dx_lp
        y = y + ad * dy
        ss = [hermitize(s + ad * d) for s, d in zip(ss, ds)]
        s_lp = s_lp + ad * ds_lp
        if not (np.all(np.isfinite(x_lp)) and np.all(np.isfinite(y))):
            status = "numerical"
            break

    if status in ("infeasible_primal", "infeasible_dual"):
        final = snapshot((float("nan"),) * 4)
    else:
        final = best if best is not None else snapshot((float("nan"),) * 4)
    return _assemble(problem, std, final, status, it)


def _assemble(problem: SdpProblem, std: _Standard, snap, status: str, iterations: int) -> SdpSolution:
    xs, x_lp, y_red, ss, s_lp, (pobj, dobj, pres, dres) = snap
    sign = std.sign
    n_blocks = len(problem.block_dims)
    x_out: list[np.ndarray] = [None] * n_blocks  # type: ignore[list-item]
    s_out: list[np.ndarray] = [None] * n_blocks  # type: ignore[list-item]
    for k, j in enumerate(std.psd_idx):
        x_out[j] = xs[k]
        s_out[j] = ss[k]
    for k, j in enumerate(std.lp_idx):
        x_out[j] = np.array([[x_lp[k]]], dtype=complex)
        s_out[j] = np.array([[s_lp[k]]], dtype=complex)
    y_full = np.zeros(problem.num_constraints)
    y_full[std.keep_rows] = y_red
    slacks = x_lp[len(std.lp_idx):]
    p = sign * pobj if np.isfinite(pobj) else float("nan")
    d = sign * dobj if np.isfinite(dobj) else float("nan")
    gap = abs(p - d) if np.isfinite(p) and np.isfinite(d) else float("inf")
    return SdpSolution(
        X=x_out,
        y=sign * y_full,
        S=s_out,
        primal_obj=p,
        dual_obj=d,
        gap=gap,
        status=status,
        iterations=iterations,
        primal_residual=pres,
        dual_residual=dres,
        slacks=slacks,
    )


def _infeasible_result(problem: SdpProblem, std: _Standard) -> SdpSolution:
    n_blocks = len(problem.block_dims)
    zeros = [np.zeros((n, n), dtype=complex) for n in problem.block_dims]
    nan = float("nan")
    return SdpSolution(
        zeros, np.zeros(problem.num_constraints), [z.copy() for z in zeros], nan, nan,
        float("inf"), "infeasible_primal", 0,
    )


def complementarity_residual(sol: SdpSolution) -> float:
    """Frobenius norm of the block-diagonal product ``X S``."""
    total = 0.0
    for x, s in zip(sol.X, sol.S):
        total += float(np.linalg.norm(x @ s)) ** 2
    return float(np.sqrt(total))
