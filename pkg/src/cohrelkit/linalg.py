"""Dense complex-Hermitian linear algebra and distance measures on quantum states.

Every operator in the package is a plain ``numpy.ndarray`` of shape ``(d, d)``
(complex dtype).  Hermiticity is an invariant checked at the public boundaries
of this module and enforced by symmetrisation internally.

Conventions
-----------
* Tensor products use the row-major Kronecker ordering: the leftmost subsystem
  is the most significant index.
* All support / pseudo-inverse decisions use a single relative rank threshold,
  :data:`RANK_TOL`, measured against the largest eigenvalue magnitude.
* Logarithms of operators are taken in base 2, matching the entropy module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

RANK_TOL = 1e-9
"""Relative eigenvalue threshold below which an eigenvalue counts as zero."""

HERMITIAN_ATOL = 1e-12
"""Absolute tolerance on ``|A_ij - conj(A_ji)|`` accepted as Hermitian."""

HERMITIAN_RTOL = 1e-10
"""Relative (to the largest entry) tolerance added to :data:`HERMITIAN_ATOL`."""

JSON_HERMITIAN_TOL = 1e-9
"""Tolerance used when reading matrices from JSON payloads."""

TRACE_TOL = 1e-9
"""Amount by which the trace of a (sub)normalised state may exceed one."""

NEGATIVE_TOL = 1e-10
"""Magnitude of negative eigenvalues that are clamped to zero in :func:`psd_fn`."""


class LinalgError(ValueError):
    """Raised when an input violates a precondition of this module."""


# ---------------------------------------------------------------------------
# Basic types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemDims:
    """Ordered list of labelled subsystems.

    Example:
        >>> dims = SystemDims.of(X=2, R=3)
        >>> dims.total
        6
    """

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.dims):
            raise LinalgError("labels and dims must have equal length")
        if len(set(self.labels)) != len(self.labels):
            raise LinalgError(f"duplicate subsystem labels in {self.labels}")
        if any(int(d) < 1 for d in self.dims):
            raise LinalgError("subsystem dimensions must be positive")

    @classmethod
    def of(cls, **pairs: int) -> "SystemDims":
        return cls(tuple(pairs.keys()), tuple(int(v) for v in pairs.values()))

    @classmethod
    def from_list(cls, pairs: Sequence[tuple[str, int]]) -> "SystemDims":
        return cls(tuple(p[0] for p in pairs), tuple(int(p[1]) for p in pairs))

    @property
    def total(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError as exc:
            raise LinalgError(f"unknown subsystem label {label!r}") from exc

    def keep(self, labels: Iterable[str]) -> "SystemDims":
        wanted = set(labels)
        pairs = [(l, d) for l, d in zip(self.labels, self.dims) if l in wanted]
        return SystemDims.from_list(pairs)

    def check(self, matrix: np.ndarray) -> None:
        if matrix.shape != (self.total, self.total):
            raise LinalgError(
                f"matrix of shape {matrix.shape} does not match dims {self} "
                f"(total {self.total})"
            )

    def to_json(self) -> list[dict]:
        return [{"label": l, "d": d} for l, d in zip(self.labels, self.dims)]


class PsdDecomposition(NamedTuple):
    """Eigen-decomposition ``A = V diag(w) V^dagger``.

    Attributes:
        eigenvalues: real eigenvalues in nonincreasing order.
        eigenvectors: unitary matrix whose columns are the eigenvectors.
        rank: number of eigenvalues above ``rank_tol * max|eigenvalue|``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int


# ---------------------------------------------------------------------------
# Hermiticity helpers
# ---------------------------------------------------------------------------


def hermitian_defect(a: np.ndarray) -> float:
    """Largest entrywise deviation ``max |A - A^dagger|``."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)))


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL, rtol: float = HERMITIAN_RTOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    return hermitian_defect(a) <= atol + rtol * scale


def as_hermitian(
    a: np.ndarray,
    *,
    atol: float = HERMITIAN_ATOL,
    rtol: float = HERMITIAN_RTOL,
    name: str = "matrix",
) -> np.ndarray:
    """Validate Hermiticity and return the symmetrised complex copy."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError(f"{name} must be a square matrix, got shape {a.shape}")
    if not is_hermitian(a, atol, rtol):
        raise LinalgError(
            f"{name} is not Hermitian (defect {hermitian_defect(a):.3e})"
        )
    return hermitize(a)


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return ``(A + A^dagger)/2`` without validation."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


# ---------------------------------------------------------------------------
# Eigen-decomposition
# ---------------------------------------------------------------------------


def jacobi_eigh(
    a: np.ndarray, *, tol: float = 1e-15, max_sweeps: int = 60
) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigenvalue algorithm for complex Hermitian matrices.

    Each sweep visits the off-diagonal pairs ``(p, q)``, ``p < q``, in row-major
    order, removes the phase of ``A[p, q]`` with a diagonal unitary and then
    annihilates the now-real entry with a plane rotation.  The sweep order is
    fixed, so the result is reproducible bit-for-bit.

    Args:
        a: Hermitian matrix.
        tol: sweeps stop once the off-diagonal Frobenius norm falls below
            ``tol * ||A||_F``.
        max_sweeps: hard cap on the number of sweeps.

    Returns:
        ``(w, V)`` with ascending eigenvalues ``w`` and unitary ``V`` such that
        ``A = V diag(w) V^dagger``.
    """
    a = hermitize(a).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = np.linalg.norm(a)
    if n <= 1 or norm == 0.0:
        w = np.real(np.diag(a)).copy()
        return w, v
    threshold = tol * norm
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300 or r < 1e-18 * threshold:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # Two-by-two unitary: diag(1, conj(phase)) followed by [[c, s], [-s, c]].
                u = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ u
    w = np.real(np.diag(a)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eig_hermitian(
    a: np.ndarray, *, rank_tol: float = RANK_TOL, method: str = "lapack"
) -> PsdDecomposition:
    """Eigen-decomposition of a Hermitian matrix.

    Args:
        a: Hermitian matrix (validated).
        rank_tol: relative threshold used to count the rank.
        method: ``"lapack"`` (``numpy.linalg.eigh``, the default) or
            ``"jacobi"`` (the pure-numpy cyclic Jacobi sweep, slower but
            dependency-free and deterministic across platforms).

    Returns:
        PsdDecomposition with eigenvalues sorted in nonincreasing order.

    Raises:
        LinalgError: if ``a`` is not Hermitian.
    """
    a = as_hermitian(a)
    if method == "lapack":
        w, v = np.linalg.eigh(a)
    elif method == "jacobi":
        w, v = jacobi_eigh(a)
    else:
        raise LinalgError(f"unknown eigensolver {method!r}")
    w = w[::-1].copy()
    v = v[:, ::-1].copy()
    return PsdDecomposition(w, v, _rank_from_eigenvalues(w, rank_tol))


def _rank_from_eigenvalues(w: np.ndarray, rank_tol: float) -> int:
    if w.size == 0:
        return 0
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        return 0
    return int(np.sum(w > rank_tol * scale))


def _eigh_fast(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigh of a symmetrised copy, without validation."""
    return np.linalg.eigh(hermitize(a))


# ---------------------------------------------------------------------------
# Functions of positive semidefinite operators
# ---------------------------------------------------------------------------

_PSD_FUNCTIONS = ("sqrt", "pinv", "inv_sqrt_pinv", "log_on_support")


def psd_fn(a: np.ndarray, fn: str, *, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Apply a scalar function to the spectrum of a positive semidefinite matrix.

    Supported functions act on the eigenvalues above the rank threshold; the
    remaining (kernel) eigenvalues are mapped to zero, i.e. generalised
    inverses and logarithms are taken on the support.

    * ``sqrt``: ``A^{1/2}``
    * ``pinv``: ``A^{-1}`` on the support
    * ``inv_sqrt_pinv``: ``A^{-1/2}`` on the support
    * ``log_on_support``: ``log2 A`` on the support

    Negative eigenvalues down to ``-NEGATIVE_TOL * max(1, ||A||)`` are clamped
    to zero.

    Raises:
        LinalgError: for unknown ``fn``, clearly indefinite input, or when an
            inverse/logarithm of the zero matrix is requested.
    """
    if fn not in _PSD_FUNCTIONS:
        raise LinalgError(f"unknown psd function {fn!r}; choose from {_PSD_FUNCTIONS}")
    a = as_hermitian(a)
    w, v = _eigh_fast(a)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if w.size and w[0] < -NEGATIVE_TOL * max(1.0, scale):
        raise LinalgError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    support = w > rank_tol * scale if scale > 0 else np.zeros_like(w, dtype=bool)
    if fn != "sqrt" and not np.any(support):
        raise LinalgError(f"{fn} of the zero matrix is undefined")
    out = np.zeros_like(w)
    if fn == "sqrt":
        out = np.sqrt(w)
    elif fn == "pinv":
        out[support] = 1.0 / w[support]
    elif fn == "inv_sqrt_pinv":
        out[support] = 1.0 / np.sqrt(w[support])
    else:
        out[support] = np.log2(w[support])
    return hermitize((v * out) @ v.conj().T)


def sqrtm_psd(a: np.ndarray) -> np.ndarray:
    return psd_fn(a, "sqrt")


def support_projector(a: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthogonal projector onto the support (range) of a PSD matrix."""
    basis = support_basis(a, rank_tol)
    return basis @ basis.conj().T


def support_basis(a: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Isometry ``V`` (``d x r``) whose columns span the support of ``A``.

    Columns are eigenvectors ordered by nonincreasing eigenvalue.
    """
    a = as_hermitian(a)
    w, v = _eigh_fast(a)
    w, v = w[::-1], v[:, ::-1]
    r = _rank_from_eigenvalues(w, rank_tol)
    return np.ascontiguousarray(v[:, :r])


def positive_part(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a Hermitian matrix as ``A = Delta_plus - Delta_minus``.

    Both parts are positive semidefinite with orthogonal supports; for
    ``A = sigma - rho`` this is the optimal solution of the trace-distance SDP
    and ``tr Delta_plus + tr Delta_minus = ||A||_1``.
    """
    w, v = _eigh_fast(a)
    plus = (v * np.clip(w, 0.0, None)) @ v.conj().T
    minus = (v * np.clip(-w, 0.0, None)) @ v.conj().T
    return hermitize(plus), hermitize(minus)


def opnorm(a: np.ndarray) -> float:
    """Operator (spectral) norm of a Hermitian matrix."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    w = np.linalg.eigvalsh(hermitize(a))
    return float(np.max(np.abs(w)))


def trace_norm(a: np.ndarray) -> float:
    """Schatten-1 norm ``||A||_1`` (sum of singular values)."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


# ---------------------------------------------------------------------------
# Tensor structure
# ---------------------------------------------------------------------------


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of the arguments, leftmost factor most significant."""
    if not ops:
        return np.ones((1, 1), dtype=complex)
    out = np.asarray(ops[0])
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op))
    return out


def partial_trace(
    a: np.ndarray, dims: SystemDims | Sequence[int], keep: Iterable[str] | Iterable[int]
) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Args:
        a: operator on the joint space described by ``dims``.
        dims: a :class:`SystemDims` or a plain list of dimensions.
        keep: labels (with :class:`SystemDims`) or integer positions of the
            subsystems to keep.  Kept subsystems retain their original order.

    Raises:
        LinalgError: on dimension mismatch or unknown labels.
    """
    if not isinstance(dims, SystemDims):
        dims = SystemDims(tuple(f"s{i}" for i in range(len(dims))), tuple(int(d) for d in dims))
    a = np.asarray(a)
    dims.check(a)
    keep_idx = sorted(
        {dims.index(k) if isinstance(k, str) else int(k) for k in keep}
    )
    for k in keep_idx:
        if not 0 <= k < len(dims.dims):
            raise LinalgError(f"subsystem index {k} out of range")
    n = len(dims.dims)
    t = a.reshape(dims.dims + dims.dims)
    traced = [i for i in range(n) if i not in keep_idx]
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters) + 26:
        raise LinalgError("too many subsystems")
    row = [letters[i] for i in range(n)]
    col = [letters[i].upper() for i in range(n)]
    for i in traced:
        col[i] = row[i]
    out_row = "".join(row[i] for i in keep_idx)
    out_col = "".join(col[i] for i in keep_idx)
    expr = "".join(row) + "".join(col) + "->" + out_row + out_col
    res = np.einsum(expr, t)
    d = int(np.prod([dims.dims[i] for i in keep_idx], dtype=np.int64)) if keep_idx else 1
    return res.reshape(d, d)


def ptrace_first(a: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """``tr_1`` of an operator on ``C^{d1} (x) C^{d2}``."""
    return np.einsum("ijik->jk", np.asarray(a).reshape(d1, d2, d1, d2))


def ptrace_second(a: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """``tr_2`` of an operator on ``C^{d1} (x) C^{d2}``."""
    return np.einsum("ijkj->ik", np.asarray(a).reshape(d1, d2, d1, d2))


def permute_systems(a: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor ``k`` is input factor ``perm[k]``."""
    dims = [int(d) for d in dims]
    n = len(dims)
    t = np.asarray(a).reshape(dims + dims)
    t = t.transpose(list(perm) + [p + n for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def permute_vector(v: np.ndarray, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    dims = [int(d) for d in dims]
    return np.asarray(v).reshape(dims).transpose(list(perm)).reshape(-1)


def mirror_transpose(a: np.ndarray, dims: SystemDims | None = None, target: str | None = None):
    """Transpose ``t_{X->R}`` in the fixed computational basis.

    ``t(|k><l|) = |l><k|``; for Hermitian input this is entrywise complex
    conjugation.  When ``dims``/``target`` are given, the relabelled
    :class:`SystemDims` is returned as well.

    Raises:
        LinalgError: if ``dims`` does not match the matrix, or the target
            dimension differs from the source dimension.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise LinalgError("mirror_transpose expects a square matrix")
    out = a.T.copy()
    if dims is None:
        return out
    dims.check(a)
    if target is None:
        return out
    if len(dims.labels) != 1:
        raise LinalgError("mirror_transpose relabels a single subsystem")
    return out, SystemDims((target,), dims.dims)


def max_entangled_ket(d: int) -> np.ndarray:
    """Unnormalised ``|Phi> = sum_k |k>|k>`` on ``C^d (x) C^d``."""
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0
    return v


def max_entangled_op(d: int) -> np.ndarray:
    """Unnormalised projector ``|Phi><Phi|``."""
    v = max_entangled_ket(d)
    return np.outer(v, v.conj())


def entangled_ket(sigma: np.ndarray) -> np.ndarray:
    """Standard purification ``(sigma^{1/2} (x) I)|Phi>`` of a density matrix.

    The reduced state on the first factor is ``sigma`` and on the second
    factor (the mirror system) it is ``sigma^T``.

    Raises:
        LinalgError: if ``sigma`` is not a normalised density matrix.
    """
    sigma = as_hermitian(sigma, name="sigma")
    tr = float(np.real(np.trace(sigma)))
    if abs(tr - 1.0) > 1e-10:
        raise LinalgError(f"entangled_ket expects a normalised state (trace {tr:.12g})")
    root = psd_fn(sigma, "sqrt")
    return root.reshape(-1).astype(complex)


def standard_purification(sigma: np.ndarray) -> np.ndarray:
    """Density operator of :func:`entangled_ket` (``sigma^{1/2} Phi sigma^{1/2}``)."""
    v = entangled_ket(sigma)
    return np.outer(v, v.conj())


# ---------------------------------------------------------------------------
# Distance measures
# ---------------------------------------------------------------------------


def _check_subnormalized(rho: np.ndarray, name: str) -> tuple[np.ndarray, float]:
    rho = as_hermitian(rho, atol=1e-10, rtol=1e-9, name=name)
    tr = float(np.real(np.trace(rho)))
    if tr > 1.0 + TRACE_TOL:
        raise LinalgError(f"{name} has trace {tr:.12g} > 1")
    if tr < -TRACE_TOL:
        raise LinalgError(f"{name} has negative trace")
    return rho, min(max(tr, 0.0), 1.0)


def _psd_sqrt_fast(a: np.ndarray) -> np.ndarray:
    w, v = _eigh_fast(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


FIDELITY_RANK_TOL = 1e-14
"""Relative eigenvalue cutoff below which spectral noise is dropped in :func:`fidelity`."""


def _sqrt_factor(a: np.ndarray) -> np.ndarray:
    """Factor ``B`` (``d x r``) with ``B B^dagger = A`` on the numerical support of ``A``.

    Dropping eigenvalues at round-off level keeps their square roots (of
    order ``1e-8``) from polluting fidelities of rank-deficient states.
    """
    w, v = _eigh_fast(a)
    keep = w > FIDELITY_RANK_TOL * max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    return v[:, keep] * np.sqrt(w[keep])[None, :]


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Generalised fidelity ``||sqrt(rho) sqrt(sigma)||_1 + sqrt((1-tr rho)(1-tr sigma))``.

    Defined for subnormalised states; reduces to the usual root fidelity for
    normalised states.
    """
    rho, tr_r = _check_subnormalized(rho, "rho")
    sigma, tr_s = _check_subnormalized(sigma, "sigma")
    f = trace_norm(_sqrt_factor(rho).conj().T @ _sqrt_factor(sigma))
    f += np.sqrt((1.0 - tr_r) * (1.0 - tr_s))
    return float(min(max(f, 0.0), 1.0))


def purified_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Purified distance ``sqrt(1 - F^2)`` with the generalised fidelity."""
    f = fidelity(rho, sigma)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Generalised trace distance ``||rho-sigma||_1/2 + |tr rho - tr sigma|/2``."""
    rho, tr_r = _check_subnormalized(rho, "rho")
    sigma, tr_s = _check_subnormalized(sigma, "sigma")
    d = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma)))) + 0.5 * abs(tr_r - tr_s)
    return float(min(max(d, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Constructive smoothing utilities
# ---------------------------------------------------------------------------


def project_normalize(rho: np.ndarray, projector: np.ndarray) -> np.ndarray:
    """Return ``P rho P / tr(P rho)``.

    For normalised ``rho`` with ``tr(P rho) >= 1 - eps`` the output is within
    purified distance ``sqrt(2 eps)/sqrt(1 - eps)`` of ``rho``.

    Raises:
        LinalgError: if ``tr(P rho)`` vanishes.
    """
    rho = as_hermitian(rho, atol=1e-10, rtol=1e-9, name="rho")
    p = as_hermitian(projector, atol=1e-10, rtol=1e-9, name="projector")
    w = float(np.real(np.trace(p @ rho)))
    if w <= 1e-14:
        raise LinalgError("projector annihilates the state (tr(P rho) = 0)")
    return hermitize(p @ rho @ p) / w


def gentle_measurement_bound(eps: float) -> float:
    """Upper bound ``sqrt(2 eps)/sqrt(1-eps)`` on ``P(rho, P rho P/tr)``."""
    if not 0.0 <= eps < 1.0:
        raise LinalgError("eps must lie in [0, 1)")
    return float(np.sqrt(2.0 * eps) / np.sqrt(1.0 - eps))


@dataclass(frozen=True)
class MarginalMatch:
    """Output of :func:`match_marginal_details`."""

    state: np.ndarray
    kraus: np.ndarray
    filler: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    delta: float


def match_marginal_details(
    rho_ab: np.ndarray, target_a: np.ndarray, dims: Sequence[int]
) -> MarginalMatch:
    """Smooth the ``A`` marginal of ``rho_AB`` to ``target_a``, keeping ``B`` exact.

    The construction applies to system ``A`` the trace-preserving map
    ``M(X) = K X K^dagger + tr[(I - K^dagger K) X] xi`` with
    ``K = target^{1/2} (target + Delta_minus)^{-1/2}`` where
    ``target - rho_A = Delta_plus - Delta_minus`` and
    ``xi = K Delta_plus K^dagger / tr(...)`` (maximally mixed if that trace
    vanishes).  The resulting state has marginals ``target`` on ``A`` and
    ``rho_B`` on ``B`` and lies within purified distance ``2 sqrt(2 delta)``
    where ``delta`` is the trace distance of the two ``A`` marginals.
    """
    d_a, d_b = (int(x) for x in dims)
    rho_ab, tr_ab = _check_subnormalized(rho_ab, "rho_ab")
    target_a, tr_t = _check_subnormalized(target_a, "target_a")
    if rho_ab.shape != (d_a * d_b, d_a * d_b) or target_a.shape != (d_a, d_a):
        raise LinalgError("dimension mismatch in match_marginal")
    if abs(tr_ab - 1.0) > 1e-8 or abs(tr_t - 1.0) > 1e-8:
        raise LinalgError("match_marginal expects normalised inputs")
    rho_a = ptrace_second(rho_ab, d_a, d_b)
    delta_plus, delta_minus = positive_part(target_a - rho_a)
    anchor = target_a + delta_minus
    kraus = _psd_sqrt_fast(target_a) @ psd_fn(anchor, "inv_sqrt_pinv")
    leak = kraus @ delta_plus @ kraus.conj().T
    leak_tr = float(np.real(np.trace(leak)))
    if leak_tr > 1e-14:
        filler = hermitize(leak) / leak_tr
    else:
        filler = np.eye(d_a, dtype=complex) / d_a
    complement = np.eye(d_a) - kraus.conj().T @ kraus
    big_k = np.kron(kraus, np.eye(d_b))
    state = big_k @ rho_ab @ big_k.conj().T
    # tr_A[(I - K^dag K) (x) I  rho_AB] gives the B-operator weighting the filler.
    weight_b = ptrace_first(np.kron(complement, np.eye(d_b)) @ rho_ab, d_a, d_b)
    state = state + np.kron(filler, hermitize(weight_b))
    delta = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(target_a - rho_a))))
    return MarginalMatch(hermitize(state), kraus, filler, delta_plus, delta_minus, delta)


def match_marginal(rho_ab: np.ndarray, target_a: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """State with ``A``-marginal ``target_a`` and unchanged ``B``-marginal.

    See :func:`match_marginal_details` for the construction and guarantees.
    """
    return match_marginal_details(rho_ab, target_a, dims).state


def match_marginal_bound(delta: float) -> float:
    """Purified-distance guarantee ``2 sqrt(2 delta)`` of :func:`match_marginal`."""
    return float(2.0 * np.sqrt(2.0 * max(delta, 0.0)))


# ---------------------------------------------------------------------------
# Hermitian operator bases
# ---------------------------------------------------------------------------


def hermitian_basis(n: int) -> np.ndarray:
    """Orthonormal basis of ``n x n`` Hermitian matrices (Hilbert-Schmidt inner product).

    Order: the diagonal units ``E_ii``; then, for ``i < j``, all symmetric
    elements ``(E_ij + E_ji)/sqrt 2``; then all antisymmetric elements
    ``i (E_ij - E_ji)/sqrt 2``.

    Returns:
        Array of shape ``(n*n, n, n)``.
    """
    basis = np.zeros((n * n, n, n), dtype=complex)
    k = 0
    for i in range(n):
        basis[k, i, i] = 1.0
        k += 1
    s = 1.0 / np.sqrt(2.0)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for i, j in pairs:
        basis[k, i, j] = s
        basis[k, j, i] = s
        k += 1
    for i, j in pairs:
        basis[k, i, j] = 1j * s
        basis[k, j, i] = -1j * s
        k += 1
    return basis


def offdiagonal_basis(rows: int, cols: int) -> np.ndarray:
    """Hermitian elements supported on the off-diagonal block of a ``(rows+cols)`` matrix.

    Pairing with these elements extracts the real and imaginary parts of the
    ``rows x cols`` upper-right block; the set spans exactly the Hermitian
    matrices of the form ``[[0, B], [B^dagger, 0]]``.
    """
    n = rows + cols
    basis = np.zeros((2 * rows * cols, n, n), dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    k = 0
    for i in range(rows):
        for j in range(cols):
            basis[k, i, rows + j] = s
            basis[k, rows + j, i] = s
            k += 1
            basis[k, i, rows + j] = 1j * s
            basis[k, rows + j, i] = -1j * s
            k += 1
    return basis


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def matrix_to_json(a: np.ndarray, dims: SystemDims | None = None) -> dict:
    """Serialise a matrix as ``{"dims": [...], "re": [[...]], "im": [[...]]}``."""
    a = np.asarray(a, dtype=complex)
    if dims is None:
        dims = SystemDims(("A",), (a.shape[0],))
    dims.check(a)
    return {"dims": dims.to_json(), "re": a.real.tolist(), "im": a.imag.tolist()}


def matrix_from_json(payload: dict, *, hermitian: bool = True) -> tuple[np.ndarray, SystemDims]:
    """Parse the JSON matrix format; rejects non-Hermitian data beyond 1e-9.

    Raises:
        LinalgError: on malformed payloads, dimension mismatch or
            non-Hermitian matrices.
    """
    try:
        re = np.asarray(payload["re"], dtype=float)
        im = np.asarray(payload.get("im", np.zeros_like(re)), dtype=float)
        dims_raw = payload.get("dims")
    except (KeyError, TypeError, ValueError) as exc:
        raise LinalgError(f"malformed matrix payload: {exc}") from exc
    if re.ndim != 2 or re.shape != im.shape or re.shape[0] != re.shape[1]:
        raise LinalgError("matrix payload must contain square 're' and 'im' arrays")
    a = re + 1j * im
    if dims_raw is None:
        dims = SystemDims(("A",), (a.shape[0],))
    else:
        try:
            dims = SystemDims.from_list([(str(d["label"]), int(d["d"])) for d in dims_raw])
        except (KeyError, TypeError, ValueError) as exc:
            raise LinalgError(f"malformed dims entry: {exc}") from exc
    dims.check(a)
    if hermitian:
        if hermitian_defect(a) > JSON_HERMITIAN_TOL:
            raise LinalgError(
                f"payload is not Hermitian (defect {hermitian_defect(a):.3e} > {JSON_HERMITIAN_TOL})"
            )
        a = hermitize(a)
    return a, dims


def load_matrix(path: str, *, hermitian: bool = True) -> tuple[np.ndarray, SystemDims]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LinalgError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise LinalgError(f"{path}: expected a JSON object")
    return matrix_from_json(payload, hermitian=hermitian)


def save_matrix(path: str, a: np.ndarray, dims: SystemDims | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(matrix_to_json(a, dims), fh)
