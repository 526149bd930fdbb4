"""Channels as Choi matrices, process matrices and Gamma-sub-preserving constructions.

Conventions
-----------
* A map ``E: X -> X'`` is stored through its Choi matrix
  ``E_{X'R} = sum_ij E(|i><j|) (x) |i><j|`` on ``X' (x) R`` (output first), where
  ``R`` is a mirror copy of ``X``.  The action is
  ``E(rho) = tr_R[E_{X'R} (I (x) rho^T)]``.
* The process matrix of ``E`` on input ``sigma_X`` is
  ``rho_{X'R} = (I (x) sigma_R^{1/2}) E_{X'R} (I (x) sigma_R^{1/2})`` with
  ``sigma_R = sigma_X^T``; its ``R`` marginal is ``sigma_R`` whenever ``E`` is
  trace preserving.
* ``Gamma`` operators are positive semidefinite and need not be normalised.
  A map is Gamma-sub-preserving when ``E(Gamma_X) <= Gamma_X'``.

Random instances use numpy's counter-based ``Philox`` bit generator so that a
seed fixes every draw.
"""

from __future__ import annotations

import json
from dataclasses import InitVar, dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.linalg import expm

from . import linalg as la
from .linalg import SystemDims

CHOI_TOL = 1e-9
"""Tolerance on complete positivity and on ``tr_X' E <= I`` for :class:`ChoiMap`."""

STATE_TOL = 1e-9
GAMMA_PSD_TOL = 1e-10
COMMUTATOR_TOL = 1e-9
SUBPRESERVING_TOL = 1e-9
LEAK_TOL = 1e-9

TP_CLASSES = ("trace_preserving", "trace_nonincreasing")


class ProcessError(ValueError):
    """Raised for invalid maps, states or violated preconditions.

    Attributes:
        leaked_norm: for support violations, the operator norm of the part of
            the offending operator outside the admissible support.
    """

    def __init__(self, message: str, leaked_norm: float | None = None) -> None:
        super().__init__(message)
        self.leaked_norm = leaked_norm


def _dims(d: int | SystemDims, label: str) -> SystemDims:
    if isinstance(d, SystemDims):
        return d
    return SystemDims((label,), (int(d),))


def _mirror_dims(dims: SystemDims) -> SystemDims:
    return SystemDims(tuple(f"R_{l}" for l in dims.labels), dims.dims)


def _psd_min_eig(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(la.hermitize(a))[0]) if a.size else 0.0


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChoiMap:
    """A completely positive, trace-nonincreasing map stored as a Choi matrix.

    Attributes:
        choi: Choi matrix on ``X' (x) R_X`` (output factor first).
        dims_in: subsystem structure of the input ``X``.
        dims_out: subsystem structure of the output ``X'``.
        tp_class: ``"trace_preserving"`` or ``"trace_nonincreasing"``.

    The constructor checks complete positivity and ``tr_X' E <= I`` (with
    equality for trace-preserving maps) to :data:`CHOI_TOL`.  Pass
    ``check=False`` to skip validation for intermediate objects.
    """

    choi: np.ndarray
    dims_in: SystemDims
    dims_out: SystemDims
    tp_class: str = "trace_nonincreasing"
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        object.__setattr__(self, "choi", np.asarray(self.choi, dtype=complex))
        if self.tp_class not in TP_CLASSES:
            raise ProcessError(f"tp_class must be one of {TP_CLASSES}, got {self.tp_class!r}")
        n = self.dims_in.total * self.dims_out.total
        if self.choi.shape != (n, n):
            raise ProcessError(
                f"Choi matrix shape {self.choi.shape} does not match "
                f"{self.dims_out.total} x {self.dims_in.total} systems"
            )
        if check:
            self.validate()

    @property
    def d_in(self) -> int:
        return self.dims_in.total

    @property
    def d_out(self) -> int:
        return self.dims_out.total

    @property
    def dims(self) -> SystemDims:
        """Joint structure ``X' (x) R_X`` of the Choi matrix."""
        mirror = _mirror_dims(self.dims_in)
        return SystemDims(self.dims_out.labels + mirror.labels, self.dims_out.dims + mirror.dims)

    def validate(self, tol: float = CHOI_TOL) -> None:
        """Check complete positivity and the trace condition.

        Raises:
            ProcessError: with a message naming the violated condition.
        """
        if la.hermitian_defect(self.choi) > 1e-9 * max(1.0, float(np.max(np.abs(self.choi)))):
            raise ProcessError("Choi matrix is not Hermitian")
        min_eig = _psd_min_eig(self.choi)
        if min_eig < -tol:
            raise ProcessError(f"map is not completely positive (min Choi eigenvalue {min_eig:.3e})")
        excess = la.hermitize(self.trace_operator() - np.eye(self.d_in))
        w = np.linalg.eigvalsh(excess)
        if w[-1] > tol:
            raise ProcessError(f"map is not trace nonincreasing (tr_X' E exceeds I by {w[-1]:.3e})")
        if self.tp_class == "trace_preserving" and w[0] < -tol:
            raise ProcessError(f"map is not trace preserving (tr_X' E deviates by {max(abs(w)):.3e})")

    def trace_operator(self) -> np.ndarray:
        """``tr_X' E_{X'R} = E^dagger(I)^T`` on the mirror system."""
        return la.ptrace_first(self.choi, self.d_out, self.d_in)

    def is_trace_preserving(self, tol: float = CHOI_TOL) -> bool:
        return la.opnorm(self.trace_operator() - np.eye(self.d_in)) <= tol

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)

    def kraus(self, rank_tol: float = 1e-12) -> np.ndarray:
        """Kraus operators ``K_k`` (array ``(r, d_out, d_in)``) from the Choi eigendecomposition."""
        w, v = np.linalg.eigh(la.hermitize(self.choi))
        keep = w > rank_tol * max(1.0, float(np.max(np.abs(w))))
        ops = [np.sqrt(wk) * v[:, k].reshape(self.d_out, self.d_in) for k, wk in zip(np.flatnonzero(keep), w[keep])]
        if not ops:
            return np.zeros((1, self.d_out, self.d_in), dtype=complex)
        return np.array(ops)

    def to_json(self) -> dict:
        payload = la.matrix_to_json(self.choi, self.dims)
        payload["dims_in"] = self.dims_in.to_json()
        payload["dims_out"] = self.dims_out.to_json()
        payload["tp_class"] = self.tp_class
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "ChoiMap":
        try:
            choi, _ = la.matrix_from_json(payload)
            dims_in = SystemDims.from_list([(str(d["label"]), int(d["d"])) for d in payload["dims_in"]])
            dims_out = SystemDims.from_list([(str(d["label"]), int(d["d"])) for d in payload["dims_out"]])
            tp_class = str(payload.get("tp_class", "trace_nonincreasing"))
        except (KeyError, TypeError, ValueError) as exc:
            raise ProcessError(f"malformed channel payload: {exc}") from exc
        return cls(choi, dims_in, dims_out, tp_class)


@dataclass(frozen=True)
class ProcessMatrix:
    """Normalised bipartite state ``rho_{X'R_X}`` encoding a process.

    Attributes:
        rho: density matrix on ``X' (x) R_X``.
        dims_out: structure of ``X'``.
        dims_in: structure of ``X`` (the reference ``R_X`` mirrors it).
    """

    rho: np.ndarray
    dims_out: SystemDims
    dims_in: SystemDims
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        rho = la.as_hermitian(np.asarray(self.rho, dtype=complex), atol=1e-10, rtol=1e-9, name="process matrix")
        object.__setattr__(self, "rho", rho)
        n = self.dims_out.total * self.dims_in.total
        if rho.shape != (n, n):
            raise ProcessError(f"process matrix shape {rho.shape} does not match dims ({n})")
        if check:
            tr = float(np.real(np.trace(rho)))
            if abs(tr - 1.0) > STATE_TOL:
                raise ProcessError(f"process matrix must have unit trace (got {tr:.12g})")
            m = _psd_min_eig(rho)
            if m < -STATE_TOL:
                raise ProcessError(f"process matrix is not positive semidefinite (min eigenvalue {m:.3e})")

    @classmethod
    def from_array(cls, rho: np.ndarray, d_out: int, d_in: int) -> "ProcessMatrix":
        return cls(rho, _dims(d_out, "X'"), _dims(d_in, "X"))

    @property
    def d_out(self) -> int:
        return self.dims_out.total

    @property
    def d_in(self) -> int:
        return self.dims_in.total

    @property
    def dims(self) -> SystemDims:
        mirror = _mirror_dims(self.dims_in)
        return SystemDims(self.dims_out.labels + mirror.labels, self.dims_out.dims + mirror.dims)

    @property
    def reduced_out(self) -> np.ndarray:
        """``rho_X'``."""
        return la.hermitize(la.ptrace_second(self.rho, self.d_out, self.d_in))

    @property
    def reduced_ref(self) -> np.ndarray:
        """``rho_R`` on the mirror system."""
        return la.hermitize(la.ptrace_first(self.rho, self.d_out, self.d_in))

    @property
    def input_state(self) -> np.ndarray:
        """``sigma_X = t(rho_R)``, the input the process acts on."""
        return la.mirror_transpose(self.reduced_ref)

    def to_json(self) -> dict:
        payload = la.matrix_to_json(self.rho, self.dims)
        payload["dims_out"] = self.dims_out.to_json()
        payload["dims_in"] = self.dims_in.to_json()
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "ProcessMatrix":
        """Parse a process matrix.

        The payload is the matrix JSON format; the split between output and
        reference is given either by ``dims_out``/``dims_in`` entries or by a
        two-entry ``dims`` list ``[X', R_X]``.
        """
        rho, dims = la.matrix_from_json(payload)
        try:
            if "dims_out" in payload and "dims_in" in payload:
                dims_out = SystemDims.from_list([(str(d["label"]), int(d["d"])) for d in payload["dims_out"]])
                dims_in = SystemDims.from_list([(str(d["label"]), int(d["d"])) for d in payload["dims_in"]])
            elif len(dims.dims) == 2:
                dims_out = SystemDims((dims.labels[0],), (dims.dims[0],))
                label = dims.labels[1][2:] if dims.labels[1].startswith("R_") else dims.labels[1]
                dims_in = SystemDims((label,), (dims.dims[1],))
            else:
                raise ProcessError("process matrix JSON needs dims_out/dims_in or a two-entry dims list")
        except (KeyError, TypeError, ValueError) as exc:
            raise ProcessError(f"malformed process payload: {exc}") from exc
        return cls(rho, dims_out, dims_in)


@dataclass(frozen=True)
class GammaOperator:
    """A positive semidefinite weight operator attached to a system label."""

    gamma: np.ndarray
    label: str = "X"

    def __post_init__(self) -> None:
        g = la.as_hermitian(np.asarray(self.gamma, dtype=complex), atol=1e-12, rtol=1e-10, name="Gamma")
        m = _psd_min_eig(g)
        if m < -GAMMA_PSD_TOL * max(1.0, la.opnorm(g)):
            raise ProcessError(f"Gamma operator is not positive semidefinite (min eigenvalue {m:.3e})")
        object.__setattr__(self, "gamma", g)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.gamma, dtype=dtype)

    @property
    def dim(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class BatterySpec:
    """Battery register ``W`` with charge states ``tau(P) = P Gamma_W P / tr(P Gamma_W)``.

    Attributes:
        gamma_w: Gamma operator of the battery.
        p_in: projector of the initial battery state.
        p_out: projector of the final battery state.
    """

    gamma_w: np.ndarray
    p_in: np.ndarray
    p_out: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(GammaOperator(np.asarray(self.gamma_w), "W").gamma)
        object.__setattr__(self, "gamma_w", g)
        for name in ("p_in", "p_out"):
            p = la.hermitize(np.asarray(getattr(self, name), dtype=complex))
            if p.shape != g.shape:
                raise ProcessError(f"{name} has shape {p.shape}, battery Gamma has {g.shape}")
            if la.opnorm(p @ p - p) > 1e-9:
                raise ProcessError(f"{name} is not a projector")
            comm = la.opnorm(p @ g - g @ p)
            if comm > COMMUTATOR_TOL:
                raise ProcessError(f"{name} does not commute with Gamma_W (||[P, Gamma]|| = {comm:.3e})")
            if float(np.real(np.trace(p @ g))) <= 0:
                raise ProcessError(f"{name} has no overlap with Gamma_W")
            object.__setattr__(self, name, p)

    @property
    def dim(self) -> int:
        return self.gamma_w.shape[0]

    @property
    def state_in(self) -> np.ndarray:
        return battery_state(self.p_in, self.gamma_w)

    @property
    def state_out(self) -> np.ndarray:
        return battery_state(self.p_out, self.gamma_w)

    @property
    def charge_in(self) -> float:
        """``-log2 tr(P Gamma_W)`` of the initial state."""
        return -float(np.log2(np.real(np.trace(self.p_in @ self.gamma_w))))

    @property
    def charge_out(self) -> float:
        return -float(np.log2(np.real(np.trace(self.p_out @ self.gamma_w))))

    @property
    def budget(self) -> float:
        """``tr(P' Gamma_W) / tr(P Gamma_W)``: the largest admissible Gamma factor."""
        return float(np.real(np.trace(self.p_out @ self.gamma_w)) / np.real(np.trace(self.p_in @ self.gamma_w)))

    @classmethod
    def information(cls, dim: int, rank_in: int, rank_out: int) -> "BatterySpec":
        """Information battery: ``Gamma_W = I`` and flat states of the given ranks."""
        if not (1 <= rank_in <= dim and 1 <= rank_out <= dim):
            raise ProcessError("battery ranks must lie in [1, dim]")
        p = np.diag([1.0] * rank_in + [0.0] * (dim - rank_in)).astype(complex)
        q = np.diag([1.0] * rank_out + [0.0] * (dim - rank_out)).astype(complex)
        return cls(np.eye(dim, dtype=complex), p, q)

    @classmethod
    def wit(cls, g1: float, g2: float) -> "BatterySpec":
        """Two-level battery moved from ``|1><1|`` (weight ``g1``) to ``|2><2|`` (weight ``g2``)."""
        g = np.diag([g1, g2]).astype(complex)
        return cls(g, np.diag([1.0, 0.0]).astype(complex), np.diag([0.0, 1.0]).astype(complex))


def battery_state(projector: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """``P Gamma P / tr(P Gamma)`` for a projector commuting with ``Gamma``."""
    p = np.asarray(projector, dtype=complex)
    g = np.asarray(gamma, dtype=complex)
    w = float(np.real(np.trace(p @ g)))
    if w <= 0:
        raise ProcessError("battery projector has no overlap with Gamma")
    return la.hermitize(p @ g @ p) / w


# ---------------------------------------------------------------------------
# Map algebra
# ---------------------------------------------------------------------------


def _choi4(e: ChoiMap) -> np.ndarray:
    return e.choi.reshape(e.d_out, e.d_in, e.d_out, e.d_in)


def _make(choi: np.ndarray, dims_in: SystemDims, dims_out: SystemDims, tp_hint: str | None = None) -> ChoiMap:
    """Wrap a Choi matrix, inferring the trace class (numerically clean inputs only)."""
    choi = la.hermitize(choi)
    d_in, d_out = dims_in.total, dims_out.total
    tr_op = la.ptrace_first(choi, d_out, d_in)
    tp = la.opnorm(tr_op - np.eye(d_in)) <= 1e-8
    tp_class = tp_hint or ("trace_preserving" if tp else "trace_nonincreasing")
    if tp_class == "trace_preserving" and not tp:
        tp_class = "trace_nonincreasing"
    return ChoiMap(choi, dims_in, dims_out, tp_class, check=False)


def choi_from_function(
    fn: Callable[[np.ndarray], np.ndarray],
    d_in: int | SystemDims,
    d_out: int | SystemDims,
    tp_class: str | None = None,
    *,
    check: bool = True,
) -> ChoiMap:
    """Choi matrix ``sum_ij fn(|i><j|) (x) |i><j|`` of a linear map given as a function."""
    dims_in = _dims(d_in, "X")
    dims_out = _dims(d_out, "X'")
    n_in, n_out = dims_in.total, dims_out.total
    c = np.zeros((n_out, n_in, n_out, n_in), dtype=complex)
    for i in range(n_in):
        for j in range(n_in):
            unit = np.zeros((n_in, n_in), dtype=complex)
            unit[i, j] = 1.0
            c[:, i, :, j] = np.asarray(fn(unit))
    m = _make(c.reshape(n_out * n_in, n_out * n_in), dims_in, dims_out, tp_class)
    if check:
        m.validate(tol=1e-8)
    return m


def apply(e: ChoiMap, rho: np.ndarray) -> np.ndarray:
    """``E(rho) = tr_R[E (I (x) rho^T)]``.

    Raises:
        ProcessError: on dimension mismatch.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (e.d_in, e.d_in):
        raise ProcessError(f"input of shape {rho.shape} does not match map input dimension {e.d_in}")
    return np.einsum("aibj,ij->ab", _choi4(e), rho)


def apply_extended(e: ChoiMap, rho: np.ndarray, d_rest: int) -> np.ndarray:
    """``(E (x) id)(rho)`` for ``rho`` on ``X (x) Y`` with ``|Y| = d_rest``; output on ``X' (x) Y``."""
    rho = np.asarray(rho, dtype=complex)
    n = e.d_in * d_rest
    if rho.shape != (n, n):
        raise ProcessError(f"input of shape {rho.shape} does not match {e.d_in} x {d_rest}")
    r4 = rho.reshape(e.d_in, d_rest, e.d_in, d_rest)
    out = np.einsum("aibj,irjs->arbs", _choi4(e), r4)
    return out.reshape(e.d_out * d_rest, e.d_out * d_rest)


def adjoint(e: ChoiMap) -> ChoiMap:
    """Hilbert-Schmidt adjoint ``E^dagger: X' -> X`` with ``tr[A E(B)] = tr[E^dagger(A) B]``."""
    f4 = np.transpose(_choi4(e), (3, 2, 1, 0))
    n = e.d_in * e.d_out
    choi = f4.reshape(n, n)
    # The adjoint of a trace-preserving map is unital, not trace preserving.
    tr_op = la.ptrace_first(choi, e.d_in, e.d_out)
    excess = float(np.linalg.eigvalsh(la.hermitize(tr_op))[-1]) - 1.0
    tp = la.opnorm(tr_op - np.eye(e.d_out)) <= 1e-8
    return ChoiMap(
        choi,
        e.dims_out,
        e.dims_in,
        "trace_preserving" if tp else "trace_nonincreasing",
        check=excess <= CHOI_TOL,
    )


def compose(e2: ChoiMap, e1: ChoiMap) -> ChoiMap:
    """``E2 o E1`` (apply ``E1`` first).

    Raises:
        ProcessError: if the output dimension of ``e1`` differs from the input of ``e2``.
    """
    if e1.d_out != e2.d_in:
        raise ProcessError(f"cannot compose: {e1.d_out}-dimensional output into {e2.d_in}-dimensional input")
    c = np.einsum("cadb,aibj->cidj", _choi4(e2), _choi4(e1))
    n = e2.d_out * e1.d_in
    both_tp = e1.tp_class == e2.tp_class == "trace_preserving"
    return ChoiMap(c.reshape(n, n), e1.dims_in, e2.dims_out, "trace_preserving" if both_tp else "trace_nonincreasing")


def tensor_maps(*maps: ChoiMap) -> ChoiMap:
    """Parallel composition ``E1 (x) E2 (x) ...`` acting on the tensor product of the inputs."""
    if not maps:
        raise ProcessError("tensor_maps needs at least one map")

    def fn(x: np.ndarray) -> np.ndarray:
        dims = [m.d_in for m in maps]
        out = x
        # Apply each factor in turn to its slot, keeping the others untouched.
        cur_dims = list(dims)
        for k, m in enumerate(maps):
            perm = [k] + [i for i in range(len(cur_dims)) if i != k]
            inv = list(np.argsort(perm))
            moved = la.permute_systems(out, cur_dims, perm)
            rest = int(np.prod([cur_dims[i] for i in perm[1:]], dtype=np.int64))
            res = apply_extended(m, moved, rest)
            cur_dims[k] = m.d_out
            new_dims = [cur_dims[i] for i in perm]
            out = la.permute_systems(res, new_dims, inv)
        return out

    dims_in = SystemDims.from_list(
        [(f"{l}{k}", d) for k, m in enumerate(maps) for l, d in zip(m.dims_in.labels, m.dims_in.dims)]
    )
    dims_out = SystemDims.from_list(
        [(f"{l}{k}", d) for k, m in enumerate(maps) for l, d in zip(m.dims_out.labels, m.dims_out.dims)]
    )
    both_tp = all(m.tp_class == "trace_preserving" for m in maps)
    return choi_from_function(fn, dims_in, dims_out, "trace_preserving" if both_tp else None)


def identity_channel(d: int) -> ChoiMap:
    """Identity map; its Choi matrix is the unnormalised maximally entangled projector."""
    return ChoiMap(la.max_entangled_op(d), _dims(d, "X"), _dims(d, "X'"), "trace_preserving")


def unitary_channel(u: np.ndarray) -> ChoiMap:
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if la.opnorm(u.conj().T @ u - np.eye(d)) > 1e-10:
        raise ProcessError("matrix is not unitary")
    v = np.kron(u, np.eye(d)) @ la.max_entangled_ket(d)
    return ChoiMap(np.outer(v, v.conj()), _dims(d, "X"), _dims(d, "X'"), "trace_preserving")


def kraus_channel(kraus: Sequence[np.ndarray]) -> ChoiMap:
    """Map ``rho -> sum_k K_k rho K_k^dagger``."""
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    d_out, d_in = ks[0].shape
    choi = np.zeros((d_out * d_in, d_out * d_in), dtype=complex)
    for k in ks:
        v = k.reshape(-1)
        choi += np.outer(v, v.conj())
    return _make(choi, _dims(d_in, "X"), _dims(d_out, "X'"))


def replacement_channel(d_in: int, state: np.ndarray, effect: np.ndarray | None = None) -> ChoiMap:
    """``rho -> tr(effect rho) state`` (``effect = I`` by default: discard and prepare)."""
    state = np.asarray(state, dtype=complex)
    eff = np.eye(d_in, dtype=complex) if effect is None else np.asarray(effect, dtype=complex)
    choi = np.kron(state, eff.T)
    return _make(choi, _dims(d_in, "X"), _dims(state.shape[0], "X'"))


def depolarizing_channel(d: int) -> ChoiMap:
    """Completely depolarising channel ``rho -> tr(rho) I/d``."""
    return replacement_channel(d, np.eye(d) / d)


def partial_trace_channel(d_keep: int, d_discard: int) -> ChoiMap:
    """``tr_2: (keep (x) discard) -> keep``."""
    dims_in = SystemDims(("S", "E"), (d_keep, d_discard))
    return choi_from_function(
        lambda x: la.ptrace_second(x, d_keep, d_discard), dims_in, _dims(d_keep, "S"), "trace_preserving"
    )


def isometry_channel(v: np.ndarray) -> ChoiMap:
    """``rho -> V rho V^dagger`` for an isometry ``V``."""
    v = np.asarray(v, dtype=complex)
    if la.opnorm(v.conj().T @ v - np.eye(v.shape[1])) > 1e-10:
        raise ProcessError("matrix is not an isometry")
    return kraus_channel([v])


# ---------------------------------------------------------------------------
# Process matrices and Gamma factors
# ---------------------------------------------------------------------------


def process_matrix(e: ChoiMap, sigma: np.ndarray, *, normalized: bool = True) -> ProcessMatrix:
    """``rho_{X'R} = (I (x) sigma_R^{1/2}) E (I (x) sigma_R^{1/2})`` with ``sigma_R = sigma^T``.

    Args:
        e: the map.
        sigma: input density matrix on ``X``.
        normalized: require the output to be normalised (true for trace
            preserving maps); set to ``False`` to return the subnormalised
            array via :func:`process_operator` instead.

    Raises:
        ProcessError: if ``sigma`` is not a state or if the output trace
            differs from one by more than ``1e-8`` for a trace-preserving map.
    """
    out = process_operator(e, sigma)
    tr = float(np.real(np.trace(out)))
    if abs(tr - 1.0) > 1e-8:
        if e.tp_class == "trace_preserving" or normalized:
            raise ProcessError(f"process matrix has trace {tr:.12g} (expected 1)")
    return ProcessMatrix(out, e.dims_out, e.dims_in)


def process_operator(e: ChoiMap, sigma: np.ndarray) -> np.ndarray:
    """Possibly subnormalised ``(I (x) sigma_R^{1/2}) E (I (x) sigma_R^{1/2})``."""
    sigma = la.as_hermitian(np.asarray(sigma, dtype=complex), atol=1e-10, rtol=1e-9, name="sigma")
    if sigma.shape != (e.d_in, e.d_in):
        raise ProcessError(f"input state of shape {sigma.shape} does not match map input dimension {e.d_in}")
    tr = float(np.real(np.trace(sigma)))
    if abs(tr - 1.0) > STATE_TOL or _psd_min_eig(sigma) < -STATE_TOL:
        raise ProcessError("sigma must be a density matrix")
    root = la.psd_fn(la.mirror_transpose(sigma), "sqrt")
    big = np.kron(np.eye(e.d_out), root)
    return la.hermitize(big @ e.choi @ big)


def process_from_kets(psi: np.ndarray, d_out: int, d_in: int) -> ProcessMatrix:
    """Process matrix ``|psi><psi|`` of a pure bipartite state on ``X' (x) R``."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return ProcessMatrix.from_array(np.outer(psi, psi.conj()), d_out, d_in)


def map_from_process(rho: ProcessMatrix, *, rank_tol: float = 1e-12) -> ChoiMap:
    """Recover ``E`` from its process matrix on the support of the input state.

    ``E = (I (x) sigma_R^{-1/2}) rho (I (x) sigma_R^{-1/2})`` with a generalised
    inverse; exact for full-rank inputs.
    """
    inv = la.psd_fn(rho.reduced_ref, "inv_sqrt_pinv", rank_tol=rank_tol)
    big = np.kron(np.eye(rho.d_out), inv)
    return _make(big @ rho.rho @ big, rho.dims_in, rho.dims_out)


def _support_leak(a: np.ndarray, gamma: np.ndarray) -> float:
    basis = la.support_basis(gamma)
    comp = np.eye(gamma.shape[0]) - basis @ basis.conj().T
    return la.opnorm(comp @ a @ comp) if comp.size else 0.0


def gamma_factor(t: ChoiMap, gamma_in: np.ndarray, gamma_out: np.ndarray) -> float:
    """Smallest ``alpha`` with ``T(Gamma_X) <= alpha Gamma_X'``.

    Equal to ``|| Gamma_X'^{-1/2} T(Gamma_X) Gamma_X'^{-1/2} ||_inf`` on the
    support of ``Gamma_X'``; the map is Gamma-sub-preserving iff the value is
    at most one, and ``y = -log2 alpha`` is the work it yields.

    Raises:
        ProcessError: if ``T(Gamma_X)`` leaks out of the support of
            ``Gamma_X'``; ``leaked_norm`` holds the norm of the leaked part.
    """
    g_in = np.asarray(GammaOperator(np.asarray(gamma_in)).gamma)
    g_out = np.asarray(GammaOperator(np.asarray(gamma_out)).gamma)
    if g_in.shape != (t.d_in, t.d_in) or g_out.shape != (t.d_out, t.d_out):
        raise ProcessError("Gamma operators do not match the map's dimensions")
    image = la.hermitize(apply(t, g_in))
    leak = _support_leak(image, g_out)
    if leak > LEAK_TOL * max(1.0, la.opnorm(image)):
        raise ProcessError(f"T(Gamma_X) leaks outside the support of Gamma_X' (norm {leak:.3e})", leak)
    inv = la.psd_fn(g_out, "inv_sqrt_pinv")
    return la.opnorm(inv @ image @ inv)


def is_gamma_subpreserving(t: ChoiMap, gamma_in: np.ndarray, gamma_out: np.ndarray, tol: float = SUBPRESERVING_TOL) -> bool:
    """``T(Gamma_X) <= Gamma_X'`` up to ``tol`` (support leaks count as violations)."""
    try:
        return gamma_factor(t, gamma_in, gamma_out) <= 1.0 + tol
    except ProcessError:
        return False


# ---------------------------------------------------------------------------
# Dilation of Gamma-sub-preserving maps
# ---------------------------------------------------------------------------


class Dilation(NamedTuple):
    """Result of :func:`dilate`.

    ``phi`` acts on ``K (x) L (x) Q``; ``gamma_q = diag(g_i, g_f)`` in the basis
    ``|i> = |0>``, ``|f> = |1>`` of the qubit ``Q``.
    """

    phi: ChoiMap
    gamma_q: np.ndarray


def gamma_eigenvector(gamma: np.ndarray, index: int | np.ndarray) -> tuple[np.ndarray, float]:
    """Select an eigenvector of ``gamma`` and its eigenvalue.

    ``index`` may be an explicit eigenvector or an integer.  For diagonal
    ``gamma`` the integer refers to the computational basis state
    ``|index>``; otherwise to the eigenvector with that position in
    nonincreasing eigenvalue order.

    Raises:
        ProcessError: if an explicit vector is not a unit eigenvector.
    """
    gamma = np.asarray(gamma, dtype=complex)
    d = gamma.shape[0]
    if isinstance(index, (int, np.integer)):
        if not 0 <= int(index) < d:
            raise ProcessError(f"eigenvector index {index} out of range for dimension {d}")
        if la.opnorm(gamma - np.diag(np.diag(gamma))) == 0.0:
            vec = np.zeros(d, dtype=complex)
            vec[int(index)] = 1.0
        else:
            vec = la.eig_hermitian(gamma).eigenvectors[:, int(index)]
    else:
        vec = np.asarray(index, dtype=complex).reshape(-1)
        if vec.shape != (d,) or abs(np.linalg.norm(vec) - 1.0) > 1e-10:
            raise ProcessError("eigenvector must be a unit vector of matching dimension")
    g = float(np.real(vec.conj() @ gamma @ vec))
    if np.linalg.norm(gamma @ vec - g * vec) > 1e-9 * max(1.0, la.opnorm(gamma)):
        raise ProcessError("selected vector is not an eigenvector of Gamma")
    return vec, g


def dilate(
    phi_t: ChoiMap,
    gamma_k: np.ndarray,
    gamma_l: np.ndarray,
    k_index: int | np.ndarray = 0,
    l_index: int | np.ndarray = 0,
) -> Dilation:
    """Dilate a trace-nonincreasing Gamma-sub-preserving ``K -> L`` map to a Gamma-preserving channel.

    The returned channel ``Phi`` on ``K L Q`` is trace preserving, satisfies
    ``Phi(Gamma_K (x) Gamma_L (x) Gamma_Q) = Gamma_K (x) Gamma_L (x) Gamma_Q``
    and reproduces ``phi_t`` on the post-selected block:
    ``<k f| Phi(X (x) |l i><l i|) |k f> = phi_t(X)``.  It is the sum of four
    completely positive pieces: ``phi_t`` itself routed from ``|l i>`` to
    ``|k f>``, its Gamma-weighted adjoint routed backwards, and two
    measure-and-prepare maps on the ``i`` and ``f`` sectors that restore trace
    and Gamma preservation.  The Gamma_Q eigenvalues are ``g_i = 1`` and
    ``g_f = g_l / g_k``.

    Args:
        phi_t: the map ``K -> L``.
        gamma_k, gamma_l: Gamma operators of ``K`` and ``L``.
        k_index, l_index: eigenvectors of ``gamma_k`` / ``gamma_l`` (see
            :func:`gamma_eigenvector`).

    Raises:
        ProcessError: if ``phi_t`` is not trace nonincreasing or not
            Gamma-sub-preserving, or if ``g_k = 0``.
    """
    dk, dl = phi_t.d_in, phi_t.d_out
    gamma_k = np.asarray(GammaOperator(np.asarray(gamma_k)).gamma)
    gamma_l = np.asarray(GammaOperator(np.asarray(gamma_l)).gamma)
    if gamma_k.shape != (dk, dk) or gamma_l.shape != (dl, dl):
        raise ProcessError("Gamma operators do not match the map's dimensions")
    excess = float(np.linalg.eigvalsh(la.hermitize(phi_t.trace_operator()))[-1]) - 1.0
    if excess > 1e-9:
        raise ProcessError(f"map to dilate is not trace nonincreasing (excess {excess:.3e})")
    alpha = gamma_factor(phi_t, gamma_k, gamma_l)
    if alpha > 1.0 + 1e-9:
        raise ProcessError(f"map to dilate is not Gamma-sub-preserving (Gamma factor {alpha:.6g} > 1)")

    ket_k, g_k = gamma_eigenvector(gamma_k, k_index)
    ket_l, g_l = gamma_eigenvector(gamma_l, l_index)
    if g_k <= 0:
        raise ProcessError("the eigenvector |k> must carry a nonzero Gamma_K eigenvalue")
    g_i, g_f = 1.0, g_l / g_k
    gamma_q = np.diag([g_i, g_f]).astype(complex)

    adj = adjoint(phi_t)
    pk = np.outer(ket_k, ket_k.conj())
    pl = np.outer(ket_l, ket_l.conj())
    root_k = la.psd_fn(gamma_k, "sqrt")
    inv_root_l = la.psd_fn(gamma_l, "inv_sqrt_pinv") if np.any(gamma_l) else np.zeros_like(gamma_l)
    proj_l = la.support_projector(gamma_l) if np.any(gamma_l) else np.zeros_like(gamma_l)
    gamma_kl = np.kron(gamma_k, gamma_l)
    image = la.hermitize(apply(phi_t, gamma_k))  # Gamma_L - G_L
    unit_back = la.hermitize(apply(adj, np.eye(dl)))  # I_K - F_K
    proj_back = la.hermitize(apply(adj, proj_l))  # I_K - F'_K

    a_kl = la.hermitize(gamma_kl - g_l * np.kron(root_k @ proj_back @ root_k, pl))
    b_kl = la.hermitize(np.eye(dk * dl) - np.kron(unit_back, pl))
    c_kl = la.hermitize(gamma_kl - g_k * np.kron(pk, image))
    d_kl = la.hermitize(np.eye(dk * dl) - np.kron(pk, inv_root_l @ image @ inv_root_l))

    def _filler(op: np.ndarray) -> np.ndarray:
        tr = float(np.real(np.trace(op)))
        if tr > 1e-14 * max(1.0, float(np.real(np.trace(gamma_kl)))):
            return op / tr
        return np.eye(dk * dl, dtype=complex) / (dk * dl)

    xi = _filler(a_kl)
    omega = _filler(c_kl)
    ket_i = np.array([1.0, 0.0], dtype=complex)
    ket_f = np.array([0.0, 1.0], dtype=complex)
    proj_i = np.outer(ket_i, ket_i)
    proj_f = np.outer(ket_f, ket_f)
    # Partial bras: I_K (x) <l i|, <k| (x) I_L (x) <f|, I_KL (x) <i|, I_KL (x) <f|.
    bra_li = np.kron(np.eye(dk), np.kron(ket_l, ket_i).conj()[None, :])
    bra_kf = np.kron(ket_k.conj()[None, :], np.kron(np.eye(dl), ket_f[None, :]))
    bra_i = np.kron(np.eye(dk * dl), ket_i[None, :])
    bra_f = np.kron(np.eye(dk * dl), ket_f[None, :])

    def sandwich(bra: np.ndarray, x: np.ndarray) -> np.ndarray:
        return bra @ x @ bra.conj().T

    def phi(x: np.ndarray) -> np.ndarray:
        forward = apply(phi_t, sandwich(bra_li, x))
        out = np.kron(np.kron(pk, forward), proj_f)
        block = sandwich(bra_kf, x)
        backward = root_k @ apply(adj, inv_root_l @ block @ inv_root_l) @ root_k
        out = out + np.kron(np.kron(backward, pl), proj_i)
        x_i = sandwich(bra_i, x)
        x_f = sandwich(bra_f, x)
        out = out + np.kron(np.trace(b_kl @ x_i) * xi, proj_i)
        out = out + np.kron(np.trace(d_kl @ x_f) * omega, proj_f)
        return out

    dims = SystemDims(("K", "L", "Q"), (dk, dl, 2))
    big = choi_from_function(phi, dims, dims, "trace_preserving", check=False)
    return Dilation(ChoiMap(big.choi, dims, dims, "trace_preserving", check=False), gamma_q)


def dilation_inputs(dilation: Dilation, gamma_k: np.ndarray, gamma_l: np.ndarray, k_index=0, l_index=0):
    """Kets ``|l i>`` (input ancillas on ``L Q``) and ``|k f>`` (output ancillas on ``K Q``)."""
    ket_k, _ = gamma_eigenvector(gamma_k, k_index)
    ket_l, _ = gamma_eigenvector(gamma_l, l_index)
    ket_i = np.array([1.0, 0.0], dtype=complex)
    ket_f = np.array([0.0, 1.0], dtype=complex)
    return np.kron(ket_l, ket_i), np.kron(ket_k, ket_f)


def dilation_recover(dilation: Dilation, x_k: np.ndarray, gamma_k, gamma_l, k_index=0, l_index=0) -> np.ndarray:
    """``<k f| Phi(x_K (x) |l i><l i|) |k f>`` -- equals the original map applied to ``x_K``."""
    phi = dilation.phi
    dk = gamma_k.shape[0]
    dl = phi.d_in // (2 * dk)
    li, kf = dilation_inputs(dilation, gamma_k, gamma_l, k_index, l_index)
    x = np.kron(np.asarray(x_k, dtype=complex), np.outer(li, li.conj()))
    out = apply(phi, x)
    # reorder output K L Q -> L (K Q) and contract with <k f|.
    out = la.permute_systems(out, [dk, dl, 2], [1, 0, 2])
    bra = np.kron(np.eye(dl), kf.conj()[None, :])
    return bra @ out @ bra.conj().T


# ---------------------------------------------------------------------------
# Batteries
# ---------------------------------------------------------------------------


def battery_implementation(
    t: ChoiMap, gamma_in: np.ndarray, gamma_out: np.ndarray, battery: BatterySpec
) -> ChoiMap:
    """Implement ``T`` with a battery: ``Phi(.) = T(tr_W[(I (x) P)(.)]) (x) tau(P')``.

    The result acts on ``X W -> X' W``, is trace nonincreasing and maps
    ``omega (x) tau(P)`` to ``T(omega) (x) tau(P')``.  It is
    Gamma-sub-preserving with respect to ``Gamma_X (x) Gamma_W`` and
    ``Gamma_X' (x) Gamma_W`` provided the Gamma factor of ``T`` does not
    exceed the battery budget ``tr(P' Gamma_W) / tr(P Gamma_W)``.

    Raises:
        ProcessError: if the charge budget is insufficient.
    """
    alpha = gamma_factor(t, gamma_in, gamma_out)
    if alpha > battery.budget + 1e-9:
        raise ProcessError(
            f"battery budget {battery.budget:.6g} is smaller than the Gamma factor {alpha:.6g} of the map"
        )
    dw = battery.dim
    filt = np.kron(np.eye(t.d_in), battery.p_in)
    tau_out = battery.state_out

    def phi(x: np.ndarray) -> np.ndarray:
        reduced = la.ptrace_second(filt @ x, t.d_in, dw)
        return np.kron(apply(t, reduced), tau_out)

    dims_in = SystemDims(t.dims_in.labels + ("W",), t.dims_in.dims + (dw,))
    dims_out = SystemDims(t.dims_out.labels + ("W",), t.dims_out.dims + (dw,))
    return choi_from_function(phi, dims_in, dims_out, "trace_nonincreasing")


def extract_system_map(
    phi: ChoiMap,
    battery_in: tuple[np.ndarray, np.ndarray],
    battery_out: tuple[np.ndarray, np.ndarray],
) -> ChoiMap:
    """System map ``T(omega) = tr_A'[P' Phi(omega (x) tau(P))]`` from a battery-assisted map.

    ``phi`` acts on ``X A -> X' A'`` (battery last).  If ``phi`` is
    Gamma-sub-preserving, then ``T(Gamma_X) <= tr(P' Gamma_A') / tr(P Gamma_A) Gamma_X'``;
    by monotonicity of the purified distance ``T`` reproduces any target at
    least as well as ``phi`` reproduces it together with the battery states.

    Args:
        phi: the battery-assisted map.
        battery_in: ``(P_A, Gamma_A)``.
        battery_out: ``(P'_A', Gamma_A')``.

    Raises:
        ProcessError: if a projector does not commute with its Gamma or the
            battery dimensions do not divide the map's dimensions.
    """
    p_a, g_a = (np.asarray(m, dtype=complex) for m in battery_in)
    p_b, g_b = (np.asarray(m, dtype=complex) for m in battery_out)
    for p, g, name in ((p_a, g_a, "input"), (p_b, g_b, "output")):
        comm = la.opnorm(p @ g - g @ p)
        if comm > COMMUTATOR_TOL:
            raise ProcessError(f"{name} battery projector does not commute with Gamma (||[P, Gamma]|| = {comm:.3e})")
    da, db = p_a.shape[0], p_b.shape[0]
    if phi.d_in % da or phi.d_out % db:
        raise ProcessError("battery dimensions do not divide the map's dimensions")
    dx, dxp = phi.d_in // da, phi.d_out // db
    tau = battery_state(p_a, g_a)
    filt = np.kron(np.eye(dxp), p_b)

    def t(x: np.ndarray) -> np.ndarray:
        out = apply(phi, np.kron(x, tau))
        return la.ptrace_second(filt @ out, dxp, db)

    dims_in = _strip_battery(phi.dims_in, dx, "X")
    dims_out = _strip_battery(phi.dims_out, dxp, "X'")
    return choi_from_function(t, dims_in, dims_out, check=False)


def _strip_battery(dims: SystemDims, d_sys: int, label: str) -> SystemDims:
    if len(dims.dims) > 1 and int(np.prod(dims.dims[:-1])) == d_sys:
        return SystemDims(dims.labels[:-1], dims.dims[:-1])
    return SystemDims((label,), (d_sys,))


# ---------------------------------------------------------------------------
# Recovery maps
# ---------------------------------------------------------------------------


def petz_recovery(f: ChoiMap, gamma_a: np.ndarray, *, restrict_support: bool = False) -> ChoiMap:
    """Petz map ``R(.) = Gamma_A^{1/2} F^dagger(Gamma_B^{-1/2} (.) Gamma_B^{-1/2}) Gamma_A^{1/2}``.

    ``R`` is completely positive, maps ``Gamma_B = F(Gamma_A)`` to ``Gamma_A``
    and is trace preserving on the support of ``Gamma_B``.

    Args:
        f: trace-preserving map ``A -> B``.
        gamma_a: Gamma operator of ``A``.
        restrict_support: allow rank-deficient ``Gamma_B`` by taking the
            inverse square root on its support.

    Raises:
        ProcessError: if ``f`` is not trace preserving, or ``Gamma_B`` is
            rank deficient and ``restrict_support`` is false.
    """
    if not f.is_trace_preserving(1e-8):
        raise ProcessError("Petz recovery needs a trace-preserving map")
    gamma_a = np.asarray(GammaOperator(np.asarray(gamma_a)).gamma)
    gamma_b = la.hermitize(apply(f, gamma_a))
    rank = la.eig_hermitian(gamma_b).rank
    if rank < f.d_out and not restrict_support:
        raise ProcessError(
            f"Gamma_B = F(Gamma_A) has rank {rank} < {f.d_out}; restrict to its support first "
            "(restrict_support=True)"
        )
    root_a = la.psd_fn(gamma_a, "sqrt")
    inv_b = la.psd_fn(gamma_b, "inv_sqrt_pinv")
    adj = adjoint(f)

    def r(x: np.ndarray) -> np.ndarray:
        return root_a @ apply(adj, inv_b @ x @ inv_b) @ root_a

    tp_hint = "trace_preserving" if rank == f.d_out else "trace_nonincreasing"
    return choi_from_function(r, f.dims_out, f.dims_in, tp_hint, check=False)


# ---------------------------------------------------------------------------
# Random instances
# ---------------------------------------------------------------------------

THERMAL_BETA_RANGE = (0.1, 2.0)
"""Inverse-temperature range of thermal test Gammas (test-harness constant)."""

GENERIC_MAX_CONDITION = 1e2
"""Default condition-number cap of generic test Gammas (test-harness constant, at most 1e4)."""


def rng_from_seed(seed: int | np.random.Generator) -> np.random.Generator:
    """Counter-based ``Philox`` generator for an integer seed (generators pass through)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(int(seed)))


def _ginibre(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_isometry(seed: int | np.random.Generator, d_in: int, d_out: int) -> np.ndarray:
    """Haar-like isometry ``C^{d_in} -> C^{d_out}`` from the QR decomposition of a Ginibre matrix."""
    if d_out < d_in:
        raise ProcessError("an isometry needs d_out >= d_in")
    rng = rng_from_seed(seed)
    q, r = np.linalg.qr(_ginibre(rng, d_out, d_in))
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases[None, :]


def random_channel(seed: int | np.random.Generator, dim_in: int, dim_out: int, env_dim: int = 2) -> ChoiMap:
    """Random channel: a random isometry into ``X' (x) E`` followed by ``tr_E``.

    ``env_dim = 1`` with ``dim_in = dim_out`` gives a unitary channel.

    Raises:
        ProcessError: if ``dim_out * env_dim < dim_in``.
    """
    if min(dim_in, dim_out, env_dim) < 1:
        raise ProcessError("dimensions must be at least 1")
    if dim_out * env_dim < dim_in:
        raise ProcessError("dim_out * env_dim must be at least dim_in for an isometric dilation")
    v = random_isometry(seed, dim_in, dim_out * env_dim)
    kraus = [v.reshape(dim_out, env_dim, dim_in)[:, e, :] for e in range(env_dim)]
    m = kraus_channel(kraus)
    return ChoiMap(m.choi, m.dims_in, m.dims_out, "trace_preserving")


def random_state(seed: int | np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Normalised Wishart density matrix (full rank unless ``rank`` is given)."""
    rng = rng_from_seed(seed)
    g = _ginibre(rng, dim, rank or dim)
    rho = g @ g.conj().T
    return la.hermitize(rho / np.real(np.trace(rho)))


def random_pure_state(seed: int | np.random.Generator, dim: int) -> np.ndarray:
    rng = rng_from_seed(seed)
    v = _ginibre(rng, dim, 1)[:, 0]
    return v / np.linalg.norm(v)


def random_hermitian(seed: int | np.random.Generator, dim: int) -> np.ndarray:
    rng = rng_from_seed(seed)
    g = _ginibre(rng, dim, dim)
    return la.hermitize(g + g.conj().T) / (2.0 * np.sqrt(dim))


def random_gamma(
    seed: int | np.random.Generator,
    dim: int,
    kind: str = "thermal",
    *,
    max_condition: float = GENERIC_MAX_CONDITION,
) -> np.ndarray:
    """Random full-rank Gamma operator.

    ``thermal``: ``exp(-beta H)`` for a random Hermitian ``H`` (spectrum of
    order one) and ``beta`` uniform in :data:`THERMAL_BETA_RANGE`.
    ``generic``: random eigenbasis with log-uniform eigenvalues in
    ``[1/max_condition, 1]`` times a random overall scale in ``[0.5, 2]``.
    """
    rng = rng_from_seed(seed)
    if kind == "thermal":
        h = random_hermitian(rng, dim)
        beta = rng.uniform(*THERMAL_BETA_RANGE)
        return la.hermitize(expm(-beta * h))
    if kind == "generic":
        if not 1.0 <= max_condition <= 1e4:
            raise ProcessError("max_condition must lie in [1, 1e4]")
        u = random_isometry(rng, dim, dim)
        w = 10.0 ** rng.uniform(-np.log10(max_condition), 0.0, size=dim)
        scale = rng.uniform(0.5, 2.0)
        return la.hermitize(scale * (u * w) @ u.conj().T)
    raise ProcessError(f"unknown Gamma kind {kind!r}; use 'thermal' or 'generic'")


def random_subpreserving_map(
    seed: int | np.random.Generator,
    gamma_in: np.ndarray,
    gamma_out: np.ndarray,
    env_dim: int = 2,
    *,
    slack: float = 1.0,
) -> ChoiMap:
    """Random trace-nonincreasing, Gamma-sub-preserving map.

    A random channel is scaled by ``slack / max(1, Gamma factor)``; the result
    satisfies ``T(Gamma_in) <= slack Gamma_out`` and ``tr T(rho) <= 1``.
    """
    rng = rng_from_seed(seed)
    d_in, d_out = np.asarray(gamma_in).shape[0], np.asarray(gamma_out).shape[0]
    e = random_channel(rng, d_in, d_out, max(env_dim, -(-d_in // d_out)))
    alpha = gamma_factor(e, gamma_in, gamma_out)
    scale = min(1.0, slack / max(alpha, 1.0))
    return ChoiMap(e.choi * scale, e.dims_in, e.dims_out, "trace_preserving" if scale == 1.0 else "trace_nonincreasing")


# ---------------------------------------------------------------------------
# JSON helpers
# ---------------------------------------------------------------------------


def load_channel(path: str) -> ChoiMap:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProcessError(f"{path}: invalid JSON ({exc})") from exc
    return ChoiMap.from_json(payload)


def save_channel(path: str, e: ChoiMap) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(e.to_json(), fh)


def load_process(path: str) -> ProcessMatrix:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProcessError(f"{path}: invalid JSON ({exc})") from exc
    return ProcessMatrix.from_json(payload)


def save_process(path: str, rho: ProcessMatrix) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rho.to_json(), fh)
