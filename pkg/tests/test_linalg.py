import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from cohrelkit import linalg as la
from cohrelkit import process as proc


def _state(seed, d, rank=None):
    return proc.random_state(seed, d, rank)


def _einsum_partial_trace(a, dims, keep):
    """Independent oracle: reshape + einsum over the traced indices."""
    n = len(dims)
    t = a.reshape(list(dims) + list(dims))
    letters = "abcdefghijkl"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    res = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    k = int(np.prod([dims[i] for i in keep]))
    return res.reshape(k, k)


@pytest.mark.parametrize("dims,keep", [([2, 3], [0]), ([2, 3], [1]), ([2, 2, 3], [0, 2]), ([3, 2, 2], [1])])
def test_partial_trace_matches_einsum(dims, keep):
    a = _state(1, int(np.prod(dims)))
    assert np.allclose(la.partial_trace(a, dims, keep=keep), _einsum_partial_trace(a, dims, keep), atol=1e-13)


def test_ptrace_helpers_agree_with_general_form():
    a = _state(2, 6)
    assert np.allclose(la.ptrace_first(a, 2, 3), la.partial_trace(a, [2, 3], keep=[1]))
    assert np.allclose(la.ptrace_second(a, 2, 3), la.partial_trace(a, [2, 3], keep=[0]))


def test_permute_systems_matches_kron_order():
    a, b, c = _state(3, 2), _state(4, 3), _state(5, 2)
    joint = np.kron(np.kron(a, b), c)
    moved = la.permute_systems(joint, [2, 3, 2], [2, 0, 1])
    assert np.allclose(moved, np.kron(np.kron(c, a), b))


def test_mirror_transpose_is_transpose():
    a = _state(6, 3) + 1j * 0
    assert np.allclose(la.mirror_transpose(a), a.T)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_fidelity_matches_sqrtm_oracle(d):
    r, s = _state(7, d), _state(8, d)
    sr = scipy.linalg.sqrtm(r)
    oracle = np.sum(np.linalg.svd(sr @ scipy.linalg.sqrtm(s), compute_uv=False))
    assert la.fidelity(r, s) == pytest.approx(oracle, abs=1e-10)


def test_fidelity_of_pure_states_is_overlap():
    u = proc.random_pure_state(9, 3)
    v = proc.random_pure_state(10, 3)
    f = la.fidelity(np.outer(u, u.conj()), np.outer(v, v.conj()))
    assert f == pytest.approx(abs(np.vdot(u, v)), abs=1e-12)


def test_generalized_fidelity_subnormalized():
    r = 0.5 * _state(11, 2)
    s = 0.8 * _state(12, 2)
    sr = scipy.linalg.sqrtm(r)
    base = np.sum(np.linalg.svd(sr @ scipy.linalg.sqrtm(s), compute_uv=False))
    assert la.fidelity(r, s) == pytest.approx(base + np.sqrt(0.5 * 0.2), abs=1e-10)


def test_purified_distance_identity_and_orthogonal():
    r = _state(13, 3)
    assert la.purified_distance(r, r) == pytest.approx(0.0, abs=1e-7)
    p0 = np.diag([1.0, 0.0]).astype(complex)
    p1 = np.diag([0.0, 1.0]).astype(complex)
    assert la.purified_distance(p0, p1) == pytest.approx(1.0)


def test_trace_distance_commuting():
    a = np.diag([0.7, 0.3]).astype(complex)
    b = np.diag([0.2, 0.8]).astype(complex)
    assert la.trace_distance(a, b) == pytest.approx(0.5)


def test_psd_functions():
    a = _state(14, 3, rank=2)
    root = la.psd_fn(a, "sqrt")
    assert np.allclose(root @ root, a, atol=1e-12)
    inv = la.psd_fn(a, "pinv")
    assert np.allclose(inv, np.linalg.pinv(a, rcond=1e-9, hermitian=True), atol=1e-8)
    p = la.support_projector(a)
    assert np.allclose(p @ p, p) and int(round(np.trace(p).real)) == 2


def test_hermitian_basis_orthonormal():
    b = la.hermitian_basis(3)
    gram = np.einsum("kij,lji->kl", b, b)
    assert b.shape == (9, 3, 3)
    assert np.allclose(gram, np.eye(9))
    assert all(np.allclose(x, x.conj().T) for x in b)


def test_entangled_ket_reproduces_state():
    sigma = _state(15, 3)
    ket = la.entangled_ket(sigma)
    rho = np.outer(ket, ket.conj())
    assert np.allclose(la.ptrace_second(rho, 3, 3), sigma, atol=1e-12)


def test_match_marginal_guarantees():
    rho = _state(16, 6)
    target = _state(17, 2)
    m = la.match_marginal_details(rho, target, (2, 3))
    assert np.allclose(la.ptrace_second(m.state, 2, 3), target, atol=1e-10)
    assert np.allclose(la.ptrace_first(m.state, 2, 3), la.ptrace_first(rho, 2, 3), atol=1e-10)
    assert la.purified_distance(m.state, rho) <= la.match_marginal_bound(m.delta) + 1e-12


def test_project_normalize_rejects_zero_weight():
    rho = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(la.LinalgError):
        la.project_normalize(rho, np.diag([0.0, 1.0]).astype(complex))


def test_json_round_trip(tmp_path):
    a = _state(18, 4)
    dims = la.SystemDims(("A", "B"), (2, 2))
    path = tmp_path / "m.json"
    la.save_matrix(str(path), a, dims)
    back, dims_back = la.load_matrix(str(path))
    assert np.allclose(back, a)
    assert dims_back.dims == (2, 2)


@pytest.mark.parametrize("payload", ["{", "[1, 2]", json.dumps({"re": [[1, 0], [1, 1]], "im": [[0, 0], [0, 0]]})])
def test_json_rejects_malformed(tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    with pytest.raises(la.LinalgError):
        la.load_matrix(str(path))


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4))
def test_fidelity_symmetric_and_bounded(seed, d):
    r = _state(seed, d)
    s = _state(seed + 1, d)
    f = la.fidelity(r, s)
    assert 0.0 <= f <= 1.0
    assert f == pytest.approx(la.fidelity(s, r), abs=1e-10)


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 3))
def test_purified_distance_triangle(seed, d):
    a, b, c = (_state(seed + k, d) for k in range(3))
    assert la.purified_distance(a, c) <= la.purified_distance(a, b) + la.purified_distance(b, c) + 1e-10


@given(seed=st.integers(0, 2**32 - 1), da=st.integers(2, 3), db=st.integers(2, 3))
def test_partial_trace_preserves_trace_and_positivity(seed, da, db):
    a = _state(seed, da * db)
    red = la.ptrace_second(a, da, db)
    assert np.trace(red).real == pytest.approx(1.0)
    assert np.linalg.eigvalsh(red).min() >= -1e-12


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 3))
def test_fidelity_monotone_under_partial_trace(seed, d):
    a, b = _state(seed, 2 * d), _state(seed + 7, 2 * d)
    assert la.fidelity(la.ptrace_second(a, 2, d), la.ptrace_second(b, 2, d)) >= la.fidelity(a, b) - 1e-10
