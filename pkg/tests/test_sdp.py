import numpy as np
import pytest
import scipy.optimize
from hypothesis import given
from hypothesis import strategies as st

from cohrelkit import linalg as la
from cohrelkit import process as proc
from cohrelkit.sdp import SdpBuilder, SdpError, SdpProblem, fidelity_constraint_block, solve


def _max_eigenvalue_problem(a):
    """min t s.t. t I - A >= 0, written as t I - A - S = 0 with S >= 0."""
    n = a.shape[0]
    b = SdpBuilder()
    t = b.add_block(1)
    s = b.add_block(n)
    b.set_objective(t, np.ones((1, 1)))
    basis = la.hermitian_basis(n)
    coef = np.einsum("kii->k", basis).real
    b.add_constraints({t: coef[:, None, None].astype(complex), s: -basis}, np.einsum("kij,ji->k", basis, a).real)
    return b.build()


@pytest.mark.parametrize("n", [2, 3, 5])
def test_max_eigenvalue(n):
    a = proc.random_hermitian(n, n) + 3.0 * np.eye(n)  # t is a PSD (nonnegative) block
    sol = solve(_max_eigenvalue_problem(a), gap_tol=1e-10, feas_tol=1e-10)
    assert sol.optimal
    assert sol.primal_obj == pytest.approx(np.linalg.eigvalsh(a)[-1], abs=1e-8)
    assert sol.dual_obj == pytest.approx(sol.primal_obj, abs=1e-8)


def test_linear_program_matches_linprog():
    # min c.x  s.t. A x = b, x >= 0 encoded with 1x1 blocks.
    rng = np.random.Generator(np.random.Philox(3))
    a_mat = rng.uniform(0.1, 1.0, size=(2, 4))
    x0 = rng.uniform(0.5, 1.5, size=4)
    rhs = a_mat @ x0
    c = rng.uniform(0.5, 2.0, size=4)
    ref = scipy.optimize.linprog(c, A_eq=a_mat, b_eq=rhs, bounds=[(0, None)] * 4, method="highs")
    b = SdpBuilder()
    blocks = [b.add_block(1) for _ in range(4)]
    for j, blk in enumerate(blocks):
        b.set_objective(blk, np.array([[c[j]]]))
    b.add_constraints({blk: a_mat[:, j][:, None, None].astype(complex) for j, blk in enumerate(blocks)}, rhs)
    sol = solve(b.build(), gap_tol=1e-10, feas_tol=1e-10)
    assert sol.optimal
    assert sol.primal_obj == pytest.approx(ref.fun, abs=1e-7)


def test_maximize_direction():
    a = np.diag([0.3, 1.2]).astype(complex)
    # max tr(A X) s.t. tr X = 1, X >= 0 -> largest eigenvalue.
    b = SdpBuilder()
    x = b.add_block(2)
    b.set_objective(x, a)
    b.add_constraints({x: np.eye(2)[None]}, [1.0])
    sol = solve(b.build("maximize"))
    assert sol.primal_obj == pytest.approx(1.2, abs=1e-6)


def test_infeasible_problem_detected():
    b = SdpBuilder()
    x = b.add_block(2)
    b.set_objective(x, np.eye(2))
    b.add_constraints({x: np.eye(2)[None]}, [-1.0])  # trace of a PSD matrix cannot be negative
    sol = solve(b.build())
    assert not sol.optimal
    assert sol.status in ("infeasible_primal", "numerical", "max_iter")


def test_builder_rejects_bad_shapes():
    b = SdpBuilder()
    x = b.add_block(2)
    with pytest.raises(SdpError):
        b.add_constraints({x: np.eye(3)[None]}, [1.0])
    with pytest.raises(SdpError):
        b.add_block(0)


def test_problem_json_round_trip(tmp_path):
    prob = _max_eigenvalue_problem(np.diag([1.0, 2.0]).astype(complex))
    path = tmp_path / "p.json"
    prob.dump(str(path))
    back = SdpProblem.load(str(path))
    assert solve(back).primal_obj == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("threshold", [0.0, 0.5, 0.9])
def test_fidelity_block_is_exact(threshold):
    """Maximising the fidelity of V with rho over trace-one V gives 1."""
    rho = proc.random_state(5, 3, rank=2)
    fb = fidelity_constraint_block(3, rho, threshold)
    b = SdpBuilder()
    z = b.add_block(fb.dim)
    b.set_objective(z, fb.fid_op)
    tr = np.zeros((fb.dim, fb.dim), dtype=complex)
    tr[:3, :3] = np.eye(3)
    b.add_constraints({z: tr[None]}, [1.0])
    fb.attach(b, z)
    sol = solve(b.build("maximize"), gap_tol=1e-9, feas_tol=1e-9)
    assert sol.primal_obj == pytest.approx(1.0, abs=1e-6)
    v, _ = fb.split(sol.X[z])
    assert la.fidelity(la.hermitize(v), rho) == pytest.approx(1.0, abs=1e-5)


def test_fidelity_block_rejects_bad_threshold():
    with pytest.raises(SdpError):
        fidelity_constraint_block(2, np.eye(2) / 2, 1.5)


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
def test_weak_duality_on_eigenvalue_problems(seed, n):
    a = proc.random_hermitian(seed, n)
    sol = solve(_max_eigenvalue_problem(a))
    assert sol.dual_obj <= sol.primal_obj + 1e-7 * (1 + abs(sol.primal_obj))
