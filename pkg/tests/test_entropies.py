import numpy as np
import pytest
import scipy.linalg
import scipy.optimize
from hypothesis import given
from hypothesis import strategies as st

from cohrelkit import entropies as ent
from cohrelkit import linalg as la
from cohrelkit import process as proc


def _diag(*xs):
    return np.diag(xs).astype(complex)


def _rel_entropy_oracle(rho, gamma):
    """tr rho (log rho - log Gamma) via scipy.linalg.logm, in bits (full-rank inputs)."""
    val = np.trace(rho @ (scipy.linalg.logm(rho) - scipy.linalg.logm(gamma))).real
    return val / np.log(2.0)


def _d_hyp_oracle(eta, p, g):
    """Neyman-Pearson linear program for commuting inputs."""
    res = scipy.optimize.linprog(g, A_ub=[-p], b_ub=[-eta], bounds=[(0, 1)] * len(p), method="highs")
    return -np.log2(res.fun / eta)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_rel_entropy_matches_logm(d):
    rho = proc.random_state(1, d)
    gamma = proc.random_gamma(2, d)
    assert ent.rel_entropy(rho, gamma).value == pytest.approx(_rel_entropy_oracle(rho, gamma), abs=1e-9)


def test_rel_entropy_gibbs_is_minus_log_partition():
    gamma = _diag(1.0, 0.5, 0.25)
    rho = gamma / np.trace(gamma)
    assert ent.rel_entropy(rho, gamma).value == pytest.approx(-np.log2(1.75), abs=1e-12)


def test_closed_forms_on_commuting_inputs():
    rho = _diag(0.5, 0.5, 0.0)
    gamma = _diag(1.0, 0.25, 2.0)
    assert ent.d_min0(rho, gamma).value == pytest.approx(-np.log2(1.25))
    assert ent.d_max(rho, gamma).value == pytest.approx(np.log2(2.0))
    # D_rob = -log || rho^{-1/2} Gamma rho^{-1/2} || on supp rho = -log max(1/0.5, 0.25/0.5).
    assert ent.d_rob(rho, gamma).value == pytest.approx(-np.log2(2.0))


def test_battery_state_values():
    gamma = _diag(1.0, 0.5)
    p = _diag(1.0, 0.0)
    state = ent.battery_state(p, gamma)
    for fn in (ent.rel_entropy, ent.d_min0, ent.d_max):
        assert fn(state, gamma).value == pytest.approx(0.0, abs=1e-12)
    full = ent.battery_state(np.eye(2), gamma)
    assert ent.d_max(full, gamma).value == pytest.approx(-np.log2(1.5))


def test_d_max_sdp_agrees_with_closed_form():
    rho = proc.random_state(3, 3)
    gamma = proc.random_gamma(4, 3, "generic")
    a = ent.d_max_sdp(rho, gamma)
    assert a.value == pytest.approx(ent.d_max(rho, gamma).value, abs=1e-7)
    assert a.gap <= 1e-7


def test_fidelity_sdp_agrees_with_closed_form():
    r, s = proc.random_state(5, 3, rank=1), proc.random_state(6, 3)
    f, gap = ent.fidelity_sdp(r, s)
    assert f == pytest.approx(la.fidelity(r, s), abs=1e-6)


@pytest.mark.parametrize("eta", [0.5, 0.8, 0.95, 1.0])
def test_hypothesis_test_matches_linprog(eta):
    p = np.array([0.6, 0.3, 0.1])
    g = np.array([0.2, 0.5, 1.0])
    val = ent.d_hyp(eta, np.diag(p).astype(complex), np.diag(g).astype(complex)).value
    assert val == pytest.approx(_d_hyp_oracle(eta, p, g), abs=1e-6)


def test_hypothesis_test_scaling_shift():
    rho = proc.random_state(7, 2)
    gamma = proc.random_gamma(8, 2)
    a = ent.d_hyp(0.9, rho, gamma).value
    b = ent.d_hyp(0.9, rho, 4.0 * gamma).value
    assert a - b == pytest.approx(2.0, abs=1e-6)


def test_hypothesis_test_rejects_eta():
    with pytest.raises(ent.EntropyError):
        ent.d_hyp(0.0, np.eye(2) / 2, np.eye(2))


def test_smooth_d_max_zero_eps_and_monotone():
    rho = proc.random_state(9, 2)
    gamma = proc.random_gamma(10, 2)
    assert ent.smooth_d_max(0.0, rho, gamma).value == ent.d_max(rho, gamma).value
    v = [ent.smooth_d_max(e, rho, gamma).upper for e in (0.05, 0.1, 0.3)]
    assert v[0] >= v[1] - 1e-7 >= v[2] - 2e-7


def test_smooth_d_max_classical_oracle():
    """For a qubit with Gamma = I the optimum flattens the spectrum towards 1/2."""
    rho = _diag(0.9, 0.1)
    eps = 0.2
    val = ent.smooth_d_max(eps, rho, np.eye(2)).value
    # Best diagonal candidate: diag(t, 1 - t) with sqrt(0.9 t) + sqrt(0.1 (1 - t)) = sqrt(1 - eps^2).
    f = lambda t: np.sqrt(0.9 * t) + np.sqrt(0.1 * (1 - t)) - np.sqrt(1 - eps**2)  # noqa: E731
    t = scipy.optimize.brentq(f, 0.5, 0.9)
    assert val == pytest.approx(np.log2(t), abs=1e-6)


def test_smooth_d_min0_candidates_are_certified():
    rho = proc.random_state(11, 3)
    gamma = proc.random_gamma(12, 3)
    out = ent.smooth_d_min0_candidates(0.2, rho, gamma)
    state = out.details["state"]
    assert la.purified_distance(state, rho) <= 0.2 + 1e-9
    assert out.value == pytest.approx(ent.d_min0(state, gamma).value)
    assert out.value >= ent.d_min0(rho, gamma).value - 1e-12


def test_smooth_d_rob_lower_record():
    rho = proc.random_state(13, 3)
    gamma = proc.random_gamma(14, 3)
    value, rec = ent.smooth_d_rob_lower(0.3, rho, gamma)
    assert rec.certified
    assert rec.distance <= 0.3 + 1e-9
    assert ent.rob_eps_from_eps_prime(rec.eps_prime) == pytest.approx(0.3)


def test_conditional_entropy_duality():
    psi = proc.random_pure_state(15, 2 * 2 * 4)
    full = np.outer(psi, psi.conj())
    rho_er = la.partial_trace(la.permute_systems(full, [2, 2, 4], [2, 1, 0]), [4, 2, 2], keep=[0, 1])
    rho_ex = la.partial_trace(la.permute_systems(full, [2, 2, 4], [2, 0, 1]), [4, 2, 2], keep=[0, 1])
    assert ent.h_min_alt(rho_er, (4, 2)).value == pytest.approx(-ent.h_zero_alt(rho_ex, (4, 2)).value, abs=1e-9)


def test_h_min_of_maximally_entangled_state():
    ket = la.max_entangled_ket(2) / np.sqrt(2)
    rho = np.outer(ket, ket.conj())
    assert ent.h_min_alt(rho, (2, 2)).value == pytest.approx(-1.0, abs=1e-9)


def test_stated_continuity_form_fails_on_explicit_pair():
    gamma = _diag(16.0, 1.0 / 16.0)
    rho, sigma = _diag(1.0, 0.0), _diag(0.0, 1.0)
    diff = abs(ent.rel_entropy(rho, gamma).value - ent.rel_entropy(sigma, gamma).value)
    assert diff == pytest.approx(8.0)
    assert ent.continuity_bound(1.0, gamma, form="stated") == pytest.approx(4.0)
    assert not ent.verify_continuity(rho, sigma, gamma, form="stated")
    assert ent.verify_continuity(rho, sigma, gamma, form="corrected")


def test_support_leak_raises():
    with pytest.raises(ent.EntropyError):
        ent.d_max(_diag(0.5, 0.5), _diag(1.0, 0.0))


def test_binary_entropy():
    assert ent.binary_entropy(0.5) == pytest.approx(1.0)
    assert ent.binary_entropy(0.0) == 0.0


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 4))
def test_min_rel_max_ordering(seed, d):
    rho = proc.random_state(seed, d)
    gamma = proc.random_gamma(seed + 1, d)
    assert ent.d_min0(rho, gamma).value <= ent.rel_entropy(rho, gamma).value + 1e-10
    assert ent.rel_entropy(rho, gamma).value <= ent.d_max(rho, gamma).value + 1e-10


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 3), scale=st.floats(0.1, 10.0))
def test_scaling_shifts_all_divergences(seed, d, scale):
    rho = proc.random_state(seed, d)
    gamma = proc.random_gamma(seed + 1, d)
    shift = -np.log2(scale)
    for fn in (ent.rel_entropy, ent.d_min0, ent.d_max, ent.d_rob):
        assert fn(rho, scale * gamma).value - fn(rho, gamma).value == pytest.approx(shift, abs=1e-9)


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 3))
def test_corrected_continuity_holds(seed, d):
    gamma = proc.random_gamma(seed, d, "generic")
    rho = proc.random_state(seed + 1, d)
    sigma = proc.random_state(seed + 2, d)
    assert ent.verify_continuity(rho, sigma, gamma)
