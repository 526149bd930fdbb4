import numpy as np
import pytest
import scipy.constants
from hypothesis import given, settings
from hypothesis import strategies as st

from cohrelkit import cohrel as cr
from cohrelkit import entropies as ent
from cohrelkit import linalg as la
from cohrelkit import process as proc

GAMMA_HALF = np.diag([1.0, 0.5]).astype(complex)
KET0 = np.diag([1.0, 0.0]).astype(complex)

# Frozen closed-form values (log base 2).
LOG2_THREE_HALVES = 0.5849625007211562  # log2(1.5)
LOG2_25_16 = 0.6438561897747247  # log2(1.5625)


def _instance(seed, d_in=2, d_out=2):
    return cr._random_instance(proc.rng_from_seed(seed), d_in, d_out)


def test_frozen_constants():
    assert np.log2(1.5) == pytest.approx(LOG2_THREE_HALVES, abs=1e-15)
    assert np.log2(1.5625) == pytest.approx(LOG2_25_16, abs=1e-15)


def test_thermal_qubit_to_ground_state():
    """Gamma = diag(1, 1/2): thermal input, pure ground-state output costs log2(1.5) bits."""
    pm = cr.gibbs_to_gibbs_process(GAMMA_HALF, GAMMA_HALF, None, KET0)
    assert np.allclose(pm.input_state, GAMMA_HALF / 1.5)
    res = cr.cohrel_nonsmooth(pm, GAMMA_HALF, GAMMA_HALF)
    assert res.value_bits == pytest.approx(-LOG2_THREE_HALVES, abs=1e-6)
    assert res.lower <= res.value_bits <= res.upper
    cf = cr.special_cases("gibbs_to_gibbs", gamma_in=GAMMA_HALF, gamma_out=GAMMA_HALF, p_out=KET0)
    assert cf.value_bits == pytest.approx(-LOG2_THREE_HALVES, abs=1e-12)


@pytest.mark.parametrize("eps", [0.0, 0.1, 0.3])
def test_gibbs_to_gibbs_smooth_shift(eps):
    pm = cr.gibbs_to_gibbs_process(GAMMA_HALF, GAMMA_HALF, None, KET0)
    res = cr.cohrel_smooth_z(pm, GAMMA_HALF, GAMMA_HALF, eps)
    assert res.value_bits == pytest.approx(-LOG2_THREE_HALVES - np.log2(1 - eps**2), abs=1e-6)


@pytest.mark.parametrize("d", [2, 3])
def test_identity_process_is_free(d):
    g = proc.random_gamma(d, d)
    sigma = proc.random_state(d + 1, d)
    res = cr.cohrel_nonsmooth(proc.process_matrix(proc.identity_channel(d), sigma), g, g)
    assert res.value_bits == pytest.approx(0.0, abs=1e-6)
    assert res.certificate is not None
    assert proc.gamma_factor(res.certificate, g, g) <= res.primal_value * (1 + 1e-6)


def test_certificate_implements_process():
    pm, gi, go = _instance(3)
    res = cr.cohrel_nonsmooth(pm, gi, go)
    assert np.allclose(cr.implemented_process(res.certificate, pm), pm.rho, atol=1e-6)
    assert res.gap <= 1e-7


@pytest.mark.parametrize("kind", ["trivial_output", "trivial_input"])
def test_trivial_system_cases(kind):
    g = proc.random_gamma(4, 3, "generic")
    state = proc.random_state(5, 3, rank=2)
    if kind == "trivial_output":
        cf = cr.special_cases(kind, sigma=state, gamma_in=g)
        expected = ent.d_min0(state, g).value
        gi, go = g, np.ones((1, 1))
    else:
        cf = cr.special_cases(kind, rho_out=state, gamma_out=g)
        expected = -ent.d_max(state, g).value
        gi, go = np.ones((1, 1)), g
    assert cf.value_bits == pytest.approx(expected, abs=1e-12)
    assert cr.cohrel_nonsmooth(cf.details["process"], gi, go).value_bits == pytest.approx(expected, abs=1e-6)


def test_gibbs_to_arbitrary_matches_program():
    gi = proc.random_gamma(6, 2)
    go = proc.random_gamma(7, 2, "generic")
    ch = proc.random_channel(8, 2, 2)
    rho = proc.process_matrix(ch, gi / np.trace(gi))
    cf = cr.special_cases("gibbs_to_arbitrary", rho=rho, gamma_in=gi, gamma_out=go)
    assert cr.cohrel_nonsmooth(rho, gi, go).value_bits == pytest.approx(cf.value_bits, abs=1e-6)


def test_max_entropy_duality():
    psi = proc.random_pure_state(9, 2 * 2 * 4)
    cf = cr.special_cases("max_entropy", psi=psi, dims=(2, 2, 4))
    val = cr.cohrel_nonsmooth(cf.details["process"], np.eye(2), np.eye(2)).value_bits
    assert val == pytest.approx(cf.value_bits, abs=1e-6)
    assert cf.details["minus_h_zero"] == pytest.approx(cf.value_bits, abs=1e-9)


def test_battery_relative_entropy_agrees():
    vals = cr.battery_relative_entropy(KET0, GAMMA_HALF)
    for key in ("relative_entropy", "d_min0", "d_max"):
        assert vals[key] == pytest.approx(vals["closed_form"], abs=1e-12)
    full = cr.battery_relative_entropy(np.eye(2), GAMMA_HALF)
    assert full["closed_form"] == pytest.approx(-LOG2_THREE_HALVES)


def test_swap_counterexample_is_strict():
    sw = cr.swap_counterexample()
    assert sw["closed_form_sum"] == pytest.approx(-LOG2_25_16, abs=1e-12)
    assert sw["sum"] == pytest.approx(sw["closed_form_sum"], abs=1e-6)
    assert sw["gap"] >= 0.01
    assert sw["joint"] == pytest.approx(sw["sum"] + sw["gap"], abs=1e-9)


def test_support_leak_raises_with_weight():
    g_out = np.diag([1.0, 0.0]).astype(complex)
    pm = proc.process_matrix(proc.identity_channel(2), np.eye(2) / 2)
    with pytest.raises(cr.CohRelError) as info:
        cr.cohrel_nonsmooth(pm, np.eye(2), g_out)
    assert info.value.leaked_weight == pytest.approx(0.5, abs=1e-9)


@pytest.mark.parametrize("eps", [-0.1, 1.0, 1.5])
def test_eps_out_of_range(eps):
    pm, gi, go = _instance(10)
    with pytest.raises(cr.CohRelError):
        cr.cohrel_smooth_z(pm, gi, go, eps)


def test_x_bracket_range_and_collapse():
    pm, gi, go = _instance(11)
    with pytest.raises(cr.CohRelError):
        cr.cohrel_smooth_x_bracket(pm, gi, go, 0.2)  # 3 sqrt(0.2) > 1
    zero = cr.cohrel_smooth_x_bracket(pm, gi, go, 0.0)
    assert zero.bracket[0] == zero.bracket[1] == pytest.approx(cr.cohrel_nonsmooth(pm, gi, go).value_bits)
    res = cr.cohrel_smooth_x_bracket(pm, gi, go, 0.01)
    lo, hi = cr.trivial_bounds(gi, go, 0.3)
    assert res.lower <= res.upper + 1e-9
    assert res.lower >= zero.value_bits - 1e-6
    assert lo - 1e-5 <= res.lower and res.upper <= hi + 1e-5


def test_smoothing_candidates_within_ball():
    pm, gi, go = _instance(12)
    for name, cand in cr.smoothing_candidates(pm, gi, go, 0.1):
        assert la.purified_distance(cand, pm.rho) <= 0.1 + 1e-9, name


def test_purification_independence():
    pm, gi, go = _instance(13)
    n = pm.d_in * pm.d_out
    a = cr.cohrel_smooth_z(pm, gi, go, 0.1, env_dim=n, env_unitary=proc.random_isometry(1, n, n)).value_bits
    b = cr.cohrel_smooth_z(pm, gi, go, 0.1, env_dim=n, env_unitary=proc.random_isometry(2, n, n)).value_bits
    c = cr.cohrel_smooth_z(pm, gi, go, 0.1).value_bits
    assert a == pytest.approx(b, abs=1e-5)
    assert a == pytest.approx(c, abs=1e-5)


def test_eps_monotone_and_within_trivial_bounds():
    pm, gi, go = _instance(14)
    vals = [cr.cohrel_smooth_z(pm, gi, go, e).value_bits for e in (0.0, 0.1, 0.2)]
    assert vals[0] <= vals[1] + 1e-5 <= vals[2] + 2e-5
    for e, v in zip((0.0, 0.1, 0.2), vals):
        lo, hi = cr.trivial_bounds(gi, go, e)
        assert lo - 1e-5 <= v <= hi + 1e-5


def test_bounds_suite_has_no_violations():
    pm, gi, go = _instance(15)
    rec = cr.bounds_suite(pm, gi, go, 0.1)
    assert rec.violations(1e-5) == []
    assert rec["smooth_lower_z"].side == "lower"
    with pytest.raises(KeyError):
        rec["nonexistent"]


def test_units():
    assert cr.bits_to_nats(1.0) == pytest.approx(np.log(2.0))
    assert cr.work_from_bits(1.0, 300.0) == pytest.approx(scipy.constants.k * 300.0 * np.log(2.0))


def test_property_checks_named():
    res = cr.property_checks(0, names=["scaling", "gamma_ordering"])
    assert [r.name for r in res] == ["scaling", "gamma_ordering"]
    assert all(r.passed for r in res)


def test_battery_robustness_candidate_feasible():
    gi = proc.random_gamma(16, 2)
    go = proc.random_gamma(17, 2)
    t = proc.random_channel(18, 2, 2)
    alpha = proc.gamma_factor(t, gi, go)
    battery = proc.BatterySpec.wit(1.0, 1.2 * alpha)
    cand = cr.battery_robustness(t, proc.random_state(19, 2), gi, go, battery, 0.05)
    assert cand.feasible
    assert cand.achieved_bits <= cand.smooth_value + 1e-6


def test_aep_guard_and_csv():
    pm, gi, go = _instance(20)
    with pytest.raises(cr.CohRelError):
        cr.aep_study(pm, gi, go, 0.1, n_max=5)  # 4^5 > 256
    table = cr.aep_study(pm, gi, go, 0.1, n_max=1)
    lines = table.to_csv().strip().split("\n")
    assert lines[0].split(",") == list(cr.AEP_COLUMNS)
    assert lines[1].endswith(",")  # runtime column empty without timing


def test_aep_gibbs_deviation_n2():
    pm = cr.gibbs_to_gibbs_process(GAMMA_HALF, GAMMA_HALF, None, KET0)
    table = cr.aep_study(pm, GAMMA_HALF, GAMMA_HALF, 0.1, n_max=2)
    for row in table.rows:
        assert row.limit == pytest.approx(-LOG2_THREE_HALVES, abs=1e-12)
        assert row.value_per_n - row.limit == pytest.approx(-np.log2(1 - 0.01) / row.n, abs=1e-5)


@settings(max_examples=8)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.2, 5.0))
def test_scaling_shift_property(seed, scale):
    pm, gi, go = _instance(seed)
    base = cr.cohrel_nonsmooth(pm, gi, go).value_bits
    shifted = cr.cohrel_nonsmooth(pm, scale * gi, go).value_bits
    assert shifted - base == pytest.approx(-np.log2(scale), abs=1e-6)


@settings(max_examples=8)
@given(seed=st.integers(0, 2**32 - 1))
def test_nonsmooth_sandwich_property(seed):
    pm, gi, go = _instance(seed)
    rec = cr.bounds_suite(pm, gi, go, 0.0)
    assert rec.violations(1e-5) == []
