import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cohrelkit import linalg as la
from cohrelkit import process as proc


def _kraus_apply(kraus, rho):
    return sum(k @ rho @ k.conj().T for k in kraus)


@pytest.mark.parametrize("din,dout,env", [(2, 2, 1), (2, 3, 2), (3, 2, 3)])
def test_choi_and_kraus_agree(din, dout, env):
    ch = proc.random_channel(1, din, dout, env)
    rho = proc.random_state(2, din)
    assert np.allclose(proc.apply(ch, rho), _kraus_apply(ch.kraus(), rho), atol=1e-12)
    assert ch.is_trace_preserving()


def test_choi_matches_explicit_sum():
    """Choi = sum_ij E(|i><j|) (x) |i><j| with the output factor first."""
    u = proc.random_isometry(3, 2, 2)
    ch = proc.unitary_channel(u)
    ket = la.max_entangled_ket(2)
    expected = np.kron(u, np.eye(2)) @ np.outer(ket, ket.conj()) @ np.kron(u, np.eye(2)).conj().T
    assert np.allclose(ch.choi, expected, atol=1e-12)


def test_adjoint_is_hilbert_schmidt_dual():
    ch = proc.random_channel(4, 2, 3, 2)
    x = proc.random_hermitian(5, 2)
    y = proc.random_hermitian(6, 3)
    lhs = np.trace(y @ proc.apply(ch, x))
    rhs = np.trace(proc.apply(proc.adjoint(ch), y) @ x)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_compose_and_tensor():
    a = proc.random_channel(7, 2, 2, 2)
    b = proc.random_channel(8, 2, 3, 2)
    rho = proc.random_state(9, 2)
    assert np.allclose(proc.apply(proc.compose(b, a), rho), proc.apply(b, proc.apply(a, rho)), atol=1e-12)
    r1, r2 = proc.random_state(10, 2), proc.random_state(11, 2)
    joint = proc.apply(proc.tensor_maps(a, b), np.kron(r1, r2))
    assert np.allclose(joint, np.kron(proc.apply(a, r1), proc.apply(b, r2)), atol=1e-12)


def test_apply_extended_acts_on_first_factor():
    ch = proc.random_channel(12, 2, 3, 2)
    rho, other = proc.random_state(13, 2), proc.random_state(14, 2)
    out = proc.apply_extended(ch, np.kron(rho, other), 2)
    assert np.allclose(out, np.kron(proc.apply(ch, rho), other), atol=1e-12)


def test_choi_rejects_non_cp():
    with pytest.raises(proc.ProcessError):
        proc.ChoiMap(-np.eye(4), la.SystemDims(("X",), (2,)), la.SystemDims(("Y",), (2,)))


def test_choi_rejects_trace_increasing():
    with pytest.raises(proc.ProcessError):
        proc.ChoiMap(2 * np.eye(4), la.SystemDims(("X",), (2,)), la.SystemDims(("Y",), (2,)))


def test_choi_json_round_trip():
    ch = proc.random_channel(15, 2, 2, 2)
    back = proc.ChoiMap.from_json(ch.to_json())
    assert np.allclose(back.choi, ch.choi)
    assert back.tp_class == ch.tp_class


def test_process_matrix_marginals():
    ch = proc.random_channel(16, 2, 3, 2)
    sigma = proc.random_state(17, 2)
    pm = proc.process_matrix(ch, sigma)
    assert np.allclose(pm.reduced_out, proc.apply(ch, sigma), atol=1e-12)
    assert np.allclose(pm.reduced_ref, sigma.T, atol=1e-12)
    assert np.allclose(pm.input_state, sigma, atol=1e-12)
    back = proc.ProcessMatrix.from_json(pm.to_json())
    assert np.allclose(back.rho, pm.rho)


def test_map_from_process_recovers_channel_on_support():
    ch = proc.random_channel(18, 2, 2, 2)
    sigma = proc.random_state(19, 2)
    rec = proc.map_from_process(proc.process_matrix(ch, sigma))
    rho = proc.random_state(20, 2)
    assert np.allclose(proc.apply(rec, rho), proc.apply(ch, rho), atol=1e-9)


def test_process_matrix_rejects_bad_trace():
    with pytest.raises(proc.ProcessError):
        proc.ProcessMatrix.from_array(2 * np.eye(4) / 4, 2, 2)


def test_gamma_factor_closed_form():
    # Identity map with Gamma_out = Gamma_in / 2: factor 2.
    g = np.diag([1.0, 0.5]).astype(complex)
    assert proc.gamma_factor(proc.identity_channel(2), g, g / 2) == pytest.approx(2.0)
    assert proc.is_gamma_subpreserving(proc.identity_channel(2), g, g)


def test_gamma_factor_support_leak():
    g_out = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(proc.ProcessError):
        proc.gamma_factor(proc.identity_channel(2), np.eye(2), g_out)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dilation_is_gamma_preserving_and_recovers(seed):
    gk = proc.random_gamma(seed, 2)
    gl = proc.random_gamma(seed + 10, 2)
    t = proc.random_subpreserving_map(seed + 20, gk, gl)
    dil = proc.dilate(t, gk, gl)
    assert dil.phi.is_trace_preserving(1e-9)
    total = np.kron(np.kron(gk, gl), dil.gamma_q)
    assert np.allclose(proc.apply(dil.phi, total), total, atol=1e-9)
    x = proc.random_state(seed + 30, 2)
    assert np.allclose(proc.dilation_recover(dil, x, gk, gl), proc.apply(t, x), atol=1e-9)


def test_dilation_rejects_non_subpreserving():
    g = np.diag([1.0, 0.5]).astype(complex)
    with pytest.raises(proc.ProcessError):
        proc.dilate(proc.identity_channel(2), g, g / 2)


def test_battery_budget_and_implementation():
    g = np.diag([1.0, 0.5]).astype(complex)
    t = proc.identity_channel(2)
    gout = g / 2  # factor 2 must be paid by the battery
    wit = proc.BatterySpec.wit(0.25, 0.5)
    assert wit.budget == pytest.approx(2.0)
    phi = proc.battery_implementation(t, g, gout, wit)
    assert proc.is_gamma_subpreserving(phi, np.kron(g, wit.gamma_w), np.kron(gout, wit.gamma_w))
    omega = proc.random_state(31, 2)
    out = proc.apply(phi, np.kron(omega, wit.state_in))
    assert np.allclose(out, np.kron(omega, wit.state_out), atol=1e-12)
    back = proc.extract_system_map(phi, (wit.p_in, wit.gamma_w), (wit.p_out, wit.gamma_w))
    assert np.allclose(proc.apply(back, omega), omega, atol=1e-12)


def test_battery_insufficient_budget():
    g = np.diag([1.0, 0.5]).astype(complex)
    with pytest.raises(proc.ProcessError):
        proc.battery_implementation(proc.identity_channel(2), g, g / 4, proc.BatterySpec.wit(0.25, 0.5))


def test_information_battery():
    b = proc.BatterySpec.information(4, 4, 2)
    assert b.budget == pytest.approx(0.5)
    assert b.charge_out - b.charge_in == pytest.approx(1.0)
    with pytest.raises(proc.ProcessError):
        proc.BatterySpec.information(2, 3, 1)


def test_petz_recovery_maps_gamma_back():
    ga = proc.random_gamma(32, 3)
    f = proc.random_channel(33, 3, 2, 3)
    r = proc.petz_recovery(f, ga)
    gb = proc.apply(f, ga)
    assert np.allclose(proc.apply(r, gb), ga, atol=1e-9)
    assert r.is_trace_preserving(1e-9)


def test_petz_recovery_of_partial_trace_is_tensoring():
    ga = np.kron(np.diag([1.0, 0.3]), np.diag([1.0, 0.6, 0.2])).astype(complex)
    f = proc.partial_trace_channel(2, 3)
    r = proc.petz_recovery(f, ga)
    x = proc.random_state(34, 2)
    g2 = np.diag([1.0, 0.6, 0.2]).astype(complex)
    assert np.allclose(proc.apply(r, x), np.kron(x, g2 / np.trace(g2)), atol=1e-12)


def test_petz_rank_deficient_needs_flag():
    f = proc.replacement_channel(2, np.diag([1.0, 0.0]).astype(complex))
    with pytest.raises(proc.ProcessError):
        proc.petz_recovery(f, np.eye(2))
    r = proc.petz_recovery(f, np.eye(2), restrict_support=True)
    assert r.tp_class == "trace_nonincreasing"


def test_random_gamma_kinds():
    g = proc.random_gamma(35, 3, "generic", max_condition=50.0)
    w = np.linalg.eigvalsh(g)
    assert w.min() > 0 and w.max() / w.min() <= 50.0 + 1e-9
    with pytest.raises(proc.ProcessError):
        proc.random_gamma(35, 3, "bogus")


@given(seed=st.integers(0, 2**32 - 1), din=st.integers(1, 3), dout=st.integers(1, 3))
def test_random_channels_are_cptp(seed, din, dout):
    ch = proc.random_channel(seed, din, dout, env_dim=din)
    assert ch.is_trace_preserving()
    assert np.linalg.eigvalsh(ch.choi).min() >= -1e-12


@given(seed=st.integers(0, 2**32 - 1), d=st.integers(2, 3))
def test_random_subpreserving_maps_are_subpreserving(seed, d):
    gin = proc.random_gamma(seed, d)
    gout = proc.random_gamma(seed + 1, d)
    t = proc.random_subpreserving_map(seed + 2, gin, gout)
    assert proc.gamma_factor(t, gin, gout) <= 1.0 + 1e-9
    assert np.linalg.eigvalsh(t.trace_operator()).max() <= 1.0 + 1e-9
