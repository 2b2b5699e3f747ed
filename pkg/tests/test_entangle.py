import cmath
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcdma import entangle as E
from qcdma.errors import ConfigError, DomainError
from qcdma.optics import NetworkFactors

PHI = math.pi / 3


def test_dispersive_coupling():
    c = E.DispersiveCoupling(cavity_frequency=2e10, qubit_frequency=1.9e10, coupling=1e8,
                             interaction_time=5e-8)
    assert c.detuning == pytest.approx(1e9)
    assert c.shift == pytest.approx(1e7)
    assert c.phase == pytest.approx(1.0)
    with pytest.raises(DomainError):
        E.DispersiveCoupling(2e10, 1.999e10, 1e8, 5e-8)  # |Delta| < 10 g
    with pytest.raises(DomainError):
        E.DispersiveCoupling(2e10, 1.9e10, 1e8, 1e-3)  # phase beyond pi


def test_prepare_plus():
    s = E.prepare_plus(1)
    assert [tuple(c) for c in s.configs] == [(0,), (1,)]
    assert np.allclose(s.coeffs, 1 / math.sqrt(2))
    s2 = E.prepare_plus(2)
    assert len(s2) == 4 and np.allclose(s2.coeffs, 0.5)
    assert s2.norm() == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ConfigError):
        E.prepare_plus(0)


def test_attach_probe():
    s = E.prepare_plus(2)
    t = E.attach_probe(s, "a", 2.0)
    assert np.array_equal(t.coeffs, s.coeffs)
    assert t.norm() == pytest.approx(1.0)
    assert E.attach_probe(s, "v", 0.0).gram() == pytest.approx(s.gram())
    with pytest.raises(ConfigError):
        E.attach_probe(t, "a", 1.0)


def test_interaction_reproduces_pointer_branches():
    alpha = 3.0
    s = E.dispersive_interact(E.attach_probe(E.prepare_plus(1), "a", alpha), "q1", "a", PHI)
    g, e = s.amps[:, 0]
    assert g == pytest.approx(alpha * cmath.exp(-0.5j * PHI))
    assert e == pytest.approx(alpha * cmath.exp(0.5j * PHI))
    assert np.allclose(s.coeffs, 1 / math.sqrt(2))


def test_interaction_identity_and_inverse():
    s = E.attach_probe(E.prepare_plus(2), "a", 1.5 + 0.5j)
    assert np.array_equal(E.dispersive_interact(s, "q2", "a", 0.0).amps, s.amps)
    back = E.dispersive_interact(E.dispersive_interact(s, "q1", "a", 0.7), "q1", "a", -0.7)
    assert np.allclose(back.amps, s.amps, atol=1e-15)
    with pytest.raises(ConfigError):
        E.dispersive_interact(s, "q9", "a", 0.1)
    with pytest.raises(ConfigError):
        E.dispersive_interact(s, "q1", "zz", 0.1)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 30), st.floats(0.01, 3.1), st.floats(-3, 3))
def test_norm_conserved_before_network(n, phi, arg):
    cfg = E.DistributionConfig(mean_photon_number=n, phi=phi)
    s = E.prepare_plus(4, ("q1", "q2", "q3", "q4"))
    s = E.attach_probe(s, "a1", cfg.alpha * cmath.exp(1j * arg))
    s = E.attach_probe(s, "a2", cfg.alpha)
    s = E.dispersive_interact(s, "q1", "a1", phi)
    s = E.dispersive_interact(s, "q2", "a2", phi)
    assert s.norm() == pytest.approx(1.0, abs=1e-10)


def test_network_ideal_halves_amplitudes():
    alpha = 4.0
    s = E.attach_probe(E.attach_probe(E.prepare_plus(2), "a1", alpha), "a2", alpha)
    s = E.dispersive_interact(s, "q1", "a1", PHI)
    t = E.propagate_network(s, ("a1", "a2"), NetworkFactors(), rename=("a3", "a4"))
    assert t.modes == ("a3", "a4")
    assert np.allclose(t.amps, s.amps / 2)
    # configuration g on qubit 1 carries |(alpha/2) e^{-i phi/2}>
    g_rows = t.configs[:, 0] == 0
    assert np.allclose(t.amps[g_rows, 0], alpha / 2 * cmath.exp(-0.5j * PHI))


def test_network_cancellation_and_loss():
    s = E.attach_probe(E.attach_probe(E.prepare_plus(1), "a1", 1.0), "a2", -1.0)
    t = E.propagate_network(s, ("a1", "a2"), NetworkFactors(1, 1, 0))
    assert np.allclose(t.amps[:, 0], 0)
    lossy = E.propagate_network(s, ("a1", "a2"), NetworkFactors(0, 0, 0.36))
    ideal = E.propagate_network(s, ("a1", "a2"), NetworkFactors())
    assert np.allclose(lossy.amps, 0.8 * ideal.amps)
    with pytest.raises(ConfigError):
        E.propagate_network(s, ("a1", "a9"), NetworkFactors())


def test_pointer_outcomes_merge_coincident():
    assert len(E.pointer_outcomes(1.0, PHI)) == 3
    assert E.pointer_outcomes(0.0, PHI) == [0j]


def test_measure_errors():
    s = E.attach_probe(E.prepare_plus(1), "a", 1.0)
    with pytest.raises(ConfigError):
        E.measure_pointer(s, "a", [], select=0)
    with pytest.raises(DomainError):
        E.measure_pointer(s, "a", [1.0, 1.0], select=0)
    with pytest.raises(ConfigError):
        E.measure_pointer(s, "a", [1.0], model="heterodyne", select=0)


def test_ideal_limit_probability_and_state():
    cfg = E.DistributionConfig(mean_photon_number=1e4)
    s = E.prepare_network_state(cfg)
    out = E.pointer_outcomes(cfg.alpha / 2, cfg.phi)
    _, p3, s3 = E.measure_pointer(s, "a3", out, select=0)
    _, p4, s34 = E.measure_pointer(s3, "a4", out, select=0)
    assert p3 * p4 == pytest.approx(0.25, abs=1e-12)
    bell = E.BELL_STATES["psi+"]
    expected = E.TwoQubitDensityMatrix.pure(bell)
    assert np.allclose(E.reduced_density(s34, ("q1", "q3")).matrix, expected.matrix, atol=1e-12)
    assert np.allclose(E.reduced_density(s34, ("q2", "q4")).matrix, expected.matrix, atol=1e-12)


def test_finite_n_success_branch_contamination():
    # after a3 = alpha/2: the |g1 g3> amplitude relative to the Bell part is
    # <alpha/2 | (alpha/2) e^{-i phi}> (1/2) / (1/sqrt 2)
    n = 10.0
    cfg = E.DistributionConfig(mean_photon_number=n)
    s = E.prepare_network_state(cfg)
    out = E.pointer_outcomes(cfg.alpha / 2, PHI)
    _, _, s3 = E.measure_pointer(s, "a3", out, select=0)
    rho = E.reduced_density(s3, ("q1", "q3")).matrix
    ratio = math.sqrt(rho[0, 0].real / rho[1, 1].real)  # |gg| / |ge|
    expected = math.exp(-0.5 * n * math.sin(PHI / 2) ** 2)
    assert ratio == pytest.approx(expected, rel=1e-9)
    assert expected == pytest.approx(math.exp(-1.25), rel=1e-12)


def test_sampling_is_seeded():
    cfg = E.DistributionConfig(mean_photon_number=1.0)
    s = E.prepare_network_state(cfg)
    out = E.pointer_outcomes(cfg.alpha / 2, PHI)
    draws = [E.measure_pointer(s, "a3", out, seed=42)[0] for _ in range(3)]
    assert len(set(draws)) == 1
    counts = np.bincount([E.measure_pointer(s, "a3", out, seed=k)[0] for k in range(400)], minlength=3)
    probs = [p for p, _ in E.pointer_distribution(s, "a3", out)]
    assert counts / 400 == pytest.approx(probs, abs=0.08)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 50), st.floats(0.05, 3.0), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.95))
def test_idealized_outcomes_complete(n, phi, m1, m2, eta):
    cfg = E.DistributionConfig(mean_photon_number=n, phi=phi, m1=m1, m2=m2, eta=eta, model=E.IDEALIZED)
    s = E.prepare_network_state(cfg)
    out = E.pointer_outcomes(math.sqrt(1 - eta) * cfg.alpha / 2, phi)
    dist = E.pointer_distribution(s, "a3", out, E.IDEALIZED)
    assert sum(p for p, _ in dist) == pytest.approx(1.0, abs=1e-6)


def test_idealized_model_reproduces_orthogonal_limit():
    r = E.distribute(E.DistributionConfig(mean_photon_number=2.0, model=E.IDEALIZED))
    assert r.f1 == pytest.approx(1.0, abs=1e-12)
    assert r.p_success == pytest.approx(0.25, abs=1e-12)


def test_density_matrix_validation():
    with pytest.raises(DomainError):
        E.TwoQubitDensityMatrix(np.diag([1.0, 0.5, 0.0, 0.0]))
    with pytest.raises(DomainError):
        E.TwoQubitDensityMatrix(np.diag([1.5, -0.5, 0.0, 0.0]))
    with pytest.raises(DomainError):
        E.TwoQubitDensityMatrix(np.eye(3) / 3)


def test_reduced_density_of_bell_and_product_states():
    # |Psi+> on (q1, q2) as a branch state
    s = E.BranchState(("q1", "q2"), (), [[0, 1], [1, 0]], [1 / math.sqrt(2)] * 2, np.zeros((2, 0)))
    rho = E.reduced_density(s, ("q1", "q2"))
    assert rho.purity() == pytest.approx(1.0)
    assert E.fidelity(rho) == pytest.approx(1.0)
    prod = E.reduced_density(E.prepare_plus(3), ("q1", "q3"))
    assert prod.purity() == pytest.approx(1.0)
    assert np.allclose(prod.matrix, np.full((4, 4), 0.25))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 30), st.floats(0.05, 3.0), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.99),
       st.sampled_from(E.MODELS))
def test_conditional_densities_are_valid(n, phi, m1, m2, eta, model):
    r = E.distribute(E.DistributionConfig(mean_photon_number=n, phi=phi, m1=m1, m2=m2, eta=eta, model=model))
    for rho in (r.rho13, r.rho24):
        m = rho.matrix
        assert np.allclose(m, m.conj().T, atol=1e-10)
        assert np.trace(m).real == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.eigvalsh(m).min() >= -1e-10
    assert 0.0 <= r.p_success <= 1.0


def test_fidelity_examples():
    assert E.fidelity(E.TwoQubitDensityMatrix.pure(E.BELL_STATES["psi+"])) == pytest.approx(1.0)
    assert E.fidelity(np.eye(4) / 4) == pytest.approx(0.25)
    assert E.fidelity(np.diag([1.0, 0, 0, 0])) == 0.0
    with pytest.raises(DomainError):
        E.fidelity(np.diag([1.0, 1.0, 0, 0]))
    with pytest.raises(ConfigError):
        E.fidelity(np.eye(4) / 4, "w")


def test_distribute_ideal_limit():
    r = E.distribute(E.DistributionConfig(mean_photon_number=1e4))
    assert r.f1 == pytest.approx(1.0, abs=1e-6)
    assert r.f2 == pytest.approx(1.0, abs=1e-6)
    assert r.p_success == pytest.approx(0.25, abs=1e-3)


@pytest.mark.parametrize("eta", [0.0, 0.5])
def test_distribute_finite_n_closed_form(eta):
    r = E.distribute(E.DistributionConfig(mean_photon_number=10.0, eta=eta))
    expected = 1 / (1 + math.exp(-2.5 * (1 - eta)))
    assert r.f1 == pytest.approx(expected, abs=1e-9)
    assert r.f2 == pytest.approx(expected, abs=1e-9)
    assert E.closed_form_fidelity(10.0, PHI, eta) == pytest.approx(expected, rel=1e-14)


def test_distribute_closed_form_values():
    assert E.closed_form_fidelity(10.0, PHI) == pytest.approx(0.924142, abs=1e-6)
    assert E.closed_form_fidelity(10.0, PHI, 0.5) == pytest.approx(0.777300, abs=1e-6)


def test_distribute_total_loss():
    r = E.distribute(E.DistributionConfig(eta=1.0))
    assert r.p_success == 1.0
    assert r.f1 == pytest.approx(0.5)


def test_fidelity_monotone_in_photon_number_and_loss():
    f_n = [E.distribute(E.DistributionConfig(mean_photon_number=n)).f1 for n in (1, 3, 10, 30, 100)]
    assert all(a <= b for a, b in zip(f_n, f_n[1:]))
    f_eta = [E.distribute(E.DistributionConfig(eta=e)).f1 for e in np.linspace(0, 0.9, 10)]
    assert all(a >= b for a, b in zip(f_eta, f_eta[1:]))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 40), st.floats(0.1, 3.0), st.floats(0, 1), st.floats(0, 1), st.floats(0, 0.9))
def test_pair_swap_symmetry(n, phi, m1, m2, eta):
    a = E.distribute(E.DistributionConfig(mean_photon_number=n, phi=phi, m1=m1, m2=m2, eta=eta))
    b = E.distribute(E.DistributionConfig(mean_photon_number=n, phi=phi, m1=m2, m2=m1, eta=eta))
    assert a.f1 == pytest.approx(b.f2, abs=1e-12)
    assert a.f2 == pytest.approx(b.f1, abs=1e-12)


@pytest.mark.parametrize("eta", np.linspace(0, 0.5, 6))
def test_removing_phase_shifters_degrades(eta):
    with_eom = E.distribute(E.DistributionConfig(m1=1e-3, m2=1e-3, eta=eta)).f1
    without = E.distribute(E.DistributionConfig(m1=1.0, m2=1.0, eta=eta)).f1
    assert without < with_eom


def test_validity_condition_region():
    for n in (10, 30, 100):
        for m in (1e-3, 1e-2, 0.03):
            if m * m < 0.1 * 4 / n:
                assert E.distribute(E.DistributionConfig(mean_photon_number=n, m1=m, m2=m)).f1 >= 0.9


def test_result_json():
    r = E.distribute(E.DistributionConfig(seed=7))
    doc = json.loads(r.to_json())
    assert doc["seed"] == 7 and doc["model"] == E.PROJECTION
    assert len(doc["rho13"]) == 16 and len(doc["rho13"][0]) == 2
    m = np.array([complex(*z) for z in doc["rho13"]]).reshape(4, 4)
    assert np.allclose(m, r.rho13.matrix)
    assert r.to_json() == E.distribute(E.DistributionConfig(seed=7)).to_json()


def test_config_validation():
    with pytest.raises(DomainError):
        E.DistributionConfig(phi=0.0)
    with pytest.raises(DomainError):
        E.DistributionConfig(eta=2.0)
    with pytest.raises(ConfigError):
        E.DistributionConfig(seed=-1)
