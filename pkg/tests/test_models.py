import numpy as np
import pytest

from levysim.errors import ParameterDomainError, UnsupportedModelError
from levysim.models import decay_cone, integrand_scale, make_model, model_from_config

FAMILIES = [
    ("BM", {"sigma": 0.8, "mu": 0.3}),
    ("NIG", {"alpha": 8.0, "beta": -2.0, "delta": 0.3, "mu": 0.1}),
    ("CGMY", {"C": 1.0, "G": 5.0, "M": 5.0, "Y": 1.5}),
    ("KoBoL", {"C": 1.0, "G": 5.0, "M": 5.0, "Y": 0.5, "mu": 0.2}),
    ("VG", {"sigma": 0.2, "theta": -0.1, "kappa": 0.3, "mu": 0.1}),
    ("Merton", {"sigma": 0.2, "lam": 1.0, "m": -0.1, "s": 0.2}),
    ("Meixner", {"a": 0.5, "b": 0.3, "d": 1.0}),
    ("RegularizedStable", {"alpha": 1.5}),
]


@pytest.mark.parametrize("family,params", FAMILIES)
def test_exponent_invariants(family, params):
    m = make_model(family, params)
    xi = np.linspace(-30, 30, 61).astype(complex)
    psi = m.psi(xi)
    assert m.psi(np.zeros(1, dtype=complex))[0] == 0
    np.testing.assert_allclose(m.psi(-xi), np.conj(psi), rtol=1e-12, atol=1e-14)
    assert np.all(m.psi0(xi).real >= -1e-12)
    assert m.strip[0] < 0 < m.strip[1]
    assert 0 < decay_cone(m) <= np.pi / 2
    assert integrand_scale(m, 1.0) > 0


def test_bm_exponent_closed_form():
    m = make_model("BM", sigma=0.7, mu=0.4)
    xi = np.array([-2.0, 0.5, 3.0 + 1.0j])
    np.testing.assert_allclose(m.psi(xi), 0.49 * xi ** 2 / 2 - 0.4j * xi, rtol=1e-14)


def test_nig_exponent_closed_form():
    a, b, d = 8.0, -2.0, 0.3
    m = make_model("NIG", alpha=a, beta=b, delta=d)
    xi = np.array([-5.0, 0.3, 7.0])
    ref = d * (np.sqrt(a * a - (b + 1j * xi) ** 2) - np.sqrt(a * a - b * b))
    np.testing.assert_allclose(m.psi(xi.astype(complex)), ref, rtol=1e-12)


def test_characteristic_function_convention(bm):
    # E exp(i xi X_1) = exp(-psi(xi)) = exp(-xi^2 / 2) for standard BM
    xi = np.array([0.5, 1.0, 2.0], dtype=complex)
    np.testing.assert_allclose(np.exp(-bm.psi(xi)), np.exp(-xi.real ** 2 / 2), rtol=1e-15)


def test_finite_variation_flag():
    assert make_model("CGMY", C=1, G=5, M=5, Y=0.5).finite_variation
    assert not make_model("CGMY", C=1, G=5, M=5, Y=1.5).finite_variation
    assert not make_model("BM").finite_variation


@pytest.mark.parametrize("family,params", [
    ("BM", {"sigma": -1.0}),
    ("NIG", {"alpha": 1.0, "beta": 2.0, "delta": 1.0}),
    ("NIG", {"alpha": 5.0, "beta": 0.0, "delta": 0.0}),
    ("CGMY", {"C": 1.0, "G": 5.0, "M": 5.0, "Y": 2.5}),
    ("BM", {"sigma": 1.0, "mu": float("nan")}),
])
def test_parameter_domain(family, params):
    with pytest.raises(ParameterDomainError):
        make_model(family, params)


def test_unsupported():
    with pytest.raises(UnsupportedModelError):
        make_model("Heston")
    with pytest.raises(UnsupportedModelError):
        make_model("VG", sigma=0.2, theta=-0.1, kappa=0.3)


def test_model_from_config():
    m = model_from_config({"family": "nig", "alpha": "10", "beta": "1", "delta": "1", "mu": "0.5"})
    assert m.family == "NIG" and m.mu == 0.5
    assert m.fingerprint() == make_model("NIG", alpha=10, beta=1, delta=1, mu=0.5).fingerprint()
    assert m.fingerprint() != make_model("NIG", alpha=10, beta=1, delta=1).fingerprint()
    with pytest.raises(ParameterDomainError):
        model_from_config({"alpha": "1"})
    with pytest.raises(ParameterDomainError):
        model_from_config({"family": "BM", "sigma": "one"})
