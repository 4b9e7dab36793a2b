import math

import numpy as np
import pytest

from levysim.errors import PreconditionError
from levysim.models import make_model
from levysim.wiener_hopf import atom_kind, atom_mass, phi_decayed, phi_fv, phi_minus, phi_plus, q_roots

QS = (0.5, 1.0, 5.0, 25.0)


@pytest.mark.parametrize("mu", [0.0, 0.3, -0.5])
def test_bm_factors_closed_form(mu):
    s2 = 0.64
    m = make_model("BM", sigma=0.8, mu=mu)
    xi = np.linspace(-20, 20, 50)
    for q in QS:
        r = math.sqrt(mu * mu + 2 * q * s2)
        bp, bm_ = (-mu + r) / s2, (mu + r) / s2
        assert np.max(np.abs(phi_plus(m, q, xi) - bp / (bp - 1j * xi))) < 1e-10
        assert np.max(np.abs(phi_minus(m, q, xi) - bm_ / (bm_ + 1j * xi))) < 1e-10


def test_q_roots_exact_hit():
    # q + psi(-i v) vanishes at v = -1 and v = 1 exactly for standard BM and q = 1/2
    lo, hi = q_roots(make_model("BM", sigma=1.0), 0.5)
    assert lo == pytest.approx(-1.0, abs=1e-14)
    assert hi == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("model", [
    make_model("NIG", alpha=8.0, beta=-2.0, delta=0.3, mu=0.1),
    make_model("CGMY", C=0.5, G=3.0, M=4.0, Y=1.5, mu=0.05),
])
def test_factorization_identity(model):
    xi = np.linspace(-30, 30, 50)
    for q in QS:
        r = phi_plus(model, q, xi) * phi_minus(model, q, xi) * (q + model.psi(xi.astype(complex))) / q
        assert np.max(np.abs(r - 1)) < 1e-9


def test_factors_are_characteristic_functions(nig):
    q = 2.0
    assert abs(phi_plus(nig, q, 0.0) - 1) < 1e-12
    assert abs(phi_minus(nig, q, 0.0) - 1) < 1e-12
    xi = np.linspace(-50, 50, 101)
    assert np.all(np.abs(phi_plus(nig, q, xi)) <= 1 + 1e-12)


def test_atoms():
    fv = make_model("CGMY", C=0.5, G=3.0, M=4.0, Y=0.5, mu=0.2)
    assert atom_kind(fv) == "minus"
    assert atom_kind(make_model("CGMY", C=0.5, G=3.0, M=4.0, Y=0.5, mu=-0.2)) == "plus"
    assert atom_kind(make_model("BM", mu=0.2)) == "none"
    xi = np.linspace(-30, 30, 7)
    for q in (1.0, 5.0):
        a = atom_mass(fv, q, "minus")
        assert 0 < a < 1
        assert atom_mass(fv, q, "plus") == 0.0
        np.testing.assert_allclose(phi_decayed(fv, q, xi, "minus") + a, phi_minus(fv, q, xi), atol=1e-12)
        np.testing.assert_allclose(phi_fv(fv, q, xi, "plus"), phi_plus(fv, q, xi), atol=1e-9)
        r = phi_plus(fv, q, xi) * phi_minus(fv, q, xi) * (q + fv.psi(xi.astype(complex))) / q
        assert np.max(np.abs(r - 1)) < 1e-9
    # the atom grows towards one as q grows
    assert atom_mass(fv, 25.0, "minus") > atom_mass(fv, 1.0, "minus")


def test_atom_arguments(bm):
    with pytest.raises(PreconditionError):
        atom_mass(bm, 1.0, "up")
    with pytest.raises(PreconditionError):
        atom_mass(bm, -1.0, "plus")
