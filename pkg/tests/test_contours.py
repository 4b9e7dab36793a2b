import math

import numpy as np
import pytest
from scipy.stats import norm

from levysim.contours import BromwichContour, SinhContour, select_bromwich, select_contour, zeta_from_bound
from levysim.errors import PreconditionError
from levysim.fourier import cdf_X


def test_sinh_contour_validation():
    with pytest.raises(PreconditionError):
        SinhContour(omega1=0.0, b=-1.0, omega=0.1, zeta=0.1, N=10)
    with pytest.raises(PreconditionError):
        SinhContour(omega1=0.0, b=1.0, omega=2.0, zeta=0.1, N=10)
    with pytest.raises(PreconditionError):
        SinhContour(omega1=-1.0, b=1.0, omega=0.1, zeta=0.1, N=10, kind="Lplus")
    with pytest.raises(PreconditionError):
        SinhContour(omega1=1.0, b=1.0, omega=0.1, zeta=0.1, N=10, kind="Lminus")


def test_sinh_nodes_geometry():
    c = SinhContour(omega1=0.3, b=2.0, omega=0.4, zeta=0.05, N=80, kind="Lplus")
    xi, w = c.nodes()
    assert xi.size == c.size == 161
    assert xi[80] == pytest.approx(1j * c.crossing)
    # the trapezoid rule integrates a Gaussian along the deformed contour
    val = np.sum(w * np.exp(-xi ** 2 / 2)) * 2 * math.pi
    assert abs(val - math.sqrt(2 * math.pi)) < 1e-12


def test_select_contour_sides(bm):
    up = select_contour(bm, 1.0, "cpdf_upper", 1e-12)
    lo = select_contour(bm, -1.0, "cpdf_lower", 1e-12)
    assert up.crossing > 0 and up.kind == "Lplus"
    assert lo.crossing < 0 and lo.kind == "Lminus"
    assert up.est_error <= 1e-12
    with pytest.raises(PreconditionError):
        select_contour(bm, -1.0, "cpdf_upper", 1e-12)
    with pytest.raises(PreconditionError):
        select_contour(bm, 1.0, "pdf", 0.5)


def test_zeta_from_bound_monotone():
    z1 = zeta_from_bound(1.0, 0.5, 1e-6)
    z2 = zeta_from_bound(1.0, 0.5, 1e-12)
    assert 0 < z2 < z1


def _grid_error(bm, contours, zeta):
    worst = 0.0
    for a, c in contours:
        L = c.zeta * c.N
        cc = c.with_grid(zeta, math.ceil(L / zeta))
        worst = max(worst, abs(cdf_X(bm, 1.0, a, contour=cc, clamp=False) - norm.cdf(a)))
    return worst


def test_discretization_error_at_least_squares(bm):
    # the bound decays as exp(-2 pi d / zeta): halving zeta at least squares the error
    A = np.linspace(-3, 3, 13)
    contours = [(a, select_contour(bm, -a, "cpdf_upper" if a <= 0 else "cpdf_lower", 1e-12)) for a in A]
    for zeta in (0.25, 0.2, 0.16):
        e = _grid_error(bm, contours, zeta)
        e2 = _grid_error(bm, contours, zeta / 2)
        assert 1e-7 < e < 1e-2
        assert e2 <= 10 * e * e


def test_bromwich_contour_inverts_exponential(bm):
    for t in (0.5, 1.0):
        c = select_bromwich(bm, t, 1e-12)
        assert isinstance(c, BromwichContour)
        assert c.crossing > 0
        q, w = c.half_nodes()
        val = float(np.real(np.sum(w * np.exp(q * t) / (q * (q + 1.0)))))
        assert abs(val - (1 - math.exp(-t))) < 1e-11
