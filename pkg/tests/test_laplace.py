import math

import numpy as np
import pytest

from levysim.errors import PreconditionError
from levysim.laplace import LaplaceBackend, bromwich_allowed, choose_backend, gwr_abscissas, gwr_invert, invert
from levysim.models import make_model


def test_gwr_exponential():
    for t in (0.5, 1.0, 2.0):
        q = gwr_abscissas(8, t)
        assert abs(gwr_invert(1.0 / (q + 1.0), t) - math.exp(-t)) < 1e-5


def test_gwr_vectorized_over_points():
    t = 1.0
    q = gwr_abscissas(8, t)
    a = np.array([0.5, 1.0, 2.0])
    vals = 1.0 / (q[:, None] + a[None, :])
    np.testing.assert_allclose(gwr_invert(vals, t), np.exp(-a * t), atol=1e-5)


def test_bromwich_backend(bm):
    be = choose_backend(bm)
    assert be.kind == "SinhBromwich"
    val = invert(be, lambda q: 1.0 / (q * (q + 2.0)), 1.0, model=bm)
    assert abs(val - (1 - math.exp(-2.0)) / 2) < 1e-11


def test_gwr_backend_generic():
    val = invert(LaplaceBackend("GWR"), lambda q: 1.0 / (q + 1.0) ** 2, 1.5)
    assert abs(val - 1.5 * math.exp(-1.5)) < 1e-5


def test_backend_choice():
    assert bromwich_allowed(make_model("NIG", alpha=10, beta=1, delta=1, mu=0.0))
    assert not bromwich_allowed(make_model("NIG", alpha=10, beta=1, delta=1, mu=0.2))
    assert not bromwich_allowed(make_model("CGMY", C=1, G=5, M=5, Y=0.5, mu=0.2))
    assert bromwich_allowed(make_model("CGMY", C=1, G=5, M=5, Y=1.5, mu=0.2))
    assert choose_backend(make_model("CGMY", C=1, G=5, M=5, Y=0.5, mu=0.2)).kind == "GWR"


def test_bad_backend():
    with pytest.raises(PreconditionError):
        LaplaceBackend("Talbot")
    with pytest.raises(PreconditionError):
        gwr_abscissas(0, 1.0)
