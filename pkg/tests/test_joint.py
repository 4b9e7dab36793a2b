import math

import numpy as np
import pytest
from scipy.stats import norm

from levysim.errors import DegenerateConditioningError, PreconditionError
from levysim.extremum import cdf_sup
from levysim.joint import (conditional_cdf_X_given_sup, dh_and_density_pairs, dh_joint_cdf, joint_cdf_tau_sup,
                           joint_cdf_X_sup, tau_cdf)


@pytest.mark.parametrize("a,h", [(0.0, 0.5), (-1.0, 1.0), (0.5, 1.0), (1.0, 1.0), (-2.0, 0.3)])
def test_bm_joint(bm, a, h):
    assert abs(joint_cdf_X_sup(bm, 1.0, a, h) - (norm.cdf(a) - norm.cdf(a - 2 * h))) < 1e-10


def test_bm_joint_derivatives(bm):
    a = np.array([-1.0, 0.0, 0.5])
    h = np.array([0.5, 1.0, 2.0])
    D, f = dh_and_density_pairs(bm, 1.0, a, h)
    np.testing.assert_allclose(D, 2 * norm.pdf(2 * h - a), atol=1e-10)
    np.testing.assert_allclose(f, 2 * (2 * h - a) * norm.pdf(2 * h - a), atol=1e-10)
    assert abs(dh_joint_cdf(bm, 1.0, 0.2, 1.0) - 2 * norm.pdf(1.8)) < 1e-10


def test_conditional(bm):
    h = 1.0
    ref = norm.pdf(2 * h - 0.3) / norm.pdf(h)
    assert abs(conditional_cdf_X_given_sup(bm, 1.0, 0.3, h) - ref) < 1e-9
    with pytest.raises(DegenerateConditioningError):
        conditional_cdf_X_given_sup(bm, 1.0, 0.0, 60.0)


def test_joint_arguments(bm):
    with pytest.raises(PreconditionError):
        dh_and_density_pairs(bm, 1.0, np.array([1.0]), np.array([0.5]))


def test_arcsine_law(bm):
    for t in (0.1, 0.5, 0.9):
        assert abs(tau_cdf(bm, 1.0, t) - 2 / math.pi * math.asin(math.sqrt(t))) < 1e-9


def test_first_touch_limits(bm):
    assert abs(joint_cdf_tau_sup(bm, 1.0, 1.0, 1.0) - cdf_sup(bm, 1.0, 1.0)) < 5e-12
    v1 = joint_cdf_tau_sup(bm, 1.0, 0.3, 1.0)
    v2 = joint_cdf_tau_sup(bm, 1.0, 0.6, 1.0)
    assert 0 < v1 < v2 < cdf_sup(bm, 1.0, 1.0)


def test_first_touch_approaches_sup_cdf(bm):
    # P[tau_T > t, sup <= h] vanishes like sqrt(T - t)
    F = cdf_sup(bm, 1.0, 0.5)
    g4 = F - joint_cdf_tau_sup(bm, 1.0, 1 - 1e-4, 0.5)
    g6 = F - joint_cdf_tau_sup(bm, 1.0, 1 - 1e-6, 0.5)
    assert g6 > 0 and abs(g4 / g6 - 10.0) < 0.05
