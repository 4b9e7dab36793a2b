import math

import numpy as np
import pytest
from scipy.stats import norm

from levysim.errors import QuantileError, TableConstructionError, TableFormatError
from levysim.models import make_model
from levysim.sampler import (build_conditional_table, build_quantile_table, load_table, quantile,
                             sample_drawdown, sample_pair_X_sup, sample_sup, sample_X, save_table, sup_dist,
                             table_to_csv, x_dist)


@pytest.fixture(scope="module")
def bm_x_table(bm):
    return build_quantile_table(x_dist(bm, 1.0))


@pytest.fixture(scope="module")
def bm_sup_table(bm):
    return build_quantile_table(sup_dist(bm, 1.0))


def test_table_covers_central_mass(bm_x_table):
    t = bm_x_table
    assert t.Fs[0] == pytest.approx(0.005, abs=1e-9)
    assert t.Fs[-1] == pytest.approx(0.995, abs=1e-9)
    assert np.all(np.diff(t.xs) > 0) and np.all(np.diff(t.Fs) > 0)
    assert t.M >= 512


def test_quantile_round_trip(bm_x_table):
    u = np.random.default_rng(0).random(5000)
    x = quantile(bm_x_table, u)
    assert np.max(np.abs(norm.cdf(x) - u)) < 1e-6
    assert np.all(np.diff(x[np.argsort(u)]) >= 0)


def test_deep_tails(bm_x_table):
    u = np.array([1e-12, 1e-6, 1 - 1e-6, 1 - 1e-10])
    np.testing.assert_allclose(quantile(bm_x_table, u), norm.ppf(u), rtol=1e-8)


def test_nig_round_trip(nig):
    d = x_dist(nig, 1.0)
    t = build_quantile_table(d)
    u = np.random.default_rng(1).random(2000)
    F, _ = d.central(quantile(t, u))
    assert np.max(np.abs(F - u)) < 1e-6


def test_sup_sampler(bm, bm_sup_table):
    u = np.random.default_rng(2).random(2000)
    h = sample_sup(bm, 1.0, bm_sup_table, u)
    assert np.all(h >= 0)
    assert np.max(np.abs(2 * norm.cdf(h) - 1 - u)) < 1e-6
    assert np.all(sample_drawdown(bm, 1.0, bm_sup_table, u) >= 0)


def test_uniform_checks(bm, bm_x_table):
    with pytest.raises(QuantileError):
        sample_X(bm, 1.0, bm_x_table, np.array([0.0, 0.5]))
    with pytest.raises(QuantileError):
        quantile(bm_x_table, 1.0)


def test_table_arguments(bm):
    with pytest.raises(Exception):
        build_quantile_table(x_dist(bm, 1.0), delta=0.5)
    with pytest.raises(Exception):
        build_quantile_table(x_dist(bm, 1.0), M=4)


def test_save_load(tmp_path, bm, bm_x_table):
    path = tmp_path / "bm.levq"
    save_table(bm_x_table, path)
    t = load_table(path, bm)
    np.testing.assert_array_equal(t.xs, bm_x_table.xs)
    np.testing.assert_array_equal(t.Fs, bm_x_table.Fs)
    u = np.array([1e-9, 0.3, 0.7, 1 - 1e-9])
    np.testing.assert_array_equal(quantile(t, u), quantile(bm_x_table, u))
    with pytest.raises(TableFormatError):
        load_table(path, make_model("BM", sigma=2.0))
    data = path.read_bytes()
    (tmp_path / "short.levq").write_bytes(data[:-8])
    with pytest.raises(TableFormatError):
        load_table(tmp_path / "short.levq")
    (tmp_path / "magic.levq").write_bytes(b"XXXXX" + data[5:])
    with pytest.raises(TableFormatError):
        load_table(tmp_path / "magic.levq")


def test_table_csv(tmp_path, bm_x_table):
    path = tmp_path / "t.csv"
    table_to_csv(bm_x_table, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x,F,p" and len(lines) == bm_x_table.M + 1


def test_pair_sampler(bm, bm_sup_table):
    ct = build_conditional_table(bm, 1.0, bm_sup_table, Mh=48, Mx=96)
    u = np.random.default_rng(3).random((20000, 2))
    for scheme in ("A", "B"):
        xh = sample_pair_X_sup(bm, 1.0, ct, u, scheme)
        x, h = xh[:, 0], xh[:, 1]
        assert np.all(x <= h + 1e-12) and np.all(h >= 0)
        worst = max(abs(np.mean((x <= a) & (h <= hh)) - (norm.cdf(a) - norm.cdf(a - 2 * hh)))
                    for a in (-1.0, 0.0, 0.5) for hh in (0.5, 1.0, 2.0) if a <= hh)
        assert worst < 0.015
