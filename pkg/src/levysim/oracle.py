"""Random-walk skeleton oracle for ``(X_T, sup X_T, tau_T)`` and KS utilities.

Increments over ``T / n_steps`` are drawn with :func:`sampler.sample_X`, so
only the marginal machinery is shared with the code under test.  The
discrete maximum is biased low; tests allow for it with a term of order
``n_steps^{-1/2}``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import PreconditionError
from .extremum import DEFAULT_TOL
from .models import LevyModel
from .sampler import build_quantile_table, quantile, x_dist

KS_C99 = 1.63
BLOCK = 512
INCREMENT_DELTA = 1e-5


def ks_bound(n: int, c: float = KS_C99) -> float:
    """Critical KS distance ``c / sqrt(n)`` (99% level by default)."""
    return c / math.sqrt(n)


def ks_distance(empirical, cdf) -> float:
    """One-sample Kolmogorov-Smirnov statistic against a vectorized ``cdf``."""
    x = np.sort(np.asarray(empirical, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise PreconditionError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def grid_cdf(cdf_values, lo, hi, n: int = 2001, transform=None):
    """Monotone interpolant of an expensive cdf tabulated on ``n`` points of ``[lo, hi]``.

    ``cdf_values(x_array)`` is called once; outside ``[lo, hi]`` the end
    values are held.  ``transform`` maps abscissas to a variable in which
    the cdf is smoother (e.g. ``arcsin(sqrt(t/T))`` for times).
    """
    x = np.linspace(lo, hi, n)
    F = np.maximum.accumulate(np.clip(np.asarray(cdf_values(x), dtype=float), 0.0, 1.0))
    z = x if transform is None else transform(x)
    f = PchipInterpolator(z, F, extrapolate=False)

    def cdf(y):
        y = np.asarray(y, dtype=float)
        zz = y if transform is None else transform(np.clip(y, lo, hi))
        out = f(np.clip(zz, z[0], z[-1]))
        return np.where(y < lo, F[0], np.where(y > hi, F[-1], out))

    return cdf


@dataclass(frozen=True)
class SkeletonSet:
    """Per-path terminal value ``x``, discrete maximum ``h`` and its time ``t``."""

    x: np.ndarray
    h: np.ndarray
    t: np.ndarray
    T: float
    n_steps: int

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "h", "t"])
            for row in zip(self.x, self.h, self.t):
                w.writerow([repr(float(v)) for v in row])


def increment_table(model: LevyModel, T: float, n_steps: int, tol: float = DEFAULT_TOL,
                    delta: float = INCREMENT_DELTA):
    """Quantile table of one increment ``X_{T/n_steps}``.

    A small ``delta`` keeps almost every draw in the tabulated region.
    """
    return build_quantile_table(x_dist(model, T / n_steps, tol), delta)


def simulate_skeleton(model: LevyModel, T: float, n_steps: int, n_paths: int, seed: int,
                      table=None, tol: float = DEFAULT_TOL) -> SkeletonSet:
    """Simulate ``n_paths`` skeletons with ``n_steps`` iid increments each.

    Paths are generated in blocks of fixed size with seeds spawned from
    ``seed``, so the output depends on ``seed`` only.
    """
    if n_steps < 64:
        raise PreconditionError("n_steps must be at least 64")
    if n_paths < 1:
        raise PreconditionError("n_paths must be positive")
    if table is None:
        table = increment_table(model, T, n_steps, tol)
    n_blocks = -(-n_paths // BLOCK)
    seqs = np.random.SeedSequence(seed).spawn(n_blocks)
    xs = np.empty(n_paths)
    hs = np.empty(n_paths)
    ts = np.empty(n_paths)
    dt = T / n_steps
    for b, ss in enumerate(seqs):
        lo = b * BLOCK
        m = min(BLOCK, n_paths - lo)
        u = np.random.default_rng(ss).random((m, n_steps))
        # the generator yields [0, 1); zero maps to the smallest positive double
        u = np.where(u > 0, u, np.nextafter(0.0, 1.0))
        inc = quantile(table, u.ravel()).reshape(m, n_steps)
        path = np.cumsum(inc, axis=1)
        k = np.argmax(path, axis=1)
        mx = path[np.arange(m), k]
        at0 = mx <= 0
        xs[lo:lo + m] = path[:, -1]
        hs[lo:lo + m] = np.where(at0, 0.0, mx)
        ts[lo:lo + m] = np.where(at0, 0.0, (k + 1) * dt)
    return SkeletonSet(xs, hs, ts, float(T), int(n_steps))
