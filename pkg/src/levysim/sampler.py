"""Quantile-inversion samplers built on precomputed tables.

A :class:`QuantileTable` stores ``F`` and ``p`` on a non-uniform grid that
covers ``[F^{-1}(delta/2), F^{-1}(1 - delta/2)]``.  Inside it a uniform
``u`` is inverted by a first-order solve from the nearer grid point; outside
it a safeguarded Newton iteration on ``ln F`` (left) or ``ln(1 - F)`` (right)
uses the tail evaluators, which keep relative accuracy.

Pairs and triplets are sampled by conditioning on the supremum: ``h`` from
its table, then ``x`` from ``P[X_T < x | sup = h]`` (Scheme B: interpolation
between conditional tables at neighbouring ``h``; Scheme A: direct solve)
and ``t`` from ``P[tau_T <= t | sup = h]`` on a fixed ``t`` grid.

The uniforms are always supplied by the caller.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CoverageError, PreconditionError, QuantileError, TableConstructionError, TableFormatError
from .extremum import DEFAULT_TOL, inf_values, sup_survival_values, sup_values
from .fourier import build_tail_array, cdf_pdf_values
from .joint import dh_and_density_pairs, dh_joint_tau_values, dh_joint_values, sup_factor_values
from .models import LevyModel

DEFAULT_DELTA = 0.01
DEFAULT_SIZE = 512
KAPPA = 20.0
PDF_TINY = 1e-30
MAX_NEWTON = 50
MAX_BISECT = 200
COND_H = 128
COND_X = 128
TAU_POINTS = 64
H1_MASS = 5e-4
MAGIC = b"LEVQ1"
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# one-dimensional laws

@dataclass(frozen=True)
class Dist:
    """A one-dimensional law in the form the table builder needs.

    ``central(x) -> (F, p)``; ``left(x) -> (F, p)`` and ``right(x) -> (S, p)``
    keep relative accuracy for small ``F`` and ``S = 1 - F``.  ``lower`` is a
    hard lower boundary of the support (``-inf`` if none).
    """

    kind: str
    model: Optional[LevyModel]
    T: float
    central: Callable
    left: Optional[Callable]
    right: Callable
    lower: float
    loc: float
    scale: float


def model_scale(model: LevyModel, T: float) -> float:
    """Standard deviation of ``X_T`` from the curvature of ``psi0`` at zero."""
    eps = 1e-3
    v = 2.0 * float(np.real(model.psi0(np.array([eps + 0j])))[0]) / eps ** 2
    return math.sqrt(max(T * v, 1e-16))


def x_dist(model: LevyModel, T: float, tol: float = DEFAULT_TOL) -> Dist:
    tails = (build_tail_array(model, T, "left", tol), build_tail_array(model, T, "right", tol))

    def central(a):
        F, _, p = cdf_pdf_values(model, T, a, tol, tails)
        return F, p

    def left(a):
        F, _, p = cdf_pdf_values(model, T, a, tol, tails)
        return F, p

    def right(a):
        _, S, p = cdf_pdf_values(model, T, a, tol, tails)
        return S, p

    return Dist("x", model, T, central, left, right, -math.inf, T * model.mu, model_scale(model, T))


def sup_dist(model: LevyModel, T: float, tol: float = DEFAULT_TOL, backend="auto") -> Dist:
    def central(h):
        F, p = sup_values(model, T, h, tol, backend)
        return np.clip(F, 0.0, 1.0), np.maximum(p, 0.0)

    def right(h):
        S, p = sup_survival_values(model, T, h, tol, backend)
        return np.clip(S, 0.0, 1.0), np.maximum(p, 0.0)

    return Dist("sup", model, T, central, None, right, 0.0, 0.0, model_scale(model, T))


def drawdown_dist(model: LevyModel, T: float, tol: float = DEFAULT_TOL, backend="auto") -> Dist:
    """``sup X_T - X_T``, equal in law to ``-inf X_T``."""

    def right(a):
        G, p = inf_values(model, T, -np.asarray(a, dtype=float), tol, backend)
        return np.clip(G, 0.0, 1.0), np.maximum(p, 0.0)

    def central(a):
        S, p = right(a)
        return 1.0 - S, p

    return Dist("drawdown", model, T, central, None, right, 0.0, 0.0, model_scale(model, T))


def closed_form_dist(kind, cdf, pdf, sf, lower=-math.inf, loc=0.0, scale=1.0, T=1.0) -> Dist:
    """A :class:`Dist` from plain vectorized callables (used by tests and oracles)."""
    return Dist(kind, None, T, lambda x: (cdf(x), pdf(x)), (lambda x: (cdf(x), pdf(x))),
                lambda x: (sf(x), pdf(x)), lower, loc, scale)


# ---------------------------------------------------------------------------
# quantile tables

@dataclass(frozen=True)
class QuantileTable:
    """Grid ``xs`` with ``Fs = F(xs)``, ``ps = p(xs)`` and tail evaluators."""

    delta: float
    xs: np.ndarray
    Fs: np.ndarray
    ps: np.ndarray
    left_tail: Optional[Callable]
    right_tail: Optional[Callable]
    transform: str = "log_cdf"
    kind: str = "x"
    T: float = 1.0
    lower: float = -math.inf
    fingerprint: str = ""
    scale: float = 1.0

    @property
    def M(self) -> int:
        return len(self.xs)


def _bracket_solve(fun, target, x0, direction, step, max_double=80):
    """Scalar: ``x`` with ``fun(x) = target`` for ``fun`` monotone; ``fun(x0) > target``."""
    inner = x0
    outer = x0 + direction * step
    for _ in range(max_double):
        if fun(outer) < target:
            break
        inner = outer
        step *= 2.0
        outer = x0 + direction * step
    else:
        raise TableConstructionError(f"cannot bracket level {target} from {x0}")
    for _ in range(200):
        mid = 0.5 * (inner + outer)
        if fun(mid) > target:
            inner = mid
        else:
            outer = mid
        if abs(outer - inner) <= 1e-13 * (1.0 + abs(mid)):
            break
    return 0.5 * (inner + outer)


def _place(lo, hi, dens_fn, M, kappa, n_aux=None):
    """``M`` points on ``[lo, hi]`` with local density ``1 + kappa p / p_max``."""
    n_aux = n_aux or 4 * M
    aux = np.linspace(lo, hi, n_aux)
    p = np.maximum(dens_fn(aux), 0.0)
    pmax = p.max() if p.max() > 0 else 1.0
    g = 1.0 + kappa * p / pmax
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(aux))])
    xs = np.interp(np.linspace(0.0, cum[-1], M), cum, aux)
    xs[0], xs[-1] = lo, hi
    return xs


def _check_increasing(Fs, what="F"):
    bad = np.nonzero(np.diff(Fs) <= 0)[0]
    if bad.size:
        raise TableConstructionError(f"{what} not strictly increasing at indices {bad[:20].tolist()}"
                                     + (" ..." if bad.size > 20 else ""))


def _refine(dist, xs, Fs, ps, tol, rounds=12):
    """Bisect cells where the first-order prediction misses ``F`` at the midpoint by ``> tol``."""
    for _ in range(rounds):
        xm = 0.5 * (xs[1:] + xs[:-1])
        Fm, pm = dist.central(xm)
        half = 0.5 * np.diff(xs)
        lin = 0.5 * (Fs[1:] + Fs[:-1])
        left = np.where(ps[:-1] > PDF_TINY, Fs[:-1] + ps[:-1] * half, lin)
        right = np.where(ps[1:] > PDF_TINY, Fs[1:] - ps[1:] * half, lin)
        bad = np.maximum(np.abs(left - Fm), np.abs(right - Fm)) > tol
        if not np.any(bad):
            break
        xs = np.insert(xs, np.nonzero(bad)[0] + 1, xm[bad])
        Fs = np.insert(Fs, np.nonzero(bad)[0] + 1, Fm[bad])
        ps = np.insert(ps, np.nonzero(bad)[0] + 1, pm[bad])
    return xs, Fs, ps


def build_quantile_table(dist: Dist, delta: float = DEFAULT_DELTA, M: int = DEFAULT_SIZE,
                         kappa: float = KAPPA, refine_tol: float = 2e-7) -> QuantileTable:
    """Tabulate ``dist`` between its ``delta/2`` and ``1 - delta/2`` quantiles.

    ``M`` points are placed by the density policy; cells whose first-order
    inversion error estimate exceeds ``refine_tol`` are then bisected.
    """
    if not 0 < delta <= 0.05:
        raise PreconditionError("delta must be in (0, 0.05]")
    if M < 8:
        raise PreconditionError("table size must be at least 8")
    s = dist.scale

    def logS(x):
        S, _ = dist.right(np.array([x]))
        return math.log(S[0]) if S[0] > 0 else -math.inf

    hard = math.isfinite(dist.lower)
    start = max(dist.loc, dist.lower + 1e-6 * s) if hard else dist.loc
    x_hi = _bracket_solve(logS, math.log(delta / 2), start, 1.0, s)
    if hard:
        x_lo = dist.lower
    else:
        x_lo = _bracket_solve(lambda x: float(dist.left(np.array([x]))[0][0]), delta / 2, start, -1.0, s)
    if not x_hi > x_lo:
        raise TableConstructionError("degenerate table range")
    eps = 1e-9 * max(s, 1e-12)

    def dens(x):
        x = np.where(x <= x_lo + eps, x_lo + eps, x) if hard else x
        return dist.central(x)[1]

    xs = _place(x_lo, x_hi, dens, M, kappa, 2 * M)
    if hard:
        F0, _ = dist.central(np.array([x_lo + eps]))
        Fi, pi = dist.central(xs[1:])
        atom = max(float(F0[0]), 0.0)
        # the atom at the boundary only registers if it is resolvable
        Fs = np.concatenate([[atom if atom > 1e-7 else 0.0], Fi])
        ps = np.concatenate([[0.0], pi])
    else:
        Fs, ps = dist.central(xs)
    xs, Fs, ps = _refine(dist, xs, np.asarray(Fs, dtype=float), np.asarray(ps, dtype=float), refine_tol)
    _check_increasing(Fs)
    fp = dist.model.fingerprint() if dist.model is not None else ""
    return QuantileTable(float(delta), xs, Fs, np.asarray(ps, dtype=float),
                         None if hard else dist.left, dist.right, "log_cdf", dist.kind, float(dist.T),
                         float(dist.lower), fp, float(s))


def _central(table: QuantileTable, u):
    xs, Fs, ps = table.xs, table.Fs, table.ps
    k = np.clip(np.searchsorted(Fs, u, side="right") - 1, 0, len(xs) - 2)
    x0, x1 = xs[k], xs[k + 1]
    F0, F1 = Fs[k], Fs[k + 1]
    p0, p1 = ps[k], ps[k + 1]
    lin = x0 + (u - F0) / (F1 - F0) * (x1 - x0)
    with np.errstate(divide="ignore", invalid="ignore"):
        xa = np.where(p0 > PDF_TINY, x0 + (u - F0) / p0, lin)
        xb = np.where(p1 > PDF_TINY, x1 - (F1 - u) / p1, lin)
        um = 0.5 * (F0 + F1)
        xam = np.where(p0 > PDF_TINY, x0 + (um - F0) / p0, x0 + 0.5 * (x1 - x0))
        xbm = np.where(p1 > PDF_TINY, x1 - (F1 - um) / p1, x0 + 0.5 * (x1 - x0))
    xa = np.clip(xa, x0, x1)
    xb = np.clip(xb, x0, x1)
    xam = np.clip(xam, x0, x1)
    xbm = np.clip(xbm, x0, x1)
    # keep the map monotone across the switch at the cell midpoint
    c = 0.5 * (xam + xbm)
    cross = xam > xbm
    lower = u - F0 <= F1 - u
    out = np.where(lower, np.where(cross, np.minimum(xa, c), xa),
                   np.where(cross, np.maximum(xb, c), xb))
    return out


def _tail_solve(fun, logt, x0, direction, step, left):
    """Vectorized safeguarded Newton for ``ln T(x) = logt``.

    ``fun(x) -> (T, p)`` with ``T = F`` (left) or ``S`` (right);
    ``x0`` satisfies ``ln T(x0) >= logt``.
    """
    n = logt.size
    inner = np.full(n, float(x0))
    outer = np.full(n, np.nan)
    width = np.full(n, float(step))
    todo = np.ones(n, dtype=bool)
    for _ in range(120):
        idx = np.nonzero(todo)[0]
        if idx.size == 0:
            break
        cand = x0 + direction * width[idx]
        T, _ = fun(cand)
        with np.errstate(divide="ignore"):
            below = np.log(np.maximum(T, 0.0)) < logt[idx]
        outer[idx[below]] = cand[below]
        inner[idx[~below]] = cand[~below]
        width[idx[~below]] *= 2.0
        todo[idx[below]] = False
    if np.any(todo):
        raise QuantileError(f"tail bracketing failed for {int(todo.sum())} levels; "
                            f"smallest target ln T = {logt[todo].min():.3g}")
    x = inner.copy()
    active = np.ones(n, dtype=bool)
    for it in range(MAX_NEWTON + MAX_BISECT):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        T, p = fun(x[idx])
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.log(np.maximum(T, 0.0)) - logt[idx]
            dg = (p / T) if left else (-p / T)
            newton = x[idx] - g / dg
        done = np.abs(g) < 1e-10
        pos = g > 0
        ii, oo = inner[idx], outer[idx]
        ii = np.where(pos, x[idx], ii)
        oo = np.where(pos, oo, x[idx])
        inner[idx], outer[idx] = ii, oo
        lo, hi = np.minimum(ii, oo), np.maximum(ii, oo)
        ok = np.isfinite(newton) & (newton > lo) & (newton < hi) & (it < MAX_NEWTON)
        nxt = np.where(ok, newton, 0.5 * (ii + oo))
        tiny = np.abs(oo - ii) <= 1e-14 * (1.0 + np.abs(nxt))
        x[idx] = np.where(done, x[idx], nxt)
        active[idx[done | tiny]] = False
    return x


def quantile(table: QuantileTable, u):
    """Inverse CDF at ``u`` in ``(0, 1)``; scalar in, scalar out."""
    scalar = np.ndim(u) == 0
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(~(u > 0)) or np.any(~(u < 1)):
        raise QuantileError("uniforms must lie in (0, 1)")
    out = np.empty(u.size)
    lo_m = u < table.Fs[0]
    hi_m = u > table.Fs[-1]
    mid = ~(lo_m | hi_m)
    if np.any(mid):
        out[mid] = _central(table, u[mid])
    if np.any(lo_m):
        if table.left_tail is None:
            out[lo_m] = table.xs[0]
        else:
            out[lo_m] = _tail_solve(table.left_tail, np.log(u[lo_m]), table.xs[0], -1.0,
                                    table.scale, True)
    if np.any(hi_m):
        if table.right_tail is None:
            raise QuantileError("table has no right-tail evaluator (loaded without a model?)")
        out[hi_m] = _tail_solve(table.right_tail, np.log1p(-u[hi_m]), table.xs[-1], 1.0,
                                table.scale, False)
    return float(out[0]) if scalar else out


def _uniforms(u, k):
    u = np.asarray(u, dtype=float)
    if k == 1:
        u = u.reshape(-1)
    else:
        u = u.reshape(-1, k)
    if np.any(~(u > 0)) or np.any(~(u < 1)):
        raise QuantileError("uniforms must lie in (0, 1)")
    return u


def sample_X(model: LevyModel, T: float, table: QuantileTable, u_stream):
    """Map uniforms to samples of ``X_T``."""
    return quantile(table, _uniforms(u_stream, 1))


def sample_sup(model: LevyModel, T: float, table: QuantileTable, u_stream):
    """Map uniforms to samples of ``sup X_T``; all outputs are ``>= 0``."""
    return np.maximum(quantile(table, _uniforms(u_stream, 1)), 0.0)


def sample_drawdown(model: LevyModel, T: float, table: QuantileTable, u_stream):
    """Map uniforms to samples of ``sup X_T - X_T``."""
    return np.maximum(quantile(table, _uniforms(u_stream, 1)), 0.0)


# ---------------------------------------------------------------------------
# serialization

def save_table(table: QuantileTable, path) -> None:
    """Binary container: magic, version, kind, fingerprint, T, delta, lower, scale, M, then
    ``xs``, ``Fs``, ``ps`` as little-endian float64."""
    kind = table.kind.encode()
    fp = table.fingerprint.encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<H", len(kind)) + kind)
        fh.write(struct.pack("<H", len(fp)) + fp)
        fh.write(struct.pack("<ddddQ", table.T, table.delta, table.lower, table.scale, table.M))
        for arr in (table.xs, table.Fs, table.ps):
            fh.write(np.asarray(arr, dtype="<f8").tobytes())


def load_table(path, model: Optional[LevyModel] = None, tol: float = DEFAULT_TOL) -> QuantileTable:
    """Read :func:`save_table` output; tails are rebuilt when ``model`` matches."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:5] != MAGIC:
        raise TableFormatError("bad magic (not a LEVQ1 table)")
    pos = 5
    try:
        (ver,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if ver != FORMAT_VERSION:
            raise TableFormatError(f"unsupported table version {ver}")
        (nk,) = struct.unpack_from("<H", data, pos)
        kind = data[pos + 2:pos + 2 + nk].decode()
        pos += 2 + nk
        (nf,) = struct.unpack_from("<H", data, pos)
        fp = data[pos + 2:pos + 2 + nf].decode()
        pos += 2 + nf
        T, delta, lower, scale, M = struct.unpack_from("<ddddQ", data, pos)
        pos += struct.calcsize("<ddddQ")
        arrs = np.frombuffer(data, dtype="<f8", count=3 * M, offset=pos).reshape(3, M)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise TableFormatError(f"truncated or corrupt table: {exc}") from None
    if pos + 24 * M != len(data):
        raise TableFormatError("payload length does not match the header")
    left = right = None
    if model is not None:
        if model.fingerprint() != fp:
            raise TableFormatError("table was built for a different model")
        d = {"x": x_dist, "sup": sup_dist, "drawdown": drawdown_dist}[kind](model, T, tol)
        left = None if math.isfinite(lower) else d.left
        right = d.right
    return QuantileTable(delta, arrs[0].copy(), arrs[1].copy(), arrs[2].copy(), left, right,
                         "log_cdf", kind, T, lower, fp, scale)


def table_to_csv(table: QuantileTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "F", "p"])
        for row in zip(table.xs, table.Fs, table.ps):
            w.writerow([repr(float(v)) for v in row])


# ---------------------------------------------------------------------------
# conditional law of X_T given the supremum

@dataclass(frozen=True)
class ConditionalTable:
    """Conditional cdfs ``P[X_T < x | sup X_T = h_m]`` on per-``h`` grids.

    The last node of every ``x`` grid is ``h_m`` itself with value 1.
    ``tail_rectangles`` lists the parts of ``(0,1)^2`` in ``(u1, u2)``
    handled by direct solves.
    """

    model: LevyModel
    T: float
    tol: float
    backend: str
    delta: float
    h_grid: np.ndarray
    F_h: np.ndarray
    p_h: np.ndarray
    x_grids: tuple
    G_grids: tuple
    sup_table: QuantileTable
    tail_rectangles: tuple = field(default=())
    x_scale: float = 1.0


def _rectangles(delta):
    d = delta
    return (("u1_low", 0.0, d, 0.0, 1.0 - d), ("u1_high", 1.0 - d, 1.0, 0.0, 1.0 - d),
            ("u2_high_a", 0.0, 0.5, 1.0 - d, 1.0), ("u2_high_b", 0.5, 1.0, 1.0 - d, 1.0))


def _cond_column(model, T, h, p_h, delta, Mx, scale, tol, backend, kappa=KAPPA):
    """Grid and conditional cdf at one ``h``."""
    L = 8.0 * scale
    for _ in range(12):
        g = float(dh_joint_values(model, T, np.array([h - L]), h, tol, backend)[0]) / p_h
        if g < delta / 2:
            break
        L *= 2.0
    else:
        raise TableConstructionError(f"conditional law at h={h} does not decay to the left")
    n_aux = 2 * Mx
    v = np.linspace(0.0, 1.0, n_aux)
    a_aux = h - L * (1.0 - v) ** 2
    a_aux = a_aux[:-1]
    G_aux = dh_joint_values(model, T, a_aux, h, tol, backend) / p_h
    G_aux = np.clip(G_aux, 0.0, 1.0)
    a_aux = np.append(a_aux, h)
    G_aux = np.append(G_aux, 1.0)
    # the conditional cdf is nondecreasing; absorb rounding before placing points
    fix = np.max(np.maximum.accumulate(G_aux) - G_aux)
    if fix > 1e-6:
        raise TableConstructionError(f"conditional cdf at h={h} decreases by {fix:.2e}")
    G_aux = np.maximum.accumulate(G_aux)
    lo = float(np.interp(delta / 2, G_aux, a_aux)) if G_aux[0] < delta / 2 else a_aux[0]
    lo = max(a_aux[0], min(lo, h - 1e-9 * scale))
    # first index at or below lo keeps F(x_1) < delta/2 exactly
    j0 = max(int(np.searchsorted(a_aux, lo, side="right")) - 1, 0)
    a_use, G_use = a_aux[j0:], G_aux[j0:]
    dens = np.gradient(G_use, a_use)
    cum_w = 1.0 + kappa * dens / max(dens.max(), 1e-300)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (cum_w[1:] + cum_w[:-1]) * np.diff(a_use))])
    xs = np.interp(np.linspace(0.0, cum[-1], Mx), cum, a_use)
    xs[0], xs[-1] = a_use[0], h
    xs = np.unique(xs)
    Gs = PchipInterpolator(a_use, G_use)(xs)
    Gs[-1] = 1.0
    Gs = np.maximum.accumulate(np.clip(Gs, 0.0, 1.0))
    return xs, Gs


def build_conditional_table(model: LevyModel, T: float, sup_table: Optional[QuantileTable] = None,
                            delta: float = DEFAULT_DELTA, Mh: int = COND_H, Mx: int = COND_X,
                            tol: float = DEFAULT_TOL, backend="auto") -> ConditionalTable:
    """Scheme B tables: ``Mh`` supremum levels, ``Mx`` conditional points each."""
    if sup_table is None:
        sup_table = build_quantile_table(sup_dist(model, T, tol, backend), delta)
    u_lo = max(H1_MASS, sup_table.Fs[1])
    u_hi = 1.0 - delta / 2
    v = 0.5 * (1.0 - np.cos(np.pi * np.arange(Mh) / (Mh - 1)))
    h_grid = quantile(sup_table, u_lo + (u_hi - u_lo) * v)
    h_grid = np.unique(h_grid[h_grid > 0])
    F_h, p_h = sup_values(model, T, h_grid, tol, backend)
    scale = model_scale(model, T)
    xg, gg = [], []
    for h, p in zip(h_grid, p_h):
        if p <= 1e-30:
            raise TableConstructionError(f"supremum density underflows at h={h}")
        xs, Gs = _cond_column(model, T, float(h), float(p), delta, Mx, scale, tol, backend)
        xg.append(xs)
        gg.append(Gs)
    return ConditionalTable(model, float(T), float(tol), str(backend), float(delta), h_grid,
                            np.asarray(F_h), np.asarray(p_h), tuple(xg), tuple(gg), sup_table,
                            _rectangles(delta), scale)


def conditional_table_to_csv(table: ConditionalTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "F_sup", "p_sup", "x", "G"])
        for h, F, p, xs, Gs in zip(table.h_grid, table.F_h, table.p_h, table.x_grids, table.G_grids):
            for x, g in zip(xs, Gs):
                w.writerow([repr(float(h)), repr(float(F)), repr(float(p)), repr(float(x)), repr(float(g))])


def _region(table: ConditionalTable, u1, u2):
    """Index into ``tail_rectangles`` (or -1 for the central region)."""
    d = table.delta
    reg = np.full(u1.size, -2)
    central = (u1 > d) & (u1 < 1 - d) & (u2 <= 1 - d)
    reg[central] = -1
    for j, (_, a0, a1, b0, b1) in enumerate(table.tail_rectangles):
        sel = (reg == -2) & (u1 >= a0) & (u1 <= a1) & (u2 > b0) & (u2 <= b1)
        reg[sel] = j
    if np.any(reg == -2):
        raise CoverageError("uniform pair outside every region of the partition")
    return reg


def _scheme_b(table: ConditionalTable, u1, h):
    hg = table.h_grid
    out = np.empty(u1.size)
    below = h < hg[0]
    if np.any(below):
        # below h_1 the conditional law of sup - X is frozen at h_1
        x1 = np.interp(u1[below], table.G_grids[0], table.x_grids[0])
        out[below] = x1 - (hg[0] - h[below])
    rest = ~below
    m = np.clip(np.searchsorted(hg, h, side="right") - 1, 0, len(hg) - 2)
    for k in np.unique(m[rest]):
        sel = rest & (m == k)
        xa = np.interp(u1[sel], table.G_grids[k], table.x_grids[k])
        xb = np.interp(u1[sel], table.G_grids[k + 1], table.x_grids[k + 1])
        w = np.clip((h[sel] - hg[k]) / (hg[k + 1] - hg[k]), 0.0, 1.0)
        out[sel] = xa + w * (xb - xa)
    return np.minimum(out, h)


def _scheme_a(table: ConditionalTable, u1, h, chunk=64):
    """Direct solve of ``d/dh F(x, h) = u1 p_sup(h)`` for each pair."""
    model, T, tol, backend = table.model, table.T, table.tol, table.backend
    out = np.empty(u1.size)
    for s in range(0, u1.size, chunk):
        uu = u1[s:s + chunk]
        hh = h[s:s + chunk]
        _, p = sup_values(model, T, hh, tol, backend)
        P = sup_factor_values(model, T, hh, tol, backend)
        target = uu * p

        def G(x):
            D, f = dh_and_density_pairs(model, T, x, hh, tol, backend, P=P)
            return D, f

        step = table.x_scale
        hi = hh - 1e-12 * (1.0 + np.abs(hh))
        lo = hh - step
        for _ in range(80):
            D, _ = G(lo)
            need = D >= target
            if not np.any(need):
                break
            lo = np.where(need, hh - 2.0 * (hh - lo), lo)
        else:
            raise QuantileError("conditional bracketing failed")
        x = 0.5 * (lo + hi)
        active = np.ones(uu.size, dtype=bool)
        for it in range(MAX_NEWTON + MAX_BISECT):
            if not np.any(active):
                break
            D, f = G(x)
            r = D - target
            done = np.abs(r) <= 1e-10 * np.maximum(p, 1e-300)
            pos = r > 0
            hi = np.where(active & pos, x, hi)
            lo = np.where(active & ~pos, x, lo)
            with np.errstate(divide="ignore", invalid="ignore"):
                newton = x - r / f
            ok = np.isfinite(newton) & (newton > lo) & (newton < hi) & (it < MAX_NEWTON)
            nxt = np.where(ok, newton, 0.5 * (lo + hi))
            tiny = (hi - lo) <= 1e-13 * (1.0 + np.abs(x))
            x = np.where(active & ~done, nxt, x)
            active &= ~(done | tiny)
        out[s:s + chunk] = np.minimum(x, hh)
    return out


def sample_pair_X_sup(model: LevyModel, T: float, cond_table: ConditionalTable, u_stream,
                      scheme: str = "B"):
    """Samples ``(x, h)`` of ``(X_T, sup X_T)`` from uniform pairs ``(u1, u2)``."""
    u = _uniforms(u_stream, 2)
    u1, u2 = u[:, 0], u[:, 1]
    h = np.maximum(quantile(cond_table.sup_table, u2), 0.0)
    x = np.empty(u1.size)
    pos = h > 0
    x[~pos] = 0.0
    if scheme == "A":
        x[pos] = _scheme_a(cond_table, u1[pos], h[pos])
        x[~pos] = np.minimum(_scheme_b(cond_table, u1[~pos], h[~pos]), 0.0) if np.any(~pos) else x[~pos]
        return np.column_stack([x, h])
    if scheme != "B":
        raise PreconditionError("scheme must be 'A' or 'B'")
    reg = _region(cond_table, u1, u2)
    cen = reg == -1
    x[cen] = _scheme_b(cond_table, u1[cen], h[cen])
    tail = ~cen & pos
    if np.any(tail):
        x[tail] = _scheme_a(cond_table, u1[tail], h[tail])
    zero = ~cen & ~pos
    if np.any(zero):
        x[zero] = _scheme_b(cond_table, u1[zero], h[zero])
    return np.column_stack([np.minimum(x, h), h])


# ---------------------------------------------------------------------------
# time of the supremum given the supremum

@dataclass(frozen=True)
class TauTable:
    """``C[j, m] = P[tau_T <= t_j | sup X_T = h_m]``.

    The ``t`` grid is uniform in ``s = arcsin(sqrt(t / T))``, the variable in
    which the arcsine law is linear.
    """

    T: float
    t_grid: np.ndarray
    h_grid: np.ndarray
    C: np.ndarray
    sup_table: QuantileTable


def build_tau_table(model: LevyModel, T: float, sup_table: Optional[QuantileTable] = None,
                    h_grid=None, n_t: int = TAU_POINTS, tol: float = DEFAULT_TOL, backend="auto",
                    delta: float = DEFAULT_DELTA) -> TauTable:
    if sup_table is None:
        sup_table = build_quantile_table(sup_dist(model, T, tol, backend), delta)
    if h_grid is None:
        u_lo = max(H1_MASS, sup_table.Fs[1])
        v = 0.5 * (1.0 - np.cos(np.pi * np.arange(COND_H) / (COND_H - 1)))
        h_grid = quantile(sup_table, u_lo + (1.0 - delta / 2 - u_lo) * v)
    h_grid = np.unique(np.asarray(h_grid, dtype=float))
    _, p = sup_values(model, T, h_grid, tol, backend)
    if np.any(p <= 1e-30):
        raise TableConstructionError("supremum density underflows on the h grid")
    s = np.linspace(0.0, 0.5 * math.pi, n_t + 1)[1:]
    t_grid = T * np.sin(s) ** 2
    t_grid[-1] = T
    C = np.empty((n_t, h_grid.size))
    for j, t in enumerate(t_grid):
        C[j] = dh_joint_tau_values(model, T, float(t), h_grid, tol, backend) / p
    C = np.clip(C, 0.0, 1.0)
    C[-1] = 1.0
    C = np.maximum.accumulate(C, axis=0)
    return TauTable(float(T), t_grid, h_grid, C, sup_table)


def _tau_given_h(tab: TauTable, u3, h):
    hg = tab.h_grid
    m = np.clip(np.searchsorted(hg, h, side="right") - 1, 0, len(hg) - 2)
    w = np.clip((h - hg[m]) / (hg[m + 1] - hg[m]), 0.0, 1.0)
    col = tab.C[:, m] * (1.0 - w) + tab.C[:, m + 1] * w
    s_grid = np.concatenate([[0.0], np.arcsin(np.sqrt(tab.t_grid / tab.T))])
    out = np.empty(u3.size)
    for i in range(u3.size):
        c = np.concatenate([[0.0], col[:, i]])
        j = int(np.searchsorted(c, u3[i], side="left"))
        j = min(max(j, 1), len(c) - 1)
        # flat stretches of the column come from clamping: take the first crossing
        c0, c1 = c[j - 1], c[j]
        frac = 0.0 if c1 <= c0 else (u3[i] - c0) / (c1 - c0)
        s = s_grid[j - 1] + frac * (s_grid[j] - s_grid[j - 1])
        out[i] = tab.T * math.sin(s) ** 2
    return np.clip(out, 0.0, tab.T)


def sample_pair_sup_tau(model: LevyModel, T: float, tau_table: TauTable, u_stream):
    """Samples ``(h, t)`` of ``(sup X_T, tau_T)`` from uniform pairs ``(u2, u3)``."""
    u = _uniforms(u_stream, 2)
    h = np.maximum(quantile(tau_table.sup_table, u[:, 0]), 0.0)
    t = _tau_given_h(tau_table, u[:, 1], h)
    return np.column_stack([h, t])


@dataclass(frozen=True)
class TripletSample:
    x: float
    h: float
    t: float


def sample_triplet(model: LevyModel, T: float, cond_table: ConditionalTable, tau_table: TauTable,
                   u_stream, scheme: str = "B"):
    """Array of rows ``(x, h, t)`` from uniform triples ``(u1, u2, u3)``."""
    u = _uniforms(u_stream, 3)
    xh = sample_pair_X_sup(model, T, cond_table, u[:, :2], scheme)
    t = _tau_given_h(tau_table, u[:, 2], xh[:, 1])
    return np.column_stack([xh, t])


def sample_pair_drawdown_tau(model: LevyModel, T: float, cond_table: ConditionalTable,
                             tau_table: TauTable, u_stream, scheme: str = "B"):
    """Rows ``(sup X_T - X_T, tau_T)`` obtained from triplets."""
    tr = sample_triplet(model, T, cond_table, tau_table, u_stream, scheme)
    return np.column_stack([tr[:, 1] - tr[:, 0], tr[:, 2]])


def as_triplets(rows):
    return [TripletSample(float(x), float(h), float(t)) for x, h, t in rows]
