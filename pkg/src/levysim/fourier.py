"""Density and distribution function of ``X_t`` by sinh-accelerated Fourier inversion.

With ``x = -a + t*mu`` the density is
``p(t, a) = (1/2pi) int exp(i x xi - t psi0(xi)) dxi`` and the distribution
function is ``(1/2pi) int exp(i x xi - t psi0(xi)) / (-i xi) dxi`` over a
contour above the pole at zero (``x >= 0``), or one plus the same integral
over a contour below it (``x < 0``).  Both integrands are Hermitian, so
only the nodes with ``j >= 0`` are summed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .contours import SinhContour, saddle_height, select_contour
from .errors import NumericalDomainError, PreconditionError
from .models import LevyModel

DEFAULT_TOL = 1e-12
LADDER_STEP = 3.0
LADDER_FLOOR = -70.0


def _half(contour: SinhContour):
    xi, w = contour.nodes()
    N = contour.N
    xi, w = xi[N:], w[N:].copy()
    w[1:] *= 2.0
    return xi, w


@lru_cache(maxsize=256)
def _prepared(model: LevyModel, t: float, contour: SinhContour, with_pole: bool):
    xi, w = _half(contour)
    with np.errstate(over="ignore", under="ignore"):
        e = np.exp(-t * model.psi0(xi))
    if not np.all(np.isfinite(e)):
        raise NumericalDomainError("exp(-t psi0) overflowed on the contour")
    pdf_w = w * e
    cdf_w = pdf_w / (-1j * xi) if with_pole else None
    for arr in (xi, pdf_w, cdf_w):
        if arr is not None:
            arr.setflags(write=False)
    return xi, pdf_w, cdf_w


def _check(t, tol):
    if not t > 0:
        raise PreconditionError("t must be positive")
    if not 0 < tol < 1e-2:
        raise PreconditionError("tol must lie in (0, 1e-2)")


def _sum(xi, weights, x):
    return float(np.dot(weights, np.exp(1j * x * xi)).real)


def pdf_X(model: LevyModel, t: float, a: float, tol: float = DEFAULT_TOL, contour=None) -> float:
    """Density of ``X_t`` at ``a``, clamped at zero."""
    _check(t, tol)
    x = -a + t * model.mu
    if contour is None:
        contour = select_contour(model, x, "pdf", tol, t)
    xi, pw, _ = _prepared(model, float(t), contour, False)
    return max(_sum(xi, pw, x), 0.0)


def cdf_X(model: LevyModel, t: float, a: float, tol: float = DEFAULT_TOL, contour=None,
          clamp: bool = True) -> float:
    """``P[X_t <= a]``.

    ``contour`` overrides the automatic choice; it must lie above the origin
    when ``-a + t*mu >= 0`` and below it otherwise.
    """
    _check(t, tol)
    x = -a + t * model.mu
    if contour is None:
        contour = select_contour(model, x, "cpdf_upper" if x >= 0 else "cpdf_lower", tol, t)
    upper = contour.crossing > 0
    if upper and x < 0 or not upper and x > 0:
        raise PreconditionError("contour side does not match the sign of -a + t*mu")
    xi, _, cw = _prepared(model, float(t), contour, True)
    val = _sum(xi, cw, x)
    if not upper:
        val += 1.0
    return min(max(val, 0.0), 1.0) if clamp else val


@dataclass(frozen=True)
class TailLevel:
    """One contour of a tail ladder, used for ``|x|`` in ``[x_from, x_to)``."""

    contour: SinhContour
    x_from: float
    x_to: float
    xi: np.ndarray
    cdf_w: np.ndarray
    pdf_w: np.ndarray


@dataclass(frozen=True)
class TailArray:
    """Cached tail quadrature for ``P[X_t <= a]`` (left) or ``P[X_t > a]`` (right).

    Each level stores nodes ``xi_j``, weights and ``exp(-t psi0(xi_j))``
    folded together; only ``exp(i x xi_j)`` is recomputed per evaluation.
    The levels move the contour crossing towards the Chernoff height so the
    tail probability keeps relative accuracy far out.
    """

    model: LevyModel
    t: float
    side: str
    tol: float
    levels: tuple

    @property
    def contour(self) -> SinhContour:
        return self.levels[0].contour

    @property
    def x_limit(self) -> float:
        return self.levels[-1].x_to

    def level_for(self, x_abs: float) -> TailLevel:
        for lev in self.levels:
            if x_abs < lev.x_to:
                return lev
        return self.levels[-1]


def _chernoff(model, t, c, lo, hi):
    v = saddle_height(model, t, c, lo, hi)
    return v, -c * v - t * float(model.psi0(np.array([1j * v]))[0].real)


@lru_cache(maxsize=64)
def build_tail_array(model: LevyModel, t: float, side: str, tol: float = DEFAULT_TOL,
                     max_levels: int = 40) -> TailArray:
    """Tail quadrature ladder for ``side`` in ``{'left', 'right'}``.

    Level ``k`` is designed for the shift ``x_k`` and is used until the
    Chernoff bound on its crossing exceeds the optimal one by ``e^3``;
    the ladder stops once the optimal bound is below ``e^-70``.
    """
    _check(t, tol)
    if side not in ("left", "right"):
        raise PreconditionError("side must be 'left' or 'right'")
    sgn = 1.0 if side == "left" else -1.0
    role = "cpdf_upper" if side == "left" else "cpdf_lower"
    lo, hi = (0.0, model.strip[1]) if side == "left" else (model.strip[0], 0.0)
    levels = []
    x_k = 0.0
    contour = select_contour(model, sgn, role, tol, t)
    for _ in range(max_levels):
        v_k = contour.crossing
        x_next = max(x_k, 1e-3) * 1.25
        while True:
            _, g = _chernoff(model, t, sgn * x_next, lo, hi)
            g_k = -sgn * x_next * v_k - t * float(model.psi0(np.array([1j * v_k]))[0].real)
            if g_k - g > LADDER_STEP:
                # end the level at the last shift that still met the bound
                x_next = max(x_next / 1.25, x_k * 1.01, 1e-3)
                break
            if g < LADDER_FLOOR or x_next > 1e8:
                break
            x_next *= 1.25
        xi, pw, cw = _prepared(model, float(t), contour, True)
        levels.append(TailLevel(contour, x_k, x_next, xi, cw, pw))
        if g < LADDER_FLOOR or x_next > 1e8:
            break
        x_k = x_next
        contour = select_contour(model, sgn, role, tol, t, tail_shift=sgn * x_k)
    last = levels[-1]
    levels[-1] = TailLevel(last.contour, last.x_from, math.inf, last.xi, last.cdf_w, last.pdf_w)
    return TailArray(model, float(t), side, float(tol), tuple(levels))


def tail_eval(tail: TailArray, a: float):
    """``(F, S, p)`` with ``S = 1 - F`` computed without cancellation in the right tail."""
    x = -a + tail.t * tail.model.mu
    if tail.side == "left" and x < 0 or tail.side == "right" and x > 0:
        raise PreconditionError("point is on the wrong side for this tail array")
    lev = tail.level_for(abs(x))
    ph = np.exp(1j * x * lev.xi)
    s = float(np.dot(lev.cdf_w, ph).real)
    p = float(np.dot(lev.pdf_w, ph).real)
    if tail.side == "left":
        return s, 1.0 - s, p
    return 1.0 + s, -s, p


def tail_cdf_and_pdf(tail: TailArray, a: float):
    """CDF and density at ``a`` from one pass over the stored nodes."""
    F, _, p = tail_eval(tail, a)
    return F, p


def tail_values(tail: TailArray, a):
    """Vectorized :func:`tail_eval`: arrays ``(F, S, p)`` over points on the side of ``tail``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    x = -a + tail.t * tail.model.mu
    sgn = 1.0 if tail.side == "left" else -1.0
    if np.any(sgn * x < 0):
        raise PreconditionError("point is on the wrong side for this tail array")
    s = np.empty(a.size)
    p = np.empty(a.size)
    ax = np.abs(x)
    taken = np.zeros(a.size, dtype=bool)
    for lev in tail.levels:
        sel = ~taken & (ax < lev.x_to)
        if np.any(sel):
            ph = np.exp(1j * np.outer(x[sel], lev.xi))
            s[sel] = (ph @ lev.cdf_w).real
            p[sel] = (ph @ lev.pdf_w).real
            taken |= sel
    if tail.side == "left":
        return s, 1.0 - s, np.maximum(p, 0.0)
    return 1.0 + s, -s, np.maximum(p, 0.0)


def cdf_pdf_values(model: LevyModel, t: float, a, tol: float = DEFAULT_TOL, tails=None):
    """``(F, S, p)`` of ``X_t`` on an array, with relative accuracy in both tails.

    ``tails`` is an optional ``(left, right)`` pair from :func:`build_tail_array`.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if tails is None:
        tails = (build_tail_array(model, t, "left", tol), build_tail_array(model, t, "right", tol))
    x = -a + t * model.mu
    F = np.empty(a.size)
    S = np.empty(a.size)
    p = np.empty(a.size)
    for tail, sel in ((tails[0], x >= 0), (tails[1], x < 0)):
        if np.any(sel):
            F[sel], S[sel], p[sel] = tail_values(tail, a[sel])
    return np.clip(F, 0.0, 1.0), np.clip(S, 0.0, 1.0), p
