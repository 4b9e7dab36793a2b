"""Numerical Laplace inversion: Gaver-Wynn-Rho and sinh-deformed Bromwich.

Both backends compute ``f(t) = (1/2 pi i) int e^{qt} g(q) dq`` for a
transform ``g``.  Transforms may return arrays: the inversion is then
applied elementwise along the trailing axes, which lets one set of
``q`` evaluations serve many spatial points.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import comb, factorial

from .contours import BromwichContour, select_bromwich
from .errors import ExtrapolationInstabilityError, PreconditionError
from .models import LevyModel

BACKENDS = ("GWR", "SinhBromwich")
DEFAULT_M = 8
RHO_TIE = 1e-30


@dataclass(frozen=True)
class LaplaceBackend:
    """Inversion method: ``GWR`` with ``M`` Gaver functionals, or a Bromwich contour."""

    kind: str = "GWR"
    M: int = DEFAULT_M
    contour: Optional[BromwichContour] = None

    def __post_init__(self):
        if self.kind not in BACKENDS:
            raise PreconditionError(f"backend must be one of {BACKENDS}")
        if self.M < 1:
            raise PreconditionError("M must be a positive integer")


def bromwich_allowed(model: LevyModel) -> bool:
    """Sinh deformation of the Bromwich contour applies for order >= 1 or zero drift.

    Order exactly one with a drift is treated conservatively as GWR-only.
    """
    if model.finite_variation:
        return model.mu == 0
    if model.order == 1.0 and model.mu != 0:
        return False
    return True


def choose_backend(model: LevyModel, kind: str = "auto") -> LaplaceBackend:
    if kind == "auto":
        kind = "SinhBromwich" if bromwich_allowed(model) else "GWR"
    return LaplaceBackend(kind=kind)


def gwr_abscissas(M: int, t: float) -> np.ndarray:
    """The ``2M`` real abscissas ``k ln2 / t``, ``k = 1..2M``."""
    if M < 1 or not t > 0:
        raise PreconditionError("need M >= 1 and t > 0")
    return np.arange(1, 2 * M + 1) * (math.log(2.0) / t)


def _gaver(values: np.ndarray, M: int, tau: float) -> np.ndarray:
    """Gaver functionals ``G_1..G_M`` from ``values[k-1] = g(k tau)``."""
    out = []
    for n in range(1, M + 1):
        i = np.arange(n + 1)
        coef = ((-1.0) ** i) * comb(n, i, exact=False)
        pref = tau * factorial(2 * n, exact=True) / (factorial(n, exact=True) * factorial(n - 1, exact=True))
        vals = values[n + i - 1]
        out.append(pref * np.tensordot(coef, vals, axes=(0, 0)))
    return np.array(out)


def _wynn_rho(G: np.ndarray):
    """Wynn rho acceleration of the Gaver sequence; returns ``(value, tie_flag)``."""
    M = G.shape[0]
    G0 = G.copy()
    Gm = np.zeros_like(G0)
    Gp = np.zeros_like(G0)
    best = G0[M - 1].copy()
    tie = False
    for k in range(M - 1):
        for n in range(M - 1 - k):
            diff = G0[n + 1] - G0[n]
            zero = diff == 0
            if np.any(zero):
                tie = True
                diff = np.where(zero, RHO_TIE, diff)
            Gp[n] = Gm[n + 1] + (k + 1) / diff
            if k % 2 == 1 and n == M - 2 - k:
                best = Gp[n].copy()
        Gm[: M - k] = G0[: M - k]
        G0[: M - k - 1] = Gp[: M - k - 1]
    return best, tie


def gwr_invert(values: np.ndarray, t: float, M: int = DEFAULT_M, strict: bool = False):
    """GWR from precomputed transform values at ``gwr_abscissas(M, t)``."""
    tau = math.log(2.0) / t
    values = np.asarray(values, dtype=float)
    G = _gaver(values, M, tau)
    res, tie = _wynn_rho(G)
    if not np.all(np.isfinite(res)):
        partial = G[-1]
        raise ExtrapolationInstabilityError("Wynn rho extrapolation produced a non-finite value",
                                            partial=partial if np.ndim(partial) == 0 else float("nan"))
    if tie:
        if strict:
            raise ExtrapolationInstabilityError("zero difference in the rho table", partial=res)
        warnings.warn("Wynn rho tie resolved by perturbation", RuntimeWarning, stacklevel=2)
    return res


def invert(backend: LaplaceBackend, transform: Callable, t: float, model: Optional[LevyModel] = None,
           tol: float = 1e-12):
    """``(1/2 pi i) int e^{qt} transform(q) dq``.

    ``transform`` receives a 1-D array of ``q`` and returns values whose
    first axis matches it.  GWR evaluates it at real ``q`` only and uses the
    real part of the result; the Bromwich backend uses the upper half of a
    conjugation-symmetric contour and returns the real part.
    """
    if not t > 0:
        raise PreconditionError("t must be positive")
    if backend.kind == "GWR":
        q = gwr_abscissas(backend.M, t)
        vals = np.real(np.asarray(transform(q)))
        return gwr_invert(vals, t, backend.M)
    contour = backend.contour
    if contour is None:
        if model is None:
            contour = _generic_bromwich(float(t), float(tol))
        else:
            contour = select_bromwich(model, t, tol)
    q, w = contour.half_nodes()
    vals = np.asarray(transform(q))
    ex = w * np.exp(q * t)
    return np.real(np.tensordot(ex, vals, axes=(0, 0)))


_GENERIC = {}


def _generic_bromwich(t, tol):
    key = (t, tol)
    if key not in _GENERIC:
        _GENERIC[key] = select_bromwich(_DummyModel(), t, tol, check_default_partner=False)
    return _GENERIC[key]


class _DummyModel:
    """Stand-in for transforms analytic in ``Re q > 0`` (no model constraints)."""

    finite_variation = False
    mu = 0.0
    order = 2.0
