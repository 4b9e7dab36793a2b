"""Joint laws of ``X_T``, its supremum ``sup X_T`` and the time ``tau_T`` of the supremum.

``(X_T, sup X_T)``
    ``F(a, h) = P[X_T <= a, sup X_T <= h]`` is the marginal cdf of ``X_T``
    plus a triple integral over a Bromwich (or GWR) node ``q``, ``eta`` on a
    contour below the origin carrying ``phi_pp`` and ``xi`` on a contour
    above it carrying ``phi_mm``, with kernel ``1/(xi (xi - eta))``.  The
    ``h``-derivative factorizes into ``(1/q) P_q(h) Q_q(h - a)`` with
    ``P_q(h) = (1/2pi) int e^{-i h eta} phi_pp(eta)`` and
    ``Q_q(y) = (1/2pi) int e^{i y xi} phi_mm(xi) / (-i xi)``.

``(tau_T, sup X_T)``
    By the Wiener-Hopf independence at exponential times,
    ``int int e^{-q1 t - q2 r} P[tau_{t+r} <= t, sup X_{t+r} <= h] dt dr``
    equals ``A(q1, h) B(q1, q2) / (q1 q2)`` where
    ``A = P[sup X_{T_q1} <= h]`` and ``B = P[sup X'_{T_q2} + inf X_{T_q1} <= 0]``
    (``X'`` an independent copy).  Both are single contour integrals and the
    double Laplace inversion runs over sinh-deformed Bromwich contours in
    ``t`` and in ``r = T - t`` (nested GWR for models without them).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from typing import Optional

from .contours import select_bromwich
from .errors import DegenerateConditioningError, JointDeformationError, PreconditionError
from .extremum import (DEFAULT_TOL, ETA_CENTER, ETA_HALF, OMEGA_L, _backend_name, _factor_matrix,
                       _inner_eta, _xi_contour, angle_budget, extremum_plan, pdf_sup, sup_values)
from .fourier import cdf_X
from .laplace import bromwich_allowed, gwr_abscissas, gwr_invert
from .models import LevyModel
from .wiener_hopf import atom_kind, atom_mass, eta_contour, scan_pairs

PDF_FLOOR = 1e-30


def _plans(model, T, tol, backend):
    b = _backend_name(backend)
    return (extremum_plan(model, float(T), "plus", float(tol), b),
            extremum_plan(model, float(T), "minus", float(tol), b))


def _check_ah(a, h):
    if not h > 0:
        raise PreconditionError("h must be positive")
    if not a <= h:
        raise PreconditionError("need a <= h")


def joint_cdf_X_sup(model: LevyModel, T: float, a: float, h: float, tol: float = DEFAULT_TOL,
                    backend="auto") -> float:
    """``P[X_T <= a, sup X_T <= h]`` for ``h > 0`` and ``a <= h``."""
    _check_ah(a, h)
    sp, ip = _plans(model, T, tol, backend)
    y = h - a
    vals = np.empty(len(sp.q), dtype=complex)
    if sp.shared:
        eta, xi = sp.xi[0], ip.xi[0]
        K = 1.0 / (xi[None, :] - eta[:, None])
        U = sp.stacked("raw") * np.exp(-1j * h * eta)[None, :]
        V = ip.stacked("raw") * (np.exp(1j * y * xi) / xi)[None, :]
        vals = np.einsum("kj,kj->k", U @ K, V) / sp.q
        second = float(sp.invert(vals))
        val = cdf_X(model, T, a, min(max(tol, 1e-14), 1e-3)) + second
        return float(min(max(val, 0.0), 1.0))
    for k in range(len(sp.q)):
        eta, xi = sp.xi[k], ip.xi[k]
        u = sp.raw[k] * np.exp(-1j * h * eta)
        v = ip.raw[k] * np.exp(1j * y * xi) / xi
        K = 1.0 / (xi[None, :] - eta[:, None])
        vals[k] = u @ (K @ v) / sp.q[k]
    second = float(sp.invert(vals))
    val = cdf_X(model, T, a, min(max(tol, 1e-14), 1e-3)) + second
    return float(min(max(val, 0.0), 1.0))


def _dh_transform(sp, ip, a, h):
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if sp.shared:
        P = sp.stacked("raw") @ np.exp(-1j * h * sp.xi[0])
        xi = ip.xi[0]
        Q = (ip.stacked("raw") / (-1j * xi)[None, :]) @ np.exp(1j * np.outer(xi, h - a))
        return P[:, None] * Q / sp.q[:, None]
    vals = np.empty((len(sp.q), a.size), dtype=complex)
    for k in range(len(sp.q)):
        P = sp.raw[k] @ np.exp(-1j * h * sp.xi[k])
        Q = (ip.raw[k] / (-1j * ip.xi[k])) @ np.exp(1j * np.outer(ip.xi[k], h - a))
        vals[k] = P * Q / sp.q[k]
    return vals


def dh_joint_values(model: LevyModel, T: float, a, h: float, tol: float = DEFAULT_TOL, backend="auto"):
    """Vectorized ``d/dh P[X_T <= a, sup X_T <= h]`` over ``a < h``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if not h > 0 or np.any(a >= h):
        raise PreconditionError("need h > 0 and a < h")
    sp, ip = _plans(model, T, tol, backend)
    return sp.invert(_dh_transform(sp, ip, a, h))


def sup_factor_values(model: LevyModel, T: float, h, tol: float = DEFAULT_TOL, backend="auto"):
    """``P_q(h)`` for every Laplace node (rows) and every ``h`` (columns)."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    sp, _ = _plans(model, T, tol, backend)
    if sp.shared:
        return sp.stacked("raw") @ np.exp(-1j * np.outer(sp.xi[0], h))
    return np.array([np.exp(-1j * np.outer(h, sp.xi[k])) @ sp.raw[k] for k in range(len(sp.q))])


def dh_and_density_pairs(model: LevyModel, T: float, a, h, tol: float = DEFAULT_TOL, backend="auto",
                         P=None):
    """``(d/dh F(a_i, h_i), joint density f(a_i, h_i))`` for paired arrays ``a < h``.

    The density is the ``a``-derivative of the first value and costs nothing
    extra.  ``P`` may carry precomputed :func:`sup_factor_values` at ``h``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    h = np.broadcast_to(np.asarray(h, dtype=float), a.shape)
    if np.any(a >= h) or np.any(h <= 0):
        raise PreconditionError("need h > 0 and a < h")
    sp, ip = _plans(model, T, tol, backend)
    if P is None:
        P = sup_factor_values(model, T, h, tol, backend)
    D = np.empty((len(sp.q), a.size), dtype=complex)
    f = np.empty_like(D)
    y = h - a
    if ip.shared:
        xi = ip.xi[0]
        E = np.exp(1j * np.outer(xi, y))
        f = ip.stacked("raw") @ E
        D = (ip.stacked("raw") / (-1j * xi)[None, :]) @ E
    else:
        for k in range(len(sp.q)):
            E = np.exp(1j * np.outer(y, ip.xi[k]))
            f[k] = E @ ip.raw[k]
            D[k] = E @ (ip.raw[k] / (-1j * ip.xi[k]))
    scale = P / sp.q[:, None]
    return sp.invert(scale * D), sp.invert(scale * f)


def dh_joint_cdf(model: LevyModel, T: float, a: float, h: float, tol: float = DEFAULT_TOL,
                 backend="auto") -> float:
    """``d/dh P[X_T <= a, sup X_T <= h]`` for ``a < h``, clamped at zero."""
    return max(float(dh_joint_values(model, T, a, h, tol, backend)[0]), 0.0)


def conditional_cdf_X_given_sup(model: LevyModel, T: float, x: float, h: float,
                                tol: float = DEFAULT_TOL, backend="auto") -> float:
    """``P[X_T < x | sup X_T = h]`` for ``x < h``."""
    p = pdf_sup(model, T, h, tol, backend)
    if p <= PDF_FLOOR:
        raise DegenerateConditioningError(f"density of the supremum at h={h} underflows")
    d = dh_joint_cdf(model, T, x, h, tol, backend)
    return float(min(max(d / p, 0.0), 1.0))


# ---------------------------------------------------------------------------
# time of the supremum

# nested GWR in double precision amplifies rounding; 2M=10 nodes per axis is the sweet spot
TAU_GWR_M = 5


@dataclass(frozen=True)
class TauPlan:
    """Quadrature for the double Laplace inversion at ``(t, r = T - t)``.

    ``q1`` carries ``t`` and ``q2`` carries ``r``.  With the Bromwich backend
    ``w1``/``w2`` include ``e^{q t}`` and the Bromwich weights (``q1`` on the
    upper half of its contour, ``q2`` on the whole contour); with GWR they
    are unused and nested GWR is applied.
    """

    model: LevyModel
    T: float
    t: float
    backend: str
    q1: np.ndarray
    q2: np.ndarray
    w1: Optional[np.ndarray]
    w2: Optional[np.ndarray]
    a_xi: np.ndarray
    a_w: np.ndarray
    a_phi: np.ndarray
    b: np.ndarray
    M: int
    est_error: float = float("nan")

    def combine(self, Avals):
        """Invert ``A(q1, h) B(q1, q2) / (q1 q2)``; ``Avals`` has shape ``(len(q1), nh)``."""
        if self.backend == "GWR":
            r = self.T - self.t
            G = Avals[:, None, :].real * (self.b.real / np.outer(self.q1, self.q2))[:, :, None]
            inner = np.array([gwr_invert(G[k], r, self.M) for k in range(len(self.q1))])
            return gwr_invert(inner, self.t, self.M)
        inner = self.b @ (self.w2 / self.q2)
        return np.real((self.w1 / self.q1 * inner) @ Avals)


@lru_cache(maxsize=256)
def tau_plan(model: LevyModel, T: float, t: float, tol: float = DEFAULT_TOL,
             backend: str = "auto") -> TauPlan:
    """Contours and the ``B(q1, q2)`` matrix for ``0 < t < T``."""
    if not 0 < t < T:
        raise PreconditionError("need 0 < t < T")
    if backend == "auto":
        backend = "SinhBromwich" if bromwich_allowed(model) else "GWR"
    if backend == "SinhBromwich" and not bromwich_allowed(model):
        raise JointDeformationError("this model admits the GWR backend only")
    inner_tol = max(tol, 1e-13)
    r = T - t
    if backend == "GWR":
        M = TAU_GWR_M
        q1, q2 = gwr_abscissas(M, t), gwr_abscissas(M, r)
        w1 = w2 = None
        q_ref = float(min(q1[0], q2[0]))
        theta = angle_budget(model, False)
    else:
        M = 0
        c1 = select_bromwich(model, t, tol, omega_l=OMEGA_L)
        c2 = select_bromwich(model, r, tol, omega_l=OMEGA_L)
        q1, v1 = c1.half_nodes()
        q2, v2 = c2.nodes()
        w1, w2 = v1 * np.exp(q1 * t), v2 * np.exp(q2 * r)
        q_ref = float(min(c1.crossing, c2.crossing))
        theta = angle_budget(model, True)
    q_all = np.concatenate([q1, q2])
    ac = _xi_contour(model, q_ref, "plus", inner_tol, theta)
    ae = _inner_eta(model, q_ref, ac, "plus", inner_tol, theta, q_all=q_all)
    bc = _xi_contour(model, q_ref, "minus", inner_tol, theta)
    be_m = _inner_eta(model, q_ref, bc, "minus", inner_tol, theta, q_all=q_all)
    xa, wa = ac.nodes()
    xb, wb = bc.nodes()
    be_p = eta_contour(model, q_ref, xb, "plus", inner_tol, omega=-ETA_CENTER * theta,
                       d_max=ETA_HALF * theta, q_all=q_all)
    if backend != "GWR":
        pts = np.concatenate([xa, xb, ae.nodes()[0], be_m.nodes()[0], be_p.nodes()[0]])
        if not scan_pairs(model, q_all, pts):
            raise JointDeformationError("q + psi(xi) meets (-inf, 0] on the joint grid")
    a_phi = _factor_matrix(model, q1, xa, ae, "plus")
    if atom_kind(model) == "plus":
        a_phi = a_phi - np.array([atom_mass(model, float(q), "plus", inner_tol) for q in q1])[:, None]
    fm = _factor_matrix(model, q1, xb, be_m, "minus")
    fp = _factor_matrix(model, q2, xb, be_p, "plus")
    b = (fm * (wb / (-1j * xb))[None, :]) @ fp.T
    est = sum(c.est_error for c in (ac, ae, bc, be_m, be_p))
    if backend != "GWR":
        est += c1.est_error + c2.est_error
    return TauPlan(model, float(T), float(t), backend, q1, q2, w1, w2, xa, wa, a_phi, b, M, est)


def _tau_values(model, T, t, h, tol, backend, deriv):
    """``P[tau_T <= t, sup X_T <= h]`` (or its ``h``-derivative) on an array of ``h``."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h <= 0):
        raise PreconditionError("h must be positive")
    if not 0 < t <= T:
        raise PreconditionError("need 0 < t <= T")
    if t == T:
        F, p = sup_values(model, T, h, tol, backend)
        return p if deriv else F
    plan = tau_plan(model, float(T), float(t), float(tol), _backend_name(backend))
    raw = plan.a_phi * plan.a_w[None, :]
    ph = np.exp(-1j * np.outer(plan.a_xi, h))
    if deriv:
        A = raw @ ph
    else:
        A = 1.0 + (raw / (-1j * plan.a_xi)[None, :]) @ ph
    return plan.combine(A)


def joint_cdf_tau_sup(model: LevyModel, T: float, t: float, h: float, tol: float = DEFAULT_TOL,
                      backend="auto") -> float:
    """``P[tau_T <= t, sup X_T <= h]`` for ``0 < t <= T`` and ``h > 0``.

    At ``t = T`` the event ``tau_T <= T`` is sure and the supremum cdf is returned.
    """
    val = float(_tau_values(model, T, t, h, tol, backend, False)[0])
    return float(min(max(val, 0.0), 1.0))


def dh_joint_tau_sup(model: LevyModel, T: float, t: float, h: float, tol: float = DEFAULT_TOL,
                     backend="auto") -> float:
    """``d/dh P[tau_T <= t, sup X_T <= h]``; at ``t = T`` the supremum density."""
    return max(float(_tau_values(model, T, t, h, tol, backend, True)[0]), 0.0)


def dh_joint_tau_values(model: LevyModel, T: float, t: float, h, tol: float = DEFAULT_TOL,
                        backend="auto"):
    """Vectorized ``dh_joint_tau_sup`` over an array of ``h``."""
    return _tau_values(model, T, t, h, tol, backend, True)


def tau_cdf(model: LevyModel, T: float, t: float, tol: float = DEFAULT_TOL, backend="auto") -> float:
    """Marginal ``P[tau_T <= t]``."""
    if not 0 < t <= T:
        raise PreconditionError("need 0 < t <= T")
    if t == T:
        return 1.0
    plan = tau_plan(model, float(T), float(t), float(tol), _backend_name(backend))
    val = float(plan.combine(np.ones((len(plan.q1), 1), dtype=complex))[0])
    return float(min(max(val, 0.0), 1.0))


def conditional_tau_cdf(model: LevyModel, T: float, t: float, h: float, tol: float = DEFAULT_TOL,
                        backend="auto") -> float:
    """``P[tau_T <= t | sup X_T = h]``."""
    p = pdf_sup(model, T, h, tol, backend)
    if p <= PDF_FLOOR:
        raise DegenerateConditioningError(f"density of the supremum at h={h} underflows")
    return float(min(max(dh_joint_tau_sup(model, T, t, h, tol, backend) / p, 0.0), 1.0))
