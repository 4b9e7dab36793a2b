"""Distributions of the supremum, infimum and drawdown of ``X`` on ``[0, T]``.

With ``phi_pp`` the atom-free part of the Wiener-Hopf factor,

    P[sup X_T > h] = -L^{-1}_{q->T}[ (1/q) (1/2pi) int_{L-} e^{-i h xi} phi_pp_q(xi) / (-i xi) dxi ],
    p_sup(T, h)    =  L^{-1}_{q->T}[ (1/q) (1/2pi) int_{L-} e^{-i h xi} phi_pp_q(xi) dxi ],

for ``h > 0``; the infimum uses the minus factor on a contour above the
origin and ``h < 0``, in which case the same expression (without the sign
flip) equals ``P[inf X_T <= h]``.  The atom parts integrate to zero since
the ``xi`` contour can be closed away from the pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .contours import BromwichContour, SinhContour, design_sinh, select_bromwich
from .errors import JointDeformationError, PreconditionError
from .laplace import LaplaceBackend, bromwich_allowed, gwr_abscissas, gwr_invert
from .models import LevyModel, decay_cone, integrand_scale
from .wiener_hopf import (_check_branch, atom_kind, atom_mass, default_joint_check, eta_contour,
                          q_roots, scan_pairs)

DEFAULT_TOL = 1e-12
OMEGA_L = math.pi / 10
XI_FRACTION = 0.4
ETA_CENTER = 0.7
ETA_HALF = 0.25


def angle_budget(model: LevyModel, bromwich: bool) -> float:
    """Largest inner-contour angle compatible with the decay cone (and the Bromwich angle)."""
    g = decay_cone(model)
    if not bromwich:
        return g
    nu = 1.0 if model.log_order else max(1.0, model.order)
    return 0.95 * min(g, (math.pi / 2 - 2 * OMEGA_L) / nu)


def _xi_contour(model, q_ref, side, tol, theta, q_proxy=None):
    """Outer ``xi`` contour for the extremum integral on the ``side`` of the origin."""
    s_minus, s_plus = q_roots(model, q_ref)
    sgn = -1.0 if side == "plus" else 1.0
    omega = sgn * XI_FRACTION * theta
    lo, hi = (s_minus, 0.0) if side == "plus" else (0.0, s_plus)
    qp = q_ref if q_proxy is None else q_proxy
    log2pi = math.log(2 * math.pi)

    def logf(xi):
        with np.errstate(all="ignore"):
            half = 0.5 * (np.log(qp) - np.log(qp - 1j * model.mu * xi + model.psi0(xi)))
            return half - np.log(-1j * xi) - log2pi

    b_max = 4.0 * integrand_scale(model, 1.0 / q_ref)
    center = 0.5 * (lo + hi)
    des = design_sinh(logf, omega, XI_FRACTION * theta, lo, hi, center, b_max, tol, model=model)
    return SinhContour(omega1=des.omega1, b=des.b, omega=omega, zeta=des.zeta, N=des.N,
                       kind="Lminus" if side == "plus" else "Lplus", d=des.d, est_error=des.est)


def _inner_eta(model, q, xi_c, side, tol, theta, q_all=None):
    sgn = -1.0 if side == "plus" else 1.0
    xi, _ = xi_c.nodes()
    return eta_contour(model, q, xi, side, tol, omega=sgn * ETA_CENTER * theta,
                       d_max=ETA_HALF * theta, q_all=q_all, cross_cap=xi_c.crossing)


def _factor_matrix(model, q_nodes, xi, eta_c, side):
    """``phi_side(q_k, xi_j)`` for all pairs via one matrix product."""
    eta, w = eta_c.nodes()
    q = np.asarray(q_nodes, dtype=complex)[:, None]
    z = q + model.psi(eta)[None, :]
    _check_branch(np.angle(z))
    L = np.log(z) - np.log(q)
    K = (w / eta)[None, :] / (eta[None, :] - xi[:, None])
    S = (L @ K.T) * xi[None, :]
    return np.exp(1j * S if side == "plus" else -1j * S)


@dataclass(frozen=True)
class ExtremumPlan:
    """Cached quadrature for one extremum law at one horizon ``T``.

    ``cdf_w[k]`` and ``pdf_w[k]`` fold the ``xi`` weights, ``phi_pp`` and the
    ``1/q`` factor for the ``k``-th Laplace node; evaluating at ``h`` costs
    one ``exp(-i h xi)`` per node.
    """

    model: LevyModel
    T: float
    side: str
    backend: str
    q: np.ndarray
    xi: tuple
    cdf_w: tuple
    pdf_w: tuple
    lap_w: Optional[np.ndarray]
    M: int
    raw: tuple = ()
    est_error: float = float("nan")

    @property
    def shared(self) -> bool:
        """True when every Laplace node uses the same ``xi`` nodes."""
        return all(x is self.xi[0] for x in self.xi)

    def stacked(self, name):
        """``(n_q, N)`` matrix of the per-node arrays ``name`` (shared nodes only)."""
        return _stack(self, name)

    def transforms(self, h):
        h = np.atleast_1d(np.asarray(h, dtype=float))
        if self.shared:
            ph = np.exp(-1j * np.outer(self.xi[0], h))
            return self.stacked("cdf_w") @ ph, self.stacked("pdf_w") @ ph
        F = np.empty((len(self.q), h.size), dtype=complex)
        P = np.empty_like(F)
        for k in range(len(self.q)):
            ph = np.exp(-1j * np.outer(self.xi[k], h))
            F[k] = self.cdf_w[k] @ ph
            P[k] = self.pdf_w[k] @ ph
        return F, P

    def invert(self, values):
        """Laplace inversion at ``T`` of per-node transform values (first axis = nodes)."""
        values = np.asarray(values)
        if self.backend == "GWR":
            return gwr_invert(values.real, self.T, self.M)
        return np.real(np.tensordot(self.lap_w, values, axes=(0, 0)))

    def evaluate(self, h):
        """``(I_cdf, p)`` where ``I_cdf`` is the inverted inner integral of the cdf form."""
        F, P = self.transforms(h)
        return self.invert(F), self.invert(P)


_STACKS = {}


def _stack(plan, name):
    key = (id(plan), name)
    if key not in _STACKS:
        _STACKS[key] = (plan, np.array(getattr(plan, name)))
    return _STACKS[key][1]


def _fold(xi, w, vals, q):
    cdf_w = w * vals / (-1j * xi) / q
    pdf_w = w * vals / q
    return cdf_w, pdf_w


def _atoms(model, q_nodes, side, tol):
    if atom_kind(model) != side:
        return np.zeros(len(q_nodes))
    return np.array([atom_mass(model, float(np.real(q)), side, tol) for q in q_nodes])


@lru_cache(maxsize=64)
def extremum_plan(model: LevyModel, T: float, side: str, tol: float = DEFAULT_TOL,
                  backend: str = "auto", M: int = 8) -> ExtremumPlan:
    """Build (and cache) the quadrature for the supremum (``'plus'``) or infimum (``'minus'``)."""
    if not T > 0:
        raise PreconditionError("T must be positive")
    if side not in ("plus", "minus"):
        raise PreconditionError("side must be 'plus' or 'minus'")
    if backend == "auto":
        backend = "SinhBromwich" if bromwich_allowed(model) else "GWR"
    if backend == "SinhBromwich" and not bromwich_allowed(model):
        raise JointDeformationError("this model admits the GWR backend only")
    inner_tol = max(tol, 1e-13)
    if backend == "GWR":
        theta = angle_budget(model, False)
        q_nodes = gwr_abscissas(M, T)
        # one contour pair for all (real) nodes: the smallest q has the narrowest strip
        q_ref = float(q_nodes.min())
        xc = _xi_contour(model, q_ref, side, inner_tol, theta)
        xi, w = xc.nodes()
        ec = _inner_eta(model, q_ref, xc, side, inner_tol, theta, q_all=q_nodes)
        vals = _factor_matrix(model, q_nodes, xi, ec, side)
        if atom_kind(model) == side:
            vals = vals - _atoms(model, q_nodes, side, inner_tol)[:, None]
        xis, cws, pws, raws = [], [], [], []
        for k, q in enumerate(q_nodes):
            cw, pw = _fold(xi, w, vals[k], q)
            xis.append(xi)
            cws.append(cw)
            pws.append(pw)
            raws.append(w * vals[k])
        return ExtremumPlan(model, float(T), side, "GWR", q_nodes, tuple(xis), tuple(cws),
                            tuple(pws), None, M, tuple(raws), xc.est_error + ec.est_error)
    theta = angle_budget(model, True)
    brom = select_bromwich(model, T, tol, omega_l=OMEGA_L)
    q_half, wq = brom.half_nodes()
    q_ref = brom.crossing
    xc = _xi_contour(model, q_ref, side, inner_tol, theta)
    xi, w = xc.nodes()
    ec = _inner_eta(model, q_ref, xc, side, inner_tol, theta, q_all=q_half)
    if not (scan_pairs(model, q_half, xi) and scan_pairs(model, q_half, ec.nodes()[0])):
        raise JointDeformationError("q + psi(xi) meets (-inf, 0] on the joint grid")
    vals = _factor_matrix(model, q_half, xi, ec, side)
    xis, cws, pws, raws = [], [], [], []
    for k, q in enumerate(q_half):
        cw, pw = _fold(xi, w, vals[k], q)
        xis.append(xi)
        cws.append(cw)
        pws.append(pw)
        raws.append(w * vals[k])
    lap_w = wq * np.exp(q_half * T)
    est = brom.est_error + xc.est_error + ec.est_error
    return ExtremumPlan(model, float(T), side, "SinhBromwich", q_half, tuple(xis), tuple(cws),
                        tuple(pws), lap_w, M, tuple(raws), est)


def _backend_name(backend):
    if isinstance(backend, LaplaceBackend):
        return backend.kind
    return backend


def plan_error(model, T, side, tol=DEFAULT_TOL, backend="auto") -> float:
    """Discretization plus truncation estimate reported by the contour designs of a plan."""
    return extremum_plan(model, float(T), side, float(tol), _backend_name(backend)).est_error


def sup_values(model, T, h, tol=DEFAULT_TOL, backend="auto"):
    """``(F, p)`` arrays of the supremum law at ``h > 0``."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h <= 0):
        raise PreconditionError("h must be positive")
    plan = extremum_plan(model, float(T), "plus", float(tol), _backend_name(backend))
    I, p = plan.evaluate(h)
    return 1.0 + I, p


def sup_survival_values(model, T, h, tol=DEFAULT_TOL, backend="auto"):
    """``(P[sup X_T > h], density)`` without the cancellation in ``1 - F``."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h <= 0):
        raise PreconditionError("h must be positive")
    plan = extremum_plan(model, float(T), "plus", float(tol), _backend_name(backend))
    I, p = plan.evaluate(h)
    return -I, p


def inf_values(model, T, h, tol=DEFAULT_TOL, backend="auto"):
    """``(P[inf X_T <= h], density)`` arrays at ``h < 0``."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if np.any(h >= 0):
        raise PreconditionError("h must be negative")
    plan = extremum_plan(model, float(T), "minus", float(tol), _backend_name(backend))
    return plan.evaluate(h)


def _clip01(x):
    return float(min(max(x, 0.0), 1.0))


def cdf_sup(model: LevyModel, T: float, h: float, tol: float = DEFAULT_TOL, backend="auto") -> float:
    """``P[sup_{t<=T} X_t <= h]`` for ``h > 0``."""
    F, _ = sup_values(model, T, h, tol, backend)
    return _clip01(F[0])


def pdf_sup(model: LevyModel, T: float, h: float, tol: float = DEFAULT_TOL, backend="auto") -> float:
    """Density of the supremum at ``h > 0``."""
    _, p = sup_values(model, T, h, tol, backend)
    return max(float(p[0]), 0.0)


def cdf_inf(model: LevyModel, T: float, h: float, tol: float = DEFAULT_TOL, backend="auto") -> float:
    """``P[inf_{t<=T} X_t >= h]`` for ``h < 0``."""
    G, _ = inf_values(model, T, h, tol, backend)
    return _clip01(1.0 - G[0])


def pdf_inf(model: LevyModel, T: float, h: float, tol: float = DEFAULT_TOL, backend="auto") -> float:
    """Density of the infimum at ``h < 0``."""
    _, p = inf_values(model, T, h, tol, backend)
    return max(float(p[0]), 0.0)


def cdf_drawdown(model: LevyModel, T: float, a: float, tol: float = DEFAULT_TOL, backend="auto") -> float:
    """``P[sup X_T - X_T >= a]``, equal in law to ``P[inf X_T <= -a]``, for ``a > 0``."""
    if not a > 0:
        raise PreconditionError("a must be positive")
    return 1.0 - cdf_inf(model, T, -a, tol, backend)
