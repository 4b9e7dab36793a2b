"""Wiener-Hopf factors of a Lévy process killed at an exponential time.

For ``q > 0`` and ``T_q ~ Exp(q)`` independent of ``X``,
``phi_plus(xi) = E exp(i xi sup_{t<T_q} X_t)`` and
``phi_minus(xi) = E exp(i xi inf_{t<T_q} X_t)``; they satisfy
``phi_plus * phi_minus = q / (q + psi)``.  Both are computed from

    phi_plus(xi)  = exp[ (1/2 pi i) int_{L-} xi ln(q/(q+psi(eta))) / (eta (eta - xi)) deta ]
    phi_minus(xi) = exp[-(1/2 pi i) int_{L+} xi ln(q/(q+psi(eta))) / (eta (eta - xi)) deta ]

with ``L-`` a sinh contour below ``xi`` (wings down) and ``L+`` one above.
For finite-variation processes with drift one of the extrema has an atom
at zero; its mass is a separate contour integral.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .contours import SinhContour, curve_height, design_sinh
from .errors import BranchCutError, JointDeformationError, PreconditionError
from .models import LevyModel, decay_cone, integrand_scale

SIDES = ("plus", "minus")
ATOM_KINDS = ("none", "plus", "minus")
DEFAULT_TOL = 1e-12


def _psi_iv(model, v):
    return float((model.mu * v + model.psi0(np.array([1j * v]))[0]).real)


def q_roots(model: LevyModel, q: float):
    """Heights ``(s_minus, s_plus)`` where ``q + psi(i v)`` vanishes, or the strip edges.

    ``phi_plus`` is analytic above ``i*s_minus`` and ``phi_minus`` below ``i*s_plus``.
    """
    q = float(q)
    lo, hi = model.strip
    out = []
    for edge in (lo, hi):
        f = lambda v: q + _psi_iv(model, v)
        a = 0.0
        c = edge * (1 - 1e-12)
        if abs(c) > 1e5:
            c = math.copysign(1.0, edge)
            while f(c) > 0 and abs(c) < 1e5:
                c *= 2.0
        try:
            fc = f(c)
        except Exception:
            fc = float("nan")
        if fc == 0:
            out.append(c)
        elif math.isfinite(fc) and fc < 0:
            out.append(brentq(f, a, c, xtol=1e-15, rtol=1e-14))
        else:
            out.append(edge)
    return out[0], out[1]


def atom_kind(model: LevyModel) -> str:
    """Which extremum of the killed process has an atom at zero."""
    if not model.finite_variation or model.mu == 0:
        return "none"
    return "minus" if model.mu > 0 else "plus"


def _log_q_psi(model, q, eta):
    """``ln(1 + psi(eta)/q)`` on the branch continuous from ``eta ~ 0``.

    ``q + psi`` must avoid ``(-inf, 0]``; the phase is unwrapped from the
    center node outwards and compared with the principal value.
    """
    z = q + model.psi(eta)
    ang = np.angle(z)
    _check_branch(ang)
    return np.log(z) - np.log(q)


def _check_branch(ang):
    n = ang.shape[-1]
    c = n // 2
    right = np.unwrap(ang[..., c:], axis=-1)
    left = np.unwrap(ang[..., c::-1], axis=-1)
    if np.any(np.abs(right - ang[..., c:]) > 1.0) or np.any(np.abs(left - ang[..., c::-1]) > 1.0):
        raise BranchCutError("logarithm argument crossed the negative real axis along the contour")


def _log_fv(model, q, eta):
    """``ln(1 + psi0(eta)/(q - i mu eta))`` with the same branch check."""
    den = q - 1j * model.mu * eta
    z = 1.0 + model.psi0(eta) / den
    _check_branch(np.angle(z))
    return np.log(z)


def _band_side(model, q, side):
    s_minus, s_plus = q_roots(model, q.real if np.iscomplexobj(q) else q)
    return (s_minus, 0.0) if side == "plus" else (0.0, s_plus)


def eta_contour(model: LevyModel, q, xi_points, side: str, tol: float = DEFAULT_TOL,
                omega: Optional[float] = None, d_max: Optional[float] = None,
                q_all=None, cross_cap: Optional[float] = None) -> SinhContour:
    """Inner contour for the ``side`` factor evaluated at ``xi_points``.

    For ``side='plus'`` the contour crosses in ``(s_minus(q), 0)``, bends
    downwards and stays strictly below every ``xi``; ``'minus'`` mirrors it.
    ``q_all`` lists every ``q`` the contour will be used with (branch check).
    ``cross_cap`` bounds the crossing height (default: the extreme ``Im xi``);
    pass the crossing of a curved ``xi`` contour here.
    """
    if side not in SIDES:
        raise PreconditionError("side must be 'plus' or 'minus'")
    xi_points = np.atleast_1d(np.asarray(xi_points, dtype=complex))
    qs = np.atleast_1d(np.asarray(q if q_all is None else q_all, dtype=complex))
    q_ref = complex(qs[np.argmin(np.abs(qs))])
    g = decay_cone(model)
    sgn = -1.0 if side == "plus" else 1.0
    if omega is None:
        omega = sgn * 0.5 * g
        d_max = 0.5 * g
    elif d_max is None:
        d_max = min(abs(omega), g - abs(omega))
    lo, hi = _band_side(model, q_ref.real, side)
    if side == "plus":
        hi = min(hi, float(xi_points.imag.min()) if cross_cap is None else cross_cap)
    else:
        lo = max(lo, float(xi_points.imag.max()) if cross_cap is None else cross_cap)
    if not lo < hi:
        raise PreconditionError("xi lies on the wrong side of the admissible inner strip")
    u = xi_points.real
    v = xi_points.imag
    mod = np.abs(xi_points)
    xi_big = complex(xi_points[np.argmax(mod)]) if mod.max() > 0 else 1.0
    gap_scale = max(1e-12, hi - lo)

    def extra(omega1, b, thetas):
        for th in thetas:
            h = curve_height(omega1, b, th, u)
            if side == "plus" and np.any(h >= v - 1e-9 * gap_scale):
                return False
            if side == "minus" and np.any(h <= v + 1e-9 * gap_scale):
                return False
        return True

    order = np.argsort(u)
    u_sorted = u[order]
    xi_sorted = xi_points[order]

    def nearest(eta):
        idx = np.searchsorted(u_sorted, eta.real)
        best = np.full(eta.shape, np.inf)
        size = np.zeros(eta.shape)
        for off in (-2, -1, 0, 1, 2):
            k = np.clip(idx + off, 0, len(u_sorted) - 1)
            dist = np.abs(eta - xi_sorted[k])
            closer = dist < best
            best = np.where(closer, dist, best)
            size = np.where(closer, np.abs(xi_sorted[k]), size)
        return best, size

    def logf(eta):
        with np.errstate(all="ignore"):
            lg = np.log(np.abs(np.log(q_ref - 1j * model.mu * eta + model.psi0(eta)) - np.log(q_ref)) + 1e-300)
            far = lg - np.log(np.abs(eta)) + np.log(np.abs(xi_big)) - np.log(np.abs(eta - xi_big) + 1e-300)
            dist, size = nearest(eta)
            near = lg + np.log(size + 1e-300) - np.log(np.abs(eta)) - np.log(dist + 1e-300)
        return np.maximum(far, near) - math.log(2 * math.pi)

    b_max = 4.0 * max(integrand_scale(model, 1.0 / max(abs(q_ref), 1e-12)), 1e-12)
    b_max = max(b_max, 4.0 * (hi - lo) if math.isfinite(hi - lo) else b_max)
    center = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (
        hi - 1.0 if math.isfinite(hi) else lo + 1.0)
    des = design_sinh(logf, omega, d_max, lo, hi, center, b_max, tol, extra_ok=extra, model=model)
    kind = "Lminus" if side == "plus" else "Lplus"
    c = SinhContour(omega1=des.omega1, b=des.b, omega=omega, zeta=des.zeta, N=des.N,
                    kind=kind if (des.omega1 + des.b * math.sin(omega)) * sgn > 0 else "central",
                    d=des.d, est_error=des.est)
    return c


def _factor_log(model, q, xi, eta_c: SinhContour, side):
    eta, w = eta_c.nodes()
    L = _log_q_psi(model, q, eta)
    kern = w * L / eta
    S = (kern[None, :] / (eta[None, :] - xi[:, None])).sum(axis=1) * xi
    # (1/2 pi i) int xi ln(q/(q+psi)) / (eta (eta - xi)) = i * sum w xi L / (eta (eta - xi))
    return 1j * S if side == "plus" else -1j * S


def _check_q(q):
    qc = complex(q)
    if qc.imag == 0 and not qc.real > 0:
        raise PreconditionError("q must be positive (or complex with positive real part)")
    if qc.real <= 0:
        raise PreconditionError("q must have positive real part")
    return qc.real if qc.imag == 0 else qc


def _factor(model, q, xi, tol, side, eta_c):
    q = _check_q(q)
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=complex))
    out = np.ones_like(xi_arr)
    nz = xi_arr != 0
    if np.any(nz):
        if eta_c is None:
            eta_c = eta_contour(model, q, xi_arr[nz], side, tol)
        _validate_position(eta_c, xi_arr[nz], side)
        out[nz] = np.exp(_factor_log(model, q, xi_arr[nz], eta_c, side))
    return complex(out[0]) if np.ndim(xi) == 0 else out


def _validate_position(eta_c, xi, side):
    for th in (eta_c.omega,):
        h = curve_height(eta_c.omega1, eta_c.b, th, xi.real)
        if side == "plus" and np.any(h >= xi.imag):
            raise PreconditionError("xi must lie strictly above the inner contour")
        if side == "minus" and np.any(h <= xi.imag):
            raise PreconditionError("xi must lie strictly below the inner contour")


def phi_plus(model: LevyModel, q, xi, tol: float = DEFAULT_TOL, eta: Optional[SinhContour] = None):
    """``E exp(i xi sup X)`` over an exponential horizon with rate ``q``."""
    return _factor(model, q, xi, tol, "plus", eta)


def phi_minus(model: LevyModel, q, xi, tol: float = DEFAULT_TOL, eta: Optional[SinhContour] = None):
    """``E exp(i xi inf X)`` over an exponential horizon with rate ``q``."""
    return _factor(model, q, xi, tol, "minus", eta)


def _fv_contour(model, q, side, tol):
    """Contour for the atom integrals: above 0 (minus) or below 0 (plus), avoiding ``q - i mu eta = 0``."""
    g = decay_cone(model)
    if side == "minus":
        omega, lo, hi = 0.5 * g, 0.0, q_roots(model, q)[1]
        if model.mu < 0:
            hi = min(hi, q / -model.mu)
    else:
        omega, lo, hi = -0.5 * g, q_roots(model, q)[0], 0.0
        if model.mu > 0:
            lo = max(lo, -q / model.mu)

    def logf(eta):
        with np.errstate(all="ignore"):
            val = np.abs(np.log(1.0 + model.psi0(eta) / (q - 1j * model.mu * eta)))
            return np.log(val + 1e-300) - np.log(np.abs(eta)) - math.log(2 * math.pi)

    b_max = 4.0 * max(integrand_scale(model, 1.0 / q), 1e-12)
    des = design_sinh(logf, omega, 0.5 * g, lo, hi, 0.5 * (lo + hi) if math.isfinite(hi - lo) else 0.0,
                      b_max, tol, model=model)
    return SinhContour(omega1=des.omega1, b=des.b, omega=omega, zeta=des.zeta, N=des.N,
                       kind="Lplus" if side == "minus" else "Lminus", d=des.d, est_error=des.est)


def atom_mass(model: LevyModel, q: float, side: str, tol: float = DEFAULT_TOL) -> float:
    """Mass at zero of ``inf X`` (``side='minus'``) or ``sup X`` (``'plus'``) at ``T_q``."""
    if side not in SIDES:
        raise PreconditionError("side must be 'plus' or 'minus'")
    if not q > 0:
        raise PreconditionError("q must be positive")
    if atom_kind(model) != side:
        return 0.0
    c = _fv_contour(model, float(q), side, tol)
    eta, w = c.nodes()
    s = complex(np.sum(w * _log_fv(model, q, eta) / eta))
    # (1/2 pi i) int ... = -i * sum w ...
    expo = 1j * s if side == "minus" else -1j * s
    return float(np.exp(expo).real)


def phi_fv(model: LevyModel, q: float, xi, side: str, tol: float = DEFAULT_TOL,
           eta: Optional[SinhContour] = None):
    """Non-atom factor of a finite-variation process with drift via ``q/(q - i mu xi) exp[...]``."""
    if atom_kind(model) == "none" or atom_kind(model) == side:
        raise PreconditionError("the drift representation applies to the non-atom factor only")
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=complex))
    if eta is None:
        eta = eta_contour(model, q, xi_arr, side, tol)
        if side == "plus" and model.mu > 0 and eta.crossing <= -q / model.mu:
            raise PreconditionError("inner contour crosses the drift pole")
    e, w = eta.nodes()
    L = _log_fv(model, q, e)
    S = ((w * L / e)[None, :] / (xi_arr[:, None] - e[None, :])).sum(axis=1) * xi_arr
    expo = -1j * S if side == "plus" else 1j * S
    out = q / (q - 1j * model.mu * xi_arr) * np.exp(expo)
    return complex(out[0]) if np.ndim(xi) == 0 else out


def phi_decayed(model: LevyModel, q, xi, side: str, tol: float = DEFAULT_TOL,
                eta: Optional[SinhContour] = None):
    """``phi_side(xi) - a_side``: the factor with its atom at zero removed."""
    f = phi_plus if side == "plus" else phi_minus
    val = f(model, q, xi, tol, eta)
    a = atom_mass(model, float(np.real(q)), side, tol) if atom_kind(model) == side else 0.0
    return val - a


@dataclass(frozen=True)
class WhfValue:
    q: complex
    xi: complex
    phi_plus: complex
    phi_minus: complex


@dataclass(frozen=True)
class WhfGrid:
    """Decayed factor values on a ``(q, xi)`` product grid.

    ``values[k, j]`` is ``phi_side(q_k, xi_j) - atoms[k]``.
    """

    q_nodes: np.ndarray
    xi_nodes: np.ndarray
    values: np.ndarray
    atoms: np.ndarray
    atom_kind: str
    side: str

    def __post_init__(self):
        if self.values.shape != (len(self.q_nodes), len(self.xi_nodes)):
            raise PreconditionError("grid dimensions are inconsistent")
        if self.atom_kind not in ATOM_KINDS:
            raise PreconditionError("unknown atom kind")

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["q_index", "xi_index", "re", "im"])
            for k in range(self.values.shape[0]):
                for j in range(self.values.shape[1]):
                    v = self.values[k, j]
                    out.writerow([k, j, repr(float(v.real)), repr(float(v.imag))])


def scan_pairs(model: LevyModel, q_nodes, xi_nodes, psi_values=None) -> bool:
    """True when ``q + psi(xi)`` avoids ``(-inf, 0]`` on every pair.

    ``psi_values`` may carry precomputed ``psi(xi_nodes)``.
    """
    if psi_values is None:
        xi = np.asarray(xi_nodes, dtype=complex)
        with np.errstate(all="ignore"):
            psi_values = model.psi0(xi) - 1j * model.mu * xi
    if not np.all(np.isfinite(psi_values)):
        return False
    q = np.asarray(q_nodes, dtype=complex)
    if not np.all(np.isfinite(q)):
        return False
    # candidates first: |Im z| <= 1e-12 |z| needs Im psi within a band around -Im q
    order = np.argsort(psi_values.imag)
    pim = psi_values.imag[order]
    band = 1e-12 * (np.abs(q) + np.abs(psi_values).max())
    lo = np.searchsorted(pim, -q.imag - band, side="left")
    hi = np.searchsorted(pim, -q.imag + band, side="right")
    for k in np.nonzero(hi > lo)[0]:
        z = q[k] + psi_values[order[lo[k]:hi[k]]]
        if np.any((z.real <= 0) & (np.abs(z.imag) <= 1e-12 * np.abs(z))):
            return False
    return True


def build_whf_grid(model: LevyModel, q_nodes, xi_contour: SinhContour, side: str,
                   tol: float = DEFAULT_TOL, eta: Optional[SinhContour] = None,
                   eta_for_q=None) -> WhfGrid:
    """Tabulate the decayed ``side`` factor on every ``(q, xi)`` pair.

    ``eta`` fixes one inner contour for all ``q``; otherwise ``eta_for_q(q)``
    or an automatically designed contour per ``q`` is used.
    """
    q_nodes = np.asarray(q_nodes, dtype=complex)
    xi, _ = xi_contour.nodes()
    if eta is not None:
        e_nodes = eta.nodes()[0]
        if not scan_pairs(model, q_nodes, e_nodes) or not scan_pairs(model, q_nodes, xi):
            raise JointDeformationError("q + psi(xi) meets (-inf, 0] on the grid")
    kind = atom_kind(model)
    vals = np.empty((len(q_nodes), len(xi)), dtype=complex)
    atoms = np.zeros(len(q_nodes))
    for k, q in enumerate(q_nodes):
        qq = q.real if q.imag == 0 else q
        ec = eta if eta is not None else (eta_for_q(qq) if eta_for_q is not None else None)
        vals[k] = _factor(model, qq, xi, tol, side, ec)
        if kind == side:
            atoms[k] = atom_mass(model, float(q.real), side, tol)
            vals[k] -= atoms[k]
    vals.setflags(write=False)
    atoms.setflags(write=False)
    return WhfGrid(q_nodes=q_nodes, xi_nodes=xi, values=vals, atoms=atoms, atom_kind=kind, side=side)


def default_joint_check(model: LevyModel, omega_l: float):
    """Feasibility scan of ``q`` nodes against rays inside the inner angle budget."""
    nu = max(1.0, model.order) if not model.log_order else 1.0
    budget = min(decay_cone(model), (math.pi / 2 - 2 * omega_l) / nu)
    lo, hi = model.strip
    thetas = np.linspace(-budget, budget, 9)
    r = np.logspace(-3, 6, 60)
    heights = np.array([0.0, 0.5 * max(lo, -1e3), 0.5 * min(hi, 1e3)])
    pts = (r[:, None, None] * np.exp(1j * thetas)[None, :, None] + 1j * heights[None, None, :]).ravel()
    pts = np.concatenate([pts, -np.conj(pts)])
    with np.errstate(all="ignore"):
        psi_pts = model.psi0(pts) - 1j * model.mu * pts

    def ok(q_nodes):
        return scan_pairs(model, q_nodes, pts, psi_pts)

    return ok
