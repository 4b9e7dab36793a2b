"""Sinh-deformed integration contours.

A contour ``xi(y) = 1j*omega1 + b*sinh(1j*omega + y)`` turns a Fourier
integral over a line into an integral over ``y`` whose integrand decays
double-exponentially; the truncated trapezoid rule with step ``zeta`` and
``2N+1`` nodes then converges at the rate ``exp(-2 pi d / zeta)`` where
``d`` is the half-width of the strip of analyticity in ``y``.

The image of the line ``Im y = v`` is the same curve with angle
``omega + v``; it is the hyperbola
``Im xi = omega1 + tan(theta) * sqrt(b^2 cos^2 theta + (Re xi)^2)``
crossing the imaginary axis at height ``omega1 + b sin(theta)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import AccuracyUnreachableError, JointDeformationError, PreconditionError
from .models import LevyModel, decay_cone, integrand_scale

TWO_PI = 2.0 * math.pi
D_FRACTION = 0.85
H_NODES = 32
SCAN_BLOCK = 8
MAX_NODES = 40000
LOG_HUGE = 700.0
ROUNDOFF = 4e-16

KINDS = ("Lplus", "Lminus", "central")
ROLES = ("pdf", "cpdf_upper", "cpdf_lower")


@dataclass(frozen=True)
class SinhContour:
    """Truncated trapezoid grid on ``xi(y) = i*omega1 + b*sinh(i*omega + y)``."""

    omega1: float
    b: float
    omega: float
    zeta: float
    N: int
    kind: str = "central"
    d: float = 0.0
    est_error: float = float("nan")

    def __post_init__(self):
        if not self.b > 0:
            raise PreconditionError("contour scale b must be positive")
        if not -math.pi / 2 < self.omega < math.pi / 2:
            raise PreconditionError("contour angle omega must lie in (-pi/2, pi/2)")
        if not self.zeta > 0 or self.N < 1:
            raise PreconditionError("grid step must be positive and N >= 1")
        if self.kind not in KINDS:
            raise PreconditionError(f"kind must be one of {KINDS}")
        h = self.crossing
        if self.kind == "Lplus" and not (h > 0 and self.omega >= 0):
            raise PreconditionError("an Lplus contour must cross above the origin with omega >= 0")
        if self.kind == "Lminus" and not (h < 0 and self.omega <= 0):
            raise PreconditionError("an Lminus contour must cross below the origin with omega <= 0")

    @property
    def crossing(self) -> float:
        """Height at which the contour crosses the imaginary axis."""
        return self.omega1 + self.b * math.sin(self.omega)

    @property
    def size(self) -> int:
        return 2 * self.N + 1

    def y_nodes(self):
        return self.zeta * np.arange(-self.N, self.N + 1)

    def point(self, y):
        return 1j * self.omega1 + self.b * np.sinh(1j * self.omega + np.asarray(y))

    def derivative(self, y):
        return self.b * np.cosh(1j * self.omega + np.asarray(y))

    def nodes(self):
        """Nodes ``xi_j`` and weights ``w_j = zeta b cosh(i omega + j zeta) / 2 pi``."""
        y = self.y_nodes()
        return self.point(y), self.zeta * self.derivative(y) / TWO_PI

    def with_grid(self, zeta: float, N: int) -> "SinhContour":
        return replace(self, zeta=float(zeta), N=int(N))

    def to_csv(self, path):
        """Write ``j, Re xi_j, Im xi_j, Re w_j, Im w_j`` rows for plotting."""
        write_nodes_csv(path, self.nodes(), self.N)


@dataclass(frozen=True)
class BromwichContour:
    """Sinh-deformed Bromwich contour ``q(y) = sigma + i*b_l*sinh(i*omega_l + y)``."""

    sigma: float
    b_l: float
    omega_l: float
    zeta_l: float
    N_l: int
    d: float = 0.0
    est_error: float = float("nan")

    def __post_init__(self):
        if not (self.sigma > 0 and self.b_l > 0 and self.zeta_l > 0 and self.N_l >= 1):
            raise PreconditionError("invalid Bromwich contour parameters")
        if not 0 < self.omega_l < math.pi / 2:
            raise PreconditionError("omega_l must lie in (0, pi/2)")

    @property
    def crossing(self) -> float:
        """Point where the contour crosses the real axis."""
        return self.sigma - self.b_l * math.sin(self.omega_l)

    @property
    def size(self) -> int:
        return 2 * self.N_l + 1

    def point(self, y):
        return self.sigma + 1j * self.b_l * np.sinh(1j * self.omega_l + np.asarray(y))

    def nodes(self):
        """Nodes ``q_j`` and weights so that ``(1/2 pi i) int F dq ~ sum w_j F(q_j)``."""
        y = self.zeta_l * np.arange(-self.N_l, self.N_l + 1)
        w = self.zeta_l * self.b_l * np.cosh(1j * self.omega_l + y) / TWO_PI
        return self.point(y), w

    def half_nodes(self):
        """Nodes with ``j >= 0`` and weights doubled off the center.

        For transforms with ``F(conj q) = conj F(q)`` the real part of the
        half sum equals the full sum.
        """
        q, w = self.nodes()
        q, w = q[self.N_l:], w[self.N_l:].copy()
        w[1:] *= 2.0
        return q, w

    def as_sinh(self) -> SinhContour:
        """The same curve expressed as ``q = i*xi`` with ``xi`` on a sinh contour."""
        return SinhContour(omega1=-self.sigma, b=self.b_l, omega=self.omega_l, zeta=self.zeta_l,
                           N=self.N_l, kind="central", d=self.d, est_error=self.est_error)

    def to_csv(self, path):
        write_nodes_csv(path, self.nodes(), self.N_l)


def write_nodes_csv(path, nodes, N):
    z, w = nodes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["j", "re_node", "im_node", "re_weight", "im_weight"])
        for j, (zz, ww) in enumerate(zip(z, w)):
            out.writerow([j - N, repr(float(zz.real)), repr(float(zz.imag)),
                          repr(float(ww.real)), repr(float(ww.imag))])


def contour_nodes(contour):
    """Nodes and quadrature weights of a sinh or Bromwich contour (length ``2N+1``)."""
    return contour.nodes()


def curve_height(omega1, b, theta, u):
    """Imaginary part of the sinh curve with angle ``theta`` above abscissa ``u``."""
    c = math.cos(theta)
    return omega1 + math.tan(theta) * np.sqrt((b * c) ** 2 + np.asarray(u) ** 2)


def zeta_from_bound(H: float, d: float, eps: float) -> float:
    """Largest step with ``H r / (1 - r) <= eps`` for ``r = exp(-2 pi d / zeta)``."""
    return TWO_PI * d / math.log1p(H / eps)


def _safe_abs(logv):
    re = np.minimum(np.real(logv), LOG_HUGE)
    re = np.where(np.isnan(re), -np.inf, re)
    return np.exp(re)


@dataclass
class _Design:
    omega1: float
    b: float
    d: float
    zeta: float
    N: int
    H: float
    est: float


def _integrand_abs(logf, omega1, b, theta, x):
    z = 1j * theta + x
    xi = 1j * omega1 + b * np.sinh(z)
    with np.errstate(all="ignore"):
        lv = logf(xi) + np.log(b * np.cosh(z))
    return _safe_abs(lv)


def _estimate_H(logf, omega1, b, omega, d, eps, relative=False):
    """Coarse ``H(f, d)``: 32-node trapezoid of ``|f|`` along both strip edges.

    With ``relative`` the cut-off is taken relative to the peak modulus, so
    integrands far below ``eps`` in absolute terms are still resolved.
    """
    xs = np.arange(0.0, 61.0)
    edges = [(theta, sgn, _integrand_abs(logf, omega1, b, theta, sgn * xs))
             for theta in (omega - d, omega + d) for sgn in (1.0, -1.0)]
    cut = eps * 1e-3
    if relative:
        peak = max(float(np.max(v)) for _, _, v in edges)
        cut *= min(peak, 1.0)
    reach = 0.0
    for _, _, vals in edges:
        big = np.nonzero(vals > cut)[0]
        if big.size:
            reach = max(reach, xs[big[-1]] + 1.0)
    if reach == 0.0:
        return 0.0
    x = np.linspace(-reach, reach, H_NODES)
    h = x[1] - x[0]
    total = 0.0
    for theta in (omega - d, omega + d):
        vals = _integrand_abs(logf, omega1, b, theta, x)
        total += h * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
    return float(total)


def _truncation(logf, omega1, b, omega, zeta, eps):
    """Smallest ``N`` (multiple of 8) beyond which the node moduli stay below ``eps/10``."""
    need = []
    chunk = 256
    for sgn in (1.0, -1.0):
        start = 0
        last_loud = 0
        while True:
            if start >= MAX_NODES:
                return None, float("inf")
            j = np.arange(start, start + chunk)
            vals = zeta * _integrand_abs(logf, omega1, b, omega, sgn * zeta * j)
            loud = np.nonzero(vals >= eps / 10)[0]
            if loud.size:
                last_loud = start + loud[-1] + 1
            if last_loud <= start + chunk - 2 * SCAN_BLOCK:
                break
            start += chunk
            chunk *= 2
        need.append(last_loud)
    N = max(max(need), SCAN_BLOCK)
    N = SCAN_BLOCK * int(math.ceil(N / SCAN_BLOCK))
    tail = zeta * float(_integrand_abs(logf, omega1, b, omega, np.array([N * zeta, -N * zeta])).sum())
    return N, tail


def design_sinh(logf: Callable, omega: float, d_max: float, lo: float, hi: float,
                center: float, b_max: float, tol: float, *, extra_ok: Optional[Callable] = None,
                model: Optional[LevyModel] = None, relative: bool = False,
                scale: Optional[float] = None, b_count: int = 40) -> _Design:
    """Choose ``(omega1, b, d, zeta, N)`` for the integral of ``exp(logf(xi)) dxi``.

    The crossing heights of the whole strip family ``theta in [omega-d, omega+d]``
    must stay in ``(lo, hi)``; ``extra_ok(omega1, b, thetas)`` adds caller
    constraints (pole separation, joint feasibility).  Scales ``b`` are tried
    in halving steps from ``b_max`` and the design with fewest nodes wins.

    With ``relative`` the target is ``tol * scale`` (``scale`` estimates the
    size of the integral) and designs whose rounding error ``~ eps_mach * H``
    misses the target are used only if nothing better exists.
    """
    thetas_unit = np.linspace(-1.0, 1.0, 9)

    def feasible(omega1, b, d):
        thetas = omega + d * thetas_unit
        if np.any(np.abs(thetas) >= math.pi / 2):
            return False
        cross = omega1 + b * np.sin(thetas)
        if not (np.all(cross > lo) and np.all(cross < hi)):
            return False
        if model is not None and model.signed_sl:
            u = b * np.concatenate([-np.logspace(-3, 8, 45), [0.0], np.logspace(-3, 8, 45)])
            for th in thetas:
                pts = u + 1j * curve_height(omega1, b, th, u)
                if not np.all(model.in_domain(pts)):
                    return False
        if extra_ok is not None and not extra_ok(omega1, b, thetas):
            return False
        return True

    best = None
    best_cost = None
    worse = 0
    b = b_max
    for _ in range(b_count):
        lo_c = lo + b * (math.sin(omega) - math.sin(omega - d_max))
        hi_c = hi - b * (math.sin(omega + d_max) - math.sin(omega))
        if lo_c <= hi_c:
            h_c = min(max(center, lo_c), hi_c)
        else:
            h_c = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else (
                hi - b if math.isfinite(hi) else lo + b)
        omega1 = h_c - b * math.sin(omega)
        if feasible(omega1, b, d_max):
            d_ach = d_max
        else:
            a, c = 0.0, d_max
            for _ in range(40):
                m = 0.5 * (a + c)
                if feasible(omega1, b, m):
                    a = m
                else:
                    c = m
            d_ach = a
        if d_ach > 1e-3 * max(d_max, 1e-12):
            d = D_FRACTION * d_ach
            scaled = relative and scale is not None and scale > 0
            eps0 = tol * scale if scaled else tol
            H = _estimate_H(logf, omega1, b, omega, d, eps0, relative and not scaled)
            if not math.isfinite(H) or H > 1e250:
                worse += best is not None
                b *= 0.5
                continue
            if scaled:
                eps = eps0
            else:
                eps = tol * min(1.0, H) if relative and H > 0 else tol
            if H <= 0:
                zeta = 1.0
            else:
                zeta = min(1.0, zeta_from_bound(H, d, 0.5 * eps))
            N, tail = _truncation(logf, omega1, b, omega, zeta, 0.5 * eps)
            if N is not None:
                r = math.exp(-TWO_PI * d / zeta)
                noise = ROUNDOFF * H
                est = H * r / (1.0 - r) + tail + (noise if scaled else 0.0)
                cand = _Design(omega1, b, d, zeta, N, H, est)
                # rounding-limited designs rank behind all others, by their noise
                cost = (0, N) if not scaled or noise <= eps else (1, noise)
                if best is None or cost < best_cost:
                    best, best_cost, worse = cand, cost, 0
                else:
                    worse += 1
        elif best is not None:
            worse += 1
        if best is not None and worse >= 4:
            break
        b *= 0.5
    if best is None:
        raise AccuracyUnreachableError("no admissible sinh contour satisfies the constraints")
    return best


def saddle_height(model: LevyModel, t: float, x_shift: float, lo: float, hi: float) -> float:
    """Minimizer over ``v in (lo, hi)`` of ``-x_shift*v - t*psi0(i v)`` (Chernoff height)."""
    margin = 0.05 * min(hi - lo, 1.0)
    a, c = lo + margin, hi - margin
    a = max(a, -1e4)
    c = min(c, 1e4)
    if not a < c:
        return 0.5 * (lo + hi)

    def g(v):
        val = -x_shift * v - t * model.psi0(np.array([1j * v]))[0].real
        return val if math.isfinite(val) else 1e300

    res = minimize_scalar(g, bounds=(a, c), method="bounded", options={"xatol": 1e-10 * max(1.0, c - a)})
    return float(res.x)


def _fourier_logf(model, t, x_shift, role):
    log2pi = math.log(TWO_PI)
    mu_part = x_shift

    if role == "pdf":
        def logf(xi):
            return 1j * mu_part * xi - t * model.psi0(xi) - log2pi
    else:
        def logf(xi):
            return 1j * mu_part * xi - t * model.psi0(xi) - np.log(-1j * xi) - log2pi
    return logf


def _band_for(model, role, sign):
    lo, hi = model.strip
    if role == "cpdf_upper" or (role == "pdf" and sign > 0):
        return 0.0, hi
    if role == "cpdf_lower" or (role == "pdf" and sign < 0):
        return lo, 0.0
    return lo, hi


def _omega_for(model, sign):
    g = decay_cone(model)
    if sign > 0:
        return 0.5 * g, 0.5 * g
    if sign < 0:
        return -0.5 * g, 0.5 * g
    return 0.0, g


@lru_cache(maxsize=512)
def _select_cached(model, t, sign, role, tol, center_shift):
    omega, d_max = _omega_for(model, sign)
    lo, hi = _band_for(model, role, sign)
    center = saddle_height(model, t, center_shift, lo, hi)
    logf = _fourier_logf(model, t, 0.0 if center_shift == 0 else center_shift, role)
    b_max = 4.0 * integrand_scale(model, t)
    scale = None
    if center_shift != 0:
        # Chernoff-type size of the tail value at the saddle height
        scale = float(np.exp(np.real(logf(np.array([1j * center])))[0] + math.log(TWO_PI)))
    design = design_sinh(logf, omega, d_max, lo, hi, center, b_max, tol, model=model,
                         relative=center_shift != 0, scale=scale)
    if role == "cpdf_upper":
        kind = "Lplus"
    elif role == "cpdf_lower":
        kind = "Lminus"
    else:
        kind = "central"
    return SinhContour(omega1=design.omega1, b=design.b, omega=omega, zeta=design.zeta,
                       N=design.N, kind=kind, d=design.d, est_error=design.est)


def select_contour(model: LevyModel, x_shift: float, role: str, tol: float, t: float = 1.0,
                   tail_shift: Optional[float] = None) -> SinhContour:
    """Choose a sinh contour for the density (``pdf``) or distribution function of ``X_t``.

    Parameters
    ----------
    x_shift : float
        Oscillation coefficient ``-a + t*mu``; only its sign matters unless
        ``tail_shift`` is given.
    role : {'pdf', 'cpdf_upper', 'cpdf_lower'}
        ``cpdf_upper`` keeps every contour of the strip family above the pole
        at the origin, ``cpdf_lower`` below it.
    tail_shift : float, optional
        Design the contour for this oscillation coefficient, moving the
        crossing to the Chernoff height so that tiny tail probabilities are
        computed to relative accuracy.  Valid for coefficients of the same
        sign and larger magnitude only in the absolute sense.
    """
    if role not in ROLES:
        raise PreconditionError(f"role must be one of {ROLES}")
    if not 1e-15 < tol < 1e-2:
        raise PreconditionError("tol must lie in (1e-15, 1e-2)")
    sign = 0 if x_shift == 0 else (1 if x_shift > 0 else -1)
    if role == "cpdf_upper" and sign < 0 or role == "cpdf_lower" and sign > 0:
        raise PreconditionError("contour side does not match the sign of x_shift")
    if role == "cpdf_lower" and sign == 0:
        sign = -1
    shift = 0.0 if tail_shift is None else float(tail_shift)
    if shift and (shift > 0) != (sign > 0):
        raise PreconditionError("tail_shift must have the sign of x_shift")
    return _select_cached(model, float(t), sign, role, float(tol), shift)


def select_bromwich(model: LevyModel, t: float, tol: float, omega_l: float = math.pi / 10,
                    sigma_min: Optional[float] = None, partner_ok: Optional[Callable] = None,
                    check_default_partner: bool = True) -> BromwichContour:
    """Sinh-deformed Bromwich contour for inverting ``e^{qt} G(q) / q`` at time ``t``.

    The contour family keeps ``Re q`` above ``sigma_min`` at the real-axis
    crossing.  ``partner_ok(q_nodes)`` is the joint feasibility scan against
    the inner contours; on failure ``sigma_min`` is doubled a few times before
    a :class:`JointDeformationError` is raised.
    """
    if not t > 0:
        raise PreconditionError("t must be positive")
    if model.finite_variation and model.mu != 0:
        raise JointDeformationError(
            "sinh Bromwich deformation needs order >= 1 or zero drift; use the GWR backend")
    if model.order == 1.0 and model.mu != 0:
        raise JointDeformationError("order 1 with nonzero drift is treated as GWR-only")
    s_min = 0.25 / t if sigma_min is None else sigma_min
    log2pi = math.log(TWO_PI)

    # q = i*xi: e^{qt}/q dq/(2 pi i) == e^{i xi t}/(i xi) dxi/(2 pi)
    def logf(xi):
        return 1j * xi * t - np.log(1j * xi) - log2pi

    if partner_ok is None and check_default_partner:
        from .wiener_hopf import default_joint_check
        partner_ok = default_joint_check(model, omega_l)

    last_err = None
    for _ in range(6):
        def extra(omega1, b, thetas, _s=s_min):
            if partner_ok is None:
                return True
            probe = BromwichContour(sigma=-omega1, b_l=b, omega_l=omega_l, zeta_l=0.25, N_l=80)
            q = probe.nodes()[0]
            return bool(partner_ok(q))

        try:
            design = design_sinh(logf, omega_l, omega_l, -np.inf, -s_min, -1.0 / t, 8.0 / t, tol,
                                 extra_ok=extra)
        except AccuracyUnreachableError as exc:
            last_err = exc
            s_min *= 2.0
            continue
        return BromwichContour(sigma=-design.omega1, b_l=design.b, omega_l=omega_l,
                               zeta_l=design.zeta, N_l=design.N, d=design.d, est_error=design.est)
    raise JointDeformationError(f"Bromwich contour failed the joint feasibility scan ({last_err}); "
                                "use the GWR backend")
