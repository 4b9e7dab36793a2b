"""Lévy models described by their characteristic exponents.

The characteristic exponent is ``psi(xi) = -1j*mu*xi + psi0(xi)`` with
``E[exp(1j*xi*X_t)] = exp(-t*psi(xi))``.  Each family stores ``psi0``
together with the strip and cone on which it continues analytically, its
order of growth at infinity and a coercivity constant.

Parameterizations
-----------------
BM          ``sigma``; ``psi0 = sigma**2 xi**2 / 2``.
CGMY        ``C, G, M, Y``; ``psi0 = -C Gamma(-Y) [(M - i xi)^Y - M^Y + (G + i xi)^Y - G^Y]``.
            For ``Y < 1`` this is the pure-jump part without drift, so
            ``mu`` is the drift of a finite-variation process.
NIG         ``alpha, beta, delta``; ``psi0 = delta [sqrt(alpha^2 - (beta + i xi)^2) - sqrt(alpha^2 - beta^2)]``.
VG          ``sigma, theta, kappa``; ``psi0 = log(1 - i theta kappa xi + sigma^2 kappa xi^2 / 2) / kappa``.
Merton      ``sigma, lam, m, s``; ``psi0 = sigma^2 xi^2 / 2 - lam (exp(i m xi - s^2 xi^2 / 2) - 1)``.
Meixner     ``a, b, d``; ``psi0 = 2 d [log cosh((a xi - i b) / 2) - log cos(b / 2)]``.
RegularizedStable
            ``alpha, c, lam``; ``psi0 = c [(lam^2 + xi^2)^(alpha/2) - lam^alpha]``,
            a symmetric stable exponent smoothed near the origin.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gamma

from .errors import NumericalDomainError, ParameterDomainError, UnsupportedModelError

INFINITE_STRIP = 1.0e6

SL_FAMILIES = ("BM", "CGMY", "NIG", "VG", "RegularizedStable")
SIGNED_SL_FAMILIES = ("Merton", "Meixner")
FAMILIES = SL_FAMILIES + SIGNED_SL_FAMILIES

_ALIASES = {
    "bm": "BM",
    "brownian": "BM",
    "cgmy": "CGMY",
    "kobol": "CGMY",
    "nig": "NIG",
    "vg": "VG",
    "merton": "Merton",
    "meixner": "Meixner",
    "regularizedstable": "RegularizedStable",
    "stable": "RegularizedStable",
}


@dataclass(frozen=True)
class LevyModel:
    """Characteristic exponent of a one-dimensional Lévy process.

    ``strip`` is the interval of ``Im xi`` where ``psi0`` is analytic and
    ``cone`` the pair of angles of the cone of analyticity around the real
    axis.  ``order`` is the exponent ``nu`` in ``Re psi0 ~ c_inf |xi|^nu``
    (logarithmic growth when ``log_order`` is set).
    """

    family: str
    mu: float
    psi0: Callable = field(repr=False, compare=False)
    strip: tuple
    cone: tuple
    order: float
    type_coeff: float
    log_order: bool = False
    signed_sl: bool = False
    stable_lambda: Optional[float] = None
    params: tuple = ()

    @property
    def finite_variation(self) -> bool:
        return self.log_order or self.order < 1.0

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def psi(self, xi):
        """Full exponent ``-i mu xi + psi0(xi)``."""
        return eval_psi(self, xi)

    def fingerprint(self) -> str:
        """Stable hex digest identifying family and parameters."""
        payload = json.dumps({"family": self.family, "mu": self.mu, "params": list(self.params)},
                             sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def to_config(self) -> dict:
        out = {"family": self.family, "mu": self.mu}
        out.update(self.param_dict)
        return out

    def in_domain(self, xi, margin=0.0):
        """Boolean mask: is ``xi`` inside the declared strip-plus-cone domain.

        ``margin`` shrinks the strip from both sides.
        """
        xi = np.asarray(xi, dtype=complex)
        lo, hi = self.strip
        lo, hi = lo + margin, hi - margin
        u = np.abs(xi.real)
        v = xi.imag
        g_lo, g_hi = self.cone
        with np.errstate(invalid="ignore", over="ignore"):
            top = hi + np.where(u > 0, u * np.tan(min(g_hi, math.pi / 2)), 0.0)
            bot = lo + np.where(u > 0, u * np.tan(max(g_lo, -math.pi / 2)), 0.0)
        top = np.where(np.isnan(top), np.inf, top)
        bot = np.where(np.isnan(bot), -np.inf, bot)
        return (v > bot) & (v < top)


def eval_psi(model: LevyModel, xi):
    """Evaluate ``psi(xi) = -i mu xi + psi0(xi)`` (vectorized)."""
    xi_arr = np.asarray(xi, dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        val = -1j * model.mu * xi_arr + model.psi0(xi_arr)
    if not np.all(np.isfinite(val)):
        raise NumericalDomainError(f"non-finite characteristic exponent for {model.family}")
    if np.ndim(xi) == 0:
        return complex(val)
    return val


def _require(cond, message):
    if not cond:
        raise ParameterDomainError(message)


def _lncosh(z):
    """Branch-continuous log cosh on the strip |Im z| < pi/2."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    pos = z.real > 0
    neg = z.real < 0
    mid = ~(pos | neg)
    out[pos] = z[pos] + np.log1p(np.exp(-2.0 * z[pos])) - math.log(2.0)
    out[neg] = -z[neg] + np.log1p(np.exp(2.0 * z[neg])) - math.log(2.0)
    out[mid] = np.log(np.cos(z[mid].imag) + 0j)
    return out


def _bm(p):
    sigma = float(p.get("sigma", 1.0))
    _require(sigma > 0, "BM requires sigma > 0")
    s2 = sigma * sigma

    def psi0(xi):
        return 0.5 * s2 * xi * xi

    meta = dict(strip=(-INFINITE_STRIP, INFINITE_STRIP), cone=(-math.pi / 2, math.pi / 2),
                order=2.0, type_coeff=0.5 * s2)
    return psi0, meta, {"sigma": sigma}


def _cgmy(p):
    C = float(p.get("C", 1.0))
    G = float(p.get("G", 1.0))
    M = float(p.get("M", 1.0))
    Y = float(p.get("Y", 0.5))
    _require(C > 0, "CGMY requires C > 0")
    _require(G > 0 and M > 0, "CGMY requires G > 0 and M > 0")
    _require(0 < Y < 2 and Y != 1, "CGMY requires Y in (0, 2) excluding 1")
    k = -C * gamma(-Y)
    def power_sum(xi):
        return (M - 1j * xi) ** Y + (G + 1j * xi) ** Y

    const = complex(power_sum(np.zeros(1, dtype=complex))[0])

    def psi0(xi):
        return k * (power_sum(xi) - const)

    meta = dict(strip=(-M, G), cone=(-math.pi / 2, math.pi / 2), order=Y,
                type_coeff=2.0 * k * math.cos(math.pi * Y / 2))
    return psi0, meta, {"C": C, "G": G, "M": M, "Y": Y}


def _nig(p):
    alpha = float(p.get("alpha", 1.0))
    beta = float(p.get("beta", 0.0))
    delta = float(p.get("delta", 1.0))
    _require(alpha > abs(beta), "NIG requires alpha > |beta|")
    _require(delta > 0, "NIG requires delta > 0")

    def root(xi):
        return np.sqrt(alpha - beta - 1j * xi) * np.sqrt(alpha + beta + 1j * xi)

    const = complex(root(np.zeros(1, dtype=complex))[0])

    def psi0(xi):
        return delta * (root(xi) - const)

    meta = dict(strip=(beta - alpha, beta + alpha), cone=(-math.pi / 2, math.pi / 2),
                order=1.0, type_coeff=delta)
    return psi0, meta, {"alpha": alpha, "beta": beta, "delta": delta}


def _vg(p, mu):
    sigma = float(p.get("sigma", 1.0))
    theta = float(p.get("theta", 0.0))
    kappa = float(p.get("kappa", p.get("nu", 1.0)))
    _require(sigma > 0, "VG requires sigma > 0")
    _require(kappa > 0, "VG requires kappa > 0")
    if mu == 0:
        raise UnsupportedModelError("driftless Variance Gamma is not supported")
    disc = math.sqrt(theta * theta * kappa * kappa + 2 * sigma * sigma * kappa)
    v_plus = (theta * kappa + disc) / (sigma * sigma * kappa)
    v_minus = (theta * kappa - disc) / (sigma * sigma * kappa)

    def psi0(xi):
        return (np.log(1 + 1j * xi / v_plus) + np.log(1 + 1j * xi / v_minus)) / kappa

    meta = dict(strip=(v_minus, v_plus), cone=(-math.pi / 2, math.pi / 2), order=0.0,
                type_coeff=2.0 / kappa, log_order=True)
    return psi0, meta, {"sigma": sigma, "theta": theta, "kappa": kappa}


def _merton(p):
    sigma = float(p.get("sigma", 1.0))
    lam = float(p.get("lam", 1.0))
    m = float(p.get("m", 0.0))
    s = float(p.get("s", 0.1))
    _require(sigma > 0, "Merton requires sigma > 0")
    _require(lam >= 0, "Merton requires lam >= 0")
    _require(s > 0, "Merton requires s > 0")

    def psi0(xi):
        return 0.5 * sigma * sigma * xi * xi - lam * np.expm1(1j * m * xi - 0.5 * s * s * xi * xi)

    meta = dict(strip=(-INFINITE_STRIP, INFINITE_STRIP), cone=(-math.pi / 4, math.pi / 4),
                order=2.0, type_coeff=0.5 * sigma * sigma, signed_sl=True)
    return psi0, meta, {"sigma": sigma, "lam": lam, "m": m, "s": s}


def _meixner(p):
    a = float(p.get("a", 1.0))
    b = float(p.get("b", 0.0))
    d = float(p.get("d", 1.0))
    _require(a > 0, "Meixner requires a > 0")
    _require(-math.pi < b < math.pi, "Meixner requires b in (-pi, pi)")
    _require(d > 0, "Meixner requires d > 0")
    const = complex(_lncosh(np.array([-0.5j * b]))[0])

    def psi0(xi):
        return 2 * d * (_lncosh((a * xi - 1j * b) / 2) - const)

    meta = dict(strip=((b - math.pi) / a, (b + math.pi) / a), cone=(-math.pi / 4, math.pi / 4),
                order=1.0, type_coeff=a * d, signed_sl=True)
    return psi0, meta, {"a": a, "b": b, "d": d}


def _regstable(p):
    alpha = float(p.get("alpha", 1.5))
    c = float(p.get("c", 1.0))
    lam = float(p.get("lam", 1e-8))
    _require(0 < alpha < 2, "RegularizedStable requires alpha in (0, 2)")
    _require(c > 0, "RegularizedStable requires c > 0")
    _require(lam > 0, "RegularizedStable requires lam > 0")
    h = alpha / 2

    def power(xi):
        return (lam + 1j * xi) ** h * (lam - 1j * xi) ** h

    const = complex(power(np.zeros(1, dtype=complex))[0]).real

    def psi0(xi):
        return c * (power(xi) - const)

    meta = dict(strip=(-lam, lam), cone=(-math.pi / 2, math.pi / 2), order=alpha,
                type_coeff=c, stable_lambda=lam)
    return psi0, meta, {"alpha": alpha, "c": c, "lam": lam}


def make_model(family: str, params: Optional[dict] = None, **kwargs) -> LevyModel:
    """Build a :class:`LevyModel` for one of the supported families.

    Parameters
    ----------
    family : str
        One of ``BM, CGMY (KoBoL), NIG, VG, Merton, Meixner,
        RegularizedStable`` (case-insensitive).
    params : dict, optional
        Family parameters plus the drift ``mu`` (default 0).

    Raises
    ------
    ParameterDomainError
        A parameter violates its admissible range.
    UnsupportedModelError
        Unknown family, or driftless VG.
    """
    p = dict(params or {})
    p.update(kwargs)
    name = _ALIASES.get(str(family).lower().replace("_", "").replace("-", ""))
    if name is None:
        raise UnsupportedModelError(f"unknown family {family!r}; expected one of {FAMILIES}")
    mu = float(p.pop("mu", 0.0))
    if not math.isfinite(mu):
        raise ParameterDomainError("drift mu must be finite")
    if name == "BM":
        psi0, meta, used = _bm(p)
    elif name == "CGMY":
        psi0, meta, used = _cgmy(p)
    elif name == "NIG":
        psi0, meta, used = _nig(p)
    elif name == "VG":
        psi0, meta, used = _vg(p, mu)
    elif name == "Merton":
        psi0, meta, used = _merton(p)
    elif name == "Meixner":
        psi0, meta, used = _meixner(p)
    else:
        psi0, meta, used = _regstable(p)
    model = LevyModel(family=name, mu=mu, psi0=psi0, params=tuple(sorted(used.items())), **meta)
    _check_invariants(model)
    return model


def _check_invariants(model: LevyModel):
    if model.psi0(np.zeros(1, dtype=complex))[0] != 0:
        raise NumericalDomainError("psi0(0) must vanish exactly")
    xs = np.array([0.5, 1.0, 3.0, 10.0, 1e3, 1e4])
    vals = model.psi0(xs.astype(complex))
    mirror = model.psi0(-xs.astype(complex))
    scale = np.maximum(1.0, np.abs(vals))
    if np.any(np.abs(mirror - np.conj(vals)) > 1e-10 * scale):
        raise NumericalDomainError("psi0 is not Hermitian on the real line")
    if np.any(vals.real < -1e-12 * scale):
        raise NumericalDomainError("Re psi0 must be nonnegative on the real line")
    big = xs[xs >= 1e3]
    growth = np.log(big) if model.log_order else big ** model.order
    if np.any(model.psi0(big.astype(complex)).real < 0.5 * model.type_coeff * growth):
        raise NumericalDomainError("coercivity check failed")
    expected = math.pi / 4 if model.signed_sl else math.pi / 2
    if abs(model.cone[1] - expected) > 1e-15 or abs(model.cone[0] + expected) > 1e-15:
        raise NumericalDomainError("cone does not match the family default")


def model_from_config(cfg: dict) -> LevyModel:
    """Build a model from a flat mapping with a ``family`` key."""
    cfg = dict(cfg)
    family = cfg.pop("family", None)
    if family is None:
        raise ParameterDomainError("model config needs a 'family' key")
    params = {}
    for key, value in cfg.items():
        try:
            params[key] = float(value)
        except (TypeError, ValueError):
            raise ParameterDomainError(f"model parameter {key!r} is not a number: {value!r}")
    return make_model(family, params)


def decay_cone(model: LevyModel) -> float:
    """Largest angle ``theta`` for which ``Re psi0`` stays coercive on rays ``arg xi = theta``."""
    g = min(model.cone[1], -model.cone[0])
    if model.log_order:
        return g
    return min(g, math.pi / (2 * max(model.order, 1.0)))


def integrand_scale(model: LevyModel, t: float) -> float:
    """Real ``s > 0`` with ``t * Re psi0(s) = 1``; the decay scale of ``exp(-t psi0)``."""
    f = lambda s: t * model.psi0(np.array([s], dtype=complex))[0].real - 1.0
    lo, hi = 1e-12, 1.0
    while f(hi) < 0 and hi < 1e12:
        hi *= 4.0
    while f(lo) > 0 and lo > 1e-300:
        lo *= 1e-4
    if f(hi) < 0:
        return hi
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-6:
            break
    return math.sqrt(lo * hi)
