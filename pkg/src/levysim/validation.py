"""Validation suites run by the ``validate`` command.

Each suite returns a list of :class:`Check` records.  Closed forms are used
where the configured family has one (BM, NIG); otherwise the suite falls
back to internal consistency checks.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate
from scipy.stats import norm, norminvgauss

from .extremum import cdf_sup, pdf_sup, sup_values
from .fourier import cdf_X, pdf_X
from .joint import joint_cdf_X_sup, joint_cdf_tau_sup
from .laplace import bromwich_allowed
from .models import LevyModel
from .oracle import grid_cdf, ks_bound, ks_distance
from .sampler import build_quantile_table, model_scale, sample_sup, sample_X, sup_dist, x_dist
from .wiener_hopf import phi_minus, phi_plus

SUITES = ("marginal", "whf", "extremum", "joint", "sampler")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    threshold: float

    def as_dict(self):
        d = asdict(self)
        d["value"] = float(d["value"])
        d["threshold"] = float(d["threshold"])
        return d


def _reflection_cdf(mu, sigma, T, h):
    s = sigma * math.sqrt(T)
    return norm.cdf((h - mu * T) / s) - math.exp(2 * mu * h / sigma ** 2) * norm.cdf((-h - mu * T) / s)


def _bm_sigma(model):
    return dict(model.params)["sigma"]


def marginal(model: LevyModel, T: float, tol: float):
    s = model_scale(model, T)
    xs = T * model.mu + s * np.linspace(-6.0, 6.0, 13)
    pdf = np.array([pdf_X(model, T, x, tol) for x in xs])
    cdf = np.array([cdf_X(model, T, x, tol) for x in xs])
    if model.family == "NIG":
        p = dict(model.params)
        ref = norminvgauss(p["alpha"] * p["delta"] * T, p["beta"] * p["delta"] * T,
                           loc=model.mu * T, scale=p["delta"] * T)
        return [Check("marginal.pdf_vs_closed_form", *_within(pdf, ref.pdf(xs), 1e-9))]
    if model.family == "BM":
        sig = _bm_sigma(model) * math.sqrt(T)
        return [Check("marginal.pdf_vs_closed_form", *_within(pdf, norm.pdf(xs, model.mu * T, sig), 1e-10)),
                Check("marginal.cdf_vs_closed_form", *_within(cdf, norm.cdf(xs, model.mu * T, sig), 1e-10))]
    # cdf increments against the integrated density
    inc = np.array([integrate.quad(lambda y: pdf_X(model, T, y, tol), a, b, epsabs=1e-12)[0]
                    for a, b in zip(xs[:-1], xs[1:])])
    return [Check("marginal.cdf_matches_integrated_pdf", *_within(np.diff(cdf), inc, 1e-8))]


def _within(a, b, thr):
    err = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    return err <= thr, err, thr


def whf(model: LevyModel, T: float, tol: float):
    out = []
    xi = np.linspace(-20.0, 20.0, 50)
    worst = 0.0
    for q in (0.5, 1.0, 5.0, 25.0):
        prod = phi_plus(model, q, xi, tol) * phi_minus(model, q, xi, tol)
        exact = q / (q + model.psi(xi.astype(complex)))
        worst = max(worst, float(np.max(np.abs(prod / exact - 1))))
    out.append(Check("whf.factorization_identity", worst <= 1e-9, worst, 1e-9))
    if model.family == "BM":
        s2 = _bm_sigma(model) ** 2
        mu = model.mu
        worst = 0.0
        for q in (0.5, 1.0, 5.0, 25.0):
            r = math.sqrt(mu * mu + 2 * q * s2)
            bp, bm = (-mu + r) / s2, (mu + r) / s2
            worst = max(worst, float(np.max(np.abs(phi_plus(model, q, xi, tol) - bp / (bp - 1j * xi)))),
                        float(np.max(np.abs(phi_minus(model, q, xi, tol) - bm / (bm + 1j * xi)))))
        out.append(Check("whf.bm_closed_form", worst <= 1e-10, worst, 1e-10))
    return out


def extremum(model: LevyModel, T: float, tol: float):
    s = model_scale(model, T)
    hs = s * np.array([0.1, 0.5, 1.0, 2.0, 3.0])
    F, _ = sup_values(model, T, hs, tol)
    out = [Check("extremum.cdf_sup_monotone", bool(np.all(np.diff(F) >= -tol)),
                 float(-min(np.diff(F).min(), 0.0)), tol)]
    if model.family == "BM":
        ref = np.array([_reflection_cdf(model.mu, _bm_sigma(model), T, h) for h in hs])
        thr = 1e-9 if bromwich_allowed(model) else 1e-6
        out.append(Check("extremum.reflection_closed_form", *_within(F, ref, thr)))
    elif bromwich_allowed(model):
        G, _ = sup_values(model, T, hs, tol, "GWR")
        # float64 GWR is accurate to a few 1e-5 only
        out.append(Check("extremum.gwr_vs_bromwich", *_within(F, G, 1e-4)))
    return out


def joint(model: LevyModel, T: float, tol: float):
    s = model_scale(model, T)
    out = []
    worst = 0.0
    for a in s * np.array([-1.0, 0.0, 0.5]):
        for h in s * np.array([0.5, 1.0]):
            if a <= h:
                v = joint_cdf_X_sup(model, T, a, h, tol)
                bound = min(cdf_X(model, T, a, tol), cdf_sup(model, T, h, tol)) + 3 * tol
                worst = max(worst, v - bound)
                if model.family == "BM" and model.mu == 0:
                    sig = _bm_sigma(model) * math.sqrt(T)
                    ref = norm.cdf(a / sig) - norm.cdf((a - 2 * h) / sig)
                    out.append(Check(f"joint.bm_closed_form[a={a:.3g},h={h:.3g}]", *_within(v, ref, 1e-5)))
    out.append(Check("joint.consistency_chain", worst <= 0, max(worst, 0.0), 0.0))
    h = s
    d = abs(joint_cdf_tau_sup(model, T, T, h, tol) - cdf_sup(model, T, h, tol))
    out.append(Check("joint.first_touch_at_T", d <= 5 * tol, d, 5 * tol))
    return out


def sampler(model: LevyModel, T: float, tol: float, n: int = 20000, seed: int = 0):
    rng = np.random.default_rng(seed)
    xt = build_quantile_table(x_dist(model, T, tol))
    x = sample_X(model, T, xt, rng.random(n))
    lo, hi = x.min(), x.max()
    cdf = grid_cdf(lambda y: x_dist(model, T, tol).central(y)[0], lo, hi, 4001)
    d = ks_distance(x, cdf)
    out = [Check("sampler.ks_x", d < ks_bound(n), d, ks_bound(n))]
    st = build_quantile_table(sup_dist(model, T, tol))
    h = sample_sup(model, T, st, rng.random(n))
    cdf = grid_cdf(lambda y: sup_dist(model, T, tol).central(np.maximum(y, 1e-12))[0],
                   1e-12, h.max(), 4001)
    d = ks_distance(h, cdf)
    out.append(Check("sampler.ks_sup", d < ks_bound(n), d, ks_bound(n)))
    return out


def run_suite(name: str, model: LevyModel, T: float, tol: float):
    fn = {"marginal": marginal, "whf": whf, "extremum": extremum, "joint": joint,
          "sampler": sampler}[name]
    return fn(model, T, tol)
