"""Acceptance criteria 1-10.

Each test records one pass/fail line (printed in the terminal summary) and
then asserts the criterion at its stated tolerance.  Criteria that are not
met fail; they are not marked as expected failures.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.stats import norm, norminvgauss

from levysim import contours, fourier
from levysim.contours import select_contour
from levysim.extremum import cdf_sup, inf_values, pdf_sup, sup_values
from levysim.fourier import cdf_pdf_values, cdf_X, pdf_X
from levysim.joint import dh_and_density_pairs, joint_cdf_tau_sup, joint_cdf_X_sup, tau_cdf
from levysim.models import make_model
from levysim.oracle import grid_cdf, ks_bound, ks_distance, simulate_skeleton
from levysim.sampler import (build_conditional_table, build_quantile_table, build_tau_table, drawdown_dist,
                             sample_drawdown, sample_sup, sample_triplet, sample_X, sup_dist, x_dist)
from levysim.wiener_hopf import atom_mass, phi_minus, phi_plus

N_KS = 100_000
SKELETON_BIAS_C = 0.5826
QS = (0.5, 1.0, 5.0, 25.0)


def record(log, k, ok, detail):
    log[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def reflection_cdf(mu, T, h):
    s = math.sqrt(T)
    return norm.cdf((h - mu * T) / s) - math.exp(2 * mu * h) * norm.cdf((-h - mu * T) / s)


def arcsine_cdf(t):
    return 2 / np.pi * np.arcsin(np.sqrt(np.clip(t, 0.0, 1.0)))


def arcsine_var(t):
    return np.arcsin(np.sqrt(np.clip(t, 0.0, 1.0)))


@pytest.fixture(scope="module")
def bm():
    return make_model("BM", sigma=1.0)


@pytest.fixture(scope="module")
def nig():
    return make_model("NIG", alpha=10.0, beta=1.0, delta=1.0)


# ---------------------------------------------------------------------------
# 1. marginal accuracy

def _flat_quadrature_cdf(xs, alpha, beta, delta, T, N=10 ** 7, L=80.0):
    """Gil-Pelaez integral on ``N`` midpoint nodes of ``[0, L]``."""
    g = math.sqrt(alpha * alpha - beta * beta)
    h = L / N
    acc = np.zeros(len(xs))
    for s in range(0, N, 10 ** 6):
        xi = (np.arange(s, min(s + 10 ** 6, N)) + 0.5) * h
        phi = np.exp(-T * delta * (np.sqrt(alpha * alpha - (beta + 1j * xi) ** 2) - g))
        for i, x in enumerate(xs):
            acc[i] += np.sum((np.exp(-1j * xi * x) * phi).imag / xi) * h
    return 0.5 - acc / math.pi


def test_criterion_1_marginal_accuracy(criterion_log, nig):
    alpha, beta, delta, T = 10.0, 1.0, 1.0, 1.0
    g = math.sqrt(alpha * alpha - beta * beta)
    mean, sd = delta * beta / g * T, math.sqrt(delta * alpha * alpha / g ** 3 * T)
    xs = mean + sd * np.linspace(-8.0, 8.0, 20)
    pdf_ref = norminvgauss(alpha * delta * T, beta * delta * T, scale=delta * T).pdf(xs)
    cdf_ref = _flat_quadrature_cdf(xs, alpha, beta, delta, T)
    # cold start: contour design is part of the timed work
    contours._select_cached.cache_clear()
    fourier._prepared.cache_clear()
    t0 = time.perf_counter()
    pdf = np.array([pdf_X(nig, T, x) for x in xs])
    cdf = np.array([cdf_X(nig, T, x) for x in xs])
    per_point = (time.perf_counter() - t0) / (2 * len(xs))
    e_pdf, e_cdf = np.max(np.abs(pdf - pdf_ref)), np.max(np.abs(cdf - cdf_ref))
    ok = e_pdf <= 1e-10 and e_cdf <= 1e-10 and per_point < 5e-3
    record(criterion_log, 1, ok, f"NIG pdf err {e_pdf:.1e}, cdf err {e_cdf:.1e} (tol 1e-10); "
                                 f"{per_point * 1e3:.2f} ms/point (limit 5 ms)")
    assert ok


# ---------------------------------------------------------------------------
# 2. error decay under halving of the grid step

def test_criterion_2_error_decay(criterion_log, bm):
    A = np.linspace(-3.0, 3.0, 25)
    designs = [(a, select_contour(bm, -a, "cpdf_upper" if a <= 0 else "cpdf_lower", 1e-12)) for a in A]

    def observed(zeta):
        # grid maximum; pointwise errors oscillate in sign with zeta
        worst = 0.0
        for a, c in designs:
            cc = c.with_grid(zeta, math.ceil(c.zeta * c.N / zeta))
            worst = max(worst, abs(cdf_X(bm, 1.0, a, contour=cc, clamp=False) - norm.cdf(a)))
        return worst

    pairs = []
    for k in range(40):
        zeta = 0.6 * 2 ** (-k / 8)
        e = observed(zeta)
        if 1e-6 <= e <= 1e-3:
            pairs.append((zeta, e, observed(zeta / 2)))
    decades = [math.log10(e2 / (e * e)) for _, e, e2 in pairs]
    ok = bool(pairs) and all(abs(d) <= 1.0 for d in decades)
    record(criterion_log, 2, ok, f"{len(pairs)} step pairs; log10(err(zeta/2) / err(zeta)^2) in "
                                 f"[{min(decades):+.2f}, {max(decades):+.2f}] (need within +-1)")
    assert ok


# ---------------------------------------------------------------------------
# 3. Wiener-Hopf identity

def test_criterion_3_wiener_hopf(criterion_log, bm, nig):
    xi = np.linspace(-20.0, 20.0, 50)
    cgmy = make_model("CGMY", C=1.0, G=5.0, M=5.0, Y=1.5)
    worst = {}
    for name, m in (("BM", bm), ("NIG", nig), ("CGMY", cgmy)):
        w = 0.0
        for q in QS:
            prod = phi_plus(m, q, xi) * phi_minus(m, q, xi)
            w = max(w, float(np.max(np.abs(prod * (q + m.psi(xi.astype(complex))) / q - 1))))
        worst[name] = w
    closed = 0.0
    for q in QS:
        beta = math.sqrt(2 * q)
        closed = max(closed, float(np.max(np.abs(phi_plus(bm, q, xi) - beta / (beta - 1j * xi)))),
                     float(np.max(np.abs(phi_minus(bm, q, xi) - beta / (beta + 1j * xi)))))
    ok = max(worst.values()) <= 1e-9 and closed <= 1e-10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    record(criterion_log, 3, ok, f"identity rel err {detail} (tol 1e-9); BM factors {closed:.1e} (tol 1e-10)")
    assert ok


# ---------------------------------------------------------------------------
# 4. supremum accuracy

def test_criterion_4_supremum(criterion_log):
    pairs = [(T, h) for T in (0.5, 1.0, 2.0) for h in (0.1, 0.5, 1.0, 2.0, 3.0)]
    errs = {"GWR": 0.0, "SinhBromwich": 0.0}
    slowest = 0.0
    for mu in (0.0, 1.0, -1.0):
        m = make_model("BM", sigma=1.0, mu=mu)
        for backend in errs:
            for T, h in pairs:
                t0 = time.perf_counter()
                v = cdf_sup(m, T, h, backend=backend)
                slowest = max(slowest, time.perf_counter() - t0)
                errs[backend] = max(errs[backend], abs(v - reflection_cdf(mu, T, h)))
    ok = errs["GWR"] <= 1e-6 and errs["SinhBromwich"] <= 1e-9 and slowest < 1.0
    record(criterion_log, 4, ok, f"GWR err {errs['GWR']:.1e} (tol 1e-6), SinhBromwich err "
                                 f"{errs['SinhBromwich']:.1e} (tol 1e-9); slowest point {slowest:.2f} s")
    assert ok


# ---------------------------------------------------------------------------
# 5. atom decomposition

def test_criterion_5_atom(criterion_log):
    fv = make_model("CGMY", C=0.5, G=3.0, M=4.0, Y=0.5, mu=0.2)
    diffs = [abs(atom_mass(fv, q, "minus") - complex(phi_minus(fv, q, -1e6j)).real) for q in (1.0, 5.0, 25.0)]
    ok = max(diffs) <= 1e-4
    record(criterion_log, 5, ok, "|a-_q - phi-_q(-1e6 i)| = " + ", ".join(f"{d:.1e}" for d in diffs)
           + " (tol 1e-4)")
    assert ok


# ---------------------------------------------------------------------------
# 6. joint law

def test_criterion_6_joint(criterion_log, bm, nig):
    worst = 0.0
    for h in (0.5, 0.75, 1.0, 1.5, 2.0):
        for a in (-1.5, -1.0, -0.5, 0.0, 0.5):
            worst = max(worst, abs(joint_cdf_X_sup(bm, 1.0, a, h) - (norm.cdf(a) - norm.cdf(a - 2 * h))))
    # integrate the joint density over x < h; graded towards the diagonal
    y, w = np.polynomial.legendre.leggauss(32)
    rel = []
    for h in (0.1, 0.5, 1.0):
        edges = h - np.concatenate([[0.0], np.geomspace(1e-10, 60.0, 110)])[::-1]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            x = 0.5 * (hi - lo) * y + 0.5 * (hi + lo)
            _, f = dh_and_density_pairs(nig, 1.0, x, np.full_like(x, h))
            total += 0.5 * (hi - lo) * np.dot(w, f)
        rel.append(abs(total / pdf_sup(nig, 1.0, h) - 1))
    ok = worst <= 1e-5 and max(rel) <= 1e-4
    record(criterion_log, 6, ok, f"BM 5x5 err {worst:.1e} (tol 1e-5); NIG integrated density rel err "
                                 f"{max(rel):.1e} (tol 1e-4)")
    assert ok


# ---------------------------------------------------------------------------
# 7. first-touch consistency

def test_criterion_7_first_touch(criterion_log, bm, nig):
    tol = 1e-12
    worst_T, monotone = 0.0, True
    for m in (bm, nig):
        hs = np.linspace(0.1, 2.0, 10)
        for h in hs:
            worst_T = max(worst_T, abs(joint_cdf_tau_sup(m, 1.0, 1.0, h, tol) - cdf_sup(m, 1.0, h, tol)))
        ts = np.linspace(0.05, 1.0, 20)
        for h in (0.25, 1.0):
            vals = np.array([joint_cdf_tau_sup(m, 1.0, t, h, tol) for t in ts])
            monotone &= bool(np.all(np.diff(vals) >= -5 * tol))
        mt = np.array([tau_cdf(m, 1.0, t, tol) for t in ts])
        monotone &= bool(np.all(np.diff(mt) >= -5 * tol))
    ok = worst_T <= 5 * tol and monotone
    record(criterion_log, 7, ok, f"|F(t=T,h) - cdf_sup| max {worst_T:.1e} (tol 5e-12); "
                                 f"monotone on 20-point t grids: {monotone}")
    assert ok


# ---------------------------------------------------------------------------
# 8. sampler fidelity

@pytest.fixture(scope="module")
def bm_tables(bm):
    sup_table = build_quantile_table(sup_dist(bm, 1.0))
    cond = build_conditional_table(bm, 1.0, sup_table)
    tau = build_tau_table(bm, 1.0, sup_table, h_grid=cond.h_grid)
    return sup_table, cond, tau


def test_criterion_8_sampler(criterion_log, bm, nig, bm_tables):
    t_start = time.perf_counter()
    bound = ks_bound(N_KS)
    ks = {}
    rng = np.random.default_rng(20261019)
    cgmy = make_model("CGMY", C=1.0, G=5.0, M=5.0, Y=1.5)
    for name, m in (("X NIG", nig), ("X CGMY", cgmy)):
        x = sample_X(m, 1.0, build_quantile_table(x_dist(m, 1.0)), rng.random(N_KS))
        ks[name] = ks_distance(x, lambda y, m=m: cdf_pdf_values(m, 1.0, y)[0])
    sup_table, cond, tau = bm_tables
    h = sample_sup(bm, 1.0, sup_table, rng.random(N_KS))
    ks["sup BM"] = ks_distance(h, lambda v: 2 * norm.cdf(v) - 1)
    sym = make_model("NIG", alpha=10.0, beta=0.0, delta=1.0)
    dd = sample_drawdown(sym, 1.0, build_quantile_table(drawdown_dist(sym, 1.0)), rng.random(N_KS))
    # P[drawdown <= a] = P[inf >= -a] = cdf_inf(-a)
    ks["drawdown NIG"] = ks_distance(dd, grid_cdf(lambda a: 1.0 - inf_values(sym, 1.0, -np.maximum(a, 1e-9))[0],
                                                  1e-9, dd.max(), 4001))
    tr = sample_triplet(bm, 1.0, cond, tau, rng.random((N_KS, 3)))
    ks["tau BM"] = ks_distance(tr[:, 2], arcsine_cdf)
    ks["triplet x BM"] = ks_distance(tr[:, 0], lambda y: cdf_pdf_values(bm, 1.0, y)[0])
    elapsed = time.perf_counter() - t_start
    ok = all(d < bound for d in ks.values()) and elapsed < 15 * 60
    detail = ", ".join(f"{k} {v:.4f}" for k, v in ks.items())
    record(criterion_log, 8, ok, f"KS {detail} (bound {bound:.4f}); {elapsed:.0f} s")
    assert ok


# ---------------------------------------------------------------------------
# 9. skeleton Monte Carlo cross-validation

def test_criterion_9_oracle(criterion_log, bm, nig):
    n_steps, n_paths = 1024, N_KS
    bound = ks_bound(n_paths)
    allowance = bound + 1.5 * SKELETON_BIAS_C / math.sqrt(n_steps)
    report, ok = [], True
    for name, m, seed in (("BM", bm, 91), ("NIG", nig, 92)):
        s = simulate_skeleton(m, 1.0, n_steps, n_paths, seed)
        d_x = ks_distance(s.x, lambda y, m=m: cdf_pdf_values(m, 1.0, y)[0])
        F_h = grid_cdf(lambda v, m=m: sup_values(m, 1.0, np.maximum(v, 1e-12))[0], 1e-12, s.h.max(), 2001)
        d_h = ks_distance(s.h, F_h)
        F_t = grid_cdf(lambda ts, m=m: np.array([tau_cdf(m, 1.0, t) if t > 0 else 0.0 for t in ts]),
                       0.0, 1.0, 25, transform=arcsine_var)
        d_t = ks_distance(s.t, F_t)
        ok &= d_x < bound and d_h < allowance and d_t < allowance
        report.append(f"{name} x {d_x:.4f} h {d_h:.4f} t {d_t:.4f}")
    record(criterion_log, 9, ok, "; ".join(report) + f" (x bound {bound:.4f}, h/t allowance {allowance:.4f})")
    assert ok


# ---------------------------------------------------------------------------
# 10. determinism

CLI_INI = """
[model]
family = NIG
alpha = 10
beta = 1
delta = 1

[run]
T = 1
seed = 12345
n = 2000

[grid]
h = 0.1, 2, 5
"""


def _run_cli(args):
    res = subprocess.run([sys.executable, "-m", "levysim.cli"] + args, capture_output=True, check=False)
    assert res.returncode == 0, res.stderr.decode()


def test_criterion_10_determinism(criterion_log, tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text(CLI_INI)
    same = {}
    for cmd, target in (("sample", "x"), ("sample", "pair_x_sup"), ("tabulate", "cdf_sup")):
        outs = []
        for run in (1, 2):
            out = tmp_path / f"{target}_{run}.csv"
            _run_cli([cmd, "--config", str(ini), "--target", target, "--out", str(out)])
            outs.append(out.read_bytes())
        same[f"{cmd} {target}"] = outs[0] == outs[1] and len(outs[0]) > 0
    bm = make_model("BM", sigma=1.0)
    for run in (1, 2):
        simulate_skeleton(bm, 1.0, 64, 3000, seed=8).to_csv(tmp_path / f"skel_{run}.csv")
    same["skeleton"] = (tmp_path / "skel_1.csv").read_bytes() == (tmp_path / "skel_2.csv").read_bytes()
    ok = all(same.values())
    record(criterion_log, 10, ok, "byte-identical: " + ", ".join(f"{k} {v}" for k, v in same.items()))
    assert ok
