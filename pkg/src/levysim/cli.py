"""Command-line front end: ``levysim {tabulate,sample,validate}``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical error, 4 table-format mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

TABULATE_TARGETS = ("pdf_x", "cdf_x", "cdf_sup", "pdf_sup", "cdf_inf", "cdf_drawdown", "joint",
                    "conditional", "tau_joint")
SAMPLE_TARGETS = ("x", "sup", "drawdown", "pair_x_sup", "pair_sup_tau", "triplet", "pair_drawdown_tau")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TABLE = 0, 1, 2, 3, 4


def _fmt(v):
    return repr(float(v))


def _write_rows(path, header, rows):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _fixed_contour(cfg):
    from .contours import SinhContour
    c = cfg.contour
    crossing = c["omega1"] + c["b"] * math.sin(c["omega"])
    kind = "Lplus" if crossing > 0 else "Lminus"
    return SinhContour(omega1=c["omega1"], b=c["b"], omega=c["omega"], zeta=c["zeta"], N=int(c["n"]),
                       kind=kind)


def cmd_tabulate(cfg, target, out):
    from .config import ConfigError
    from .contours import select_contour
    from .extremum import cdf_drawdown, cdf_inf, cdf_sup, pdf_sup, plan_error
    from .fourier import cdf_X, pdf_X
    from .joint import conditional_cdf_X_given_sup, joint_cdf_tau_sup, joint_cdf_X_sup, tau_plan

    if target not in TABULATE_TARGETS:
        raise ConfigError(f"unknown target {target!r}; valid targets: {', '.join(TABULATE_TARGETS)}")
    m, T, tol, be = cfg.model, cfg.T, cfg.tol, cfg.backend
    rows = []
    if target in ("pdf_x", "cdf_x"):
        fixed = _fixed_contour(cfg) if cfg.contour else None
        for a in cfg.grid("x", (-3.0, 3.0, 101)):
            x = -a + T * m.mu
            if target == "pdf_x":
                c = fixed or select_contour(m, x, "pdf", tol, T)
                val = pdf_X(m, T, a, tol, contour=c)
            else:
                c = fixed or select_contour(m, x, "cpdf_upper" if x >= 0 else "cpdf_lower", tol, T)
                val = cdf_X(m, T, a, tol, contour=c)
            rows.append((a, val, c.est_error))
        header = ["a", "value", "est_error"]
    elif target in ("cdf_sup", "pdf_sup"):
        err = plan_error(m, T, "plus", tol, be)
        f = cdf_sup if target == "cdf_sup" else pdf_sup
        rows = [(h, f(m, T, h, tol, be), err) for h in cfg.grid("h", (0.1, 3.0, 30))]
        header = ["h", "value", "est_error"]
    elif target == "cdf_inf":
        err = plan_error(m, T, "minus", tol, be)
        rows = [(h, cdf_inf(m, T, h, tol, be), err) for h in cfg.grid("inf", (-3.0, -0.1, 30))]
        header = ["h", "value", "est_error"]
    elif target == "cdf_drawdown":
        err = plan_error(m, T, "minus", tol, be)
        rows = [(a, cdf_drawdown(m, T, a, tol, be), err) for a in cfg.grid("x", (0.1, 3.0, 30))]
        header = ["a", "value", "est_error"]
    elif target in ("joint", "conditional"):
        err = plan_error(m, T, "plus", tol, be) + plan_error(m, T, "minus", tol, be)
        for h in cfg.grid("h", (0.25, 2.0, 8)):
            for a in cfg.grid("x", (-2.0, 2.0, 9)):
                if target == "joint":
                    val = joint_cdf_X_sup(m, T, min(a, h), h, tol, be)
                else:
                    val = 1.0 if a >= h else conditional_cdf_X_given_sup(m, T, a, h, tol, be)
                rows.append((a, h, val, err))
        header = ["a", "h", "value", "est_error"]
    else:
        for t in cfg.grid("t", (0.1 * T, T, 10)):
            err = plan_error(m, T, "plus", tol, be) if t >= T else tau_plan(m, T, float(t), tol, be).est_error
            for h in cfg.grid("h", (0.25, 2.0, 8)):
                rows.append((t, h, joint_cdf_tau_sup(m, T, float(t), h, tol, be), err))
        header = ["t", "h", "value", "est_error"]
    _write_rows(out, header, rows)
    return EXIT_OK


def _one_dim_table(cfg, kind):
    from . import sampler as S
    from .errors import TableFormatError

    path = cfg.table_path
    if path and os.path.exists(path):
        table = S.load_table(path, cfg.model, cfg.tol)
        if table.kind != kind or table.T != cfg.T or table.delta != cfg.delta:
            raise TableFormatError(f"table {path} holds kind={table.kind}, T={table.T}, "
                                   f"delta={table.delta}; run needs kind={kind}, T={cfg.T}, delta={cfg.delta}")
        return table
    dist = {"x": S.x_dist(cfg.model, cfg.T, cfg.tol),
            "sup": S.sup_dist(cfg.model, cfg.T, cfg.tol, cfg.backend),
            "drawdown": S.drawdown_dist(cfg.model, cfg.T, cfg.tol, cfg.backend)}[kind]
    table = S.build_quantile_table(dist, cfg.delta, cfg.table_size)
    if path:
        S.save_table(table, path)
    return table


def cmd_sample(cfg, target, out):
    import numpy as np

    from . import sampler as S
    from .config import ConfigError

    if target not in SAMPLE_TARGETS:
        raise ConfigError(f"unknown target {target!r}; valid targets: {', '.join(SAMPLE_TARGETS)}")
    m, T, n = cfg.model, cfg.T, cfg.n
    rng = np.random.default_rng(cfg.seed)
    k = {"x": 1, "sup": 1, "drawdown": 1, "pair_x_sup": 2, "pair_sup_tau": 2}.get(target, 3)
    u = rng.random((n, k))
    u = np.where(u > 0, u, np.nextafter(0.0, 1.0))
    if target in ("x", "sup", "drawdown"):
        table = _one_dim_table(cfg, target)
        fn = {"x": S.sample_X, "sup": S.sample_sup, "drawdown": S.sample_drawdown}[target]
        _write_rows(out, [target], ([v] for v in fn(m, T, table, u[:, 0])))
        return EXIT_OK
    sup_table = _one_dim_table(cfg, "sup")
    if target == "pair_sup_tau":
        tt = S.build_tau_table(m, T, sup_table, tol=cfg.tol, backend=cfg.backend, delta=cfg.delta)
        _write_rows(out, ["h", "t"], S.sample_pair_sup_tau(m, T, tt, u))
        return EXIT_OK
    ct = S.build_conditional_table(m, T, sup_table, cfg.delta, tol=cfg.tol, backend=cfg.backend)
    if target == "pair_x_sup":
        _write_rows(out, ["x", "h"], S.sample_pair_X_sup(m, T, ct, u, cfg.scheme))
        return EXIT_OK
    tt = S.build_tau_table(m, T, sup_table, h_grid=ct.h_grid, tol=cfg.tol, backend=cfg.backend,
                           delta=cfg.delta)
    if target == "triplet":
        _write_rows(out, ["x", "h", "t"], S.sample_triplet(m, T, ct, tt, u, cfg.scheme))
    else:
        _write_rows(out, ["drawdown", "t"], S.sample_pair_drawdown_tau(m, T, ct, tt, u, cfg.scheme))
    return EXIT_OK


def cmd_validate(cfg, suite, out):
    from .config import ConfigError
    from .validation import SUITES, run_suite

    if suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}; valid suites: {', '.join(SUITES)}")
    checks = run_suite(suite, cfg.model, cfg.T, cfg.tol)
    report = {"suite": suite, "model": cfg.model.family, "passed": all(c.passed for c in checks),
              "checks": [c.as_dict() for c in checks]}
    text = json.dumps(report, indent=2, sort_keys=True)
    if out in (None, "-"):
        print(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    for c in checks:
        if not c.passed:
            print(f"FAIL {c.name}: {c.value:.3e} > {c.threshold:.3e}", file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="levysim", description="Levy process distributions and samplers")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("tabulate", "tabulate a distribution on a grid"),
                           ("sample", "draw samples by quantile inversion"),
                           ("validate", "run a validation suite")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, help="INI configuration file")
        s.add_argument("--target", required=True,
                       help="target (tabulate/sample) or suite name (validate)")
        s.add_argument("--out", default="-", help="output path ('-' for stdout)")
        s.add_argument("--n", type=int, help="number of samples")
        s.add_argument("--seed", type=int, help="seed of the uniform stream")
        s.add_argument("--tol", type=float, help="target accuracy")
        s.add_argument("--threads", type=int, help="upper bound on BLAS threads")
        s.add_argument("--backend", choices=("auto", "gwr", "bromwich"), help="Laplace inversion backend")
        s.add_argument("--scheme", choices=("A", "B"), help="pair sampler scheme")
        s.add_argument("--dump-config", action="store_true", help="print the effective config and exit")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads:
        # only effective before the numerical libraries are first imported
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    from .config import ConfigError, load_config
    from .errors import LevySimError, TableFormatError

    try:
        cfg = load_config(args.config).with_overrides(n=args.n, seed=args.seed, tol=args.tol,
                                                      threads=args.threads, backend=args.backend,
                                                      scheme=args.scheme)
        from .config import dump_config, validate
        validate(cfg)
        if args.dump_config:
            sys.stdout.write(dump_config(cfg))
            return EXIT_OK
        cmd = {"tabulate": cmd_tabulate, "sample": cmd_sample, "validate": cmd_validate}[args.command]
        return cmd(cfg, args.target, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TableFormatError as exc:
        print(f"table error: {exc}", file=sys.stderr)
        return EXIT_TABLE
    except LevySimError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
