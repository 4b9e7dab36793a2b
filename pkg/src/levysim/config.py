"""Run configuration: an INI file with ``model``, ``run``, ``table``, ``grid`` and ``contour`` sections.

Example::

    [model]
    family = NIG
    alpha = 10
    beta = 1
    delta = 1
    mu = 0

    [run]
    T = 1.0
    tol = 1e-12
    backend = auto
    seed = 7
    n = 1000

    [table]
    delta = 0.01
    size = 512
    path = nig_x.levq

    [grid]
    x = -3, 3, 101
    h = 0.1, 2, 20
    t = 0.1, 1, 10
    inf = -2, -0.1, 20

Grid keys: ``x`` (terminal values and drawdown levels), ``h`` (supremum
levels), ``inf`` (infimum levels, negative) and ``t`` (times).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import LevySimError
from .models import LevyModel, model_from_config

BACKEND_NAMES = {"auto": "auto", "gwr": "GWR", "bromwich": "SinhBromwich",
                 "sinhbromwich": "SinhBromwich"}
CONTOUR_KEYS = ("omega1", "b", "omega", "zeta", "n")


class ConfigError(LevySimError):
    """Malformed or inconsistent configuration."""


@dataclass(frozen=True)
class RunConfig:
    model: LevyModel
    model_cfg: dict
    T: float = 1.0
    tol: float = 1e-12
    backend: str = "auto"
    seed: int = 0
    n: int = 1000
    threads: int = 1
    scheme: str = "B"
    delta: float = 0.01
    table_size: int = 512
    table_path: Optional[str] = None
    grids: dict = field(default_factory=dict)
    contour: dict = field(default_factory=dict)

    def grid(self, name, default):
        lo, hi, n = self.grids.get(name, default)
        return np.linspace(lo, hi, int(n))

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "backend" in kw:
            kw["backend"] = parse_backend(kw["backend"])
        return replace(self, **kw)


def parse_backend(name: str) -> str:
    key = str(name).strip().lower()
    if key not in BACKEND_NAMES:
        raise ConfigError(f"unknown backend {name!r}; expected auto, gwr or bromwich")
    return BACKEND_NAMES[key]


def _grid_spec(text):
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"grid spec {text!r} must be 'lo, hi, n'")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ConfigError(f"grid spec {text!r} must be 'lo, hi, n'") from None
    if n < 1 or (n > 1 and not hi > lo):
        raise ConfigError(f"grid spec {text!r} needs hi > lo and n >= 1")
    return lo, hi, n


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if not cp.has_section("model"):
        raise ConfigError("config needs a [model] section")
    model_cfg = dict(cp.items("model"))
    try:
        model = model_from_config(model_cfg)
    except LevySimError as exc:
        raise ConfigError(f"invalid model: {exc}") from None
    run = dict(cp.items("run")) if cp.has_section("run") else {}
    table = dict(cp.items("table")) if cp.has_section("table") else {}
    kw = {}
    try:
        for key, conv in (("T", float), ("tol", float), ("seed", int), ("n", int), ("threads", int)):
            if key in run:
                kw[key] = conv(run[key])
        if "backend" in run:
            kw["backend"] = parse_backend(run["backend"])
        if "scheme" in run:
            kw["scheme"] = run["scheme"].strip().upper()
        if "delta" in table:
            kw["delta"] = float(table["delta"])
        if "size" in table:
            kw["table_size"] = int(table["size"])
        if "path" in table:
            kw["table_path"] = table["path"].strip() or None
    except ValueError as exc:
        raise ConfigError(f"bad value in config: {exc}") from None
    grids = {k: _grid_spec(v) for k, v in cp.items("grid")} if cp.has_section("grid") else {}
    contour = {}
    if cp.has_section("contour"):
        for k, v in cp.items("contour"):
            if k.lower() not in CONTOUR_KEYS:
                raise ConfigError(f"unknown contour override {k!r}; expected {CONTOUR_KEYS}")
            try:
                contour[k.lower()] = float(v)
            except ValueError:
                raise ConfigError(f"contour override {k!r} is not a number") from None
        if contour and set(contour) != set(CONTOUR_KEYS):
            raise ConfigError(f"contour overrides need all of {CONTOUR_KEYS}")
    cfg = RunConfig(model=model, model_cfg=model_cfg, grids=grids, contour=contour, **kw)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if not cfg.T > 0:
        raise ConfigError("T must be positive")
    if not 0 < cfg.tol < 1:
        raise ConfigError("tol must be in (0, 1)")
    if cfg.scheme not in ("A", "B"):
        raise ConfigError("scheme must be A or B")
    if not 0 < cfg.delta <= 0.05:
        raise ConfigError("table delta must be in (0, 0.05]")
    if cfg.n < 1 or cfg.threads < 1 or cfg.table_size < 8:
        raise ConfigError("n, threads must be positive and table size at least 8")


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    """Effective configuration in the input format (round-trips through :func:`parse_config`)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["model"] = {k: str(v) for k, v in cfg.model_cfg.items()}
    back = {v: k for k, v in BACKEND_NAMES.items() if k != "sinhbromwich"}
    cp["run"] = {"T": repr(cfg.T), "tol": repr(cfg.tol), "backend": back[cfg.backend],
                 "seed": str(cfg.seed), "n": str(cfg.n), "threads": str(cfg.threads),
                 "scheme": cfg.scheme}
    cp["table"] = {"delta": repr(cfg.delta), "size": str(cfg.table_size)}
    if cfg.table_path:
        cp["table"]["path"] = cfg.table_path
    if cfg.grids:
        cp["grid"] = {k: f"{lo!r}, {hi!r}, {n}" for k, (lo, hi, n) in cfg.grids.items()}
    if cfg.contour:
        cp["contour"] = {k: repr(v) for k, v in cfg.contour.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
