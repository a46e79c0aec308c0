"""Scenario configuration: INI sections [model], [sim], [output].

Keys are fixed:

    [model]  lambda, xi, mu, beta_bar
    [sim]    N, F_N (integer or `infinite`), x1_0, x2_0 (scaled reals),
             horizon, seed, replicas, record (`events` or `grid:<dt>`)
    [output] format (`csv` or `json`), path, precision

Validation errors carry the file name and the line of the offending key.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .model import INFINITE, ModelParams, ScaledParams, in_domain_S, is_infinite


@dataclass
class ScenarioConfig:
    """Resolved scenario: model parameters plus simulation and output plans."""

    params: ModelParams
    n: int
    f_n: object  # int or INFINITE
    x1_0: float
    x2_0: float
    horizon: float
    seed: int
    replicas: int
    record: str  # "events" or "grid"
    grid_dt: float | None
    out_format: str
    out_path: str
    precision: int
    source: str = "<memory>"

    @property
    def scaled(self) -> ScaledParams:
        return ScaledParams(n=self.n, f_n=self.f_n)

    def as_dict(self) -> dict:
        """Resolved key/value view embedded in output provenance blocks."""
        return {
            "model": {
                "lambda": self.params.lam,
                "xi": self.params.xi,
                "mu": self.params.mu,
                "beta_bar": self.params.beta_bar,
            },
            "sim": {
                "N": self.n,
                "F_N": "infinite" if is_infinite(self.f_n) else self.f_n,
                "x1_0": self.x1_0,
                "x2_0": self.x2_0,
                "horizon": self.horizon,
                "seed": self.seed,
                "replicas": self.replicas,
                "record": self.record if self.grid_dt is None else f"grid:{self.grid_dt}",
            },
            "output": {
                "format": self.out_format,
                "path": self.out_path,
                "precision": self.precision,
            },
        }


class _Source:
    """Raw config text plus helpers producing file:line error prefixes."""

    def __init__(self, path: str, text: str):
        self.path = path
        self.lines = text.splitlines()
        self.parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            self.parser.read_string(text, source=path)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc

    def line_of(self, key: str) -> int | None:
        pattern = re.compile(rf"^\s*{re.escape(key)}\s*[=:]")
        for i, line in enumerate(self.lines, start=1):
            if pattern.match(line):
                return i
        return None

    def fail(self, section: str, key: str, message: str):
        line = self.line_of(key)
        where = f"{self.path}:{line}" if line else self.path
        raise ConfigError(f"{where}: [{section}] {key}: {message}")

    def get(self, section: str, key: str, required: bool = True, default=None):
        if not self.parser.has_section(section):
            if required:
                raise ConfigError(f"{self.path}: missing section [{section}]")
            return default
        if not self.parser.has_option(section, key):
            if required:
                raise ConfigError(f"{self.path}: missing key `{key}` in section [{section}]")
            return default
        return self.parser.get(section, key)

    def get_float(self, section: str, key: str, required=True, default=None):
        raw = self.get(section, key, required, None)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            self.fail(section, key, f"expected a number, got {raw!r}")

    def get_int(self, section: str, key: str, required=True, default=None):
        raw = self.get(section, key, required, None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            self.fail(section, key, f"expected an integer, got {raw!r}")


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, source=str(path))


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    src = _Source(source, text)

    lam = src.get_float("model", "lambda")
    xi = src.get_float("model", "xi")
    mu = src.get_float("model", "mu")
    beta_bar = src.get_float("model", "beta_bar")
    try:
        params = ModelParams(lam=lam, xi=xi, mu=mu, beta_bar=beta_bar)
    except Exception as exc:
        raise ConfigError(f"{source}: [model]: {exc}") from exc

    n = src.get_int("sim", "N")
    if n is None or n < 1:
        src.fail("sim", "N", f"expected a positive integer, got {n!r}")
    raw_fn = src.get("sim", "F_N", required=False)
    if raw_fn is None:
        f_n = round(beta_bar * n)
    elif raw_fn.strip().lower() == "infinite":
        f_n = INFINITE
    else:
        try:
            f_n = int(raw_fn)
        except ValueError:
            src.fail("sim", "F_N", f"expected an integer or `infinite`, got {raw_fn!r}")
    if not is_infinite(f_n) and f_n < 2:
        src.fail("sim", "F_N", f"finite capacity must be >= 2, got {f_n}")

    x1_0 = src.get_float("sim", "x1_0")
    x2_0 = src.get_float("sim", "x2_0")
    if not in_domain_S((x1_0, x2_0), beta_bar):
        src.fail(
            "sim",
            "x1_0",
            f"INIT_OUTSIDE_S: ({x1_0}, {x2_0}) violates x1, x2 >= 0, x1 + 2*x2 <= beta_bar",
        )
    horizon = src.get_float("sim", "horizon")
    if horizon is None or horizon <= 0:
        src.fail("sim", "horizon", f"expected a positive number, got {horizon!r}")
    seed = src.get_int("sim", "seed", required=False, default=0)
    replicas = src.get_int("sim", "replicas", required=False, default=1)
    if replicas < 1:
        src.fail("sim", "replicas", f"expected >= 1, got {replicas}")

    record_raw = (src.get("sim", "record", required=False, default="events") or "events").strip()
    grid_dt = None
    if record_raw == "events":
        record = "events"
    elif record_raw.startswith("grid:"):
        record = "grid"
        try:
            grid_dt = float(record_raw.split(":", 1)[1])
        except ValueError:
            src.fail("sim", "record", f"bad grid spacing in {record_raw!r}")
        if grid_dt <= 0:
            src.fail("sim", "record", f"grid spacing must be > 0, got {grid_dt}")
    else:
        src.fail("sim", "record", f"expected `events` or `grid:<dt>`, got {record_raw!r}")

    out_format = (src.get("output", "format", required=False, default="csv") or "csv").lower()
    if out_format not in ("csv", "json"):
        src.fail("output", "format", f"expected `csv` or `json`, got {out_format!r}")
    out_path = src.get("output", "path", required=False, default="out")
    precision = src.get_int("output", "precision", required=False, default=12)
    if precision < 1 or precision > 17:
        src.fail("output", "precision", f"expected 1..17 significant digits, got {precision}")

    return ScenarioConfig(
        params=params,
        n=n,
        f_n=f_n,
        x1_0=x1_0,
        x2_0=x2_0,
        horizon=horizon,
        seed=seed,
        replicas=replicas,
        record=record,
        grid_dt=grid_dt,
        out_format=out_format,
        out_path=out_path,
        precision=precision,
        source=source,
    )
