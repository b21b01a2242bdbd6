"""Size and power experiments: configuration, orchestration and table export.

Configuration files are INI style::

    [experiment]
    models = MA1, AR3
    innovation = gaussian
    n = 50, 100, 200
    alpha = 0.01, 0.05, 0.10
    c = 0.5, 1, 1.5
    T = 200
    B = 199
    seed = 20240601
    tests = phi_n, phi_n_star
    kernel = bartlett-priestley

Every replication owns child seeds derived from ``(seed, model, n, rep)``,
so results do not depend on the worker count or on the order of the
model list.
"""
from __future__ import annotations

import configparser
import csv
import io
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .errors import BandwidthWarning, InputError, NegativeVarianceWarning, SpectestError
from .kernels import cross_validate_bandwidth, get_kernel
from .models import PRESET_NAMES, preset, simulate
from .randomization import randomization_sample
from .series import demean, periodogram
from .statistic import TestKind, normal_quantile, standardize

__all__ = [
    "TESTS",
    "ExperimentConfig",
    "Cell",
    "SizePowerTable",
    "run_experiment",
    "export",
    "read_table_csv",
    "format_rate",
]

TESTS = {
    "phi_n": TestKind.ASYMPTOTIC,
    "phi_n_star": TestKind.UNCENTERED,
    "phi_cent_star": TestKind.CENTERED,
    "phi_stud_star": TestKind.STUDENTIZED,
}

FULL_T, FULL_B = 400, 300


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.replace(";", ",").split(",") if x.strip())


def _names(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.replace(";", ",").split(",") if x.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    models: tuple[str, ...] = ("MA1",)
    innovation: str = "gaussian"
    sample_sizes: tuple[int, ...] = (100,)
    alphas: tuple[float, ...] = (0.05,)
    multipliers: tuple[float, ...] = (1.0,)
    T: int = 200
    B: int = 199
    seed: int = 0
    tests: tuple[str, ...] = ("phi_n", "phi_n_star")
    kernel: str = "bartlett-priestley"
    max_excluded: float = 0.01

    def __post_init__(self):
        for name in ("models", "sample_sizes", "alphas", "multipliers", "tests"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for m in self.models:
            preset(m, self.innovation)  # validates name and innovation
        if not self.models or not self.sample_sizes or not self.alphas or not self.multipliers or not self.tests:
            raise InputError("models, sample sizes, alphas, multipliers and tests must be non-empty")
        if self.T < 50:
            raise InputError(f"T must be at least 50, got {self.T}")
        if self.B < 19:
            raise InputError(f"B must be at least 19, got {self.B}")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise InputError(f"alphas must lie in (0, 1), got {self.alphas}")
        if any(c <= 0 for c in self.multipliers):
            raise InputError(f"bandwidth multipliers must be positive, got {self.multipliers}")
        if any(int(n) != n or n < 4 for n in self.sample_sizes):
            raise InputError(f"sample sizes must be integers >= 4, got {self.sample_sizes}")
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        unknown = set(self.tests) - set(TESTS)
        if unknown:
            raise InputError(f"unknown tests {sorted(unknown)}; choose from {sorted(TESTS)}")
        get_kernel(self.kernel)

    def paper_scale(self) -> "ExperimentConfig":
        return replace(self, T=FULL_T, B=FULL_B)

    @classmethod
    def from_ini(cls, path, env: dict | None = None) -> "ExperimentConfig":
        """Read an ``[experiment]`` section; ``SPECTEST_SEED`` in ``env`` overrides the seed."""
        env = os.environ if env is None else env
        cp = configparser.ConfigParser()
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise InputError(f"{path}: {exc}") from exc
        if not cp.has_section("experiment"):
            raise InputError(f"{path}: missing [experiment] section")
        s = cp["experiment"]
        kw = {}
        try:
            if "models" in s:
                kw["models"] = _names(s["models"])
            if "innovation" in s:
                kw["innovation"] = s["innovation"].strip()
            if "n" in s:
                kw["sample_sizes"] = tuple(int(x) for x in _floats(s["n"]))
            if "alpha" in s:
                kw["alphas"] = _floats(s["alpha"])
            if "c" in s:
                kw["multipliers"] = _floats(s["c"])
            for key in ("T", "B", "seed"):
                if key in s:
                    kw[key] = s.getint(key)
            if "tests" in s:
                kw["tests"] = _names(s["tests"])
            if "kernel" in s:
                kw["kernel"] = s["kernel"].strip()
        except ValueError as exc:
            raise InputError(f"{path}: {exc}") from exc
        if env.get("SPECTEST_SEED"):
            kw["seed"] = int(env["SPECTEST_SEED"])
        return cls(**kw)


@dataclass(frozen=True)
class Cell:
    model: str
    n: int
    alpha: float
    c: float
    test: str
    rejections: int
    T: int

    @property
    def rate(self) -> float:
        return 100.0 * self.rejections / self.T

    @property
    def se(self) -> float:
        """Monte Carlo standard error in percentage points."""
        r = self.rejections / self.T
        return 100.0 * math.sqrt(r * (1.0 - r) / self.T)

    @property
    def key(self) -> tuple:
        return (self.model, self.n, self.alpha, self.c, self.test)


@dataclass(frozen=True)
class SizePowerTable:
    cells: tuple[Cell, ...]
    seed: int
    T: int
    B: int
    wall_time: float = field(default=0.0, compare=False)
    excluded: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(sorted(self.cells, key=lambda c: c.key)))

    def __len__(self) -> int:
        return len(self.cells)

    def get(self, model: str, n: int, alpha: float, c: float, test: str) -> Cell:
        for cell in self.cells:
            if cell.key == (model, n, alpha, c, test):
                return cell
        raise KeyError((model, n, alpha, c, test))

    def rate(self, *key) -> float:
        return self.get(*key).rate


def _seq(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))


def _replication(config: ExperimentConfig, kernel, model_id: int, spec, n: int, rep: int) -> dict:
    """Decisions of one replication keyed by ``(alpha, c, test)``."""
    panel = demean(simulate(spec, n, _seq(config.seed, model_id, n, rep, 0)))
    bw = cross_validate_bandwidth(panel, kernel)
    pfield = periodogram(panel)
    rand_tests = [t for t in config.tests if TESTS[t] is not TestKind.ASYMPTOTIC]
    out = {}
    for ci, c in enumerate(config.multipliers):
        h = bw.scaled(c).h
        s = randomization_sample(
            pfield, kernel, h, panel.p, panel.q,
            config.B if rand_tests else 1,
            _seq(config.seed, model_id, n, rep, 1, ci),
        )
        for alpha in config.alphas:
            for t in config.tests:
                kind = TESTS[t]
                if kind is TestKind.ASYMPTOTIC:
                    z = standardize(s.t_n, s.centering.mu_hat, s.centering.tau_hat_sq, h)
                    out[(alpha, c, t)] = bool(z > normal_quantile(1.0 - alpha))
                else:
                    out[(alpha, c, t)] = bool(s.decide(kind, alpha)[1])
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> SizePowerTable:
    """Simulate, test and aggregate rejection rates for every configured cell.

    A replication that raises a :class:`SpectestError` (or a numerical
    failure) is excluded; more than ``max_excluded`` of ``T`` excluded
    replications for any ``(model, n)`` aborts the run.
    """
    if workers < 1:
        raise InputError(f"workers must be positive, got {workers}")
    kernel = get_kernel(config.kernel)
    start = time.perf_counter()
    cells, excluded = [], {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BandwidthWarning)
        warnings.simplefilter("ignore", NegativeVarianceWarning)
        for model in config.models:
            spec = preset(model, config.innovation)
            model_id = PRESET_NAMES.index(spec.name)
            for n in config.sample_sizes:
                def job(rep, spec=spec, n=n, model_id=model_id):
                    try:
                        return _replication(config, kernel, model_id, spec, n, rep)
                    except (SpectestError, ArithmeticError, np.linalg.LinAlgError):
                        return None

                if workers > 1:
                    with ThreadPoolExecutor(max_workers=workers) as ex:
                        results = list(ex.map(job, range(config.T)))
                else:
                    results = [job(rep) for rep in range(config.T)]
                ok = [r for r in results if r is not None]
                bad = config.T - len(ok)
                excluded[(spec.name, n)] = bad
                if bad > config.max_excluded * config.T:
                    raise SpectestError(f"{spec.name}, n={n}: {bad} of {config.T} replications failed")
                for alpha in config.alphas:
                    for c in config.multipliers:
                        for t in config.tests:
                            rej = sum(r[(alpha, c, t)] for r in ok)
                            cells.append(Cell(spec.name, n, alpha, c, t, rej, len(ok)))
    return SizePowerTable(tuple(cells), config.seed, config.T, config.B,
                          time.perf_counter() - start, excluded)


# --------------------------------------------------------------------------
# export


def format_rate(rate: float) -> str:
    """One decimal, halves rounded up."""
    return str(Decimal(repr(rate)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


CSV_COLUMNS = ("model", "n", "alpha", "c", "test", "rate", "T", "B", "seed", "rejections", "se")


def _csv_text(table: SizePowerTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for cell in table.cells:
        w.writerow([cell.model, cell.n, repr(cell.alpha), repr(cell.c), cell.test, format_rate(cell.rate),
                    cell.T, table.B, table.seed, cell.rejections, f"{cell.se:.2f}"])
    return buf.getvalue()


def _pct(alpha: float) -> str:
    return f"{100 * alpha:g}"


def _text(table: SizePowerTable) -> str:
    tests = sorted({c.test for c in table.cells}, key=list(TESTS).index)
    lines = [f"# seed={table.seed} T={table.T} B={table.B}"]
    for model in sorted({c.model for c in table.cells}):
        ns = sorted({c.n for c in table.cells if c.model == model})
        head = ["alpha", "c"] + [f"{t}@n={n}" for n in ns for t in tests]
        rows = []
        keys = sorted({(c.alpha, c.c) for c in table.cells if c.model == model})
        for alpha, cc in keys:
            row = [_pct(alpha), f"{cc:g}"]
            for n in ns:
                for t in tests:
                    try:
                        row.append(format_rate(table.get(model, n, alpha, cc, t).rate))
                    except KeyError:
                        row.append("-")
            rows.append(row)
        widths = [max(len(r[i]) for r in [head] + rows) for i in range(len(head))]
        lines.append("")
        lines.append(model)
        lines.append("  ".join(h.rjust(w) for h, w in zip(head, widths)))
        lines.extend("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows)
    return "\n".join(lines) + "\n"


def export(table: SizePowerTable, path, format: str = "csv") -> None:
    """Write ``table`` as CSV or as a fixed-width text layout (one block per model)."""
    if format not in ("csv", "text"):
        raise InputError(f"format must be 'csv' or 'text', got {format!r}")
    text = _csv_text(table) if format == "csv" else _text(table)
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def read_table_csv(path) -> SizePowerTable:
    """Parse a CSV written by :func:`export`; rates are rebuilt from the rejection counts."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no rows")
    missing = set(CSV_COLUMNS) - set(rows[0])
    if missing:
        raise InputError(f"{path}: missing columns {sorted(missing)}")
    cells = []
    for i, r in enumerate(rows, start=2):
        try:
            cell = Cell(r["model"], int(r["n"]), float(r["alpha"]), float(r["c"]), r["test"],
                        int(r["rejections"]), int(r["T"]))
        except ValueError as exc:
            raise InputError(f"{path}: line {i}: {exc}") from exc
        if format_rate(cell.rate) != r["rate"]:
            raise InputError(f"{path}: line {i}: rate {r['rate']} does not match {cell.rejections}/{cell.T}")
        cells.append(cell)
    first = rows[0]
    return SizePowerTable(tuple(cells), int(first["seed"]), max(c.T for c in cells), int(first["B"]))
