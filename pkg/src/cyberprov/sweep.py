"""Premium sweeps over contract variants, with CSV and threshold emission.

The aggregate-loss distributions depend only on the severity, frequency,
and mitigation menu, so they are computed once and shared across every
premium grid point and both contract variants. Each grid point is one
backward-induction solve; rows are always written in premium order by a
single writer regardless of how solves are scheduled.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from typing import Iterable, Optional

import multiprocessing as mp

import numpy as np

from .compound import compound_fft, expected_aggregate_loss
from .config import (
    ExperimentConfig,
    VARIANTS,
    build_contract,
    build_discretization,
    build_frequency,
    build_menu,
    build_severity,
)
from .errors import ConfigError
from .solver import insurer_profit, occupancy_summaries, solve

__all__ = ["SweepRow", "SweepResult", "SweepContext", "premium_grid", "run_sweep", "write_csv"]

# Fixed CSV column order.
CSV_COLUMNS = (
    "base_premium",
    "V0",
    "retention",
    "years_bm_m2",
    "years_bm_m1",
    "years_bm_0",
    "years_bm_1",
    "years_uninsured",
    "mitigation_years",
    "loss_prevented",
    "insurer_profit",
)
_LEVEL_COLUMNS = {-2: "years_bm_m2", -1: "years_bm_m1", 0: "years_bm_0", 1: "years_bm_1"}


@dataclass(frozen=True)
class SweepRow:
    base_premium: float
    V0: float
    retention: float
    years_bm_m2: float
    years_bm_m1: float
    years_bm_0: float
    years_bm_1: float
    years_uninsured: float
    mitigation_years: float
    loss_prevented: float
    insurer_profit: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


@dataclass
class SweepResult:
    variant: str
    rows: list
    regime_changes: list  # [{premium_from, premium_to, before, after}]


def premium_grid(config: ExperimentConfig) -> np.ndarray:
    spec = config.sweep
    lo, hi, step = spec["premium_min"], spec["premium_max"], spec["premium_step"]
    n = int(round((hi - lo) / step)) + 1 if hi > lo else 1
    return np.round(lo + step * np.arange(n), 9)


class SweepContext:
    """Everything premium-independent, shared across grid points."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.severity = build_severity(config)
        self.frequency = build_frequency(config)
        self.menu = build_menu(config, self.severity)
        disc = build_discretization(config)
        self.distributions = {
            d: compound_fft(self.severity, self.frequency, self.menu.gamma(d), disc)
            for d in self.menu.measures
        }
        self.expected_losses = {
            d: expected_aggregate_loss(self.severity, self.frequency, self.menu.gamma(d))
            for d in self.menu.measures
        }
        self.grid_cache: dict = {}

    def solve_row(self, variant: str, premium: float) -> SweepRow:
        contract = build_contract(self.config, self.menu, premium, variant)
        solution = solve(
            contract, self.distributions, self.expected_losses, self.grid_cache
        )
        occ = occupancy_summaries(solution)
        level_years = {col: 0.0 for col in _LEVEL_COLUMNS.values()}
        for level, years in occ.years_by_level.items():
            col = _LEVEL_COLUMNS.get(level)
            if col is not None:
                level_years[col] = years
        row = SweepRow(
            base_premium=premium,
            V0=solution.value,
            retention=occ.retention_rate,
            years_uninsured=occ.years_uninsured,
            mitigation_years=float(occ.mitigation_years[1:].sum()),
            loss_prevented=solution.qoi_total["loss_prevented"],
            insurer_profit=insurer_profit(solution),
            **level_years,
        )
        for value in row.as_tuple():
            if not math.isfinite(value):
                raise ConfigError(
                    f"sweep: non-finite output at premium {premium} ({variant})"
                )
        return row


_WORKER_CTX: Optional[SweepContext] = None


def _worker_init(context: SweepContext) -> None:
    global _WORKER_CTX
    _WORKER_CTX = context


def _worker_solve(task) -> tuple:
    variant, premium = task
    assert _WORKER_CTX is not None
    return variant, premium, _WORKER_CTX.solve_row(variant, premium)


def _classify(row: SweepRow, horizon: int) -> dict:
    tol = 1e-9
    if row.retention >= 1.0 - tol:
        retention = "full"
    elif row.retention <= tol:
        retention = "none"
    else:
        retention = "partial"
    if row.mitigation_years >= horizon - tol:
        mitigation = "always"
    elif row.mitigation_years <= tol:
        mitigation = "never"
    else:
        mitigation = "partial"
    return {"retention": retention, "mitigation": mitigation}


def _regime_changes(rows: Iterable[SweepRow], horizon: int) -> list:
    changes = []
    rows = list(rows)
    for prev, cur in zip(rows[:-1], rows[1:]):
        before, after = _classify(prev, horizon), _classify(cur, horizon)
        if before != after:
            changes.append(
                {
                    "premium_from": prev.base_premium,
                    "premium_to": cur.base_premium,
                    "before": before,
                    "after": after,
                }
            )
    return changes


def _format(value: float) -> str:
    # Decimal notation, six significant digits, no scientific form.
    return np.format_float_positional(
        value, precision=6, unique=False, fractional=False, trim="k"
    )


def write_csv(rows: Iterable[SweepRow], path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_format(v) for v in row.as_tuple()))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def run_sweep(
    config: ExperimentConfig,
    variants: Iterable[str] = VARIANTS,
    jobs: int = 1,
    out_dir: Optional[str] = None,
    context: Optional[SweepContext] = None,
) -> dict:
    """Sweep the base premium for each variant; optionally write files.

    Returns ``{variant: SweepResult}``. When ``out_dir`` is given, writes
    ``sweep_<variant>.csv`` and ``thresholds_<variant>.json`` per variant;
    nothing is written unless every grid point solved.
    """
    variants = tuple(variants)
    for variant in variants:
        if variant not in VARIANTS:
            raise ConfigError(f"variant: expected one of {VARIANTS}, got {variant!r}")
    context = context or SweepContext(config)
    premiums = premium_grid(config)
    tasks = [(variant, float(p)) for variant in variants for p in premiums]

    results: dict = {variant: {} for variant in variants}
    if jobs > 1:
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(
            max_workers=jobs,
            mp_context=ctx,
            initializer=_worker_init,
            initargs=(context,),
        ) as pool:
            for variant, premium, row in pool.map(_worker_solve, tasks, chunksize=16):
                results[variant][premium] = row
    else:
        for variant, premium in tasks:
            results[variant][premium] = context.solve_row(variant, premium)

    out: dict = {}
    for variant in variants:
        rows = [results[variant][float(p)] for p in premiums]
        out[variant] = SweepResult(
            variant=variant,
            rows=rows,
            regime_changes=_regime_changes(rows, config.horizon),
        )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for variant in variants:
            write_csv(out[variant].rows, os.path.join(out_dir, f"sweep_{variant}.csv"))
            with open(os.path.join(out_dir, f"thresholds_{variant}.json"), "w") as fh:
                json.dump(out[variant].regime_changes, fh, indent=2)
                fh.write("\n")
    return out
