"""Config-driven experiment execution and CSV emission.

Three experiment kinds share one entry point: error sweeps comparing the
trained routing classifier against plain minimization over a (tau, n) grid,
failure-rate runs against the hard-instance adversary, and batches of exact
identity checks. Work is spread over a thread pool, but every work unit
derives its randomness from (seed, global index), so results are identical
at any thread count and rows are emitted in canonical order.

Output is RFC-4180 CSV with LF endings: `#` metadata comments (version,
kind, config hash, seed, and one timestamp line that also carries the wall
time), then a header row, then data. The timestamp line is the only part
that varies between identical runs.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .adversary import (
    choose_parameters,
    run_adversary_trials,
    skew_for_domain,
)
from .config import ConfigError, ExperimentConfig, fnv1a64
from .core import RngStream, enumerate_class, sample_dataset
from .engine import erm
from .experts import train
from .fixtures import FAMILIES, Fixture
from .identities import run_identity_chunk
from .measures import true_error

__all__ = [
    "RESULT_COLUMNS",
    "TRACE_COLUMNS",
    "ADVERSARY_COLUMNS",
    "IDENTITY_COLUMNS",
    "ResultRow",
    "RunResult",
    "resolve_threads",
    "run",
]

RESULT_COLUMNS = (
    "config_hash",
    "cell",
    "trial_id",
    "algorithm",
    "n",
    "d",
    "tau_true",
    "excess_error",
    "break_reason",
    "r",
)
TRACE_COLUMNS = (
    "trial_id",
    "i",
    "T_size",
    "gamma_i",
    "H_size",
    "pair_i",
    "pair_j",
    "break_reason",
)
ADVERSARY_COLUMNS = (
    "trial_id",
    "truth_index_hash",
    "failed",
    "learner_error",
    "tau",
    "alpha",
)
IDENTITY_COLUMNS = ("check", "chunk", "instances", "max_abs_deviation", "failures")

_ADVERSARY_CHUNK = 100


@dataclass(frozen=True)
class ResultRow:
    """One algorithm's outcome on one trial. runtime_ms stays out of the CSV
    so identical runs stay byte-identical."""

    config_hash: str
    cell: int
    trial_id: int
    algorithm: str
    n: int
    d: int
    tau_true: float
    excess_error: float
    break_reason: str
    r: int | None
    runtime_ms: float

    def csv_values(self) -> tuple:
        return (
            self.config_hash,
            self.cell,
            self.trial_id,
            self.algorithm,
            self.n,
            self.d,
            self.tau_true,
            self.excess_error,
            self.break_reason,
            "" if self.r is None else self.r,
        )


@dataclass(frozen=True)
class RunResult:
    kind: str
    output_path: str
    trace_path: str | None
    rows: tuple
    trace_rows: tuple
    summary: tuple
    summary_lines: tuple
    ok: bool
    runtime_ms: float


def resolve_threads(config: ExperimentConfig) -> int:
    """Worker count: environment cap, else config, else hardware."""
    from_env = os.environ.get("PACLAB_THREADS")
    if from_env is not None:
        try:
            value = int(from_env)
        except ValueError:
            raise ValueError(
                f"PACLAB_THREADS must be a positive integer, got {from_env!r}"
            ) from None
        if value < 1:
            raise ValueError(f"PACLAB_THREADS must be a positive integer, got {value}")
        return value
    if config.threads is not None:
        return config.threads
    return os.cpu_count() or 1


def _ordered_map(worker, items, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, items))


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, config: ExperimentConfig, columns, rows, runtime_ms: float):
    stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(f"# paclab {__version__}\n")
        handle.write(f"# kind: {config.kind}\n")
        handle.write(f"# config_hash: {config.config_hash}\n")
        handle.write(f"# seed: {config.seed}\n")
        handle.write(f"# generated_at: {stamp} runtime_ms: {runtime_ms:.0f}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(value) for value in row])


def _build_fixture(config: ExperimentConfig, tau: float | None) -> Fixture:
    family = FAMILIES[config.fixture_family]
    params = dict(config.fixture_params)
    if tau is not None:
        params["tau"] = tau
    try:
        fixture = family(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"fixture {config.fixture_family!r}: {exc}") from exc
    enumerate_class(fixture.klass)
    return fixture


def _class_minimum_error(fixture: Fixture) -> float:
    matrix = fixture.klass.matrix
    positive = matrix == 1
    errors = positive @ fixture.distribution.mass[:, 0] + (~positive) @ fixture.distribution.mass[:, 1]
    return float(errors.min())


def _sweep_trial(config: ExperimentConfig, cell: int, fixture: Fixture, n: int, trial: int):
    trial_id = cell * config.trials + trial
    stream = RngStream(config.seed, 1 + trial_id)
    data = sample_dataset(fixture.distribution, n, stream)
    d = fixture.vc_dim
    tau_true = _class_minimum_error(fixture)

    started = time.perf_counter()
    result = train(data, fixture.klass, d, config.delta, config.constants)
    train_ms = (time.perf_counter() - started) * 1000.0

    third = n // 3
    fit_part = data.take(slice(third, 2 * third))
    started = time.perf_counter()
    erm(fixture.klass, fit_part)
    erm_ms = (time.perf_counter() - started) * 1000.0

    trained_error = true_error(result.output_hypothesis(), fixture.distribution)
    erm_error = true_error(result.erm_hypothesis, fixture.distribution)
    rows = []
    for algorithm, excess, reason, r, ms in (
        (
            "disagreeing_experts",
            trained_error - tau_true,
            result.trace.break_reason,
            result.trace.pair_count,
            train_ms,
        ),
        ("erm", erm_error - tau_true, "", None, erm_ms),
    ):
        if excess < -1e-12:
            raise RuntimeError(
                f"excess error {excess!r} below the class minimum on trial {trial_id}"
            )
        rows.append(
            ResultRow(
                config.config_hash, cell, trial_id, algorithm, n, d, tau_true, excess, reason, r, ms
            )
        )

    trace_rows = []
    records = result.trace.records
    for index, record in enumerate(records):
        terminal = index == len(records) - 1
        pair = record.pair_indices
        trace_rows.append(
            (
                trial_id,
                record.step,
                len(record.kept),
                "" if record.min_error is None else record.min_error,
                "" if record.candidates is None else int(record.candidates.size),
                "" if pair is None else pair[0],
                "" if pair is None else pair[1],
                result.trace.break_reason if terminal else "",
            )
        )
    return rows, trace_rows


def _run_upper_sweep(config: ExperimentConfig, threads: int):
    taus = config.grid_tau if config.grid_tau is not None else (None,)
    cells = [(tau, n) for tau in taus for n in config.grid_n]
    fixtures = [_build_fixture(config, tau) for tau, _ in cells]

    jobs = [
        (cell, fixtures[cell], n, trial)
        for cell, (_, n) in enumerate(cells)
        for trial in range(config.trials)
    ]

    def worker(job):
        cell, fixture, n, trial = job
        return _sweep_trial(config, cell, fixture, n, trial)

    outcomes = _ordered_map(worker, jobs, threads)
    rows = [row for pair, _ in outcomes for row in pair]
    trace_rows = [line for _, lines in outcomes for line in lines]

    summary = []
    lines = []
    for cell, (tau, n) in enumerate(cells):
        for algorithm in ("disagreeing_experts", "erm"):
            excesses = [
                row.excess_error
                for row in rows
                if row.cell == cell and row.algorithm == algorithm
            ]
            mean = float(np.mean(excesses))
            p95 = float(np.percentile(excesses, 95))
            summary.append(
                {
                    "cell": cell,
                    "algorithm": algorithm,
                    "tau": tau,
                    "n": n,
                    "mean_excess": mean,
                    "p95_excess": p95,
                }
            )
            label = "tau=default" if tau is None else f"tau={tau:g}"
            lines.append(
                f"cell {cell} ({label}, n={n}) {algorithm}: "
                f"mean_excess={mean:.6g} p95_excess={p95:.6g}"
            )
    return rows, trace_rows, tuple(summary), tuple(lines), True


def _run_lower_bound(config: ExperimentConfig, threads: int):
    spec = config.adversary
    try:
        if spec.tau is not None:
            u, skew = choose_parameters(spec.tau, spec.d, spec.n, spec.cap)
        else:
            u = spec.u
            skew = (
                spec.skew
                if spec.skew is not None
                else skew_for_domain(u, spec.d, spec.n, spec.cap)
            )
    except ValueError as exc:
        raise ConfigError(f"adversary parameters: {exc}") from exc
    if u < 2 * spec.d:
        raise ConfigError(f"adversary domain {u} too small for {spec.d} negatives")

    starts = list(range(0, config.trials, _ADVERSARY_CHUNK))

    def worker(start):
        count = min(_ADVERSARY_CHUNK, config.trials - start)
        trials = run_adversary_trials(
            u, spec.d, spec.n, skew, count, RngStream(config.seed, start)
        )
        return [
            (
                start + t.trial_index,
                format(fnv1a64(str(t.truth_rank).encode("utf-8")), "016x"),
                int(t.failed),
                t.learner_error,
                t.opt_error,
                t.skew,
            )
            for t in trials
        ]

    chunks = _ordered_map(worker, starts, threads)
    rows = [row for chunk in chunks for row in chunk]
    failures = sum(row[2] for row in rows)
    rate = failures / config.trials
    stderr = math.sqrt(rate * (1.0 - rate) / config.trials)
    opt = (1.0 - skew) * spec.d / u
    summary = (
        {
            "failure_rate": rate,
            "stderr": stderr,
            "u": u,
            "d": spec.d,
            "n": spec.n,
            "skew": skew,
            "tau": opt,
        },
    )
    lines = (
        f"failure_rate={rate:.6g} stderr={stderr:.6g} "
        f"(u={u} d={spec.d} n={spec.n} skew={skew:.6g} tau={opt:.6g})",
    )
    return rows, [], summary, lines, True


def _run_identities(config: ExperimentConfig, threads: int):
    chunk_count = math.ceil(config.trials / config.chunk_size)

    def worker(chunk):
        count = min(config.chunk_size, config.trials - chunk * config.chunk_size)
        return run_identity_chunk(config.seed, chunk, count, config.tolerance)

    batches = _ordered_map(worker, list(range(chunk_count)), threads)
    rows = [
        (agg.check, agg.chunk, agg.instances, agg.max_abs_deviation, agg.failures)
        for batch in batches
        for agg in batch
    ]
    summary = []
    lines = []
    total_failures = 0
    for check in {agg.check: None for batch in batches for agg in batch}:
        per_check = [agg for batch in batches for agg in batch if agg.check == check]
        instances = sum(agg.instances for agg in per_check)
        failures = sum(agg.failures for agg in per_check)
        worst = max(agg.max_abs_deviation for agg in per_check)
        total_failures += failures
        summary.append(
            {
                "check": check,
                "instances": instances,
                "failures": failures,
                "max_abs_deviation": worst,
            }
        )
        lines.append(
            f"{check}: {instances} instances, {failures} failures, "
            f"max deviation {worst:.3g}"
        )
    ok = total_failures == 0
    lines.append("all identity checks passed" if ok else "IDENTITY CHECK FAILURES")
    return rows, [], tuple(summary), tuple(lines), ok


def run(config: ExperimentConfig) -> RunResult:
    """Execute a parsed config and write its CSV outputs.

    Returns the in-memory rows alongside what was written, plus a summary
    that matches the CSV contents exactly.
    """
    threads = resolve_threads(config)
    started = time.perf_counter()
    if config.kind == "upper_sweep":
        rows, trace_rows, summary, lines, ok = _run_upper_sweep(config, threads)
        csv_rows = [row.csv_values() for row in rows]
        columns = RESULT_COLUMNS
    elif config.kind == "lower_bound":
        rows, trace_rows, summary, lines, ok = _run_lower_bound(config, threads)
        csv_rows = rows
        columns = ADVERSARY_COLUMNS
    else:
        rows, trace_rows, summary, lines, ok = _run_identities(config, threads)
        csv_rows = rows
        columns = IDENTITY_COLUMNS
    runtime_ms = (time.perf_counter() - started) * 1000.0

    _write_csv(config.output, config, columns, csv_rows, runtime_ms)
    if config.trace_output is not None and config.kind == "upper_sweep":
        _write_csv(config.trace_output, config, TRACE_COLUMNS, trace_rows, runtime_ms)
    return RunResult(
        kind=config.kind,
        output_path=config.output,
        trace_path=config.trace_output if config.kind == "upper_sweep" else None,
        rows=tuple(rows),
        trace_rows=tuple(trace_rows),
        summary=summary if isinstance(summary, tuple) else tuple(summary),
        summary_lines=tuple(lines),
        ok=ok,
        runtime_ms=runtime_ms,
    )
