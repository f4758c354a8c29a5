"""Fidelity-versus-detuning sweeps and their CSV output."""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import SweepConfig
from .dynamics import IntegrationError
from .model import DeviceParams, check_isolation
from .protocol import SHORT_NAMES, make_named_state, run_protocol

log = logging.getLogger(__name__)

CSV_HEADER = ("alpha", "state_pair", "fidelity", "avg_pe", "swap_time_ns")


def pair_label(kind_a: str, kind_b: str) -> str:
    return f"{SHORT_NAMES.get(kind_a, kind_a)}|{SHORT_NAMES.get(kind_b, kind_b)}"


def params_at_alpha(base: DeviceParams, alpha: float) -> DeviceParams:
    """Move every resonator to ``|delta_j| = alpha g_1 (g_j mu_j)/(g_1 mu_1)``.

    This keeps ``|lambda_j|`` equal across pairs.  Signs come from the base
    device's A detunings, and each B partner gets the same detuning as its A mode.
    """
    g1mu1 = base.g[0] * base.mu[0]
    signs = np.where(base.delta_a < 0, -1.0, 1.0)
    mags = np.array([alpha * base.g[0] * (g * m) / g1mu1 for g, m in zip(base.g, base.mu)])
    delta = signs * np.abs(mags)
    return base.with_detunings(delta, delta)


def sweep_params(cfg: SweepConfig, alpha: float) -> DeviceParams:
    params = params_at_alpha(cfg.params, alpha)
    if cfg.crosstalk > 0:
        params = params.with_uniform_crosstalk(cfg.crosstalk)
    return params


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    state_pair: str
    fidelity: float
    avg_pe: float
    swap_time_ns: float
    error: str | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Peak:
    state_pair: str
    alpha: float
    fidelity: float
    avg_pe: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    @property
    def state_pairs(self) -> list[str]:
        return list(dict.fromkeys(r.state_pair for r in self.rows))

    def curve(self, state_pair: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.rows if r.state_pair == state_pair]
        return np.array([r.alpha for r in rows]), np.array([r.fidelity for r in rows])

    def peaks(self) -> dict[str, Peak]:
        out = {}
        for label in self.state_pairs:
            rows = [r for r in self.rows if r.state_pair == label and not math.isnan(r.fidelity)]
            if rows:
                best = max(rows, key=lambda r: r.fidelity)
                out[label] = Peak(label, best.alpha, best.fidelity, best.avg_pe)
        return out

    @property
    def errors(self) -> list[SweepRow]:
        return [r for r in self.rows if r.error is not None]


def _run_point(args) -> SweepRow:
    params, alpha, kind_a, kind_b, method, fock_levels, integrator = args
    label = pair_label(kind_a, kind_b)
    n = params.n_pairs
    try:
        res = run_protocol(
            params,
            make_named_state(kind_a, n),
            make_named_state(kind_b, n),
            method=method,
            crosstalk=bool(params.crosstalk),
            fock_levels=fock_levels,
            integrator=integrator,
        )
    except (IntegrationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("alpha=%g %s failed: %s", alpha, label, exc)
        nan = float("nan")
        return SweepRow(alpha, label, nan, nan, nan, error=str(exc))
    return SweepRow(
        alpha,
        label,
        res.fidelity,
        res.avg_coupler_excitation,
        res.swap_time * 1e9,
        diagnostics=res.diagnostics,
    )


def worker_count(n_tasks: int) -> int:
    env = os.environ.get("SIM_THREADS")
    if env:
        try:
            limit = int(env)
        except ValueError:
            raise ValueError(f"SIM_THREADS must be an integer, got {env!r}") from None
        if limit < 1:
            raise ValueError("SIM_THREADS must be >= 1")
    else:
        limit = os.cpu_count() or 1
    return max(1, min(limit, n_tasks))


def run_sweep(cfg: SweepConfig, alphas: Sequence[float] | None = None) -> SweepResult:
    """Run the protocol at every grid point for every state pair.

    Rows are ordered by alpha and then by the configured state-pair order,
    whatever the completion order of parallel workers.
    """
    grid = cfg.alpha_grid() if alphas is None else np.asarray(alphas, dtype=float)
    tasks = []
    for alpha in grid:
        params = sweep_params(cfg, float(alpha))
        for kind_a, kind_b in cfg.state_pairs:
            tasks.append((params, float(alpha), kind_a, kind_b, cfg.method, cfg.fock_levels, cfg.integrator))
    workers = worker_count(len(tasks))
    if workers == 1:
        rows = [_run_point(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    return SweepResult(tuple(rows))


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.12e}"


def emit_csv(result: SweepResult, path) -> None:
    """Write the sweep rows; byte-identical for identical results."""
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(CSV_HEADER) + "\n")
            for r in result.rows:
                fh.write(
                    f"{_fmt(r.alpha)},{r.state_pair},{_fmt(r.fidelity)},{_fmt(r.avg_pe)},{_fmt(r.swap_time_ns)}\n"
                )
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc


def read_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            {k: (v if k == "state_pair" else float(v)) for k, v in row.items()}
            for row in reader
        ]


def check_conditions(cfg: SweepConfig, margin: float, alpha: float | None = None) -> str:
    """Render the isolation report for the configured device or for one grid alpha."""
    params = cfg.params if alpha is None else sweep_params(cfg, alpha)
    report = check_isolation(params, margin)
    head = f"config: {cfg.name}" + ("" if alpha is None else f" at alpha = {alpha:g}")
    return head + "\n" + report.render()
