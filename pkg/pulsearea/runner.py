"""Sweep orchestration: simulate, reproduce figures and audit over a list of lambdas."""

import logging
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from .analysis import attenuation_check, build_audit_report
from .config import RunConfig, load_config
from .model import Method, ModelParams, SolverConfig, Trajectory
from .output import (
    FIGURE_COLUMNS,
    TRAJECTORY_WRITERS,
    ensure_output_dir,
    figure_filename,
    lambda_tag,
    trajectory_filename,
    write_figure_csv,
    write_json,
)
from .reports import AuditReport, SweepAudit
from .solver import build_route

logger = logging.getLogger(__name__)

AUDIT_SUMMARY = "audit_summary.json"

T = TypeVar("T")
R = TypeVar("R")


def _solve(job: tuple[ModelParams, SolverConfig, str]) -> Trajectory:
    params, config, method = job
    return build_route(params, config, method).trajectory()


def _solve_window(job: tuple[ModelParams, SolverConfig, str, float, float]) -> Trajectory:
    params, config, method, tau_min, tau_max = job
    route = build_route(params, config, method)
    lo, hi = route.tau_range
    start, stop = max(tau_min, lo), min(tau_max, hi)
    if start > tau_min or stop < tau_max:
        logger.warning(
            f"lambda={params.lam:g}: figure window [{tau_min:g}, {tau_max:g}] ns clipped to "
            f"[{start:.4g}, {stop:.4g}] ns"
        )
    return route.trajectory(np.linspace(start, stop, config.n_grid))


def _audit(job: tuple[ModelParams, SolverConfig]) -> AuditReport:
    params, config = job
    return build_audit_report(params, config)


@dataclass
class SweepRunner:
    """Runs one command over every lambda of a RunConfig and writes the results."""

    config: RunConfig
    out_dir: Path

    @classmethod
    def create(cls, config: RunConfig | None = None) -> "SweepRunner":
        """Create a runner, checking that the output directory is writable.

        Args:
            config: Optional configuration. If not provided, loads from environment/file.
        """
        config = config or load_config()
        return cls(config=config, out_dir=ensure_output_dir(config.out_dir))

    def _map(self, func: Callable[[T], R], jobs: Sequence[T]) -> list[R]:
        """Apply func to every job, in a process pool when max_workers > 1. Order is preserved."""
        workers = min(self.config.max_workers, len(jobs))
        if workers <= 1:
            return [func(job) for job in jobs]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, jobs))

    def _method(self, method: Method | str | None) -> str:
        return Method(method or self.config.method).value

    def simulate(self, method: Method | str | None = None) -> list[Path]:
        """Solve every lambda on the full range and write one trajectory file each."""
        method = self._method(method)
        solver_config = self.config.solver_config()
        lambdas = self.config.lambdas
        logger.info(f"Simulating {len(lambdas)} lambda values by {method}")
        trajectories = self._map(_solve, [(self.config.params(lam), solver_config, method) for lam in lambdas])

        writer = TRAJECTORY_WRITERS[self.config.output_format]
        written = []
        for lam, trajectory in zip(lambdas, trajectories):
            path = writer(self.out_dir / trajectory_filename(lam, self.config.output_format), trajectory)
            written.append(path)
            logger.info(f"lambda={lam:g}: {len(trajectory)} samples -> {path}")
        return written

    def figures(self, which: int, method: Method | str | None = None) -> list[Path]:
        """Write the requested figure's column for every lambda, then the manifest."""
        if which not in FIGURE_COLUMNS:
            raise ValueError(f"figure must be one of {sorted(FIGURE_COLUMNS)}, got {which}")
        method = self._method(method)
        solver_config = self.config.solver_config()
        tau_min, tau_max = self.config.figure_tau_min, self.config.figure_tau_max
        lambdas = self.config.lambdas
        logger.info(f"Figure {which}: {len(lambdas)} curves on [{tau_min:g}, {tau_max:g}] ns")
        jobs = [(self.config.params(lam), solver_config, method, tau_min, tau_max) for lam in lambdas]
        trajectories = self._map(_solve_window, jobs)

        written = []
        entries: list[dict[str, Any]] = []
        for lam, trajectory in zip(lambdas, trajectories):
            path = write_figure_csv(self.out_dir / figure_filename(which, lam), trajectory, which)
            written.append(path)
            lo, hi = trajectory.tau_range
            entries.append({"lambda": lam, "file": path.name, "rows": len(trajectory), "tau_range_ns": [lo, hi]})

        manifest = {
            "figure": which,
            "column": FIGURE_COLUMNS[which][1],
            "method": method,
            "M_inv_ns": self.config.M_inv_ns,
            "tau_window_ns": [tau_min, tau_max],
            "files": entries,
        }
        written.append(write_json(self.out_dir / f"figure{which}_manifest.json", manifest))
        logger.info(f"Figure {which}: wrote {len(entries)} curves and manifest")
        return written

    def audit(self) -> tuple[SweepAudit, Path]:
        """Audit every lambda, add sweep-level checks and write the summary file."""
        solver_config = self.config.solver_config()
        lambdas = self.config.lambdas
        logger.info(f"Auditing {len(lambdas)} lambda values")
        reports = self._map(_audit, [(self.config.params(lam), solver_config) for lam in lambdas])

        sweep = SweepAudit(reports=reports, checks=[attenuation_check(reports)] if len(reports) > 1 else [])
        summary = {
            "passed": sweep.passed,
            "failures": sweep.failures(),
            "sweep_checks": [check.model_dump(mode="json") for check in sweep.checks],
            "reports": {lambda_tag(r.lam): r.model_dump(mode="json", by_alias=True) for r in reports},
        }
        path = write_json(self.out_dir / AUDIT_SUMMARY, summary)
        logger.info(f"Audit {'passed' if sweep.passed else 'FAILED'}: summary in {path}")
        return sweep, path
