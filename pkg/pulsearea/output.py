"""File output for trajectories, figure bundles and audit summaries.

Every file is written to a temporary sibling first and moved into place with
os.replace, so readers never see a partial file.
"""

import contextlib
import json
import logging
import os
import tempfile
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any

import numpy as np

from .exceptions import ConfigError
from .model import Trajectory

logger = logging.getLogger(__name__)

HEADER = "tau_ns,theta_rad,theta_dot_rad_per_ns,envelope_M_over_mu,phi_rad"
NUMBER_FORMAT = "%.12g"

FIGURE_COLUMNS: dict[int, tuple[str, str]] = {
    1: ("theta", "theta_rad"),
    2: ("envelope", "envelope_M_over_mu"),
    3: ("phi", "phi_rad"),
}


def ensure_output_dir(path: str | os.PathLike) -> Path:
    """Create the output directory and check that it is writable.

    Raises:
        ConfigError: If the directory cannot be created or written to.
    """
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=out):
            pass
    except OSError as e:
        raise ConfigError(f"output directory {out} is not writable: {e}", key="out_dir") from e
    return out


@contextmanager
def atomic_write(path: Path, mode: str = "w") -> Iterator[IO[Any]]:
    """Open a temporary file next to path and move it over path on success."""
    temp_path = path.with_name(path.name + ".tmp")
    try:
        with open(temp_path, mode) as handle:
            yield handle
        os.replace(temp_path, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.remove(temp_path)
        raise


def lambda_tag(lam: float) -> str:
    """Short stable text form of lambda for file names."""
    return f"{lam:.6g}"


def trajectory_filename(lam: float, output_format: str = "csv") -> str:
    return f"trajectory_lambda_{lambda_tag(lam)}.{output_format}"


def figure_filename(which: int, lam: float) -> str:
    return f"figure{which}_lambda_{lambda_tag(lam)}.csv"


def _write_csv(path: Path, header: str, table: np.ndarray) -> Path:
    with atomic_write(path) as handle:
        np.savetxt(handle, table, fmt=NUMBER_FORMAT, delimiter=",", header=header, comments="")
    logger.debug(f"Wrote {table.shape[0]} rows to {path}")
    return path


def write_trajectory_csv(path: Path, trajectory: Trajectory) -> Path:
    """Write all five trajectory columns with the fixed header."""
    return _write_csv(path, HEADER, trajectory.columns())


def write_trajectory_npz(path: Path, trajectory: Trajectory) -> Path:
    """Write the trajectory columns and its parameters as a compressed npz archive."""
    with atomic_write(path, "wb") as handle:
        np.savez_compressed(
            handle,
            tau_ns=trajectory.tau,
            theta_rad=trajectory.theta,
            theta_dot_rad_per_ns=trajectory.theta_dot,
            envelope_M_over_mu=trajectory.envelope,
            phi_rad=trajectory.phi,
            M=trajectory.params.M,
            lam=trajectory.params.lam,
            mu=trajectory.params.mu,
        )
    return path


TRAJECTORY_WRITERS: dict[str, Callable[[Path, Trajectory], Path]] = {
    "csv": write_trajectory_csv,
    "npz": write_trajectory_npz,
}


def write_figure_csv(path: Path, trajectory: Trajectory, which: int) -> Path:
    """Write the time column and the column plotted in the given figure (1 area, 2 envelope, 3 phase)."""
    attribute, column = FIGURE_COLUMNS[which]
    table = np.column_stack((trajectory.tau, getattr(trajectory, attribute)))
    return _write_csv(path, f"tau_ns,{column}", table)


def write_json(path: Path, payload: Any) -> Path:
    """Write payload as indented, key-sorted JSON."""
    with atomic_write(path) as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    logger.debug(f"Wrote {path}")
    return path
