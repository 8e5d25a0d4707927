"""Tests for pulsearea.output module."""

import json

import numpy as np
import pytest

from pulsearea.exceptions import ConfigError
from pulsearea.output import (
    HEADER,
    atomic_write,
    ensure_output_dir,
    figure_filename,
    lambda_tag,
    trajectory_filename,
    write_figure_csv,
    write_json,
    write_trajectory_csv,
    write_trajectory_npz,
)


class TestFilenames:
    """Tests for output file naming."""

    @pytest.mark.parametrize(("lam", "tag"), [(0.0, "0"), (0.1, "0.1"), (0.25, "0.25"), (1.0, "1")])
    def test_lambda_tag(self, lam, tag):
        """Test short lambda tags."""
        assert lambda_tag(lam) == tag

    def test_trajectory_filename(self):
        """Test trajectory file names per format."""
        assert trajectory_filename(0.5) == "trajectory_lambda_0.5.csv"
        assert trajectory_filename(0.5, "npz") == "trajectory_lambda_0.5.npz"

    def test_figure_filename(self):
        """Test figure file names."""
        assert figure_filename(2, 0.25) == "figure2_lambda_0.25.csv"


class TestTrajectoryCsv:
    """Tests for write_trajectory_csv."""

    def test_header_and_rows(self, tmp_path, small_trajectory):
        """Test the exact header and one row per sample."""
        path = write_trajectory_csv(tmp_path / "t.csv", small_trajectory)
        lines = path.read_text().splitlines()
        assert lines[0] == HEADER
        assert lines[0] == "tau_ns,theta_rad,theta_dot_rad_per_ns,envelope_M_over_mu,phi_rad"
        assert len(lines) == len(small_trajectory) + 1

    def test_values(self, tmp_path, small_trajectory):
        """Test that values read back to 12 significant digits."""
        path = write_trajectory_csv(tmp_path / "t.csv", small_trajectory)
        table = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_allclose(table, small_trajectory.columns(), rtol=1e-11, atol=1e-15)

    def test_deterministic(self, tmp_path, small_trajectory):
        """Test that writing twice gives identical bytes."""
        first = write_trajectory_csv(tmp_path / "a.csv", small_trajectory).read_bytes()
        second = write_trajectory_csv(tmp_path / "b.csv", small_trajectory).read_bytes()
        assert first == second

    def test_no_temporary_left(self, tmp_path, small_trajectory):
        """Test that only the final file remains."""
        write_trajectory_csv(tmp_path / "t.csv", small_trajectory)
        assert [p.name for p in tmp_path.iterdir()] == ["t.csv"]


class TestTrajectoryNpz:
    """Tests for write_trajectory_npz."""

    def test_arrays_and_params(self, tmp_path, small_trajectory):
        """Test that columns and parameters are stored."""
        path = write_trajectory_npz(tmp_path / "t.npz", small_trajectory)
        with np.load(path) as data:
            np.testing.assert_array_equal(data["theta_rad"], small_trajectory.theta)
            np.testing.assert_array_equal(data["phi_rad"], small_trajectory.phi)
            assert float(data["lam"]) == 0.5
            assert float(data["M"]) == 2.0


class TestFigureCsv:
    """Tests for write_figure_csv."""

    @pytest.mark.parametrize(
        ("which", "column", "attribute"),
        [(1, "theta_rad", "theta"), (2, "envelope_M_over_mu", "envelope"), (3, "phi_rad", "phi")],
    )
    def test_columns(self, tmp_path, small_trajectory, which, column, attribute):
        """Test the two-column layout of each figure file."""
        path = write_figure_csv(tmp_path / "f.csv", small_trajectory, which)
        lines = path.read_text().splitlines()
        assert lines[0] == f"tau_ns,{column}"
        table = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_allclose(table[:, 1], getattr(small_trajectory, attribute), rtol=1e-11, atol=1e-15)


class TestAtomicWrite:
    """Tests for atomic_write and write_json."""

    def test_failure_keeps_old_file(self, tmp_path):
        """Test that an exception leaves the previous contents and no temporary."""
        path = tmp_path / "out.txt"
        path.write_text("old")
        with pytest.raises(RuntimeError), atomic_write(path) as handle:
            handle.write("new")
            raise RuntimeError("boom")
        assert path.read_text() == "old"
        assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]

    def test_json_sorted(self, tmp_path):
        """Test indented, key-sorted JSON."""
        path = write_json(tmp_path / "s.json", {"b": 1, "a": [1.5]})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [1.5], "b": 1}


class TestEnsureOutputDir:
    """Tests for ensure_output_dir."""

    def test_creates_nested(self, tmp_path):
        """Test that missing parents are created."""
        out = ensure_output_dir(tmp_path / "a" / "b")
        assert out.is_dir()

    def test_rejects_file(self, tmp_path):
        """Test that a path occupied by a file raises ConfigError."""
        blocker = tmp_path / "blocker"
        blocker.write_text("x")
        with pytest.raises(ConfigError) as excinfo:
            ensure_output_dir(blocker / "out")
        assert excinfo.value.key == "out_dir"
