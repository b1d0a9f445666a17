"""
Tests for parameter sweeps.
"""

import math

import numpy as np
import pytest

from atomic_beamformer.core.continuous import ContinuousCell
from atomic_beamformer.core.errors import ConfigError
from atomic_beamformer.core.segmental import SegmentalCell
from atomic_beamformer.ops.sweep import (
    REPORT_COLUMNS,
    SweepSpec,
    db,
    evaluate,
    peak_row,
    run_sweep,
    sweep_row,
)


class TestSweepSpec:
    """Test sweep grid validation."""

    def test_columns(self):
        """The variable column leads the report columns."""
        spec = SweepSpec("length", (0.1, 0.2))
        assert spec.columns[0] == "L [m]"
        assert spec.columns[1:] == REPORT_COLUMNS

    def test_rejects_bad_grids(self):
        """Unknown variables, empty and unsorted grids are rejected."""
        with pytest.raises(ValueError):
            SweepSpec("temperature", (1.0,))
        with pytest.raises(ValueError):
            SweepSpec("length", ())
        with pytest.raises(ValueError):
            SweepSpec("length", (0.2, 0.1))

    def test_from_settings_range(self):
        """start/stop/points expand to a linear grid in SI."""
        section = {"variable": "length", "start": "1 cm", "stop": "3 cm", "points": 3}
        spec = SweepSpec.from_settings(section, "experiment.snr_sweep")
        np.testing.assert_allclose(spec.values, [0.01, 0.02, 0.03])

    def test_from_settings_segments(self):
        """Segment grids are rounded to distinct integers."""
        section = {
            "variable": "segments",
            "start": 1,
            "stop": 100,
            "points": 5,
            "spacing": "log",
        }
        spec = SweepSpec.from_settings(section, "experiment.seg_sweep")
        assert spec.values == (1.0, 3.0, 10.0, 32.0, 100.0)

    def test_from_settings_errors(self):
        """Bad sections name the offending field."""
        with pytest.raises(ConfigError, match="experiment.snr_sweep.variable"):
            SweepSpec.from_settings({"variable": "colour"}, "experiment.snr_sweep")
        with pytest.raises(ConfigError, match="experiment.snr_sweep"):
            SweepSpec.from_settings(
                {"values": ["3 cm", "1 cm"]}, "experiment.snr_sweep"
            )


class TestSweepRows:
    """Test single sweep rows."""

    def test_matches_direct_evaluation(self, default_config):
        """A one-point length sweep equals a direct evaluation."""
        cfg = default_config
        frame = run_sweep(SweepSpec("length", (0.1,)), cfg)
        cell = ContinuousCell(0.1, cfg.point)
        report = evaluate(cell, cfg.receiver, cfg.scene, cfg.window, cfg.radiance)
        row = frame.iloc[0]
        assert row["status"] == "ok"
        assert row["snr_total [1]"] == report.snr_total
        expected = 10.0 * math.log10(report.snr_total)
        assert row["snr_total [dB]"] == pytest.approx(expected)

    def test_segments_build_arrays(self, default_config):
        """Segment sweeps evaluate gapless arrays of the configured length."""
        cfg = default_config
        row = sweep_row(cfg, "segments", 4.0)
        cell = SegmentalCell(cfg.cell.length, 4, 0.0, cfg.point)
        report = evaluate(cell, cfg.receiver, cfg.scene, cfg.window, cfg.radiance)
        assert row[0] == 4.0
        assert row[REPORT_COLUMNS.index("snr_total [1]") + 1] == report.snr_total

    def test_offset_reduces_gain(self, default_config):
        """Moving the signal off the beam lowers the pattern gain."""
        on_beam = sweep_row(default_config, "offset", 0.0)
        off_beam = sweep_row(default_config, "offset", 0.1)
        index = REPORT_COLUMNS.index("G [1]") + 1
        assert on_beam[index] == pytest.approx(1.0)
        assert off_beam[index] < on_beam[index]

    def test_failed_row(self, default_config):
        """An offset outside the visible region is reported, not raised."""
        row = sweep_row(default_config, "offset", 1.5)
        assert row[-1].startswith("failed: ValueError")
        assert all(math.isnan(value) for value in row[1:-1])


class TestRunSweep:
    """Test whole sweeps."""

    def test_default_length_sweep_peak(self, default_config):
        """The default 1-40 cm sweep peaks between 18 and 26 cm."""
        section = default_config.experiment["snr_sweep"]
        spec = SweepSpec.from_settings(section, "experiment.snr_sweep")
        frame = run_sweep(spec, default_config)
        assert len(frame) == 79
        assert (frame["status"] == "ok").all()
        peak = peak_row(frame)
        assert 0.18 <= peak["L [m]"] <= 0.26
        assert peak["snr_total [dB]"] == pytest.approx(26.36, abs=0.05)

    def test_threads_preserve_order(self, default_config):
        """Threaded sweeps return rows in grid order with identical values."""
        spec = SweepSpec("length", (0.01, 0.05, 0.1, 0.2))
        serial = run_sweep(spec, default_config)
        threaded = run_sweep(spec, default_config, threads=3)
        assert serial.equals(threaded)

    def test_peak_ignores_failed(self, default_config):
        """peak_row skips failed rows and returns None when nothing succeeded."""
        frame = run_sweep(SweepSpec("offset", (0.0, 1.5)), default_config)
        assert peak_row(frame)["theta_delta [1]"] == 0.0
        assert peak_row(frame[frame["status"] != "ok"]) is None

    def test_db(self):
        """db converts power ratios to decibels."""
        np.testing.assert_allclose(db([1.0, 10.0, 100.0]), [0.0, 10.0, 20.0])
