"""Command-line surface: exit codes and written artifacts."""

import csv
import json
import logging

import numpy as np
import pytest

from mmsound import app
from mmsound.models import LocationReport, Scenario
from mmsound.processing import capture
from mmsound.reports import write_locations_csv

SMALL_GRID = {"tx_azimuths_deg": [-30, 0, 30], "rx_azimuths_deg": list(range(-150, 181, 30)), "step_deg": 30}


def _scene_file(path, num_paths=1, seed=3, **scene):
    doc = {
        "scene": {"n": 2.92, "p0_db": 61.34, "distance_m": 60.0, "num_paths": num_paths, "seed": seed, **scene},
        "grid": SMALL_GRID,
        "sounder": {"num_tones": 64, "link_budget_offset_db": 200.0},
        "location_id": path.stem,
    }
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def _read_rows(path):
    with path.open(newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class TestAnalyze:
    def test_no_inputs(self, tmp_path):
        assert app.main(["analyze", "--output-dir", str(tmp_path)]) == 2

    def test_missing_calibration(self, tmp_path, caplog):
        scene = _scene_file(tmp_path / "loc-a.json")
        assert app.main(["synth", str(scene), "--output-dir", str(tmp_path)]) == 0
        with caplog.at_level(logging.ERROR, logger="mmsound"):
            code = app.main([
                "analyze", str(tmp_path / "loc-a.mmw"),
                "--calibration", str(tmp_path / "absent.cal"),
                "--output-dir", str(tmp_path / "out"),
            ])
        assert code == 2
        assert "calibration" in caplog.text

    def test_missing_capture(self, tmp_path):
        assert app.main(["analyze", str(tmp_path / "absent.mmw"), "--output-dir", str(tmp_path)]) == 2

    def test_single_path_location(self, tmp_path):
        scene = _scene_file(tmp_path / "loc-a.json")
        app.main(["synth", str(scene), "--output-dir", str(tmp_path)])
        out = tmp_path / "out"
        assert app.main(["analyze", str(tmp_path / "loc-a.mmw"), "--output-dir", str(out)]) == 0

        summary = json.loads((out / "loc-a" / "summary.json").read_text())
        assert summary["num_mpcs"] == 1
        assert summary["rms_ds_omni_s"] == 0.0
        assert summary["rms_ds_dir_s"] == 0.0
        truth = json.loads((tmp_path / "loc-a.truth.json").read_text())
        assert summary["pl_db"] <= truth["pl_db"] + 0.2
        for name in ("pdp_omni.csv", "pdp_best.csv", "pas.csv", "padp_rx.csv", "padp_tx.csv", "mpcs.csv"):
            assert (out / "loc-a" / name).exists()
        assert len(_read_rows(out / "locations.csv")) == 1

    def test_json_only(self, tmp_path):
        scene = _scene_file(tmp_path / "loc-b.json")
        app.main(["synth", str(scene), "--output-dir", str(tmp_path)])
        out = tmp_path / "out"
        app.main(["analyze", str(tmp_path / "loc-b.mmw"), "--output-dir", str(out), "--formats", "json"])
        assert (out / "loc-b" / "summary.json").exists()
        assert not (out / "loc-b" / "pdp_omni.csv").exists()
        assert (out / "locations.csv").exists()


class TestFit:
    def _locations(self, path, rng):
        reports = []
        for scenario, n in ((Scenario.STREET28, 2.9), (Scenario.NLOS, 3.6)):
            for k in range(12):
                d = rng.uniform(40.0, 300.0)
                pl = 61.34 + 10 * n * np.log10(d) + rng.normal(0.0, 4.0)
                reports.append(LocationReport(
                    location_id=f"{scenario.value}-{k}", scenario=scenario, distance_m=d,
                    pl_db=pl, pl_dir_db=pl + 10.0,
                    rms_ds_omni_s=10 ** rng.normal(-7.4, 0.3), rms_ds_dir_s=10 ** rng.normal(-8.0, 0.3),
                ))
        write_locations_csv(path, reports)
        return path

    def test_writes_tables(self, tmp_path, rng):
        table = self._locations(tmp_path / "locations.csv", rng)
        out = tmp_path / "fit"
        assert app.main(["fit", str(table), "--output-dir", str(out)]) == 0
        assert len(_read_rows(out / "pathloss.csv")) == 8
        assert len(_read_rows(out / "delay_spread.csv")) == 4
        doc = json.loads((out / "delay_spread.json").read_text())
        assert set(doc["omni_to_directional_ratio"]) == {"Street28", "NLoS"}
        assert (out / "shadowing_Street28_omni_CI.csv").exists()
        assert (out / "log_ds_cdf_NLoS_directional.csv").exists()

    def test_scenario_filter(self, tmp_path, rng):
        table = self._locations(tmp_path / "locations.csv", rng)
        out = tmp_path / "fit"
        app.main(["fit", str(table), "--scenario", "NLoS", "--output-dir", str(out)])
        rows = _read_rows(out / "pathloss.csv")
        assert all(r["skipped"] for r in rows if r["scenario"] == "Street28")
        assert not any(r["skipped"] for r in rows if r["scenario"] == "NLoS")

    def test_no_tables(self, tmp_path):
        assert app.main(["fit", "--output-dir", str(tmp_path)]) == 2


class TestSynth:
    def test_same_seed_same_bytes(self, tmp_path):
        scene = _scene_file(tmp_path / "scene.json", num_paths=6, seed=11, ds_target_s=20e-9)
        app.main(["synth", str(scene), "-o", str(tmp_path / "a.mmw")])
        app.main(["synth", str(scene), "-o", str(tmp_path / "b.mmw")])
        assert (tmp_path / "a.mmw").read_bytes() == (tmp_path / "b.mmw").read_bytes()
        truth = json.loads((tmp_path / "a.truth.json").read_text())
        assert len(truth["mpcs"]) == 6

    def test_zero_paths(self, tmp_path):
        scene = _scene_file(tmp_path / "empty.json", num_paths=0)
        assert app.main(["synth", str(scene), "-o", str(tmp_path / "empty.mmw")]) == 0
        c = capture.load_capture(tmp_path / "empty.mmw")
        assert not np.any(c.h)

    def test_schema_violation(self, tmp_path):
        scene = tmp_path / "bad.json"
        scene.write_text(json.dumps({"scene": {"n": 2.0}}), encoding="utf-8")
        assert app.main(["synth", str(scene), "--output-dir", str(tmp_path)]) == 2

    @pytest.mark.parametrize("grid", [
        {"tx_azimuths_deg": [0, -30], "rx_azimuths_deg": [0]},
        {"tx_azimuths_deg": [0, 7], "rx_azimuths_deg": [0]},
        {"tx_azimuths_deg": [], "rx_azimuths_deg": [0]},
    ])
    def test_bad_grid_is_a_usage_error(self, tmp_path, grid):
        scene = _scene_file(tmp_path / "scene.json")
        doc = json.loads(scene.read_text())
        doc["grid"] = grid
        scene.write_text(json.dumps(doc), encoding="utf-8")
        assert app.main(["synth", str(scene), "--output-dir", str(tmp_path)]) == 2

    def test_offset_mismatch(self, tmp_path):
        scene = _scene_file(tmp_path / "scene.json", link_budget_offset_db=150.0)
        assert app.main(["synth", str(scene), "--output-dir", str(tmp_path)]) == 2


class TestWaveform:
    def test_duration_and_tables(self, tmp_path):
        code = app.main([
            "waveform", "--num-tones", "801", "--spacing-hz", "500e3",
            "--max-iters", "5", "--output-dir", str(tmp_path),
        ])
        assert code == 0
        doc = json.loads((tmp_path / "waveform.json").read_text())
        assert doc["duration_s"] == pytest.approx(2e-6)
        assert doc["papr_db"] <= doc["initial_papr_db"]
        assert len(_read_rows(tmp_path / "waveform.csv")) == 801

    def test_single_tone(self, tmp_path):
        assert app.main(["waveform", "--num-tones", "1", "--output-dir", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "waveform.json").read_text())
        assert doc["papr_db"] == pytest.approx(0.0, abs=1e-9)
        assert doc["reached_target"]

    def test_bad_arguments(self, tmp_path):
        assert app.main(["waveform", "--num-tones", "0", "--output-dir", str(tmp_path)]) == 2


class TestConvert:
    def test_round_trip(self, tmp_path):
        scene = _scene_file(tmp_path / "loc.json", num_paths=3, ds_target_s=10e-9)
        app.main(["synth", str(scene), "-o", str(tmp_path / "loc.mmw")])
        assert app.main(["convert", str(tmp_path / "loc.mmw"), str(tmp_path / "loc.txt")]) == 0
        assert app.main(["convert", str(tmp_path / "loc.txt"), str(tmp_path / "back.mmw")]) == 0
        a = capture.load_capture(tmp_path / "loc.mmw")
        b = capture.load_capture(tmp_path / "back.mmw")
        assert np.array_equal(a.h, b.h)
        assert a.meta == b.meta


class TestRunConfig:
    def test_config_file_then_flags(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"tail_fraction": 0.2, "false_alarm_rate": 0.001}), encoding="utf-8")
        args = app.build_parser().parse_args([
            "analyze", "x.mmw", "--config", str(cfg), "--tail-fraction", "0.3", "--output-dir", str(tmp_path),
        ])
        run = app.build_run_config(args)
        assert run.tail_fraction == 0.3
        assert run.false_alarm_rate == 0.001
        assert run.output_dir == tmp_path

    def test_no_false_alarm(self, tmp_path):
        args = app.build_parser().parse_args(["analyze", "x.mmw", "--no-false-alarm"])
        assert app.build_run_config(args).false_alarm_rate is None

    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text("{not json", encoding="utf-8")
        assert app.main(["analyze", "x.mmw", "--config", str(cfg), "--output-dir", str(tmp_path)]) == 2

    def test_out_of_range_setting(self, tmp_path):
        assert app.main(["analyze", "x.mmw", "--tail-fraction", "0.9", "--output-dir", str(tmp_path)]) == 2

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            app.main(["analyze", "--formats", "xml"])
        assert info.value.code == 2
