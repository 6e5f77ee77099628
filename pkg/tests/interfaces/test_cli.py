# tests/interfaces/test_cli.py

import hashlib
import json
import math

import pytest
from typer.testing import CliRunner

from app.core.config import settings
from main import app

runner = CliRunner()

SMALL_RUN = "n_particles=40\nhorizon=0.5\noutput_times=0,0.25,0.5\nseed=11\nbeta.radius=inf\n"


def _digests(directory):
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(directory.iterdir())
        if p.name != "timing.json"
    }


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL_RUN, encoding="utf-8")
    return path


class TestCollide:
    def test_quarter_turn(self):
        result = runner.invoke(app, ["collide", "--u", "1,0,0", "--v", "0,0,0", "--theta", str(math.pi / 2), "--phi", "0"])
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["u_star"] == pytest.approx([0.5, 0.5, 0.0], abs=1e-15)
        assert data["v_star"] == pytest.approx([0.5, -0.5, 0.0], abs=1e-15)
        assert data["energy_residual"] < 1e-14

    def test_equal_velocities_have_no_deflection_vector(self):
        result = runner.invoke(app, ["collide", "--u", "3,1,2", "--v", "3,1,2", "--theta", "1", "--phi", "2"])
        assert result.exit_code == 0, result.output
        data = json.loads(result.stdout)
        assert data["alpha"] == [0.0, 0.0, 0.0]
        assert data["n"] == [None, None, None]

    def test_missing_theta(self):
        result = runner.invoke(app, ["collide", "--u", "1,0,0", "--v", "0,0,0", "--phi", "0"])
        assert result.exit_code == 2

    @pytest.mark.parametrize("args", [["--theta", "0"], ["--theta", "4"]])
    def test_theta_out_of_range(self, args):
        result = runner.invoke(app, ["collide", "--u", "1,0,0", "--v", "0,0,0", "--phi", "0", *args])
        assert result.exit_code == 2

    def test_bad_vector(self):
        result = runner.invoke(app, ["collide", "--u", "1,0", "--v", "0,0,0", "--theta", "1", "--phi", "0"])
        assert result.exit_code == 2


class TestValidate:
    def test_defaults_pass(self):
        result = runner.invoke(app, ["validate"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.stdout)["passed"] is True

    def test_missing_cutoff_fails(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("q.family=maxwellian_power\nq.theta_min=0\n", encoding="utf-8")
        result = runner.invoke(app, ["validate", "--config", str(path)])
        assert result.exit_code == 1
        assert json.loads(result.stdout)["passed"] is False

    def test_invalid_key_is_a_validation_error(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("colour=blue\n", encoding="utf-8")
        result = runner.invoke(app, ["validate", "--config", str(path)])
        assert result.exit_code == 1


class TestSimulate:
    def test_runs_are_reproducible(self, tmp_path, config_file):
        first, second = tmp_path / "a", tmp_path / "b"
        for target in (first, second):
            result = runner.invoke(app, ["simulate", "--config", str(config_file), "--out-dir", str(target)])
            assert result.exit_code == 0, result.output
        digests = _digests(first)
        assert {"manifest.json", "paths.ensk", "events.csv", "snapshot_t000.ensk", "snapshot_t002.ensk"} <= set(digests)
        assert digests == _digests(second)

    def test_manifest_replay(self, tmp_path, config_file):
        original, replayed = tmp_path / "a", tmp_path / "replay"
        assert runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(original)]).exit_code == 0
        result = runner.invoke(app, ["simulate", "--manifest", str(original / "manifest.json"), "-o", str(replayed)])
        assert result.exit_code == 0, result.output
        assert _digests(original) == _digests(replayed)

    def test_manifest_contents(self, tmp_path, config_file):
        target = tmp_path / "a"
        assert runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(target)]).exit_code == 0
        manifest = json.loads((target / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "simulate"
        assert manifest["seeds"]["master_seed"] == 11
        assert manifest["config"]["n_particles"] == 40
        assert set(manifest["versions"]) >= {"numpy", "scipy", "python"}
        header = (target / "events.csv").read_text(encoding="utf-8").splitlines()[0]
        assert header == "time,particle,accepted,jump_size"

    def test_config_and_manifest_are_exclusive(self, tmp_path, config_file):
        result = runner.invoke(app, ["simulate", "-c", str(config_file), "--manifest", str(tmp_path / "m.json")])
        assert result.exit_code == 2

    def test_frozen_mode_without_law(self, tmp_path):
        path = tmp_path / "frozen.cfg"
        path.write_text("mode=frozen\nn_particles=10\nhorizon=0.5\n", encoding="utf-8")
        result = runner.invoke(app, ["simulate", "-c", str(path), "-o", str(tmp_path / "out")])
        assert result.exit_code == 1

    def test_frozen_mode_with_a_stored_law(self, tmp_path, config_file):
        law_run = tmp_path / "law"
        assert runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(law_run)]).exit_code == 0
        path = tmp_path / "frozen.cfg"
        path.write_text("mode=frozen\nn_particles=20\nhorizon=0.5\nbeta.radius=inf\n", encoding="utf-8")
        target = tmp_path / "frozen"
        result = runner.invoke(
            app, ["simulate", "-c", str(path), "-o", str(target), "--frozen-law", str(law_run / "paths.ensk")]
        )
        assert result.exit_code == 0, result.output
        manifest = json.loads((target / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["inputs"]["frozen_law"].endswith("paths.ensk")


class TestPicard:
    def test_tolerance_below_noise_floor(self, tmp_path):
        path = tmp_path / "picard.cfg"
        path.write_text("n_particles=200\nhorizon=0.5\npicard.tol=0.000001\n", encoding="utf-8")
        result = runner.invoke(app, ["picard", "-c", str(path), "-o", str(tmp_path / "out")])
        assert result.exit_code == 2

    def test_writes_trace_and_manifest(self, tmp_path):
        path = tmp_path / "picard.cfg"
        path.write_text(
            "n_particles=200\nhorizon=0.5\npicard.tol=10\npicard.write_laws=true\nbeta.radius=inf\n",
            encoding="utf-8",
        )
        target = tmp_path / "out"
        result = runner.invoke(app, ["picard", "-c", str(path), "-o", str(target)])
        assert result.exit_code == 0, result.output
        assert (target / "law_000.ensk").is_file() and (target / "law_001.ensk").is_file()
        lines = (target / "picard.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "n,t,moment2,se,distance,distance_se"
        assert len(lines) == 1 + 2 * 3
        manifest = json.loads((target / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "picard"
        assert manifest["event_counts"] == {"iterations": 1, "converged": 1}


class TestDiagnose:
    def test_reports_are_written(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("n_particles=300\nhorizon=0.5\nseed=5\nbeta.radius=inf\n", encoding="utf-8")
        run_dir = tmp_path / "run"
        assert runner.invoke(app, ["simulate", "-c", str(path), "-o", str(run_dir)]).exit_code == 0
        result = runner.invoke(
            app,
            ["diagnose", "--run-dir", str(run_dir), "--compare-run", str(run_dir), "--samples", "10000", "--pair-samples", "5000"],
        )
        assert result.exit_code == 0, result.output
        reports = json.loads((run_dir / "diagnostics.json").read_text(encoding="utf-8"))
        names = [r["name"] for r in reports]
        assert names[0] == "tanaka_symmetry"
        assert "maxwellian_invariance" in names
        assert sum(n.startswith("weak_form_residual") for n in names) == 5
        assert names[-1] == "marginal_uniqueness"
        summary = (run_dir / "diagnostics_summary.csv").read_text(encoding="utf-8").splitlines()
        assert len(summary) == 1 + len(reports)

    def test_too_few_samples_is_a_usage_error(self, tmp_path):
        result = runner.invoke(app, ["diagnose", "--run-dir", str(tmp_path), "--samples", "10"])
        assert result.exit_code == 2


def test_head_on_collision_swaps_velocities():
    result = runner.invoke(app, ["collide", "--u", "1,0,0", "--v=-1,0,0", "--theta", str(math.pi), "--phi", "0"])
    assert result.exit_code == 0, result.output
    data = json.loads(result.stdout)
    assert data["u_star"] == pytest.approx([-1.0, 0.0, 0.0], abs=1e-15)
    assert data["v_star"] == pytest.approx([1.0, 0.0, 0.0], abs=1e-15)


def test_output_times_beyond_horizon(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("horizon=1\noutput_times=0,2\n", encoding="utf-8")
    assert runner.invoke(app, ["validate", "-c", str(path)]).exit_code == 1


def test_missing_manifest_is_a_runtime_error(tmp_path):
    result = runner.invoke(app, ["simulate", "--manifest", str(tmp_path / "none.json"), "-o", str(tmp_path / "out")])
    assert result.exit_code == 3


def test_truncated_run_file_is_a_runtime_error(tmp_path, config_file):
    run_dir = tmp_path / "run"
    assert runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(run_dir)]).exit_code == 0
    paths = run_dir / "paths.ensk"
    paths.write_bytes(paths.read_bytes()[:-8])
    result = runner.invoke(app, ["diagnose", "--run-dir", str(run_dir), "--samples", "10000", "--pair-samples", "5000"])
    assert result.exit_code == 3
    assert not isinstance(result.exception, ValueError)


@pytest.mark.parametrize("mode", ["mean_field", "frozen"])
def test_outputs_do_not_depend_on_thread_count(tmp_path, config_file, monkeypatch, mode):
    law_run = tmp_path / "law"
    assert runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(law_run)]).exit_code == 0
    path = tmp_path / "threads.cfg"
    path.write_text(f"mode={mode}\nn_particles=60\nhorizon=0.5\nseed=3\nbeta.radius=inf\n", encoding="utf-8")
    extra = ["--frozen-law", str(law_run / "paths.ensk")] if mode == "frozen" else []

    digests = []
    for threads in (1, 4):
        monkeypatch.setattr(settings, "THREADS", threads)
        target = tmp_path / f"threads{threads}"
        result = runner.invoke(app, ["simulate", "-c", str(path), "-o", str(target), *extra])
        assert result.exit_code == 0, result.output
        digests.append(_digests(target))
    assert digests[0] == digests[1]
