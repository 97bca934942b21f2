import json

import numpy as np
import pytest

from swarmchem.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

RECIPE_TEXT = "30 * (60, 3, 6, 0.5, 0.6, 15, 0.05, 0.3)\n20 * (40, 5, 10, 0.2, 0.3, 30, 0.1, 0.2)\n"


def write_config(tmp_path, name="cfg.json", **overrides):
    doc = {
        "format_version": 1,
        "world": {"seed": 5, "extent": [300.0, 300.0], "swarm_class": "rediff"},
        "n_steps": 60,
        "spawns": [{"recipe": RECIPE_TEXT, "center": [150, 150], "radius": 60}],
        "observers": {"hash_every": 20},
    }
    doc.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


class TestRunCommand:
    def test_run_writes_outputs(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert (out / "replay.jsonl").exists()
        assert (out / "final.snapshot").exists()
        assert (out / "behavior.csv").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert summary["steps"] == 60
        assert summary["n_particles"] == 50

    def test_run_then_replay_validates(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert main(["replay", "--log", str(out / "replay.jsonl")]) == EXIT_OK

    def test_seed_override_changes_hash(self, tmp_path):
        cfg = write_config(tmp_path)
        out1, out2, out3 = tmp_path / "o1", tmp_path / "o2", tmp_path / "o3"
        main(["run", "--config", str(cfg), "--out", str(out1)])
        main(["run", "--config", str(cfg), "--out", str(out2)])
        main(["run", "--config", str(cfg), "--out", str(out3), "--seed", "99"])
        h1 = json.loads((out1 / "summary.json").read_text())["state_hash"]
        h2 = json.loads((out2 / "summary.json").read_text())["state_hash"]
        h3 = json.loads((out3 / "summary.json").read_text())["state_hash"]
        assert h1 == h2
        assert h1 != h3

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"format_version": 1, "world": {}, "spawns": []}))
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
        assert "configuration error" in capsys.readouterr().err

    def test_missing_config_exit_code(self, tmp_path):
        assert (
            main(["run", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)])
            == EXIT_CONFIG
        )

    def test_corrupt_replay_exit_code(self, tmp_path, capsys):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg), "--out", str(out)])
        log = out / "replay.jsonl"
        lines = log.read_text().splitlines()
        log.write_text("\n".join(lines[:3]) + "\n")
        assert main(["replay", "--log", str(log)]) == EXIT_RUNTIME
        assert "runtime error" in capsys.readouterr().err


class TestEvolveCommand:
    def test_evolve_enables_competition_and_logs_events(self, tmp_path):
        cfg = write_config(tmp_path, n_steps=150,
                           world={"seed": 6, "extent": [150.0, 150.0], "swarm_class": "rediff"})
        out = tmp_path / "out"
        code = main(
            ["evolve", "--config", str(cfg), "--out", str(out),
             "--compete", "majority", "--mutation-rate", "0.2"]
        )
        assert code == EXIT_OK
        events = [
            json.loads(s)
            for s in (out / "replay.jsonl").read_text().splitlines()
            if json.loads(s).get("type") == "event"
        ]
        assert events, "expected transmission events in a dense evolutionary run"
        assert all(e["rule"] == "majority" for e in events)

    def test_env_schedule_applied(self, tmp_path):
        sched = tmp_path / "sched.json"
        sched.write_text(json.dumps([{"period": 25, "kind": "scatter", "fraction": 0.2}]))
        cfg = write_config(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        main(["evolve", "--config", str(cfg), "--out", str(out_a), "--compete", "faster"])
        main(["evolve", "--config", str(cfg), "--out", str(out_b), "--compete", "faster",
              "--env-schedule", str(sched)])
        ha = json.loads((out_a / "summary.json").read_text())["state_hash"]
        hb = json.loads((out_b / "summary.json").read_text())["state_hash"]
        assert ha != hb


class TestBatchAnalyze:
    def test_batch_and_analyze_round_trip(self, tmp_path):
        out = tmp_path / "batch"
        code = main(
            ["batch", "--runs", "4", "--classes", "heterogeneous,rediff",
             "--particles", "40", "--steps-per-run", "120", "--out", str(out),
             "--seed", "3", "--replicates", "5", "--subsample", "3"]
        )
        assert code == EXIT_OK
        assert (out / "vectors_heterogeneous.csv").exists()
        assert (out / "vectors_rediff.csv").exists()
        report = json.loads((out / "diversity.json").read_text())
        assert set(report) == {"heterogeneous", "rediff"}

        out2 = tmp_path / "analysis"
        code = main(
            ["analyze", "--vectors",
             str(out / "vectors_heterogeneous.csv"), str(out / "vectors_rediff.csv"),
             "--out", str(out2), "--replicates", "5", "--subsample", "3"]
        )
        assert code == EXIT_OK
        doc = json.loads((out2 / "diversity.json").read_text())
        assert doc["vectors_heterogeneous"]["n_runs"] == 4


class TestHarvestCommand:
    def test_harvest_from_recorded_frames(self, tmp_path):
        cfg = write_config(
            tmp_path,
            n_steps=80,
            world={"seed": 8, "extent": [300.0, 300.0]},
            spawns=[{"recipe": "40 * (60, 2, 4, 0.7, 0.6, 8, 0.02, 0.5)",
                     "center": [150, 150], "radius": 30}],
            observers={"hash_every": 10, "record_frames": True,
                       "min_object_size": 10, "min_lifetime": 20},
        )
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        harvest_out = tmp_path / "harvest"
        assert main(["harvest", "--log", str(out / "replay.jsonl"),
                     "--out", str(harvest_out)]) == EXIT_OK
        objects = json.loads((harvest_out / "objects.json").read_text())
        assert len(objects) >= 1
        text = (harvest_out / "harvested_recipes.txt").read_text()
        assert "# run" in text and "*" in text
        # harvested recipes parse under the grammar
        from swarmchem.recipe import parse_recipe

        for obj in objects:
            parse_recipe(obj["recipe"])

    def test_harvest_requires_frames(self, tmp_path):
        cfg = write_config(tmp_path)
        out = tmp_path / "out"
        main(["run", "--config", str(cfg), "--out", str(out)])
        assert main(["harvest", "--log", str(out / "replay.jsonl"),
                     "--out", str(tmp_path / "h")]) == EXIT_CONFIG
