import json
import subprocess
import sys

import pytest

from oci.autodiff import Param, save_checkpoint
from oci.cli import ExperimentConfig, build_config, main, read_ini

SCENE = {"image_size": [640, 480], "robot_ref": [0.052, 0.0, 0.552, 0.342], "objects": [
    {"name": "polar bear", "kind": "toy", "color": "white", "bbox": [0.396, 0.682, 0.516, 0.786]},
    {"name": "blue box", "kind": "box", "color": "blue", "bbox": [0.641, 0.302, 1.0, 0.646]}]}
TASK = {"verb_template": "Pick up the {target} to the {destination}.", "target_name": "polar bear",
        "destination_name": "blue box"}
EXPECTED = ("Pick up the polar bear [0.396, 0.682, 0.516, 0.786] to the blue box [0.641, 0.302, 1.000, 0.646]. "
            "The white polar bear is on the bottom of the robotic arm [0.052, 0.000, 0.552, 0.342]. "
            "The blue box is on the bottom-right of the robotic arm [0.052, 0.000, 0.552, 0.342].")

TINY = """[train]
family = 3
n_demos = 2
epochs = 1
eval_episodes = 3
eval_seeds = 1

[grid]
families = [3]
regimes = [2]
variants = ["full", "plain"]
seeds = [0]
"""


@pytest.fixture
def inputs(tmp_path):
    (tmp_path / "s.json").write_text(json.dumps(SCENE))
    (tmp_path / "t.json").write_text(json.dumps(TASK))
    (tmp_path / "exp.ini").write_text(TINY)
    return tmp_path


def last_json(out: str) -> dict:
    return json.loads(out.strip().splitlines()[-1])


class TestAugment:
    def test_reference_example(self, inputs, capsys):
        assert main(["augment", "--scene", str(inputs / "s.json"), "--task", str(inputs / "t.json")]) == 0
        assert capsys.readouterr().out == EXPECTED + "\n"

    def test_both_ablations(self, inputs, capsys):
        assert main(["augment", "--scene", str(inputs / "s.json"), "--task", str(inputs / "t.json"),
                     "--no-abs", "--no-rel"]) == 0
        assert capsys.readouterr().out == TASK["verb_template"].format(target="polar bear",
                                                                       destination="blue box") + "\n"

    def test_paraphrases(self, inputs, capsys):
        assert main(["augment", "--scene", str(inputs / "s.json"), "--task", str(inputs / "t.json"),
                     "--paraphrase", "3", "--no-rel"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert len(lines) == 3 and len(set(lines)) == 3

    def test_malformed_scene(self, inputs, capsys):
        (inputs / "s.json").write_text("{not json")
        assert main(["augment", "--scene", str(inputs / "s.json"), "--task", str(inputs / "t.json")]) == 2
        captured = capsys.readouterr()
        assert captured.out == "" and "invalid input" in captured.err

    def test_unknown_object(self, inputs, capsys):
        (inputs / "t.json").write_text(json.dumps({**TASK, "target_name": "green ball"}))
        assert main(["augment", "--scene", str(inputs / "s.json"), "--task", str(inputs / "t.json")]) == 2
        assert "green ball" in capsys.readouterr().err


class TestConfig:
    @pytest.mark.parametrize("text, fragment", [
        ("[train]\nfamilly = 3\n", "unknown keys: familly"),
        ("[train]\nepochs = three\n", "not a JSON literal"),
        ("[train]\nepochs = 2.5\n", "integer"),
        ("[extra]\na = 1\n", "unknown config sections"),
        ("[frm]\nn_heads = 3\n", "invalid configuration"),
        ("[grid]\nvariants = [\"best\"]\n", "unknown variants"),
    ])
    def test_rejected(self, tmp_path, capsys, text, fragment):
        (tmp_path / "bad.ini").write_text(text)
        assert main(["gen", "--config", str(tmp_path / "bad.ini"), "--out", str(tmp_path / "o")]) == 2
        captured = capsys.readouterr()
        assert fragment in captured.err
        assert last_json(captured.out)["exit_code"] == 2

    def test_precedence(self, inputs, monkeypatch):
        monkeypatch.setenv("OCI_SEED", "7")
        raw = read_ini(inputs / "exp.ini")
        assert build_config(raw, {}).train.seed == 7
        assert build_config(raw, {"seed": 9, "n_demos": 4}).train.n_demos == 4
        assert build_config(raw, {"seed": 9}).train.seed == 9
        assert build_config(raw, {"variant": "plain"}).train.use_abs is False

    def test_grid_defaults_do_not_override_file(self, inputs):
        raw = read_ini(inputs / "exp.ini")
        assert build_config(raw, {}, grid_defaults=True).train.epochs == 1

    def test_provenance_round_trip(self, inputs, monkeypatch):
        monkeypatch.delenv("OCI_SEED", raising=False)
        exp = build_config(read_ini(inputs / "exp.ini"), {"out": "x"})
        (inputs / "again.ini").write_text(exp.to_ini())
        again = build_config(read_ini(inputs / "again.ini"), {})
        assert isinstance(again, ExperimentConfig) and again == exp


class TestRunCommands:
    def test_gen(self, inputs, capsys):
        out = inputs / "g"
        assert main(["gen", "--config", str(inputs / "exp.ini"), "--n-demos", "10", "--out", str(out)]) == 0
        assert last_json(capsys.readouterr().out)["episodes"] == 10
        assert len((out / "demos.jsonl").read_text().splitlines()) == 10
        assert "n_demos = 10" in (out / "config.ini").read_text()

    def test_train_then_eval(self, inputs, capsys):
        out = inputs / "t"
        assert main(["train", "--config", str(inputs / "exp.ini"), "--epochs", "2", "--out", str(out)]) == 0
        summary = last_json(capsys.readouterr().out)
        assert summary["epochs"] == 2 and (out / "model.ckpt").exists()
        assert (out / "losses.csv").read_text().count("\n") == 3
        assert main(["eval", "--config", str(inputs / "exp.ini"), "--checkpoint", str(out / "model.ckpt"),
                     "--out", str(inputs / "e")]) == 0
        ev = last_json(capsys.readouterr().out)
        assert ev["embedder_calls"] == ev["episodes"] == 3
        assert 0.0 <= ev["success_rate"] <= 1.0

    def test_eval_expert(self, inputs, capsys, monkeypatch):
        monkeypatch.setenv("OCI_SEED", "3")
        assert main(["eval", "--expert", "--family", "5", "--eval-episodes", "10", "--out", str(inputs / "x")]) == 0
        assert last_json(capsys.readouterr().out)["success_rate"] == 1.0

    def test_eval_needs_checkpoint(self, inputs, capsys):
        assert main(["eval", "--out", str(inputs / "x")]) == 2

    def test_eval_bad_checkpoint(self, inputs, capsys):
        (inputs / "bad.ckpt").write_bytes(b"garbage")
        assert main(["eval", "--checkpoint", str(inputs / "bad.ckpt"), "--out", str(inputs / "x")]) == 1
        assert "bad magic" in last_json(capsys.readouterr().out)["error"]

    def test_grid_reproducible(self, inputs, capsys):
        for run in ("r1", "r2"):
            assert main(["grid", "--config", str(inputs / "exp.ini"), "--out", str(inputs / run)]) == 0
            summary = last_json(capsys.readouterr().out)
            assert summary["rows"] == 2 and summary["cache_ok"]
        assert (inputs / "r1" / "metrics.csv").read_bytes() == (inputs / "r2" / "metrics.csv").read_bytes()
        assert json.loads((inputs / "r1" / "failures.json").read_text()) == []

    def test_grid_workers_match_serial(self, inputs, capsys):
        for run, jobs in (("serial", "1"), ("parallel", "2")):
            assert main(["grid", "--config", str(inputs / "exp.ini"), "--out", str(inputs / run),
                         "--jobs", jobs]) == 0
        capsys.readouterr()
        for name in ("metrics.csv", "cache_audit.csv"):
            assert (inputs / "serial" / name).read_bytes() == (inputs / "parallel" / name).read_bytes()


class TestSelftest:
    def test_quick_passes(self, capsys):
        assert main(["selftest", "--quick"]) == 0
        captured = capsys.readouterr().out
        report = last_json(captured)
        assert report["passed"] and report["suites"]["grad_check"]["max_error"] < 1e-4
        assert "max_error=" in captured

    def test_corrupt_checkpoint(self, tmp_path, capsys):
        path = tmp_path / "m.ckpt"
        save_checkpoint(path, [Param([1.0, 2.0], "w")])
        path.write_bytes(path.read_bytes()[:-4])
        assert main(["selftest", "--quick", "--checkpoint", str(path)]) == 1
        assert "truncated" in capsys.readouterr().out


def test_installed_entry_point(inputs):
    proc = subprocess.run([sys.executable, "-m", "oci", "augment", "--scene", str(inputs / "s.json"),
                           "--task", str(inputs / "t.json")], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == EXPECTED
