from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from speechaffect import cli
from speechaffect.config import RunConfig, apply_overrides, config_from_dict, load_config
from speechaffect.dataio import Matrix, encode_emat, write_wav
from speechaffect.errors import InputError, InvariantError

from conftest import tone


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestConfig:
    def test_unknown_key(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text("[fad]\nshrinkage = 0.1\nbogus = 1\n")
        with pytest.raises(InputError, match="fad.bogus"):
            load_config(p)

    def test_type_checked(self):
        with pytest.raises(InputError):
            config_from_dict({"seed": "zero"})
        with pytest.raises(InputError):
            config_from_dict({"asr": {"smooth_bleu": 1}})

    def test_round_trip(self, tmp_path):
        cfg = config_from_dict({"seed": 7, "fad": {"shrinkage": 0.25}, "semisl": {"baselines": ["co_training"]}})
        p = tmp_path / "echo.toml"
        p.write_text(cfg.to_toml())
        assert load_config(p) == cfg

    def test_overrides(self):
        cfg = apply_overrides(RunConfig(), {"fad.shrinkage": 0.5, "seed": None})
        assert cfg.fad.shrinkage == 0.5 and cfg.seed == 0
        with pytest.raises(InputError):
            apply_overrides(RunConfig(), {"fad.nope": 1})

    def test_relative_paths_resolved(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('[semisl]\ngold_labels = "gold.csv"\nlinguistic_labels = ["a.csv"]\n')
        cfg = load_config(p)
        assert cfg.semisl.gold_labels == str(tmp_path.resolve() / "gold.csv")
        assert cfg.semisl.linguistic_labels == [str(tmp_path.resolve() / "a.csv")]


def fad_fixture(root, grid):
    """Per encoder and class, rows [sqrt(s)-1, sqrt(s)+1]; unlabeled rows [-1, 1]. FAD is then s."""
    for enc, row in grid.items():
        for cls, score in row.items():
            d = root / "labeled" / cls
            d.mkdir(parents=True, exist_ok=True)
            m = np.sqrt(score)
            (d / f"{enc}.emat").write_bytes(encode_emat(Matrix(np.array([[m - 1], [m + 1]]))))
        u = root / "unlabeled"
        u.mkdir(exist_ok=True)
        (u / f"{enc}.emat").write_bytes(encode_emat(Matrix(np.array([[-1.0], [1.0]]))))


class TestCli:
    def test_fad_label_on_grid(self, tmp_path, capsys, fad_grid):
        fad_fixture(tmp_path, fad_grid)
        code, out, _ = run_cli(capsys, "fad", "label", "--labeled", str(tmp_path / "labeled"),
                               "--unlabeled", str(tmp_path / "unlabeled"),
                               "--encoders", ",".join(fad_grid), "--out", str(tmp_path / "out" / "l.json"))
        assert code == 0
        res = json.loads(out)
        assert res["label"] == "Angry"
        # EMAT cells are float32, so the recovered score is only close to the grid average
        assert res["score"] == pytest.approx(34.8925, rel=1e-5)
        assert (tmp_path / "out" / "resolved_config.toml").exists()

    def test_fad_label_from_scores(self, capsys, fad_grid, tmp_path):
        p = tmp_path / "grid.json"
        p.write_text(json.dumps(fad_grid))
        code, out, _ = run_cli(capsys, "fad", "label", "--scores", str(p))
        assert code == 0 and json.loads(out)["label"] == "Angry"

    def test_features_extract(self, tmp_path, capsys):
        wav = tmp_path / "a.wav"
        write_wav(wav, tone(150.0, seconds=0.5))
        out = tmp_path / "a.features.csv"
        code, _, err = run_cli(capsys, "features", "extract", "--wav", str(wav), "--out", str(out),
                               "--workers", "1", "--quiet")
        assert code == 0, err
        header = out.read_text().splitlines()[0].split(",")
        rows = out.read_text().splitlines()
        assert len(rows) > 10 and "f0_hz" in header
        assert json.loads(out.with_suffix(".json").read_text())

    def test_metrics(self, tmp_path, capsys):
        p = tmp_path / "m.csv"
        p.write_text("id,pred,target\na,x,x\nb,y,x\nc,y,y\n")
        code, out, _ = run_cli(capsys, "metrics", "--input", str(p))
        assert code == 0
        assert json.loads(out)["unweighted_accuracy"] == pytest.approx(2 / 3)

    def _manifest(self, path, lines):
        path.write_text("".join(json.dumps(x) + "\n" for x in lines))

    def test_asr_then_report(self, tmp_path, capsys):
        man = tmp_path / "m.jsonl"
        self._manifest(man, [
            {"id": "u1", "ref": "the cat sat", "hyps": {"sysA": "the cat sat", "sysB": "a cat"}},
            {"id": "u2", "ref": "hello there", "hyps": {"sysA": "hello", "sysB": "hello there"}},
        ])
        code, _, err = run_cli(capsys, "asr", "eval", "--manifest", str(man), "--out-dir", str(tmp_path / "asr"))
        assert code == 0, err
        inputs = [str(tmp_path / "asr" / f"asr_{s}.json") for s in ("sysA", "sysB")]
        reports = []
        for name in ("r1", "r2"):
            code, _, err = run_cli(capsys, "report", "--inputs", *inputs, "--out-dir", str(tmp_path / name))
            assert code == 0, err
            reports.append((tmp_path / name / "report.json").read_bytes())
        assert reports[0] == reports[1]
        assert sorted(json.loads(reports[0])["systems"]) == ["sysA", "sysB"]

    def test_report_empty_corpus(self, tmp_path, capsys):
        man = tmp_path / "m.jsonl"
        man.write_text("")
        code, _, err = run_cli(capsys, "asr", "eval", "--manifest", str(man), "--out-dir", str(tmp_path))
        assert code == 1
        assert json.loads(err.splitlines()[-1])["error"] == "input"

    def test_report_missing_input(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "report", "--inputs", str(tmp_path / "none.json"), "--out-dir", str(tmp_path))
        assert code == 1

    def test_semisl_synth_and_rerun(self, tmp_path, capsys):
        code, _, _ = run_cli(capsys, "semisl", "synth", "--points", "200", "--out-dir", str(tmp_path / "d"))
        assert code == 0
        code, _, err = run_cli(capsys, "semisl", "run", "--config", str(tmp_path / "d" / "run.toml"),
                               "--out-dir", str(tmp_path / "o1"))
        assert code == 0, err
        echo = tmp_path / "o1" / "resolved_config.toml"
        code, _, _ = run_cli(capsys, "semisl", "run", "--config", str(echo), "--out-dir", str(tmp_path / "o2"))
        assert code == 0
        for name in ("history.csv", "metrics.json", "resolved_config.toml"):
            assert (tmp_path / "o1" / name).read_bytes() == (tmp_path / "o2" / name).read_bytes()

    def test_selftest(self, capsys):
        code, out, _ = run_cli(capsys, "selftest")
        assert code == 0
        assert out.count("[PASS]") == 4

    def test_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "nope")
        assert code == 1
        assert json.loads(err.splitlines()[-1])["error"] == "usage"
        code, _, _ = run_cli(capsys, "metrics", "--input", "x.csv", "--bogus")
        assert code == 1

    def test_invariant_exit_code(self, capsys, monkeypatch):
        def boom(args, cfg):
            raise InvariantError("drift")

        monkeypatch.setitem(cli.HANDLERS, "metrics", boom)
        code, _, err = run_cli(capsys, "metrics", "--input", "x.csv")
        assert code == 2
        assert json.loads(err)["error"] == "invariant"

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "speechaffect.cli", "--version"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "0.1.0" in proc.stdout
