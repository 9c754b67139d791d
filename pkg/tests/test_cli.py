import json
import subprocess
import sys
from pathlib import Path

import pytest

from topoprior.cli import run

CONFIG_TEMPLATE = """
seed = 0
output_dir = "{out}"

[dataset]
kind = "planted_topology"
n_ring = 10
n_cluster = 6
t = 96
period = 16
noise = 0.5

[windows]
context_len = 24
horizon = 8
stride = 16

[fingerprint]
per_group = true

[adapter]
epochs = 2
batch_size = 32

[backbone]
epochs = 1
d_model = 16
layers = 1
heads = 4
head_dim = 4
ffn_dim = 16
"""


@pytest.fixture
def workspace(tmp_path):
    out = tmp_path / "out"
    cfg = tmp_path / "config.toml"
    cfg.write_text(CONFIG_TEMPLATE.format(out=str(out).replace("\\", "/")))
    return cfg, out


def invoke(*argv):
    return run(list(argv))


class TestCommands:
    def test_fingerprint_writes_125_values(self, workspace):
        cfg, out = workspace
        assert invoke("fingerprint", "--config", str(cfg)) == 0
        artifact = json.loads((out / "fingerprint.json").read_text())
        assert len(artifact["values"]) == 125
        assert set(artifact["meta"]) == {"tool_version", "config_hash", "seed"}

    def test_screen_requires_fingerprint_first(self, workspace, capsys):
        cfg, out = workspace
        code = invoke("screen", "--config", str(cfg))
        assert code == 2
        assert "run `topoprior fingerprint` first" in capsys.readouterr().err

    def test_screen_prints_table_row(self, workspace, capsys):
        cfg, out = workspace
        invoke("fingerprint", "--config", str(cfg))
        capsys.readouterr()
        assert invoke("screen", "--config", str(cfg)) == 0
        row = capsys.readouterr().out
        assert "H1/N=" in row and "verdict=" in row
        assert (out / "screening.json").exists()

    def test_adapt_then_eval_end_to_end(self, workspace, capsys):
        cfg, out = workspace
        invoke("fingerprint", "--config", str(cfg))
        invoke("sheaf", "--config", str(cfg))
        invoke("build-cache", "--config", str(cfg))
        assert invoke("adapt", "--config", str(cfg), "--variant", "vanilla") == 0
        assert invoke("eval", "--config", str(cfg)) == 0
        report = json.loads((out / "metrics_adapter_vanilla.json").read_text())
        slices = report["reports"]
        assert "val" in slices or "test" in slices
        first = next(iter(slices.values()))
        assert {"mae", "mse", "qloss"} <= set(first)

    def test_adapt_requires_cache(self, workspace, capsys):
        cfg, out = workspace
        invoke("fingerprint", "--config", str(cfg))
        invoke("sheaf", "--config", str(cfg))
        code = invoke("adapt", "--config", str(cfg), "--variant", "vanilla")
        assert code == 2
        assert "build-cache" in capsys.readouterr().err

    def test_ablate_five_rows(self, workspace, capsys):
        cfg, out = workspace
        code = invoke(
            "ablate", "--config", str(cfg),
            "--variants", "vanilla,rand,shuffle,tda,tda+sheaf",
        )
        assert code == 0
        table = capsys.readouterr().out
        for name in ("vanilla", "rand", "shuffle", "tda", "tda+sheaf"):
            assert name in table
        payload = json.loads((out / "ablation.json").read_text())
        assert len(payload["median_mae"]) == 5

    def test_train_backbone_smoke(self, workspace):
        cfg, out = workspace
        invoke("fingerprint", "--config", str(cfg))
        invoke("sheaf", "--config", str(cfg))
        assert invoke("train-backbone", "--config", str(cfg), "--variant", "tda+sheaf") == 0
        assert (out / "backbone_tda_sheaf.ckpt.json").exists()
        log_lines = (out / "backbone_tda_sheaf_log.jsonl").read_text().strip().splitlines()
        assert len(log_lines) >= 2  # meta line + 1 epoch
        entry = json.loads(log_lines[1])
        assert {"epoch", "train_loss", "val_loss", "lr"} <= set(entry)

    def test_missing_config_file(self, tmp_path, capsys):
        assert invoke("fingerprint", "--config", str(tmp_path / "nope.toml")) == 2

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        bad = tmp_path / "bad.toml"
        bad.write_text("whatever = 1\n")
        assert invoke("fingerprint", "--config", str(bad)) == 2


class TestDeterminism:
    def test_rerun_reproduces_byte_identical_artifacts(self, workspace, tmp_path):
        cfg, out = workspace
        for cmd in (["fingerprint"], ["sheaf"], ["build-cache"], ["adapt", "--variant", "tda+sheaf"]):
            invoke(*cmd, "--config", str(cfg))
        snapshot = {p.name: p.read_bytes() for p in out.iterdir()}
        for cmd in (["fingerprint"], ["sheaf"], ["build-cache"], ["adapt", "--variant", "tda+sheaf"]):
            invoke(*cmd, "--config", str(cfg))
        for name, blob in snapshot.items():
            assert (out / name).read_bytes() == blob, name

    def test_seed_override_changes_meta(self, workspace):
        cfg, out = workspace
        invoke("fingerprint", "--config", str(cfg), "--seed", "5")
        artifact = json.loads((out / "fingerprint.json").read_text())
        assert artifact["meta"]["seed"] == 5


class TestEntryPoint:
    def test_module_invocation(self, workspace):
        cfg, out = workspace
        proc = subprocess.run(
            [sys.executable, "-m", "topoprior.cli", "fingerprint", "--config", str(cfg)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, proc.stderr
