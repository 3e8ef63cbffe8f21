import json

import numpy as np
import pytest

from tcprune.cli import main
from tcprune.gcn import load_model
from tcprune.harness import config_to_json, parse_csv
from tcprune.network import load_mask

SYNTH = (
    "classes=2,per_class_train=4,per_class_test=4,joints=3,frames=6,"
    "noise=0.2,phase_jitter=0,scale_jitter=0,seed=5"
)
MODEL_FLAGS = ["--heads", "2", "--filters", "2", "--chunks", "1"]


def run_cli(*argv) -> int:
    return main(list(argv))


@pytest.fixture
def trained_model(tmp_path):
    path = tmp_path / "model.json"
    code = run_cli(
        "train", "--synthetic", SYNTH, *MODEL_FLAGS,
        "--epochs", "3", "--seed", "0", "--out", str(path),
    )
    assert code == 0
    return path


class TestTrain:
    def test_writes_model(self, trained_model):
        model = load_model(trained_model)
        assert model.shape.nodes == 3
        assert model.shape.num_classes == 2


class TestPrune:
    def test_model_pruning_writes_mask(self, trained_model, tmp_path, capsys):
        mask_path = tmp_path / "mask.txt"
        code = run_cli(
            "prune", "--model", str(trained_model), "--rate", "0.9",
            "--tc", "--seed", "1", "--out", str(mask_path),
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out.splitlines()[0])
        mask = load_mask(mask_path)
        assert payload["kept"] == mask.kept_count
        assert payload["ac_percent"] == 100.0

    def test_network_file_pruning(self, tmp_path):
        from tcprune.network import LayeredNetwork, save_network

        rng = np.random.default_rng(0)
        net = LayeredNetwork(
            (rng.standard_normal((3, 4)), rng.standard_normal((4, 2))),
            ("identity", "identity"),
        )
        net_path = tmp_path / "net.txt"
        save_network(net, net_path)
        out = tmp_path / "mask.txt"
        assert run_cli("prune", "--network", str(net_path), "--rate", "0.5", "--out", str(out)) == 0
        assert load_mask(out).kept_count == 10

    def test_bad_rate_is_config_error(self, trained_model, tmp_path):
        code = run_cli(
            "prune", "--model", str(trained_model), "--rate", "1.5",
            "--out", str(tmp_path / "m.txt"),
        )
        assert code == 2


class TestFinetune:
    def test_round_trip(self, trained_model, tmp_path):
        mask_path = tmp_path / "mask.txt"
        assert run_cli(
            "prune", "--model", str(trained_model), "--rate", "0.9", "--tc",
            "--out", str(mask_path),
        ) == 0
        out = tmp_path / "tuned.json"
        code = run_cli(
            "finetune", "--model", str(trained_model), "--mask", str(mask_path),
            "--synthetic", SYNTH, "--epochs", "2", "--out", str(out),
        )
        assert code == 0
        assert load_model(out).shape.nodes == 3

    def test_missing_mask_is_io_error(self, trained_model, tmp_path):
        code = run_cli(
            "finetune", "--model", str(trained_model), "--mask", str(tmp_path / "no.txt"),
            "--synthetic", SYNTH, "--out", str(tmp_path / "t.json"),
        )
        assert code == 3


class TestAblate:
    def test_writes_artifacts_and_table(self, tmp_path):
        out_dir = tmp_path / "run"
        table = tmp_path / "table.csv"
        code = run_cli(
            "ablate", "--synthetic", SYNTH, *MODEL_FLAGS,
            "--rates", "0.5,0.9", "--seeds", "0", "--epochs", "3",
            "--finetune-epochs", "1", "--out", str(out_dir),
            "--table-out", str(table), "--format", "csv",
        )
        assert code == 0
        rows = parse_csv(table.read_text())
        assert len(rows) == 8
        assert (out_dir / "runs.json").exists()
        assert (out_dir / "results.csv").exists()

    def test_report_reproduces_table(self, tmp_path):
        out_dir = tmp_path / "run"
        assert run_cli(
            "ablate", "--synthetic", SYNTH, *MODEL_FLAGS,
            "--rates", "0.9", "--seeds", "0,1", "--epochs", "3",
            "--finetune-epochs", "1", "--out", str(out_dir),
        ) == 0
        table = tmp_path / "report.csv"
        assert run_cli("report", "--artifacts", str(out_dir), "--table-out", str(table)) == 0
        direct = parse_csv((out_dir / "results.csv").read_text())
        reported = parse_csv(table.read_text())
        for a, b in zip(direct, reported):
            assert (a.rate, a.tc, a.stochastic, a.kept_params, a.ac_percentage) == (
                b.rate, b.tc, b.stochastic, b.kept_params, b.ac_percentage
            )

    def test_config_file_drives_run(self, tmp_path):
        from tcprune.harness import ExperimentConfig, ModelSpec, SyntheticSpec

        cfg = ExperimentConfig(
            rates=(0.9,),
            seeds=(0,),
            synthetic=SyntheticSpec(
                classes=2, per_class_train=4, per_class_test=4, joints=3,
                frames=6, noise=0.2, phase_jitter=0.0, scale_jitter=0.0, seed=5,
            ),
            model=ModelSpec(heads=2, filters=2, chunks=1),
            epochs=3,
            finetune_epochs=1,
        )
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(config_to_json(cfg))
        table = tmp_path / "t.csv"
        assert run_cli("ablate", "--config", str(cfg_path), "--table-out", str(table)) == 0
        assert len(parse_csv(table.read_text())) == 4


class TestExitCodes:
    def test_divergence_maps_to_exit_4(self, trained_model, tmp_path, monkeypatch):
        import tcprune.cli as cli_mod
        from tcprune.errors import DivergenceError

        def exploding_train(model, dataset, cfg, mask=None):
            raise DivergenceError(3)

        monkeypatch.setattr(cli_mod, "train", exploding_train)
        code = run_cli(
            "train", "--synthetic", SYNTH, *MODEL_FLAGS,
            "--epochs", "1", "--out", str(tmp_path / "m.json"),
        )
        assert code == 4


class TestAlphaSweepCommand:
    def test_rows_per_alpha(self, tmp_path):
        table = tmp_path / "sweep.csv"
        code = run_cli(
            "alpha-sweep", "--synthetic", SYNTH, *MODEL_FLAGS,
            "--rates", "0.9", "--alphas", "1,0.5,0.1", "--seeds", "0",
            "--epochs", "3", "--finetune-epochs", "1", "--table-out", str(table),
        )
        assert code == 0
        rows = parse_csv(table.read_text())
        assert sorted(r.alpha for r in rows) == [0.1, 0.5, 1.0]
