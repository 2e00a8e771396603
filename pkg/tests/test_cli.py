import itertools
import json
from pathlib import Path

import pytest

from autograd import gradcheck as gradcheck_module
from cli.main import main
from cli.overrides import apply_overrides, load_run_config, parse_overrides
from config.settings import (
    CHECKPOINT_FILE,
    EFFECTIVE_CONFIG_FILE,
    EVAL_FILE,
    GRADCHECK_FILE,
    METRICS_FILE,
)
from storage.metrics_writer import read_csv
from utils.exceptions import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_parse_overrides():
    parsed = parse_overrides(["--train.seed", "3", "--sched.eps-target=0.2", "--data.kind", "mnist",
                              "--train.milestones", "[4, 6]", "--train.use_relu", "false"])
    assert parsed == {"train.seed": 3, "sched.eps_target": 0.2, "data.kind": "mnist",
                      "train.milestones": [4, 6], "train.use_relu": False}


@pytest.mark.parametrize("args", [["train.seed", "3"], ["--train.seed"], ["--seed", "3"], ["--"]])
def test_bad_overrides(args):
    with pytest.raises(ConfigError):
        parse_overrides(args)


def test_apply_overrides_leaves_document_alone():
    document = {"train": {"seed": 1}}
    merged = apply_overrides(document, {"train.seed": 2, "sched.eps_target": 0.3})
    assert merged == {"train": {"seed": 2}, "sched": {"eps_target": 0.3}}
    assert document == {"train": {"seed": 1}}
    with pytest.raises(ConfigError):
        apply_overrides({"train": 5}, {"train.seed": 1})


def test_load_run_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_run_config(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_run_config(broken)
    with pytest.raises(ConfigError, match="train.nope"):
        load_run_config(None, {"train.nope": 1})


def test_shipped_configs_validate():
    for path in sorted(CONFIGS.glob("*.json")):
        load_run_config(path)


def write_config(tmp_path, document) -> Path:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(document))
    return path


def test_train_then_eval(tmp_path, run_document):
    out = tmp_path / "run"
    config = write_config(tmp_path, run_document(out))

    assert main(["train", "--config", str(config), "--train.seed", "9"]) == 0
    assert (out / CHECKPOINT_FILE).is_file()
    assert len(read_csv(out / METRICS_FILE)) == 2
    effective = json.loads((out / EFFECTIVE_CONFIG_FILE).read_text())
    assert effective["train"]["seed"] == 9

    assert main(["eval", "--config", str(config), "--out", str(tmp_path / "eval")]) == 2
    assert main(["eval", "--config", str(config), "--eval.checkpoint", str(out / CHECKPOINT_FILE),
                 "--out", str(tmp_path / "eval")]) == 0
    table = read_csv(tmp_path / "eval" / EVAL_FILE)
    assert table["eps"].tolist() == [0.0, 0.05]
    assert (table["verified_error"] >= table["standard_error"]).all()


def test_eval_on_output_dir_checkpoint(tmp_path, run_document):
    out = tmp_path / "run"
    config = write_config(tmp_path, run_document(out))
    assert main(["train", "--config", str(config)]) == 0
    assert main(["eval", "--config", str(config)]) == 0
    assert (out / EVAL_FILE).is_file()


def test_eval_without_checkpoint_is_a_usage_error(tmp_path, run_document):
    config = write_config(tmp_path, run_document(tmp_path / "empty"))
    assert main(["eval", "--config", str(config)]) == 2


def test_eval_with_mismatched_data(tmp_path, run_document):
    out = tmp_path / "run"
    config = write_config(tmp_path, run_document(out))
    assert main(["train", "--config", str(config)]) == 0
    assert main(["eval", "--config", str(config), "--data.dim", "5"]) == 2


@pytest.mark.parametrize("override", [["--train.bogus", "1"], ["--train.epochs", "0"],
                                      ["--sched.final_epochs", "7"], ["stray"]])
def test_bad_arguments_exit_2(tmp_path, run_document, override):
    config = write_config(tmp_path, run_document(tmp_path / "run"))
    assert main(["train", "--config", str(config)] + override) == 2


def test_gradcheck_command(tmp_path):
    out = tmp_path / "gc"
    assert main(["gradcheck", "--config", str(CONFIGS / "gradcheck_tiny.json"), "--out", str(out)]) == 0
    rows = read_csv(out / GRADCHECK_FILE)
    assert len(rows) > 0
    assert rows["rel_err"].max() <= 1e-4


@pytest.mark.parametrize("override", [["--arch.preset", "nope"],
                                      ["--arch.preset_args", '{"widths": [4], "depth": 2}']])
def test_unbuildable_architecture_exits_2(tmp_path, run_document, override):
    config = write_config(tmp_path, run_document(tmp_path / "run"))
    assert main(["train", "--config", str(config)] + override) == 2


def test_dense_width_mismatch_exits_2(tmp_path, run_document):
    document = run_document(tmp_path / "run")
    document["arch"] = {"input_shape": [1, 1, 6], "num_classes": 3, "layers": [
        {"kind": "flatten"}, {"kind": "dense", "in_features": 99, "out_features": 3}]}
    assert main(["train", "--config", str(write_config(tmp_path, document))]) == 2


def test_gradcheck_with_every_entry_on_a_kink_fails(tmp_path, monkeypatch):
    calls = itertools.count()
    monkeypatch.setattr(gradcheck_module, "kink_signature", lambda *args: next(calls).to_bytes(8, "little"))
    out = tmp_path / "gc"
    assert main(["gradcheck", "--config", str(CONFIGS / "gradcheck_tiny.json"), "--out", str(out)]) == 1
