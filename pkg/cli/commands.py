"""
Subcommand bodies. Each returns a process exit code:
0 success, 1 numeric or tolerance failure, 2 usage or I/O error.
"""

from pathlib import Path

import numpy as np

from analysis.audit import run_audit
from autograd.gradcheck import gradcheck
from config.models import RunConfig
from config.settings import CHECKPOINT_FILE, EFFECTIVE_CONFIG_FILE, EVAL_FILE, GRADCHECK_FILE
from data_loader.loader import DatasetLoader
from engine.batch_runner import run_training
from engine.trainer import evaluate
from net.init import initialize, residual_calibrate
from net.network import build
from storage.checkpoint import load_checkpoint
from storage.json_writer import JSONWriter
from storage.metrics_writer import write_csv
from tensor.rng import SeededRng
from utils.exceptions import CheckpointError
from utils.logger import get_logger
from utils.validators import require_file, require_writable_dir

logger = get_logger("CLI")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

EVAL_COLUMNS = ["eps", "standard_error", "verified_error", "active", "inactive", "unstable"]


def prepare_output(cfg: RunConfig, out_dir=None) -> Path:
    """Validate the output directory and write the effective configuration next to the results"""
    out_dir = require_writable_dir(out_dir or cfg.output.dir, "output directory")
    effective = cfg.model_dump(mode="json")
    logger.info(f"Effective config: {effective}")
    JSONWriter().write(out_dir / EFFECTIVE_CONFIG_FILE, effective)
    return out_dir


def cmd_train(cfg: RunConfig, out_dir=None) -> int:
    DatasetLoader(cfg.data).check_paths()
    out_dir = prepare_output(cfg, out_dir)
    run_training(cfg, out_dir)
    return EXIT_OK


def cmd_eval(cfg: RunConfig, out_dir=None) -> int:
    checkpoint = require_file(cfg.eval.checkpoint or Path(cfg.output.dir) / CHECKPOINT_FILE, "checkpoint")
    DatasetLoader(cfg.data).check_paths()
    out_dir = prepare_output(cfg, out_dir)

    saved = load_checkpoint(checkpoint)
    _, test = DatasetLoader(cfg.data, dtype=saved.net.dtype).load()
    if saved.net.input_shape != test.input_shape or saved.net.num_classes != test.num_classes:
        raise CheckpointError(
            f"Checkpoint expects inputs {saved.net.input_shape} with K={saved.net.num_classes}, "
            f"dataset has {test.input_shape} with K={test.num_classes}"
        )

    rows = []
    for eps in cfg.eval.eps_list:
        result = evaluate(saved.net, test, eps, cfg.eval.batch_size)
        rows.append({column: getattr(result, column) for column in EVAL_COLUMNS})
        logger.info(f"eps={eps:<8g} standard error {result.standard_error:.4f} "
                    f"verified error {result.verified_error:.4f}")
    write_csv(out_dir / EVAL_FILE, rows, EVAL_COLUMNS)
    return EXIT_OK


def cmd_audit(cfg: RunConfig, out_dir=None) -> int:
    out_dir = prepare_output(cfg, out_dir)
    run_audit(cfg, out_dir)
    return EXIT_OK


def cmd_gradcheck(cfg: RunConfig, out_dir=None) -> int:
    DatasetLoader(cfg.data).check_paths()
    out_dir = prepare_output(cfg, out_dir)
    gc = cfg.gradcheck

    train, _ = DatasetLoader(cfg.data, dtype=np.float64).load()
    batch = train.take(SeededRng(gc.seed).child(0).permutation(len(train))[:gc.batch_size])

    arch = cfg.arch.model_copy(update={"input_shape": train.input_shape, "num_classes": train.num_classes})
    net = initialize(build(arch, dtype=np.float64), cfg.init.scheme, SeededRng(gc.seed).child(1))
    if cfg.init.residual_calibration:
        net = residual_calibrate(net)

    report = gradcheck(net, batch, gc.eps, cfg.train.regularizer(), cfg.sched.eps_train_value,
                       samples_per_param=gc.samples_per_param, step=gc.step, seed=gc.seed)
    write_csv(out_dir / GRADCHECK_FILE, report.rows, ["param", "index", "analytic", "numeric", "rel_err"])

    if report.passed(gc.tolerance):
        logger.info(f"Gradcheck passed: max rel err {report.max_rel_err:.3e} <= {gc.tolerance}")
        return EXIT_OK
    if report.checked == 0:
        logger.error(f"Gradcheck failed: all {report.skipped} sampled entries sat on kinks, nothing was compared")
        return EXIT_FAILURE
    logger.error(
        f"Gradcheck failed: max rel err {report.max_rel_err:.3e} > {gc.tolerance} "
        f"at {report.worst_param}{list(report.worst_index or ())}"
    )
    return EXIT_FAILURE


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "audit": cmd_audit,
    "gradcheck": cmd_gradcheck,
}
