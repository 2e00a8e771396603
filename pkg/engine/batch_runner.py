from config.models import RunConfig
from config.settings import CHECKPOINT_FILE, DTYPES, METRICS_FILE
from data_loader.chunker import batch_indices
from data_loader.loader import DatasetLoader
from engine.optimizer import AdamState
from engine.trainer import MetricsRow, TrainState, train_epoch
from net.init import initialize, residual_calibrate
from net.network import build
from objective.schedules import EpsSchedule
from storage.checkpoint import load_checkpoint, save_checkpoint
from storage.metrics_writer import MetricsWriter
from tensor.rng import SeededRng
from utils.exceptions import CheckpointError, NumericError
from utils.logger import get_logger
from utils.timer import Timer

logger = get_logger("BATCH_RUNNER")


def make_schedule(cfg: RunConfig, batches_per_epoch: int) -> EpsSchedule:
    """Warmup ramps to ε_train; phase lengths in epochs become optimizer steps"""
    return EpsSchedule.from_epochs(
        cfg.sched.eps_train_value,
        cfg.sched.start_epochs,
        cfg.sched.increase_epochs,
        cfg.final_epochs,
        batches_per_epoch,
        exp_fraction=cfg.sched.exp_fraction,
        start_factor=cfg.sched.start_factor,
    )


def fresh_state(cfg: RunConfig, input_shape: tuple, num_classes: int) -> TrainState:
    dtype = DTYPES[cfg.train.dtype]
    arch = cfg.arch.model_copy(update={"input_shape": input_shape, "num_classes": num_classes})
    net = initialize(build(arch, dtype=dtype), cfg.init.scheme, SeededRng(cfg.train.seed).child(0))
    if cfg.init.residual_calibration:
        net = residual_calibrate(net)
    return TrainState(net=net, adam=AdamState.zeros_like(net.params))


def run_training(cfg: RunConfig, out_dir) -> list:
    """
    Entry point for a training run.

    Writes the metrics CSV and an atomically replaced checkpoint after every
    epoch. With ``output.resume`` an existing checkpoint in ``out_dir`` is
    loaded and training continues from its epoch and optimizer step.
    """
    logger.info("=== IBP TRAINING RUN STARTED ===")
    timer = Timer()
    dtype = DTYPES[cfg.train.dtype]

    train, test = DatasetLoader(cfg.data, dtype=dtype).load()
    batches_per_epoch = len(batch_indices(len(train), cfg.train.batch_size))
    sched = make_schedule(cfg, batches_per_epoch)
    logger.info(
        f"Schedule: {cfg.train.epochs} epochs ({cfg.sched.start_epochs}+{cfg.sched.increase_epochs}+"
        f"{cfg.final_epochs}), {batches_per_epoch} batches/epoch, eps_train={sched.eps_target}, "
        f"eps_test={cfg.sched.eps_target}, lr milestones {cfg.train.resolved_milestones()}"
    )

    checkpoint_path = out_dir / CHECKPOINT_FILE
    metrics_path = out_dir / METRICS_FILE

    if cfg.output.resume and checkpoint_path.is_file():
        saved = load_checkpoint(checkpoint_path)
        if saved.net.input_shape != train.input_shape or saved.net.num_classes != train.num_classes:
            raise CheckpointError(
                f"Checkpoint network {saved.net.input_shape}/K={saved.net.num_classes} does not match "
                f"dataset {train.input_shape}/K={train.num_classes}"
            )
        state = TrainState(net=saved.net.astype(dtype), adam=saved.adam,
                           epoch=int(saved.state["epoch"]), step=int(saved.state["step"]))
        logger.info(f"Resuming at epoch {state.epoch}, step {state.step}")
    else:
        state = fresh_state(cfg, train.input_shape, train.num_classes)

    writer = MetricsWriter.resume(metrics_path, MetricsRow.columns(), state.epoch)
    rng = SeededRng(cfg.train.seed).child(1)

    rows = []
    while state.epoch < cfg.train.epochs:
        try:
            state, row = train_epoch(state, train, test, cfg, sched, rng)
        except NumericError as e:
            logger.error(f"Numeric failure in epoch {state.epoch}: {e}; last good checkpoint kept at {checkpoint_path}")
            raise
        rows.append(row)
        writer.append(row.as_dict())
        save_checkpoint(checkpoint_path, state.net, state.adam, {"epoch": state.epoch, "step": state.step})

    logger.info(f"=== IBP TRAINING RUN COMPLETED in {timer.elapsed()}s ===")
    if rows:
        final = rows[-1]
        logger.info(f"Final: standard error {final.standard_error:.4f}, verified error {final.verified_error:.4f}")
    return writer.rows
