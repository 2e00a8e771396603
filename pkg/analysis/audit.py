"""
Initialization audits.

* ``difference_gain_table``: closed-form vs empirical (n/2)·mean|W| per scheme
  and fan-in, averaged over independent draws.
* ``arch_gain_table``: empirical gain of every affine layer of one
  architecture next to the closed form for that layer's fan-in.
* ``bound_profile``: per-layer mean bound width of an untrained network on a
  random ε-box, as log(Ê(Δᵢ)/Ê(Δ₀)), together with the post/pre ReLU gap
  ratio mean(δᵢ)/mean(Δᵢ) and the spread Var(h̄ᵢ) of the upper bounds.
"""

import math

import numpy as np

from config.models import AuditConfig, RunConfig
from config.modes import BNMode, InitScheme
from config.settings import GAIN_FILE, LAYER_GAIN_FILE, PROFILE_FILE
from ibp.propagate import propagate
from ibp.stats import gap_ratios, tightness_stats, upper_variances
from net import presets
from net.init import (
    difference_gain_closed_form,
    difference_gain_empirical,
    initialize,
    layer_gains,
    residual_calibrate,
    sample_weights,
)
from net.layers import ArchConfig
from net.network import build
from storage.metrics_writer import write_csv
from tensor.rng import SeededRng, sample_uniform
from utils.logger import get_logger
from utils.timer import Timer

logger = get_logger("AUDIT")


def difference_gain_table(schemes, fan_ins, trials: int, fan_out: int = 16, seed: int = 0) -> list:
    rows = []
    root = SeededRng(seed)
    for s, scheme in enumerate(schemes):
        scheme = InitScheme(scheme)
        for f, n_i in enumerate(fan_ins):
            gains = np.array([
                difference_gain_empirical(sample_weights(scheme, (fan_out, n_i), n_i, root.child(s, f, t)), n_i)
                for t in range(trials)
            ])
            closed = difference_gain_closed_form(scheme, n_i)
            empirical = float(gains.mean())
            rows.append({
                "scheme": scheme.value,
                "fan_in": n_i,
                "closed_form": closed,
                "empirical": empirical,
                "empirical_std": float(gains.std()),
                "rel_diff": abs(empirical - closed) / closed,
                "trials": trials,
            })
            logger.info(f"{scheme.value:>16} n={n_i:<6} closed={closed:8.3f} empirical={empirical:8.3f}")
    return rows


def arch_gain_table(arch: ArchConfig, schemes, seeds: int, calibrate: bool = True) -> list:
    """Per-layer gains of freshly initialized copies of ``arch``, averaged over seeds"""
    rows = []
    for scheme in schemes:
        scheme = InitScheme(scheme)
        per_seed = []
        for seed in range(seeds):
            net = initialize(build(arch, dtype=np.float64), scheme, SeededRng(seed).child(0))
            per_seed.append(layer_gains(residual_calibrate(net) if calibrate else net))
        for k, (tag, fan_in, _) in enumerate(per_seed[0]):
            rows.append({
                "scheme": scheme.value,
                "layer": tag,
                "fan_in": fan_in,
                "closed_form": difference_gain_closed_form(scheme, fan_in),
                "empirical": float(np.mean([gains[k][2] for gains in per_seed])),
            })
    return rows


def profile_arch(cfg: AuditConfig) -> ArchConfig:
    """Deep MLP without BN: profile_depth affine layers of profile_width"""
    widths = [cfg.profile_width] * (cfg.profile_depth - 1)
    return ArchConfig(
        input_shape=(1, 1, cfg.profile_input_dim),
        num_classes=10,
        layers=presets.mlp(10, widths),
    )


def bound_profile(arch: ArchConfig, scheme, eps: float, seeds: int, batch: int = 32,
                  calibrate: bool = True) -> list:
    """Seed-averaged per-layer statistics of an untrained network on uniform random inputs"""
    scheme = InitScheme(scheme)
    per_seed = []
    for seed in range(seeds):
        rng = SeededRng(seed)
        net = initialize(build(arch, dtype=np.float64), scheme, rng.child(0))
        if calibrate:
            net = residual_calibrate(net)
        x = sample_uniform(rng.child(1), (batch,) + tuple(arch.input_shape), 0.0, 1.0)
        trace = propagate(net, x, eps, BNMode.TRAIN)
        widths = tightness_stats(trace)
        per_seed.append({
            "widths": widths,
            "gaps": [math.nan] + gap_ratios(trace),
            "variances": [math.nan] + upper_variances(trace),
            "tags": ["input"] + [r.tag for r in trace.hidden],
        })

    first = per_seed[0]
    rows = []
    for i, tag in enumerate(first["tags"]):
        widths = np.array([p["widths"][i] for p in per_seed])
        logs = np.array([math.log(p["widths"][i] / p["widths"][0]) if p["widths"][i] > 0 else math.nan
                         for p in per_seed])
        rows.append({
            "scheme": scheme.value,
            "layer": i,
            "tag": tag,
            "mean_width": float(widths.mean()),
            "log_ratio": float(np.mean(logs)),
            "gap_ratio": float(np.mean([p["gaps"][i] for p in per_seed])),
            "upper_var": float(np.mean([p["variances"][i] for p in per_seed])),
        })
    return rows


def final_log_ratio(profile_rows: list, scheme) -> float:
    scheme = InitScheme(scheme).value
    rows = [r for r in profile_rows if r["scheme"] == scheme]
    return rows[-1]["log_ratio"]


def run_audit(cfg: RunConfig, out_dir) -> tuple:
    timer = Timer()
    audit = cfg.audit
    gains = difference_gain_table(audit.schemes, audit.fan_ins, audit.trials, audit.fan_out, cfg.train.seed)
    write_csv(out_dir / GAIN_FILE, gains)

    arch = cfg.arch if audit.use_arch else profile_arch(audit)
    profile = []
    for scheme in audit.schemes:
        rows = bound_profile(arch, scheme, audit.eps, audit.profile_seeds, audit.profile_batch,
                             cfg.init.residual_calibration)
        profile += rows
        logger.info(f"{InitScheme(scheme).value:>16} log(E(D_m)/E(D_0)) = {rows[-1]['log_ratio']:.3f}")
    write_csv(out_dir / PROFILE_FILE, profile)

    layers = arch_gain_table(arch, audit.schemes, audit.profile_seeds, cfg.init.residual_calibration)
    write_csv(out_dir / LAYER_GAIN_FILE, layers)

    logger.info(f"Audit written to {out_dir} in {timer.elapsed()}s")
    return gains, profile, layers
