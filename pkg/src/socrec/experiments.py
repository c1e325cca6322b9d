"""Experiment harness: train/eval runs, ablations, robustness, sweeps.

Every run writes a resolved config echo, per-epoch loss components, the
final report and a checkpoint under `<out>/<task>/<timestamp>-<seed>/`.
Wall-clock numbers go to a separate timing file so the report artifacts
are byte-reproducible for a fixed spec and seed.
"""

import dataclasses
import itertools
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import data as data_mod
from .data import (DEFAULT_STRATA, build_dataset, inject_noise, load_dataset,
                   load_edges, stratify_by_degree)
from .eval import evaluate, evaluate_stratified, export_relevance_weights
from .model import load_checkpoint, save_checkpoint
from .objective import TrainConfig, VARIANTS
from .train import train_model

log = logging.getLogger(__name__)

DEFAULT_NOISE_RATIOS = (0.0, 0.1, 0.2, 0.3)


@dataclass
class ExperimentSpec:
    """Everything one experiment needs: data source, config, task knobs."""

    config: TrainConfig = field(default_factory=TrainConfig)
    dataset_dir: str = None
    interactions_path: str = None
    social_path: str = None
    split_seed: int = 0
    out_dir: str = "runs"
    task: str = "train"
    noise_ratios: tuple = DEFAULT_NOISE_RATIOS
    noise_seed: int = 1234
    sweep_axes: dict = field(default_factory=dict)
    eval_seed: int = 0
    strata: tuple = DEFAULT_STRATA
    sample: object = "all"
    threads: int = 1
    checkpoint: str = None
    split: str = "test"
    run_name: str = None

    def validate(self):
        if self.dataset_dir is None and self.interactions_path is None:
            raise ValueError("spec needs dataset_dir or interactions_path")
        if self.task == "sweep" and not self.sweep_axes:
            raise ValueError("sweep task needs at least one non-empty grid axis")


def load_spec_dataset(spec):
    if spec.dataset_dir:
        return load_dataset(spec.dataset_dir)
    inter = load_edges(spec.interactions_path, "interaction")
    soc = None
    if spec.social_path:
        soc = load_edges(spec.social_path, "social")
    else:
        soc = data_mod.SocialTable(edges=[])
    return build_dataset(inter, soc, split_seed=spec.split_seed)


def make_run_dir(spec, task=None):
    name = spec.run_name or f"{time.strftime('%Y%m%d-%H%M%S')}-{spec.config.seed}"
    path = os.path.join(spec.out_dir, task or spec.task, name)
    os.makedirs(path, exist_ok=True)
    return path


def config_lines(cfg):
    from .model import LEAKY_SLOPE

    out = []
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(str(x) for x in val)
        out.append(f"{f.name}={val}")
    out.append(f"leaky_slope={LEAKY_SLOPE}")  # fixed constant, echoed for provenance
    return out


def write_lines(path, lines):
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _train_and_report(ds, cfg, eval_seed, strata_bounds, run_dir, split="test"):
    """Shared train-evaluate-persist cell used by every task."""
    result = train_model(ds, cfg, eval_seed=eval_seed)
    strata = stratify_by_degree(ds, strata_bounds)
    report = evaluate_stratified(
        result.model, ds, strata, split=split, num_negatives=cfg.negatives,
        cutoffs=cfg.cutoffs, seed=eval_seed, social_fusion=cfg.social_fusion,
        metadata={"variant": cfg.variant, "seed": cfg.seed, "split": split},
    )
    os.makedirs(run_dir, exist_ok=True)
    write_lines(os.path.join(run_dir, "config"), config_lines(cfg))
    write_lines(os.path.join(run_dir, "history.txt"), result.history_lines())
    write_lines(os.path.join(run_dir, "timing.txt"),
                [f"{i} {t:.6f}" for i, t in enumerate(result.timing)] or ["# no epochs"])
    write_lines(os.path.join(run_dir, "report.dat"), report.to_lines())
    write_lines(os.path.join(run_dir, "report.txt"), [report.to_table()])
    save_checkpoint(result.model, os.path.join(run_dir, "checkpoint"),
                    config_lines(cfg))
    if result.aborted:
        write_lines(os.path.join(run_dir, "ABORTED"),
                    ["training diverged; checkpoint holds last good parameters"])
    return result, report


def run_train(spec):
    """Train once, evaluate on the requested split, persist artifacts."""
    spec.validate()
    ds = load_spec_dataset(spec)
    run_dir = make_run_dir(spec, "train")
    result, report = _train_and_report(ds, spec.config, spec.eval_seed,
                                       spec.strata, run_dir, spec.split)
    log.info("train run complete: %s", run_dir)
    return result, report, run_dir


def _load_and_encode_checkpoint(spec, ds):
    from .graph import build_interaction_laplacian, build_social_laplacian
    from .model import encode
    ms = load_checkpoint(spec.checkpoint)
    encode(ms, build_interaction_laplacian(ds), build_social_laplacian(ds),
           ms.num_layers if ms.num_layers else spec.config.layers,
           spec.config.agg)
    return ms


def run_eval(spec):
    """Evaluate an existing checkpoint on a dataset split."""
    if not spec.checkpoint:
        raise ValueError("eval task needs --checkpoint")
    ds = load_spec_dataset(spec)
    ms = _load_and_encode_checkpoint(spec, ds)
    report = evaluate(ms, ds, split=spec.split, num_negatives=spec.config.negatives,
                      cutoffs=spec.config.cutoffs, seed=spec.eval_seed,
                      social_fusion=spec.config.social_fusion,
                      metadata={"split": spec.split})
    run_dir = make_run_dir(spec, "eval")
    write_lines(os.path.join(run_dir, "report.dat"), report.to_lines())
    write_lines(os.path.join(run_dir, "report.txt"), [report.to_table()])
    return report, run_dir


def run_ablation(spec, variants=VARIANTS):
    """Train every variant on shared seeds/splits; failures stay isolated."""
    spec.validate()
    ds = load_spec_dataset(spec)
    run_dir = make_run_dir(spec, "ablation")

    def cell(variant):
        cfg = spec.config.with_overrides(variant=variant)
        try:
            _, report = _train_and_report(ds, cfg, spec.eval_seed, spec.strata,
                                          os.path.join(run_dir, variant),
                                          spec.split)
            return variant, report, None
        except Exception as err:  # per-variant isolation
            log.exception("variant %s failed", variant)
            return variant, None, err

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            cells = list(pool.map(cell, variants))
    else:
        cells = [cell(v) for v in variants]

    lines = ["# variant metric cutoff value"]
    table = {}
    for variant, report, err in cells:
        if err is not None:
            lines.append(f"{variant} error - -")
            table[variant] = None
            continue
        table[variant] = report
        for n in report.cutoffs:
            lines.append(f"{variant} hr {n} {report.hr[n]:.12g}")
            lines.append(f"{variant} ndcg {n} {report.ndcg[n]:.12g}")
    write_lines(os.path.join(run_dir, "ablation.dat"), lines)
    return table, run_dir


def run_robustness(spec):
    """Retrain per noise ratio; report metrics and relative degradation."""
    spec.validate()
    ds = load_spec_dataset(spec)
    run_dir = make_run_dir(spec, "robustness")
    reports = {}
    for ratio in spec.noise_ratios:
        noisy = inject_noise(ds, ratio, spec.noise_seed)
        sub = os.path.join(run_dir, f"ratio_{ratio:g}")
        _, report = _train_and_report(noisy, spec.config, spec.eval_seed,
                                      spec.strata, sub, spec.split)
        reports[ratio] = report

    base = reports.get(0.0) or reports[min(reports)]
    lines = ["# ratio metric cutoff value degradation"]
    for ratio in spec.noise_ratios:
        rep = reports[ratio]
        for n in rep.cutoffs:
            for metric, cur, ref in (("hr", rep.hr[n], base.hr[n]),
                                     ("ndcg", rep.ndcg[n], base.ndcg[n])):
                degr = 0.0 if ref == 0 else (ref - cur) / ref
                lines.append(f"{ratio:g} {metric} {n} {cur:.12g} {degr:.12g}")
    write_lines(os.path.join(run_dir, "robustness.dat"), lines)
    return reports, run_dir


def run_sweep(spec):
    """Cartesian grid over TrainConfig axes; emits axis/value/metric rows."""
    spec.validate()
    ds = load_spec_dataset(spec)
    run_dir = make_run_dir(spec, "sweep")
    axes = {k: list(v) for k, v in spec.sweep_axes.items() if v}
    if not axes:
        raise ValueError("sweep needs non-empty grid axes")
    names = sorted(axes)
    combos = list(itertools.product(*(axes[k] for k in names)))

    def cell(combo):
        overrides = dict(zip(names, combo))
        cfg = spec.config.with_overrides(**overrides)
        tag = "_".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in overrides.items())
        _, report = _train_and_report(ds, cfg, spec.eval_seed, spec.strata,
                                      os.path.join(run_dir, tag), spec.split)
        return overrides, report

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            cells = list(pool.map(cell, combos))
    else:
        cells = [cell(c) for c in combos]

    lines = ["# axes metric cutoff value"]
    for overrides, report in cells:
        tag = ",".join(f"{k}={overrides[k]}" for k in names)
        for n in report.cutoffs:
            lines.append(f"{tag} hr {n} {report.hr[n]:.12g}")
            lines.append(f"{tag} ndcg {n} {report.ndcg[n]:.12g}")
    write_lines(os.path.join(run_dir, "sweep.dat"), lines)
    return cells, run_dir


def run_case_study(spec):
    """Export learned pair-relevance weights for social ties."""
    ds = load_spec_dataset(spec)
    run_dir = make_run_dir(spec, "case_study")
    if spec.checkpoint:
        ms = _load_and_encode_checkpoint(spec, ds)
    else:
        result = train_model(ds, spec.config, eval_seed=spec.eval_seed)
        ms = result.model
        save_checkpoint(ms, os.path.join(run_dir, "checkpoint"),
                        config_lines(spec.config))
    export = export_relevance_weights(ms, ds, sample=spec.sample,
                                      seed=spec.eval_seed)
    write_lines(os.path.join(run_dir, "relevance_weights.txt"),
                export.to_lines() or ["# no ties"])
    return export, run_dir
