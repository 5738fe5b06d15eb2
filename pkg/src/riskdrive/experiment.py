"""Seeded experiment orchestration: train / eval / attack-eval / ablation,
clean-scan OOD fitting, trace persistence, and report emission.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .bandit import BanditArbiter
from .config import RunConfig
from .episode import EpisodeHooks, run_episode
from .expert import expert_action
from .metrics import MetricsReport, compute_metrics, format_table
from .risk import OodModel, fit_ood_model
from .sac import SacLearner
from .trace import EpisodeTrace, load_traces
from .train import TrainStats, learner_policy, train_loop
from .world import (EgoAction, build_observation, make_rng, raycast_lidar,
                    rate_limit, reset_episode, step_dynamics)

log = logging.getLogger("riskdrive.experiment")

ABLATION_VARIANTS = (
    ("wo_curvature_cue", {"irs": {"disable_curv": True}}),
    ("wo_ttc_cue", {"irs": {"disable_ttc": True}}),
    ("wo_ood_cue", {"irs": {"disable_ood": True}}),
    ("wo_bandit_fixed", {"bandit": {"fixed_shield": "brake_bias"}}),
    ("wo_weights_uniform", {"irs": {"uniform_weights": True}}),
    ("wo_shield_penalty", {"train": {"no_shield_penalty": True}}),
)


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    out = copy.deepcopy(cfg)
    for section, values in overrides.items():
        target = getattr(out, section)
        for key, value in values.items():
            setattr(target, key, value)
    return out.validate()


def collect_clean_scans(cfg: RunConfig, seeds: list[int],
                        ticks_per_seed: int = 300) -> np.ndarray:
    """Drive the scripted controller on clean (attack-free) scenarios and
    record raw scans for the OOD fit."""
    clean = apply_overrides(cfg, {"attack": {"kind": "none"}})
    scans = []
    for seed in seeds:
        world = reset_episode(seed, clean.scenario, clean.vehicle, clean.lidar)
        prev = None
        for step in range(ticks_per_seed):
            ranges = raycast_lidar(world)
            scans.append(ranges)
            obs = build_observation(world, ranges, clean.irs.v_floor,
                                    clean.irs.eps_closing)
            a = expert_action(world, obs, clean.expert)
            a = rate_limit(a, prev, clean.vehicle)
            prev = a
            step_dynamics(world, a, clean.vehicle.dt)
            if world.route.project(world.ego.x, world.ego.y)[0] \
                    >= world.route.length - 5.0:
                break
    return np.stack(scans)


def fit_ood(cfg: RunConfig, seeds: list[int], out_path: Path,
            ticks_per_seed: int = 300) -> OodModel:
    scans = collect_clean_scans(cfg, seeds, ticks_per_seed)
    if len(scans) < 200:
        raise ValueError(f"only {len(scans)} clean scans; need at least 200")
    model = fit_ood_model(scans)
    model.save(out_path)
    return model


@dataclass
class ExperimentResult:
    report: Optional[MetricsReport]
    traces: list[EpisodeTrace] = field(default_factory=list)
    train_stats: dict = field(default_factory=dict)
    failed_seeds: list[int] = field(default_factory=list)
    variants: dict = field(default_factory=dict)


def run_eval_episodes(cfg: RunConfig, learner: Optional[SacLearner],
                      ood_model: Optional[OodModel], seeds: list[int],
                      episodes_per_seed: int, out_dir: Optional[Path] = None,
                      bandit_state: Optional[dict] = None,
                      ) -> list[EpisodeTrace]:
    """Deterministic-policy evaluation episodes, one trace per episode."""
    if episodes_per_seed <= 0 or not seeds:
        raise ValueError("evaluation needs at least one seed and episode")
    traces = []
    for seed in seeds:
        rng_policy = make_rng(seed, "policy")
        if learner is not None:
            learner.normalizer.frozen = True
            policy = learner_policy(learner, rng_policy, deterministic=True)
        else:
            def policy(obs, world):
                return expert_action(world, obs, cfg.expert)
        for ep in range(episodes_per_seed):
            bandit = BanditArbiter(cfg.bandit, make_rng(seed * 997 + ep, "bandit"))
            if bandit_state:
                bandit.state.load_dict(bandit_state)
            result = run_episode(cfg, seed * 1000 + ep, policy,
                                 ood_model=ood_model, bandit=bandit)
            traces.append(result.trace)
            if out_dir is not None:
                out_dir.mkdir(parents=True, exist_ok=True)
                result.trace.write(
                    out_dir / f"ep_{seed:04d}_{ep:04d}.trace.jsonl")
    return traces


def run_experiment(mode: str, cfg: RunConfig, seeds: list[int],
                   workdir: Path, episodes_per_seed: int = 10,
                   checkpoint: Optional[Path] = None,
                   ood_path: Optional[Path] = None) -> ExperimentResult:
    """Top-level entry for the CLI modes."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    ood_model = None
    if ood_path is not None and Path(ood_path).exists():
        ood_model = OodModel.load(ood_path)
    elif mode in ("eval", "attack", "ablate"):
        ood_model = fit_ood(cfg, seeds[:2] or [0], workdir / "ood_model.json")

    if mode == "train":
        return _run_train(cfg, seeds, workdir, ood_model)
    if mode in ("eval", "attack"):
        if mode == "eval":
            cfg = apply_overrides(cfg, {"attack": {"kind": "none"}})
        elif cfg.attack.kind == "none":
            raise ValueError("attack mode needs attack.kind = can or lidar")
        learner = None
        bandit_state = None
        if checkpoint is not None:
            learner, extra = SacLearner.load(checkpoint)
            bandit_state = extra.get("bandit")
        traces = run_eval_episodes(cfg, learner, ood_model, seeds,
                                   episodes_per_seed, workdir / "traces",
                                   bandit_state)
        report = compute_metrics(traces, attacked=(mode == "attack"))
        write_report(report, workdir, mode)
        return ExperimentResult(report=report, traces=traces)
    if mode == "ablate":
        return _run_ablation(cfg, seeds, workdir, episodes_per_seed,
                             checkpoint, ood_model)
    raise ValueError(f"unknown mode {mode!r}")


def _run_train(cfg: RunConfig, seeds: list[int], workdir: Path,
               ood_model: Optional[OodModel]) -> ExperimentResult:
    stats_by_seed = {}
    failed = []
    for seed in seeds:
        seed_dir = workdir / f"seed_{seed}"
        try:
            _, _, stats = train_loop(cfg, seed, seed_dir, ood_model)
            stats_by_seed[seed] = stats.to_dict()
        except Exception:
            log.exception("training seed %d failed", seed)
            failed.append(seed)
    summary = {
        "mode": "train",
        "config_fingerprint": cfg.fingerprint(),
        "seeds": stats_by_seed,
        "failed_seeds": failed,
        "tsv_train_mean": float(np.mean(
            [s["tsv_train"] for s in stats_by_seed.values()]))
        if stats_by_seed else None,
        "tdu_total": sum(s["ticks"] for s in stats_by_seed.values()),
    }
    (workdir / "train_report.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2))
    return ExperimentResult(report=None, train_stats=summary,
                            failed_seeds=failed)


def _run_ablation(cfg: RunConfig, seeds: list[int], workdir: Path,
                  episodes_per_seed: int, checkpoint: Optional[Path],
                  ood_model: Optional[OodModel]) -> ExperimentResult:
    """One row per single-switch variant plus the full system."""
    rows = {}
    variants = [("full", {})] + list(ABLATION_VARIANTS)
    for name, overrides in variants:
        variant_cfg = apply_overrides(cfg, overrides)
        learner = None
        bandit_state = None
        if checkpoint is not None:
            learner, extra = SacLearner.load(checkpoint)
            bandit_state = extra.get("bandit")
        traces = run_eval_episodes(variant_cfg, learner, ood_model, seeds,
                                   episodes_per_seed,
                                   workdir / "traces" / name, bandit_state)
        attacked = variant_cfg.attack.kind != "none"
        rows[name] = compute_metrics(traces, attacked=attacked).to_dict()
    payload = {"mode": "ablate", "config_fingerprint": cfg.fingerprint(),
               "rows": rows}
    (workdir / "ablation_report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=2))
    return ExperimentResult(report=None, variants=rows)


def write_report(report: MetricsReport, workdir: Path, title: str) -> None:
    (workdir / "report.json").write_text(
        json.dumps(report.to_dict(), sort_keys=True, indent=2))
    (workdir / "report.txt").write_text(format_table(report, title) + "\n")


def report_from_traces(trace_dir: Path, workdir: Path) -> MetricsReport:
    traces = load_traces(trace_dir)
    if not traces:
        raise ValueError(f"no traces found under {trace_dir}")
    Path(workdir).mkdir(parents=True, exist_ok=True)
    attacked = traces[0].header["attack"] != "none"
    report = compute_metrics(traces, attacked=attacked)
    write_report(report, workdir, "report")
    return report
