"""Episode-aggregated metrics computed from raw traces.

All metrics are reproducible from trace files alone; attack success is
reconstructed from the per-tick burst flags and the terminal event.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .trace import EpisodeTrace

COMFORT_BOUND_MPS2 = 2.5
ATTACK_SUCCESS_WINDOW_S = 3.0


@dataclass
class MetricsReport:
    tsr: float
    tr_mean: float
    tr_std: float
    tsv_mean: float
    tsv_std: float
    dr: float
    dra: Optional[float] = None
    asr: Optional[float] = None
    tsv_train: Optional[float] = None
    tdu: Optional[int] = None
    episodes: int = 0
    per_seed: dict = field(default_factory=dict)
    config_fingerprint: str = ""

    def to_dict(self) -> dict:
        return {
            "tsr": self.tsr, "tr_mean": self.tr_mean, "tr_std": self.tr_std,
            "tsv_mean": self.tsv_mean, "tsv_std": self.tsv_std, "dr": self.dr,
            "dra": self.dra, "asr": self.asr,
            "tsv_train": self.tsv_train, "tdu": self.tdu,
            "episodes": self.episodes, "per_seed": self.per_seed,
            "config_fingerprint": self.config_fingerprint,
        }


def burst_windows(trace: EpisodeTrace) -> list[tuple[float, float]]:
    """Contiguous burst-active spans as (start_time, end_time)."""
    windows = []
    start = None
    last = None
    for rec in trace.records:
        if rec["burst_active"]:
            if start is None:
                start = rec["time_s"]
            last = rec["time_s"]
        elif start is not None:
            windows.append((start, last))
            start = None
    if start is not None:
        windows.append((start, last))
    return windows


def trace_attack_success(trace: EpisodeTrace,
                         window_s: float = ATTACK_SUCCESS_WINDOW_S) -> bool:
    """Collision/off-road within [burst start, burst end + window]."""
    if trace.outcome["kind"] not in ("collision", "off_road"):
        return False
    t_event = trace.outcome["final_time_s"]
    return any(start <= t_event <= end + window_s
               for start, end in burst_windows(trace))


def episode_violations(trace: EpisodeTrace) -> int:
    return 1 if trace.outcome["kind"] in ("collision", "off_road") else 0


def episode_return(trace: EpisodeTrace) -> float:
    return float(sum(rec["reward"] for rec in trace.records))


def episode_takeover(trace: EpisodeTrace) -> bool:
    return any(rec["override"] for rec in trace.records)


def compute_metrics(traces: list[EpisodeTrace], attacked: bool,
                    tsv_train: Optional[float] = None,
                    tdu: Optional[int] = None,
                    comfort_bound: float = COMFORT_BOUND_MPS2) -> MetricsReport:
    if not traces:
        raise ValueError("no traces to aggregate")
    kinds = {t.header["attack"] != "none" for t in traces}
    if len(kinds) > 1:
        raise ValueError("mixed attacked and unattacked traces")
    if kinds != {attacked}:
        raise ValueError("trace set does not match the attacked flag")

    returns = np.array([episode_return(t) for t in traces])
    violations = np.array([episode_violations(t) for t in traces], float)
    goals = np.array([t.outcome["kind"] == "goal" for t in traces], float)
    total_ticks = sum(len(t.records) for t in traces)
    harsh = sum(sum(abs(rec["phys_acc"]) > comfort_bound for rec in t.records)
                for t in traces)

    per_seed: dict = {}
    for t in traces:
        seed = t.header["seed"]
        row = per_seed.setdefault(seed, {"episodes": 0, "goals": 0,
                                         "violations": 0, "return_sum": 0.0})
        row["episodes"] += 1
        row["goals"] += int(t.outcome["kind"] == "goal")
        row["violations"] += episode_violations(t)
        row["return_sum"] += episode_return(t)

    n = len(traces)
    report = MetricsReport(
        tsr=float(goals.mean()),
        tr_mean=float(returns.mean()),
        tr_std=float(returns.std(ddof=1)) if n >= 2 else 0.0,
        tsv_mean=float(violations.mean()),
        tsv_std=float(violations.std(ddof=1)) if n >= 2 else 0.0,
        dr=harsh / total_ticks if total_ticks else 0.0,
        tsv_train=tsv_train, tdu=tdu,
        episodes=n, per_seed=per_seed,
        config_fingerprint=traces[0].header["config_fingerprint"],
    )
    if attacked:
        report.dra = float(np.mean([episode_takeover(t) for t in traces]))
        report.asr = float(np.mean([trace_attack_success(t) for t in traces]))
    return report


def format_table(report: MetricsReport, title: str = "metrics") -> str:
    rows = [("TSR", f"{report.tsr:.3f}"),
            ("TR", f"{report.tr_mean:.2f} +/- {report.tr_std:.2f}"),
            ("TSV", f"{report.tsv_mean:.3f} +/- {report.tsv_std:.3f}"),
            ("DR", f"{report.dr:.4f}")]
    if report.dra is not None:
        rows.append(("DRA", f"{report.dra:.3f}"))
    if report.asr is not None:
        rows.append(("ASR", f"{report.asr:.3f}"))
    if report.tsv_train is not None:
        rows.append(("TSV_train", f"{report.tsv_train:.1f}"))
    if report.tdu is not None:
        rows.append(("TDU", str(report.tdu)))
    rows.append(("episodes", str(report.episodes)))
    width = max(len(k) for k, _ in rows)
    lines = [f"== {title} =="]
    lines += [f"{k.ljust(width)}  {v}" for k, v in rows]
    return "\n".join(lines)
