"""Episode traces: append-only line-delimited JSON with a schema header.

One JSON object per line.  First line is the header (schema version,
seed, config fingerprint, attack kind); then one record per tick; the
last line carries the terminal outcome.  Serialization is deterministic
so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1

TICK_FIELDS = {
    "step", "time_s", "x", "y", "heading", "speed", "yaw_rate", "phys_acc",
    "cues", "irs", "irs_ema", "dominant", "raw",
    "a_policy", "a_nominal", "shield", "alpha", "a_safeguarded",
    "u", "override", "effort", "arm_probs", "arm_scores",
    "reward", "progress", "burst_active",
}


@dataclass
class EpisodeTrace:
    header: dict
    records: list[dict] = field(default_factory=list)
    outcome: dict | None = None

    @classmethod
    def begin(cls, seed: int, config_fingerprint: str, attack_kind: str,
              expert_mode: str) -> "EpisodeTrace":
        return cls(header={
            "type": "header",
            "schema": "riskdrive-trace",
            "version": SCHEMA_VERSION,
            "seed": seed,
            "config_fingerprint": config_fingerprint,
            "attack": attack_kind,
            "expert": expert_mode,
        })

    def add(self, record: dict) -> None:
        missing = TICK_FIELDS - record.keys()
        if missing:
            raise ValueError(f"tick record missing fields: {sorted(missing)}")
        self.records.append(record)

    def finish(self, kind: str, step_count: int, final_time_s: float) -> None:
        self.outcome = {"type": "outcome", "kind": kind,
                        "step_count": step_count, "final_time_s": final_time_s}

    def to_lines(self) -> list[str]:
        if self.outcome is None:
            raise ValueError("trace not finished")
        lines = [json.dumps(self.header, sort_keys=True)]
        for i, rec in enumerate(self.records):
            lines.append(json.dumps({"type": "tick", **rec}, sort_keys=True))
        lines.append(json.dumps(self.outcome, sort_keys=True))
        return lines

    def write(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.to_lines()) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "EpisodeTrace":
        lines = Path(path).read_text().splitlines()
        header = json.loads(lines[0])
        if header.get("schema") != "riskdrive-trace":
            raise ValueError(f"{path}: not a trace file")
        if header.get("version") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported trace version")
        trace = cls(header=header)
        for line in lines[1:]:
            obj = json.loads(line)
            if obj.get("type") == "outcome":
                trace.outcome = obj
            else:
                obj.pop("type", None)
                trace.records.append(obj)
        if trace.outcome is None:
            raise ValueError(f"{path}: truncated trace (no outcome)")
        return trace


def load_traces(directory: str | Path) -> list[EpisodeTrace]:
    paths = sorted(Path(directory).glob("*.trace.jsonl"))
    return [EpisodeTrace.read(p) for p in paths]
