"""Trial batching, aggregate reporting, and report serialization.

A report is a plain JSON document carrying everything needed to reproduce
the run bit for bit: the config fingerprint, the master seed, per-trial
outcomes and metric values, per-state success rates, and timing statistics.
Only the generated_at stamp varies between identical runs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .config import config_fingerprint, load_config
from .executor import derive_seed, run_service
from .fsm import NOMINAL_SEQUENCE
from .metrics import summarize_success
from .model import NoiseModel, RobotConfig, WorldModel

HUMAN_BASELINE_S = 9.0  # measured human time for the same fetch-and-serve task
REPORT_SCHEMA = "fetchsim-report@1"


@dataclass
class TrialRecord:
    index: int
    seed: int
    outcome: str
    total_time: float
    manhattan_length: float | None = None
    smoothness: float | None = None
    deviation_max: float | None = None
    deviation_avg: float | None = None


@dataclass
class EpisodeReport:
    schema: str
    request: str
    trials: int
    master_seed: int
    config_fingerprint: str
    per_state_rates: dict[str, float]
    overall_success_rate: float | None
    mean_total_time: float | None
    max_total_time: float | None
    human_baseline_s: float
    human_time_ratio: float | None
    trial_records: list[TrialRecord] = field(default_factory=list)
    generated_at: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "EpisodeReport":
        records = [TrialRecord(**r) for r in doc.pop("trial_records", [])]
        return cls(trial_records=records, **doc)


def run_trials(
    config_path,
    trials: int,
    seed: int,
    request: str = "cola",
) -> EpisodeReport:
    """Run `trials` independent episodes and aggregate the report.

    Trial seeds derive from (master seed, trial index); configuration
    errors surface before any trial runs.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    world, robot, noise = load_config(config_path)
    return run_trials_loaded(world, robot, noise, trials, seed, request)


def run_trials_loaded(
    world: WorldModel,
    robot: RobotConfig,
    noise: NoiseModel,
    trials: int,
    seed: int,
    request: str = "cola",
) -> EpisodeReport:
    records: list[TrialRecord] = []
    state_counts = {state.value: [0, 0] for state in NOMINAL_SEQUENCE}
    for i in range(trials):
        trial_seed = derive_seed(seed, i)
        episode = run_service(world, robot, noise, request, trial_seed)
        records.append(
            TrialRecord(
                index=i,
                seed=trial_seed,
                outcome=episode.outcome,
                total_time=episode.total_time,
                manhattan_length=episode.manhattan_length,
                smoothness=episode.smoothness,
                deviation_max=episode.deviation_max,
                deviation_avg=episode.deviation_avg,
            )
        )
        for name, (attempted, succeeded) in episode.state_attempts.items():
            state_counts[name][0] += attempted
            state_counts[name][1] += succeeded

    summary = summarize_success(
        (name, counts[0], counts[1]) for name, counts in state_counts.items()
    )
    times = [r.total_time for r in records if r.outcome == "ServiceDone"]
    mean_time = sum(times) / len(times) if times else None
    return EpisodeReport(
        schema=REPORT_SCHEMA,
        request=request,
        trials=trials,
        master_seed=seed,
        config_fingerprint=config_fingerprint(world, robot, noise),
        per_state_rates=summary.per_state,
        overall_success_rate=summary.overall,
        mean_total_time=mean_time,
        max_total_time=max(times) if times else None,
        human_baseline_s=HUMAN_BASELINE_S,
        human_time_ratio=(mean_time / HUMAN_BASELINE_S) if mean_time is not None else None,
        trial_records=records,
    )


def emit_report(report: EpisodeReport, path) -> None:
    """Write the report as JSON; parse_report reads it back to equal values."""
    doc = report.to_dict()
    if not doc.get("generated_at"):
        doc["generated_at"] = datetime.now(timezone.utc).isoformat()
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def parse_report(path) -> EpisodeReport:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"not a {REPORT_SCHEMA} document")
    return EpisodeReport.from_dict(doc)
