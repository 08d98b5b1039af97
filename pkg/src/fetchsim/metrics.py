"""Trajectory quality metrics and episode success accounting.

Path length is the per-segment L1 (Manhattan) sum; smoothness is the mean
squared velocity integral 0.5 * int_0^1 ||dq/dt||^2 dt evaluated on a
time base normalized to [0, 1]; localization deviations are per-sample
Euclidean planar errors (max and mean) over a time-aligned pair of
estimated and ground-truth tracks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EePath:
    """Timestamped 3D positions of the end effector."""

    times: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or t.shape != (p.shape[0],):
            raise ValueError("need times (N,) and positions (N, 3)")
        if len(t) > 1 and not (np.diff(t) > 0).all():
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "positions", p)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class TrajectoryPair:
    """Time-aligned estimated and ground-truth planar tracks."""

    times: np.ndarray
    estimated: np.ndarray
    truth: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        est = np.asarray(self.estimated, dtype=float)
        tru = np.asarray(self.truth, dtype=float)
        if est.shape != tru.shape or est.ndim != 2 or est.shape[1] != 2:
            raise ValueError("estimated and truth must both be (N, 2)")
        if t.shape != (est.shape[0],):
            raise ValueError("times must match the track length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "estimated", est)
        object.__setattr__(self, "truth", tru)

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def align(cls, estimated, truth, tick: float) -> "TrajectoryPair":
        """Nearest-timestamp matching within tick/2, dropping unmatched samples.

        Both inputs are (N, 3) arrays of (t, x, y).
        """
        est = np.asarray(estimated, dtype=float)
        tru = np.asarray(truth, dtype=float)
        if est.ndim != 2 or est.shape[1] != 3 or tru.ndim != 2 or tru.shape[1] != 3:
            raise ValueError("tracks must be (N, 3) arrays of (t, x, y)")
        times_t = tru[:, 0]
        matched_t, matched_e, matched_g = [], [], []
        used = set()
        for row in est:
            idx = int(np.searchsorted(times_t, row[0]))
            best, best_dt = None, None
            for j in (idx - 1, idx):
                if 0 <= j < len(times_t):
                    dt = abs(times_t[j] - row[0])
                    if best is None or dt < best_dt:
                        best, best_dt = j, dt
            if best is None or best_dt > tick / 2.0 or best in used:
                continue
            used.add(best)
            matched_t.append(row[0])
            matched_e.append(row[1:])
            matched_g.append(tru[best, 1:])
        if not matched_t:
            return cls(np.empty(0), np.empty((0, 2)), np.empty((0, 2)))
        return cls(np.array(matched_t), np.vstack(matched_e), np.vstack(matched_g))


def path_length_manhattan(path: EePath) -> float:
    """Sum of per-segment L1 norms along the path."""
    if len(path) < 2:
        raise ValueError("path length needs at least 2 samples")
    deltas = np.diff(path.positions, axis=0)
    return float(np.abs(deltas).sum())


def smoothness_cost(path: EePath) -> float:
    """0.5 * int ||dq/dt||^2 dt on the duration-normalized time base.

    Velocities come from central finite differences (one-sided at the
    ends) and the integral from trapezoidal quadrature.
    """
    if len(path) < 2:
        raise ValueError("smoothness cost needs at least 2 samples")
    span = path.times[-1] - path.times[0]
    if span <= 0:
        raise ValueError("path must span positive time")
    tau = (path.times - path.times[0]) / span
    vel = np.empty_like(path.positions)
    vel[0] = (path.positions[1] - path.positions[0]) / (tau[1] - tau[0])
    vel[-1] = (path.positions[-1] - path.positions[-2]) / (tau[-1] - tau[-2])
    if len(path) > 2:
        dt = (tau[2:] - tau[:-2])[:, None]
        vel[1:-1] = (path.positions[2:] - path.positions[:-2]) / dt
    speed_sq = (vel * vel).sum(axis=1)
    return float(0.5 * np.trapezoid(speed_sq, tau))


def _deviations(pair: TrajectoryPair) -> np.ndarray:
    if len(pair) == 0:
        raise ValueError("empty trajectory pair")
    diff = pair.estimated - pair.truth
    return np.sqrt((diff * diff).sum(axis=1))


def deviation_max(pair: TrajectoryPair) -> float:
    """Largest per-sample Euclidean deviation between the tracks."""
    return float(_deviations(pair).max())


def deviation_avg(pair: TrajectoryPair) -> float:
    """Mean per-sample Euclidean deviation between the tracks."""
    return float(_deviations(pair).mean())


@dataclass(frozen=True)
class SuccessSummary:
    per_state: dict[str, float]
    overall: float | None


def summarize_success(records) -> SuccessSummary:
    """Per-state success rates Rs plus their product over attempted states.

    `records` is an iterable of (state, attempted, succeeded).  States with
    zero attempts are reported as absent; the overall rate is None when no
    state was attempted at all.
    """
    per_state: dict[str, float] = {}
    overall = None
    for state, attempted, succeeded in records:
        if succeeded < 0 or attempted < succeeded:
            raise ValueError(f"state {state}: need attempted >= succeeded >= 0")
        if attempted == 0:
            continue
        rate = succeeded / attempted
        per_state[str(state)] = rate
        overall = rate if overall is None else overall * rate
    return SuccessSummary(per_state=per_state, overall=overall)
