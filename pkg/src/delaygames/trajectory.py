"""Trajectory container and CSV emission shared by the simulators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

TRAJECTORY_HEADER = ("t", "p1", "p2", "p3", "p4", "c")


def fmt(x: float) -> str:
    """Nine significant digits, the precision used in every CSV."""
    return f"{float(x):.9g}"


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float).reshape(-1, 4)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def c(self) -> np.ndarray:
        return self.states[:, 2] * self.states[:, 3]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def decimate(self, every: int) -> "Trajectory":
        """Keep every ``every``-th sample; the last sample is always kept."""
        if every < 1:
            raise ValueError("decimation must be >= 1")
        if every == 1:
            return self
        idx = np.arange(0, len(self), every)
        if idx[-1] != len(self) - 1:
            idx = np.append(idx, len(self) - 1)
        return Trajectory(self.times[idx], self.states[idx], dict(self.metadata))


def write_comment_block(fh: IO[str], lines: Iterable[str]) -> None:
    for line in lines:
        fh.write(f"# {line}\n" if line else "#\n")


def write_trajectory_csv(traj: Trajectory, fh: IO[str], comments: Iterable[str] = ()) -> None:
    write_comment_block(fh, comments)
    fh.write(",".join(TRAJECTORY_HEADER) + "\n")
    for t, s, c in zip(traj.times, traj.states, traj.c):
        fh.write(",".join([fmt(t), *(fmt(x) for x in s), fmt(c)]) + "\n")


def write_phase_csv(xs, ys, fh: IO[str], comments: Iterable[str] = ()) -> None:
    write_comment_block(fh, comments)
    fh.write("x,y\n")
    for x, y in zip(xs, ys):
        fh.write(f"{fmt(x)},{fmt(y)}\n")


def read_trajectory_csv(fh: IO[str]) -> Trajectory:
    """Parse a trajectory CSV, ignoring ``#`` comment lines."""
    rows = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
    if not rows or tuple(rows[0].split(",")) != TRAJECTORY_HEADER:
        raise ValueError("not a trajectory CSV")
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]]).reshape(-1, 6)
    return Trajectory(data[:, 0], data[:, 1:5])
