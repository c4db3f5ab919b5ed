"""Deterministic mean dynamics of the learning automata.

The expected one-stage change of the state is ``theta * W(p)``; recast in
continuous time it becomes ``dp/dt = theta * W`` where each player evaluates
its drift on its own view of the state (own components current, the other
agent's components aged by ``tau``).  With ``tau > 0`` this is a delay
differential equation, integrated here with a fixed-step RK4 scheme that
reads delayed values from a uniformly sampled history.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .automata import LearningParams
from .game_core import MultiLevelGame, StateVector, _reward_pair
from .trajectory import Trajectory

__all__ = [
    "ConvergenceError",
    "InsufficientDataError",
    "BracketError",
    "HistoryBuffer",
    "Thresholds",
    "OscillationVerdict",
    "drift",
    "delayed_views",
    "default_step",
    "integrate",
    "find_equilibrium",
    "classify_oscillation",
    "onset_horizon",
    "probe_start",
    "classify_delay",
    "observed_instability_delay",
    "Trajectory",
]


class ConvergenceError(RuntimeError):
    """Equilibrium search did not converge."""


class InsufficientDataError(ValueError):
    """Trajectory too short to classify."""


class BracketError(ValueError):
    """Both ends of a delay bracket behave the same way."""


def _drift_k(view, k: int, game: MultiLevelGame, alpha: float, beta: float) -> float:
    x = view[k - 1]
    c1, c2 = _reward_pair(view, game, k)
    xb = 1.0 - x
    return beta * x * xb * (c1 - c2) + alpha * (xb * xb * (1.0 - c2) - x * x * (1.0 - c1))


def delayed_views(p: Sequence[float], aged: Sequence[float]) -> tuple:
    """Views of players 1..4 when the other agent's components are ``aged``.

    Agent 1 (players 1 and 3) sees ``(p1, p2', p3, p4')``, agent 2 (players
    2 and 4) sees ``(p1', p2, p3', p4)``.
    """
    v13 = (p[0], aged[1], p[2], aged[3])
    v24 = (aged[0], p[1], aged[2], p[3])
    return (v13, v24, v13, v24)


def drift(
    p: Sequence[float],
    views: Sequence[Sequence[float]] | None,
    game: MultiLevelGame,
    params: LearningParams,
) -> np.ndarray:
    """Drift ``(W_1(p^1), ..., W_4(p^4))``, without the factor ``theta``.

    ``views[k-1]`` is player ``k``'s view; ``None`` means no delay.  Only the
    other agent's components of a view are read, own components come from
    ``p`` via the view itself, so callers must keep them consistent.
    """
    if views is None:
        views = (p, p, p, p)
    a, b = params.alpha, params.beta
    return np.array([_drift_k(views[k - 1], k, game, a, b) for k in (1, 2, 3, 4)])


def _rhs(p, aged, game, a, b, th):
    v13 = (p[0], aged[1], p[2], aged[3])
    v24 = (aged[0], p[1], aged[2], p[3])
    return (
        th * _drift_k(v13, 1, game, a, b),
        th * _drift_k(v24, 2, game, a, b),
        th * _drift_k(v13, 3, game, a, b),
        th * _drift_k(v24, 4, game, a, b),
    )


class HistoryBuffer:
    """Uniformly sampled past states with linear interpolation.

    Any time before ``t0`` maps to ``initial_state`` exactly.
    """

    def __init__(self, h: float, initial_state: Sequence[float], t0: float = 0.0):
        if h <= 0:
            raise ValueError("history step must be positive")
        self.h = float(h)
        self.t0 = float(t0)
        self.initial_state = tuple(float(x) for x in initial_state)
        self.samples: list[tuple] = []

    def append(self, state: Sequence[float]) -> None:
        self.samples.append(tuple(state))

    def __len__(self):
        return len(self.samples)

    def lookup(self, t: float) -> tuple:
        if t < self.t0:
            return self.initial_state
        s = (t - self.t0) / self.h
        n = round(s)
        if abs(s - n) < 1e-9:
            if n >= len(self.samples):
                raise IndexError(f"time {t} beyond stored history")
            return self.samples[n]
        i = math.floor(s)
        if i + 1 >= len(self.samples):
            raise IndexError(f"time {t} beyond stored history")
        f = s - i
        lo, hi = self.samples[i], self.samples[i + 1]
        return tuple(x + f * (y - x) for x, y in zip(lo, hi))


def default_step(tau: float) -> float:
    return min(0.5, tau / 64.0) if tau > 0 else 0.1


def _clamp(p):
    return tuple(0.0 if x < 0.0 else 1.0 if x > 1.0 else x for x in p)


def integrate(
    game: MultiLevelGame,
    params: LearningParams,
    initial: Sequence[float],
    tau: float = 0.0,
    t_max: float = 1000.0,
    h: float | None = None,
) -> Trajectory:
    """Fixed-step RK4 integration of ``dp/dt = theta * W`` with delayed views.

    ``h`` defaults to :func:`default_step`; with ``tau > 0`` it is reduced so
    that ``tau / h`` is an integer.  Delays below ``1e-9`` are treated as
    zero.  The state is clamped to the unit hypercube after every step.
    """
    initial = StateVector.of(initial)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if t_max < 0:
        raise ValueError("t_max must be nonnegative")
    if tau < 1e-9:
        tau = 0.0
    if h is None:
        h = default_step(tau)
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    if tau > 0:
        h = tau / math.ceil(tau / h - 1e-9)

    a, b, th = params.alpha, params.beta, params.theta
    n_steps = int(math.ceil(t_max / h - 1e-9))
    hist = HistoryBuffer(h, initial)
    p = tuple(initial)
    hist.append(p)
    hh = 0.5 * h
    for n in range(n_steps):
        t = n * h
        if tau > 0:
            d0 = hist.lookup(t - tau)
            dm = hist.lookup(t + hh - tau)
            d1 = hist.lookup(t + h - tau)
        else:
            d0 = dm = d1 = None
        k1 = _rhs(p, d0 or p, game, a, b, th)
        q = tuple(x + hh * k for x, k in zip(p, k1))
        k2 = _rhs(q, dm or q, game, a, b, th)
        q = tuple(x + hh * k for x, k in zip(p, k2))
        k3 = _rhs(q, dm or q, game, a, b, th)
        q = tuple(x + h * k for x, k in zip(p, k3))
        k4 = _rhs(q, d1 or q, game, a, b, th)
        p = _clamp(
            x + h / 6.0 * (u + 2.0 * v + 2.0 * w + z)
            for x, u, v, w, z in zip(p, k1, k2, k3, k4)
        )
        hist.append(p)

    times = np.arange(len(hist)) * h
    meta = {
        "kind": "dde",
        "game": game.id,
        "alpha": a,
        "beta": b,
        "theta": th,
        "tau": tau,
        "h": h,
        "t_max": t_max,
    }
    return Trajectory(times, np.array(hist.samples), meta)


def _undelayed_W(p, game, a, b):
    return np.array([_drift_k(p, k, game, a, b) for k in (1, 2, 3, 4)])


def _fd_jacobian(p, game, a, b, eps=1e-7):
    J = np.empty((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = eps
        J[:, j] = (_undelayed_W(p + e, game, a, b) - _undelayed_W(p - e, game, a, b)) / (2 * eps)
    return J


def _newton(p, game, a, b, tol, max_iter):
    w = _undelayed_W(p, game, a, b)
    res = np.max(np.abs(w))
    for _ in range(max_iter):
        if res < tol:
            break
        J = _fd_jacobian(p, game, a, b)
        # lstsq: some games have a continuum of equilibria (singular J)
        dp = np.linalg.lstsq(J, -w, rcond=None)[0]
        lam = 1.0
        while lam > 1e-4:
            cand = np.clip(p + lam * dp, 0.0, 1.0)
            wc = _undelayed_W(cand, game, a, b)
            rc = np.max(np.abs(wc))
            if rc < res:
                p, w, res = cand, wc, rc
                break
            lam *= 0.5
        else:
            break
    return p, res


def find_equilibrium(
    game: MultiLevelGame,
    params: LearningParams,
    initial: Sequence[float] = (0.5, 0.5, 0.5, 0.5),
    *,
    flow_tol: float = 1e-10,
    tol: float = 1e-12,
    max_flow_time: float = 2e5,
    max_newton: int = 50,
) -> StateVector:
    """Zero of the undelayed drift reached from ``initial``.

    Follows the flow of ``W`` (the equilibrium does not depend on ``theta``)
    until the drift falls below ``flow_tol``, then polishes with damped
    Newton steps on a central-difference Jacobian.  Newton is also tried
    early, every few hundred flow steps once the drift is below 1e-6,
    because flows into a corner of the hypercube can crawl.  Bistable games
    resolve by basin.
    """
    a, b = params.alpha, params.beta
    p = np.array(StateVector.of(initial), dtype=float)
    h = 1.0
    steps = int(max_flow_time / h)
    for n in range(steps):
        w = _undelayed_W(p, game, a, b)
        res = np.max(np.abs(w))
        if res < flow_tol:
            break
        if n % 250 == 249 and res < 1e-6:
            cand, cres = _newton(p, game, a, b, tol, max_newton)
            if cres < tol:
                return StateVector(*(float(x) for x in cand))
        k1 = w
        k2 = _undelayed_W(p + 0.5 * h * k1, game, a, b)
        k3 = _undelayed_W(p + 0.5 * h * k2, game, a, b)
        k4 = _undelayed_W(p + h * k3, game, a, b)
        p = np.clip(p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4), 0.0, 1.0)

    p, res = _newton(p, game, a, b, tol, max_newton)
    if res >= tol:
        raise ConvergenceError(f"no equilibrium found from {tuple(initial)}: |W|={res:.3g}")
    return StateVector(*(float(x) for x in p))


@dataclass(frozen=True)
class Thresholds:
    converged_amplitude: float = 1e-4
    converged_motion: float = 1e-6
    persistent_amplitude: float = 1e-3
    decay_ratio: float = 0.98
    min_samples: int = 16


@dataclass(frozen=True)
class OscillationVerdict:
    kind: str  # converged | damped_oscillatory | persistent_oscillatory | bounded_nonperiodic
    amplitude: float
    window: tuple[float, float]
    first_amplitude: float = 0.0
    group_amplitude: float = 0.0

    @property
    def unstable(self) -> bool:
        return self.kind in ("persistent_oscillatory", "bounded_nonperiodic")


def classify_oscillation(traj: Trajectory, thresholds: Thresholds = Thresholds()) -> OscillationVerdict:
    """Classify the final half of ``traj`` from the peak-to-peak amplitude of ``p1``.

    The final half is split into two windows; the ratio of their amplitudes
    separates decaying from sustained oscillation.  The group amplitude
    (``p3``) is recorded but does not affect the verdict.
    """
    n = len(traj)
    start = n // 2
    if n - start < thresholds.min_samples:
        raise InsufficientDataError(f"need at least {2 * thresholds.min_samples} samples, got {n}")
    mid = start + (n - start) // 2
    x = traj.states[:, 0]
    amp1 = float(np.ptp(x[start:mid + 1]))
    amp2 = float(np.ptp(x[mid:]))
    group = float(np.ptp(traj.states[mid:, 2]))
    window = (float(traj.times[start]), float(traj.times[-1]))

    dt = np.diff(traj.times[mid:])
    motion = float(np.max(np.abs(np.diff(traj.states[mid:], axis=0)) / dt[:, None])) if len(dt) else 0.0

    if amp2 < thresholds.converged_amplitude and motion < thresholds.converged_motion:
        kind = "converged"
    elif amp2 >= thresholds.persistent_amplitude and amp2 >= thresholds.decay_ratio * amp1:
        kind = "persistent_oscillatory"
    elif amp2 < thresholds.decay_ratio * amp1:
        kind = "damped_oscillatory"
    else:
        kind = "bounded_nonperiodic"
    return OscillationVerdict(kind, amp2, window, amp1, group)


def onset_horizon(tau: float) -> float:
    """Integration length used for a delay probe."""
    return max(5000.0, 50.0 * tau)


def classify_delay(
    game: MultiLevelGame,
    params: LearningParams,
    tau: float,
    initial: Sequence[float] | None = None,
    thresholds: Thresholds = Thresholds(),
) -> OscillationVerdict:
    """Verdict of a single delay probe (see :func:`probe_start`)."""
    initial = probe_start(game, params, initial)
    traj = integrate(game, params, initial, tau=tau, t_max=onset_horizon(tau))
    return classify_oscillation(traj, thresholds)


def _probe(game, params, initial, tau, thresholds):
    traj = integrate(game, params, initial, tau=tau, t_max=onset_horizon(tau))
    return classify_oscillation(traj, thresholds)


PROBE_OFFSET = 0.01


def probe_start(game: MultiLevelGame, params: LearningParams, initial: Sequence[float] | None = None) -> StateVector:
    """Start state for delay probes.

    Given ``initial`` it is used as is.  Otherwise the equilibrium reached
    from the centre of the hypercube is shifted by ``PROBE_OFFSET`` in every
    component: far-off starts can lock onto a large cycle that coexists with
    a still-stable equilibrium, which would understate the onset.
    """
    if initial is not None:
        return StateVector.of(initial)
    p = find_equilibrium(game, params)
    return StateVector(*(min(1.0, x + PROBE_OFFSET) for x in p))


def observed_instability_delay(
    game: MultiLevelGame,
    params: LearningParams,
    initial: Sequence[float] | None = None,
    tau_range: tuple[float, float] = (10.0, 400.0),
    tolerance: float = 1.0,
    thresholds: Thresholds = Thresholds(),
) -> float:
    """Smallest delay giving sustained oscillation, found by bisection.

    ``tau_range`` must bracket the transition: the low end settles (converged
    or damped) and the high end does not.  Every probe starts from
    :func:`probe_start` with a constant history and runs for
    :func:`onset_horizon`.
    """
    initial = probe_start(game, params, initial)
    lo, hi = map(float, tau_range)
    if not 0 <= lo < hi:
        raise BracketError(f"invalid delay range {tau_range!r}")
    v_lo = _probe(game, params, initial, lo, thresholds) if lo > 0 else None
    v_hi = _probe(game, params, initial, hi, thresholds)
    if (v_lo is not None and v_lo.unstable) or not v_hi.unstable:
        raise BracketError(
            f"delays {lo} and {hi} do not bracket the onset "
            f"({v_lo.kind if v_lo else 'undelayed'} / {v_hi.kind})"
        )
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if _probe(game, params, initial, mid, thresholds).unstable:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
