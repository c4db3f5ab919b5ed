"""Learning automata playing the two-level game with delayed information.

Each agent owns two automata: an action automaton (``p1`` or ``p2``) and a
group automaton (``p3`` or ``p4``, the probability of preferring the
coalition game).  A local score keeper rewards an agent from its own pure
decisions and the *aged* probabilities of the other agent; both automata of
an agent then learn from that single payoff.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from .game_core import GameError, MultiLevelGame, StateVector, _eta
from .trajectory import Trajectory

__all__ = [
    "Event",
    "LearningParams",
    "StageOutcome",
    "SimConfig",
    "EnsembleSummary",
    "automaton_step",
    "play_stage",
    "expected_increment",
    "member_seed",
    "run_simulation",
    "run_ensemble",
]

# uniforms consumed per stage, in order: action 1, group 1, action 2, group 2,
# payoff draw of agent 1, payoff draw of agent 2
DRAWS_PER_STAGE = 6
_CHUNK = 65536


class Event(enum.Enum):
    REWARD1 = "reward1"
    REWARD2 = "reward2"
    PENALTY1 = "penalty1"
    PENALTY2 = "penalty2"

    @classmethod
    def of(cls, strategy: int, rewarded: bool) -> "Event":
        if rewarded:
            return cls.REWARD1 if strategy == 1 else cls.REWARD2
        return cls.PENALTY1 if strategy == 1 else cls.PENALTY2


@dataclass(frozen=True)
class LearningParams:
    """Penalty ``alpha``, reward ``beta`` and step size ``theta``.

    The usual regime is ``0 < alpha < beta < 1`` and ``0 < theta <= 1``;
    pass ``unchecked=True`` to explore outside it.  Any values must still
    keep ``theta * beta`` and ``theta * alpha`` within [0, 1].
    """

    alpha: float = 0.02
    beta: float = 0.4
    theta: float = 0.1
    unchecked: bool = field(default=False, compare=False)

    def __post_init__(self):
        a, b, t = float(self.alpha), float(self.beta), float(self.theta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "theta", t)
        if not self.unchecked and not (0.0 < a < b < 1.0 and 0.0 < t <= 1.0):
            raise GameError(
                f"need 0 < alpha < beta < 1 and 0 < theta <= 1 "
                f"(alpha={a}, beta={b}, theta={t}); set unchecked=True to override"
            )
        if not (0.0 <= t * a <= 1.0 and 0.0 <= t * b <= 1.0):
            raise GameError("theta*alpha and theta*beta must lie in [0, 1]")

    def with_theta(self, theta: float) -> "LearningParams":
        return LearningParams(self.alpha, self.beta, theta, self.unchecked)


@dataclass(frozen=True)
class StageOutcome:
    actions: tuple[int, int]
    group_choices: tuple[bool, bool]
    payoffs: tuple[int, int]  # +1 unit gain, -1 unit loss

    @property
    def coalition_formed(self) -> bool:
        return self.group_choices[0] and self.group_choices[1]


@dataclass(frozen=True)
class SimConfig:
    game: MultiLevelGame
    params: LearningParams
    initial: StateVector = StateVector(0.5, 0.5, 0.5, 0.5)
    tau: int = 0
    horizon: int = 1000
    seed: int = 1
    ensemble_size: int = 1
    decimation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "initial", StateVector.of(self.initial))
        if int(self.tau) != self.tau or self.tau < 0:
            raise GameError(f"tau must be a nonnegative integer number of stages, got {self.tau!r}")
        if self.horizon < 0:
            raise GameError("horizon must be >= 0")
        if self.ensemble_size < 1:
            raise GameError("ensemble_size must be >= 1")
        if self.decimation < 1:
            raise GameError("decimation must be >= 1")
        object.__setattr__(self, "tau", int(self.tau))


def automaton_step(p: float, event: Event, params: LearningParams) -> float:
    """Linear reward-penalty update of the probability of strategy 1."""
    if not 0.0 <= p <= 1.0:
        raise GameError(f"p={p!r} is not a probability")
    a, b, th = params.alpha, params.beta, params.theta
    if event is Event.REWARD1:
        p = p + th * b * (1.0 - p)
    elif event is Event.REWARD2:
        p = p - th * b * p
    elif event is Event.PENALTY1:
        p = p - th * a * p
    elif event is Event.PENALTY2:
        p = p + th * a * (1.0 - p)
    else:
        raise GameError(f"unknown event {event!r}")
    return min(1.0, max(0.0, p))


def _stage_reward_probs(i, g1, j, g2, aged, game):
    """Score-keeper success probabilities for both agents.

    Agent 1's clustering is its own sampled preference times the aged group
    probability of agent 2; the opponent's action enters only through its
    aged distribution.  Symmetric for agent 2.
    """
    c1 = aged[3] if g1 else 0.0
    c2 = aged[2] if g2 else 0.0
    r1 = _eta(game, 0, c1, 1.0 if i == 1 else 0.0, aged[1])
    r2 = _eta(game, 1, c2, aged[0], 1.0 if j == 1 else 0.0)
    return r1, r2


def _apply(current, i, g1, j, g2, win1, win2, params):
    p1, p2, p3, p4 = current
    return StateVector(
        automaton_step(p1, Event.of(i, win1), params),
        automaton_step(p2, Event.of(j, win2), params),
        automaton_step(p3, Event.of(1 if g1 else 2, win1), params),
        automaton_step(p4, Event.of(1 if g2 else 2, win2), params),
    )


def play_stage(
    current: Sequence[float],
    aged: Sequence[float],
    game: MultiLevelGame,
    params: LearningParams,
    rng: np.random.Generator,
) -> tuple[StageOutcome, StateVector]:
    """Play one stage and update all four automata."""
    current = StateVector.of(current)
    aged = StateVector.of(aged)
    u = rng.random(DRAWS_PER_STAGE)
    i = 1 if u[0] < current.p1 else 2
    g1 = bool(u[1] < current.p3)
    j = 1 if u[2] < current.p2 else 2
    g2 = bool(u[3] < current.p4)
    r1, r2 = _stage_reward_probs(i, g1, j, g2, aged, game)
    win1, win2 = bool(u[4] < r1), bool(u[5] < r2)
    outcome = StageOutcome((i, j), (g1, g2), (1 if win1 else -1, 1 if win2 else -1))
    return outcome, _apply(current, i, g1, j, g2, win1, win2, params)


def expected_increment(
    current: Sequence[float],
    aged: Sequence[float],
    game: MultiLevelGame,
    params: LearningParams,
) -> np.ndarray:
    """Exact one-stage expectation of the state change.

    Enumerates all 16 joint decisions and the 4 payoff outcomes, weighting
    each by its probability; no sampling is involved.
    """
    current = StateVector.of(current)
    aged = StateVector.of(aged)
    p1, p2, p3, p4 = current
    total = np.zeros(4)
    base = np.array(current)
    for i, wi in ((1, p1), (2, 1.0 - p1)):
        for g1, wg1 in ((True, p3), (False, 1.0 - p3)):
            for j, wj in ((1, p2), (2, 1.0 - p2)):
                for g2, wg2 in ((True, p4), (False, 1.0 - p4)):
                    w = wi * wg1 * wj * wg2
                    if w == 0.0:
                        continue
                    r1, r2 = _stage_reward_probs(i, g1, j, g2, aged, game)
                    for win1, w1 in ((True, r1), (False, 1.0 - r1)):
                        for win2, w2 in ((True, r2), (False, 1.0 - r2)):
                            ww = w * w1 * w2
                            if ww == 0.0:
                                continue
                            nxt = _apply(current, i, g1, j, g2, win1, win2, params)
                            total += ww * (np.array(nxt) - base)
    return total


@numba.njit(cache=True)
def _step(p, action_one, win, ta, tb):
    if win:
        p = p + tb * (1.0 - p) if action_one else p - tb * p
    else:
        p = p - ta * p if action_one else p + ta * (1.0 - p)
    return min(1.0, max(0.0, p))


@numba.njit(cache=True)
def _run_chunk(u, ring, t0, tau, init, base, slope, ta, tb):
    # advances the ring buffer through len(u) stages starting at stage t0;
    # ring[t % (tau + 1)] holds the state at stage t
    n = u.shape[0]
    size = tau + 1
    out = np.empty((n, 4))
    for s in range(n):
        t = t0 + s
        cur = ring[t % size]
        if t >= tau:
            aged = ring[(t - tau) % size]
        else:
            aged = init
        a1 = u[s, 0] < cur[0]
        g1 = u[s, 1] < cur[2]
        a2 = u[s, 2] < cur[1]
        g2 = u[s, 3] < cur[3]
        c1 = aged[3] if g1 else 0.0
        c2 = aged[2] if g2 else 0.0
        # agent 1: own pure action, aged distribution of agent 2's action
        y = aged[1]
        if a1:
            r1 = y * (base[0] + c1 * slope[0]) + (1.0 - y) * (base[1] + c1 * slope[1])
        else:
            r1 = y * (base[2] + c1 * slope[2]) + (1.0 - y) * (base[3] + c1 * slope[3])
        x = aged[0]
        if a2:
            r2 = x * (base[4] + c2 * slope[4]) + (1.0 - x) * (base[6] + c2 * slope[6])
        else:
            r2 = x * (base[5] + c2 * slope[5]) + (1.0 - x) * (base[7] + c2 * slope[7])
        w1 = u[s, 4] < r1
        w2 = u[s, 5] < r2
        nxt = ring[(t + 1) % size]
        n1 = _step(cur[0], a1, w1, ta, tb)
        n2 = _step(cur[1], a2, w2, ta, tb)
        n3 = _step(cur[2], g1, w1, ta, tb)
        n4 = _step(cur[3], g2, w2, ta, tb)
        nxt[0] = n1
        nxt[1] = n2
        nxt[2] = n3
        nxt[3] = n4
        out[s, 0] = n1
        out[s, 1] = n2
        out[s, 2] = n3
        out[s, 3] = n4
    return out


def member_seed(seed: int, index: int) -> np.random.SeedSequence:
    """Seed of ensemble member ``index``: child ``index`` of ``SeedSequence(seed)``."""
    return np.random.SeedSequence(seed, spawn_key=(index,))


def _simulate(cfg: SimConfig, rng: np.random.Generator) -> Trajectory:
    base, slope = cfg.game._coeffs
    base = np.array(base)
    slope = np.array(slope)
    init = np.array(cfg.initial, dtype=float)
    ring = np.tile(init, (cfg.tau + 1, 1))
    ta = cfg.params.theta * cfg.params.alpha
    tb = cfg.params.theta * cfg.params.beta
    dec = cfg.decimation
    keep_t = [0]
    keep_s = [init.copy()]
    t = 0
    while t < cfg.horizon:
        n = min(_CHUNK, cfg.horizon - t)
        u = rng.random((n, DRAWS_PER_STAGE))
        states = _run_chunk(u, ring, t, cfg.tau, init, base, slope, ta, tb)
        stage = np.arange(t + 1, t + n + 1)
        mask = (stage % dec == 0) | (stage == cfg.horizon)
        keep_t.extend(stage[mask].tolist())
        keep_s.extend(states[mask])
        t += n
    meta = {"kind": "monte-carlo", "tau": cfg.tau, "horizon": cfg.horizon}
    return Trajectory(np.array(keep_t, dtype=float), np.array(keep_s), meta)


def run_simulation(cfg: SimConfig, rng: np.random.Generator | None = None) -> Trajectory:
    """One run of the stochastic process for ``cfg.horizon`` stages.

    The aged view at stage ``t`` is the state at stage ``t - tau``, or the
    initial state while ``t < tau``.  Bit-identical for identical ``cfg``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    traj = _simulate(cfg, rng)
    traj.metadata["seed"] = cfg.seed
    return traj


@dataclass
class EnsembleSummary:
    times: np.ndarray
    mean: np.ndarray  # (T, 4)
    var: np.ndarray  # (T, 4), population variance across members
    c_mean: np.ndarray  # (T,), mean of p3 * p4 across members
    size: int

    def mean_trajectory(self) -> Trajectory:
        return Trajectory(self.times, self.mean, {"kind": "ensemble-mean", "size": self.size})


def run_ensemble(cfg: SimConfig) -> EnsembleSummary:
    """Run ``cfg.ensemble_size`` independent members and summarize per stage.

    Member ``i`` draws from ``default_rng(member_seed(cfg.seed, i))``.
    """
    mean = m2 = c_mean = times = None
    for n in range(1, cfg.ensemble_size + 1):
        traj = _simulate(cfg, np.random.default_rng(member_seed(cfg.seed, n - 1)))
        x = traj.states
        if mean is None:
            times = traj.times
            mean = np.zeros_like(x)
            m2 = np.zeros_like(x)
            c_mean = np.zeros(len(x))
        delta = x - mean
        mean += delta / n
        m2 += delta * (x - mean)
        c_mean += (traj.c - c_mean) / n
    return EnsembleSummary(times, mean, m2 / cfg.ensemble_size, c_mean, cfg.ensemble_size)
