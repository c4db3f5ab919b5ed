"""Two-level stochastic bimatrix games and their payoff mathematics.

Entries of a stochastic bimatrix are probabilities of a unit gain for each
player at an action pair; a unit loss occurs otherwise.  A multi-level game
pairs a coalition game ``A`` with a default game ``B``.  Agents play ``A``
only when both prefer it, which induces an average game weighted by the
clustering parameter ``c = p3 * p4``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

__all__ = [
    "GameError",
    "StochasticBimatrix",
    "MultiLevelGame",
    "StateVector",
    "average_game",
    "expected_payoff",
    "reward_probability",
    "builtin_game",
    "load_game",
    "dump_game",
]

_DIST_TOL = 1e-12


class GameError(ValueError):
    """Invalid game data or an argument outside its domain."""


def _check_prob(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise GameError(f"{name}={x!r} is not a probability")
    return x


def _as_matrix(m, name: str) -> np.ndarray:
    arr = np.array(m, dtype=float)
    if arr.shape != (2, 2):
        raise GameError(f"{name} must be 2x2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
        raise GameError(f"{name} entries must lie in [0, 1]")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StochasticBimatrix:
    """Unit-gain probabilities ``d1[i, j]`` and ``d2[i, j]`` for the two players.

    Row index is player 1's action, column index is player 2's action
    (0-based here, 1-based in the usual game notation).
    """

    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "d1", _as_matrix(self.d1, "d1"))
        object.__setattr__(self, "d2", _as_matrix(self.d2, "d2"))

    def __eq__(self, other):
        if not isinstance(other, StochasticBimatrix):
            return NotImplemented
        return np.array_equal(self.d1, other.d1) and np.array_equal(self.d2, other.d2)

    def __hash__(self):
        return hash((self.d1.tobytes(), self.d2.tobytes()))

    def player(self, k: int) -> np.ndarray:
        """Matrix of player ``k`` (1 or 2)."""
        if k == 1:
            return self.d1
        if k == 2:
            return self.d2
        raise GameError(f"player index must be 1 or 2, got {k!r}")

    @property
    def g1(self) -> np.ndarray:
        """Scaled payoff ``2 d - 1`` in [-1, 1] for player 1."""
        return 2.0 * self.d1 - 1.0

    @property
    def g2(self) -> np.ndarray:
        return 2.0 * self.d2 - 1.0

    @cached_property
    def flat(self) -> tuple[float, ...]:
        # (d1_11, d1_12, d1_21, d1_22, d2_11, d2_12, d2_21, d2_22) as python floats
        return tuple(float(x) for x in np.concatenate([self.d1.ravel(), self.d2.ravel()]))


@dataclass(frozen=True)
class MultiLevelGame:
    """Coalition game ``A`` and default game ``B``."""

    A: StochasticBimatrix
    B: StochasticBimatrix
    id: int | str | None = None

    @cached_property
    def _coeffs(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        # entries of D(c) = B + c (A - B), split into intercept and slope
        a, b = self.A.flat, self.B.flat
        return b, tuple(x - y for x, y in zip(a, b))


class StateVector(NamedTuple):
    """Strategy probabilities: actions ``p1, p2`` and group preferences ``p3, p4``."""

    p1: float
    p2: float
    p3: float
    p4: float

    @classmethod
    def of(cls, values: Sequence[float]) -> "StateVector":
        """Build a validated state from any length-4 sequence."""
        vals = [float(v) for v in values]
        if len(vals) != 4:
            raise GameError(f"state vector needs 4 components, got {len(vals)}")
        for n, v in enumerate(vals, 1):
            _check_prob(v, f"p{n}")
        return cls(*vals)

    @property
    def c(self) -> float:
        """Clustering parameter: probability that both agents prefer ``A``."""
        return self.p3 * self.p4


def average_game(game: MultiLevelGame, c: float) -> StochasticBimatrix:
    """Induced game ``c A + (1 - c) B``."""
    c = _check_prob(c, "c")
    return StochasticBimatrix(
        c * game.A.d1 + (1.0 - c) * game.B.d1,
        c * game.A.d2 + (1.0 - c) * game.B.d2,
    )


def _check_dist(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (2,) or arr.min() < 0.0 or abs(arr.sum() - 1.0) > _DIST_TOL:
        raise GameError(f"{name} is not a distribution over two actions: {v!r}")
    return arr


def expected_payoff(D: StochasticBimatrix, p1vec, p2vec, k: int) -> float:
    """Value of the game for player ``k``: ``p1vec @ D^k @ p2vec``."""
    x = _check_dist(p1vec, "p1vec")
    y = _check_dist(p2vec, "p2vec")
    return float(x @ D.player(k) @ y)


def _eta(game: MultiLevelGame, player: int, c: float, x: float, y: float) -> float:
    """Unchecked value for ``player`` (0 or 1) of the average game at ``c``.

    ``x`` and ``y`` are the probabilities of action 1 for players 1 and 2.
    """
    base, slope = game._coeffs
    o = 4 * player
    d11 = base[o] + c * slope[o]
    d12 = base[o + 1] + c * slope[o + 1]
    d21 = base[o + 2] + c * slope[o + 2]
    d22 = base[o + 3] + c * slope[o + 3]
    return x * (y * d11 + (1.0 - y) * d12) + (1.0 - x) * (y * d21 + (1.0 - y) * d22)


def _reward_pair(view: Sequence[float], game: MultiLevelGame, k: int) -> tuple[float, float]:
    """Reward probabilities ``(C_1^k, C_2^k)`` on ``view`` without validation."""
    v1, v2, v3, v4 = view
    if k == 1:
        c = v3 * v4
        return _eta(game, 0, c, 1.0, v2), _eta(game, 0, c, 0.0, v2)
    if k == 2:
        c = v3 * v4
        return _eta(game, 1, c, v1, 1.0), _eta(game, 1, c, v1, 0.0)
    if k == 3:
        return _eta(game, 0, v4, v1, v2), _eta(game, 0, 0.0, v1, v2)
    if k == 4:
        return _eta(game, 1, v3, v1, v2), _eta(game, 1, 0.0, v1, v2)
    raise GameError(f"player index must be in 1..4, got {k!r}")


def reward_probability(p: Sequence[float], game: MultiLevelGame, k: int, i: int) -> float:
    """Probability that player ``k`` is rewarded when it plays strategy ``i``.

    Component ``k`` of ``p`` is replaced by the pure choice (1 for strategy 1,
    0 for strategy 2) and the value of the induced average game is returned.
    Group players 3 and 4 are scored with the payoffs of agents 1 and 2.
    """
    p = StateVector.of(p)
    if i not in (1, 2):
        raise GameError(f"strategy must be 1 or 2, got {i!r}")
    if k not in (1, 2, 3, 4):
        raise GameError(f"player index must be in 1..4, got {k!r}")
    q = list(p)
    q[k - 1] = float(2 - i)
    c = q[2] * q[3]
    player = 0 if k in (1, 3) else 1
    return _eta(game, player, c, q[0], q[1])


_BUILTIN = {
    1: (
        ([[1, 0], [0, 0]], [[1, 0], [0, 0]]),
        ([[0, 0], [0, 1]], [[0, 0], [0, 1]]),
    ),
    2: (
        ([[0.6, 0.2], [0.35, 0.9]], [[0.4, 0.8], [0.65, 0.1]]),
        ([[0.4, 0.8], [0.65, 0.1]], [[0.6, 0.2], [0.35, 0.9]]),
    ),
    3: (
        ([[0.75, 0.5], [1.0, 0.25]], [[0.1, 0.25], [0.5, 0.75]]),
        ([[0.4, 0.8], [0.65, 0.1]], [[0.6, 0.2], [0.35, 0.9]]),
    ),
}


def builtin_game(id: int) -> MultiLevelGame:
    """One of the three example games (ids 1, 2, 3)."""
    try:
        a, b = _BUILTIN[int(id)]
    except (KeyError, ValueError, TypeError):
        raise GameError(f"unknown builtin game {id!r}; choose 1, 2 or 3") from None
    return MultiLevelGame(StochasticBimatrix(*a), StochasticBimatrix(*b), id=int(id))


def load_game(path: str | Path) -> MultiLevelGame:
    """Read a game from a text file.

    Eight data lines ``i j d1 d2`` (``i, j`` in {1, 2}): the first four
    define ``A``, the next four ``B``.  Blank lines and ``#`` comments are
    ignored.
    """
    path = Path(path)
    rows = []
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise GameError(f"{path}:{lineno}: expected 'i j d1 d2', got {raw!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
            d1, d2 = float(parts[2]), float(parts[3])
        except ValueError:
            raise GameError(f"{path}:{lineno}: malformed numbers in {raw!r}") from None
        if i not in (1, 2) or j not in (1, 2):
            raise GameError(f"{path}:{lineno}: action indices must be 1 or 2")
        _check_prob(d1, f"{path}:{lineno}: d1")
        _check_prob(d2, f"{path}:{lineno}: d2")
        rows.append((i, j, d1, d2))
    if len(rows) != 8:
        raise GameError(f"{path}: expected 8 data lines, found {len(rows)}")

    mats = []
    for block in (rows[:4], rows[4:]):
        d1 = np.full((2, 2), np.nan)
        d2 = np.full((2, 2), np.nan)
        for i, j, x, y in block:
            if not np.isnan(d1[i - 1, j - 1]):
                raise GameError(f"{path}: duplicate entry for action pair ({i}, {j})")
            d1[i - 1, j - 1] = x
            d2[i - 1, j - 1] = y
        mats.append(StochasticBimatrix(d1, d2))
    return MultiLevelGame(mats[0], mats[1], id=str(path))


def dump_game(game: MultiLevelGame) -> str:
    """Text form accepted by :func:`load_game`."""
    lines = []
    for label, m in (("A", game.A), ("B", game.B)):
        lines.append(f"# {label}")
        for i in (1, 2):
            for j in (1, 2):
                lines.append(f"{i} {j} {m.d1[i - 1, j - 1]:.17g} {m.d2[i - 1, j - 1]:.17g}")
    return "\n".join(lines) + "\n"
