"""Predicted onset delay from the linearized action dynamics.

Around an equilibrium, with the group strategies frozen (so the clustering
parameter stays at ``c*``), the action deviations obey

    d(dp1)/dt = X1 dp1 + Y1 dp2(t - tau)
    d(dp2)/dt = X2 dp2 + Y2 dp1(t - tau)

whose characteristic equation is ``(lam - X1)(lam - X2) = Y1 Y2 exp(-2 lam tau)``.
A purely imaginary root ``lam = i w`` marks the boundary between damped and
persistent oscillation; the smallest delay admitting one is returned.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

from .automata import LearningParams
from .dynamics import find_equilibrium
from .game_core import MultiLevelGame, StateVector, _eta, builtin_game

__all__ = [
    "DegenerateCouplingError",
    "ResidualError",
    "StabilityCoefficients",
    "StabilityResult",
    "linearize",
    "critical_frequency",
    "instability_delay",
    "marginal_residual",
    "predict",
    "predict_table1",
    "TABLE1_ROWS",
    "TABLE1_HEADER",
]

RESIDUAL_TOL = 1e-9


class DegenerateCouplingError(ZeroDivisionError):
    """No delayed coupling between the action strategies (``Y1 * Y2 == 0``)."""


class ResidualError(ArithmeticError):
    """Returned point does not satisfy the characteristic equation."""


@dataclass(frozen=True)
class StabilityCoefficients:
    X1: float
    X2: float
    Y1: float
    Y2: float
    c_star: float

    @property
    def X(self) -> float:
        return self.X1 * self.X2

    @property
    def Y(self) -> float:
        return self.Y1 * self.Y2


@dataclass(frozen=True)
class StabilityResult:
    w: float | None
    chi: float | None
    tau2: float  # math.inf when stable for all delays

    @property
    def stable_for_all_delays(self) -> bool:
        return math.isinf(self.tau2)


def _partials(self_p: float, other_p: float, rows, a: float, b: float, theta: float):
    # rows[i] = (payoff vs opponent action 1, vs opponent action 2) for own strategy i
    (d11, d12), (d21, d22) = rows
    C1 = other_p * d11 + (1.0 - other_p) * d12
    C2 = other_p * d21 + (1.0 - other_p) * d22
    C1p = d11 - d12
    C2p = d21 - d22
    x, xb = self_p, 1.0 - self_p
    dself = b * (1.0 - 2.0 * x) * (C1 - C2) - 2.0 * a * (xb * (1.0 - C2) + x * (1.0 - C1))
    dother = b * x * xb * (C1p - C2p) + a * (x * x * C1p - xb * xb * C2p)
    return theta * dself, theta * dother


def linearize(game: MultiLevelGame, params: LearningParams, p_star: Sequence[float]) -> StabilityCoefficients:
    """Self and delayed cross derivatives of ``theta * W`` for the action players.

    The average game is frozen at ``c* = p3* p4*``.  Each coefficient carries
    the factor ``theta``.
    """
    p = StateVector.of(p_star)
    c = p.c
    a, b, th = params.alpha, params.beta, params.theta

    def entry(player, i, j, c=c):
        # value of the average game at the pure action pair (i, j)
        return _eta(game, player, c, 1.0 if i == 1 else 0.0, 1.0 if j == 1 else 0.0)

    rows1 = ((entry(0, 1, 1), entry(0, 1, 2)), (entry(0, 2, 1), entry(0, 2, 2)))
    # player 2 picks the column, so its "rows" are columns of D^2
    rows2 = ((entry(1, 1, 1), entry(1, 2, 1)), (entry(1, 1, 2), entry(1, 2, 2)))
    X1, Y1 = _partials(p.p1, p.p2, rows1, a, b, th)
    X2, Y2 = _partials(p.p2, p.p1, rows2, a, b, th)
    return StabilityCoefficients(X1, X2, Y1, Y2, c)


def critical_frequency(coeffs: StabilityCoefficients) -> float | None:
    """Angular frequency of the marginal root, or ``None`` if none exists.

    With ``u = w**2``, taking the modulus of both sides of the characteristic
    equation at ``lam = i w`` gives ``u**2 + (X1**2 + X2**2) u + X**2 - Y**2 = 0``.
    A positive root requires ``|Y| > |X|``.
    """
    Y = coeffs.Y
    if Y == 0.0:
        raise DegenerateCouplingError("Y1 * Y2 = 0: no delayed coupling")
    B = coeffs.X1 ** 2 + coeffs.X2 ** 2
    C = coeffs.X ** 2 - Y ** 2
    disc = B * B - 4.0 * C
    if disc < 0.0:
        return None
    u = 0.5 * (-B + math.sqrt(disc))
    if u <= 0.0:
        return None
    return math.sqrt(u)


def marginal_residual(coeffs: StabilityCoefficients, w: float, tau: float) -> float:
    lam = 1j * w
    return abs((lam - coeffs.X1) * (lam - coeffs.X2) - coeffs.Y * cmath.exp(-2.0 * lam * tau))


def instability_delay(coeffs: StabilityCoefficients) -> StabilityResult:
    """Smallest delay at which the marginal root appears.

    The phase ``2 w tau`` is taken from the signs of both its cosine
    ``(X - w^2) / Y`` and its sine ``(X1 + X2) w / Y``, so the result is
    consistent in every quadrant; in the first quadrant it equals
    ``atan(chi) / (2 w)``.
    """
    w = critical_frequency(coeffs)
    if w is None:
        return StabilityResult(None, None, math.inf)
    X, Y = coeffs.X, coeffs.Y
    s = (coeffs.X1 + coeffs.X2) * w / Y
    c = (X - w * w) / Y
    chi = s / c if c != 0.0 else math.copysign(math.inf, s)
    phi = math.atan2(s, c)
    if phi <= 0.0:
        phi += 2.0 * math.pi
    tau2 = phi / (2.0 * w)
    res = marginal_residual(coeffs, w, tau2)
    if not res < RESIDUAL_TOL:
        raise ResidualError(f"characteristic residual {res:.3g} at w={w}, tau={tau2}")
    return StabilityResult(w, chi, tau2)


def predict(
    game: MultiLevelGame,
    params: LearningParams,
    initial: Sequence[float] = (0.5, 0.5, 0.5, 0.5),
) -> tuple[StateVector, StabilityCoefficients, StabilityResult]:
    """Equilibrium, coefficients and predicted onset delay in one call."""
    p_star = find_equilibrium(game, params, initial)
    coeffs = linearize(game, params, p_star)
    return p_star, coeffs, instability_delay(coeffs)


# (game, alpha, beta, theta, reported c*, reported observed delay, reported predicted delay)
TABLE1_ROWS = (
    (2, 0.02, 0.80, 0.1, 0.2374, 33.0, 34.0),
    (2, 0.02, 0.40, 0.1, 0.2417, 145.0, 148.0),
    (3, 0.01, 0.10, 1.0, 0.6564, 18.0, 22.0),
    (3, 0.02, 0.10, 1.0, 0.4812, 52.0, 51.0),
    (3, 0.01, 0.05, 1.0, 0.4806, 106.0, 102.0),
    (3, 0.01, 0.05, 0.5, 0.4793, 218.0, 203.0),
)

TABLE1_HEADER = ("game", "alpha", "beta", "theta", "c_star", "tau_p", "ref_tau_p", "rel_err")


@dataclass(frozen=True)
class Table1Row:
    game: int
    alpha: float
    beta: float
    theta: float
    c_star: float
    tau_p: float
    ref_c_star: float
    ref_tau_o: float
    ref_tau_p: float
    p_star: StateVector
    result: StabilityResult

    @property
    def rel_err(self) -> float:
        return abs(self.tau_p - self.ref_tau_p) / self.ref_tau_p


def predict_table1(rows: Sequence[int] | None = None) -> list[Table1Row]:
    """Run the prediction pipeline on the reference parameter rows.

    ``rows`` selects 1-based row numbers; ``None`` runs all six.
    """
    out = []
    for n, (gid, a, b, th, c_ref, tau_o, tau_ref) in enumerate(TABLE1_ROWS, 1):
        if rows is not None and n not in rows:
            continue
        p_star, coeffs, res = predict(builtin_game(gid), LearningParams(a, b, th))
        out.append(Table1Row(gid, a, b, th, coeffs.c_star, res.tau2, c_ref, tau_o, tau_ref, p_star, res))
    return out
