"""Step-size controllers: traditional, cost-gradient, and their combination.

The cost controller descends the logarithmic cost-per-unit-time surface by a
finite-difference gradient step, with the saturation/dead-zone constants of
the cost-minimizing controller literature; the combined mode takes the
minimum of the two proposals so the error requirement always wins.
"""

import math
from dataclasses import dataclass
from enum import Enum


@dataclass(frozen=True)
class ControllerConstants:
    # saturation / response / clamp constants of the cost controller
    alpha_c: float = 0.65241444
    beta_c: float = 0.26862269
    lambda_c: float = 1.37412002
    delta_c: float = 0.64446017
    # plumbing for the traditional controller
    safety: float = 0.9
    growth_cap: float = 2.0


DEFAULT_CONSTANTS = ControllerConstants()


class ControllerMode(Enum):
    TRADITIONAL = "traditional"
    COST = "cost"
    COMBINED = "combined"


@dataclass
class ControllerState:
    """Previous accepted step's size and cost proxy (i^{n-1} / dt^{n-1})."""
    dt_prev: float | None = None
    cost_prev: float | None = None
    mode: ControllerMode = ControllerMode.COMBINED


def traditional_next(dt, err, tol, p, consts=DEFAULT_CONSTANTS):
    """Largest step admitted by the error estimate: safety * dt * (tol/err)^(1/(p+1)).

    Growth and shrinkage are both clamped by the growth cap.
    """
    raw = consts.safety * dt * (tol / max(err, 1e-300)) ** (1.0 / (p + 1))
    return min(max(raw, dt / consts.growth_cap), dt * consts.growth_cap)


def cost_next(dt, dt_prev, cost, cost_prev, consts=DEFAULT_CONSTANTS):
    """Cost-gradient proposal dt * s with s = exp(-alpha tanh(beta Delta)).

    Delta is the log-log slope of the cost between the last two accepted
    steps; factors falling in the dead zones [delta, 1) and [1, lambda) are
    pushed to the zone edges so every change is at least delta-fold or
    lambda-fold.  Equal consecutive step sizes leave Delta undefined; growth
    by lambda is used as the exploration default.
    """
    dlog = math.log(dt) - math.log(dt_prev)
    if abs(dlog) < 1e-12:
        return dt * consts.lambda_c
    delta = (math.log(cost) - math.log(cost_prev)) / dlog
    s = math.exp(-consts.alpha_c * math.tanh(consts.beta_c * delta))
    if 1.0 <= s < consts.lambda_c:
        return dt * consts.lambda_c
    if consts.delta_c <= s < 1.0:
        return dt * consts.delta_c
    return dt * s


def combine(dt_cost, dt_trad):
    """The combined controller: never exceed the error-admitted step."""
    return min(dt_cost, dt_trad)


def accept(err, tol):
    """A step is accepted iff its error estimate does not exceed the tolerance."""
    return err <= tol
