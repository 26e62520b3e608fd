"""Agent update rules: leaders, first-order trimmed-mean followers, and
second-order (double-integrator) followers.

Followers trim extreme received values before averaging. A value group is
only discarded wholesale when a single adversary set of size <= f could
explain it, which is decided exactly via minimum message covers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .messaging import Message, MessageError, MessageSet, mmc_cardinality


class AgentError(ValueError):
    """Invalid agent parameterization or input."""


@dataclass(frozen=True)
class ReferenceFunction:
    """Piecewise-constant (staircase) reference: list of (start_round, value)."""

    pieces: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.pieces:
            raise AgentError("reference needs at least one piece")
        if self.pieces[0][0] != 0:
            raise AgentError("first reference piece must start at round 0")
        starts = [s for s, _ in self.pieces]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise AgentError(f"piece starts must strictly increase: {starts}")
        if any(not math.isfinite(v) for _, v in self.pieces):
            raise AgentError("reference values must be finite")

    @staticmethod
    def constant(value: float) -> "ReferenceFunction":
        return ReferenceFunction(((0, float(value)),))

    def value_at(self, k: int) -> float:
        if k < 0:
            raise AgentError(f"round index must be >= 0, got {k}")
        out = self.pieces[0][1]
        for start, value in self.pieces:
            if start <= k:
                out = value
        return out

    def segments(self, horizon: int) -> list[tuple[range, float]]:
        """Constant segments within [0, horizon)."""
        out = []
        for idx, (start, value) in enumerate(self.pieces):
            end = self.pieces[idx + 1][0] if idx + 1 < len(self.pieces) else horizon
            if start < horizon:
                out.append((range(start, min(end, horizon)), value))
        return out


@dataclass(frozen=True)
class FirstOrderState:
    x: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise AgentError(f"non-finite state {self.x}")


@dataclass(frozen=True)
class SecondOrderState:
    """Absolute position x, velocity v, and formation offset delta.

    The consensus variable is x_hat = x - delta.
    """

    x: float
    v: float
    delta: float = 0.0

    def __post_init__(self):
        for val in (self.x, self.v, self.delta):
            if not math.isfinite(val):
                raise AgentError(f"non-finite state component {val}")

    @property
    def x_hat(self) -> float:
        return self.x - self.delta

    @staticmethod
    def from_x_hat(x_hat: float, v: float, delta: float = 0.0) -> "SecondOrderState":
        return SecondOrderState(x_hat + delta, v, delta)


@dataclass(frozen=True)
class ControlParams:
    """Second-order gains; the sampling/damping pair must satisfy the
    stability window 1 + T^2/2 <= beta*T <= 2 - T^2/2."""

    T: float
    beta: float
    f: int
    l: int
    alpha: float | None = None

    def __post_init__(self):
        if self.T <= 0:
            raise AgentError(f"sampling period must be positive, got {self.T}")
        lo, hi = 1 + self.T**2 / 2, 2 - self.T**2 / 2
        bt = self.beta * self.T
        if not (lo <= bt <= hi):
            raise AgentError(
                f"beta*T = {bt:.6g} outside stability window [{lo:.6g}, {hi:.6g}]"
            )
        if self.f < 0 or self.l < 1:
            raise AgentError(f"need f >= 0 and l >= 1, got f={self.f} l={self.l}")
        if self.alpha is not None and not (0 < self.alpha <= 1):
            raise AgentError(f"alpha must be in (0, 1], got {self.alpha}")


def leader_step(ref: ReferenceFunction, k: int) -> float:
    """Leader value for round k+1; second-order leaders hold v = u = 0."""
    return ref.value_at(k)


def _trim_side(side: list[Message], f: int) -> list[Message]:
    """Maximal prefix of the value-ordered side explainable by <= f nodes.

    The side list must already be sorted most-extreme-first (stable). Returns
    the removed messages. If even the whole side has cover cardinality < f it
    is removed entirely.
    """
    if f == 0 or not side:
        return []
    if mmc_cardinality(side) <= f:
        return side
    removed: list[Message] = []
    for m in side:
        if mmc_cardinality(removed + [m]) <= f:
            removed.append(m)
        else:
            break
    # A single extra message can raise the cover optimum by at most one, so
    # a maximal prefix short of the whole side must sit exactly at f.
    assert mmc_cardinality(removed) == f if removed else True
    return removed


def mw_msr_trim(ms: MessageSet, own: float, f: int) -> MessageSet:
    """Remove extreme values: the largest (resp. smallest) received values
    strictly above (below) own, as long as one set of <= f nodes could have
    produced them. The self-message is always retained."""
    if f < 0:
        raise AgentError(f"trim parameter must be >= 0, got {f}")
    if not any(m.path.hops == 0 for m in ms):
        raise MessageError("message set must contain the self-message")
    upper = [m for m in ms if m.path.hops > 0 and m.value > own]
    lower = [m for m in ms if m.path.hops > 0 and m.value < own]
    upper.sort(key=lambda m: -m.value)
    lower.sort(key=lambda m: m.value)
    removed = set(id(m) for m in _trim_side(upper, f))
    removed |= set(id(m) for m in _trim_side(lower, f))
    return MessageSet(tuple(m for m in ms if id(m) not in removed))


def mw_msr_update(retained: MessageSet) -> float:
    """Uniformly weighted average of the retained values."""
    values = retained.values()
    if not values:
        raise AgentError("retained message set is empty")
    return math.fsum(values) / len(values)


def mdp_msr_control(retained: MessageSet, own: SecondOrderState, p: ControlParams) -> float:
    """Acceleration: trimmed-mean position error with velocity damping."""
    return mw_msr_update(retained) - own.x_hat - p.beta * own.v


def second_order_step(s: SecondOrderState, u: float, T: float) -> SecondOrderState:
    """Sampled double-integrator update of (x_hat, v) at period T."""
    x_hat = s.x_hat + T * s.v + (T**2 / 2) * u
    v = s.v + T * u
    return SecondOrderState.from_x_hat(x_hat, v, s.delta)


def secure_leader_follower_step(
    ms: MessageSet, own: float, f: int, ref: ReferenceFunction, k: int, in_w_l: bool
) -> float:
    """Follower update when leaders are known secure.

    Followers directly fed by a leader adopt the reference outright and act
    as virtual leaders; everyone else trims and averages over the reduced
    (leaderless) subgraph, whose messages the caller supplies.
    """
    if in_w_l:
        return ref.value_at(k)
    return mw_msr_update(mw_msr_trim(ms, own, f))
