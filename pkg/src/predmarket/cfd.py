"""Capped and vector contracts for difference.

Prices here are advisory quotes; only the vector combine and force
constraints are enforced by the ledger.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

from .ledger.assets import (
    EMPTY_HISTORY, UNBET, AssetKey, ColoredAsset, EventId, History, HistoryEntry,
    VectorLeg, VectorSpec, derive_event_id,
)
from .ledger.state import InvalidTransaction, Ledger, operation
from .numeric import Number, to_fraction

log = logging.getLogger(__name__)


class CfdError(ValueError):
    pass


class AmountMismatch(InvalidTransaction):
    pass


class EventMismatch(InvalidTransaction):
    pass


class ExpectedValueMismatch(InvalidTransaction):
    pass


class LegSumMismatch(InvalidTransaction):
    pass


class ToleranceViolated(InvalidTransaction):
    pass


class UndatedEvent(InvalidTransaction):
    pass


# -- capped CFDs ----------------------------------------------------------------

def capped_cfd_price(c: Number, low: Number, high: Number) -> Tuple[Fraction, Fraction]:
    """(yes, no) share prices of "reaches ``high`` before ``low``" at current price c.

    Linear in c: yes = (c - L) / (H - L).
    """
    c, low, high = to_fraction(c), to_fraction(low), to_fraction(high)
    if not 0 <= low < high:
        raise CfdError(f"need 0 <= L < H, got L={low}, H={high}")
    if not low <= c <= high:
        raise CfdError(f"price {c} outside the barriers [{low}, {high}]")
    yes = (c - low) / (high - low)
    return yes, 1 - yes


def capped_cfd_curve(low: Number, high: Number, grid: Iterable[Number]) -> List[Tuple[Fraction, Fraction, Fraction]]:
    return [(to_fraction(c), *capped_cfd_price(c, low, high)) for c in grid]


def continuous_settlement_value(amount: Number, fraction: Number) -> Fraction:
    """Unencumbered worth of forced Yes shares of an event that settled at ``fraction``."""
    amount, fraction = to_fraction(amount), to_fraction(fraction)
    if not 0 <= fraction <= 1:
        raise CfdError(f"settlement fraction {fraction} outside [0, 1]")
    return amount * fraction


# -- vector CFD pricing -----------------------------------------------------------

@dataclass(frozen=True)
class VectorAsset:
    amount: Fraction
    eid: EventId
    spec: VectorSpec
    leg: int
    history: History = EMPTY_HISTORY

    def __post_init__(self):
        object.__setattr__(self, "amount", to_fraction(self.amount))
        if self.amount <= 0:
            raise CfdError("vector asset amount must be positive")
        VectorLeg(self.eid, self.spec, self.leg)  # validates the leg index

    @property
    def tag(self) -> VectorLeg:
        return VectorLeg(self.eid, self.spec, self.leg)

    @property
    def key(self) -> AssetKey:
        return (self.tag, self.history)

    def colored(self) -> ColoredAsset:
        return ColoredAsset(self.amount, self.tag, self.history)

    def split(self, amount: Number) -> Tuple["VectorAsset", "VectorAsset"]:
        amount = to_fraction(amount)
        rest = self.amount - amount
        return (VectorAsset(amount, self.eid, self.spec, self.leg, self.history),
                VectorAsset(rest, self.eid, self.spec, self.leg, self.history))


def _distances(spec: VectorSpec, c: Fraction) -> List[Fraction]:
    return [w * abs(b - c) for b, w in spec.outcomes]


def vector_price(z: VectorAsset, c: Number) -> Fraction:
    """m/(k-1) * (1 - d_J/s); m/k when every predicted level equals c."""
    c = to_fraction(c)
    if c < 0:
        raise CfdError("asset price must be nonnegative")
    d = _distances(z.spec, c)
    s = sum(d, Fraction(0))
    k = z.spec.k
    if s == 0:
        return z.amount / k
    return z.amount / (k - 1) * (1 - d[z.leg - 1] / s)


def vector_price_prime(z: VectorAsset, c: Number) -> Fraction:
    """max(0, m * (1 - (k-1) d_J/s)): rewards accurate legs more steeply."""
    c = to_fraction(c)
    if c < 0:
        raise CfdError("asset price must be nonnegative")
    d = _distances(z.spec, c)
    s = sum(d, Fraction(0))
    k = z.spec.k
    if s == 0:
        return z.amount / k
    return max(Fraction(0), z.amount * (1 - (k - 1) * d[z.leg - 1] / s))


def full_set(amount: Number, eid: EventId, spec: VectorSpec,
             history: History = EMPTY_HISTORY) -> List[VectorAsset]:
    return [VectorAsset(to_fraction(amount), eid, spec, j, history) for j in range(1, spec.k + 1)]


# -- vector CFD ledger operations -------------------------------------------------

def _vector_legs(assets: Sequence[ColoredAsset]) -> List[VectorLeg]:
    if not assets:
        raise InvalidTransaction("no assets given")
    legs = []
    for a in assets:
        if not isinstance(a.tag, VectorLeg):
            raise InvalidTransaction(f"{a.tag!r} is not a vector CFD leg")
        legs.append(a.tag)
    if len({a.key for a in assets}) != len(assets):
        raise InvalidTransaction("the same asset is listed twice")
    return legs


def _common_amount(assets: Sequence[ColoredAsset]) -> Fraction:
    amounts = {a.amount for a in assets}
    if len(amounts) != 1:
        raise AmountMismatch(f"assets have different amounts: {sorted(amounts)}")
    amount = amounts.pop()
    if amount <= 0:
        raise InvalidTransaction("amounts must be positive")
    return amount


def _common_event(legs: Sequence[VectorLeg]) -> EventId:
    events = {leg.eid for leg in legs}
    if len(events) != 1:
        raise EventMismatch("assets refer to different events")
    return events.pop()


@operation("vector_split", owner="str", amount="amount", eid="eid", spec="spec", history="history")
def vector_split(ledger: Ledger, owner: str, amount: Fraction, eid: EventId, spec: VectorSpec,
                 history: History = EMPTY_HISTORY):
    """Inject liquidity: ``amount`` unbet coins become one asset per leg of ``spec``."""
    if amount <= 0:
        raise InvalidTransaction("split amount must be positive")
    ledger._settle([(owner, (UNBET, history), amount)],
                   [(owner, (VectorLeg(eid, spec, j), history), amount) for j in range(1, spec.k + 1)])
    ledger.counters.vector_created[(eid, spec)] += amount


@operation("vector_combine", owner="str", assets="assets")
def vector_combine(ledger: Ledger, owner: str, assets: List[ColoredAsset]):
    """Soak liquidity: redeem legs whose weighted levels add up to the shared expected price."""
    legs = _vector_legs(assets)
    amount = _common_amount(assets)
    eid = _common_event(legs)
    expected = {leg.spec.expected for leg in legs}
    if len(expected) != 1:
        raise ExpectedValueMismatch(f"specs predict different expected prices: {sorted(expected)}")
    s = expected.pop()
    total = sum((leg.spec.leg_value(leg.leg) for leg in legs), Fraction(0))
    if total != s:
        raise LegSumMismatch(f"chosen legs sum to {total}, expected {s}")
    specs = {leg.spec for leg in legs}
    if len(specs) == 1 and len(legs) < legs[0].spec.k:
        log.warning("vector combine redeems a proper subset of one spec's legs (%s of %s)",
                    sorted(leg.leg for leg in legs), legs[0].spec.k)
    merged = frozenset().union(*(a.history for a in assets))
    ledger._settle([(owner, a.key, amount) for a in assets], [(owner, (UNBET, merged), amount)])
    for leg in legs:
        ledger.counters.vector_consumed[leg] += amount
    ledger.counters.vector_redeemed[eid] += amount


def is_dated(description: str) -> bool:
    return " at date " in description


@operation("vector_force", owner="str", assets="assets", claimed_settlement="amount",
           description="str", tolerance="amount")
def vector_force(ledger: Ledger, owner: str, assets: List[ColoredAsset], claimed_settlement: Fraction,
                 description: str, tolerance: Fraction = Fraction(0)):
    """Convert legs into coins encumbered by a claimed settlement price.

    ``description`` must hash to the legs' event id and name a date.
    """
    if tolerance < 0:
        raise InvalidTransaction("tolerance must be nonnegative")
    legs = _vector_legs(assets)
    amount = _common_amount(assets)
    eid = _common_event(legs)
    if derive_event_id(description) != eid:
        raise EventMismatch("description does not hash to the assets' event id")
    if not is_dated(description):
        raise UndatedEvent("forcing needs an event of the form 'baseline asset x at date y'")
    weight = sum((leg.spec.weight(leg.leg) for leg in legs), Fraction(0))
    if abs(weight - 1) > tolerance:
        raise ToleranceViolated(f"chosen weights sum to {weight}, not within {tolerance} of 1")
    total = sum((leg.spec.leg_value(leg.leg) for leg in legs), Fraction(0))
    if abs(total - claimed_settlement) > tolerance:
        raise ToleranceViolated(
            f"chosen legs sum to {total}, not within {tolerance} of the claimed {claimed_settlement}")
    histories = {a.history for a in assets}
    if len(histories) != 1:
        raise InvalidTransaction("forced legs must all carry the same history")
    h = histories.pop()
    if any(e.eid == eid for e in h):
        raise InvalidTransaction(f"history already records event {eid}")
    entry = HistoryEntry(eid, settlement=claimed_settlement)
    ledger._settle([(owner, a.key, amount) for a in assets], [(owner, (UNBET, h | {entry}), amount)])
    for leg in legs:
        ledger.counters.vector_consumed[leg] += amount
    ledger.counters.vector_redeemed[eid] += amount
