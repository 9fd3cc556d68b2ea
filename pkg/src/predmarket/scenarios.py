"""Worked trading stories replayed against the ledger.

Market prices are exogenous constants: a ``market`` address with a large
float of coins plays the counterparty for every trade, and each trade is two
plain transfers.  The headline number is read back from final balances.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List

from . import cfd
from .ledger.assets import (
    EMPTY_HISTORY, UNBET, AssetKey, Outcome, VectorSpec, derive_event_id, forced, history,
)
from .ledger.state import AuditReport, Ledger, outcome_combine, outcome_force, outcome_split, transfer
from .numeric import fmt_decimal

MARKET = "market"
MARKET_FLOAT = 1_000_000

OBAMA = "Barack Obama will win re-election in 2012"
IDOL = ("Percentages for top 24 contestants in American Idol season 99: "
        "1=band, 2=girl, 3=boy, 4=other")
BASELINE_X = "baseline asset x"

COIN: AssetKey = (UNBET, EMPTY_HISTORY)


class UnknownScenario(KeyError):
    pass


@dataclass
class ScenarioResult:
    name: str
    headline_label: str
    headline: Fraction
    expected: Fraction
    tolerance: Fraction
    ledger: Ledger
    audit: AuditReport
    notes: List[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "Match" if abs(self.headline - self.expected) <= self.tolerance else "Mismatch"

    @property
    def trace(self) -> List[dict]:
        return [tx.to_json() for tx in self.ledger.tx_log]

    def summary(self) -> str:
        return (f"{self.name}: {self.headline_label} = {self.headline} ({fmt_decimal(self.headline)}), "
                f"expected {fmt_decimal(self.expected)} +/- {fmt_decimal(self.tolerance)}: {self.status}")


def _trade(ledger: Ledger, seller: str, buyer: str, key: AssetKey, amount, price) -> None:
    """``seller`` hands ``amount`` of ``key`` to ``buyer`` for ``price`` ordinary coins."""
    transfer(ledger, seller, buyer, key, Fraction(amount))
    transfer(ledger, buyer, seller, COIN, Fraction(price))


def _coins(ledger: Ledger, who: str) -> Fraction:
    return ledger.balance(who, COIN)


def scenario_s1() -> ScenarioResult:
    """Split, sell the No side at 30%, buy it back at 0.001 and recombine."""
    eid = derive_event_id(OBAMA)
    yes, no = (Outcome(eid, 1), EMPTY_HISTORY), (Outcome(eid, 2), EMPTY_HISTORY)
    led = Ledger({"alice": 5000, MARKET: MARKET_FLOAT})
    outcome_split(led, "alice", 5000, eid)
    _trade(led, "alice", MARKET, no, 5000, Fraction(30, 100) * 5000)
    _trade(led, MARKET, "alice", no, 5000, Fraction(1, 1000) * 5000)
    outcome_combine(led, "alice", eid, 5000)
    gain = _coins(led, "alice") - 5000
    assert led.balance("alice", yes) == 0
    return ScenarioResult("s1", "Alice's gain", gain, Fraction(1495), Fraction(0), led, led.check_invariants())


def scenario_s2() -> ScenarioResult:
    """Buy Yes shares with the whole wealth at 70%, sell them at 0.999.

    The share count and the sale proceeds are the rounded literals 7142.8 and
    7135.7, not 5000/0.7 and 0.999 times that.
    """
    eid = derive_event_id(OBAMA)
    yes = (Outcome(eid, 1), EMPTY_HISTORY)
    shares, proceeds = Fraction("7142.8"), Fraction("7135.7")
    led = Ledger({"alice": 5000, MARKET: MARKET_FLOAT})
    outcome_split(led, MARKET, shares, eid)
    _trade(led, MARKET, "alice", yes, shares, 5000)
    _trade(led, "alice", MARKET, yes, shares, proceeds)
    gain = _coins(led, "alice") - 5000
    return ScenarioResult("s2", "Alice's gain", gain, Fraction("2135.7"), Fraction("0.05"), led,
                          led.check_invariants(),
                          notes=[f"exact gain at unrounded prices: "
                                 f"{fmt_decimal(Fraction(5000) / Fraction(7, 10) * Fraction(999, 1000) - 5000)}"])


def scenario_s3() -> ScenarioResult:
    """Sell No at 30%, then force the Yes shares instead of buying No back, and spend."""
    eid = derive_event_id(OBAMA)
    yes_key, no_key = (Outcome(eid, 1), EMPTY_HISTORY), (Outcome(eid, 2), EMPTY_HISTORY)
    led = Ledger({"alice": 1000, MARKET: MARKET_FLOAT})
    outcome_split(led, "alice", 1000, eid)
    _trade(led, "alice", MARKET, no_key, 1000, 300)
    outcome_force(led, "alice", eid, frozenset({1}), 1000)
    encumbered = (UNBET, history(forced(eid, {1})))
    transfer(led, "alice", "store", encumbered, 803)
    assert led.balance("alice", yes_key) == 0
    held = led.balance("alice", encumbered) + led.balance("store", encumbered)
    return ScenarioResult("s3", "encumbered coins minted", held, Fraction(1000), Fraction(0), led,
                          led.check_invariants(),
                          notes=[f"store holds {led.balance('store', encumbered)} encumbered coins"])


def scenario_idol() -> ScenarioResult:
    """Four-way split; sell outcomes 2 and 3 at 1/3, buy back at 1/4, recombine."""
    eid = derive_event_id(IDOL)
    led = Ledger({"alice": 60, MARKET: MARKET_FLOAT})
    outcome_split(led, "alice", 60, eid, arity=4)
    for i in (2, 3):
        _trade(led, "alice", MARKET, (Outcome(eid, i, 4), EMPTY_HISTORY), 60, Fraction(1, 3) * 60)
    for i in (2, 3):
        _trade(led, MARKET, "alice", (Outcome(eid, i, 4), EMPTY_HISTORY), 60, Fraction(1, 4) * 60)
    outcome_combine(led, "alice", eid, 60)
    profit = _coins(led, "alice") - 60
    return ScenarioResult("idol", "Alice's profit", profit, Fraction(10), Fraction(0), led,
                          led.check_invariants())


def scenario_idol_force() -> ScenarioResult:
    """Outcome 3 never happened: buy back 2 only and force {1, 2, 4}."""
    eid = derive_event_id(IDOL)
    led = Ledger({"alice": 60, MARKET: MARKET_FLOAT})
    outcome_split(led, "alice", 60, eid, arity=4)
    for i in (2, 3):
        _trade(led, "alice", MARKET, (Outcome(eid, i, 4), EMPTY_HISTORY), 60, 20)
    _trade(led, MARKET, "alice", (Outcome(eid, 2, 4), EMPTY_HISTORY), 60, 15)
    outcome_force(led, "alice", eid, frozenset({1, 2, 4}), 60)
    encumbered = (UNBET, history(forced(eid, {1, 2, 4}, arity=4)))
    return ScenarioResult("idol-force", "encumbered coins", led.balance("alice", encumbered),
                          Fraction(60), Fraction(0), led, led.check_invariants(),
                          notes=["buy-back price of outcome 2 (15) is an assumption"])


def scenario_vector_cfd() -> ScenarioResult:
    """Bob buys leg 1 at x=200 and sells it back at x=110; Carol cross-combines with her own vector."""
    eid = derive_event_id(BASELINE_X)
    v = VectorSpec.from_flat(75, Fraction(1, 3), 100, Fraction(1, 3), 125, Fraction(1, 3))
    v2 = VectorSpec.from_flat(150, Fraction(1, 2), 40, Fraction(1, 4), 50, Fraction(1, 8), 70, Fraction(1, 8))
    led = Ledger({"alice": 1000, "bob": 1000, "carol": 600})
    cfd.vector_split(led, "alice", 500, eid, v)
    z1 = cfd.VectorAsset(500, eid, v, 1)
    buy, sell = cfd.vector_price(z1, 200), cfd.vector_price(z1, 110)
    _trade(led, "alice", "bob", z1.key, 500, buy)
    _trade(led, "bob", "alice", z1.key, 500, sell)
    cfd.vector_combine(led, "alice", cfd.full_set(500, eid, v))
    loss = 1000 - _coins(led, "bob")

    # Carol's four-leg vector shares the market: 400 of z1 plus 400 of z'1 redeem 400 coins
    cfd.vector_split(led, "alice", 500, eid, v)
    cfd.vector_split(led, "carol", 400, eid, v2)
    transfer(led, "alice", "carol", z1.key, 400)
    transfer(led, "carol", "alice", COIN, cfd.vector_price(cfd.VectorAsset(400, eid, v, 1), 110))
    before = _coins(led, "carol")
    cfd.vector_combine(led, "carol", [cfd.VectorAsset(400, eid, v, 1), cfd.VectorAsset(400, eid, v2, 1)])
    redeemed = _coins(led, "carol") - before
    return ScenarioResult("vector-cfd", "Bob's loss collected by Alice", loss, Fraction("41.666"),
                          Fraction("0.001"), led, led.check_invariants(),
                          notes=[f"buy at {fmt_decimal(buy)}, sell at {fmt_decimal(sell)}",
                                 f"Carol's cross-combine yielded {redeemed} coins"])


SCENARIOS: Dict[str, Callable[[], ScenarioResult]] = {
    "s1": scenario_s1,
    "s2": scenario_s2,
    "s3": scenario_s3,
    "idol": scenario_idol,
    "idol-force": scenario_idol_force,
    "vector-cfd": scenario_vector_cfd,
}


def run_scenario(name: str) -> ScenarioResult:
    try:
        fn = SCENARIOS[name]
    except KeyError:
        raise UnknownScenario(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return fn()
