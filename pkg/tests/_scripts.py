"""Seeded generator of order book simulation scripts."""
from __future__ import annotations

import random
from fractions import Fraction

EVENT = {"text": "order book fixture event"}
YES = {"tag": {"event": EVENT, "side": "Yes"}}
NO = {"tag": {"event": EVENT, "side": "No"}}
COIN = "unbet"


def _amt(x: Fraction) -> str:
    return str(Fraction(x))


def two_trader_script() -> dict:
    """Alice sells 20 Yes shares to Bob for 14 coins."""
    return {
        "genesis": {"alice": "100", "bob": "100"},
        "setup": [{"op": "outcome_split", "args": {"owner": "alice", "amount": "50", "eid": EVENT}}],
        "actions": [
            {"tick": 1, "action": "deposit", "trader": "alice", "asset": YES, "amount": "50", "timeout": 10},
            {"tick": 1, "action": "deposit", "trader": "bob", "asset": COIN, "amount": "40", "timeout": 10},
            {"tick": 2, "action": "order", "trader": "alice", "offer": {"asset": YES, "amount": "20"},
             "want": {"asset": COIN, "amount": "14"}, "expiry": 9},
            {"tick": 3, "action": "order", "trader": "bob", "offer": {"asset": COIN, "amount": "14"},
             "want": {"asset": YES, "amount": "20"}, "expiry": 9},
        ],
    }


def random_script(seed: int) -> dict:
    """A few traders deposit coins and shares, then trade, withdraw and reclaim at random."""
    rng = random.Random(seed)
    traders = [f"t{i}" for i in range(rng.randint(2, 4))]
    genesis = {t: "200" for t in traders}
    setup = [{"op": "outcome_split", "args": {"owner": t, "amount": "100", "eid": EVENT}}
             for t in traders if rng.random() < 0.7]
    splitters = {s["args"]["owner"] for s in setup}
    horizon = rng.randint(8, 20)
    actions = []
    for t in traders:
        timeout = rng.randint(horizon // 2, horizon + 5)
        actions.append({"tick": rng.randint(1, 2), "action": "deposit", "trader": t, "asset": COIN,
                        "amount": _amt(rng.randint(20, 100)), "timeout": timeout})
        if t in splitters:
            for share in (YES, NO):
                actions.append({"tick": rng.randint(1, 3), "action": "deposit", "trader": t,
                                "asset": share, "amount": _amt(rng.randint(10, 100)),
                                "timeout": timeout + rng.randint(0, 3)})
    for _ in range(rng.randint(4, 14)):
        t = rng.choice(traders)
        share = rng.choice((YES, NO))
        qty = Fraction(rng.randint(1, 40))
        price = Fraction(rng.randint(40, 60), 100)
        tick = rng.randint(2, horizon)
        # traders without shares mostly bid; some asks stay uncovered on purpose
        if t not in splitters and rng.random() < 0.9 or rng.random() < 0.5:
            offer, want = {"asset": COIN, "amount": _amt(qty * price)}, {"asset": share, "amount": _amt(qty)}
        else:
            offer, want = {"asset": share, "amount": _amt(qty)}, {"asset": COIN, "amount": _amt(qty * price)}
        actions.append({"tick": tick, "action": "order", "trader": t, "offer": offer, "want": want,
                        "expiry": tick + rng.randint(1, 8)})
    for _ in range(rng.randint(0, 2)):
        actions.append({"tick": rng.randint(3, horizon), "action": rng.choice(("withdraw", "reclaim")),
                        "trader": rng.choice(traders)})
    return {"genesis": genesis, "setup": setup, "actions": actions}


def behaviors_for(seed: int, traders=("t0", "t1")):
    from predmarket.orderbook import Honest, SelectiveCensor, StallAfter
    rng = random.Random(seed)
    return [Honest(), StallAfter(0), StallAfter(rng.randint(1, 8)),
            SelectiveCensor(frozenset(rng.sample(list(traders), 1)))]
