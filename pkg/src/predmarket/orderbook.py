"""Discrete-event simulator of a real-time order book run by a trusted third party.

Traders lock assets in per-trader escrow accounts on the base ledger.  The
escrow can be spent jointly by trader and TTP, or by the trader alone once
the deposit's timeout has passed.  Trades happen off-chain, co-signed by the
TTP, and only reach the base ledger when the TTP publishes a checkpoint.
A TTP that stalls or censors can block trading but never move escrowed
assets except to match trades the owners signed.

Within one tick the simulator runs, in order: on-chain actions in script
order (ledger ops, deposits, reclaims), then the TTP phase (expire orders,
accept new orders in seeded-shuffled arrival order, cooperative withdrawals,
matching, and a checkpoint on interval boundaries).
"""
from __future__ import annotations

import enum
import json
import random
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, List, Mapping, Optional, Tuple, Union

from .ledger import codec
from .ledger.assets import UNBET, AssetKey
from .ledger.state import Ledger, LedgerError, transfer
from .numeric import to_fraction

ESCROW_PREFIX = "escrow:"


class OrderBookError(ValueError):
    pass


class ScriptError(OrderBookError):
    """The simulation script itself is malformed."""


@dataclass(frozen=True)
class Honest:
    def serves(self, tick: int, trader: Optional[str] = None) -> bool:
        return True

    def __str__(self):
        return "honest"


@dataclass(frozen=True)
class StallAfter:
    tick: int

    def serves(self, tick: int, trader: Optional[str] = None) -> bool:
        return tick <= self.tick

    def __str__(self):
        return f"stall:{self.tick}"


@dataclass(frozen=True)
class SelectiveCensor:
    traders: FrozenSet[str]

    def serves(self, tick: int, trader: Optional[str] = None) -> bool:
        return trader not in self.traders

    def __str__(self):
        return "censor:" + ",".join(sorted(self.traders))


TtpBehavior = Union[Honest, StallAfter, SelectiveCensor]


def parse_behavior(text: str) -> TtpBehavior:
    """``honest``, ``stall:<tick>`` or ``censor:<trader>,<trader>...``."""
    kind, _, arg = text.partition(":")
    if kind == "honest":
        return Honest()
    if kind == "stall":
        return StallAfter(int(arg))
    if kind == "censor":
        return SelectiveCensor(frozenset(t for t in arg.split(",") if t))
    raise ScriptError(f"unknown TTP behavior {text!r}")


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    checkpoint_interval: int = 1
    ttp_behavior: TtpBehavior = Honest()
    auto_reclaim: bool = True

    def __post_init__(self):
        if self.checkpoint_interval < 1:
            raise ScriptError("checkpoint interval must be at least 1")


class DepositStatus(enum.Enum):
    ACTIVE = "active"
    RECLAIMED = "reclaimed"
    CHECKED_OUT = "checked_out"


@dataclass
class Deposit:
    id: int
    trader: str
    key: AssetKey
    amount: Fraction
    timeout: int
    status: DepositStatus = DepositStatus.ACTIVE


@dataclass
class Order:
    id: int
    trader: str
    offer_key: AssetKey
    offer_amount: Fraction
    want_key: AssetKey
    want_amount: Fraction
    expiry: int
    offer_left: Fraction = None
    want_left: Fraction = None

    def __post_init__(self):
        self.offer_amount = to_fraction(self.offer_amount)
        self.want_amount = to_fraction(self.want_amount)
        if self.offer_amount <= 0 or self.want_amount <= 0:
            raise OrderBookError("order amounts must be positive")
        if self.offer_key == self.want_key:
            raise OrderBookError("an order must exchange two different assets")
        if self.offer_left is None:
            self.offer_left = self.offer_amount
        if self.want_left is None:
            self.want_left = self.want_amount

    @property
    def side(self) -> str:
        """Bid when paying ordinary coins, Ask otherwise."""
        return "bid" if self.offer_key == (UNBET, frozenset()) else "ask"

    @property
    def rate(self) -> Fraction:
        """Units wanted per unit offered."""
        return self.want_amount / self.offer_amount


@dataclass
class Trade:
    seq: int
    tick: int
    maker: int
    taker: int
    gives: Tuple[str, AssetKey, Fraction]
    takes: Tuple[str, AssetKey, Fraction]


def escrow(trader: str) -> str:
    return ESCROW_PREFIX + trader


def _zero():
    return Fraction(0)


def _enc_holdings(h: Mapping[AssetKey, Fraction]) -> list:
    return [[codec.enc_key(k), codec.enc_amount(v)]
            for k, v in sorted(h.items(), key=lambda kv: codec.key_sort(kv[0])) if v]


class OrderBookState:
    """Off-chain book, deposits and checkpoints on top of a base :class:`Ledger`."""

    def __init__(self, ledger: Ledger, config: SimConfig = SimConfig()):
        self.ledger = ledger
        self.config = config
        self.clock = 0
        self.deposits: List[Deposit] = []
        self.offchain: Dict[str, Dict[AssetKey, Fraction]] = defaultdict(lambda: defaultdict(_zero))
        self.orders: Dict[int, Order] = {}
        self.trades: List[Trade] = []
        self.sequence_no = 0
        self.last_checkpoint = 0
        self.voided_trades = 0
        self.trace: List[dict] = []
        self.entitled: Dict[str, Dict[AssetKey, Fraction]] = {}
        self._next_deposit = 1
        self._next_order = 1
        self._record_entitlements()

    # -- helpers --

    @property
    def behavior(self) -> TtpBehavior:
        return self.config.ttp_behavior

    def serves(self, trader: Optional[str] = None) -> bool:
        return self.behavior.serves(self.clock, trader)

    def traders(self) -> List[str]:
        return sorted(a for a in self.ledger.addresses() if not a.startswith(ESCROW_PREFIX))

    def escrow_holdings(self, trader: str) -> Dict[AssetKey, Fraction]:
        return dict(self.ledger.balances.get(escrow(trader), {}))

    def base_holdings(self, trader: str) -> Dict[AssetKey, Fraction]:
        return dict(self.ledger.balances.get(trader, {}))

    def reserved(self, trader: str, key: AssetKey) -> Fraction:
        return sum((o.offer_left for o in self.orders.values()
                    if o.trader == trader and o.offer_key == key), Fraction(0))

    def free(self, trader: str, key: AssetKey) -> Fraction:
        return self.offchain[trader][key] - self.reserved(trader, key)

    def active_deposits(self, trader: str) -> List[Deposit]:
        return [d for d in self.deposits if d.trader == trader and d.status is DepositStatus.ACTIVE]

    def _emit(self, actor: str, action: str, **delta):
        self.trace.append({"tick": self.clock, "actor": actor, "action": action, "delta": delta})

    def _record_entitlements(self):
        for t in self.traders():
            total: Dict[AssetKey, Fraction] = defaultdict(_zero)
            for holdings in (self.base_holdings(t), self.escrow_holdings(t)):
                for k, v in holdings.items():
                    total[k] += v
            self.entitled[t] = dict(total)

    # -- on-chain actions --

    def deposit(self, trader: str, key: AssetKey, amount: Fraction, timeout: int) -> Deposit:
        """Lock ``amount`` of ``key`` in the trader's escrow until ``timeout``."""
        if timeout <= self.clock:
            raise OrderBookError(f"timeout {timeout} is not in the future (clock {self.clock})")
        if trader.startswith(ESCROW_PREFIX):
            raise OrderBookError("escrow accounts cannot deposit")
        amount = to_fraction(amount)
        transfer(self.ledger, trader, escrow(trader), key, amount)
        dep = Deposit(self._next_deposit, trader, key, amount, timeout)
        self._next_deposit += 1
        self.deposits.append(dep)
        self.offchain[trader][key] += amount
        self._emit(trader, "deposit", id=dep.id, asset=codec.enc_key(key),
                   amount=codec.enc_amount(amount), timeout=timeout)
        return dep

    def reclaim_after_timeout(self, trader: str) -> Dict[AssetKey, Fraction]:
        """Unilaterally recover the escrow once every active deposit has timed out.

        The escrow holds exactly the last published state, so un-checkpointed
        off-chain trades are voided for everyone: off-chain balances are rolled
        back to what the base ledger shows.
        """
        active = self.active_deposits(trader)
        if not active:
            raise OrderBookError(f"{trader} has no active deposits")
        deadline = max(d.timeout for d in active)
        if self.clock < deadline:
            raise OrderBookError(f"{trader} cannot reclaim before tick {deadline}")
        recovered = self.escrow_holdings(trader)
        for key, amount in sorted(recovered.items(), key=lambda kv: codec.key_sort(kv[0])):
            transfer(self.ledger, escrow(trader), trader, key, amount)
        for d in active:
            d.status = DepositStatus.RECLAIMED
        for oid in [o.id for o in self.orders.values() if o.trader == trader]:
            del self.orders[oid]
        voided = self.sequence_no - self.last_checkpoint
        self.voided_trades += voided
        self.last_checkpoint = self.sequence_no
        self._rollback()
        self._emit(trader, "reclaim", recovered=_enc_holdings(recovered), voided_trades=voided)
        return recovered

    def _rollback(self):
        self.offchain = defaultdict(lambda: defaultdict(_zero))
        for t in self.traders():
            for k, v in self.escrow_holdings(t).items():
                self.offchain[t][k] += v
        # orders that are no longer covered after the rollback are dropped, newest first
        for order in sorted(self.orders.values(), key=lambda o: -o.id):
            if self.free(order.trader, order.offer_key) < 0:
                del self.orders[order.id]
                self._emit(order.trader, "order_dropped", id=order.id)

    # -- TTP actions --

    def place_order(self, trader: str, offer_key: AssetKey, offer_amount: Fraction,
                    want_key: AssetKey, want_amount: Fraction, expiry: int) -> Order:
        if not self.serves(trader):
            raise OrderBookError(f"TTP does not accept orders from {trader}")
        if expiry <= self.clock:
            raise OrderBookError("order already expired")
        order = Order(self._next_order, trader, offer_key, offer_amount, want_key, want_amount, expiry)
        free = self.free(trader, offer_key)
        if free < offer_amount:
            raise OrderBookError(f"order not covered: {trader} has {free} free, offers {offer_amount}")
        self._next_order += 1
        self.orders[order.id] = order
        self._emit(trader, "order", id=order.id, side=order.side,
                   offer=[codec.enc_key(offer_key), codec.enc_amount(offer_amount)],
                   want=[codec.enc_key(want_key), codec.enc_amount(want_amount)], expiry=expiry)
        return order

    def expire_orders(self):
        for oid in sorted(o.id for o in self.orders.values() if o.expiry <= self.clock):
            del self.orders[oid]
            self._emit("ttp", "expire", id=oid)

    def _best_cross(self) -> Optional[Tuple[Order, Order]]:
        live = [o for o in self.orders.values() if self.serves(o.trader)]
        pairs = sorted({tuple(sorted((codec.key_sort(o.offer_key), codec.key_sort(o.want_key))))
                        for o in live})
        for lo, hi in pairs:
            side_a = sorted((o for o in live if codec.key_sort(o.offer_key) == lo
                             and codec.key_sort(o.want_key) == hi), key=lambda o: (o.rate, o.id))
            side_b = sorted((o for o in live if codec.key_sort(o.offer_key) == hi
                             and codec.key_sort(o.want_key) == lo), key=lambda o: (o.rate, o.id))
            for a in side_a:
                for b in side_b:
                    if a.rate * b.rate > 1:
                        break
                    if a.trader != b.trader:
                        return a, b
        return None

    def crossing_pairs(self) -> bool:
        return self._best_cross() is not None

    def match_and_cosign(self) -> List[Trade]:
        """Execute crossing orders at the earlier order's terms until none cross."""
        executed = []
        if not self.serves():
            return executed
        while True:
            found = self._best_cross()
            if found is None:
                return executed
            maker, taker = sorted(found, key=lambda o: o.id)
            qty = min(maker.offer_left, taker.want_left)
            pay = qty * maker.rate
            book = self.offchain
            book[maker.trader][maker.offer_key] -= qty
            book[taker.trader][maker.offer_key] += qty
            book[taker.trader][maker.want_key] -= pay
            book[maker.trader][maker.want_key] += pay
            maker.offer_left -= qty
            maker.want_left -= pay
            taker.want_left -= qty
            taker.offer_left -= pay
            for o in (maker, taker):
                if o.offer_left <= 0 or o.want_left <= 0:
                    del self.orders[o.id]
            self.sequence_no += 1
            trade = Trade(self.sequence_no, self.clock, maker.id, taker.id,
                          (maker.trader, maker.offer_key, qty), (taker.trader, maker.want_key, pay))
            self.trades.append(trade)
            executed.append(trade)
            self._emit("ttp", "trade", seq=trade.seq, maker=maker.id, taker=taker.id,
                       moves=[[maker.trader, taker.trader, codec.enc_key(maker.offer_key), codec.enc_amount(qty)],
                              [taker.trader, maker.trader, codec.enc_key(maker.want_key), codec.enc_amount(pay)]])

    def checkpoint(self) -> int:
        """Publish off-chain balances to the base ledger; returns the number of transfers."""
        if not self.serves():
            return 0
        moves = 0
        keys = sorted({k for t in self.offchain for k in self.offchain[t]} |
                      {k for t in self.traders() for k in self.escrow_holdings(t)}, key=codec.key_sort)
        for key in keys:
            surplus, deficit = [], []
            for t in self.traders():
                diff = self.escrow_holdings(t).get(key, Fraction(0)) - self.offchain[t][key]
                if diff > 0:
                    surplus.append([t, diff])
                elif diff < 0:
                    deficit.append([t, -diff])
            for t_in, need in deficit:
                while need > 0:
                    src = surplus[0]
                    amt = min(need, src[1])
                    transfer(self.ledger, escrow(src[0]), escrow(t_in), key, amt)
                    moves += 1
                    need -= amt
                    src[1] -= amt
                    if src[1] == 0:
                        surplus.pop(0)
        self.last_checkpoint = self.sequence_no
        self._record_entitlements()
        if moves:
            self._emit("ttp", "checkpoint", seq=self.sequence_no, transfers=moves)
        return moves

    def withdraw(self, trader: str) -> Dict[AssetKey, Fraction]:
        """Cooperative checkout: TTP checkpoints, then co-signs the payout."""
        if not self.serves(trader):
            raise OrderBookError(f"TTP refuses to co-sign a withdrawal for {trader}")
        active = self.active_deposits(trader)
        if not active:
            raise OrderBookError(f"{trader} has no active deposits")
        for oid in [o.id for o in self.orders.values() if o.trader == trader]:
            del self.orders[oid]
        self.checkpoint()
        paid = self.escrow_holdings(trader)
        for key, amount in sorted(paid.items(), key=lambda kv: codec.key_sort(kv[0])):
            transfer(self.ledger, escrow(trader), trader, key, amount)
        for d in active:
            d.status = DepositStatus.CHECKED_OUT
        self.offchain.pop(trader, None)
        self._record_entitlements()
        self._emit(trader, "withdraw", paid=_enc_holdings(paid))
        return paid

    # -- audit --

    def audit(self) -> List[str]:
        """Off-chain claims must be backed exactly by escrow, and never negative."""
        problems = []
        claims: Dict[AssetKey, Fraction] = defaultdict(_zero)
        backing: Dict[AssetKey, Fraction] = defaultdict(_zero)
        for t, held in self.offchain.items():
            for k, v in held.items():
                if v < 0:
                    problems.append(f"{t} has negative off-chain balance {v} of {codec.key_sort(k)}")
                claims[k] += v
        for t in self.traders():
            for k, v in self.escrow_holdings(t).items():
                backing[k] += v
        for k in set(claims) | set(backing):
            if claims[k] != backing[k]:
                problems.append(f"off-chain claims {claims[k]} != escrow {backing[k]} for {codec.key_sort(k)}")
        for o in self.orders.values():
            if self.free(o.trader, o.offer_key) < 0:
                problems.append(f"order {o.id} of {o.trader} is not covered")
        problems.extend(self.ledger.check_invariants().violations)
        return problems

    def safety_violations(self) -> List[str]:
        """Traders whose base holdings fall short of their last checkpointed entitlement."""
        problems = []
        for t, owed in self.entitled.items():
            have = self.base_holdings(t)
            for k, v in owed.items():
                if have.get(k, Fraction(0)) < v:
                    problems.append(f"{t} holds {have.get(k, 0)} of {codec.key_sort(k)}, entitled to {v}")
        return problems


# -- scripted simulation ------------------------------------------------------------

ONCHAIN = ("ledger", "deposit", "reclaim")
OFFCHAIN = ("order", "withdraw")


@dataclass
class SimResult:
    config: SimConfig
    state: OrderBookState
    violations: List[Tuple[int, str]] = field(default_factory=list)
    rejected: int = 0

    @property
    def trace(self) -> List[dict]:
        return self.state.trace

    @property
    def ledger(self) -> Ledger:
        return self.state.ledger

    def trace_lines(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.trace)


def _asset(raw: Any) -> AssetKey:
    if raw in (None, "unbet"):
        return (UNBET, frozenset())
    return codec.dec_key(raw)


def _check_action(action: Mapping[str, Any]):
    required = {
        "ledger": ("op",),
        "deposit": ("trader", "asset", "amount", "timeout"),
        "reclaim": ("trader",),
        "order": ("trader", "offer", "want", "expiry"),
        "withdraw": ("trader",),
    }
    kind = action.get("action")
    if kind not in required:
        raise ScriptError(f"unknown action {kind!r}")
    tick = action.get("tick")
    if not isinstance(tick, int) or isinstance(tick, bool) or tick < 1:
        raise ScriptError(f"action tick must be an integer >= 1, got {tick!r}")
    missing = [f for f in required[kind] if f not in action]
    if missing:
        raise ScriptError(f"{kind} action at tick {tick} lacks {missing}")


def simulate(config: SimConfig, script: Mapping[str, Any]) -> SimResult:
    """Run a timed action script; identical (config, script) give identical traces."""
    if not isinstance(script, Mapping) or "actions" not in script:
        raise ScriptError("script must be a mapping with an 'actions' list")
    actions = list(script["actions"])
    for a in actions:
        _check_action(a)
    try:
        ledger = Ledger(script.get("genesis", {}), script.get("controllers"))
        for op in script.get("setup", []):
            ledger.apply(op["op"], op.get("args", {}))
    except (LedgerError, KeyError, TypeError) as exc:
        raise ScriptError(f"bad genesis or setup: {exc}") from exc

    state = OrderBookState(ledger, config)
    result = SimResult(config, state)
    rng = random.Random(config.seed)
    by_tick: Dict[int, List[Mapping]] = defaultdict(list)
    for a in actions:
        by_tick[a["tick"]].append(a)
    last = max(by_tick, default=0)

    def attempt(actor, kind, fn, *args):
        try:
            fn(*args)
        except (OrderBookError, LedgerError) as exc:
            result.rejected += 1
            state._emit(actor, "rejected", attempted=kind, reason=str(exc))

    baseline = ledger.totals()
    tick = 0
    while True:
        tick += 1
        if tick > last and not (config.auto_reclaim and any(
                d.status is DepositStatus.ACTIVE for d in state.deposits)):
            break
        state.clock = tick
        todo = by_tick.get(tick, [])
        for a in todo:
            kind = a["action"]
            if kind == "ledger":
                attempt("ledger", "ledger", ledger.apply, a["op"], a.get("args", {}))
            elif kind == "deposit":
                attempt(a["trader"], kind, state.deposit, a["trader"], _asset(a["asset"]),
                        codec.dec_amount(a["amount"]), int(a["timeout"]))
            elif kind == "reclaim":
                attempt(a["trader"], kind, state.reclaim_after_timeout, a["trader"])

        if state.serves():
            state.expire_orders()
        placements = [a for a in todo if a["action"] == "order"]
        rng.shuffle(placements)
        for a in placements:
            offer, want = a["offer"], a["want"]
            attempt(a["trader"], "order", state.place_order, a["trader"],
                    _asset(offer.get("asset")), codec.dec_amount(offer["amount"]),
                    _asset(want.get("asset")), codec.dec_amount(want["amount"]), int(a["expiry"]))
        for a in todo:
            if a["action"] == "withdraw":
                attempt(a["trader"], "withdraw", state.withdraw, a["trader"])
        state.match_and_cosign()
        if tick % config.checkpoint_interval == 0:
            state.checkpoint()

        if tick > last and config.auto_reclaim:
            for t in sorted({d.trader for d in state.deposits if d.status is DepositStatus.ACTIVE}):
                if max(d.timeout for d in state.active_deposits(t)) <= tick:
                    state.reclaim_after_timeout(t)

        for problem in state.audit():
            result.violations.append((tick, problem))
        if any(a["action"] == "ledger" for a in todo):
            baseline = ledger.totals()
        elif ledger.totals() != baseline:
            result.violations.append((tick, "per-asset totals changed without a ledger operation"))
        if isinstance(config.ttp_behavior, Honest) and state.crossing_pairs():
            result.violations.append((tick, "crossing orders left unexecuted under an honest TTP"))

    if config.auto_reclaim:
        for problem in state.safety_violations():
            result.violations.append((state.clock, problem))
    return result


def load_script(text: str) -> Dict[str, Any]:
    try:
        return codec.loads(text)
    except json.JSONDecodeError as exc:
        raise ScriptError(f"script is not valid JSON: {exc}") from exc
