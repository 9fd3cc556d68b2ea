"""Account-based colored-coin ledger.

Every state change goes through an *operation*: a function registered with
:func:`operation` that validates completely before touching any balance, then
appends one :class:`Tx` to the log.  Replaying the log from the same genesis
reproduces the ledger exactly, which is how snapshots are verified on load.
"""
from __future__ import annotations

import functools
import inspect
import logging
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from ..numeric import Number
from . import codec
from .assets import (
    EMPTY_HISTORY, UNBET, AssetKey, ColoredAsset, EventId, History, HistoryEntry,
    Outcome, OutcomeTag, Unbet, VectorLeg, VectorSpec,
)

log = logging.getLogger(__name__)

SNAPSHOT_FORMAT = "predmarket-ledger/1"


class LedgerError(ValueError):
    """Base class for rejected transactions."""


class InsufficientBalance(LedgerError):
    pass


class InvalidTransaction(LedgerError):
    pass


class UnknownAddress(LedgerError):
    pass


class Unauthorized(LedgerError):
    pass


class SnapshotMismatch(LedgerError):
    pass


@dataclass(frozen=True)
class Tx:
    op: str
    args: Dict[str, Any]

    def to_json(self) -> dict:
        return {"op": self.op, "args": self.args}


# -- operation registry -------------------------------------------------------

def _opt(enc, dec):
    return (lambda v: None if v is None else enc(v)), (lambda r: None if r is None else dec(r))


def _enc_leg_histories(m):
    return {str(k): codec.enc_history(v) for k, v in sorted(m.items())}


def _dec_leg_histories(raw):
    return {int(k): codec.dec_history(v) for k, v in raw.items()}


_CODECS: Dict[str, Tuple[Callable, Callable]] = {
    "str": (str, str),
    "int": (int, int),
    "amount": (codec.enc_amount, codec.dec_amount),
    "eid": (codec.enc_eid, codec.dec_eid),
    "key": (codec.enc_key, codec.dec_key),
    "history": (codec.enc_history, codec.dec_history),
    "opt_history": _opt(codec.enc_history, codec.dec_history),
    "opt_str": _opt(str, str),
    "subset": (sorted, lambda r: frozenset(int(i) for i in r)),
    "spec": (codec.enc_spec, codec.dec_spec),
    "addrs": (list, lambda r: [str(a) for a in r]),
    "assets": (lambda xs: [codec.enc_asset(a) for a in xs],
               lambda xs: [codec.dec_asset(a) for a in xs]),
    "leg_histories": _opt(_enc_leg_histories, _dec_leg_histories),
}

OPERATIONS: Dict[str, Callable] = {}


def operation(name: str, **schema: str):
    """Register ``fn(ledger, **args)`` as the ledger operation ``name``.

    ``schema`` maps each argument to a codec name; arguments are decoded on the
    way in (so raw script values are accepted) and encoded into the log.
    """

    def deco(fn):
        sig = inspect.signature(fn)
        first = next(iter(sig.parameters))

        @functools.wraps(fn)
        def wrapper(ledger: "Ledger", *args, **kwargs):
            bound = sig.bind(ledger, *args, **kwargs)
            bound.apply_defaults()
            params = {k: v for k, v in bound.arguments.items() if k != first}
            try:
                decoded = {k: _CODECS[schema[k]][1](v) for k, v in params.items()}
            except (TypeError, ValueError, KeyError) as exc:
                raise InvalidTransaction(f"{name}: cannot decode arguments: {exc}") from exc
            with ledger._lock:
                result = fn(ledger, **decoded)
                encoded = {k: _CODECS[schema[k]][0](v) for k, v in decoded.items()}
                ledger.tx_log.append(Tx(name, encoded))
            return result

        OPERATIONS[name] = wrapper
        return wrapper

    return deco


# -- counters -----------------------------------------------------------------

def _zero():
    return Fraction(0)


@dataclass
class Counters:
    arity: Dict[EventId, int] = field(default_factory=dict)
    split_created: Dict[EventId, Fraction] = field(default_factory=lambda: defaultdict(_zero))
    combined: Dict[EventId, Fraction] = field(default_factory=lambda: defaultdict(_zero))
    forced: Dict[EventId, Dict[FrozenSet[int], Fraction]] = field(
        default_factory=lambda: defaultdict(lambda: defaultdict(_zero)))
    burned: Dict[OutcomeTag, Fraction] = field(default_factory=lambda: defaultdict(_zero))
    vector_created: Dict[Tuple[EventId, VectorSpec], Fraction] = field(
        default_factory=lambda: defaultdict(_zero))
    vector_consumed: Dict[VectorLeg, Fraction] = field(default_factory=lambda: defaultdict(_zero))
    vector_redeemed: Dict[EventId, Fraction] = field(default_factory=lambda: defaultdict(_zero))

    def to_json(self) -> dict:
        A = codec.enc_amount
        return {
            "events": sorted(
                [{"event": e.hex, "arity": self.arity[e],
                  "split_created": A(self.split_created.get(e, 0)),
                  "combined": A(self.combined.get(e, 0)),
                  "forced": sorted([[sorted(s), A(v)] for s, v in self.forced.get(e, {}).items()])}
                 for e in self.arity], key=lambda d: d["event"]),
            "burned": sorted([[codec.enc_tag(t), A(v)] for t, v in self.burned.items()],
                             key=lambda r: codec.dumps(r)),
            "vectors": sorted(
                [{"event": e.hex, "spec": codec.enc_spec(s), "created": A(v),
                  "consumed": [A(self.vector_consumed.get(VectorLeg(e, s, j), 0))
                               for j in range(1, s.k + 1)]}
                 for (e, s), v in self.vector_created.items()], key=codec.dumps),
            "vector_redeemed": {e.hex: A(v) for e, v in self.vector_redeemed.items()},
        }


# -- audit --------------------------------------------------------------------

@dataclass
class AuditReport:
    violations: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __iter__(self):
        return iter(self.violations)

    def __len__(self):
        return len(self.violations)


# -- the ledger ---------------------------------------------------------------

class Ledger:
    """Address -> colored-asset balances, with an append-only transaction log.

    Mutations are serialized by an internal lock; readers should work from
    :meth:`snapshot` or :meth:`holdings`, which return copies.
    """

    def __init__(self, genesis: Optional[Mapping[str, Number]] = None,
                 controllers: Optional[Mapping[str, str]] = None):
        self._lock = threading.RLock()
        self.genesis: Dict[str, Fraction] = {}
        for addr, amount in (genesis or {}).items():
            amount = codec.dec_amount(amount)
            if amount <= 0:
                raise InvalidTransaction(f"genesis endowment of {addr} must be positive")
            self.genesis[str(addr)] = amount
        self.initial_controllers: Dict[str, str] = {str(a): str(c) for a, c in (controllers or {}).items()}
        self.controllers: Dict[str, str] = {a: a for a in self.genesis}
        self.controllers.update(self.initial_controllers)
        self.balances: Dict[str, Dict[AssetKey, Fraction]] = {
            a: {(UNBET, EMPTY_HISTORY): amt} for a, amt in self.genesis.items()}
        self.tx_log: List[Tx] = []
        self.counters = Counters()
        self.announcements: List[Tuple[str, ...]] = []

    # -- reads --

    def balance(self, address: str, key: AssetKey) -> Fraction:
        return self.balances.get(address, {}).get(key, Fraction(0))

    def holdings(self, address: str) -> List[ColoredAsset]:
        held = self.balances.get(address, {})
        return [ColoredAsset(amt, tag, h)
                for (tag, h), amt in sorted(held.items(), key=lambda kv: codec.key_sort(kv[0]))]

    def addresses(self) -> List[str]:
        return sorted(set(self.controllers) | set(self.balances))

    def total(self, key: AssetKey) -> Fraction:
        return sum((b.get(key, 0) for b in self.balances.values()), Fraction(0))

    def totals(self) -> Dict[AssetKey, Fraction]:
        out: Dict[AssetKey, Fraction] = defaultdict(_zero)
        for held in self.balances.values():
            for key, amt in held.items():
                out[key] += amt
        return dict(out)

    def known(self, address: str) -> bool:
        return address in self.controllers or address in self.balances

    # -- primitive mutation --

    def _settle(self, debits: Iterable[Tuple[str, AssetKey, Fraction]],
                credits: Iterable[Tuple[str, AssetKey, Fraction]]) -> None:
        """Check every debit is covered, then apply debits and credits together."""
        debits, credits = list(debits), list(credits)
        need: Dict[Tuple[str, AssetKey], Fraction] = defaultdict(_zero)
        for addr, key, amt in debits + credits:
            if amt <= 0:
                raise InvalidTransaction(f"amount must be positive, got {amt}")
        for addr, key, amt in debits:
            need[(addr, key)] += amt
        for (addr, key), amt in need.items():
            have = self.balance(addr, key)
            if have < amt:
                raise InsufficientBalance(
                    f"{addr} holds {have} of {_describe(key)}, needs {amt}")
        for addr, key, amt in debits:
            held = self.balances[addr]
            held[key] -= amt
            if held[key] == 0:
                del held[key]
        for addr, key, amt in credits:
            self.balances.setdefault(addr, {})
            self.balances[addr][key] = self.balances[addr].get(key, Fraction(0)) + amt
            self.controllers.setdefault(addr, addr)

    def _require_arity(self, eid: EventId) -> int:
        if eid not in self.counters.arity:
            raise InvalidTransaction(f"event {eid} has never been split")
        return self.counters.arity[eid]

    def _pick_history(self, owner: str, tags: List[OutcomeTag], amount: Fraction,
                      exclude_eid: Optional[EventId] = None) -> History:
        """The unique history under which ``owner`` holds ``amount`` of every tag."""
        held = self.balances.get(owner, {})
        per_tag = [{h for (t, h), a in held.items() if t == tag and a >= amount} for tag in tags]
        common = set.intersection(*per_tag) if per_tag else set()
        if exclude_eid is not None:
            common = {h for h in common if all(e.eid != exclude_eid for e in h)}
        if len(common) == 1:
            return common.pop()
        if len(common) > 1:
            raise InvalidTransaction(
                f"{owner} holds the legs under several histories; pass one explicitly")
        if all(per_tag):
            raise InvalidTransaction("consumed legs must all carry the same history")
        raise InsufficientBalance(f"{owner} lacks {amount} of some of {tags}")

    # -- public view of ownership --

    def ownership_groups(self) -> List[Tuple[str, ...]]:
        """Addresses partitioned by the publicly announced common-owner links."""
        parent = {a: a for a in self.addresses()}

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for group in self.announcements:
            root = find(group[0])
            for a in group[1:]:
                parent[find(a)] = root
        groups: Dict[str, List[str]] = defaultdict(list)
        for a in parent:
            groups[find(a)].append(a)
        return sorted(tuple(sorted(g)) for g in groups.values())

    def public_view(self, eid: EventId) -> Tuple[Tuple[Tuple[str, ...], Tuple[Tuple[int, Fraction], ...]], ...]:
        """Per publicly known owner, the amount held of each outcome of ``eid``.

        Owners holding nothing of the event are omitted.
        """
        view = []
        for group in self.ownership_groups():
            legs: Dict[int, Fraction] = defaultdict(_zero)
            for addr in group:
                for (tag, _h), amt in self.balances.get(addr, {}).items():
                    if isinstance(tag, Outcome) and tag.eid == eid:
                        legs[tag.index] += amt
            if legs:
                view.append((group, tuple(sorted(legs.items()))))
        return tuple(view)

    # -- audit --

    def check_invariants(self) -> AuditReport:
        """Evaluate every conservation invariant; never mutates."""
        report = AuditReport()
        c = self.counters
        totals: Dict[AssetKey, Fraction] = defaultdict(_zero)
        for addr, held in self.balances.items():
            for key, amt in held.items():
                tag, h = key
                if amt <= 0:
                    report.violations.append(f"{addr}: nonpositive balance {amt} of {_describe(key)}")
                if not isinstance(h, frozenset):
                    report.violations.append(f"{addr}: history of {_describe(key)} is not a set")
                events = [e.eid for e in h]
                if len(events) != len(set(events)):
                    report.warnings.append(
                        f"{addr}: history of {_describe(key)} holds several entries for one event")
                totals[key] += amt

        by_tag: Dict[OutcomeTag, Fraction] = defaultdict(_zero)
        for (tag, _h), amt in totals.items():
            by_tag[tag] += amt

        for tag in by_tag:
            if isinstance(tag, Outcome) and c.arity.get(tag.eid) != tag.arity:
                report.violations.append(f"balance in {tag!r} of an event never split with arity {tag.arity}")
            if isinstance(tag, VectorLeg) and (tag.eid, tag.spec) not in c.vector_created:
                report.violations.append(f"balance in {tag!r} of a vector never split")

        for eid, arity in c.arity.items():
            created = c.split_created.get(eid, Fraction(0))
            combined = c.combined.get(eid, Fraction(0))
            forced = c.forced.get(eid, {})
            for i in range(1, arity + 1):
                tag = Outcome(eid, i, arity)
                lhs = (by_tag.get(tag, 0) + combined
                       + sum((v for s, v in forced.items() if i in s), Fraction(0))
                       + c.burned.get(tag, 0))
                if lhs != created:
                    report.violations.append(
                        f"leg conservation broken for {tag!r}: accounted {lhs} != split {created}")

        for (eid, spec), created in c.vector_created.items():
            for j in range(1, spec.k + 1):
                leg = VectorLeg(eid, spec, j)
                lhs = by_tag.get(leg, 0) + c.vector_consumed.get(leg, 0) + c.burned.get(leg, 0)
                if lhs != created:
                    report.violations.append(
                        f"vector leg conservation broken for {leg!r}: accounted {lhs} != split {created}")

        endowment = sum(self.genesis.values(), Fraction(0))
        expected_unbet = (endowment
                          - sum(c.split_created.values(), Fraction(0))
                          - sum(c.vector_created.values(), Fraction(0))
                          + sum(c.combined.values(), Fraction(0))
                          + sum((v for f in c.forced.values() for v in f.values()), Fraction(0))
                          + sum(c.vector_redeemed.values(), Fraction(0))
                          - c.burned.get(UNBET, Fraction(0)))
        unbet = by_tag.get(UNBET, Fraction(0))
        if unbet != expected_unbet:
            report.violations.append(f"unbet coin supply {unbet} != accounted {expected_unbet}")
        clean = totals.get((UNBET, EMPTY_HISTORY), Fraction(0))
        if clean > endowment:
            report.violations.append(f"clean coins {clean} exceed the genesis endowment {endowment}")
        return report

    # -- persistence --

    def to_json(self) -> dict:
        return {
            "format": SNAPSHOT_FORMAT,
            "genesis": {a: codec.enc_amount(v) for a, v in sorted(self.genesis.items())},
            "controllers": dict(sorted(self.initial_controllers.items())),
            "tx_log": [tx.to_json() for tx in self.tx_log],
            "counters": self.counters.to_json(),
            "balances": {a: [codec.enc_asset(x) for x in self.holdings(a)]
                         for a in sorted(self.balances) if self.balances[a]},
            "announcements": [list(g) for g in self.announcements],
        }

    def snapshot(self) -> str:
        """Canonical, order-stable text serialization of the full ledger."""
        with self._lock:
            return codec.dumps(self.to_json())

    @classmethod
    def replay(cls, genesis: Mapping[str, Number], tx_log: Iterable[Any],
               controllers: Optional[Mapping[str, str]] = None) -> "Ledger":
        ledger = cls(genesis, controllers)
        for tx in tx_log:
            if isinstance(tx, Tx):
                ledger.apply(tx.op, tx.args)
            else:
                ledger.apply(tx["op"], tx.get("args", {}))
        return ledger

    @classmethod
    def from_snapshot(cls, text: str) -> "Ledger":
        """Rebuild by replaying the snapshot's log; reject it if the result differs."""
        data = codec.loads(text)
        if data.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotMismatch(f"unsupported snapshot format {data.get('format')!r}")
        ledger = cls.replay(data["genesis"], data["tx_log"], data.get("controllers"))
        rebuilt = ledger.to_json()
        for section in ("counters", "balances", "announcements"):
            if codec.dumps(rebuilt[section]) != codec.dumps(data[section]):
                raise SnapshotMismatch(f"snapshot {section} disagree with its own transaction log")
        return ledger

    def copy(self) -> "Ledger":
        return Ledger.replay(self.genesis, list(self.tx_log), self.initial_controllers)

    def apply(self, op: str, args: Optional[Mapping[str, Any]] = None):
        """Apply a named operation with raw (script or log) arguments."""
        try:
            fn = OPERATIONS[op]
        except KeyError:
            raise InvalidTransaction(f"unknown operation {op!r}") from None
        try:
            return fn(self, **dict(args or {}))
        except TypeError as exc:
            raise InvalidTransaction(f"bad arguments for {op}: {exc}") from exc


def _describe(key: AssetKey) -> str:
    tag, h = key
    tag_text = "unbet" if isinstance(tag, Unbet) else repr(tag)
    if not h:
        return tag_text
    return f"{tag_text} with history {sorted(repr(e) for e in h)}"


# -- operations -----------------------------------------------------------------

@operation("register", address="str", controller="str")
def register(ledger: Ledger, address: str, controller: str):
    """Declare which actor controls ``address`` (defaults to the address itself)."""
    current = ledger.controllers.get(address)
    if current is not None and current != controller and (
            ledger.balances.get(address) or address in ledger.genesis):
        raise Unauthorized(f"{address} is already controlled by {current}")
    ledger.controllers[address] = controller


@operation("transfer", src="str", dst="str", key="key", amount="amount")
def transfer(ledger: Ledger, src: str, dst: str, key: AssetKey, amount: Fraction):
    if amount <= 0:
        raise InvalidTransaction("transfer amount must be positive")
    ledger._settle([(src, key, amount)], [(dst, key, amount)])


@operation("outcome_split", owner="str", amount="amount", eid="eid", arity="int", history="history")
def outcome_split(ledger: Ledger, owner: str, amount: Fraction, eid: EventId,
                  arity: int = 2, history: History = EMPTY_HISTORY):
    """Turn ``amount`` unbet coins into ``amount`` shares of each of ``arity`` outcomes."""
    if arity < 2:
        raise InvalidTransaction("an event needs at least two outcomes")
    if amount <= 0:
        raise InvalidTransaction("split amount must be positive")
    known = ledger.counters.arity.get(eid)
    if known is not None and known != arity:
        raise InvalidTransaction(f"event {eid} was split with arity {known}, not {arity}")
    ledger._settle([(owner, (UNBET, history), amount)],
                   [(owner, (Outcome(eid, i, arity), history), amount) for i in range(1, arity + 1)])
    ledger.counters.arity[eid] = arity
    ledger.counters.split_created[eid] += amount


@operation("outcome_combine", owner="str", eid="eid", amount="amount", histories="leg_histories")
def outcome_combine(ledger: Ledger, owner: str, eid: EventId, amount: Fraction,
                    histories: Optional[Dict[int, History]] = None):
    """Redeem ``amount`` of every outcome of ``eid`` for unbet coins.

    The output history is the union of the consumed legs' histories. Where a
    leg is held under several histories, ``histories`` must say which one.
    """
    if amount <= 0:
        raise InvalidTransaction("combine amount must be positive")
    arity = ledger._require_arity(eid)
    chosen = dict(histories or {})
    for i in range(1, arity + 1):
        if i not in chosen:
            chosen[i] = ledger._pick_history(owner, [Outcome(eid, i, arity)], amount)
    merged = frozenset().union(*chosen.values())
    ledger._settle([(owner, (Outcome(eid, i, arity), chosen[i]), amount) for i in range(1, arity + 1)],
                   [(owner, (UNBET, merged), amount)])
    ledger.counters.combined[eid] += amount


@operation("outcome_force", owner="str", eid="eid", subset="subset", amount="amount",
           history="opt_history")
def outcome_force(ledger: Ledger, owner: str, eid: EventId, subset: FrozenSet[int],
                  amount: Fraction, history: Optional[History] = None):
    """Convert shares of the outcomes in ``subset`` into coins encumbered by that claim."""
    if amount <= 0:
        raise InvalidTransaction("force amount must be positive")
    arity = ledger._require_arity(eid)
    if not subset:
        raise InvalidTransaction("forced subset must be nonempty")
    if not all(1 <= i <= arity for i in subset):
        raise InvalidTransaction(f"forced subset {sorted(subset)} outside 1..{arity}")
    if len(subset) == arity:
        raise InvalidTransaction("forcing every outcome is a combine, not a force")
    tags = [Outcome(eid, i, arity) for i in sorted(subset)]
    if history is None:
        history = ledger._pick_history(owner, tags, amount, exclude_eid=eid)
    elif any(e.eid == eid for e in history):
        raise InvalidTransaction(f"history already records event {eid}")
    entry = HistoryEntry(eid, subset, arity)
    ledger._settle([(owner, (t, history), amount) for t in tags],
                   [(owner, (UNBET, history | {entry}), amount)])
    ledger.counters.forced[eid][subset] += amount


@operation("burn", owner="str", key="key", amount="amount")
def burn(ledger: Ledger, owner: str, key: AssetKey, amount: Fraction):
    """Destroy assets publicly: the log entry is the proof of destruction."""
    if amount <= 0:
        raise InvalidTransaction("burn amount must be positive")
    ledger._settle([(owner, key, amount)], [])
    ledger.counters.burned[key[0]] += amount


@operation("announce_ownership", addresses="addrs", message="str", actor="opt_str")
def announce_ownership(ledger: Ledger, addresses: List[str], message: str,
                       actor: Optional[str] = None):
    """Publicly link ``addresses`` as having one common owner."""
    if not addresses:
        raise InvalidTransaction("nothing to announce")
    for a in addresses:
        if not ledger.known(a):
            raise UnknownAddress(f"unknown address {a}")
    actor = actor if actor is not None else ledger.controllers[addresses[0]]
    for a in addresses:
        if ledger.controllers[a] != actor:
            raise Unauthorized(f"{actor} does not control {a}")
    ledger.announcements.append(tuple(sorted(set(addresses))))
