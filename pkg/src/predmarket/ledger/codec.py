"""Canonical JSON encoding of ledger values.

Binary outcomes are written with ``"side": "Yes"|"No"`` labels; N-ary outcomes
with ``"outcome"`` and ``"arity"``. Event ids are hex digests, but on input an
event may also be given as ``{"text": "..."}`` and is hashed on the spot.
Amounts are exact rationals written as strings (``"39/5"``).
"""
from __future__ import annotations

import json
from decimal import Decimal
from fractions import Fraction
from typing import Any

from ..numeric import to_fraction
from .assets import (
    UNBET, AssetKey, ColoredAsset, EventId, History, HistoryEntry, Outcome,
    OutcomeTag, Unbet, VectorLeg, VectorSpec, derive_event_id,
)

_SIDES = {"Yes": 1, "No": 2}


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def loads(text: str) -> Any:
    # floats parsed as Decimal so that 7142.8 stays exact
    return json.loads(text, parse_float=Decimal)


def enc_amount(x: Fraction) -> str:
    return str(Fraction(x))


def dec_amount(raw: Any) -> Fraction:
    return to_fraction(raw)


def enc_eid(eid: EventId) -> str:
    return eid.hex


def dec_eid(raw: Any) -> EventId:
    if isinstance(raw, EventId):
        return raw
    if isinstance(raw, dict) and "text" in raw:
        return derive_event_id(raw["text"])
    if isinstance(raw, str) and len(raw) == 64:
        return EventId.from_hex(raw)
    raise ValueError(f"cannot decode event id from {raw!r}")


def enc_spec(spec: VectorSpec) -> list:
    return [[enc_amount(b), enc_amount(w)] for b, w in spec.outcomes]


def dec_spec(raw: Any) -> VectorSpec:
    if isinstance(raw, VectorSpec):
        return raw
    return VectorSpec(tuple((dec_amount(b), dec_amount(w)) for b, w in raw))


def enc_tag(tag: OutcomeTag) -> Any:
    if isinstance(tag, Unbet):
        return None
    if isinstance(tag, Outcome):
        if tag.arity == 2:
            return {"event": enc_eid(tag.eid), "side": tag.label}
        return {"event": enc_eid(tag.eid), "outcome": tag.index, "arity": tag.arity}
    if isinstance(tag, VectorLeg):
        return {"event": enc_eid(tag.eid), "spec": enc_spec(tag.spec), "leg": tag.leg}
    raise TypeError(f"unknown tag {tag!r}")


def dec_tag(raw: Any) -> OutcomeTag:
    if raw is None or raw == "unbet":
        return UNBET
    eid = dec_eid(raw["event"])
    if "side" in raw:
        return Outcome(eid, _SIDES[raw["side"]], 2)
    if "outcome" in raw:
        return Outcome(eid, int(raw["outcome"]), int(raw["arity"]))
    if "leg" in raw:
        return VectorLeg(eid, dec_spec(raw["spec"]), int(raw["leg"]))
    raise ValueError(f"cannot decode tag from {raw!r}")


def enc_entry(entry: HistoryEntry) -> dict:
    if entry.settlement is not None:
        return {"event": enc_eid(entry.eid), "settlement": enc_amount(entry.settlement)}
    if entry.arity == 2:
        side = "Yes" if entry.outcomes == {1} else "No"
        return {"event": enc_eid(entry.eid), "side": side}
    return {"event": enc_eid(entry.eid), "outcomes": sorted(entry.outcomes), "arity": entry.arity}


def dec_entry(raw: dict) -> HistoryEntry:
    eid = dec_eid(raw["event"])
    if "settlement" in raw:
        return HistoryEntry(eid, settlement=dec_amount(raw["settlement"]))
    if "side" in raw:
        return HistoryEntry(eid, frozenset({_SIDES[raw["side"]]}), 2)
    return HistoryEntry(eid, frozenset(int(i) for i in raw["outcomes"]), int(raw["arity"]))


def enc_history(h: History) -> list:
    return [enc_entry(e) for e in sorted(h, key=HistoryEntry.sort_key)]


def dec_history(raw: Any) -> History:
    if raw is None:
        return frozenset()
    if isinstance(raw, frozenset):
        return raw
    return frozenset(dec_entry(e) for e in raw)


def enc_key(key: AssetKey) -> dict:
    tag, h = key
    return {"tag": enc_tag(tag), "history": enc_history(h)}


def dec_key(raw: Any) -> AssetKey:
    if isinstance(raw, tuple):
        return raw
    return (dec_tag(raw.get("tag")), dec_history(raw.get("history")))


def key_sort(key: AssetKey) -> str:
    """Total order on asset keys: their canonical JSON text."""
    return json.dumps(enc_key(key), sort_keys=True)


def enc_asset(asset: ColoredAsset) -> dict:
    return {**enc_key(asset.key), "amount": enc_amount(asset.amount)}


def dec_asset(raw: Any) -> ColoredAsset:
    if isinstance(raw, ColoredAsset):
        return raw
    if hasattr(raw, "colored"):
        return raw.colored()
    tag, h = dec_key(raw)
    return ColoredAsset(dec_amount(raw["amount"]), tag, h)
