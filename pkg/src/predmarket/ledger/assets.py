"""Identity and tagging of colored assets: event ids, outcome tags, histories."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import FrozenSet, Iterable, Optional, Tuple, Union

from ..numeric import Number, to_fraction

HASH_NAME = "sha256"


def _digest(data: bytes) -> bytes:
    return hashlib.new(HASH_NAME, data).digest()


@dataclass(frozen=True, order=True)
class EventId:
    digest: bytes

    def __post_init__(self):
        if not isinstance(self.digest, bytes) or len(self.digest) != 32:
            raise ValueError("an event id is a 32-byte digest")

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def from_hex(cls, text: str) -> "EventId":
        return cls(bytes.fromhex(text))

    def __str__(self) -> str:
        return self.hex[:12]

    def __repr__(self) -> str:
        return f"EventId({self.hex[:12]}...)"


def derive_event_id(description: str) -> EventId:
    """Event id of a textual event description (SHA-256 of its UTF-8 bytes)."""
    if not isinstance(description, str) or not description:
        raise ValueError("event description must be a nonempty string")
    return EventId(_digest(description.encode("utf-8")))


class Unbet:
    """Tag of ordinary, unbet coins. Use the module-level ``UNBET`` singleton."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBET"

    def __reduce__(self):
        return (Unbet, ())


UNBET = Unbet()


@dataclass(frozen=True)
class Outcome:
    """Share of outcome ``index`` out of ``arity`` for event ``eid``.

    Binary Yes/No shares are the ``arity == 2`` case: Yes is index 1, No is index 2.
    """

    eid: EventId
    index: int
    arity: int = 2

    def __post_init__(self):
        if self.arity < 2:
            raise ValueError(f"arity must be at least 2, got {self.arity}")
        if not 1 <= self.index <= self.arity:
            raise ValueError(f"outcome index {self.index} outside 1..{self.arity}")

    @property
    def label(self) -> str:
        if self.arity == 2:
            return "Yes" if self.index == 1 else "No"
        return str(self.index)

    def __repr__(self) -> str:
        return f"{self.label}:{self.eid}"


def yes(eid: EventId) -> Outcome:
    return Outcome(eid, 1, 2)


def no(eid: EventId) -> Outcome:
    return Outcome(eid, 2, 2)


@dataclass(frozen=True)
class VectorSpec:
    """Prediction vector ((b_1, w_1), ..., (b_k, w_k)) of a vector CFD."""

    outcomes: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        pairs = tuple((to_fraction(b), to_fraction(w)) for b, w in self.outcomes)
        object.__setattr__(self, "outcomes", pairs)
        if len(pairs) < 2:
            raise ValueError("a vector spec needs at least two outcomes")
        if any(w <= 0 for _, w in pairs):
            raise ValueError("vector weights must be positive")
        if any(b < 0 for b, _ in pairs):
            raise ValueError("predicted price levels must be nonnegative")
        if sum(w for _, w in pairs) != 1:
            raise ValueError("vector weights must sum to exactly 1")
        # s == 0 would let every single leg satisfy the combine constraint
        if self.expected == 0:
            raise ValueError("vector spec must predict a positive expected price")

    @classmethod
    def from_flat(cls, *values: Number) -> "VectorSpec":
        """Build from the flat (b1, w1, b2, w2, ...) notation."""
        if len(values) % 2:
            raise ValueError("flat vector notation needs (b, w) pairs")
        return cls(tuple(zip(values[::2], values[1::2])))

    @property
    def k(self) -> int:
        return len(self.outcomes)

    @property
    def expected(self) -> Fraction:
        """Weighted sum of the predicted levels, Σ w_i b_i."""
        return sum((w * b for b, w in self.outcomes), Fraction(0))

    def leg_value(self, leg: int) -> Fraction:
        b, w = self.outcomes[leg - 1]
        return w * b

    def weight(self, leg: int) -> Fraction:
        return self.outcomes[leg - 1][1]


@dataclass(frozen=True)
class VectorLeg:
    eid: EventId
    spec: VectorSpec
    leg: int

    def __post_init__(self):
        if not 1 <= self.leg <= self.spec.k:
            raise ValueError(f"vector leg {self.leg} outside 1..{self.spec.k}")

    def __repr__(self) -> str:
        return f"V{self.leg}:{self.eid}"


OutcomeTag = Union[Unbet, Outcome, VectorLeg]


@dataclass(frozen=True)
class HistoryEntry:
    """One forced claim recorded in a coin's history.

    Either a set of outcome indices forced for an event of known arity, or
    (for vector CFDs) a claimed settlement price.
    """

    eid: EventId
    outcomes: FrozenSet[int] = field(default_factory=frozenset)
    arity: Optional[int] = None
    settlement: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "outcomes", frozenset(self.outcomes))
        if self.settlement is not None:
            object.__setattr__(self, "settlement", to_fraction(self.settlement))
            if self.outcomes or self.arity is not None:
                raise ValueError("a settlement entry carries no outcome subset")
            return
        if self.arity is None or self.arity < 2:
            raise ValueError("forced entry needs an arity of at least 2")
        if not self.outcomes:
            raise ValueError("forced subset must be nonempty")
        if not all(1 <= i <= self.arity for i in self.outcomes):
            raise ValueError("forced subset has indices outside 1..arity")
        if len(self.outcomes) == self.arity:
            raise ValueError("forcing every outcome is a combine, not a force")

    def sort_key(self):
        return (self.eid.digest, tuple(sorted(self.outcomes)), self.settlement or Fraction(0))

    def serialize(self) -> str:
        if self.settlement is not None:
            return f"{self.eid.hex}={self.settlement}"
        indices = ",".join(str(i) for i in sorted(self.outcomes))
        return f"{self.eid.hex}:{indices}/{self.arity}"

    def __repr__(self) -> str:
        if self.settlement is not None:
            return f"{{{self.eid}={self.settlement}}}"
        if self.arity == 2:
            return f"{{{'Yes' if 1 in self.outcomes else 'No'}:{self.eid}}}"
        return "{" + ",".join(f"{i}:{self.eid}" for i in sorted(self.outcomes)) + "}"


History = FrozenSet[HistoryEntry]
EMPTY_HISTORY: History = frozenset()
AssetKey = Tuple[OutcomeTag, History]


def forced(eid: EventId, outcomes: Iterable[int], arity: int = 2) -> HistoryEntry:
    return HistoryEntry(eid, frozenset(outcomes), arity)


def history(*entries: HistoryEntry) -> History:
    return frozenset(entries)


def history_events(h: History) -> list:
    return [e.eid for e in h]


def canonical_set_id(entries: Iterable[HistoryEntry]) -> bytes:
    """Order-independent digest of a history set.

    Entries are ordered by event digest then by sorted outcome indices, joined
    with ``;`` and hashed. The empty set hashes the empty string.
    """
    ordered = sorted(set(entries), key=HistoryEntry.sort_key)
    return _digest(";".join(e.serialize() for e in ordered).encode("ascii"))


class SetIdError(ValueError):
    pass


def extend_set_id(claimed_id: bytes, preimage: Iterable[HistoryEntry],
                  additions: Iterable[HistoryEntry]) -> bytes:
    """Re-hash a set-id into a larger set given its revealed preimage."""
    preimage, additions = frozenset(preimage), frozenset(additions)
    if canonical_set_id(preimage) != claimed_id:
        raise SetIdError("preimage does not hash to the claimed set-id")
    overlap = {e.eid for e in preimage} & {e.eid for e in additions}
    if overlap:
        raise SetIdError(f"additions repeat events already in the set: {sorted(str(e) for e in overlap)}")
    return canonical_set_id(preimage | additions)


@dataclass(frozen=True)
class ColoredAsset:
    amount: Fraction
    tag: OutcomeTag
    history: History = EMPTY_HISTORY

    @property
    def key(self) -> AssetKey:
        return (self.tag, self.history)
