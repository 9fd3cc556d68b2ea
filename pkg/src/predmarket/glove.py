"""Shapley values of the "+"/"−" glove game with agreement probability p.

A coalition holding k "+" shares and l "−" shares is worth
``p*k + (1-p)*min(k, l)``.  The exact closed form for a "−" share is a
double sum over arrival positions; the "+" value follows from efficiency.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .numeric import Number, to_fraction

DEFAULT_MAX_PLAYERS = 12
MC_CHUNK = 20_000


class GloveError(ValueError):
    pass


class Side(enum.Enum):
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class GloveGame:
    m: int
    n: int
    p: Fraction

    def __post_init__(self):
        object.__setattr__(self, "p", _prob(self.p))
        if self.m < 0 or self.n < 0 or self.m + self.n < 1:
            raise GloveError(f"need m, n >= 0 and at least one player (got m={self.m}, n={self.n})")


@dataclass(frozen=True)
class ShapleyResult:
    v_plus: Fraction
    v_minus: Fraction
    s_plus: Fraction
    s_minus: Fraction


@dataclass(frozen=True)
class BurnAnalysis:
    side: Side
    initial_count: int
    keep: int
    revenue: Fraction


@dataclass(frozen=True)
class MonteCarloEstimate:
    v_minus: float
    v_plus: float
    se_minus: float
    se_plus: float
    samples: int
    seed: int


def _prob(p: Number) -> Fraction:
    p = to_fraction(p)
    if not 0 <= p <= 1:
        raise GloveError(f"agreement probability must lie in [0, 1], got {p}")
    return p


def coalition_value(k: int, l: int, p: Number) -> Fraction:
    p = to_fraction(p)
    return p * k + (1 - p) * min(k, l)


@lru_cache(maxsize=None)
def _minus_share(m: int, n: int) -> Fraction:
    """Value of one "−" share at p = 0, by the closed-form double sum.

    Position i of the "−" player in the arrival order, j of the i-1 players
    ahead of it holding "−".  It completes a pair exactly when the "+" players
    ahead outnumber the "−" ones, i.e. j <= floor(i/2) - 1.
    """
    total = m + n
    acc = 0
    for i in range(1, total + 1):
        weight = factorial(total - i) * factorial(i - 1)
        inner = 0
        for j in range(0, i // 2):  # empty when i == 1
            plus_ahead = i - j - 1
            if j > n - 1 or plus_ahead > m:
                continue
            inner += comb(n - 1, j) * comb(m, plus_ahead)
        acc += weight * inner
    return Fraction(acc, factorial(total))


def shapley_minus_exact(m: int, n: int, p: Number) -> Fraction:
    if n < 1:
        raise GloveError("the game has no '−' player")
    if m < 0:
        raise GloveError("m must be nonnegative")
    return (1 - _prob(p)) * _minus_share(m, n)


def shapley_plus_exact(m: int, n: int, p: Number) -> Fraction:
    """Value of one "+" share, from the "−" value via efficiency."""
    if m < 1:
        raise GloveError("the game has no '+' player")
    p = _prob(p)
    v_minus = shapley_minus_exact(m, n, p) if n else Fraction(0)
    return (m * p - n * v_minus + (1 - p) * min(m, n)) / m


def shapley(game: GloveGame) -> ShapleyResult:
    m, n, p = game.m, game.n, game.p
    s_minus = _minus_share(m, n) if n else Fraction(0)
    s_plus = shapley_plus_exact(m, n, 0) if m else Fraction(0)
    return ShapleyResult(
        v_plus=p + (1 - p) * s_plus if m else Fraction(0),
        v_minus=(1 - p) * s_minus,
        s_plus=s_plus,
        s_minus=s_minus,
    )


def shapley_bruteforce(players: Sequence[Tuple[str, int, int]], p: Number,
                       max_players: int = DEFAULT_MAX_PLAYERS) -> Dict[str, Fraction]:
    """Exact Shapley value of each ``(label, plus_shares, minus_shares)`` player.

    Averages marginal contributions over all arrival orders, grouped by the
    set of players that arrive first: a predecessor set S of size s occurs in
    s! (N-s-1)! of the N! orders.
    """
    p = _prob(p)
    count = len(players)
    if count == 0:
        raise GloveError("no players")
    if count > max_players:
        raise GloveError(f"{count} players exceeds the brute-force cap of {max_players}")
    labels = [label for label, _, _ in players]
    if len(set(labels)) != count:
        raise GloveError("player labels must be distinct")
    plus = [int(k) for _, k, _ in players]
    minus = [int(l) for _, _, l in players]
    if any(x < 0 for x in plus + minus):
        raise GloveError("share counts must be nonnegative")

    # coalition totals and values for every subset, indexed by bitmask
    size = 1 << count
    k_of = [0] * size
    l_of = [0] * size
    pop = [0] * size
    for mask in range(1, size):
        low = (mask & -mask).bit_length() - 1
        rest = mask & (mask - 1)
        k_of[mask] = k_of[rest] + plus[low]
        l_of[mask] = l_of[rest] + minus[low]
        pop[mask] = pop[rest] + 1
    value = [coalition_value(k_of[s], l_of[s], p) for s in range(size)]
    weight = [factorial(s) * factorial(count - s - 1) for s in range(count)]

    out: Dict[str, Fraction] = {}
    for idx, label in enumerate(labels):
        bit = 1 << idx
        acc = Fraction(0)
        for mask in range(size):
            if mask & bit:
                continue
            acc += weight[pop[mask]] * (value[mask | bit] - value[mask])
        out[label] = acc / factorial(count)
    return out


def singleton_players(m: int, n: int) -> List[Tuple[str, int, int]]:
    return [(f"+{i}", 1, 0) for i in range(m)] + [(f"-{i}", 0, 1) for i in range(n)]


def shapley_montecarlo(m: int, n: int, p: Number, samples: int, seed: int) -> MonteCarloEstimate:
    """Estimate both share values by sampling uniformly random arrival orders.

    Player 0 is the tracked "+" holder and player ``m`` the tracked "−"
    holder.  Uses numpy's PCG64 generator; output depends only on the inputs.
    """
    if samples < 1:
        raise GloveError("need at least one sample")
    if m < 1 or n < 1:
        raise GloveError("Monte Carlo needs at least one player of each kind")
    p = _prob(p)
    pf = float(p)
    rng = np.random.Generator(np.random.PCG64(seed))
    ids = np.arange(m + n)
    sum_minus = sum_plus = 0.0
    sq_minus = sq_plus = 0.0
    done = 0
    while done < samples:
        rows = min(MC_CHUNK, samples - done)
        perms = rng.permuted(np.tile(ids, (rows, 1)), axis=1)
        is_plus = perms < m
        plus_before = np.cumsum(is_plus, axis=1) - is_plus
        r = np.arange(rows)

        pos = np.argmax(perms == m, axis=1)
        k = plus_before[r, pos]
        l = pos - k
        marg_minus = (1 - pf) * (k > l)

        pos = np.argmax(perms == 0, axis=1)
        k = plus_before[r, pos]
        l = pos - k
        marg_plus = pf + (1 - pf) * (l > k)

        sum_minus += marg_minus.sum()
        sq_minus += (marg_minus ** 2).sum()
        sum_plus += marg_plus.sum()
        sq_plus += (marg_plus ** 2).sum()
        done += rows

    def stats(total, squares):
        mean = float(total) / samples
        if samples < 2:
            return mean, float("inf")
        var = max(squares - samples * mean * mean, 0.0) / (samples - 1)
        return mean, float((var / samples) ** 0.5)

    v_minus, se_minus = stats(sum_minus, sq_minus)
    v_plus, se_plus = stats(sum_plus, sq_plus)
    return MonteCarloEstimate(v_minus, v_plus, se_minus, se_plus, samples, seed)


def burn_revenue(side: Side, keep: int, opposing: int, p: Number) -> Fraction:
    """Total market value of ``keep`` shares once the rest are burned.

    The market prices the kept shares as ``keep`` independent singleton players.
    """
    side = Side(side)
    p = _prob(p)
    if keep < 1 or opposing < 1:
        raise GloveError("need at least one kept share and one opposing share")
    if side is Side.PLUS:
        return keep * (p + (1 - p) * shapley_plus_exact(keep, opposing, 0))
    return keep * (1 - p) * shapley_minus_exact(opposing, keep, 0)


def burn_curve(side: Side, initial: int, opposing: int, p: Number) -> List[Tuple[int, Fraction]]:
    return [(x, burn_revenue(side, x, opposing, p)) for x in range(1, initial + 1)]


def optimal_burn(side: Side, initial: int, opposing: int, p: Number) -> BurnAnalysis:
    """Best number of shares to keep; ties go to keeping more."""
    if initial < 1:
        raise GloveError("need at least one share to start with")
    side = Side(side)
    keep, revenue = max(burn_curve(side, initial, opposing, p), key=lambda xr: (xr[1], xr[0]))
    return BurnAnalysis(side, initial, keep, revenue)


def burn_argmax(side: Side, initial: int, opposing: int, p: Number) -> frozenset:
    """Every keep count attaining the maximal revenue."""
    curve = burn_curve(side, initial, opposing, p)
    best = max(r for _, r in curve)
    return frozenset(x for x, r in curve if r == best)


def consolidated_owner_value(m_consolidated: int, n_singletons: int, p: Number,
                             max_players: int = DEFAULT_MAX_PLAYERS) -> Fraction:
    """Shapley value of one owner of all ``m_consolidated`` "+" shares facing singleton "−" holders."""
    players = [("owner", m_consolidated, 0)] + [(f"-{i}", 0, 1) for i in range(n_singletons)]
    return shapley_bruteforce(players, p, max_players)["owner"]


def fungible_burn_total(total_value: Number, supply: int, held: int, burned: int) -> Fraction:
    """Holder's value after burning ``burned`` of ``held`` fungible coins: (m-x)/(n-x) * C."""
    C = to_fraction(total_value)
    if C <= 0:
        raise GloveError("total market value must be positive")
    if not 0 <= burned <= held:
        raise GloveError("must burn between 0 and the coins held")
    if held >= supply:
        raise GloveError("holder must own less than the whole supply")
    return Fraction(held - burned, supply - burned) * C


def value_surface(n: int, ms: Iterable[int], ps: Iterable[Number]) -> List[Tuple[Fraction, int, Fraction]]:
    """Rows ``(p, m, total)`` of a single "+" owner's value after keeping m shares against n."""
    if n < 1:
        raise GloveError("need at least one '−' share")
    ms, ps = list(ms), [_prob(p) for p in ps]
    if not ms or not ps:
        raise GloveError("empty grid")
    return [(p, m, burn_revenue(Side.PLUS, m, n, p)) for p in ps for m in ms]
