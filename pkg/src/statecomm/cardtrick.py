"""The K-card magic trick as exact zero-error state communication.

An audience member draws K cards from a deck of N; the magician hands one
back and lays the other K-1 face down in a chosen order; the partner names
the hidden card from that order alone.  Feasible exactly when
N <= K! + K - 1.

Encoding convention (one of many valid ones, fixed here so the two sides
agree): with the hand sorted ascending as c_0 < ... < c_{K-1},

* hide c_i where i = (sum of the hand) mod K;
* renumber the deck minus the K-1 retained cards as 0..N-K ascending; the
  hidden card's new number h is then congruent to -s (mod K), where s is
  the retained sum mod K;
* let t be h's position within the ascending members of that residue
  class; t < (K-1)! whenever N <= K! + K - 1, so t is conveyed by the
  Lehmer-rank-t permutation of the retained cards (sorted ascending as
  the reference order).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial

from .errors import (
    EncodingInfeasibleError,
    UndecodableArrangementError,
    ValidationError,
)

_MAX_K = 20


def max_deck(k: int) -> int:
    """Largest deck size for which the trick works with hands of size k."""
    if not isinstance(k, int) or not 2 <= k <= _MAX_K:
        raise ValidationError(f"hand size must be an integer in [2, {_MAX_K}], got {k!r}")
    return factorial(k) + k - 1


@dataclass(frozen=True)
class CardTrickInstance:
    """Deck of N cards numbered 0..N-1, hands of K cards.

    Construction permits N beyond the K! + K - 1 bound so the tightness
    of the bound can be exercised; encoding raises for hands that admit
    no arrangement (those exist exactly when N exceeds the bound).
    """

    N: int
    K: int

    def __post_init__(self):
        if not isinstance(self.K, int) or not 2 <= self.K <= _MAX_K:
            raise ValidationError(f"K must be an integer in [2, {_MAX_K}], got {self.K!r}")
        if not isinstance(self.N, int) or self.N < self.K:
            raise ValidationError(f"N must be an integer >= K, got {self.N!r}")

    @property
    def feasible(self) -> bool:
        return self.N <= max_deck(self.K)


@dataclass(frozen=True)
class Arrangement:
    """The ordered face-down pile of K-1 distinct cards."""

    retained: tuple

    def __post_init__(self):
        cards = tuple(int(c) for c in self.retained)
        if len(set(cards)) != len(cards):
            raise ValidationError(f"arrangement has duplicate cards: {cards}")
        if any(c < 0 for c in cards):
            raise ValidationError(f"arrangement has negative card numbers: {cards}")
        object.__setattr__(self, "retained", cards)

    def __len__(self):
        return len(self.retained)


def rank_permutation(perm) -> int:
    """Lehmer rank of ``perm`` among permutations of its own values."""
    perm = [int(v) for v in perm]
    pool = sorted(perm)
    if len(set(pool)) != len(pool):
        raise ValidationError(f"permutation has duplicate items: {perm}")
    rank = 0
    for i, v in enumerate(perm):
        j = pool.index(v)
        rank += j * factorial(len(pool) - 1)
        pool.pop(j)
    return rank


def unrank_permutation(rank: int, items) -> list:
    """Permutation of ``sorted(items)`` with the given Lehmer rank."""
    pool = sorted(int(v) for v in items)
    if len(set(pool)) != len(pool):
        raise ValidationError(f"items contain duplicates: {items}")
    if not 0 <= rank < factorial(len(pool)):
        raise ValidationError(f"rank {rank} out of range for {len(pool)} items")
    out = []
    r = rank
    for i in range(len(items)):
        f = factorial(len(pool) - 1)
        j, r = divmod(r, f)
        out.append(pool.pop(j))
    return out


def encode_trick(inst: CardTrickInstance, hand) -> tuple:
    """Pick the card to hide and the arrangement revealing it.

    Returns (hidden_card, Arrangement).  Raises EncodingInfeasibleError
    for hands with no legal arrangement (possible only when N exceeds
    max_deck(K)).
    """
    cards = _check_hand(inst, hand)
    k = inst.K
    i = sum(cards) % k
    hidden = cards[i]
    retained = cards[:i] + cards[i + 1 :]
    s = sum(retained) % k
    h = _renumber(hidden, retained)
    cls = _residue_class(inst, s)
    t = cls.index(h)
    if t >= factorial(k - 1):
        raise EncodingInfeasibleError(
            f"hand {cards} cannot be encoded: hidden card is entry {t} of its "
            f"residue class but only {factorial(k - 1)} arrangements exist "
            f"(N={inst.N} exceeds max_deck({k})={max_deck(k)})"
        )
    return hidden, Arrangement(tuple(unrank_permutation(t, retained)))


def decode_trick(inst: CardTrickInstance, arrangement: Arrangement) -> int:
    """Recover the hidden card from the arrangement (inverse of encode)."""
    if not isinstance(arrangement, Arrangement):
        arrangement = Arrangement(tuple(arrangement))
    if len(arrangement) != inst.K - 1:
        raise ValidationError(
            f"arrangement has {len(arrangement)} cards, expected K-1={inst.K - 1}"
        )
    if any(c >= inst.N for c in arrangement.retained):
        raise ValidationError(f"arrangement {arrangement.retained} has cards outside the deck")
    retained = list(arrangement.retained)
    s = sum(retained) % inst.K
    t = rank_permutation(retained)
    cls = _residue_class(inst, s)
    if t >= len(cls):
        raise UndecodableArrangementError(
            f"arrangement {arrangement.retained} indexes entry {t} of a residue "
            f"class with only {len(cls)} members"
        )
    h = cls[t]
    remaining = [c for c in range(inst.N) if c not in set(retained)]
    return remaining[h]


def verify_roundtrip(inst: CardTrickInstance):
    """Round-trip every C(N, K) hand; returns (successes, total)."""
    ok = 0
    total = 0
    for hand in combinations(range(inst.N), inst.K):
        total += 1
        hidden, arr = encode_trick(inst, hand)
        if decode_trick(inst, arr) == hidden:
            ok += 1
    return ok, total


def _check_hand(inst, hand):
    cards = sorted(int(c) for c in hand)
    if len(cards) != inst.K or len(set(cards)) != inst.K:
        raise ValidationError(f"hand must contain K={inst.K} distinct cards, got {list(hand)}")
    if cards[0] < 0 or cards[-1] >= inst.N:
        raise ValidationError(f"hand {cards} has cards outside the deck [0, {inst.N})")
    return cards


def _renumber(card, retained):
    # position of `card` in the deck with the retained cards removed
    return card - sum(1 for r in retained if r < card)


def _residue_class(inst, s):
    target = (-s) % inst.K
    return [h for h in range(inst.N - inst.K + 1) if h % inst.K == target]
