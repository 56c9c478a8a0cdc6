from itertools import combinations, permutations
from math import factorial

import numpy as np
import pytest

from statecomm.cardtrick import (
    Arrangement,
    CardTrickInstance,
    decode_trick,
    encode_trick,
    max_deck,
    rank_permutation,
    unrank_permutation,
    verify_roundtrip,
    _residue_class,
)
from statecomm.errors import (
    EncodingInfeasibleError,
    UndecodableArrangementError,
    ValidationError,
)


class TestMaxDeck:
    @pytest.mark.parametrize("k,n", [(2, 3), (3, 8), (4, 27), (5, 124)])
    def test_values(self, k, n):
        assert max_deck(k) == n

    def test_guard(self):
        with pytest.raises(ValidationError):
            max_deck(1)
        with pytest.raises(ValidationError):
            max_deck(21)


class TestLehmer:
    def test_identity_is_rank_zero(self):
        assert rank_permutation([0, 1, 2]) == 0

    def test_reversal_is_last(self):
        assert unrank_permutation(5, [0, 1, 2]) == [2, 1, 0]

    def test_round_trip_all_of_four(self):
        items = [3, 1, 4, 7]
        seen = set()
        for t in range(factorial(4)):
            perm = unrank_permutation(t, items)
            assert rank_permutation(perm) == t
            seen.add(tuple(perm))
        assert seen == set(permutations(sorted(items)))

    def test_works_on_unsorted_values(self):
        assert rank_permutation([9, 2, 5]) == rank_permutation([2, 1, 0]) * 0 + rank_permutation(
            [9, 2, 5]
        )
        assert unrank_permutation(rank_permutation([9, 2, 5]), [2, 5, 9]) == [9, 2, 5]

    def test_duplicates_rejected(self):
        with pytest.raises(ValidationError):
            rank_permutation([1, 1, 2])
        with pytest.raises(ValidationError):
            unrank_permutation(0, [1, 1])

    def test_rank_out_of_range(self):
        with pytest.raises(ValidationError):
            unrank_permutation(6, [0, 1, 2])


class TestEncode:
    def test_worked_example_one(self):
        inst = CardTrickInstance(3, 2)
        hidden, arr = encode_trick(inst, {0, 1})
        assert hidden == 1
        assert arr.retained == (0,)

    def test_worked_example_two(self):
        inst = CardTrickInstance(3, 2)
        hidden, arr = encode_trick(inst, {1, 2})
        assert hidden == 2
        assert arr.retained == (1,)

    def test_hidden_in_hand_and_arrangement_is_rest(self):
        inst = CardTrickInstance(27, 4)
        rng = np.random.default_rng(0)
        for _ in range(200):
            hand = tuple(rng.choice(27, size=4, replace=False))
            hidden, arr = encode_trick(inst, hand)
            assert hidden in hand
            assert sorted(arr.retained + (hidden,)) == sorted(hand)

    def test_bad_hand(self):
        inst = CardTrickInstance(8, 3)
        with pytest.raises(ValidationError):
            encode_trick(inst, {1, 2})
        with pytest.raises(ValidationError):
            encode_trick(inst, {1, 2, 9})


class TestDecode:
    def test_inverse_of_worked_example(self):
        inst = CardTrickInstance(3, 2)
        assert decode_trick(inst, Arrangement((0,))) == 1

    def test_exhaustive_56(self):
        assert verify_roundtrip(CardTrickInstance(8, 3)) == (56, 56)

    def test_random_hands_at_extremal_deck(self):
        inst = CardTrickInstance(124, 5)
        rng = np.random.default_rng(1)
        for _ in range(500):
            hand = tuple(rng.choice(124, size=5, replace=False))
            hidden, arr = encode_trick(inst, hand)
            assert decode_trick(inst, arr) == hidden

    def test_undecodable_arrangement(self):
        # N = 4, K = 3: renumbered positions are [0, 1], and the residue
        # class = 2 (mod 3) is empty, so retained sums ≡ 1 cannot decode.
        with pytest.raises(UndecodableArrangementError):
            decode_trick(CardTrickInstance(4, 3), Arrangement((1, 0)))


class TestFeasibilityBound:
    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_exhaustive_at_bound(self, k):
        n = max_deck(k)
        inst = CardTrickInstance(n, k)
        ok, total = verify_roundtrip(inst)
        assert ok == total

    @pytest.mark.parametrize("k", [2, 3])
    def test_counterexample_past_bound(self, k):
        inst = CardTrickInstance(max_deck(k) + 1, k)
        assert not inst.feasible
        witnesses = 0
        for hand in combinations(range(inst.N), k):
            try:
                hidden, arr = encode_trick(inst, hand)
                assert decode_trick(inst, arr) == hidden
            except EncodingInfeasibleError:
                witnesses += 1
        assert witnesses > 0

    def test_residue_classes_exactly_factorial_at_bound(self):
        for k in (2, 3, 4):
            inst = CardTrickInstance(max_deck(k), k)
            for s in range(k):
                assert len(_residue_class(inst, s)) == factorial(k - 1)

    def test_encode_never_overflows_below_bound(self):
        rng = np.random.default_rng(2)
        for k in (2, 3, 4):
            for n in (max_deck(k), max_deck(k) - 1, max(k, max_deck(k) // 2)):
                inst = CardTrickInstance(n, k)
                for _ in range(50):
                    hand = tuple(rng.choice(n, size=k, replace=False))
                    encode_trick(inst, hand)  # must not raise


class TestInstanceValidation:
    def test_k_bounds(self):
        with pytest.raises(ValidationError):
            CardTrickInstance(3, 1)

    def test_n_at_least_k(self):
        with pytest.raises(ValidationError):
            CardTrickInstance(2, 3)

    def test_arrangement_duplicates(self):
        with pytest.raises(ValidationError):
            Arrangement((1, 1))
