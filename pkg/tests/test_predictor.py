import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_set
from oracles import brute_ambiguous, brute_family, brute_nearest, exact_sq
from selsample.domain import UsageError
from selsample.predictor import (
    SampleSet,
    TieFamily,
    k_nearest_tie_family,
    nearest_indices,
    predict_many,
    predict_mnn,
    predict_nn,
    select_ambiguous_set,
)

A, B, C = 0, 1, 2


def lattice_labels(pts):
    # a deterministic truth: duplicate coordinates always share a label
    return (np.round(np.asarray(pts) * 8).astype(int) @ np.array([1, 3])) % 3


def rng(seed=0):
    return np.random.default_rng(seed)


def test_sample_set_basics():
    Z = make_set([[0.1, 0.2], [0.3, 0.4]], [1, 0])
    assert len(Z) == 2
    assert Z[0].index == 1 and Z[1].index == 2
    assert Z[1].point == (0.3, 0.4) and Z[1].label == 0
    before = Z.checksum
    Z.append((0.1, 0.2), 1)  # duplicate coordinates are allowed
    assert len(Z) == 3 and Z.checksum != before
    assert Z.prefix(2).checksum == before


def test_nearest_indices_examples():
    Z = make_set([0.2, 0.8])
    assert nearest_indices((0.4,), Z) == [0]
    # exact ties need dyadic coordinates; 0.5 +/- 0.3 is not representable
    assert nearest_indices((0.5,), make_set([0.25, 0.75])) == [0, 1]
    Z = make_set([0.1, 0.2, 0.6, 0.9])
    assert nearest_indices((0.6,), Z) == [2]


def test_nearest_indices_empty():
    with pytest.raises(UsageError):
        nearest_indices((0.5,), SampleSet(1))


def test_nearest_exact_tie_on_lattice_matches_brute_force():
    gen = rng(1)
    for _ in range(300):
        pts = gen.integers(0, 9, size=(gen.integers(1, 12), 2)) / 8
        x = gen.integers(0, 17, size=2) / 16
        assert nearest_indices(x, make_set(pts)) == brute_nearest(x, pts)


def test_predict_nn_singleton_and_interpolation():
    Z = make_set([[0.3, 0.3]], [A])
    for x in rng().random((20, 2)):
        assert predict_nn(x, Z, rng()) == A
    Z = make_set([[0.1, 0.1], [0.7, 0.2], [0.4, 0.9]], [A, B, C])
    for s in Z:
        assert predict_nn(s.point, Z, rng()) == s.label


def test_predict_nn_uniform_tie():
    Z = make_set([0.25, 0.75], [A, B])
    gen = rng(42)
    wins = sum(predict_nn((0.5,), Z, gen) == A for _ in range(10_000))
    assert abs(wins / 10_000 - 0.5) < 3 * 0.005


def test_monotone_locality():
    gen = rng(7)
    pts = gen.random((30, 2))
    labels = gen.integers(0, 3, 30)
    Z = make_set(pts, labels)
    probes = gen.random((1000, 2))
    before = [(nearest_indices(x, Z), predict_nn(x, Z, rng(1))) for x in probes]
    Z.append(gen.random(2), 1)
    for x, (near, pred) in zip(probes, before):
        if nearest_indices(x, Z) == near:
            assert predict_nn(x, Z, rng(1)) == pred


def test_tie_family_examples():
    fam = k_nearest_tie_family((0.5,), make_set([0.3, 0.7, 0.1]), 2)
    assert fam.size == 1 and set(next(fam.members())) == {0, 1}
    fam = k_nearest_tie_family((0.5,), make_set([0.4, 0.6, 0.9]), 2)
    assert fam.size == 1 and set(next(fam.members())) == {0, 1}
    # distinct distances: one member
    fam = k_nearest_tie_family((0.5, 0.5), make_set(rng().random((8, 2))), 3)
    assert fam.size == 1


def test_tie_family_with_real_ties():
    # distances 1/4, 1/4, 1/2, 1/2 from 1/2; K = 3 keeps the first two plus one of the others
    Z = make_set([0.25, 0.75, 0.0, 1.0])
    fam = k_nearest_tie_family((0.5,), Z, 3)
    assert fam == TieFamily(prefix=(0, 1), ties=(2, 3), free=1)
    assert sorted(fam.members()) == [(0, 1, 2), (0, 1, 3)]


def test_tie_family_needs_enough_samples():
    with pytest.raises(UsageError):
        k_nearest_tie_family((0.5,), make_set([0.1]), 2)


def test_tie_family_matches_brute_force():
    gen = rng(2)
    mismatches = 0
    for _ in range(500):
        n = int(gen.integers(1, 13))
        pts = gen.integers(0, 5, size=(n, 2)) / 4
        x = gen.integers(0, 9, size=2) / 8
        K = int(gen.integers(1, n + 1))
        _, members = brute_family(x, pts, K)
        got = sorted(k_nearest_tie_family(x, make_set(pts), K).members())
        mismatches += got != sorted(members)
    assert mismatches == 0


def test_select_ambiguous_examples():
    fam = TieFamily(prefix=(0,), ties=(1, 2, 3), free=1)
    labels = np.array([A, A, A, B])
    assert select_ambiguous_set(fam, labels, rng()) == (0, 3)
    single = TieFamily(prefix=(0, 1), ties=(), free=0)
    assert select_ambiguous_set(single, labels, rng()) == (0, 1)
    same = TieFamily(prefix=(), ties=(0, 1, 2), free=2)
    chosen = select_ambiguous_set(same, np.zeros(3, dtype=int), rng())
    assert len(chosen) == 2


def test_select_ambiguous_uniform_among_minimizers():
    fam = TieFamily(prefix=(), ties=(0, 1, 2, 3), free=1)
    labels = np.array([A, B, C, A])
    gen = rng(3)
    counts = Counter(select_ambiguous_set(fam, labels, gen) for _ in range(4000))
    assert set(counts) == {(0,), (1,), (2,), (3,)}
    assert all(abs(c / 4000 - 0.25) < 4 * math.sqrt(0.25 * 0.75 / 4000) for c in counts.values())


def test_select_ambiguous_greedy_beyond_cap():
    # C(24, 12) members is far above the enumeration cap
    labels = np.array([A] * 12 + [B] * 6 + [C] * 6)
    fam = TieFamily(prefix=(), ties=tuple(range(24)), free=12)
    assert fam.size > 1000
    chosen = select_ambiguous_set(fam, labels, rng())
    assert len(chosen) == 12
    assert max(Counter(labels[list(chosen)]).values()) == 4


def test_predict_mnn_examples():
    Z = make_set([[0.5, 0.4], [0.5, 0.65], [0.5, 0.2], [0.9, 0.9]], [A, A, B, B])
    assert predict_mnn((0.5, 0.5), Z, 3, rng()) == A
    Z = make_set([[0.1, 0.1], [0.12, 0.1], [0.14, 0.1], [0.8, 0.8]], [A, A, A, B])
    assert predict_mnn((0.8, 0.8), Z, 3, rng()) == B


def test_predict_mnn_requires_m_samples():
    with pytest.raises(UsageError):
        predict_mnn((0.5,), make_set([0.1, 0.2]), 3, rng())


def test_predict_mnn_m1_equals_nn_with_ties():
    gen = rng(5)
    for _ in range(300):
        pts = gen.integers(0, 5, size=(int(gen.integers(1, 10)), 2)) / 4
        labels = lattice_labels(pts)
        Z = make_set(pts, labels)
        x = gen.integers(0, 9, size=2) / 8
        s = int(gen.integers(1 << 30))
        assert predict_mnn(x, Z, 1, rng(s)) == predict_nn(x, Z, rng(s))


def test_predict_mnn_uses_most_ambiguous_set():
    # x = 1/2 with A at distance 1/4 and tie group {A, B} at 1/2; m = 2 keeps A and
    # prefers B for the free slot, giving a 1:1 mode tie broken at random.
    Z = make_set([0.25, 0.0, 1.0], [A, A, B])
    gen = rng(9)
    votes = Counter(predict_mnn((0.5,), Z, 2, gen) for _ in range(2000))
    assert set(votes) == {A, B}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_predict_many_matches_scalar(seed, m):
    gen = rng(seed)
    pts = gen.integers(0, 9, size=(12, 2)) / 8
    Z = make_set(pts, lattice_labels(pts))
    queries = np.vstack([gen.integers(0, 17, size=(40, 2)) / 16, gen.random((40, 2))])
    fast = predict_many(queries, Z, m=m, seed=seed)
    for i, x in enumerate(queries):
        tie_rng = np.random.default_rng([seed, i])
        ref = predict_nn(x, Z, tie_rng) if m == 1 else predict_mnn(x, Z, m, tie_rng)
        assert fast[i] == ref


def test_ambiguous_selection_matches_brute_force():
    gen = rng(11)
    for _ in range(200):
        n = int(gen.integers(1, 11))
        pts = gen.integers(0, 5, size=(n, 2)) / 4
        labels = lattice_labels(pts)
        x = gen.integers(0, 9, size=2) / 8
        K = int(gen.integers(1, min(n, 4) + 1))
        profile, low, winners = brute_ambiguous(x, pts, labels, K)
        chosen = select_ambiguous_set(k_nearest_tie_family(x, make_set(pts, labels), K), labels, gen)
        assert sorted(exact_sq(x, pts[i]) for i in chosen) == profile
        assert max(Counter(labels[list(chosen)]).values()) == low
        assert chosen in winners
