"""Brute-force references kept independent of the library's search paths."""

import itertools
from collections import Counter
from fractions import Fraction


def exact_sq(p, q):
    return sum((Fraction(a) - Fraction(b)) ** 2 for a, b in zip(p, q))


def brute_family(x, points, K):
    """All K-subsets whose sorted distance profile is lexicographically minimal."""
    d = [exact_sq(x, p) for p in points]
    best, members = None, []
    for combo in itertools.combinations(range(len(points)), K):
        profile = sorted(d[i] for i in combo)
        if best is None or profile < best:
            best, members = profile, [combo]
        elif profile == best:
            members.append(combo)
    return best, members


def brute_ambiguous(x, points, labels, K):
    """(distance profile, least mode frequency, minimizing sets) by enumeration."""
    profile, members = brute_family(x, points, K)
    freqs = {m: max(Counter(labels[i] for i in m).values()) for m in members}
    low = min(freqs.values())
    return profile, low, sorted(m for m, f in freqs.items() if f == low)


def brute_nearest(x, points):
    d = [exact_sq(x, p) for p in points]
    lo = min(d)
    return [i for i, v in enumerate(d) if v == lo]
