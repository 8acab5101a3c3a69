"""Rank tables for the full set of conditional values of a structure.

Every conditional value Bel(A|U) is interned to a dense integer rank in
ascending value order.  The rank table `idb` is a flat int32 array addressed
by (U << n) | A, which lets the chain enumerations gather exact value
identities with numpy while all arithmetic stays in big-integer space.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

from .domain import (BeliefStructure, TooManyWorlds, _exact_ratio_sort,
                     _subset_sums)

# (U << n) | A addressing needs 2^(2n) int32 slots; 13 worlds -> 256 MiB.
MAX_INDEX_WORLDS = 13


class ValueIndex:
    """Distinct conditional values of a structure, ranked ascending."""

    def __init__(self, structure: BeliefStructure, values, idb, anchor: int):
        self.structure = structure
        self.values = values            # rank -> (p, q) canonical
        self.idb = idb                  # (U << n) | A -> rank
        self.anchor = anchor            # conditioning events were U ⊇ anchor
        self.nv = len(values)

    @property
    def zero_rank(self) -> int:
        return 0

    @property
    def one_rank(self) -> int:
        return self.nv - 1

    def value_of(self, rank: int) -> Fraction:
        p, q = self.values[int(rank)]
        return Fraction(p, q)

    def rank_of(self, value) -> int:
        """Exact binary search; raises KeyError if the value is not attained."""
        v = Fraction(value)
        p, q = v.numerator, v.denominator
        lo, hi = 0, self.nv
        while lo < hi:
            mid = (lo + hi) // 2
            mp, mq = self.values[mid]
            if mp * q < p * mq:
                lo = mid + 1
            else:
                hi = mid
        if lo < self.nv and self.values[lo] == (p, q):
            return lo
        raise KeyError("value %s not attained" % v)

    def rank_at(self, U: int, A: int) -> int:
        return int(self.idb[(U << self.structure.n) | A])


def build_value_index(structure: BeliefStructure, anchor: int = 0) -> ValueIndex:
    """Intern Bel(A|U) for all A ⊆ U, over nonempty U ⊇ anchor."""
    n = structure.n
    if n > MAX_INDEX_WORLDS:
        raise TooManyWorlds(
            "value indexing capped at %d worlds" % MAX_INDEX_WORLDS)
    L, base, pert = structure.scaled_weights()
    # The pure branch only needs the base table's own common denominator,
    # which keeps its gcd work on small integers even when the perturbed
    # table forces a huge global scale.
    Lb = 1
    for v in structure.f:
        Lb = Lb * v.denominator // gcd(Lb, v.denominator)
    small = _subset_sums([int(v * Lb) for v in structure.f]) if Lb < L else None
    sums_b = _subset_sums(base)
    sums_p = _subset_sums(pert)
    trigger = structure.trigger

    vid: dict[tuple[int, int], int] = {}
    values: list[tuple[int, int]] = []
    idb = np.full(1 << (2 * n), -1, dtype=np.int32)
    for U in range(1, 1 << n):
        if U & anchor != anchor:
            continue
        dirty = (U & trigger) == trigger and not structure.is_pure()
        if dirty:
            num, q = sums_p, sums_b[U]
        elif small is not None:
            num, q = small, small[U]
        else:
            num, q = sums_b, sums_b[U]
        rowbase = U << n
        s = U
        while True:
            p = num[s]
            g = gcd(p, q)
            key = (p // g, q // g)
            i = vid.get(key)
            if i is None:
                i = len(values)
                vid[key] = i
                values.append(key)
            idb[rowbase | s] = i
            if s == 0:
                break
            s = (s - 1) & U
    ordered = _exact_ratio_sort(values)
    remap = np.empty(len(values), dtype=np.int32)
    for rank, pq in enumerate(ordered):
        remap[vid[pq]] = rank
    filled = idb >= 0
    idb[filled] = remap[idb[filled]]
    return ValueIndex(structure, ordered, idb, anchor)


def subset_expand(generic: np.ndarray, mask: int) -> np.ndarray:
    """Spread the low bits of each generic index into the set bits of mask."""
    res = np.zeros(len(generic), dtype=np.int64)
    j = 0
    m = mask
    while m:
        lb = m & (-m)
        res += np.where((generic >> j) & 1, lb, 0)
        j += 1
        m ^= lb
    return res


def all_subsets(mask: int) -> np.ndarray:
    """All subsets of mask as an int64 array (ascending generic order)."""
    k = bin(mask).count("1")
    return subset_expand(np.arange(1 << k, dtype=np.int64), mask)


def all_supersets(mask: int, full: int) -> np.ndarray:
    """All supersets of mask inside full."""
    free = full & ~mask
    return mask | all_subsets(free)


_PLANE_BITS = 58
_PLANE_MASK = (1 << _PLANE_BITS) - 1


def plane_subset_sums(weights: list[int], n_worlds: int) -> list[np.ndarray]:
    """Subset sums of arbitrarily large integer weights, as int64 digit planes.

    Each weight is split into base-2^58 digits; per-plane subset sums stay
    below 2^62 for up to 13 worlds, so componentwise plane equality is an
    exact proxy for equality of the (carry-free) underlying sums.
    """
    nplanes = 1
    for w in weights:
        nplanes = max(nplanes, (max(w.bit_length(), 1) + _PLANE_BITS - 1)
                      // _PLANE_BITS)
    planes = []
    for j in range(nplanes):
        digit = [(w >> (_PLANE_BITS * j)) & _PLANE_MASK for w in weights]
        sums = np.zeros(1 << n_worlds, dtype=np.int64)
        for i, d in enumerate(digit):
            half = 1 << i
            sums[half:2 * half] = sums[:half] + d
        planes.append(sums)
    return planes
