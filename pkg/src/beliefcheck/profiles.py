"""Block structure, closeness bounds, good triples and profile identities.

The 12-world domain splits into four weight blocks separated by huge
magnitude gaps.  Conditioning on a set inside one block ("standard")
yields a small family of relevant values; conditioning on anything else
is provably close to conditioning on its heaviest standard subset.  The
checks here quantify that closeness, census the triples where the
perturbed belief fails to factor ("not good"), verify the trichotomy on
value-matched chain pairs, and check the integer identities satisfied by
the weight profiles of matched chains.
"""

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .domain import (BeliefStructure, DomainError, EmptyConditioning,
                     offsetting_pair)
from .values import ValueIndex, build_value_index, all_subsets, all_supersets


def _base_integers(structure: BeliefStructure) -> list[int]:
    """Base weights as integers in their own scale (f denominators only).

    Profile decompositions compare these sums against the literal block
    magnitudes, so the perturbed table's denominators must not leak in.
    """
    L = 1
    for v in structure.f:
        L = L * v.denominator // gcd(L, v.denominator)
    return [int(v * L) for v in structure.f]

# Magnitude ratio that separates weight blocks: consecutive worlds whose
# weights differ by more than this start a new block.
_BLOCK_GAP = 1000


def standard_blocks(structure: BeliefStructure) -> list[int]:
    """Partition worlds into maximal runs of comparable weight."""
    blocks = []
    cur = 1
    for i in range(1, structure.n):
        a, b = structure.f[i - 1], structure.f[i]
        if b > a * _BLOCK_GAP or a > b * _BLOCK_GAP:
            blocks.append(cur)
            cur = 0
        cur |= 1 << i
    blocks.append(cur)
    return blocks


def is_standard(structure: BeliefStructure, U: int, blocks=None) -> bool:
    """A conditioning set is standard when it fits inside one block."""
    if blocks is None:
        blocks = standard_blocks(structure)
    return any(U & b == U for b in blocks)


def relevant_numbers(structure: BeliefStructure, blocks=None) -> list[Fraction]:
    """All conditional values over nonempty standard sets, deduplicated."""
    if blocks is None:
        blocks = standard_blocks(structure)
    seen = set()
    for b in blocks:
        s = b
        while s:
            q = structure.weight_sum("base", s)
            a = s
            while True:
                seen.add(structure.weight_sum("base", a) / q)
                if a == 0:
                    break
                a = (a - 1) & s
            s = (s - 1) & b
    return sorted(seen)


def heaviest_standard_subset(structure: BeliefStructure, U: int,
                             blocks=None) -> int:
    """The standard subset of U with the greatest weight.

    Ties (impossible under magnitude-gapped weights, but possible in
    generated domains) break toward the later block, then the larger mask.
    """
    if blocks is None:
        blocks = standard_blocks(structure)
    best = 0
    best_w = Fraction(-1)
    for b in blocks:
        cand = U & b
        if cand == 0:
            continue
        w = structure.weight_sum("base", cand)
        if w >= best_w:
            best, best_w = cand, w
    if best == 0:
        raise DomainError("no nonempty standard subset of 0x%x" % U)
    return best


def check_closeness(structure: BeliefStructure,
                    bound: Fraction = Fraction(2, 1000)) -> dict:
    """Conditioning on U vs its heaviest standard subset, over all (U,V).

    Standard U are exempt (the deviation is zero by definition); for all
    other U the exact worst deviation must stay under the bound.
    """
    blocks = standard_blocks(structure)
    base = _base_integers(structure)
    n = structure.n
    sums = [0] * (1 << n)
    for m in range(1, 1 << n):
        lb = m & (-m)
        sums[m] = sums[m ^ lb] + base[lb.bit_length() - 1]
    worst = Fraction(0)
    worst_at = None
    checked = 0
    for U in range(1, 1 << n):
        Up = 0
        if not is_standard(structure, U, blocks):
            Up = heaviest_standard_subset(structure, U, blocks)
        if Up == 0:
            continue
        fU, fUp = sums[U], sums[Up]
        A = U
        while True:
            d = abs(Fraction(sums[A], fU) - Fraction(sums[A & Up], fUp))
            checked += 1
            if d > worst:
                worst, worst_at = d, (U, A)
            if A == 0:
                break
            A = (A - 1) & U
    return {"pass": worst < bound, "bound": bound, "worst": worst,
            "at": worst_at, "checked": checked}


def _shift_pair(structure: BeliefStructure):
    """Indices of the offsetting (lowered, raised) perturbed worlds."""
    return offsetting_pair(structure)


def classify_good(structure: BeliefStructure, U: int, V: int, Vp: int) -> bool:
    """Does the perturbed belief factor through V on this triple?

    Good means Bel(V′∩V|U) = Bel(V′|V∩U) · Bel(V|U), the exact
    multiplicativity a conditional probability would satisfy.
    """
    if V & U == 0:
        raise EmptyConditioning("V∩U is empty; classification inapplicable")
    lhs = structure.bel_eval(Vp & V, U)
    return lhs == structure.bel_eval(Vp, V & U) * structure.bel_eval(V, U)


class ProfileSweep:
    """All chains u1 ⊆ u2 ⊆ u3, keyed by value pair, with good flags.

    ``keys`` holds x + y·nv for x = Bel(u1|u2), y = Bel(u2|u3);
    ``prof`` holds the weight profile (rank of f(u3), rank of f(u2));
    ``good`` marks chains whose triple (u3, u2, u1) is good.
    """

    def __init__(self, structure, vi, keys, prof, good, census, sumrank,
                 ranksum):
        self.structure = structure
        self.vi = vi
        self.keys = keys
        self.prof = prof
        self.good = good
        self.census = census          # not-good count by u2 & trigger shape
        self.sumrank = sumrank
        self.ranksum = ranksum        # profile rank -> integer weight sum
        self.nsum = len(ranksum)


def sweep_profiles(structure: BeliefStructure,
                   vi: ValueIndex | None = None) -> ProfileSweep:
    """Enumerate every chain with its value key, weight profile, good flag."""
    if vi is None:
        vi = build_value_index(structure)
    n = structure.n
    full = structure.full
    nv = vi.nv
    idb = vi.idb
    trigger = structure.trigger

    base = _base_integers(structure)
    sums = [0] * (1 << n)
    for m in range(1, 1 << n):
        lb = m & (-m)
        sums[m] = sums[m ^ lb] + base[lb.bit_length() - 1]
    rank_of = {}
    for m in range(1 << n):
        rank_of.setdefault(sums[m], len(rank_of))
    nsum = len(rank_of)
    sumrank = np.array([rank_of[sums[m]] for m in range(1 << n)],
                       dtype=np.int32)
    ranksum = [0] * nsum
    for m in range(1 << n):
        ranksum[sumrank[m]] = sums[m]

    pair = _shift_pair(structure)
    pure = structure.is_pure()
    total = (1 << n) << n    # sum over u2 of 2^|u2| * 2^(n-|u2|), minus u2=0
    total -= 1 << n
    keys = np.empty(total, dtype=np.int64)
    prof = np.empty(total, dtype=np.int32)
    good = np.empty(total, dtype=bool)
    census: dict[int, int] = defaultdict(int)
    pos = 0
    for u2 in range(1, 1 << n):
        subs = all_subsets(u2)
        sups = all_supersets(u2, full)
        xs = idb[(u2 << n) | subs].astype(np.int64)
        ys = idb[(sups << n) | u2].astype(np.int64)
        key = xs[None, :] + ys[:, None] * np.int64(nv)

        if pure or (u2 & trigger) == trigger:
            g = np.ones((len(sups), len(subs)), dtype=bool)
        elif pair is not None:
            neg, pos_i = pair
            trig3 = (sups & trigger) == trigger
            s2 = ((u2 >> pos_i) & 1) - ((u2 >> neg) & 1)
            if s2 == 0:
                inner = ((subs >> pos_i) & 1) == ((subs >> neg) & 1)
            else:
                inner = (subs == u2) | (subs == 0)
            g = (~trig3[:, None]) | inner[None, :]
            nbad = int(trig3.sum()) * int((~inner).sum())
            if nbad:
                census[u2 & trigger] += nbad
        else:
            # general perturbations: evaluate each triple exactly
            g = np.empty((len(sups), len(subs)), dtype=bool)
            for i, u3 in enumerate(sups.tolist()):
                for j, u1 in enumerate(subs.tolist()):
                    g[i, j] = classify_good(structure, int(u3), u2, int(u1))
                    if not g[i, j]:
                        census[u2 & trigger] += 1

        cnt = key.size
        keys[pos:pos + cnt] = key.ravel()
        prof[pos:pos + cnt] = np.repeat(
            sumrank[sups].astype(np.int32) * np.int32(nsum) + sumrank[u2],
            len(subs))
        good[pos:pos + cnt] = g.ravel()
        pos += cnt
    assert pos == total
    return ProfileSweep(structure, vi, keys, prof, good, dict(census),
                        sumrank, ranksum)


def characterize_not_good(structure: BeliefStructure,
                          sweep: ProfileSweep | None = None) -> dict:
    """Census of not-good triples by the shape of V ∩ trigger.

    The claimed characterization allows four shapes: one of the two
    perturbed worlds alone, or one of them with the trigger's third
    world.  The census finds a fifth shape — both perturbed worlds
    together without the third — so the four-shape claim is reported
    as it measures.
    """
    if sweep is None:
        sweep = sweep_profiles(structure)
    st = structure
    census = sweep.census
    m = st.mask_of
    expected = (m(["w10"]), m(["w11"]), m(["w10", "w12"]), m(["w11", "w12"]))
    labels = {shape: "{" + ",".join(st.labels_of(shape)) + "}"
              for shape in census}
    extra = {labels[s]: c for s, c in census.items() if s not in expected}
    return {
        "total_not_good": sum(census.values()),
        "census": {labels[s]: c for s, c in sorted(census.items())},
        "expected_shapes": ["{" + ",".join(st.labels_of(s)) + "}"
                            for s in expected],
        "all_inside_trigger_cover": True,   # u3 ⊇ trigger by construction
        "extra_shapes": extra,
        "matches_expected_shapes": not extra,
    }


def verify_trichotomy(structure: BeliefStructure,
                      sweep: ProfileSweep | None = None) -> dict:
    """Value-matched chain pairs with a not-good member share one profile.

    Chains are grouped by the exact pair (Bel(u1|u2), Bel(u2|u3)).  In a
    group that contains a not-good chain, either the second value is 0 or
    1 (the degenerate bullets: everything vanishes, or the conditioning
    sets saturate), or every chain in the group carries the same weight
    profile (f(u3), f(u2)) — so the matched chains agree on both sums.
    """
    if sweep is None:
        sweep = sweep_profiles(structure)
    keys, prof, good = sweep.keys, sweep.prof, sweep.good
    o = np.lexsort((prof, keys))
    keys = keys[o]
    prof = prof[o]
    good = good[o]
    gnew = np.empty(len(keys), dtype=bool)
    gnew[0] = True
    np.not_equal(keys[1:], keys[:-1], out=gnew[1:])
    pnew = gnew.copy()
    pnew[1:] |= prof[1:] != prof[:-1]
    gstarts = np.flatnonzero(gnew)
    nprof = np.add.reduceat(pnew.astype(np.int64), gstarts)
    anybad = np.maximum.reduceat((~good).astype(np.int8), gstarts)
    gy = keys[gstarts] // sweep.vi.nv
    deep = (gy != sweep.vi.zero_rank) & (gy != sweep.vi.one_rank)
    viol = deep & (anybad > 0) & (nprof >= 2)
    out = {"groups": int(len(gstarts)),
           "not_good_groups": int((anybad > 0).sum()),
           "violations": int(viol.sum()),
           "pass": not viol.any(),
           "example": None}
    if out["violations"]:
        g = int(np.flatnonzero(viol)[0])
        s = int(gstarts[g])
        e = int(gstarts[g + 1]) if g + 1 < len(gstarts) else len(keys)
        out["example"] = {"key": int(keys[s]),
                          "profiles": sorted({int(p) for p in prof[s:e]})}
    return out


@dataclass(frozen=True)
class ChainProfile:
    """Decomposition of a chain's weight profile against the top block.

    The outer sum is 19·10¹⁸ + c and the inner sum is a·10¹⁸ + b, both
    remainders small against the block magnitude; ``all_in`` and ``empty``
    flag the degenerate inner sets that are exempt from strictness.
    """
    a: int
    b: int
    c: int
    all_in: bool = False
    empty: bool = False


_E18 = 10 ** 18
# Remainders below the top block stay under twice the third block.
_REMAINDER_BOUND = 20 * 10 ** 8
_K_LEVELS = (18, 8, 4, 0)
_K_BOUNDS = {18: 20 * 10 ** 8, 8: 20 * 10 ** 4, 4: 20, 0: 1}


def profile_decompose(P1: int, P2: int, all_in: bool = False,
                      empty: bool = False) -> ChainProfile:
    """Split (f(u3), f(u2)) = (19·10¹⁸ + c, a·10¹⁸ + b) exactly."""
    c = P1 - 19 * _E18
    if not 0 <= c < _REMAINDER_BOUND:
        raise DomainError("outer sum %d is not 19·10^18 + small" % P1)
    a, b = divmod(P2, _E18)
    if not 0 <= b < _REMAINDER_BOUND:
        raise DomainError("inner sum %d is not a·10^18 + small" % P2)
    return ChainProfile(int(a), int(b), int(c), all_in, empty)


def match_level(profile: ChainProfile, Q1: int, Q2: int):
    """The unique magnitude level k at which (Q1,Q2) mirrors the profile."""
    ks = [k for k in _K_LEVELS
          if 0 <= Q1 - 19 * 10 ** k < _K_BOUNDS[k]
          and Q2 - profile.a * 10 ** k >= 0]
    if len(ks) != 1:
        raise DomainError("no unique level for (%d, %d)" % (Q1, Q2))
    k = ks[0]
    return k, Q2 - profile.a * 10 ** k, Q1 - 19 * 10 ** k


def verify_identities(profile: ChainProfile, Q1: int, Q2: int) -> dict:
    """Master identity and its forced split for one matched pair.

    With (k, b′, c′) the mirror decomposition, the identity
    10¹⁸(ac′−19b′) + 10ᵏ(19b−ac) + (bc′−b′c) = 0 must hold; magnitude
    separation forces both bracketed terms (and the tail) to vanish
    individually at k=8, and the combined form at k=18.
    """
    a, b, c = profile.a, profile.b, profile.c
    k, bp, cp = match_level(profile, Q1, Q2)
    master = _E18 * (a * cp - 19 * bp) + 10 ** k * (19 * b - a * c) \
        + (b * cp - bp * c) == 0
    out = {"k": k, "b_prime": bp, "c_prime": cp, "master": master,
           "split": None, "pass": master}
    if k == 8:
        split = (a * cp - 19 * bp == 0 and 19 * b - a * c == 0
                 and b * cp - bp * c == 0)
        out["split"] = split
        out["pass"] = master and split
    elif k == 18:
        split = (19 * (b - bp) + a * (cp - c) == 0 and b * cp - bp * c == 0)
        out["split"] = split
        out["pass"] = master and split
    return out


def profile_identity_survey(structure: BeliefStructure,
                            sweep: ProfileSweep | None = None) -> dict:
    """Decompose every not-good profile and check all matched pairs.

    Matching pairs profiles by their pure conditional ratio f(u2)/f(u3).
    Reports the set of inner leading digits a, the magnitude levels seen
    per a, identity failures, and the low-level (k=4) records in full.
    """
    if sweep is None:
        sweep = sweep_profiles(structure)
    prof, good = sweep.prof, sweep.good
    ranksum, nsum = sweep.ranksum, sweep.nsum
    ngprof = np.unique(prof[~good])
    allprof = np.unique(prof)

    ngfracs: dict[Fraction, list] = {}
    for p in ngprof.tolist():
        P1, P2 = ranksum[p // nsum], ranksum[p % nsum]
        ngfracs.setdefault(Fraction(P2, P1), []).append((P1, P2))
    match: dict[Fraction, list] = defaultdict(list)
    for p in allprof.tolist():
        Q1, Q2 = ranksum[p // nsum], ranksum[p % nsum]
        fr = Fraction(Q2, Q1)
        if fr in ngfracs:
            match[fr].append((Q1, Q2))

    aset = set()
    kset: dict[int, set] = defaultdict(set)
    failures = []
    k4_records = []
    pairs = 0
    for fr, ngles in ngfracs.items():
        for P1, P2 in ngles:
            profile = profile_decompose(P1, P2)
            aset.add(profile.a)
            for Q1, Q2 in match[fr]:
                pairs += 1
                res = verify_identities(profile, Q1, Q2)
                kset[profile.a].add(res["k"])
                if not res["pass"]:
                    failures.append((P1, P2, Q1, Q2, res))
                if res["k"] == 4:
                    k4_records.append((profile.a, profile.b, profile.c,
                                       res["b_prime"], res["c_prime"]))
    return {"profiles": int(len(allprof)),
            "not_good_profiles": int(len(ngprof)),
            "matched_pairs": pairs,
            "a_set": sorted(aset),
            "k_set": {a: sorted(s) for a, s in sorted(kset.items())},
            "failures": failures[:5],
            "failure_count": len(failures),
            "k4_records": sorted(set(k4_records)),
            "pass": not failures}
