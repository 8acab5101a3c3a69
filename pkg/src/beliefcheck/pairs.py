"""The partial combination function built from nested chains.

Each chain u1 ⊇ u2 ⊇ u3 (u2 nonempty) realizes the key
(x, y) = (Bel(u3|u2), Bel(u2|u1)) with result Bel(u3|u1).  The table over
all chains is the only place the conjunction axiom pins the combination
function down; everything downstream (monotonicity, associativity
witnesses, closure) consumes this table.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .domain import BeliefStructure, DomainError, offsetting_pair
from .values import (ValueIndex, all_subsets, all_supersets,
                     build_value_index, plane_subset_sums, subset_expand)


class ConflictError(DomainError):
    """Two chains with the same (x, y) produced different results."""


@dataclass(frozen=True)
class Chain:
    u1: int
    u2: int
    u3: int


def pack_chain(u1: int, u2: int, u3: int, n: int) -> int:
    return (u1 << (2 * n)) | (u2 << n) | u3


def unpack_chain(code: int, n: int) -> Chain:
    mask = (1 << n) - 1
    return Chain((code >> (2 * n)) & mask, (code >> n) & mask, code & mask)


class PairTable:
    """Sorted unique keys x*nv + y with result ranks and minimal witnesses."""

    def __init__(self, vi: ValueIndex, kk, ww, wit, chain_count: int,
                 plain=None):
        self.vi = vi
        self.kk = kk                  # int64 keys, ascending
        self.ww = ww                  # int32 result rank per key
        self.wit = wit                # int64 packed minimal chain per key
        self.chain_count = chain_count
        self.plain = plain            # per key: some chain with trigger ⊄ u1
        self.nv = vi.nv
        self.aa = (kk // vi.nv).astype(np.int64)
        self.bb = (kk % vi.nv).astype(np.int64)

    def __len__(self):
        return len(self.kk)

    def key_pos(self, xr: int, yr: int):
        key = int(xr) * self.nv + int(yr)
        pos = int(np.searchsorted(self.kk, key))
        if pos < len(self.kk) and int(self.kk[pos]) == key:
            return pos
        return None

    def lookup(self, xr: int, yr: int):
        """Result rank for key (xr, yr), or None if unconstrained."""
        pos = self.key_pos(xr, yr)
        return None if pos is None else int(self.ww[pos])

    def lookup_value(self, x, y):
        try:
            xr = self.vi.rank_of(x)
            yr = self.vi.rank_of(y)
        except KeyError:
            return None
        w = self.lookup(xr, yr)
        return None if w is None else self.vi.value_of(w)

    def witness_chain(self, xr: int, yr: int) -> Chain:
        pos = self.key_pos(xr, yr)
        if pos is None:
            raise KeyError("no pair key for ranks (%d, %d)" % (xr, yr))
        return unpack_chain(int(self.wit[pos]), self.vi.structure.n)


def build_pair_table(vi: ValueIndex) -> PairTable:
    """Enumerate all chains and dedup into the combination table.

    A conflicting result for one key would mean no single-valued
    combination function exists; that raises ConflictError carrying two
    offending chains.
    """
    st = vi.structure
    n = st.n
    nv = vi.nv
    full = st.full
    anchor = vi.anchor
    idb = vi.idb

    u2s = [u2 for u2 in range(1, full + 1) if u2 & anchor == anchor]
    total = len(u2s) << n     # each u2 contributes 2^|u2| * 2^(n-|u2|) chains
    keys = np.empty(total, dtype=np.int64)
    res = np.empty(total, dtype=np.int32)
    wit = np.empty(total, dtype=np.int64)
    plain = np.empty(total, dtype=np.int8)
    trigger = st.trigger
    pure = st.is_pure()
    pos = 0
    for u2 in u2s:
        subs = all_subsets(u2)
        sups = all_supersets(u2, full)
        xs = idb[(u2 << n) + subs].astype(np.int64)
        ys = idb[(sups << n) + u2].astype(np.int64)
        c2 = idb[(sups[:, None] << n) + subs[None, :]]
        key2 = xs[None, :] * nv + ys[:, None]
        wit2 = (sups[:, None] << (2 * n)) | (u2 << n) | subs[None, :]
        pl2 = np.broadcast_to(
            (pure | ((sups[:, None] & trigger) != trigger)).astype(np.int8),
            key2.shape)
        m = key2.size
        keys[pos:pos + m] = key2.ravel()
        res[pos:pos + m] = c2.ravel()
        wit[pos:pos + m] = wit2.ravel()
        plain[pos:pos + m] = pl2.ravel()
        pos += m
    assert pos == total

    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    res = res[order]
    wit = wit[order]
    plain = plain[order]
    del order
    boundary = np.empty(total, dtype=bool)
    boundary[0] = True
    np.not_equal(keys[1:], keys[:-1], out=boundary[1:])
    starts = np.flatnonzero(boundary)
    del boundary
    cmin = np.minimum.reduceat(res, starts)
    cmax = np.maximum.reduceat(res, starts)
    conflicts = np.flatnonzero(cmin != cmax)
    if len(conflicts):
        s = int(starts[conflicts[0]])
        e = int(starts[conflicts[0] + 1]) if conflicts[0] + 1 < len(starts) \
            else total
        lo = s + int(np.argmin(res[s:e]))
        hi = s + int(np.argmax(res[s:e]))
        raise ConflictError(
            "key %d maps to ranks %d and %d (chains %s / %s)"
            % (int(keys[s]), int(res[lo]), int(res[hi]),
               unpack_chain(int(wit[lo]), n), unpack_chain(int(wit[hi]), n)))
    return PairTable(vi, keys[starts].copy(), cmin,
                     np.minimum.reduceat(wit, starts), total,
                     np.maximum.reduceat(plain, starts).astype(bool))


def check_boundary_laws(table: PairTable) -> dict:
    """Unit and zero laws on the table itself.

    (0,y) → 0, (1,y) → y, (x,1) → x; y = 0 never occurs (the middle event
    is nonempty); a result is 0 or 1 only at the corresponding argument
    boundary.  Rows with a boundary coordinate therefore associate
    identically, which the witness join exploits by skipping them.
    """
    one = table.vi.one_rank
    aa, bb, ww = table.aa, table.bb, table.ww
    laws = {
        "zero_left": bool((ww[aa == 0] == 0).all()),
        "unit_left": bool((ww[aa == one] == bb[aa == one]).all()),
        "unit_right": bool((ww[bb == one] == aa[bb == one]).all()),
        "no_zero_y": bool((bb != 0).all()),
        "result_zero_iff_x_zero": bool(((ww == 0) == (aa == 0)).all()),
        "result_one_iff_both_one":
            bool(((ww == one) == ((aa == one) & (bb == one))).all()),
    }
    laws["all"] = all(laws.values())
    return laws


@dataclass
class AssociativityWitness:
    x: Fraction
    y: Fraction
    z: Fraction
    lhs: Fraction            # F(x, F(y, z))
    rhs: Fraction            # F(F(x, y), z)
    ranks: tuple             # (xr, yr, zr, lhs_rank, rhs_rank)
    chains: dict             # lookup-name -> Chain


def find_associativity_witnesses(table: PairTable, limit: int = 1000):
    """All triples where the two bracketings of the table disagree.

    A witness needs all four lookups present: (x,y), (F(x,y),z), (y,z),
    (x,F(y,z)).  Returns (witness list in ascending (x,y,z) value order,
    total count).  Triples with a 0/1 coordinate cannot disagree (boundary
    laws, asserted first), so the join runs over interior rows only.
    """
    laws = check_boundary_laws(table)
    if not laws["all"]:
        raise ConflictError("boundary laws fail: %s" % laws)
    nv = table.nv
    one = table.vi.one_rank
    kk, ww, aa, bb = table.kk, table.ww, table.aa, table.bb
    D = len(kk)

    interior = (aa != 0) & (aa != one) & (bb != one)
    # z-side rows grouped by first coordinate
    zi = np.flatnonzero(interior)
    z_first = aa[zi]
    order = np.argsort(z_first, kind="stable")
    zi = zi[order]
    z_first = z_first[order]
    del order
    gb = np.empty(len(zi), dtype=bool)
    gb[0] = True
    np.not_equal(z_first[1:], z_first[:-1], out=gb[1:])
    gstarts = np.flatnonzero(gb)
    gvals = z_first[gstarts]
    gcounts = np.diff(np.append(gstarts, len(zi)))
    del gb, z_first

    li = np.flatnonzero(interior)
    lc = ww[li].astype(np.int64)
    pc = np.searchsorted(gvals, lc)
    okc = pc < len(gvals)
    np.minimum(pc, len(gvals) - 1, out=pc)
    okc &= gvals[pc] == lc
    rep = np.where(okc, gcounts[pc], 0)
    del lc, okc

    found = []
    nwit = 0
    CHUNK = 16_000_000
    cum = np.cumsum(rep)
    lo = 0
    while lo < len(li):
        base = cum[lo - 1] if lo else 0
        hi = int(np.searchsorted(cum, base + CHUNK, side="left")) + 1
        hi = min(hi, len(li))
        r = rep[lo:hi]
        keep = np.flatnonzero(r > 0)
        if len(keep) == 0:
            lo = hi
            continue
        sel = li[lo:hi][keep]
        r = r[keep]
        rowidx = np.repeat(sel, r)
        off = np.arange(len(rowidx), dtype=np.int64)
        off -= np.repeat(np.cumsum(r) - r, r)
        zrow = zi[gstarts[pc[lo:hi][keep]].repeat(r) + off]
        del off
        x = aa[rowidx]
        y = bb[rowidx]
        z = bb[zrow]
        d_left = ww[zrow]                  # F(F(x,y), z)
        del zrow
        k_yz = y * nv + z
        p1 = np.searchsorted(kk, k_yz)
        ok = p1 < D
        np.minimum(p1, D - 1, out=p1)
        ok &= kk[p1] == k_yz
        del k_yz
        c2 = ww[p1]
        del p1
        k_xc = x * nv + c2.astype(np.int64)
        p2 = np.searchsorted(kk, k_xc)
        ok2 = p2 < D
        np.minimum(p2, D - 1, out=p2)
        ok2 &= kk[p2] == k_xc
        del k_xc
        ok &= ok2
        del ok2
        bad = ok & (d_left != ww[p2])
        del ok
        nb = int(bad.sum())
        if nb:
            nwit += nb
            for t in np.flatnonzero(bad):
                if len(found) < 4 * limit:
                    found.append((int(x[t]), int(y[t]), int(z[t]),
                                  int(ww[p2[t]]), int(d_left[t])))
        del bad, d_left, p2, x, y, z, c2, rowidx
        lo = hi

    return _witnesses_from_triples(table, found, limit), nwit


def _witnesses_from_triples(table: PairTable, found, limit: int):
    out = []
    for xr, yr, zr, lhs_r, rhs_r in sorted(set(found))[:limit]:
        a = table.lookup(xr, yr)
        c = table.lookup(yr, zr)
        chains = {
            "xy": table.witness_chain(xr, yr),
            "yz": table.witness_chain(yr, zr),
            "xy_z": table.witness_chain(a, zr),
            "x_yz": table.witness_chain(xr, c),
        }
        out.append(AssociativityWitness(
            table.vi.value_of(xr), table.vi.value_of(yr),
            table.vi.value_of(zr), table.vi.value_of(lhs_r),
            table.vi.value_of(rhs_r), (xr, yr, zr, lhs_r, rhs_r), chains))
    return out


def replay_witness(structure: BeliefStructure,
                   witness: AssociativityWitness) -> bool:
    """Re-derive every value of a witness from the raw weights.

    Each stored chain must realize its key pair and produce the recorded
    result, and the two bracketings must genuinely differ.
    """
    ev = structure.bel_eval
    ch = witness.chains

    def vals(c: Chain):
        return ev(c.u3, c.u2), ev(c.u2, c.u1), ev(c.u3, c.u1)

    x1, y1, a = vals(ch["xy"])
    y2, z1, c = vals(ch["yz"])
    a2, z2, rhs = vals(ch["xy_z"])
    x2, c2, lhs = vals(ch["x_yz"])
    return (x1 == witness.x and y1 == witness.y
            and y2 == witness.y and z1 == witness.z
            and a2 == a and z2 == witness.z and rhs == witness.rhs
            and x2 == witness.x and c2 == c and lhs == witness.lhs
            and witness.lhs != witness.rhs)


def find_witnesses_seeded(table: PairTable, limit: int = 1000,
                          chunk: int = 8_000_000):
    """Exhaustive witness search seeded from non-multiplicative keys.

    For a single offsetting-pair perturbation, a key's result deviates
    from the product of its arguments only when the outer set of its
    chain covers the trigger, the middle one does not, and the inner
    event splits the shifted worlds asymmetrically; that condition reads
    off the stored minimal chain (every chain of a key shares its three
    values, so one chain decides).  A collision with all four lookups
    multiplicative is impossible — both bracketings would equal x·y·z —
    so expanding candidates around deviant keys in each of the four key
    slots is exhaustive.  Pure structures return immediately with no
    search at all.  Yields the same shape as
    find_associativity_witnesses; counts are deduplicated across slots.
    """
    vi = table.vi
    st = vi.structure
    if st.is_pure():
        return [], 0
    pair = offsetting_pair(st)
    if pair is None:
        raise DomainError(
            "seeded search requires a single offsetting perturbation pair")
    lowered, raised = pair
    n = st.n
    trig = st.trigger
    wit = table.wit
    m = np.int64((1 << n) - 1)
    inner = wit & m
    mid = (wit >> n) & m
    outer = wit >> (2 * n)
    s_in = ((inner >> raised) & 1) - ((inner >> lowered) & 1)
    s_mid = ((mid >> raised) & 1) - ((mid >> lowered) & 1)
    consistent = np.where(s_mid == 0, s_in == 0,
                          (inner == 0) | (inner == mid))
    deviant = ((outer & trig) == trig) & ((mid & trig) != trig) & ~consistent
    del inner, mid, outer, s_in, s_mid, consistent
    seeds = np.flatnonzero(deviant).astype(np.int64)
    del deviant
    if len(seeds) == 0:
        return [], 0

    laws = check_boundary_laws(table)
    if not laws["all"]:
        raise ConflictError("boundary laws fail: %s" % laws)

    nv = np.int64(table.nv)
    kk, ww, aa, bb = table.kk, table.ww, table.aa, table.bb
    D = len(kk)
    ar = np.arange(int(nv) + 1, dtype=np.int64)
    fptr = np.searchsorted(kk, ar * nv)         # keys grouped by first arg
    worder = np.argsort(ww, kind="stable").astype(np.int64)
    wptr = np.searchsorted(ww[worder], ar)      # keys grouped by result
    sorder = np.argsort(bb, kind="stable").astype(np.int64)
    sptr = np.searchsorted(bb[sorder], ar)      # keys grouped by second arg

    def lookup(kq):
        p = np.searchsorted(kk, kq)
        ok = p < D
        np.minimum(p, D - 1, out=p)
        ok &= kk[p] == kq
        return p, ok

    found = set()
    cap = 16 * limit

    def emit(x, y, z, lhs_v, rhs_v, bad):
        for t in np.flatnonzero(bad):
            if len(found) < cap:
                found.add((int(x[t]), int(y[t]), int(z[t]),
                           int(lhs_v[t]), int(rhs_v[t])))

    def scan(groups_of, ptr, order, handler):
        cnt = (ptr[groups_of + 1] - ptr[groups_of]).astype(np.int64)
        cum = np.cumsum(cnt)
        lo = 0
        while lo < len(seeds):
            base = cum[lo - 1] if lo else 0
            hi = min(int(np.searchsorted(cum, base + chunk, "left")) + 1,
                     len(seeds))
            pick = np.flatnonzero(cnt[lo:hi] > 0) + lo
            if len(pick):
                r = cnt[pick]
                sidx = np.repeat(seeds[pick], r)
                off = np.arange(len(sidx), dtype=np.int64)
                off -= np.repeat(np.cumsum(r) - r, r)
                tpos = np.repeat(ptr[groups_of[pick]], r) + off
                del off
                if order is not None:
                    tpos = order[tpos]
                handler(sidx, tpos)
            lo = hi

    def slot_xy(sidx, tpos):
        # seed key is (x, y); partner rows are the keys (F(x,y), z)
        x = aa[sidx]
        y = bb[sidx]
        z = bb[tpos]
        rhs = ww[tpos]
        p1, ok = lookup(y * nv + z)
        c = ww[p1].astype(np.int64)
        p2, ok2 = lookup(x * nv + c)
        bad = ok & ok2 & (rhs != ww[p2])
        emit(x, y, z, ww[p2], rhs, bad)

    def slot_az(sidx, tpos):
        # seed key is (F(x,y), z); partners are the keys with result F(x,y)
        z = bb[sidx]
        rhs = ww[sidx]
        x = aa[tpos]
        y = bb[tpos]
        p1, ok = lookup(y * nv + z)
        c = ww[p1].astype(np.int64)
        p2, ok2 = lookup(x * nv + c)
        bad = ok & ok2 & (rhs != ww[p2])
        emit(x, y, z, ww[p2], rhs, bad)

    def slot_yz(sidx, tpos):
        # seed key is (y, z); partners are the keys (x, y) by second slot
        y = aa[sidx]
        z = bb[sidx]
        c = ww[sidx].astype(np.int64)
        x = aa[tpos]
        a = ww[tpos].astype(np.int64)
        p1, ok = lookup(a * nv + z)
        p2, ok2 = lookup(x * nv + c)
        bad = ok & ok2 & (ww[p1] != ww[p2])
        emit(x, y, z, ww[p2], ww[p1], bad)

    def slot_xc(sidx, tpos):
        # seed key is (x, F(y,z)); partners are the keys with result F(y,z)
        x = aa[sidx]
        lhs_v = ww[sidx]
        y = aa[tpos]
        z = bb[tpos]
        p1, ok = lookup(x * nv + y)
        a = ww[p1].astype(np.int64)
        p2, ok2 = lookup(a * nv + z)
        bad = ok & ok2 & (ww[p2] != lhs_v)
        emit(x, y, z, lhs_v, ww[p2], bad)

    scan(ww[seeds].astype(np.int64), fptr, None, slot_xy)
    scan(aa[seeds], wptr, worder, slot_az)
    scan(aa[seeds], sptr, sorder, slot_yz)
    scan(bb[seeds], wptr, worder, slot_xc)

    return _witnesses_from_triples(table, found, limit), len(found)


def search_witnesses(table: PairTable, limit: int = 1000):
    """Witness search with the cheapest exhaustive strategy available.

    Pure structures and single offsetting-pair perturbations go through
    the seeded deviance search; anything else falls back to the full
    interior join over the table.
    """
    st = table.vi.structure
    if st.is_pure() or offsetting_pair(st) is not None:
        return find_witnesses_seeded(table, limit=limit)
    return find_associativity_witnesses(table, limit=limit)


def verify_complement(structure: BeliefStructure, vi: ValueIndex | None = None):
    """Bel(U∖V|U) = 1 - Bel(V|U) for every V ⊆ U, nonempty U ⊇ anchor.

    The attained value set is closed under v ↦ 1−v, so in rank space the
    complement is rank reversal; that is checked exactly once per rank,
    then the (U, V) sweep is a pure integer gather.
    """
    vi = vi or build_value_index(structure)
    nv = vi.nv
    for r in range(nv):
        p, q = vi.values[r]
        cp, cq = vi.values[nv - 1 - r]
        if p * cq + cp * q != q * cq:
            break
    else:
        n = structure.n
        idb = vi.idb
        for U in range(1, structure.full + 1):
            if U & vi.anchor != vi.anchor:
                continue
            subs = all_subsets(U)
            left = idb[(U << n) + subs]
            right = idb[(U << n) + (U ^ subs)]
            if not ((left + right) == nv - 1).all():
                bad = int(subs[np.argmax((left + right) != nv - 1)])
                return False, (U, bad)
        return True, None
    # value set not complement-symmetric: locate a concrete violation
    for U in range(1, structure.full + 1):
        if U & vi.anchor != vi.anchor:
            continue
        s = U
        while True:
            if structure.bel_eval(s, U) + structure.bel_eval(U ^ s, U) != 1:
                return False, (U, s)
            if s == 0:
                break
            s = (s - 1) & U
    return True, None


_TPL3 = {}


def _three_color(k: int):
    """Generic 3-coloring masks: for each of 3^k states, (bits in V, bits in V')."""
    if k not in _TPL3:
        v1 = np.zeros(3 ** k, dtype=np.int64)
        v2 = np.zeros(3 ** k, dtype=np.int64)
        state = np.arange(3 ** k, dtype=np.int64)
        for j in range(k):
            digit = (state // (3 ** j)) % 3
            v1 += np.where(digit == 1, 1 << j, 0)
            v2 += np.where(digit == 2, 1 << j, 0)
        _TPL3[k] = (v1, v2)
    return _TPL3[k]


def verify_additivity(structure: BeliefStructure, vi: ValueIndex | None = None):
    """Bel(V ∪ V'|U) = Bel(V|U) + Bel(V'|U) for disjoint V, V' ⊆ U.

    Enumerated by 3-coloring the worlds of each U (in V / in V' / neither);
    numerator additivity is checked exactly on digit-plane subset sums.
    """
    anchor = vi.anchor if vi is not None else 0
    n = structure.n
    L, base, pert = structure.scaled_weights()
    planes_b = plane_subset_sums(base, n)
    planes_p = plane_subset_sums(pert, n)
    trigger = structure.trigger
    for U in range(1, structure.full + 1):
        if U & anchor != anchor:
            continue
        planes = planes_p if (U & trigger) == trigger else planes_b
        k = bin(U).count("1")
        g1, g2 = _three_color(k)
        B1 = subset_expand(g1, U)
        B2 = subset_expand(g2, U)
        B12 = B1 | B2
        for pl in planes:
            if not (pl[B1] + pl[B2] == pl[B12]).all():
                t = int(np.argmax(pl[B1] + pl[B2] != pl[B12]))
                return False, (U, int(B1[t]), int(B2[t]))
    return True, None


def dump_pairs(table: PairTable):
    """One record per key: x, y, w rational strings + witness masks in hex."""
    vi = table.vi
    n = vi.structure.n
    for i in range(len(table.kk)):
        xr = int(table.aa[i])
        yr = int(table.bb[i])
        wr = int(table.ww[i])
        ch = unpack_chain(int(table.wit[i]), n)
        yield {
            "x": _fstr(vi.values[xr]),
            "y": _fstr(vi.values[yr]),
            "w": _fstr(vi.values[wr]),
            "u1": "0x%x" % ch.u1,
            "u2": "0x%x" % ch.u2,
            "u3": "0x%x" % ch.u3,
        }


def _fstr(pq) -> str:
    p, q = pq
    return str(p) if q == 1 else "%d/%d" % (p, q)
