"""Constrained triples and the associativity forced on them.

A value triple (x, y, z) is constrained when some chain
u1 ⊇ u2 ⊇ u3 ⊇ u4 with u3 nonempty realizes x = Bel(u4|u3),
y = Bel(u3|u2), z = Bel(u2|u1).  On such triples the conjunction axiom
forces both bracketings of the partial combination function to agree;
the exhaustive sweep certifies this for every length-4 chain, and the
same pass decides membership for a query triple.
"""

from __future__ import annotations

import numpy as np

from .values import ValueIndex, subset_expand, all_supersets
from .pairs import PairTable

_NESTED = {}


def nested_template(k: int):
    """All pairs (A, B) with B ⊆ A over k generic bit positions."""
    if k not in _NESTED:
        A_l = []
        B_l = []
        for g1 in range(1 << k):
            s = g1
            while True:
                A_l.append(g1)
                B_l.append(s)
                if s == 0:
                    break
                s = (s - 1) & g1
        _NESTED[k] = (np.array(A_l, dtype=np.int32),
                      np.array(B_l, dtype=np.int32))
    return _NESTED[k]


def _lookup(table: PairTable, keys):
    pos = np.searchsorted(table.kk, keys.ravel())
    if not ((pos < len(table.kk)) & (table.kk[np.minimum(pos, len(table.kk) - 1)]
                                     == keys.ravel())).all():
        raise KeyError("chain produced a key missing from the pair table")
    return table.ww[pos].reshape(keys.shape)


def check_constrained_triples(table: PairTable, query=None):
    """Sweep every length-4 chain; verify F(F(x,y),z) == F(x,F(y,z)).

    query: optional (x_rank, y_rank, z_rank); the same pass decides
    whether it is realized by any chain.  Returns a dict with the chain
    count, violation count, up to 3 violating rank triples, and the
    query membership verdict.
    """
    vi = table.vi
    st = vi.structure
    n = st.n
    full = st.full
    anchor = vi.anchor
    idb = vi.idb
    NVi = np.int64(vi.nv)
    total = 0
    viol = 0
    bad = []
    q_found = False
    for u2 in range(1, full + 1):
        if u2 & anchor != anchor:
            continue
        k = bin(u2).count("1")
        gA, gB = nested_template(k)
        u3 = subset_expand(gA, u2)
        u4 = subset_expand(gB, u2)
        keep = (u3 & anchor == anchor) & (u3 != 0)
        u3 = u3[keep]
        u4 = u4[keep]
        gAk = gA[keep]
        x = idb[(u3 << n) | u4].astype(np.int64)
        yv = idb[(np.int64(u2) << n) | u3].astype(np.int64)
        a = _lookup(table, x * NVi + yv)

        sups = all_supersets(u2, full)
        z = idb[(sups << n) | u2].astype(np.int64)

        # F(y', z) for every distinct u3-shape at once
        acts = subset_expand(np.arange(1 << k, dtype=np.int32), u2)
        yv_d = idb[(np.int64(u2) << n) | acts].astype(np.int64)
        cmat = _lookup(table, yv_d[:, None] * NVi + z[None, :])

        b = _lookup(table, a[:, None] * NVi + z[None, :])
        d = _lookup(table, x[:, None] * NVi + cmat[gAk, :])
        ne = b != d
        nb = int(ne.sum())
        if nb:
            viol += nb
            if len(bad) < 3:
                ii, jj = np.nonzero(ne)
                for t in range(min(3 - len(bad), len(ii))):
                    i, j = int(ii[t]), int(jj[t])
                    bad.append({
                        "ranks": (int(x[i]), int(yv[i]), int(z[j])),
                        "lhs": int(d[i, j]), "rhs": int(b[i, j]),
                        "chain": (int(sups[j]), u2, int(u3[i]), int(u4[i])),
                    })
        total += b.size
        if query is not None and not q_found:
            qx, qy, qz = query
            if ((x == qx) & (yv == qy)).any() and (z == qz).any():
                q_found = True
    return {"chains": total, "violations": viol, "examples": bad,
            "query_constrained": (q_found if query is not None else None),
            "pass": viol == 0}


def enumerate_constrained(vi: ValueIndex):
    """Stream constrained value triples with one realizing chain each.

    Deduplicated per middle set u2: every distinct (x, y, z) appears at
    least once overall, in ascending u2 order.
    """
    st = vi.structure
    n = st.n
    full = st.full
    anchor = vi.anchor
    idb = vi.idb
    nv = np.int64(vi.nv)
    for u2 in range(1, full + 1):
        if u2 & anchor != anchor:
            continue
        k = bin(u2).count("1")
        gA, gB = nested_template(k)
        u3 = subset_expand(gA, u2)
        u4 = subset_expand(gB, u2)
        keep = (u3 & anchor == anchor) & (u3 != 0)
        u3 = u3[keep]
        u4 = u4[keep]
        x = idb[(u3 << n) | u4].astype(np.int64)
        yv = idb[(np.int64(u2) << n) | u3].astype(np.int64)
        sups = all_supersets(u2, full)
        z = idb[(sups << n) | u2].astype(np.int64)
        packed = (x[:, None] * nv + yv[:, None]) * nv + z[None, :]
        _, first = np.unique(packed, return_index=True)
        ii, jj = np.unravel_index(first, packed.shape)
        order = np.lexsort((jj, ii))
        for t in order:
            i, j = int(ii[t]), int(jj[t])
            yield {"x": vi.value_of(int(x[i])), "y": vi.value_of(int(yv[i])),
                   "z": vi.value_of(int(z[j])),
                   "chain": (int(sups[j]), u2, int(u3[i]), int(u4[i]))}


def is_constrained_triple(vi: ValueIndex, x, y, z):
    """Membership only: does any chain realize the value triple?

    Returns (bool, chain or None); the chain is the first one found in
    ascending u2 order.  Values outside the attained set are never
    constrained.
    """
    try:
        qx, qy, qz = vi.rank_of(x), vi.rank_of(y), vi.rank_of(z)
    except KeyError:
        return False, None
    st = vi.structure
    n = st.n
    full = st.full
    anchor = vi.anchor
    idb = vi.idb
    for u2 in range(1, full + 1):
        if u2 & anchor != anchor:
            continue
        k = bin(u2).count("1")
        gA, gB = nested_template(k)
        u3 = subset_expand(gA, u2)
        u4 = subset_expand(gB, u2)
        keep = (u3 & anchor == anchor) & (u3 != 0)
        u3 = u3[keep]
        u4 = u4[keep]
        hits = np.flatnonzero(
            (idb[(u3 << n) | u4] == qx) & (idb[(np.int64(u2) << n) | u3] == qy))
        if len(hits) == 0:
            continue
        sups = all_supersets(u2, full)
        zh = np.flatnonzero(idb[(sups << n) | u2] == qz)
        if len(zh):
            i = int(hits[0])
            return True, (int(sups[zh[0]]), u2, int(u3[i]), int(u4[i]))
    return False, None
