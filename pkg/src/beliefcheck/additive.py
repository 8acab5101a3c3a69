"""Additive functional-equation checks on the combination table.

A triple (x, y, z) is sum-constrained when it arises as
x = Bel(B1|A), y = Bel(B2|A), z = Bel(A|U') for disjoint B1, B2 ⊆ A ⊆ U'.
On those triples the table must satisfy F(x,z) + F(y,z) = F(x+y,z)
exactly.  Enumeration 5-colors each world (outside U', in U'∖A, in B1,
in B2, in A∖(B1∪B2)); the five states per world give the 5^n chain count.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .pairs import PairTable
from .values import all_supersets, plane_subset_sums, subset_expand

_DISJ = {}


def disjoint_template(k: int):
    """All ordered pairs (B1, B2) of disjoint submasks of k generic bits."""
    if k not in _DISJ:
        B1_l = []
        B2_l = []
        for g1 in range(1 << k):
            comp = ((1 << k) - 1) ^ g1
            s = comp
            while True:
                B1_l.append(g1)
                B2_l.append(s)
                if s == 0:
                    break
                s = (s - 1) & comp
        _DISJ[k] = (np.array(B1_l, dtype=np.int32),
                    np.array(B2_l, dtype=np.int32))
    return _DISJ[k]


def check_sum_equation(table: PairTable):
    """Verify the additive equation on every sum-constrained triple.

    Two ingredients give exactness without rational arithmetic in the
    loop: (1) the table's value on each of the three keys matches the
    directly evaluated conditional (rank comparison), and (2) the
    numerators over the shared denominator f(U') add componentwise on
    digit planes.  Together: F(x,z) + F(y,z) = F(x+y,z) as rationals.
    """
    vi = table.vi
    st = vi.structure
    n = st.n
    full = st.full
    anchor = vi.anchor
    idb = vi.idb
    kk, ww = table.kk, table.ww
    NVi = np.int64(vi.nv)
    L, base, pert = st.scaled_weights()
    planes_b = plane_subset_sums(base, n)
    planes_p = plane_subset_sums(pert, n)
    total = 0
    consistency_bad = 0
    additivity_bad = 0
    example = None
    for A in range(1, full + 1):
        if A & anchor != anchor:
            continue
        k = bin(A).count("1")
        g1, g2 = disjoint_template(k)
        B1 = subset_expand(g1, A)
        B2 = subset_expand(g2, A)
        B12 = B1 | B2
        x = idb[(A << n) | B1].astype(np.int64)
        y = idb[(A << n) | B2].astype(np.int64)
        xy = idb[(A << n) | B12].astype(np.int64)

        sups = all_supersets(A, full)
        z = idb[(sups << n) | A].astype(np.int64)

        v1 = idb[(sups[None, :] << n) | B1[:, None]]
        v2 = idb[(sups[None, :] << n) | B2[:, None]]
        v3 = idb[(sups[None, :] << n) | B12[:, None]]
        p1 = _lookup(kk, ww, x[:, None] * NVi + z[None, :])
        p2 = _lookup(kk, ww, y[:, None] * NVi + z[None, :])
        p3 = _lookup(kk, ww, xy[:, None] * NVi + z[None, :])
        cb = int((p1 != v1).sum() + (p2 != v2).sum() + (p3 != v3).sum())
        consistency_bad += cb
        for pl in planes_b:
            additivity_bad += int((pl[B1] + pl[B2] != pl[B12]).sum())
        for pl in planes_p:
            additivity_bad += int((pl[B1] + pl[B2] != pl[B12]).sum())
        total += p1.size
        if example is None and cb:
            ii, jj = np.nonzero((p1 != v1) | (p2 != v2) | (p3 != v3))
            i, j = int(ii[0]), int(jj[0])
            example = {"U": int(sups[j]), "A": A,
                       "B1": int(B1[i]), "B2": int(B2[i])}
    return {"triples": total, "consistency_violations": consistency_bad,
            "additivity_violations": additivity_bad, "example": example,
            "pass": consistency_bad == 0 and additivity_bad == 0}


def _lookup(kk, ww, keys):
    pos = np.searchsorted(kk, keys.ravel())
    ok = (pos < len(kk))
    np.minimum(pos, len(kk) - 1, out=pos)
    if not (ok & (kk[pos] == keys.ravel())).all():
        raise KeyError("sum-constrained chain key missing from pair table")
    return ww[pos].reshape(keys.shape)


def check_product_law(table: PairTable):
    """F(x, y) == x * y on every key; exact, per distinct key.

    Pure probability structures satisfy this identically, which makes
    the additive equation algebraic: xz + yz = (x+y)z.
    """
    vi = table.vi
    bad = []
    for i in range(len(table.kk)):
        px, qx = vi.values[int(table.aa[i])]
        py, qy = vi.values[int(table.bb[i])]
        pw, qw = vi.values[int(table.ww[i])]
        if px * py * qw != pw * qx * qy:
            bad.append(i)
            if len(bad) >= 3:
                break
    return len(bad) == 0, bad


@dataclass(frozen=True)
class RTriple:
    x: Fraction
    y: Fraction
    z: Fraction
    U: int
    A: int
    B1: int
    B2: int


def enumerate_r_constrained(vi):
    """Stream sum-constrained triples; each distinct value triple appears
    at least once (dedup is per conditioning context A)."""
    st = vi.structure
    n = st.n
    full = st.full
    anchor = vi.anchor
    idb = vi.idb
    nv = np.int64(vi.nv)
    for A in range(1, full + 1):
        if A & anchor != anchor:
            continue
        k = bin(A).count("1")
        g1, g2 = disjoint_template(k)
        B1 = subset_expand(g1, A)
        B2 = subset_expand(g2, A)
        x = idb[(A << n) | B1].astype(np.int64)
        y = idb[(A << n) | B2].astype(np.int64)
        sups = all_supersets(A, full)
        z = idb[(sups << n) | A].astype(np.int64)
        packed = (x[:, None] * nv + y[:, None]) * nv + z[None, :]
        _, first = np.unique(packed, return_index=True)
        ii, jj = np.unravel_index(first, packed.shape)
        order = np.lexsort((jj, ii))
        for t in order:
            i, j = int(ii[t]), int(jj[t])
            yield RTriple(vi.value_of(int(x[i])), vi.value_of(int(y[i])),
                          vi.value_of(int(z[j])), int(sups[j]), A,
                          int(B1[i]), int(B2[i]))


def random_probability_check(structures, require_product=True):
    """Product law + sum equation across a batch of structures."""
    from .domain import structure_digest
    from .values import build_value_index
    from .pairs import build_pair_table
    results = []
    for st in structures:
        vi = build_value_index(st)
        table = build_pair_table(vi)
        prod_ok, _ = check_product_law(table) if require_product else (None, None)
        eq = check_sum_equation(table)
        results.append({"digest": structure_digest(st), "product": prod_ok,
                        "sum_equation": eq["pass"], "triples": eq["triples"]})
    return results
