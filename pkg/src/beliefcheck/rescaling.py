"""Existence of an injective rescaling g with g(a)·g(b) = g(c).

Every instance (V, U) with nonzero values contributes the requirement
g(Bel(V|U)) · g(Bel(U)) = g(Bel(V∩U)).  In log space these are linear
equations L_a + L_b − L_c = 0 over one variable per distinct nonzero
value, with L(1) = 0 forced by the V=U=W instance.  Exact elimination
either exhibits two distinct values with identical canonical forms — no
injective g can exist, and a signed equation sequence certifies it — or
yields an explicit injective assignment.

Zero values never enter: any g with g(0) ≠ 0 forces g(Bel(U)) = 1 for
every U via V=∅ instances, killing injectivity outright, so g(0) = 0 and
zero-valued instances hold identically (positive weights make
Bel(V|U) = 0 exactly when Bel(V∩U) = 0).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np

from .values import ValueIndex, all_subsets, build_value_index


def check_unconditional_injectivity(vi: ValueIndex):
    """V ⊊ U implies Bel(V) < Bel(U), exhaustively over nested pairs."""
    st = vi.structure
    n = st.n
    ur = vi.idb[(st.full << n) + np.arange(1 << n)]
    for U in range(1, st.full + 1):
        subs = all_subsets(U)
        proper = subs[subs != U]
        bad = np.flatnonzero(ur[proper] >= ur[U])
        if len(bad):
            return False, (int(proper[bad[0]]), U)
    return True, None


@dataclass
class LogLinearSystem:
    vi: ValueIndex
    keys: np.ndarray        # packed (a*nv + b)*nv + c, ascending
    witnesses: np.ndarray   # packed (U << n) | V, minimal per key
    instance_count: int

    def triple(self, i: int):
        nv = self.vi.nv
        key = int(self.keys[i])
        return key // (nv * nv), (key // nv) % nv, key % nv

    def __len__(self):
        return len(self.keys)


def build_system(vi: ValueIndex) -> LogLinearSystem:
    """One deduplicated equation per value triple, minimal witness each."""
    st = vi.structure
    n = st.n
    nv = np.int64(vi.nv)
    idb = vi.idb
    ur = idb[(st.full << n) + np.arange(1 << n)].astype(np.int64)
    keys_l = []
    wit_l = []
    total = 0
    for U in range(1, st.full + 1):
        if U & vi.anchor != vi.anchor:
            continue
        subs = all_subsets(U)
        subs = subs[subs != 0]
        a = idb[(U << n) + subs].astype(np.int64)
        key = (a * nv + ur[U]) * nv + ur[subs]
        keys_l.append(key)
        wit_l.append((np.int64(U) << n) | subs)
        total += len(subs)
    keys = np.concatenate(keys_l)
    wit = np.concatenate(wit_l)
    order = np.argsort(keys, kind="stable")
    keys = keys[order]
    wit = wit[order]
    newk = np.empty(len(keys), dtype=bool)
    newk[0] = True
    np.not_equal(keys[1:], keys[:-1], out=newk[1:])
    starts = np.flatnonzero(newk)
    return LogLinearSystem(vi, keys[starts].copy(),
                           np.minimum.reduceat(wit, starts), total)


@dataclass
class Verdict:
    status: str                      # "Feasible" | "Infeasible"
    forced_groups: list              # rank groups with identical forms
    certificate: list | None         # [(eq_index, coeff)] when Infeasible
    certificate_pair: tuple | None   # the two ranks forced equal
    assignment: dict | None          # rank -> Fraction when Feasible
    assignment_form: str = ""        # "identity" | "exponent"
    assignment_expo: dict | None = None   # rank -> int, g = (1/2)**e


def solve(system: LogLinearSystem, certificate_for=None) -> Verdict:
    nv = system.vi.nv
    eqs = system.keys
    a_r = (eqs // (nv * nv)).astype(np.int64)
    b_r = ((eqs // nv) % nv).astype(np.int64)
    c_r = (eqs % nv).astype(np.int64)
    rank1 = system.vi.one_rank

    core = np.unique(np.concatenate([b_r, c_r]))
    core_set = set(core.tolist())

    # group instances by their conditional value a
    o = np.argsort(a_r, kind="stable")
    a_s, b_s, c_s = a_r[o], b_r[o], c_r[o]
    starts = np.flatnonzero(np.concatenate(([True], a_s[1:] != a_s[:-1])))
    ends = np.concatenate((starts[1:], [len(a_s)]))

    # constraint rows over core variables, each carrying its equation
    # combination: row == sum(prov[eq] * (e_a + e_b - e_c)) identically
    cons = []
    defin = {}
    for si, ei in zip(starts, ends):
        a = int(a_s[si])
        items = [(int(b_s[j]), int(c_s[j]), int(o[j])) for j in range(si, ei)]
        if a == rank1:
            for (b, c, eid) in items:
                if b != c:
                    cons.append(({b: Fraction(1), c: Fraction(-1),
                                  rank1: Fraction(1)}, {eid: Fraction(1)}))
            continue
        if a in core_set:
            for (b, c, eid) in items:
                d = _addv({}, a, 1)
                d = _addv(d, b, 1)
                d = _addv(d, c, -1)
                if d:
                    cons.append((d, {eid: Fraction(1)}))
            continue
        b0, c0, e0 = items[0]
        defin[a] = (e0, b0, c0)
        for (b, c, eid) in items[1:]:
            d = _addv({}, c0, 1)
            d = _addv(d, b0, -1)
            d = _addv(d, c, -1)
            d = _addv(d, b, 1)
            if d:
                cons.append((d, {e0: Fraction(-1), eid: Fraction(1)}))

    # pin L(1) = 0, citing the V=U=W instance (e_1 + e_1 - e_1 = e_1)
    pin_key = (np.int64(rank1) * nv + rank1) * nv + rank1
    pin_eid = int(np.searchsorted(eqs, pin_key))
    assert pin_eid < len(eqs) and eqs[pin_eid] == pin_key
    cons.append(({rank1: Fraction(1)}, {pin_eid: Fraction(1)}))

    pivots = {}
    for d, prov in cons:
        d = dict(d)
        prov = dict(prov)
        while d:
            var = min(d)
            if var in pivots:
                coef = d.pop(var)
                prow, pprov = pivots[var]
                for k, v in prow.items():
                    if k != var:
                        d = _addv(d, k, -coef * v)
                for k, v in pprov.items():
                    prov = _addv(prov, k, -coef * v)
            else:
                coef = d[var]
                if coef != 1:
                    d = {k: v / coef for k, v in d.items()}
                    prov = {k: v / coef for k, v in prov.items()}
                pivots[var] = (d, prov)
                break

    # back-substitute so every pivot row mentions no other pivot variable
    for v in sorted(pivots, reverse=True):
        d, prov = pivots[v]
        changed = True
        while changed:
            changed = False
            for k in sorted(k for k in d if k != v and k in pivots):
                coef = d.pop(k)
                prow, pprov = pivots[k]
                for k2, v2 in prow.items():
                    if k2 != k:
                        d = _addv(d, k2, -coef * v2)
                for k2, v2 in pprov.items():
                    prov = _addv(prov, k2, -coef * v2)
                changed = True
        pivots[v] = (d, prov)

    def canon(var):
        if var in pivots:
            d, _ = pivots[var]
            return tuple(sorted((k, -v) for k, v in d.items() if k != var))
        return ((var, Fraction(1)),)

    # canonical form of every nonzero value; conditional-only values via
    # their defining equation e_a = e_c - e_b (modulo the cited equation)
    canon_core = {int(v): canon(int(v)) for v in core}
    canon_core[rank1] = canon(rank1)
    groups = defaultdict(list)
    for a in range(1, nv):
        if a in defin:
            _, b, c = defin[a]
            d = dict(canon_core[c])
            for k, v in canon_core[b]:
                d = _addv(d, k, -v)
            key = tuple(sorted(d.items()))
        else:
            key = canon_core[a] if a in canon_core else canon(a)
        groups[key].append(a)

    multi = sorted((sorted(g) for g in groups.values() if len(g) > 1))
    if multi:
        u, v = multi[0][0], multi[0][1]
        if certificate_for is not None:
            for grp in multi:
                if certificate_for[0] in grp and certificate_for[1] in grp:
                    u, v = certificate_for
                    break
        cert = _certificate(system, pivots, defin, u, v)
        return Verdict("Infeasible", multi, cert, (u, v), None)

    if _identity_ok(system):
        g = {r: system.vi.value_of(r) for r in range(nv)}
        return Verdict("Feasible", [], None, None, g, "identity")
    expo = _exponent_assignment(system, pivots, defin, rank1)
    g = None
    if max(abs(e) for e in expo.values()) <= 4096:
        half = Fraction(1, 2)
        g = {0: Fraction(0)}
        for a, e in expo.items():
            g[a] = half ** e
    return Verdict("Feasible", [], None, None, g, "exponent", expo)


def _addv(d, k, v):
    nv = d.get(k, Fraction(0)) + v
    if nv:
        d[k] = nv
    elif k in d:
        del d[k]
    return d


def _certificate(system, pivots, defin, u, v):
    """Signed equations summing to e_u − e_v; replayed before returning."""
    d = {}
    prov = {}
    for var, sgn in ((u, 1), (v, -1)):
        if var in defin:
            eid, b, c = defin[var]
            prov = _addv(prov, eid, sgn)
            d = _addv(d, b, -sgn)
            d = _addv(d, c, sgn)
        else:
            d = _addv(d, var, sgn)
    while True:
        pv = [k for k in d if k in pivots]
        if not pv:
            break
        var = min(pv)
        coef = d.pop(var)
        prow, pprov = pivots[var]
        for k, w in prow.items():
            if k != var:
                d = _addv(d, k, -coef * w)
        for k, w in pprov.items():
            prov = _addv(prov, k, coef * w)
    if d:
        raise AssertionError("forced pair did not reduce: %r" % d)
    cert = sorted(prov.items())
    ok, _ = replay_certificate(system, cert, u, v)
    if not ok:
        raise AssertionError("certificate failed to replay")
    return cert


def replay_certificate(system, cert, u, v):
    """Sum coeff·(e_a + e_b − e_c) over cited equations; must equal
    exactly e_u − e_v."""
    acc = {}
    for eid, cf in cert:
        a, b, c = system.triple(int(eid))
        acc = _addv(acc, a, cf)
        acc = _addv(acc, b, cf)
        acc = _addv(acc, c, -cf)
    return acc == {u: Fraction(1), v: Fraction(-1)}, acc


def _exponent_assignment(system, pivots, defin, rank1):
    """Integer exponents e with e_a + e_b = e_c per equation, all distinct,
    e(1) = 0, realizing g(v) = (1/2)**e(v).

    Free variables are evaluated at deterministic points; each retry adds
    an independent power-basis knob, so any fixed nonzero difference form
    is eventually separated (its power sums cannot all vanish).
    """
    nv = system.vi.nv
    forms = {}
    free_vars = []
    seen_free = set()
    for a in range(1, nv):
        if a in defin:
            _, b, c = defin[a]
            d = dict(_form_of(pivots, c))
            for k, w in _form_of(pivots, b).items():
                d = _addv(d, k, -w)
        else:
            d = dict(_form_of(pivots, a))
        forms[a] = d
        for k in d:
            if k not in seen_free:
                seen_free.add(k)
                free_vars.append(k)
    free_vars.sort()
    m = len(free_vars)
    order = {k: i + 1 for i, k in enumerate(free_vars)}
    for attempt in range(4 * (m + 2)):
        point = {k: Fraction(order[k] ** (1 + attempt % (m + 1)) + attempt)
                 for k in free_vars}
        expo = {}
        seen_e = set()
        ok = True
        for a, d in forms.items():
            e = Fraction(0)
            for k, w in d.items():
                e += point[k] * w
            if (e == 0) != (a == rank1) or e in seen_e:
                ok = False
                break
            seen_e.add(e)
            expo[a] = e
        if ok:
            den = 1
            for e in expo.values():
                den = den * e.denominator // gcd(den, e.denominator)
            return {a: int(e * den) for a, e in expo.items()}
    raise AssertionError("exponent assignment failed to separate values")


def _form_of(pivots, var):
    if var in pivots:
        d, _ = pivots[var]
        return {k: -v for k, v in d.items() if k != var}
    return {var: Fraction(1)}


def _identity_ok(system) -> bool:
    vi = system.vi
    for i in range(len(system.keys)):
        a, b, c = system.triple(i)
        pa, qa = vi.values[a]
        pb, qb = vi.values[b]
        pc, qc = vi.values[c]
        if pa * pb * qc != pc * qa * qb:
            return False
    return True


def verify_assignment(system, verdict: Verdict) -> bool:
    """Feasible soundness: equations hold, endpoints fixed, injective.

    Identity assignments verify multiplicatively; exponent assignments
    verify additively on the exponents (g = (1/2)**e is injective and
    multiplicative in e, so both checks are exact).
    """
    vi = system.vi
    if verdict.assignment_form == "identity":
        g = verdict.assignment
        if g.get(0) != 0 or g.get(vi.one_rank) != 1:
            return False
        if len(set(g.values())) != len(g):
            return False
        for i in range(len(system.keys)):
            a, b, c = system.triple(i)
            if g[a] * g[b] != g[c]:
                return False
        return True
    e = verdict.assignment_expo
    if e.get(vi.one_rank) != 0:
        return False
    if len(set(e.values())) != len(e) or len(e) != vi.nv - 1:
        return False
    for i in range(len(system.keys)):
        a, b, c = system.triple(i)
        if e[a] + e[b] != e[c]:
            return False
    return True


def naive_forced_pairs(system) -> list:
    """Independent dense oracle for forced equalities on small systems.

    One variable per nonzero value (no definitional shortcuts), dense
    row reduction over rationals, then pairwise form comparison.
    """
    nv = system.vi.nv
    rank1 = system.vi.one_rank
    width = nv  # columns 1..nv-1 used
    rows = []
    for i in range(len(system.keys)):
        a, b, c = system.triple(i)
        row = [Fraction(0)] * width
        row[a] += 1
        row[b] += 1
        row[c] -= 1
        rows.append(row)
    pin = [Fraction(0)] * width
    pin[rank1] = Fraction(1)
    rows.append(pin)
    pivot_of_col = {}
    reduced = []
    for row in rows:
        row = row[:]
        for col, ri in pivot_of_col.items():
            if row[col]:
                f = row[col]
                prow = reduced[ri]
                for k in range(width):
                    row[k] -= f * prow[k]
        lead = next((k for k in range(1, width) if row[k]), None)
        if lead is None:
            continue
        f = row[lead]
        row = [v / f for v in row]
        for prow in reduced:
            if prow[lead]:
                g2 = prow[lead]
                for k in range(width):
                    prow[k] -= g2 * row[k]
        pivot_of_col[lead] = len(reduced)
        reduced.append(row)
    forms = {}
    for a in range(1, nv):
        if a in pivot_of_col:
            prow = reduced[pivot_of_col[a]]
            forms[a] = tuple(
                (k, -prow[k]) for k in range(1, width) if k != a and prow[k])
        else:
            forms[a] = ((a, Fraction(1)),)
    pairs = []
    for u in range(1, nv):
        for v in range(u + 1, nv):
            if forms[u] == forms[v]:
                pairs.append((u, v))
    return pairs


def rescale_structure(structure, vi: ValueIndex | None = None) -> Verdict:
    vi = vi or build_value_index(structure)
    ok, witness = check_unconditional_injectivity(vi)
    if not ok:
        raise ValueError("unconditional values not nested-injective: %r"
                         % (witness,))
    return solve(build_system(vi))
