"""Monotonicity checks over the combination table.

Three clauses at value level, quantified over all key pairs
(x, y) -> w and (x', y') -> w':

  (a)  x <= x'  and  y <= y'                          =>  w <= w'
  (b)  x <  x'  and  y <= y'  and  x' > 0, y' > 0     =>  w <  w'
  (c)  x <= x'  and  y <  y'  and  x' > 0, y' > 0     =>  w <  w'

D keys make the naive pair sweep O(D^2); the default path is a
sort-and-sweep dominance check that reports the same violations.  The
naive oracle stays available for cross-validation on small structures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pairs import PairTable


def dominance_max(first, second, val, is_query, nv: int):
    """Per row j: max of val over rows i strictly earlier in the given
    order with second[i] <= second[j]; -1 when no such row.

    Rows must arrive sorted by the intended sequence order (candidates
    before queries on ties).  Rows with is_query set contribute no val.
    Merge-sorts blocks of doubling width on the second coordinate and
    resolves cross-block dominance by prefix maxima, so the whole sweep
    is O(n log^2 n) in vectorized passes.
    """
    n = len(first)
    P = 1
    while P < n:
        P *= 2
    pad = P - n
    Y = np.concatenate([second, np.full(pad, nv + 1, dtype=second.dtype)])
    W = np.concatenate([np.where(is_query, -1, val),
                        np.full(pad, -1, dtype=val.dtype)])
    IDX = np.concatenate([np.arange(n, dtype=np.int64),
                          np.full(pad, -1, dtype=np.int64)])
    M = np.full(P, -1, dtype=val.dtype)
    s = 1
    while s < P:
        m = P // (2 * s)
        Y3 = Y.reshape(m, 2, s)
        W3 = W.reshape(m, 2, s)
        YL = Y3[:, 0, :]
        YR = Y3[:, 1, :]
        pm = np.maximum.accumulate(W3[:, 0, :], axis=1)
        base = (np.arange(m, dtype=np.int64) * np.int64(nv + 2))[:, None]
        FL = (YL.astype(np.int64) + base).ravel()
        FR = (YR.astype(np.int64) + base).ravel()
        pos = np.searchsorted(FL, FR, side="right")
        pos_local = pos - np.repeat(np.arange(m, dtype=np.int64) * s, s)
        have = pos_local > 0
        cand = np.full(m * s, -1, dtype=val.dtype)
        rowi = np.repeat(np.arange(m, dtype=np.int64), s)
        cand[have] = pm[rowi[have], pos_local[have] - 1]
        MR = M.reshape(m, 2, s)[:, 1, :].ravel()
        np.maximum(MR, cand, out=MR)
        M.reshape(m, 2, s)[:, 1, :] = MR.reshape(m, s)
        wide = 2 * s
        Yw = Y.reshape(-1, wide)
        o = np.argsort(Yw, axis=1, kind="stable")
        Y = np.take_along_axis(Yw, o, axis=1).ravel()
        W = np.take_along_axis(W.reshape(-1, wide), o, axis=1).ravel()
        M = np.take_along_axis(M.reshape(-1, wide), o, axis=1).ravel()
        IDX = np.take_along_axis(IDX.reshape(-1, wide), o, axis=1).ravel()
        s = wide
    out = np.full(n, -1, dtype=val.dtype)
    real = IDX >= 0
    out[IDX[real]] = M[real]
    return out


def strict_scan(w, a, b, guard_ok, nv: int):
    """Rows sorted by (w, a, b); flags rows j having an earlier row i in
    the same w-group with a[i] < a[j] and b[i] <= b[j] and guard_ok[j].

    Tracks the running minimum of b over all prior a-runs of the group;
    per-group offsets keep minima from leaking across group boundaries.
    """
    n = len(w)
    idx = np.arange(n)
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    new_group[1:] = w[1:] != w[:-1]
    new_run = np.empty(n, dtype=bool)
    new_run[0] = True
    new_run[1:] = new_group[1:] | (a[1:] != a[:-1])
    gstart = np.maximum.accumulate(np.where(new_group, idx, 0))
    rstart = np.maximum.accumulate(np.where(new_run, idx, 0))
    gid = np.cumsum(new_group) - 1
    ng = gid[-1] + 1
    off = (ng - gid).astype(np.int64) * (nv + 2)
    pmin = np.minimum.accumulate(b.astype(np.int64) + off) - off
    rm = np.full(n, nv + 1, dtype=np.int64)
    hp = np.flatnonzero(rstart > gstart)
    rm[hp] = pmin[rstart[hp] - 1]
    return np.flatnonzero((rm <= b) & guard_ok)


@dataclass
class MonotoneViolation:
    clause: str
    key_low: tuple       # (x_rank, y_rank, w_rank) of the dominated row
    key_high: tuple
    chains: tuple        # realizing chains for both keys


def _pair_for(table, clause, xj, yj, wj):
    """Recover a concrete dominating partner for a flagged query row."""
    xs, ys, ws = table.aa, table.bb, table.ww
    if clause == "a":
        m = (xs <= xj) & (ys <= yj) & (ws > wj)
    elif clause == "b":
        m = (xs < xj) & (ys <= yj) & (ws >= wj)
    else:
        m = (xs <= xj) & (ys < yj) & (ws >= wj)
    i = int(np.flatnonzero(m)[0])
    return int(xs[i]), int(ys[i]), int(ws[i])


def check_monotone(table: PairTable, naive: bool = False):
    """Returns {"a"/"b"/"c": bool, "violations": [MonotoneViolation]}."""
    if naive:
        return _check_monotone_naive(table)
    nv = table.nv
    xs = table.aa.astype(np.int64)
    ys = table.bb.astype(np.int64)
    ws = table.ww.astype(np.int64)
    out = {"violations": []}

    # keys are already (x, y)-lex sorted
    va = dominance_max(xs, ys, ws, np.zeros(len(xs), dtype=bool), nv)
    bad_a = np.flatnonzero(va > ws)
    out["a"] = len(bad_a) == 0

    ob = np.lexsort((ys, xs, ws))
    vb = ob[strict_scan(ws[ob], xs[ob], ys[ob],
                        (xs[ob] != 0) & (ys[ob] != 0), nv)]
    out["b"] = len(vb) == 0

    oc = np.lexsort((xs, ys, ws))
    vc = oc[strict_scan(ws[oc], ys[oc], xs[oc],
                        (xs[oc] != 0) & (ys[oc] != 0), nv)]
    out["c"] = len(vc) == 0

    for clause, bad in (("a", bad_a), ("b", vb), ("c", vc)):
        for j in bad[:3]:
            xj, yj, wj = int(xs[j]), int(ys[j]), int(ws[j])
            low = _pair_for(table, clause, xj, yj, wj)
            hi = (xj, yj, wj)
            if clause == "a":
                low, hi = hi, low
            out["violations"].append(MonotoneViolation(
                clause, low, hi,
                (table.witness_chain(low[0], low[1]),
                 table.witness_chain(hi[0], hi[1]))))
    out["pass"] = out["a"] and out["b"] and out["c"]
    return out


def _check_monotone_naive(table: PairTable):
    """O(D^2) oracle; only for small tables."""
    xs, ys, ws = table.aa, table.bb, table.ww
    D = len(xs)
    out = {"a": True, "b": True, "c": True, "violations": []}
    for i in range(D):
        xi, yi, wi = int(xs[i]), int(ys[i]), int(ws[i])
        for j in range(D):
            if i == j:
                continue
            xj, yj, wj = int(xs[j]), int(ys[j]), int(ws[j])
            guard = xj > 0 and yj > 0
            hit = None
            if xi <= xj and yi <= yj and wi > wj:
                hit = "a"
            elif xi < xj and yi <= yj and guard and wi >= wj:
                hit = "b"
            elif xi <= xj and yi < yj and guard and wi >= wj:
                hit = "c"
            if hit:
                out[hit] = False
                if len(out["violations"]) < 9:
                    out["violations"].append(MonotoneViolation(
                        hit, (xi, yi, wi), (xj, yj, wj),
                        (table.witness_chain(xi, yi),
                         table.witness_chain(xj, yj))))
    out["pass"] = out["a"] and out["b"] and out["c"]
    return out


def check_role_swapped(table: PairTable, naive: bool = False):
    """Crossed weak clause: x >= y' and y >= x'  =>  w >= w'.

    Used by the comparative-order checks, where the two conditional
    chains exchange roles between premises.
    """
    xs = table.aa.astype(np.int64)
    ys = table.bb.astype(np.int64)
    ws = table.ww.astype(np.int64)
    if naive:
        bad = []
        for i in range(len(xs)):
            for j in range(len(xs)):
                if ys[j] <= xs[i] and xs[j] <= ys[i] and ws[j] > ws[i]:
                    bad.append((j, i))
        return {"pass": len(bad) == 0, "violations": bad[:3]}
    n = len(xs)
    firsts = np.concatenate([ys, xs])
    seconds = np.concatenate([xs, ys])
    vals = np.concatenate([ws, ws])
    isq = np.concatenate([np.zeros(n, dtype=bool), np.ones(n, dtype=bool)])
    o = np.lexsort((isq, firsts))
    M = dominance_max(firsts[o], seconds[o], vals[o], isq[o], table.nv)
    flagged = np.flatnonzero(isq[o] & (M > vals[o]))
    pairs = []
    for t in flagged[:3]:
        i = int(o[t]) - n
        m = (ys <= xs[i]) & (xs <= ys[i]) & (ws > ws[i])
        pairs.append((int(np.flatnonzero(m)[0]), i))
    return {"pass": len(flagged) == 0, "violations": pairs}
