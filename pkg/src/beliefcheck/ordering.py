"""Comparative order on conditional objects and its agreement obstruction.

A structure's belief values induce a total preorder on conditional objects
A|U: one object ranks at least as high as another exactly when its value is
at least as large.  The checks here confirm the comparison axioms that a
numeric order inherits, re-run the dominance axioms at value level over the
deduplicated combination table, and assemble the class-pattern certificate
showing that no conditional probability measure can agree with the order.
"""

from fractions import Fraction
import random

import numpy as np

from .domain import BeliefStructure, DomainError, build_fine13
from .values import ValueIndex, build_value_index
from .pairs import (PairTable, build_pair_table, check_boundary_laws,
                    find_associativity_witnesses, find_witnesses_seeded)
from .monotone import check_monotone, check_role_swapped
from .extension import check_closure_claims
from . import rescaling


class ClassMismatchError(DomainError):
    """The induced order does not exhibit the expected class pattern."""


class FilterFamily:
    """All conditioning sets that contain a fixed anchor world.

    Closed under intersection and free of the empty set, because every
    member is a superset of the (nonempty) anchor.
    """

    def __init__(self, structure: BeliefStructure, anchor):
        if isinstance(anchor, int):
            mask = anchor
        else:
            mask = structure.mask_of(
                [anchor] if isinstance(anchor, str) else anchor)
        if mask == 0 or mask >> structure.n:
            raise DomainError("anchor must be a nonempty set of worlds")
        self.structure = structure
        self.anchor = mask

    def __contains__(self, U: int) -> bool:
        return U & self.anchor == self.anchor and not U >> self.structure.n

    def __len__(self):
        return 1 << (self.structure.n - bin(self.anchor).count("1"))

    def members(self):
        full = self.structure.full
        rest = full & ~self.anchor
        s = rest
        while True:
            yield s | self.anchor
            if s == 0:
                return
            s = (s - 1) & rest

    def check(self) -> dict:
        """Structural closure facts, plus a direct scan on small domains."""
        out = {"intersection_closed": True, "empty_free": True,
               "member_count": len(self)}
        if self.structure.n <= 8:
            mem = list(self.members())
            out["empty_free"] = all(m != 0 for m in mem)
            out["intersection_closed"] = all(
                (a & b) in self for a in mem for b in mem)
        return out

    def value_index(self) -> ValueIndex:
        return build_value_index(self.structure, anchor=self.anchor)


class InducedOrder:
    """Total preorder on conditional objects A|U, compared by exact value."""

    def __init__(self, vi: ValueIndex):
        self.vi = vi
        self.structure = vi.structure

    def _mask(self, ev) -> int:
        if isinstance(ev, int):
            return ev
        return self.structure.mask_of(ev)

    def value(self, A, U) -> Fraction:
        A, U = self._mask(A), self._mask(U)
        if U & self.vi.anchor != self.vi.anchor:
            raise DomainError(
                "conditioning set 0x%x is outside the order's family" % U)
        return self.structure.bel_eval(A, U)

    def rank(self, A, U) -> int:
        A, U = self._mask(A), self._mask(U)
        r = self.vi.rank_at(U, A & U)
        if r < 0:
            raise DomainError(
                "conditioning set 0x%x is outside the order's family" % U)
        return r

    def compare(self, obj1, obj2) -> int:
        """-1, 0, or 1 as obj1 ranks below, with, or above obj2."""
        v1 = self.value(*obj1)
        v2 = self.value(*obj2)
        return -1 if v1 < v2 else (1 if v1 > v2 else 0)

    def at_least(self, obj1, obj2) -> bool:
        return self.compare(obj1, obj2) >= 0


def induced_order(source) -> InducedOrder:
    if isinstance(source, InducedOrder):
        return source
    if isinstance(source, ValueIndex):
        return InducedOrder(source)
    return InducedOrder(build_value_index(source))


def _random_objects(order: InducedOrder, rng: random.Random, count: int):
    st = order.structure
    anchor = order.vi.anchor
    full = st.full
    out = []
    while len(out) < count:
        U = rng.randrange(1, full + 1) | anchor
        A = rng.randrange(0, full + 1) & U
        out.append((A, U))
    return out


def check_qcc1_qcc2(order, trials: int = 1000, seed: int = 0) -> dict:
    """Totality, reflexivity and transitivity of the induced comparison.

    All three hold structurally for an order read off numeric values; the
    randomized triples exercise the comparison path on concrete objects.
    """
    order = induced_order(order)
    rng = random.Random(seed)
    objs = _random_objects(order, rng, 3 * trials)
    total = trans = refl = 0
    for i in range(trials):
        a, b, c = objs[3 * i], objs[3 * i + 1], objs[3 * i + 2]
        ab, bc, ac = order.compare(a, b), order.compare(b, c), order.compare(a, c)
        if ab >= 0 or ab <= 0:              # any two objects compare
            total += 1
        if not (ab >= 0 and bc >= 0) or ac >= 0:
            trans += 1
        if order.compare(a, a) == 0:
            refl += 1
    return {"trials": trials, "total": total == trials,
            "transitive": trans == trials, "reflexive": refl == trials,
            "pass": total == trans == refl == trials}


def check_qcc7(order, table: PairTable | None = None, naive: bool = False) -> dict:
    """Dominance axioms of the order, checked at value level.

    Runs over the deduplicated chain table: (a) the weak clause, (b) the
    crossed-premise clause (first arguments compared against the partner's
    second), (c) the strict clauses, where a premise with value 0 exempts
    strictness.
    """
    order = induced_order(order)
    if table is None:
        table = build_pair_table(order.vi)
    mono = check_monotone(table, naive=naive)
    swap = check_role_swapped(table, naive=naive)
    vios = list(mono["violations"]) + list(swap["violations"])
    return {"a": mono["a"], "b": swap["pass"],
            "c": mono["b"] and mono["c"],
            "pass": mono["pass"] and swap["pass"],
            "counterexample": vios[0] if vios else None}


# The driving pattern: five pairs of conditional objects with pairwise
# equal values, spanning the four weight blocks, plus one strictly ordered
# pair separated only by the perturbation.  Objects are (event, condition)
# label tuples shared by the 12- and 13-world structures.
_PATTERN = (
    ((("w1",), ("w1", "w2")), (("w10",), ("w10", "w11")),
     Fraction(3, 5)),
    ((("w1", "w2"), ("w1", "w2", "w3")), (("w4",), ("w4", "w5")),
     Fraction(5, 11)),
    ((("w4", "w5"), ("w4", "w5", "w6")), (("w7", "w8"), ("w7", "w8", "w9")),
     Fraction(11, 19)),
    ((("w4",), ("w4", "w5", "w6")), (("w10", "w11"), ("w10", "w11", "w12")),
     Fraction(5, 19)),
    ((("w1",), ("w1", "w2", "w3")), (("w7",), ("w7", "w8")),
     Fraction(3, 11)),
)
_GAP_LOW = (("w10",), ("w10", "w11", "w12"))
_GAP_HIGH = (("w7",), ("w7", "w8", "w9"))

# Nested towers A ⊂ B ⊂ C whose two links and composite realize pattern
# members.  In any conditional probability P the chain rule multiplies the
# links: P(A|C) = P(A|B) · P(B|C).
_TOWERS = (
    (("w1",), ("w1", "w2"), ("w1", "w2", "w3")),
    (("w4",), ("w4", "w5"), ("w4", "w5", "w6")),
    (("w7",), ("w7", "w8"), ("w7", "w8", "w9")),
    (("w10",), ("w10", "w11"), ("w10", "w11", "w12")),
)


def _obj_str(structure, A, U):
    return "%s|%s" % ("{" + ",".join(structure.labels_of(A)) + "}",
                      "{" + ",".join(structure.labels_of(U)) + "}")


def _adjusted(structure, labels, extra, grow: bool):
    m = structure.mask_of(labels)
    if grow and extra:
        m |= extra
    return m


def agreeing_obstruction(order, anchor=0, events_anchored: bool = True,
                         transform=None) -> dict:
    """Certificate that no conditional probability agrees with the order.

    Verifies the five equal-value classes and the strict separated pair,
    then records the four nested towers whose chain-rule products force any
    agreeing measure to equate the separated pair — contradicting the
    strict order.  ``anchor`` (a mask or label set) is unioned into every
    conditioning set, and into every event too when ``events_anchored``;
    this replays the certificate inside an anchored family.  ``transform``
    optionally maps values through a second agreeing function before the
    class comparison (the stability replay).
    """
    order = induced_order(order)
    st = order.structure
    amask = anchor if isinstance(anchor, int) else st.mask_of(anchor)
    tf = transform if transform is not None else (lambda v: v)

    def val(labels_a, labels_u):
        A = _adjusted(st, labels_a, amask, events_anchored)
        U = _adjusted(st, labels_u, amask, True)
        return tf(order.value(A, U)), _obj_str(st, A, U)

    classes = []
    ok = True
    for left, right, expected in _PATTERN:
        v1, s1 = val(*left)
        v2, s2 = val(*right)
        eq = v1 == v2
        classes.append({"objects": (s1, s2), "values": (v1, v2),
                        "expected": tf(Fraction(expected)), "equal": eq,
                        "matches_expected": v1 == v2 == tf(Fraction(expected))})
        ok = ok and eq
    lo_v, lo_s = val(*_GAP_LOW)
    hi_v, hi_s = val(*_GAP_HIGH)
    gap = {"low": lo_s, "high": hi_s, "low_value": lo_v, "high_value": hi_v,
           "strict": lo_v < hi_v, "difference": hi_v - lo_v}
    distinct = len({c["values"][0] for c in classes} | {lo_v, hi_v}) == 7
    ok = ok and gap["strict"] and distinct

    towers = []
    for a, b, c in _TOWERS:
        am = _adjusted(st, a, amask, events_anchored)
        bm = _adjusted(st, b, amask, True)
        cm = _adjusted(st, c, amask, True)
        assert am & bm == am and bm & cm == bm     # nesting is structural
        towers.append({"sets": (_obj_str(st, am, bm), _obj_str(st, bm, cm),
                                _obj_str(st, am, cm)),
                       "link_values": (tf(order.value(am, bm)),
                                       tf(order.value(bm, cm))),
                       "composite_value": tf(order.value(am, cm))})

    cert = {"classes": classes, "gap": gap, "distinct_class_values": distinct,
            "towers": towers, "holds": ok,
            "argument": (
                "any agreeing measure P assigns one value per class; the "
                "chain rule over the four towers multiplies the first two "
                "class values, then the third, reassociating to the product "
                "of the first and fourth — so P gives the separated pair "
                "equal values, yet agreement with the strict order forbids "
                "that")}
    if transform is None:
        sq = agreeing_obstruction(order, anchor=amask,
                                  events_anchored=events_anchored,
                                  transform=lambda v: v * v)
        cert["replay"] = {"transform": "square", "holds": sq["holds"]}
        cert["holds"] = ok and sq["holds"]
    if not cert["holds"]:
        bad = [i + 1 for i, c in enumerate(classes) if not c["equal"]]
        raise ClassMismatchError(
            "order does not exhibit the class pattern "
            "(unequal classes %s, strict gap %s)" % (bad, gap["strict"]),
            cert)
    return cert


def fine_clause_survey(table: PairTable, witness_count: int | None = None) -> dict:
    """Which combination-function laws survive on the constructed table.

    Reports commutativity of the shared-key region, monotonicity above
    zero, the unit and zero laws, and whether associativity fails (the
    witness count; computed here if not supplied).
    """
    laws = check_boundary_laws(table)
    closure = check_closure_claims(table)
    mono = check_monotone(table)
    if witness_count is None:
        _, witness_count = find_associativity_witnesses(table, limit=1)
    return {
        "commutative_on_shared_keys": closure["symmetric_values_agree"],
        "monotone_above_zero": mono["b"] and mono["c"] and mono["a"],
        "unit_law": laws["unit_left"] and laws["unit_right"],
        "zero_law": laws["zero_left"] and laws["no_zero_y"],
        "associativity_fails": witness_count > 0,
        "witness_count": witness_count,
    }


def restricted_fine_check(vi: ValueIndex | None = None,
                          table: PairTable | None = None,
                          deep: bool = False) -> dict:
    """Anchored-family variant of the agreement obstruction.

    Builds the 13-world structure and the family of conditioning sets
    containing its anchor world, then probes every route an agreeing
    conditional measure could be blocked on:

    * the class pattern, under both readings of how the anchor joins the
      class representatives (into every set, or into conditioning sets
      only);
    * the multiplicative-rescaling system over the family's values — an
      infeasibility here would certify the obstruction without any class
      pattern at all;
    * optionally (``deep=True``) an exhaustive combination-order
      collision search over the anchored table.

    The verdict records each route separately; ``holds`` is True only if
    at least one route actually produces an obstruction.
    """
    st = build_fine13()
    fam = FilterFamily(st, "w0")
    out = {"family": fam.check(), "anchor": "w0"}

    if vi is None:
        vi = table.vi if table is not None else fam.value_index()
    if vi.anchor != fam.anchor or vi.structure.n != st.n:
        raise DomainError("values do not belong to the anchored family")
    order = InducedOrder(vi)

    readings = {}
    for name, events_anchored in (("all_sets", True),
                                  ("conditioning_only", False)):
        try:
            cert = agreeing_obstruction(order, anchor=fam.anchor,
                                        events_anchored=events_anchored)
            readings[name] = {"holds": True, "certificate": cert}
        except ClassMismatchError as e:
            cert = e.args[1]
            readings[name] = {
                "holds": False,
                "unequal_classes": [i + 1 for i, c in
                                    enumerate(cert["classes"])
                                    if not c["equal"]],
                "gap_strict": cert["gap"]["strict"],
                "certificate": cert}
    out["readings"] = readings
    out["class_pattern_holds"] = any(r["holds"] for r in readings.values())

    system = rescaling.build_system(vi)
    verdict = rescaling.solve(system)
    resc = {"status": verdict.status, "equations": len(system),
            "instances": system.instance_count}
    if verdict.status == "Infeasible":
        resc["forced_pair"] = [vi.value_of(r) for r in verdict.certificate_pair]
        resc["certificate_equations"] = len(verdict.certificate)
        resc["replay"] = rescaling.replay_certificate(
            system, verdict.certificate, *verdict.certificate_pair)
    else:
        resc["assignment_form"] = verdict.assignment_form
        resc["system_verified"] = rescaling.verify_assignment(system, verdict)
        if table is not None:
            resc["all_keys_verified"] = _assignment_covers_table(
                verdict, table)
    out["rescaling"] = resc

    if deep:
        if table is None:
            table = build_pair_table(vi)
        wits, count = restricted_obstruction(table)
        out["collisions"] = {"found": count > 0, "witness_count": count,
                             "witnesses": wits}
    else:
        out["collisions"] = None

    out["holds"] = (out["class_pattern_holds"]
                    or verdict.status == "Infeasible"
                    or bool(deep and count))
    return out


def _assignment_covers_table(verdict, table: PairTable) -> bool:
    """Check a rescaling assignment against every combination key.

    The solved system only covers chains of length two drawn from event
    triples; a conforming table must additionally satisfy additivity of
    the exponents across all of its keys.  Nontrivial keys are those with
    neither argument equal to one and the first argument nonzero (the
    boundary rows hold by the unit and zero laws).
    """
    if verdict.assignment_form != "exponent":
        return False
    sent = np.iinfo(np.int64).min
    expo = np.full(table.nv, sent, dtype=np.int64)
    for rank, e in verdict.assignment_expo.items():
        expo[rank] = e
    zero = table.vi.rank_of(Fraction(0))
    one = table.vi.rank_of(Fraction(1))
    keep = (table.aa != zero) & (table.aa != one) & (table.bb != one)
    ea, eb = expo[table.aa[keep]], expo[table.bb[keep]]
    ew = expo[table.ww[keep]]
    if (ea == sent).any() or (eb == sent).any() or (ew == sent).any():
        return False
    return bool((ea + eb == ew).all())


def restricted_obstruction(table: PairTable, limit: int = 20):
    """Exhaustively search the anchored table for an association-order
    collision.

    A collision needs at least one key whose result deviates from the
    product of its arguments, so the search seeds from the deviant keys
    and joins outward; see find_witnesses_seeded.  Returns (witnesses,
    count) in the same shape as the unrestricted witness search.
    """
    return find_witnesses_seeded(table, limit=limit)
