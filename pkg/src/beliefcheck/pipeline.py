"""End-to-end verification pipeline and report assembly.

Runs the check suites over one structure in a fixed order, collecting a
record per stage.  Check failures never stop later stages; only structural
errors (a conflicting combination table) cause dependent stages to be
skipped.  The verdict distills the run: "counterexample confirmed" when
the axioms hold yet no probability can induce the table,
"probability-consistent" when one demonstrably can.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import additive, monotone, ordering, pairs, rescaling, triples
from .domain import DomainError, build_fine13, validate_delta
from .report import ReportBuilder
from .values import build_value_index

# the per-key python-loop product check is reserved for small tables
_PRODUCT_LOOP_LIMIT = 250_000


@dataclass
class PipelineReport:
    report: dict
    timings: dict
    verdict: str
    artifacts: dict = field(repr=False, default_factory=dict)


def _witness_payload(w):
    return {
        "x": w.x, "y": w.y, "z": w.z, "lhs": w.lhs, "rhs": w.rhs,
        "chains": {name: ("0x%x" % c.u1, "0x%x" % c.u2, "0x%x" % c.u3)
                   for name, c in sorted(w.chains.items())},
    }


def run_pipeline(structure, exhaustive_triples: bool = False,
                 include_qcc: bool = False, include_appendix: bool = False,
                 fast: bool = False, witness_limit: int = 50,
                 command: str = "check") -> PipelineReport:
    rb = ReportBuilder(command, structure)
    art = {}
    pure = structure.is_pure()

    t = time.perf_counter()
    rb.add("invariants", "pass", time.perf_counter() - t,
           worlds=structure.n, pure=pure,
           trigger=structure.labels_of(structure.trigger))

    t = time.perf_counter()
    if pure:
        rb.add("delta", "skipped", time.perf_counter() - t,
               reason="no perturbation")
    else:
        dd = validate_delta(structure)
        rb.add("delta", "pass" if dd["order_preserved"] else "fail",
               time.perf_counter() - t, **dd)

    t = time.perf_counter()
    vi = build_value_index(structure)
    art["vi"] = vi
    rb.add("values", "pass", time.perf_counter() - t, count=vi.nv)

    if fast:
        rb.add("complement", "skipped", reason="fast mode")
        rb.add("additivity", "skipped", reason="fast mode")
    else:
        t = time.perf_counter()
        ok, bad = pairs.verify_complement(structure, vi)
        rb.add("complement", "pass" if ok else "fail",
               time.perf_counter() - t, **({} if ok else {"example": bad}))
        t = time.perf_counter()
        ok, bad = pairs.verify_additivity(structure, vi)
        rb.add("additivity", "pass" if ok else "fail",
               time.perf_counter() - t, **({} if ok else {"example": bad}))

    t = time.perf_counter()
    table = None
    try:
        table = pairs.build_pair_table(vi)
    except pairs.ConflictError as e:
        rb.add("pair_table", "fail", time.perf_counter() - t,
               conflict=str(e))
    if table is not None:
        art["table"] = table
        laws = pairs.check_boundary_laws(table)
        rb.add("pair_table", "pass" if laws["all"] else "fail",
               time.perf_counter() - t, keys=len(table.kk),
               chains=table.chain_count, laws=laws)

    if table is None or fast:
        rb.add("monotonicity", "skipped",
               reason="fast mode" if table is not None else "no table")
    else:
        t = time.perf_counter()
        mono = monotone.check_monotone(table)
        ok = mono["a"] and mono["b"] and mono["c"]
        rb.add("monotonicity", "pass" if ok else "fail",
               time.perf_counter() - t, a=mono["a"], b=mono["b"],
               c=mono["c"], violations=len(mono["violations"]))

    if table is None:
        rb.add("constrained_triples", "skipped", reason="no table")
    elif fast or not exhaustive_triples:
        rb.add("constrained_triples", "skipped",
               reason="enable with the exhaustive-triples flag")
    else:
        t = time.perf_counter()
        trip = triples.check_constrained_triples(table)
        rb.add("constrained_triples", "pass" if trip["pass"] else "fail",
               time.perf_counter() - t, chains=trip["chains"],
               violations=trip["violations"], examples=trip["examples"])

    wits, nwit = [], 0
    if table is None:
        rb.add("witness_search", "skipped", reason="no table")
    else:
        t = time.perf_counter()
        wits, nwit = pairs.search_witnesses(table, limit=witness_limit)
        detail = {"count": nwit, "reported": len(wits)}
        if wits:
            w = wits[0]
            detail["first"] = _witness_payload(w)
            detail["replayed"] = pairs.replay_witness(structure, w)
            if exhaustive_triples and not fast:
                constrained, _ = triples.is_constrained_triple(
                    vi, w.x, w.y, w.z)
                detail["constrained"] = constrained
        rb.add("witness_search",
               "pass" if detail.get("replayed", True) else "fail",
               time.perf_counter() - t, **detail)
        art["witnesses"] = wits

    if table is None:
        rb.add("sum_rule", "skipped", reason="no table")
    elif fast:
        rb.add("sum_rule", "skipped", reason="fast mode")
    elif exhaustive_triples:
        t = time.perf_counter()
        sr = additive.check_sum_equation(table)
        rb.add("sum_rule", "pass" if sr["pass"] else "fail",
               time.perf_counter() - t, triples=sr["triples"],
               consistency_violations=sr["consistency_violations"],
               additivity_violations=sr["additivity_violations"],
               example=sr["example"])
    elif pure and len(table.kk) <= _PRODUCT_LOOP_LIMIT:
        t = time.perf_counter()
        ok, bad = additive.check_product_law(table)
        rb.add("sum_rule", "pass" if ok else "fail",
               time.perf_counter() - t, method="product law",
               **({} if ok else {"bad_keys": bad}))
    else:
        rb.add("sum_rule", "skipped",
               reason="enable with the exhaustive-triples flag")

    t = time.perf_counter()
    rsys = rescaling.build_system(vi)
    rv = rescaling.solve(rsys)
    art["rescaling"] = rv
    detail = {"feasibility": rv.status, "equations": len(rsys),
              "instances": rsys.instance_count}
    if rv.status == "Infeasible":
        u, v = rv.certificate_pair
        detail["forced_pair"] = (vi.value_of(u), vi.value_of(v))
        detail["certificate_equations"] = len(rv.certificate)
        mech_ok = rescaling.replay_certificate(rsys, rv.certificate, u, v)
        detail["certificate_replayed"] = mech_ok
    else:
        detail["assignment_form"] = rv.assignment_form
        mech_ok = rescaling.verify_assignment(rsys, rv)
        detail["assignment_verified"] = mech_ok
    rb.add("rescaling", "pass" if mech_ok else "fail",
           time.perf_counter() - t, **detail)

    if not include_qcc or table is None:
        rb.add("order_axioms", "skipped",
               reason="no table" if table is None else
               "enable with the qcc flag")
    else:
        t = time.perf_counter()
        order = ordering.induced_order(vi)
        q12 = ordering.check_qcc1_qcc2(order)
        q7 = ordering.check_qcc7(order, table)
        detail = {"qcc1_total": q12["total"], "qcc2_transitive":
                  q12["transitive"], "reflexive": q12["reflexive"],
                  "qcc7_a": q7["a"], "qcc7_b": q7["b"], "qcc7_c": q7["c"]}
        try:
            cert = ordering.agreeing_obstruction(order)
            detail["obstruction"] = "produced"
            detail["obstruction_classes"] = [
                c["values"][0] for c in cert["classes"]]
        except ordering.ClassMismatchError:
            detail["obstruction"] = "class pattern absent"
        ok = q12["pass"] and q7["pass"]
        rb.add("order_axioms", "pass" if ok else "fail",
               time.perf_counter() - t, **detail)

    if not include_appendix:
        rb.add("closeness", "skipped", reason="enable with the appendix flag")
    else:
        _appendix_stages(rb, structure, art)

    statuses = {c["check"]: c["status"] for c in rb.checks}
    core = ("delta", "complement", "additivity", "pair_table",
            "monotonicity", "constrained_triples", "sum_rule",
            "order_axioms", "closeness")
    broken = [k for k in core if statuses.get(k) == "fail"]
    if broken:
        verdict = "invalid: " + ", ".join(broken)
    elif statuses.get("rescaling") == "fail":
        verdict = "inconclusive"
    elif nwit > 0 or rv.status == "Infeasible":
        verdict = "counterexample confirmed"
    else:
        verdict = "probability-consistent"
    return PipelineReport(rb.finish(verdict), rb.timings, verdict, art)


def _appendix_stages(rb, structure, art):
    from . import profiles
    try:
        blocks = profiles.standard_blocks(structure)
    except DomainError as e:
        rb.add("closeness", "skipped", reason=str(e))
        return
    t = time.perf_counter()
    close = profiles.check_closeness(structure)
    rb.add("closeness", "pass" if close["pass"] else "fail",
           time.perf_counter() - t, blocks=len(blocks),
           checked=close["checked"], worst=close["worst"],
           at=close["at"], bound=close["bound"])
    t = time.perf_counter()
    sweep = profiles.sweep_profiles(structure)
    art["profiles"] = sweep
    char = profiles.characterize_not_good(structure, sweep)
    rb.add("not_good_shapes",
           "pass" if char["matches_expected_shapes"] else "fail",
           time.perf_counter() - t, census=char["census"],
           extra_shapes=char["extra_shapes"])
    t = time.perf_counter()
    tri = profiles.verify_trichotomy(structure, sweep)
    rb.add("trichotomy", "pass" if tri["pass"] else "fail",
           time.perf_counter() - t, violations=tri["violations"])
    t = time.perf_counter()
    ident = profiles.profile_identity_survey(structure, sweep)
    rb.add("profile_identities",
           "pass" if not ident["failures"] else "fail",
           time.perf_counter() - t, a_set=sorted(ident["a_set"]),
           k_sets={str(k): v for k, v in sorted(ident["k_set"].items())},
           failures=ident["failures"])


def fine_report(restricted: bool = False, build_table: bool = False,
                command: str = "verify-fine") -> PipelineReport:
    """Order-axiom suite for the 13-world anchored structure.

    The default mode covers the cheap order checks and the class survey;
    ``build_table`` adds the table-level law survey (half a minute and a
    couple of gigabytes for the anchored family).
    """
    structure = build_fine13()
    rb = ReportBuilder(command, structure)
    art = {}

    t = time.perf_counter()
    fam = ordering.FilterFamily(structure, "w0")
    fc = fam.check()
    rb.add("filter_family",
           "pass" if fc["intersection_closed"] and fc["empty_free"]
           else "fail", time.perf_counter() - t, restricted=restricted, **fc)

    t = time.perf_counter()
    vi = fam.value_index() if restricted else build_value_index(structure)
    art["vi"] = vi
    rb.add("values", "pass", time.perf_counter() - t, count=vi.nv)

    t = time.perf_counter()
    order = ordering.InducedOrder(vi)
    q12 = ordering.check_qcc1_qcc2(order)
    rb.add("order_axioms", "pass" if q12["pass"] else "fail",
           time.perf_counter() - t, qcc1_total=q12["total"],
           qcc2_transitive=q12["transitive"], reflexive=q12["reflexive"])

    table = None
    if build_table:
        t = time.perf_counter()
        table = pairs.build_pair_table(vi)
        art["table"] = table
        rb.add("pair_table", "pass", time.perf_counter() - t,
               keys=len(table.kk), chains=table.chain_count)

    t = time.perf_counter()
    if restricted:
        rfc = ordering.restricted_fine_check(vi=vi, table=table,
                                             deep=table is not None)
        art["restricted"] = rfc
        detail = {
            "anchor": rfc["anchor"],
            "class_pattern_holds": rfc["class_pattern_holds"],
            "readings": {
                name: {k: v for k, v in r.items() if k != "certificate"}
                for name, r in rfc["readings"].items()},
            "rescaling": rfc["rescaling"],
        }
        if rfc["collisions"] is not None:
            detail["collision_search"] = {
                "found": rfc["collisions"]["found"],
                "witness_count": rfc["collisions"]["witness_count"]}
        rb.add("obstruction", "pass" if rfc["holds"] else "fail",
               time.perf_counter() - t, **detail)
    else:
        # the anchor-adjusted weights shift every non-block conditioning
        # sum, so the pattern is read with the anchor joined into each set
        try:
            cert = ordering.agreeing_obstruction(order, anchor=fam.anchor)
            art["obstruction"] = cert
            rb.add("obstruction", "pass", time.perf_counter() - t,
                   classes=[c["values"][0] for c in cert["classes"]],
                   gap_strict=cert["gap"]["strict"],
                   replay=cert["replay"])
        except ordering.ClassMismatchError as e:
            cert = e.args[1]
            rb.add("obstruction", "fail", time.perf_counter() - t,
                   reason="class pattern absent",
                   unequal_classes=[i + 1 for i, c in
                                    enumerate(cert["classes"])
                                    if not c["equal"]],
                   gap_strict=cert["gap"]["strict"])

    if table is not None and len(table.kk) <= 12_000_000:
        t = time.perf_counter()
        survey = ordering.fine_clause_survey(table)
        rb.add("law_survey", "pass", time.perf_counter() - t, **survey)
    elif table is not None:
        rb.add("law_survey", "skipped",
               reason="table too large for the clause survey")
    else:
        rb.add("law_survey", "skipped", reason="table survey not requested")

    statuses = [c["status"] for c in rb.checks]
    verdict = ("counterexample confirmed" if "fail" not in statuses
               else "obstruction absent")
    return PipelineReport(rb.finish(verdict), rb.timings, verdict, art)


def appendix_report(command: str = "verify-appendix") -> PipelineReport:
    """Standalone closeness / profile suite over the 12-world structure."""
    from .domain import build_halpern
    structure = build_halpern()
    rb = ReportBuilder(command, structure)
    art = {}
    _appendix_stages(rb, structure, art)
    statuses = [c["status"] for c in rb.checks]
    verdict = "pass" if "fail" not in statuses else "fail"
    return PipelineReport(rb.finish(verdict), rb.timings, verdict, art)
