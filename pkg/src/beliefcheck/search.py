"""Randomized search for structures that defeat the combination axioms.

Generates block-weighted structures mimicking the canonical construction —
weight tiers separated by orders of magnitude, the heaviest block as the
trigger, an offsetting perturbation inside it — and runs each through the
fast verification pipeline.  Findings are structures whose combination
table yields an associativity witness or an infeasible rescaling system.
"""
from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .domain import (BeliefStructure, DomainError, select_delta,
                     structure_digest)
from .pairs import ConflictError
from .pipeline import PipelineReport, run_pipeline

DEFAULT_TIERS = (Fraction(1), Fraction(10 ** 4), Fraction(10 ** 8),
                 Fraction(10 ** 18))


@dataclass(frozen=True)
class SearchConfig:
    worlds: int = 6
    trials: int = 100
    seed: int = 0
    tiers: tuple = DEFAULT_TIERS
    perturb: bool = True
    threads: int = 1
    witness_limit: int = 10

    def __post_init__(self):
        if not 2 <= self.worlds <= 16:
            raise DomainError("world count must be between 2 and 16")
        if self.trials < 0:
            raise DomainError("trial count must be nonnegative")
        tiers = tuple(Fraction(t) for t in self.tiers)
        if not tiers or any(t <= 0 for t in tiers):
            raise DomainError("tiers must be positive rationals")
        if sorted(tiers) != list(tiers):
            raise DomainError("tiers must be ascending")
        object.__setattr__(self, "tiers", tiers)


@dataclass
class Finding:
    trial: int
    structure: BeliefStructure
    verdict: str
    witness_count: int
    rescaling: str
    report: PipelineReport = field(repr=False)


def _block_sizes(worlds: int, blocks: int) -> list[int]:
    blocks = min(blocks, worlds - 1) or 1
    sizes = [1] * blocks
    i = blocks - 1
    for _ in range(worlds - blocks):
        sizes[i] += 1
        i = blocks - 1 if i == 0 else i - 1
    return sizes


def generate_structure(config: SearchConfig, trial: int) -> BeliefStructure:
    """Deterministic structure for (seed, trial); independent of all others."""
    rng = random.Random((config.seed, trial))
    sizes = _block_sizes(config.worlds, len(config.tiers))
    tiers = config.tiers[-len(sizes):]
    f = []
    for size, tier in zip(sizes, tiers):
        f.extend(Fraction(rng.randint(1, 19)) * tier for _ in range(size))
    n = len(f)
    top = sizes[-1]
    trigger = ((1 << top) - 1) << (n - top)
    worlds = tuple("w%d" % i for i in range(1, n + 1))

    if not config.perturb or top < 2:
        return BeliefStructure(worlds, tuple(f), None, trigger, None)

    lowered, raised = rng.sample(range(n - top, n), 2)
    trig_weight = sum(f[n - top:], Fraction(0))
    gap = select_delta(f)
    # keep the shift under the reordering bound and the lowered weight
    h = min(gap * trig_weight, f[lowered]) / rng.randint(3, 9)
    fp = list(f)
    fp[lowered] -= h
    fp[raised] += h
    return BeliefStructure(worlds, tuple(f), tuple(fp), trigger, h)


def run_trial(config: SearchConfig, trial: int) -> Finding | None:
    """One generated structure through the fast pipeline; None if clean."""
    structure = generate_structure(config, trial)
    try:
        report = run_pipeline(structure, fast=True,
                              witness_limit=config.witness_limit,
                              command="search")
    except ConflictError:
        # ambiguous combination table: not a counterexample candidate
        return None
    nwit = 0
    resc = "unknown"
    for c in report.report["checks"]:
        d = c.get("detail", {})
        if c["check"] == "witness_search":
            nwit = int(d.get("count", 0))
        elif c["check"] == "rescaling":
            resc = d.get("feasibility", "unknown")
    if nwit == 0 and resc != "Infeasible":
        return None
    return Finding(trial, structure, report.verdict, nwit, resc, report)


def search(config: SearchConfig) -> list[Finding]:
    """All findings over the configured trials, sorted by trial index.

    Trials are independent (per-trial derived seeds), so the result is
    identical for any thread count.
    """
    idx = range(config.trials)
    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(lambda i: run_trial(config, i), idx))
    else:
        results = [run_trial(config, i) for i in idx]
    return sorted((r for r in results if r is not None),
                  key=lambda r: r.trial)


def _violates(structure: BeliefStructure) -> bool:
    try:
        report = run_pipeline(structure, fast=True, witness_limit=1,
                              command="shrink")
    except (ConflictError, DomainError):
        return False
    return report.verdict == "counterexample confirmed"


def _drop_world(structure: BeliefStructure, i: int) -> BeliefStructure:
    keep = [j for j in range(structure.n) if j != i]
    trigger = 0
    for pos, j in enumerate(keep):
        if (structure.trigger >> j) & 1:
            trigger |= 1 << pos
    return BeliefStructure(
        tuple(structure.worlds[j] for j in keep),
        tuple(structure.f[j] for j in keep),
        tuple(structure.fprime[j] for j in keep),
        trigger, structure.delta)


def _merge_worlds(structure: BeliefStructure, i: int, j: int):
    """Sum worlds i and j into one; only within the same trigger side."""
    ti = (structure.trigger >> i) & 1
    if ti != (structure.trigger >> j) & 1:
        return None
    f = list(structure.f)
    fp = list(structure.fprime)
    f[i] += f[j]
    fp[i] += fp[j]
    trigger = 0
    pos = 0
    for k in range(structure.n):
        if k == j:
            continue
        if (structure.trigger >> k) & 1:
            trigger |= 1 << pos
        pos += 1
    return BeliefStructure(
        tuple(w for k, w in enumerate(structure.worlds) if k != j),
        tuple(v for k, v in enumerate(f) if k != j),
        tuple(v for k, v in enumerate(fp) if k != j),
        trigger, structure.delta)


def shrink(structure: BeliefStructure, report=None):
    """Greedy minimization that preserves the violation.

    Tries single-world removals, then same-side merges, accepting any step
    after which the fast pipeline still confirms a counterexample; repeats
    until no step applies.  The result is re-verified with the full
    pipeline before returning (structure, report, steps).
    """
    if not _violates(structure):
        raise DomainError("shrink requires a structure that violates")
    steps = []
    current = structure
    progress = True
    while progress:
        progress = False
        for i in range(current.n):
            try:
                cand = _drop_world(current, i)
            except DomainError:
                continue
            if _violates(cand):
                steps.append(("drop", current.worlds[i]))
                current = cand
                progress = True
                break
        if progress:
            continue
        for i in range(current.n):
            for j in range(i + 1, current.n):
                try:
                    cand = _merge_worlds(current, i, j)
                except DomainError:
                    continue
                if cand is not None and _violates(cand):
                    steps.append(("merge", current.worlds[i],
                                  current.worlds[j]))
                    current = cand
                    progress = True
                    break
            if progress:
                break
    final = run_pipeline(current, command="shrink")
    if final.verdict != "counterexample confirmed":
        raise DomainError("shrunk structure no longer violates: %s"
                          % final.verdict)
    return current, final, steps


def describe(finding: Finding) -> dict:
    return {
        "trial": finding.trial,
        "digest": structure_digest(finding.structure),
        "worlds": finding.structure.n,
        "verdict": finding.verdict,
        "witnesses": finding.witness_count,
        "rescaling": finding.rescaling,
    }
