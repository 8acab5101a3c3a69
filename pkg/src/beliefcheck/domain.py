"""Finite conditional-belief structures with exact rational evaluation.

Events are bitmasks over world indices (bit i = world i, up to 64 worlds).
All values are `fractions.Fraction`; no floating point enters any result.
"""

from __future__ import annotations

import functools
import hashlib
import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

MAX_WORLDS = 64


class DomainError(ValueError):
    """Base class for structure and evaluation errors."""


class EmptyConditioning(DomainError):
    """Conditioning event is empty."""


class MalformedNumber(DomainError):
    """A rational literal could not be parsed exactly."""


class NonPositiveWeight(DomainError):
    """A weight is zero or negative."""


class TriggerInvariantError(DomainError):
    """Perturbation leaks outside the trigger or changes its total weight."""


class TooManyWorlds(DomainError):
    """World count exceeds the bitmask width."""


class StructureFormatError(DomainError):
    """Domain file is syntactically or structurally invalid."""


class DegenerateDomain(DomainError):
    """All conditional probabilities coincide; no positive gap exists."""


_RAT_RE = re.compile(r"^[+-]?\d+(/\d+|\.\d+)?$")


def parse_rational(text: str) -> Fraction:
    """Parse "p/q", integer, or finite-decimal literals exactly."""
    text = text.strip()
    if not _RAT_RE.match(text):
        raise MalformedNumber("not a rational literal: %r" % text)
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedNumber("bad rational %r: %s" % (text, exc)) from None


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return "%d/%d" % (value.numerator, value.denominator)


@dataclass(frozen=True)
class BeliefStructure:
    """Worlds with base weights f, perturbed weights f', and a trigger event.

    Bel(V|U) evaluates with f' in the numerator exactly when the conditioning
    event contains the trigger; otherwise both numerator and denominator use f.
    `delta` records the perturbation magnitude baked into fprime (informational).
    """

    worlds: tuple[str, ...]
    f: tuple[Fraction, ...]
    fprime: tuple[Fraction, ...]
    trigger: int
    delta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "worlds", tuple(self.worlds))
        object.__setattr__(self, "f", tuple(Fraction(v) for v in self.f))
        fp = self.f if self.fprime is None else \
            tuple(Fraction(v) for v in self.fprime)
        object.__setattr__(self, "fprime", fp)
        object.__setattr__(self, "delta",
                           Fraction(0) if self.delta is None
                           else Fraction(self.delta))
        n = len(self.worlds)
        if n == 0 or n > MAX_WORLDS:
            raise TooManyWorlds("world count %d outside 1..%d" % (n, MAX_WORLDS))
        if len(set(self.worlds)) != n:
            raise StructureFormatError("duplicate world labels")
        if len(self.f) != n or len(self.fprime) != n:
            raise StructureFormatError("weight table length mismatch")
        for w, v in zip(self.worlds, self.f):
            if v <= 0:
                raise NonPositiveWeight("f(%s) = %s is not positive" % (w, v))
        for w, v in zip(self.worlds, self.fprime):
            if v <= 0:
                raise NonPositiveWeight("fprime(%s) = %s is not positive" % (w, v))
        if self.trigger < 0 or self.trigger >> n:
            raise TriggerInvariantError("trigger mask outside the domain")
        diff = 0
        for i in range(n):
            if self.f[i] != self.fprime[i]:
                diff |= 1 << i
        if diff & ~self.trigger:
            raise TriggerInvariantError(
                "f and fprime differ outside the trigger (mask 0x%x)" % diff)
        if self.weight_sum("base", self.trigger) != self.weight_sum(
                "perturbed", self.trigger):
            raise TriggerInvariantError("trigger total weight not preserved")

    @property
    def n(self) -> int:
        return len(self.worlds)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def mask_of(self, labels) -> int:
        idx = {w: i for i, w in enumerate(self.worlds)}
        m = 0
        for lab in labels:
            if lab not in idx:
                raise StructureFormatError("unknown world label %r" % lab)
            m |= 1 << idx[lab]
        return m

    def labels_of(self, mask: int) -> list[str]:
        return [self.worlds[i] for i in range(self.n) if (mask >> i) & 1]

    def weight_sum(self, which: str, U: int) -> Fraction:
        """Exact sum of the selected weight table over U (0 for the empty set)."""
        table = self.f if which == "base" else self.fprime
        total = Fraction(0)
        m = U & self.full
        while m:
            lb = m & (-m)
            total += table[lb.bit_length() - 1]
            m ^= lb
        return total

    def cond_prob(self, V: int, U: int) -> Fraction:
        """Pure conditional probability f(V∩U)/f(U)."""
        if U & self.full == 0:
            raise EmptyConditioning("conditioning event is empty")
        return self.weight_sum("base", V & U) / self.weight_sum("base", U)

    def bel_eval(self, V: int, U: int) -> Fraction:
        """Piecewise belief: perturbed numerator iff the trigger lies inside U."""
        U &= self.full
        if U == 0:
            raise EmptyConditioning("conditioning event is empty")
        if U & self.trigger == self.trigger:
            return self.weight_sum("perturbed", V & U) / self.weight_sum("base", U)
        return self.weight_sum("base", V & U) / self.weight_sum("base", U)

    def is_pure(self) -> bool:
        return self.f == self.fprime

    def scaled_weights(self) -> tuple[int, list[int], list[int]]:
        """Common denominator L and integer weight tables L*f, L*fprime."""
        L = 1
        for v in self.f + self.fprime:
            L = L * v.denominator // gcd(L, v.denominator)
        base = [int(v * L) for v in self.f]
        pert = [int(v * L) for v in self.fprime]
        return L, base, pert


def weight_sum(structure: BeliefStructure, which: str, U: int) -> Fraction:
    return structure.weight_sum(which, U)


def cond_prob(structure: BeliefStructure, V: int, U: int) -> Fraction:
    return structure.cond_prob(V, U)


def bel_eval(structure: BeliefStructure, V: int, U: int) -> Fraction:
    return structure.bel_eval(V, U)


def _subset_sums(weights: list[int]) -> list[int]:
    n = len(weights)
    sums = [0] * (1 << n)
    for m in range(1, 1 << n):
        lb = m & (-m)
        sums[m] = sums[m ^ lb] + weights[lb.bit_length() - 1]
    return sums


def _exact_ratio_sort(pairs):
    """Sort distinct (p, q) ratios ascending, exactly.

    A 64-bit fixed-point key gives the bulk order (floor is monotone in p/q);
    runs with equal keys are resolved by exact cross-multiplication.
    """
    keyed = [(((p << 64) // q), p, q) for (p, q) in pairs]
    keyed.sort(key=lambda t: t[0])

    def cross(a, b):
        lhs = a[1] * b[2]
        rhs = b[1] * a[2]
        return -1 if lhs < rhs else (1 if lhs > rhs else 0)

    out = []
    i, n = 0, len(keyed)
    while i < n:
        j = i + 1
        while j < n and keyed[j][0] == keyed[i][0]:
            j += 1
        if j - i > 1:
            out.extend(sorted(keyed[i:j], key=functools.cmp_to_key(cross)))
        else:
            out.append(keyed[i])
        i = j
    return [(p, q) for (_, p, q) in out]


def select_delta(weights) -> Fraction:
    """Minimum positive gap between distinct conditional probabilities.

    `weights` is a sequence of positive rationals; the gap ranges over all
    values f(A)/f(U) with A ⊆ U, U nonempty.  The result is exact and serves
    as a perturbation magnitude that provably preserves the strict value order.
    """
    ws = [Fraction(v) for v in weights]
    if any(v <= 0 for v in ws):
        raise NonPositiveWeight("weights must be positive")
    n = len(ws)
    if n > 16:
        raise TooManyWorlds("gap enumeration capped at 16 worlds")
    L = 1
    for v in ws:
        L = L * v.denominator // gcd(L, v.denominator)
    sums = _subset_sums([int(v * L) for v in ws])
    seen = set()
    for U in range(1, 1 << n):
        q = sums[U]
        s = U
        while True:
            p = sums[s]
            g = gcd(p, q)
            seen.add((p // g, q // g))
            if s == 0:
                break
            s = (s - 1) & U
    if len(seen) < 2:
        raise DegenerateDomain("fewer than two distinct conditional values")
    ordered = _exact_ratio_sort(seen)
    best_n, best_d = None, None
    for (p1, q1), (p2, q2) in zip(ordered, ordered[1:]):
        gn = p2 * q1 - p1 * q2
        gd = q1 * q2
        if best_n is None or gn * best_d < best_n * gd:
            best_n, best_d = gn, gd
    return Fraction(best_n, best_d)


# Canonical 12-world construction: four weight blocks of increasing magnitude,
# a trigger covering the heaviest block, and an offsetting perturbation that
# moves delta*10^18 of weight between the two lightest worlds of that block.
_E18 = 10 ** 18

HALPERN_WEIGHTS = (3, 2, 6,
                   5 * 10 ** 4, 6 * 10 ** 4, 8 * 10 ** 4,
                   3 * 10 ** 8, 8 * 10 ** 8, 8 * 10 ** 8,
                   3 * _E18, 2 * _E18, 14 * _E18)

# select_delta(HALPERN_WEIGHTS), frozen; the test suite re-derives it.
HALPERN_DELTA = Fraction(2, 120333333357402406794536907358034600033)


def build_halpern(delta: Fraction | None = None) -> BeliefStructure:
    """Canonical 12-world counterexample structure."""
    if delta is None:
        delta = HALPERN_DELTA
    delta = Fraction(delta)
    if delta <= 0:
        raise DomainError("delta must be positive")
    worlds = tuple("w%d" % i for i in range(1, 13))
    f = tuple(Fraction(v) for v in HALPERN_WEIGHTS)
    shift = delta * _E18
    fp = list(f)
    fp[9] = f[9] - shift     # w10
    fp[10] = f[10] + shift   # w11
    trigger = (1 << 9) | (1 << 10) | (1 << 11)
    return BeliefStructure(worlds, f, tuple(fp), trigger, delta)


# 13-world variant: a featherweight anchor world w0 whose 10^-5 weight is
# carved out of the last world of each block, keeping block totals intact;
# the trigger grows to include the anchor.
_EPS = Fraction(1, 10 ** 5)

FINE13_WEIGHTS = (_EPS,
                  3, 2, 6 - _EPS,
                  5 * 10 ** 4, 6 * 10 ** 4, 8 * 10 ** 4 - _EPS,
                  3 * 10 ** 8, 8 * 10 ** 8, 8 * 10 ** 8 - _EPS,
                  3 * _E18, 2 * _E18, 14 * _E18 - _EPS)

# select_delta(FINE13_WEIGHTS), frozen; the test suite re-derives it.
FINE13_DELTA = Fraction(
    1, 3610000000418072204192094680603041251114994500006)


def build_fine13(delta: Fraction | None = None) -> BeliefStructure:
    """13-world variant with an anchor world w0 inside the trigger."""
    if delta is None:
        delta = FINE13_DELTA
    delta = Fraction(delta)
    if delta <= 0:
        raise DomainError("delta must be positive")
    worlds = tuple("w%d" % i for i in range(0, 13))
    f = tuple(Fraction(v) for v in FINE13_WEIGHTS)
    shift = delta * _E18
    fp = list(f)
    fp[10] = f[10] - shift   # w10
    fp[11] = f[11] + shift   # w11
    trigger = 1 | (1 << 10) | (1 << 11) | (1 << 12)
    return BeliefStructure(worlds, f, tuple(fp), trigger, delta)


def perturbation_shift_bound(structure: BeliefStructure) -> Fraction:
    """Exact bound on |Bel - Pr| over all conditional values.

    The numerator deviation is a signed subset sum of per-world shifts, so its
    extreme is (sum of positive shifts) vs (sum of negative shifts); the
    denominator is at least the trigger weight.
    """
    pos = Fraction(0)
    neg = Fraction(0)
    for a, b in zip(structure.f, structure.fprime):
        d = b - a
        if d > 0:
            pos += d
        else:
            neg -= d
    top = max(pos, neg)
    if top == 0:
        return Fraction(0)
    return top / structure.weight_sum("base", structure.trigger)


def offsetting_pair(structure: BeliefStructure):
    """Indices (lowered, raised) when the perturbation is one ± pair.

    Returns None for pure structures and for any perturbation shape other
    than exactly one world lowered and one raised by the same amount.
    """
    neg = pos = -1
    for i in range(structure.n):
        d = structure.fprime[i] - structure.f[i]
        if d < 0:
            if neg >= 0:
                return None
            neg = i
        elif d > 0:
            if pos >= 0:
                return None
            pos = i
    if neg < 0 or pos < 0:
        return None
    if structure.f[neg] - structure.fprime[neg] != \
            structure.fprime[pos] - structure.f[pos]:
        return None
    return neg, pos


def validate_delta(structure: BeliefStructure) -> dict:
    """Check that the baked perturbation preserves the strict Pr value order.

    Sufficient condition: twice the worst |Bel - Pr| shift stays below the
    minimum positive gap of the base value set.  Returns the exact numbers.
    """
    gap = select_delta(structure.f)
    bound = perturbation_shift_bound(structure)
    return {
        "gap": gap,
        "shift_bound": bound,
        "order_preserved": 2 * bound < gap,
    }


def serialize_structure(structure: BeliefStructure) -> str:
    lines = ["worlds: " + " ".join(structure.worlds)]
    lines.append("f: " + " ".join(
        "%s=%s" % (w, format_rational(v))
        for w, v in zip(structure.worlds, structure.f)))
    diff = [(w, v) for w, v, b in zip(structure.worlds, structure.fprime,
                                      structure.f) if v != b]
    if diff:
        lines.append("fprime: " + " ".join(
            "%s=%s" % (w, format_rational(v)) for w, v in diff))
    lines.append("trigger: " + " ".join(structure.labels_of(structure.trigger)))
    lines.append("delta: " + format_rational(structure.delta))
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> BeliefStructure:
    fields = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise StructureFormatError("line %d: expected 'field: value'" % lineno)
        key, _, rest = line.partition(":")
        key = key.strip()
        if key in fields:
            raise StructureFormatError("duplicate field %r" % key)
        fields[key] = rest.strip()
    for required in ("worlds", "f", "trigger"):
        if required not in fields:
            raise StructureFormatError("missing field %r" % required)
    unknown = set(fields) - {"worlds", "f", "fprime", "trigger", "delta"}
    if unknown:
        raise StructureFormatError("unknown fields: %s" % ", ".join(sorted(unknown)))

    worlds = tuple(fields["worlds"].split())
    if not worlds:
        raise StructureFormatError("empty world list")
    if len(worlds) > MAX_WORLDS:
        raise TooManyWorlds("more than %d worlds" % MAX_WORLDS)
    if len(set(worlds)) != len(worlds):
        raise StructureFormatError("duplicate world labels")
    index = {w: i for i, w in enumerate(worlds)}

    def weight_map(spec_text, field):
        out = {}
        for token in spec_text.split():
            if "=" not in token:
                raise StructureFormatError(
                    "%s: expected label=value, got %r" % (field, token))
            lab, _, val = token.partition("=")
            if lab not in index:
                raise StructureFormatError("%s: unknown world %r" % (field, lab))
            if lab in out:
                raise StructureFormatError("%s: duplicate entry for %r" % (field, lab))
            out[lab] = parse_rational(val)
        return out

    fmap = weight_map(fields["f"], "f")
    missing = [w for w in worlds if w not in fmap]
    if missing:
        raise StructureFormatError("f: missing weights for %s" % ", ".join(missing))
    f = tuple(fmap[w] for w in worlds)

    fpmap = weight_map(fields.get("fprime", ""), "fprime")
    fp = tuple(fpmap.get(w, fmap[w]) for w in worlds)

    trigger = 0
    for lab in fields["trigger"].split():
        if lab not in index:
            raise StructureFormatError("trigger: unknown world %r" % lab)
        trigger |= 1 << index[lab]

    delta_text = fields.get("delta", "auto")
    if delta_text == "auto":
        delta = select_delta(f)
    else:
        delta = parse_rational(delta_text)
    return BeliefStructure(worlds, f, fp, trigger, delta)


def structure_digest(structure: BeliefStructure) -> str:
    payload = serialize_structure(structure).encode()
    return hashlib.sha256(payload).hexdigest()[:16]
