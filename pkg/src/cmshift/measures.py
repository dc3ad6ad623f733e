"""Invariant measures from periodic orbits, with exact rational masses.

Everything in this module is exact: cylinder masses are occurrence
counts over a cycle divided by its period, invariance defects are
computed (not estimated) and must be zero, and the metric for the
topology of convergence on cylinders is returned as an exact bracket
(partial sum, partial sum + tail bound) over a fixed canonical
enumeration of admissible cylinders.
"""

from __future__ import annotations

import warnings
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

from .shifts import ShiftSpec, Word, is_admissible, successors, row_continues_beyond

__all__ = [
    "PeriodicOrbit",
    "PeriodicMeasure",
    "ConvexCombination",
    "CylinderFunction",
    "TestFunction",
    "InadmissibleWordError",
    "SymbolCapError",
    "UnrepresentedCylinderError",
    "TailInteractionError",
    "periodic_orbit",
    "periodic_measure",
    "measure_from_cycle",
    "fixed_point_measure",
    "convex_combination",
    "measure_of_cylinder",
    "combo_of_cylinder",
    "support_table",
    "invariance_check",
    "canonical_cylinders",
    "canonical_cylinder",
    "metric_d",
    "indicator",
    "integrate_test_function",
    "c0_conditions_check",
    "additivity_defect",
    "canonical_cylinder_iter",
    "InvarianceReport",
    "C0Report",
    "combo_to_jsonable",
    "parse_combo_text",
]


class InadmissibleWordError(ValueError):
    """A word violates the transition rule of its shift."""


class SymbolCapError(ValueError):
    """A symbol cap does not cover the symbols the operation must see."""


class UnrepresentedCylinderError(LookupError):
    """A cylinder table was queried outside its represented envelope."""

    def __init__(self, word: Word, index: int | None = None):
        self.word = word
        self.index = index
        where = f" (canonical index {index})" if index is not None else ""
        super().__init__(f"cylinder {word} not represented{where}")


class TailInteractionError(ValueError):
    """A test-function tail overlaps the support of the measure."""


# ---------------------------------------------------------------------------
# periodic orbits and their measures


@dataclass(frozen=True)
class PeriodicOrbit:
    """A primitive admissible cycle; build through `periodic_orbit`."""

    cycle: Word

    @property
    def period(self) -> int:
        return len(self.cycle)

    @property
    def symbols(self) -> frozenset[int]:
        return frozenset(self.cycle)


def _primitive_root(word: Word) -> Word:
    n = len(word)
    for d in range(1, n):
        if n % d == 0 and word == word[:d] * (n // d):
            return word[:d]
    return word


def periodic_orbit(spec: ShiftSpec, symbols: Iterable[int]) -> PeriodicOrbit:
    word = tuple(int(s) for s in symbols)
    if not word:
        raise InadmissibleWordError("empty cycle")
    if not is_admissible(spec, word):
        raise InadmissibleWordError(f"word {word} is not admissible for {spec.name}")
    if not spec.is_allowed(word[-1], word[0]):
        raise InadmissibleWordError(f"cycle {word} does not close up")
    root = _primitive_root(word)
    if len(root) < len(word):
        warnings.warn(
            f"cycle {word} is a power of {root}; reduced to its primitive root",
            stacklevel=2,
        )
    return PeriodicOrbit(root)


@dataclass(frozen=True)
class PeriodicMeasure:
    """The invariant probability equidistributed on a periodic orbit."""

    orbit: PeriodicOrbit

    @property
    def period(self) -> int:
        return self.orbit.period


def periodic_measure(orbit: PeriodicOrbit) -> PeriodicMeasure:
    return PeriodicMeasure(orbit)


def measure_from_cycle(spec: ShiftSpec, symbols: Iterable[int]) -> PeriodicMeasure:
    return PeriodicMeasure(periodic_orbit(spec, symbols))


def fixed_point_measure(spec: ShiftSpec, symbol: int) -> PeriodicMeasure:
    return measure_from_cycle(spec, (symbol,))


@lru_cache(maxsize=256)
def _cycle_text(cycle: Word) -> tuple[str, tuple[int, ...]]:
    """Doubled cycle as a comma-delimited string plus symbol offsets."""
    doubled = cycle + cycle
    text = "," + ",".join(map(str, doubled)) + ","
    offsets = []
    pos = 1
    for s in doubled:
        offsets.append(pos)
        pos += len(str(s)) + 1
    return text, tuple(offsets)


def _count_cyclic_occurrences(cycle: Word, word: Word) -> int:
    """Number of j in [0, period) where the cyclic read from j begins with word."""
    T = len(cycle)
    if len(word) <= T + 1:
        text, offsets = _cycle_text(cycle)
        pattern = "," + ",".join(map(str, word)) + ","
        boundary = offsets[T - 1]
        count = 0
        pos = text.find(pattern)
        while pos != -1 and pos < boundary:
            count += 1
            pos = text.find(pattern, pos + 1)
        return count
    reps = (len(word) - 1) // T + 2
    ext = cycle * reps
    return sum(1 for j in range(T) if ext[j : j + len(word)] == word)


def measure_of_cylinder(mu: PeriodicMeasure, word: Iterable[int]) -> Fraction:
    """Exact mass of the cylinder of `word`: cyclic occurrences over period."""
    w = tuple(word)
    if not w:
        raise ValueError("cylinder words are nonempty")
    cycle = mu.orbit.cycle
    return Fraction(_count_cyclic_occurrences(cycle, w), len(cycle))


# ---------------------------------------------------------------------------
# finite convex combinations (sub-probabilities)


@dataclass(frozen=True)
class ConvexCombination:
    """sum_j weight_j * mu_j with exact weights in (0, 1], total <= 1.

    An empty combination is the zero measure.
    """

    terms: tuple[tuple[Fraction, PeriodicMeasure], ...]

    @property
    def mass(self) -> Fraction:
        return sum((w for w, _ in self.terms), Fraction(0))

    @property
    def orbit_symbols(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for _, mu in self.terms:
            out |= mu.orbit.symbols
        return out

    def max_period(self) -> int:
        return max((mu.period for _, mu in self.terms), default=0)


def convex_combination(
    pairs: Iterable[tuple[Rational, PeriodicMeasure]]
) -> ConvexCombination:
    terms = []
    for w, mu in pairs:
        w = Fraction(w)
        if not 0 < w <= 1:
            raise ValueError(f"weight {w} outside (0, 1]")
        terms.append((w, mu))
    total = sum((w for w, _ in terms), Fraction(0))
    if total > 1:
        raise ValueError(f"weights sum to {total} > 1")
    return ConvexCombination(tuple(terms))


def combo_of_cylinder(nu: ConvexCombination, word: Iterable[int]) -> Fraction:
    w = tuple(word)
    return sum(
        (wt * measure_of_cylinder(mu, w) for wt, mu in nu.terms), Fraction(0)
    )


def support_table(
    nu: ConvexCombination, depth: int, symbol_cap: int
) -> dict[Word, Fraction]:
    """All cylinders of length <= depth and symbols <= symbol_cap with
    nonzero mass, read off the orbits directly."""
    words: set[Word] = set()
    for _, mu in nu.terms:
        cycle = mu.orbit.cycle
        T = len(cycle)
        ext = cycle * ((depth - 1) // T + 2)
        for j in range(T):
            for length in range(1, depth + 1):
                w = tuple(ext[j : j + length])
                if max(w) <= symbol_cap:
                    words.add(w)
    return {w: combo_of_cylinder(nu, w) for w in sorted(words)}


# ---------------------------------------------------------------------------
# invariance diagnostics


@dataclass(frozen=True)
class InvarianceReport:
    max_defect: Fraction
    defects: tuple[tuple[Word, Fraction], ...]  # nonzero ones only
    words_checked: int
    depth: int
    symbol_cap: int


def invariance_check(
    nu: ConvexCombination, depth: int, symbol_cap: int
) -> InvarianceReport:
    """Exact defects |nu(D) - nu(preimage of D)| over words D up to `depth`.

    The preimage of a cylinder is the union of its one-symbol extensions
    to the left, and only orbit symbols can contribute, so the sum is
    finite and exact.  Words D outside the orbits' cyclic subwords have
    defect zero structurally: an occurrence of sD contains an occurrence
    of D, so both sides vanish.  The check therefore enumerates the
    support words of length up to `depth`; the reported count covers the
    whole depth by that argument.
    """
    if not isinstance(nu, ConvexCombination):
        raise TypeError(
            "invariance is checked for measures; cylinder tables have no "
            "preimage decomposition until they extend to a measure"
        )
    if depth < 1:
        raise ValueError("depth must be >= 1")
    alphabet = sorted(nu.orbit_symbols)
    if alphabet and alphabet[-1] > symbol_cap:
        raise SymbolCapError(
            f"symbol cap {symbol_cap} misses orbit symbol {alphabet[-1]}"
        )
    defects = []
    support = support_table(nu, depth, symbol_cap)
    for word, value in support.items():
        pre = sum(
            (combo_of_cylinder(nu, (s,) + word) for s in alphabet),
            Fraction(0),
        )
        if value != pre:
            defects.append((word, abs(value - pre)))
    max_defect = max((d for _, d in defects), default=Fraction(0))
    return InvarianceReport(
        max_defect=max_defect,
        defects=tuple(defects),
        words_checked=len(support),
        depth=depth,
        symbol_cap=symbol_cap,
    )


# ---------------------------------------------------------------------------
# canonical cylinder enumeration and the metric d


def _compositions(total: int, parts: int) -> Iterator[Word]:
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def canonical_cylinder_iter(spec: ShiftSpec) -> Iterator[Word]:
    """Admissible cylinders in canonical order.

    Order: ascending symbol sum; within a sum, shorter words first; then
    lexicographic.  This is a bijective enumeration of the admissible
    cylinders, fixed once so that metric values are reproducible.
    """
    size = 1
    while True:
        for length in range(1, size + 1):
            for word in _compositions(size, length):
                if is_admissible(spec, word):
                    yield word
        size += 1


def canonical_cylinders(spec: ShiftSpec, count: int) -> list[Word]:
    it = canonical_cylinder_iter(spec)
    return [next(it) for _ in range(count)]


def canonical_cylinder(spec: ShiftSpec, index: int) -> Word:
    if index < 1:
        raise ValueError("canonical indices start at 1")
    return canonical_cylinders(spec, index)[-1]


def _cylinder_evaluator(obj):
    if isinstance(obj, ConvexCombination):
        return lambda word, index: combo_of_cylinder(obj, word)
    if isinstance(obj, PeriodicMeasure):
        return lambda word, index: measure_of_cylinder(obj, word)
    if isinstance(obj, CylinderFunction):
        def eval_table(word, index):
            try:
                return obj.value(word)
            except UnrepresentedCylinderError:
                raise UnrepresentedCylinderError(word, index) from None
        return eval_table
    raise TypeError(f"cannot evaluate cylinders of {type(obj).__name__}")


def metric_d(a, b, N: int, spec: ShiftSpec) -> tuple[Fraction, Fraction]:
    """Bracket for d(a, b) = sum_n 2^-n |a(C_n) - b(C_n)|.

    The lower bound is the exact partial sum over the first N canonical
    cylinders; the upper bound adds the tail bound 2^-N.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    ev_a = _cylinder_evaluator(a)
    ev_b = _cylinder_evaluator(b)
    lower = Fraction(0)
    it = canonical_cylinder_iter(spec)
    for n in range(1, N + 1):
        word = next(it)
        lower += Fraction(1, 2**n) * abs(ev_a(word, n) - ev_b(word, n))
    return lower, lower + Fraction(1, 2**N)


# ---------------------------------------------------------------------------
# cylinder tables: finitely represented candidate limits


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """A finitely represented [0,1]-valued function on cylinders.

    `entries` lists the nonzero (or otherwise notable) values; at any
    depth in `depth_caps` every unlisted word with symbols at or below
    that depth's cap takes the default value 0.  Outside the envelope
    the table is simply not represented and lookups raise.
    """

    entries: Mapping[Word, Fraction]
    depth_caps: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(self.entries))
        object.__setattr__(self, "depth_caps", dict(self.depth_caps))
        for word, value in self.entries.items():
            if not 0 <= value <= 1:
                raise ValueError(f"value {value} for {word} outside [0, 1]")

    def represented(self, word: Word) -> bool:
        if word in self.entries:
            return True
        cap = self.depth_caps.get(len(word))
        return cap is not None and max(word) <= cap

    def value(self, word: Iterable[int]) -> Fraction:
        w = tuple(word)
        if w in self.entries:
            return self.entries[w]
        cap = self.depth_caps.get(len(w))
        if cap is not None and max(w) <= cap:
            return Fraction(0)
        raise UnrepresentedCylinderError(w)

    @property
    def max_depth(self) -> int:
        depths = [len(w) for w in self.entries]
        depths.extend(self.depth_caps)
        return max(depths, default=0)

    @classmethod
    def from_combo(
        cls, nu: ConvexCombination, depth: int, symbol_cap: int
    ) -> "CylinderFunction":
        table = support_table(nu, depth, symbol_cap)
        caps = {d: symbol_cap for d in range(1, depth + 1)}
        return cls(table, caps)

    def consistency_violations(self) -> list[str]:
        """Monotonicity and within-table additivity diagnostics."""
        problems = []
        for word, value in self.entries.items():
            for cut in range(1, len(word)):
                prefix = word[:cut]
                if self.represented(prefix) and self.value(prefix) < value:
                    problems.append(
                        f"monotonicity: value({word})={value} exceeds "
                        f"value({prefix})={self.value(prefix)}"
                    )
        by_parent: dict[Word, Fraction] = {}
        for word, value in self.entries.items():
            if len(word) > 1:
                parent = word[:-1]
                by_parent[parent] = by_parent.get(parent, Fraction(0)) + value
        for parent, child_sum in by_parent.items():
            if self.represented(parent) and self.value(parent) < child_sum:
                problems.append(
                    f"additivity: children of {parent} sum to {child_sum} > "
                    f"value {self.value(parent)}"
                )
        return problems

    def to_jsonable(self) -> dict:
        return {
            "type": "cylinder_table",
            "depth_caps": {str(d): c for d, c in sorted(self.depth_caps.items())},
            "entries": [
                {
                    "word": list(w),
                    "numerator": v.numerator,
                    "denominator": v.denominator,
                }
                for w, v in sorted(self.entries.items())
            ],
        }


def additivity_defect(
    F: CylinderFunction, word: Iterable[int], K: int, spec: ShiftSpec | None = None
) -> Fraction:
    """Kolmogorov-consistency deficit F(C) - sum_{k<=K} F(Ck).

    Inadmissible children contribute 0 either way; passing the shift
    just skips their lookups.
    """
    w = tuple(word)
    total = F.value(w)
    children = Fraction(0)
    last = w[-1]
    for k in range(1, K + 1):
        if spec is not None and not spec.is_allowed(last, k):
            continue
        children += F.value(w + (k,))
    return total - children


# ---------------------------------------------------------------------------
# test functions: finite cylinder combinations, optionally with a
# constant first-symbol tail


@dataclass(frozen=True)
class TestFunction:
    """f = sum_i a_i 1_{C_i}, plus an optional constant value on every
    point whose first symbol exceeds a threshold."""

    __test__ = False  # domain object, not a pytest case

    atoms: tuple[tuple[Fraction, Word], ...]
    tail_threshold: int | None = None
    tail_value: Fraction = Fraction(0)

    @classmethod
    def from_atoms(
        cls,
        atoms: Iterable[tuple[Rational, Iterable[int]]],
        tail_threshold: int | None = None,
        tail_value: Rational = 0,
    ) -> "TestFunction":
        packed = tuple((Fraction(a), tuple(w)) for a, w in atoms)
        if any(not w for _, w in packed):
            raise ValueError("atom cylinders must be nonempty words")
        return cls(packed, tail_threshold, Fraction(tail_value))

    @property
    def max_depth(self) -> int:
        return max((len(w) for _, w in self.atoms), default=1)


def indicator(word: Iterable[int]) -> TestFunction:
    return TestFunction.from_atoms([(1, tuple(word))])


def integrate_test_function(f: TestFunction, nu: ConvexCombination) -> Fraction:
    """Exact integral of f against a finite combination of periodic measures."""
    if f.tail_threshold is not None and f.tail_value != 0:
        above = [s for s in nu.orbit_symbols if s > f.tail_threshold]
        if above:
            raise TailInteractionError(
                f"tail threshold {f.tail_threshold} is below orbit symbols {sorted(above)}"
            )
    return sum(
        (a * combo_of_cylinder(nu, w) for a, w in f.atoms), Fraction(0)
    )


@dataclass(frozen=True)
class C0Report:
    """Horizon-relative report on the vanishing-at-infinity conditions."""

    modulus_depth: int
    uniformly_continuous: bool
    sup_rows: tuple[tuple[int, Fraction], ...]
    sup_eventual: Fraction
    vanishes_at_infinity: bool
    var_rows: tuple[tuple[Word, tuple[tuple[int, Fraction], ...]], ...]
    var_eventual: tuple[tuple[Word, Fraction], ...]
    refines_to_zero: bool
    certified: bool
    horizon: int


def _branch_values(
    spec: ShiftSpec,
    prefix: Word,
    base: Fraction,
    atoms_below: list[tuple[Fraction, Word]],
    min_next: int | None,
    certified_box: list[bool],
) -> set[Fraction]:
    """Realizable values of f on points of [prefix], restricted (at the
    first step only) to next symbols >= min_next."""
    depth = len(prefix)
    here = base + sum(
        (a for a, w in atoms_below if w == prefix), Fraction(0)
    )
    deeper = [(a, w) for a, w in atoms_below if len(w) > depth]
    if not deeper and min_next is None:
        return {here}
    child_syms = sorted({w[depth] for _, w in deeper})
    floor = min_next if min_next is not None else 1
    relevant = [s for s in child_syms if s >= floor]
    values: set[Fraction] = set()
    # escape branch: a continuation with symbol >= floor avoiding every
    # deeper atom
    scan_cap = max(child_syms + [floor]) + 1
    row, _ = successors(spec, prefix[-1], scan_cap)
    escape = any(s >= floor and s not in relevant for s in row)
    if not escape:
        cont = row_continues_beyond(spec, prefix[-1], scan_cap)
        if cont:
            escape = True
        elif cont is None:
            certified_box[0] = False
    if escape:
        values.add(here)
    for s in relevant:
        if not spec.is_allowed(prefix[-1], s):
            continue
        sub = [(a, w) for a, w in deeper if w[depth] == s]
        values |= _branch_values(
            spec, prefix + (s,), here, sub, None, certified_box
        )
    return values


def c0_conditions_check(
    f: TestFunction, spec: ShiftSpec, horizon: int
) -> C0Report:
    """Check the three vanishing-at-infinity conditions up to a horizon.

    Uniform continuity is structural: the function is constant on
    cylinders of the maximal atom depth.  The first-symbol sup rows and
    the tail-variation rows are exact; their eventual values are exact
    because beyond every atom symbol and tail threshold the function is
    literally constant.
    """
    certified_box = [True]
    depth = f.max_depth

    sup_rows = []
    for n in range(1, horizon + 1):
        row, truncated = successors(spec, n, max(n, spec.symbol_cap_default))
        if not row and not truncated:
            sup_rows.append((n, Fraction(0)))  # [n] is empty
            continue
        base = f.tail_value if (f.tail_threshold is not None and n > f.tail_threshold) else Fraction(0)
        atoms_n = [(a, w) for a, w in f.atoms if w[0] == n]
        vals = _branch_values(spec, (n,), base, atoms_n, None, certified_box)
        sup_rows.append((n, max((abs(v) for v in vals), default=Fraction(0))))
    sup_eventual = abs(f.tail_value) if f.tail_threshold is not None else Fraction(0)

    var_rows = []
    var_eventual = []
    for _, cyl in f.atoms:
        rows = []
        fixed = sum(
            (a for a, w in f.atoms if w == cyl[: len(w)]), Fraction(0)
        )
        if f.tail_threshold is not None and cyl[0] > f.tail_threshold:
            fixed += f.tail_value
        extensions = [
            (a, w) for a, w in f.atoms if len(w) > len(cyl) and w[: len(cyl)] == cyl
        ]
        for n in range(1, horizon + 1):
            row, _ = successors(spec, cyl[-1], max(n, spec.symbol_cap_default))
            populated = any(s >= n for s in row)
            if not populated:
                cont = row_continues_beyond(spec, cyl[-1], max(n, spec.symbol_cap_default))
                populated = bool(cont)
                if cont is None:
                    certified_box[0] = False
            if not populated:
                rows.append((n, Fraction(0)))  # C(>= n) is empty
                continue
            vals = _branch_values(spec, cyl, fixed, extensions, n, certified_box)
            spread = max(vals) - min(vals) if vals else Fraction(0)
            rows.append((n, spread))
        var_rows.append((cyl, tuple(rows)))
        var_eventual.append((cyl, Fraction(0)))

    return C0Report(
        modulus_depth=depth,
        uniformly_continuous=True,
        sup_rows=tuple(sup_rows),
        sup_eventual=sup_eventual,
        vanishes_at_infinity=sup_eventual == 0,
        var_rows=tuple(var_rows),
        var_eventual=tuple(var_eventual),
        refines_to_zero=True,
        certified=certified_box[0],
        horizon=horizon,
    )


# ---------------------------------------------------------------------------
# serialization helpers


def combo_to_jsonable(nu: ConvexCombination) -> dict:
    return {
        "type": "convex_combination",
        "terms": [
            {"weight": str(w), "orbit": list(mu.orbit.cycle)} for w, mu in nu.terms
        ],
    }


def parse_combo_text(spec: ShiftSpec, text: str) -> ConvexCombination:
    """Parse 'w1:(a,b,...);w2:(...)' into a combination of orbit measures."""
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        weight_s, _, orbit_s = chunk.partition(":")
        orbit = tuple(
            int(t) for t in orbit_s.strip().strip("()").replace(",", " ").split()
        )
        pairs.append((Fraction(weight_s.strip()), measure_from_cycle(spec, orbit)))
    return convex_combination(pairs)
