"""Suspension flows over countable Markov shifts, via the Kac correspondence.

Flow phase space is never represented: a flow-invariant sub-probability
is carried as (base measure, roof integral, mass), which is all the
cylinder-level theory needs.  Roof functions are depth-k locally
constant models with a first-symbol tail rule; their Birkhoff sums over
periodic orbits are exact `LogLinear` values, and flow cylinder masses
come out as directed rational brackets.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .asymptotics import (
    EscapeSearchError,
    MeasureSequence,
    NotEnoughLoopsError,
    cylinder_limit,
    escape_sequence,
    first_return_loops,
    sequence_from_measures,
)
from .exactval import Interval, LogLinear
from .measures import (
    ConvexCombination,
    PeriodicMeasure,
    PeriodicOrbit,
    combo_of_cylinder,
    convex_combination,
    measure_from_cycle,
    metric_d,
)
from .shifts import SearchCaps, ShiftSpec, Word, connect, f_property_probe

__all__ = [
    "TailRule",
    "RoofFunction",
    "FlowMeasure",
    "AmbiguousWordError",
    "RoofMismatchError",
    "FlowEscapeError",
    "ApproximationError",
    "tail_log1p",
    "tail_constant",
    "log1p_roof",
    "constant_roof",
    "parse_roof_arg",
    "parse_roof_text",
    "roof_eval",
    "class_R_check",
    "birkhoff_sum",
    "roof_integral",
    "kac_lift",
    "kac_project",
    "flow_cylinder_mass",
    "flow_metric_rho",
    "flow_limit_analyze",
    "flow_escape_sequence",
    "approximate_by_single_orbit",
]


class AmbiguousWordError(ValueError):
    """A word is shorter than the roof depth and its value is not forced."""


class RoofMismatchError(ValueError):
    """Two flow measures do not share the same roof and cut height."""


class FlowEscapeError(RuntimeError):
    """Neither escape construction applies under the given caps."""


class ApproximationError(RuntimeError):
    """The single-orbit approximation could not reach the tolerance."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


def _as_value(x) -> LogLinear:
    if isinstance(x, LogLinear):
        return x
    if isinstance(x, Rational):
        return LogLinear.from_rational(x)
    raise TypeError(f"cannot use {type(x).__name__} as an exact roof value")


@dataclass(frozen=True)
class TailRule:
    """Named first-symbol rule for words outside the roof table."""

    name: str
    fn: Callable[[int], LogLinear]

    def __call__(self, symbol: int) -> LogLinear:
        return self.fn(symbol)


def tail_log1p() -> TailRule:
    return TailRule("log1p", lambda s: LogLinear.log_of(1 + s))


def tail_constant(q: Rational) -> TailRule:
    q = Fraction(q)
    if q <= 0:
        raise ValueError("roof values must be positive")
    return TailRule(f"const:{q}", lambda s: LogLinear.from_rational(q))


@dataclass(frozen=True, eq=False)
class RoofFunction:
    """Depth-k locally constant roof with a first-symbol tail rule.

    `floor` is the claimed positive lower bound c; it is supplied, not
    inferred, and `class_R_check` validates it on everything it can see.
    """

    name: str
    depth: int
    table: Mapping[Word, LogLinear]
    tail: TailRule | None
    floor: LogLinear
    var2_bound: Fraction

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        object.__setattr__(
            self,
            "table",
            {tuple(w): _as_value(v) for w, v in dict(self.table).items()},
        )
        for w in self.table:
            if len(w) != self.depth:
                raise ValueError(f"table word {w} does not have depth {self.depth}")
        if _as_value(self.floor).sign() <= 0:
            raise ValueError("the lower bound c must be positive")


def log1p_roof() -> RoofFunction:
    """The roof log(1 + first symbol); its infimum log 2 is the cut height."""
    return RoofFunction(
        name="log1p",
        depth=1,
        table={},
        tail=tail_log1p(),
        floor=LogLinear.log_of(2),
        var2_bound=Fraction(0),
    )


def constant_roof(q: Rational) -> RoofFunction:
    q = Fraction(q)
    return RoofFunction(
        name=f"const:{q}",
        depth=1,
        table={},
        tail=tail_constant(q),
        floor=LogLinear.from_rational(q),
        var2_bound=Fraction(0),
    )


def parse_roof_arg(text: str) -> RoofFunction:
    """CLI roof reference: 'log1p' or 'const:<rational>'."""
    name, _, arg = text.partition(":")
    if name == "log1p":
        return log1p_roof()
    if name == "const":
        return constant_roof(Fraction(arg))
    raise ValueError(f"unknown roof: {text!r}")


def _parse_value(text: str) -> LogLinear:
    text = text.strip()
    if text.startswith("log:"):
        return LogLinear.log_of(Fraction(text[4:]))
    return LogLinear.from_rational(Fraction(text))


def parse_roof_text(text: str, name: str = "user-roof") -> RoofFunction:
    """Roof file format::

        depth 2
        table 1 2 : 3/2
        tail log1p            # or: tail const 3/2, tail none
        c log:2               # rational or log:<rational>
        var2 0
    """
    depth = 1
    table: dict[Word, LogLinear] = {}
    tail: TailRule | None = None
    floor: LogLinear | None = None
    var2 = Fraction(0)
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "depth":
            depth = int(rest)
        elif key == "table":
            word_s, _, value_s = rest.partition(":")
            word = tuple(int(t) for t in word_s.split())
            table[word] = _parse_value(value_s)
        elif key == "tail":
            parts = rest.split()
            if parts[0] == "log1p":
                tail = tail_log1p()
            elif parts[0] == "const":
                tail = tail_constant(Fraction(parts[1]))
            elif parts[0] == "none":
                tail = None
            else:
                raise ValueError(f"unknown tail rule {rest!r}")
        elif key == "c":
            floor = _parse_value(rest)
        elif key == "var2":
            var2 = Fraction(rest)
        else:
            raise ValueError(f"unknown roof line {raw!r}")
    if floor is None:
        raise ValueError("roof file must declare its lower bound c")
    return RoofFunction(name, depth, table, tail, floor, var2)


def roof_eval(roof: RoofFunction, word: Iterable[int]) -> LogLinear:
    """Value on the cylinder of `word`; exact by local constancy.

    Words shorter than the roof depth are accepted only when every
    tabulated extension agrees (trivially true when none is tabulated
    and the tail rule applies).
    """
    w = tuple(word)
    if not w:
        raise ValueError("cannot evaluate on the empty word")
    if len(w) >= roof.depth:
        key = w[: roof.depth]
        if key in roof.table:
            return roof.table[key]
        if roof.tail is None:
            raise AmbiguousWordError(f"{key} is not tabulated and there is no tail rule")
        return roof.tail(w[0])
    values = [v for key, v in roof.table.items() if key[: len(w)] == w]
    if not values:
        if roof.tail is None:
            raise AmbiguousWordError(f"{w} has no tabulated extension and no tail rule")
        return roof.tail(w[0])
    if roof.tail is None and all(v == values[0] for v in values[1:]):
        return values[0]
    raise AmbiguousWordError(
        f"word {w} is shorter than the roof depth {roof.depth} and its "
        f"extensions do not force a single value"
    )


@dataclass(frozen=True)
class ClassRReport:
    floor_holds: bool
    floor_witnesses: tuple[tuple[Word | int, str], ...]  # violations, if any
    m_rows: tuple[tuple[int, float], ...]  # k -> inf over tested first symbols >= k
    m_nondecreasing: bool
    tail_verdict: str
    var2_observed: Fraction | None
    var2_ok: bool
    horizon: int

    @property
    def passed(self) -> bool:
        return self.floor_holds and self.tail_verdict in (
            "increasing-at-horizon",
            "vacuous-finite-alphabet",
        )

    def to_jsonable(self) -> dict:
        return {
            "floor_holds": self.floor_holds,
            "floor_violations": [str(w) for w, _ in self.floor_witnesses],
            "m_rows": [{"k": k, "display": v} for k, v in self.m_rows],
            "m_nondecreasing": self.m_nondecreasing,
            "tail_verdict": self.tail_verdict,
            "var2_observed": None if self.var2_observed is None else str(self.var2_observed),
            "var2_ok": self.var2_ok,
            "horizon": self.horizon,
            "passed": self.passed,
        }


def class_R_check(
    roof: RoofFunction, horizon: int, spec: ShiftSpec | None = None
) -> ClassRReport:
    """Semi-decidable membership report for the admissible roof class.

    Validates the floor on all tabulated words and on tail symbols up
    to the horizon; computes m(k) = inf of tested values with first
    symbol >= k and judges its growth.  Uniform continuity is structural
    (depth-k local constancy), so only the floor and the tail divergence
    need witnesses.
    """
    violations = []
    for w, v in sorted(roof.table.items()):
        if v < roof.floor:
            violations.append((w, "table value below c"))
    tail_vals: dict[int, LogLinear] = {}
    if roof.tail is not None:
        for s in range(1, horizon + 1):
            tail_vals[s] = roof.tail(s)
            if tail_vals[s] < roof.floor:
                violations.append((s, "tail value below c"))

    m_rows = []
    prev: LogLinear | None = None
    nondecreasing = True
    m_first: LogLinear | None = None
    m_last: LogLinear | None = None
    for k in range(1, horizon + 1):
        pool = [v for w, v in roof.table.items() if w[0] >= k]
        pool.extend(v for s, v in tail_vals.items() if s >= k)
        if not pool:
            break
        m_k = pool[0]
        for v in pool[1:]:
            if v < m_k:
                m_k = v
        m_rows.append((k, float(m_k)))
        if prev is not None and m_k < prev:
            nondecreasing = False
        if m_first is None:
            m_first = m_k
        m_last = m_k
        prev = m_k

    finite_alphabet = spec is not None and spec.alphabet_size is not None
    if finite_alphabet:
        tail_verdict = "vacuous-finite-alphabet"
    elif m_first is None or m_last is None:
        tail_verdict = "inconclusive"
    elif m_last == m_first:
        tail_verdict = "fails-constant-at-horizon"
    elif nondecreasing:
        tail_verdict = "increasing-at-horizon"
    else:
        tail_verdict = "inconclusive"

    var2_observed: Fraction | None = None
    var2_ok = True
    if roof.depth <= 2:
        var2_observed = Fraction(0)  # depth <= 2 roofs are constant on 2-cylinders
    else:
        by_head: dict[Word, list[LogLinear]] = {}
        for w, v in roof.table.items():
            by_head.setdefault(w[:2], []).append(v)
        worst = LogLinear.zero()
        for vals in by_head.values():
            for x in vals:
                for y in vals:
                    d = x - y
                    if d > worst:
                        worst = d
        var2_ok = worst <= LogLinear.from_rational(roof.var2_bound)
        var2_observed = None if not worst.is_rational else worst.as_fraction()

    return ClassRReport(
        floor_holds=not violations,
        floor_witnesses=tuple(violations),
        m_rows=tuple(m_rows),
        m_nondecreasing=nondecreasing,
        tail_verdict=tail_verdict,
        var2_observed=var2_observed,
        var2_ok=var2_ok,
        horizon=horizon,
    )


def birkhoff_sum(roof: RoofFunction, orbit: PeriodicOrbit) -> LogLinear:
    """Sum of the roof along one period, read cyclically; exact."""
    cycle = orbit.cycle
    T = len(cycle)
    k = roof.depth
    ext = cycle * ((k - 1) // T + 2)
    windows = Counter(tuple(ext[j : j + k]) for j in range(T))
    total = LogLinear.zero()
    for w, count in windows.items():
        total = total + count * roof_eval(roof, w)
    return total


def roof_integral(roof: RoofFunction, nu: ConvexCombination) -> LogLinear:
    """Integral of the roof against a probability combination; exact."""
    if nu.mass != 1:
        raise ValueError(f"roof integrals are taken against probabilities; mass={nu.mass}")
    total = LogLinear.zero()
    for w, mu in nu.terms:
        total = total + (w / Fraction(mu.period)) * birkhoff_sum(roof, mu.orbit)
    return total


# ---------------------------------------------------------------------------
# the Kac correspondence and flow measures


@dataclass(frozen=True, eq=False)
class FlowMeasure:
    """lam times the flow probability with the given base; lam = 0 is the
    distinguished zero measure (no base, no integral)."""

    roof: RoofFunction
    base: ConvexCombination | None
    integral: LogLinear | None
    lam: Fraction

    @classmethod
    def zero(cls, roof: RoofFunction) -> "FlowMeasure":
        return cls(roof, None, None, Fraction(0))

    @property
    def is_zero(self) -> bool:
        return self.lam == 0


def kac_lift(mu: ConvexCombination, roof: RoofFunction) -> FlowMeasure:
    if mu.mass == 0:
        raise ValueError("the zero measure does not lift; use FlowMeasure.zero")
    if mu.mass != 1:
        raise ValueError("only probability bases lift to flow probabilities")
    return FlowMeasure(roof, mu, roof_integral(roof, mu), Fraction(1))


def kac_project(nu: FlowMeasure) -> tuple[ConvexCombination | None, Fraction]:
    return nu.base, nu.lam


def flow_cylinder_mass(
    nu: FlowMeasure, word: Iterable[int], prec: int = 64
) -> Interval:
    """Bracket for the measure of (cylinder x [0, c]): lam*c*base(C)/I."""
    if nu.is_zero:
        return Interval.point(0)
    w = tuple(word)
    m = combo_of_cylinder(nu.base, w) * nu.lam
    if m == 0:
        return Interval.point(0)
    c, integral = nu.roof.floor, nu.integral
    if c.is_rational and integral.is_rational:
        exact = m * c.as_fraction() / integral.as_fraction()
        return Interval.point(exact)
    c_iv = c.eval_interval(prec)
    i_iv = integral.eval_interval(prec)
    return c_iv.scale(m).div_pos(i_iv)


def _same_roof(r1: RoofFunction, r2: RoofFunction) -> bool:
    return r1 is r2 or (r1.name == r2.name and r1.floor == r2.floor)


def flow_metric_rho(
    nu1: FlowMeasure,
    nu2: FlowMeasure,
    N: int,
    spec: ShiftSpec,
    prec: int = 64,
) -> tuple[Fraction, Fraction]:
    """Bracket for the flow metric: partial sum over the first N canonical
    cylinders plus the 2^-N tail allowance."""
    if not _same_roof(nu1.roof, nu2.roof):
        raise RoofMismatchError("flow distances require a common roof and cut height")
    from .measures import canonical_cylinder_iter

    tail = Fraction(1, 2**N)
    if nu1 is nu2 or (
        nu1.base is nu2.base and nu1.lam == nu2.lam and nu1.base is not None
    ) or (nu1.is_zero and nu2.is_zero):
        return Fraction(0), tail
    lower = Fraction(0)
    upper = Fraction(0)
    it = canonical_cylinder_iter(spec)
    for n in range(1, N + 1):
        word = next(it)
        diff = (
            flow_cylinder_mass(nu1, word, prec)
            - flow_cylinder_mass(nu2, word, prec)
        ).abs()
        scale = Fraction(1, 2**n)
        lower += diff.lo * scale
        upper += diff.hi * scale
    return lower, upper + tail


# ---------------------------------------------------------------------------
# flow-level limit analysis


@dataclass(frozen=True)
class FlowLimitReport:
    verdict: str  # "zero flow limit" | "flow limit with mass lambda" | "undetermined"
    integral_trace: tuple[LogLinear, ...]
    lam: Interval | None
    limit_integral: LogLinear | None
    base_report: object
    base_mass_is_one: bool | None
    params: dict

    def to_jsonable(self) -> dict:
        return {
            "verdict": self.verdict,
            "integral_trace_display": [float(v) for v in self.integral_trace],
            "lambda": None
            if self.lam is None
            else {"lo": str(self.lam.lo), "hi": str(self.lam.hi), "display": self.lam.midpoint_float()},
            "limit_integral_display": None
            if self.limit_integral is None
            else float(self.limit_integral),
            "base_mass_is_one": self.base_mass_is_one,
            "params": self.params,
        }


def _limit_table_integral(roof: RoofFunction, table) -> LogLinear:
    depth = max(table.depth_caps, default=0)
    if depth < roof.depth:
        raise ValueError(
            f"limit table depth {depth} is shallower than the roof depth {roof.depth}"
        )
    total = LogLinear.zero()
    for w, v in table.entries.items():
        if len(w) == roof.depth and v != 0:
            total = total + v * roof_eval(roof, w)
    return total


def flow_limit_analyze(
    seq: MeasureSequence,
    roof: RoofFunction,
    n_max: int,
    depth: int,
    symbol_cap: int,
    tol: Rational,
    prec: int = 64,
) -> FlowLimitReport:
    """Classify the flow-level limit of lifted probability terms.

    Integrals that keep growing through the trailing window force the
    zero verdict; a bounded, settling integral together with a base
    limit of full mass yields the mass-lambda verdict with
    lambda = (integral of the base limit) / (limit of the integrals).
    """
    tol = Fraction(tol)
    integrals = []
    for n in range(1, n_max + 1):
        combo = seq.term(n)
        integrals.append(roof_integral(roof, combo))
    window = integrals[max(0, n_max - max(2, n_max // 4)) :]
    params = {
        "n_max": n_max,
        "depth": depth,
        "symbol_cap": symbol_cap,
        "tol": str(tol),
        "roof": roof.name,
        "description": seq.description,
    }

    increasing = all(b > a for a, b in zip(window, window[1:]))
    doubled = integrals[-1] >= 2 * integrals[0]
    if increasing and doubled:
        return FlowLimitReport(
            verdict="zero flow limit",
            integral_trace=tuple(integrals),
            lam=None,
            limit_integral=None,
            base_report=None,
            base_mass_is_one=None,
            params=params,
        )

    w_min, w_max = window[0], window[0]
    for v in window[1:]:
        if v < w_min:
            w_min = v
        if v > w_max:
            w_max = v
    osc = w_max - w_min
    rel_cap = tol * w_max  # oscillation small relative to the window scale
    if not (osc <= rel_cap):
        return FlowLimitReport(
            verdict="undetermined",
            integral_trace=tuple(integrals),
            lam=None,
            limit_integral=None,
            base_report=None,
            base_mass_is_one=None,
            params=params,
        )

    base_report = cylinder_limit(seq, depth, symbol_cap, n_max, tol)
    mass_lo = base_report.mass_bracket[0]
    base_is_prob = mass_lo >= 1 - tol
    if not base_is_prob:
        return FlowLimitReport(
            verdict="undetermined",
            integral_trace=tuple(integrals),
            lam=None,
            limit_integral=None,
            base_report=base_report,
            base_mass_is_one=False,
            params=params,
        )
    limit_integral = _limit_table_integral(roof, base_report.limit_table)
    li = limit_integral.eval_interval(prec)
    lim_lo = w_min.eval_interval(prec)
    lim_hi = w_max.eval_interval(prec)
    lam = Interval(li.lo, li.hi).div_pos(Interval(lim_lo.lo, lim_hi.hi))
    return FlowLimitReport(
        verdict="flow limit with mass lambda",
        integral_trace=tuple(integrals),
        lam=lam,
        limit_integral=limit_integral,
        base_report=base_report,
        base_mass_is_one=mass_lo == 1,
        params=params,
    )


# ---------------------------------------------------------------------------
# flow escape sequences


@dataclass(frozen=True)
class FlowEscapeResult:
    sequence: MeasureSequence
    construction: str  # "escape-words" | "first-return-loops"
    integral_trace: tuple[LogLinear, ...]
    integral_increasing: bool
    certificates: tuple

    def to_jsonable(self) -> dict:
        return {
            "construction": self.construction,
            "integral_trace_display": [float(v) for v in self.integral_trace],
            "integral_increasing": self.integral_increasing,
            "terms": len(self.integral_trace),
        }


def flow_escape_sequence(
    spec: ShiftSpec,
    roof: RoofFunction,
    caps: SearchCaps | None = None,
    terms: int = 10,
    probe_symbols: int = 3,
    probe_len: int = 4,
    probe_symbol_cap: int = 10_000,
    base_target_len: int = 60,
) -> FlowEscapeResult:
    """Periodic flow measures whose roof integrals provably grow.

    First tries first-return loop families with unboundedly many loops
    (their symbols grow, so a diverging tail rule drives the integral);
    otherwise builds escape words at growing cutoffs and certifies the
    integral trace directly.  Fails loudly when neither construction
    works under the caps, e.g. on finite alphabets.
    """
    caps = caps or SearchCaps()
    # evidence of unboundedly many fixed-length loops somewhere low: the
    # family must overshoot the request (it keeps going) and the sampled
    # integrals must strictly increase, else this branch proves nothing.
    # Loop probes scan rows eagerly, so they get their own modest cap.
    loop_cap = min(probe_symbol_cap, caps.symbol_cap)
    for i in range(1, probe_symbols + 1):
        for q in range(1, probe_len + 1):
            probe = f_property_probe(
                spec, i, q + 1, cap=terms * 4, symbol_cap=loop_cap
            )
            if probe.count < terms:
                continue
            try:
                loops = first_return_loops(spec, i, q, 2 * terms, loop_cap)[:terms]
            except NotEnoughLoopsError:
                continue
            measures = [
                convex_combination([(1, measure_from_cycle(spec, w))])
                for w in loops
            ]
            trace = tuple(roof_integral(roof, m) for m in measures)
            if not all(b > a for a, b in zip(trace, trace[1:])):
                continue
            return FlowEscapeResult(
                sequence=sequence_from_measures(
                    measures, f"first-return loops at {i}, period {q} on {spec.name}"
                ),
                construction="first-return-loops",
                integral_trace=trace,
                integral_increasing=True,
                certificates=tuple(loops),
            )
    # otherwise: escape words, one per growing cutoff
    measures = []
    certs = []
    try:
        for k in range(1, terms + 1):
            res = escape_sequence(spec, k, base_target_len * k, caps)
            measures.append(convex_combination([(1, res.measure)]))
            certs.append(res)
    except EscapeSearchError as exc:
        raise FlowEscapeError(
            f"no diverging construction on {spec.name}: loop probes found no "
            f"unbounded family and the escape-word search failed ({exc})"
        ) from exc
    trace = tuple(roof_integral(roof, m) for m in measures)
    increasing = all(b > a for a, b in zip(trace, trace[1:]))
    return FlowEscapeResult(
        sequence=sequence_from_measures(measures, f"escape words on {spec.name}"),
        construction="escape-words",
        integral_trace=trace,
        integral_increasing=increasing,
        certificates=tuple(certs),
    )


# ---------------------------------------------------------------------------
# single-orbit approximation of rational convex combinations


@dataclass(frozen=True)
class ApproxResult:
    measure: PeriodicMeasure
    repetitions: int  # the realized block budget R
    metric_bracket: tuple[Fraction, Fraction]
    metric_depth: int
    integral_gap: LogLinear  # |integral(word orbit) - integral(target)|
    target_integral: LogLinear
    word: Word

    def to_jsonable(self) -> dict:
        return {
            "cycle": list(self.measure.orbit.cycle),
            "period": self.measure.period,
            "repetitions": self.repetitions,
            "metric_lower": str(self.metric_bracket[0]),
            "metric_upper": str(self.metric_bracket[1]),
            "metric_depth": self.metric_depth,
            "integral_gap_display": float(self.integral_gap),
            "target_integral_display": float(self.target_integral),
        }


def _block_word(
    spec: ShiftSpec, cycles: list[Word], reps: list[int], caps: SearchCaps
) -> Word:
    """Concatenate cycle blocks with connecting words, cyclically."""
    word: list[int] = []

    def _bridge(a: int, b: int) -> None:
        if spec.is_allowed(a, b):
            return
        path = connect(
            spec, a, b, caps.connect_max_len, caps.symbol_cap,
            min_len=2 if a == b else 1,
        )
        if path is None or len(path) < 3:
            raise ApproximationError(f"no connector from {a} to {b} under the caps")
        word.extend(path[1:-1])

    for cyc, r in zip(cycles, reps):
        if word:
            _bridge(word[-1], cyc[0])
        word.extend(cyc * r)
    _bridge(word[-1], word[0])
    return tuple(word)


def approximate_by_single_orbit(
    target: ConvexCombination,
    roof: RoofFunction,
    eps: Rational,
    spec: ShiftSpec,
    caps: SearchCaps | None = None,
    max_doublings: int = 40,
) -> ApproxResult:
    """One periodic orbit metric- and integral-close to a rational convex
    combination of periodic measures.

    Each component cycle is repeated proportionally to weight/period and
    the blocks are joined by connecting words; the block budget doubles
    until both certificates hold: the metric upper bound is at most eps
    and the roof-integral gap is at most eps.  Certificates are sound by
    recomputation: they are evaluated on the returned orbit itself.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    if target.mass != 1:
        raise ValueError("the target must be a probability combination")
    caps = caps or SearchCaps()
    N = 1
    while Fraction(1, 2**N) > eps / 2:
        N += 1

    cycles = [mu.orbit.cycle for _, mu in target.terms]
    weights = [w for w, _ in target.terms]
    target_integral = roof_integral(roof, target)

    if len(cycles) == 1:
        measure = PeriodicMeasure(target.terms[0][1].orbit)
        lo, hi = metric_d(convex_combination([(1, measure)]), target, N, spec)
        return ApproxResult(
            measure=measure,
            repetitions=measure.period,
            metric_bracket=(lo, hi),
            metric_depth=N,
            integral_gap=LogLinear.zero(),
            target_integral=target_integral,
            word=measure.orbit.cycle,
        )

    # smallest R making every weight*R/period a positive integer
    R0 = 1
    for w, cyc in zip(weights, cycles):
        share = w / len(cyc)
        R0 = R0 * share.denominator // math.gcd(R0, share.denominator)

    best: ApproxResult | None = None
    R = R0
    for _ in range(max_doublings):
        reps = [int(w * R / len(cyc)) for w, cyc in zip(weights, cycles)]
        word = _block_word(spec, cycles, reps, caps)
        measure = measure_from_cycle(spec, word)
        approx = convex_combination([(1, measure)])
        lo, hi = metric_d(approx, target, N, spec)
        gap = roof_integral(roof, approx) - target_integral
        if gap.sign() < 0:
            gap = -gap
        result = ApproxResult(
            measure=measure,
            repetitions=R,
            metric_bracket=(lo, hi),
            metric_depth=N,
            integral_gap=gap,
            target_integral=target_integral,
            word=word,
        )
        if best is None or (hi, float(gap)) < (best.metric_bracket[1], float(best.integral_gap)):
            best = result
        if hi <= eps and gap <= LogLinear.from_rational(eps):
            return result
        R *= 2
    raise ApproximationError(
        f"tolerance {eps} not reached within {max_doublings} doublings "
        f"(best metric upper bound {best.metric_bracket[1]})",
        best=best,
    )
