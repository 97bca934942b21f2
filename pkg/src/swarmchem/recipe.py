"""Recipes: the genome of a heterogeneous swarm.

A recipe is an ordered list of (particle count, kinetic parameter tuple)
pairs. This module owns the canonical text grammar (one entry per line)::

    <count> * (<r_perception>, <v_normal>, <v_max>, <w_cohesion>,
               <w_alignment>, <w_separation>, <p_random_steer>, <w_pacekeeping>)

with ``#`` comments and blank lines ignored, plus the variation operators
(mutate, mix) used by interactive and autonomous evolution.

Canonical form: parameter values quantized to 6 significant digits, entries
with identical parameter tuples merged (counts summed), entries sorted
lexicographically by parameter tuple. Equality and hashing are defined on
the canonical form, which makes parse/serialize an exact round trip.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .rng import RandomSource

PARAM_FIELDS = (
    "r_perception",
    "v_normal",
    "v_max",
    "w_cohesion",
    "w_alignment",
    "w_separation",
    "p_random_steer",
    "w_pacekeeping",
)

N_PARAMS = len(PARAM_FIELDS)


class RecipeError(ValueError):
    """Base class for recipe parsing/validation failures."""


class RecipeSyntaxError(RecipeError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class RecipeRangeError(RecipeError):
    def __init__(self, message: str, field_name: str, line: int | None = None):
        loc = f"line {line}: " if line is not None else ""
        super().__init__(f"{loc}{message}")
        self.field = field_name
        self.line = line


class RecipeEmptyError(RecipeError):
    pass


def quantize(value: float) -> float:
    """Round to 6 significant digits (the serialization precision)."""
    if value == 0.0:
        return 0.0  # normalize -0.0 so equal recipes serialize identically
    return float(f"{value:.6g}")


@dataclass(frozen=True)
class ParamRanges:
    """Legal [lo, hi] range per kinetic parameter."""

    r_perception: tuple[float, float] = (0.0, 300.0)
    v_normal: tuple[float, float] = (0.0, 20.0)
    v_max: tuple[float, float] = (0.0, 40.0)
    w_cohesion: tuple[float, float] = (0.0, 1.0)
    w_alignment: tuple[float, float] = (0.0, 1.0)
    w_separation: tuple[float, float] = (0.0, 100.0)
    p_random_steer: tuple[float, float] = (0.0, 0.5)
    w_pacekeeping: tuple[float, float] = (0.0, 1.0)

    def bounds(self, name: str) -> tuple[float, float]:
        return getattr(self, name)


DEFAULT_RANGES = ParamRanges()


@dataclass(frozen=True)
class KineticParams:
    """One particle type's behavioral parameter vector.

    Construction clamps every field into the default legal range, enforces
    v_normal <= v_max, and quantizes to 6 significant digits.
    """

    r_perception: float
    v_normal: float
    v_max: float
    w_cohesion: float
    w_alignment: float
    w_separation: float
    p_random_steer: float
    w_pacekeeping: float

    def __post_init__(self):
        for name in PARAM_FIELDS:
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise RecipeRangeError(f"{name} is not finite", name)
            lo, hi = DEFAULT_RANGES.bounds(name)
            object.__setattr__(self, name, quantize(min(max(v, lo), hi)))
        if self.v_normal > self.v_max:
            object.__setattr__(self, "v_normal", self.v_max)

    @classmethod
    def clamped(cls, values, ranges: ParamRanges = DEFAULT_RANGES) -> "KineticParams":
        vals = []
        for name, v in zip(PARAM_FIELDS, values):
            lo, hi = ranges.bounds(name)
            vals.append(min(max(float(v), lo), hi))
        return cls(*vals)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in PARAM_FIELDS)


@dataclass(frozen=True)
class Recipe:
    """Ordered list of (count, params) pairs; immutable and canonicalized."""

    entries: tuple[tuple[int, KineticParams], ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        if not entries:
            raise RecipeEmptyError("empty recipe")
        merged: dict[tuple[float, ...], int] = {}
        params_by_key: dict[tuple[float, ...], KineticParams] = {}
        for count, params in entries:
            if int(count) != count or count < 1:
                raise RecipeRangeError(f"count must be a positive integer, got {count}", "count")
            key = params.as_tuple()
            merged[key] = merged.get(key, 0) + int(count)
            params_by_key[key] = params
        canon = tuple((merged[k], params_by_key[k]) for k in sorted(merged))
        object.__setattr__(self, "entries", canon)

    @property
    def total_count(self) -> int:
        return sum(c for c, _ in self.entries)


@dataclass(frozen=True)
class MutationConfig:
    """Rates and scales for recipe mutation."""

    p_point: float = 0.1
    point_sigma_rel: float = 0.1
    p_duplicate_entry: float = 0.05
    p_delete_entry: float = 0.05
    p_resize_count: float = 0.1
    count_resize_rel: float = 0.3

    def __post_init__(self):
        for name in ("p_point", "p_duplicate_entry", "p_delete_entry", "p_resize_count"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        for name in ("point_sigma_rel", "count_resize_rel"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def zero(cls) -> "MutationConfig":
        return cls(p_point=0.0, p_duplicate_entry=0.0, p_delete_entry=0.0, p_resize_count=0.0)

    @property
    def is_zero(self) -> bool:
        return (
            self.p_point == 0.0
            and self.p_duplicate_entry == 0.0
            and self.p_delete_entry == 0.0
            and self.p_resize_count == 0.0
        )


_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_INT_RE = re.compile(r"\d+")


class _LineScanner:
    def __init__(self, text: str, line_no: int):
        self.text = text
        self.line = line_no
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def expect(self, char: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != char:
            raise RecipeSyntaxError(f"expected '{char}'", self.line, self.pos + 1)
        self.pos += 1

    def read_int(self, what: str) -> int:
        self.skip_ws()
        m = _INT_RE.match(self.text, self.pos)
        if not m:
            raise RecipeSyntaxError(f"expected {what}", self.line, self.pos + 1)
        self.pos = m.end()
        return int(m.group())

    def read_number(self, what: str) -> float:
        self.skip_ws()
        m = _NUMBER_RE.match(self.text, self.pos)
        if not m:
            raise RecipeSyntaxError(f"expected {what}", self.line, self.pos + 1)
        self.pos = m.end()
        return float(m.group())

    def expect_end(self):
        self.skip_ws()
        if self.pos < len(self.text):
            raise RecipeSyntaxError("unexpected trailing characters", self.line, self.pos + 1)


def _validate_params(values: list[float], ranges: ParamRanges, line: int) -> KineticParams:
    for name, v in zip(PARAM_FIELDS, values):
        lo, hi = ranges.bounds(name)
        if not lo <= v <= hi:
            raise RecipeRangeError(
                f"{name} = {v} outside legal range [{lo}, {hi}]", name, line
            )
    if values[1] > values[2]:
        raise RecipeRangeError(
            f"v_normal = {values[1]} exceeds v_max = {values[2]}", "v_normal", line
        )
    return KineticParams(*values)


def parse_recipe(text: str, ranges: ParamRanges = DEFAULT_RANGES) -> Recipe:
    """Parse recipe text into a canonical Recipe.

    Raises RecipeSyntaxError (with line/column), RecipeRangeError (naming the
    offending field), or RecipeEmptyError.
    """
    entries: list[tuple[int, KineticParams]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        sc = _LineScanner(line, line_no)
        count = sc.read_int("particle count")
        sc.expect("*")
        sc.expect("(")
        values = [sc.read_number(f"value for {PARAM_FIELDS[0]}")]
        for name in PARAM_FIELDS[1:]:
            sc.expect(",")
            values.append(sc.read_number(f"value for {name}"))
        sc.expect(")")
        sc.expect_end()
        if count < 1:
            raise RecipeRangeError(f"count must be >= 1, got {count}", "count", line_no)
        entries.append((count, _validate_params(values, ranges, line_no)))
    if not entries:
        raise RecipeEmptyError("empty recipe")
    return Recipe(tuple(entries))


def serialize_recipe(r: Recipe) -> str:
    """Canonical text: one entry per line, 6 significant digits, deterministic."""
    lines = []
    for count, p in r.entries:
        body = ", ".join(f"{v:.6g}" for v in p.as_tuple())
        lines.append(f"{count} * ({body})")
    return "\n".join(lines) + "\n"


def mutate_recipe(
    r: Recipe,
    cfg: MutationConfig,
    rng: RandomSource,
    ranges: ParamRanges = DEFAULT_RANGES,
) -> Recipe:
    """Apply point/duplicate/resize/delete mutations.

    Deterministic given the rng state; an all-zero config returns the input
    recipe unchanged. Deletion that would empty the recipe is suppressed.
    Operator order: duplicate -> point -> resize counts -> delete, so
    duplicated entries can diverge under point mutation instead of merging
    back during canonicalization.
    """
    if cfg.is_zero:
        return r

    dup_coins = rng.random(len(r.entries))
    worked: list[list] = []
    for k, (count, params) in enumerate(r.entries):
        worked.append([count, params])
        if dup_coins[k] < cfg.p_duplicate_entry:
            worked.append([count, params])

    for entry in worked:
        coins = rng.random(N_PARAMS)
        hits = coins < cfg.p_point
        if hits.any():
            values = list(entry[1].as_tuple())
            noise = rng.normal(0.0, cfg.point_sigma_rel, size=int(hits.sum()))
            k = 0
            for j in range(N_PARAMS):
                if hits[j]:
                    values[j] = values[j] * (1.0 + noise[k])
                    k += 1
            entry[1] = KineticParams.clamped(values, ranges)

    resize_coins = rng.random(len(worked))
    for k, entry in enumerate(worked):
        if resize_coins[k] < cfg.p_resize_count:
            entry[0] = max(1, round(entry[0] * (1.0 + rng.normal(0.0, cfg.count_resize_rel))))

    delete_coins = rng.random(len(worked))
    survivors: list[list] = []
    for i, entry in enumerate(worked):
        remaining_after = len(worked) - i - 1
        if delete_coins[i] < cfg.p_delete_entry and (len(survivors) + remaining_after) >= 1:
            continue
        survivors.append(entry)

    return Recipe(tuple((c, p) for c, p in survivors))


def mix_recipes(a: Recipe, b: Recipe, rng: RandomSource) -> Recipe:
    """Uniform set crossover over the union of the parents' entries.

    Entries present in both parents are always kept; entries unique to one
    parent are kept with probability 1/2 each; an empty outcome is redrawn.
    mix(r, r) == r by construction.
    """
    set_a = set(a.entries)
    set_b = set(b.entries)
    common = sorted(set_a & set_b, key=lambda e: (e[1].as_tuple(), e[0]))
    exclusive = sorted(set_a ^ set_b, key=lambda e: (e[1].as_tuple(), e[0]))
    while True:
        kept = list(common) + [e for e in exclusive if rng.random() < 0.5]
        if kept:
            return Recipe(tuple(kept))


def random_recipe(
    rng: RandomSource,
    n_entries: int | None = None,
    total_count: int | None = None,
    max_entries: int = 5,
    ranges: ParamRanges = DEFAULT_RANGES,
) -> Recipe:
    """Random recipe with parameters uniform in their legal ranges.

    When total_count is given, counts are a largest-remainder split of the
    total (each entry >= 1); otherwise counts are uniform in [5, 60].
    """
    k = n_entries if n_entries is not None else int(rng.integers(1, max_entries + 1))
    entries = []
    if total_count is not None:
        if total_count < k:
            k = max(1, total_count)
        weights = rng.random(k) + 1e-3
        raw = weights / weights.sum() * (total_count - k)
        counts = [1 + int(x) for x in raw]
        remainder = total_count - sum(counts)
        order = sorted(range(k), key=lambda i: raw[i] - int(raw[i]), reverse=True)
        for i in range(remainder):
            counts[order[i % k]] += 1
    else:
        counts = [int(rng.integers(5, 61)) for _ in range(k)]
    for i in range(k):
        values = []
        for name in PARAM_FIELDS:
            lo, hi = ranges.bounds(name)
            values.append(float(rng.uniform(lo, hi)))
        values[1] = min(values[1], values[2])  # v_normal <= v_max
        entries.append((counts[i], KineticParams.clamped(values, ranges)))
    return Recipe(tuple(entries))
