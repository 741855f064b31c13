"""Integer index machinery for box-truncated spectra on the torus.

Provides multi-index validation, the split of the axis set {1, ..., N}
into lacunary and free axes, generation and validation of lacunary
sequences (first term 1, consecutive ratios at least q > 1), and
enumeration of index vectors whose lacunary components run over family
terms while free components sweep a capped range starting at 0.

Axes are labelled 1-based at every public boundary; the ``*_positions``
properties expose the 0-based array positions used internally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import EmptyFamilyError, LacsumError

Index = tuple[int, ...]

GROWTH_RULES = ("minimal", "power")


def check_index(components: Sequence[int], dimension: int | None = None) -> Index:
    """Validate a multi-index (nonnegative integers, optional fixed length)."""
    idx = tuple(int(c) for c in components)
    if any(c != v for c, v in zip(components, idx)):
        raise LacsumError(f"multi-index components must be integers, got {components!r}")
    if dimension is not None and len(idx) != dimension:
        raise LacsumError(f"multi-index {idx} has length {len(idx)}, expected {dimension}")
    if len(idx) < 1:
        raise LacsumError("multi-index must have at least one component")
    if any(c < 0 for c in idx):
        raise LacsumError(f"multi-index components must be nonnegative, got {idx}")
    return idx


@dataclass(frozen=True)
class SampleJk:
    """A sample of lacunary axes inside {1, ..., N}.

    ``lacunary_axes`` is the strictly increasing tuple of 1-based axes
    carrying lacunary sequence terms; every other axis is free.
    """

    dimension: int
    lacunary_axes: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise LacsumError(f"dimension must be >= 1, got {self.dimension}")
        axes = tuple(int(a) for a in self.lacunary_axes)
        object.__setattr__(self, "lacunary_axes", axes)
        if any(a < 1 or a > self.dimension for a in axes):
            raise LacsumError(f"lacunary axes {axes} out of range 1..{self.dimension}")
        if any(a >= b for a, b in zip(axes, axes[1:])) or len(set(axes)) != len(axes):
            raise LacsumError(f"lacunary axes must be strictly increasing, got {axes}")

    @property
    def free_axes(self) -> tuple[int, ...]:
        lac = set(self.lacunary_axes)
        return tuple(a for a in range(1, self.dimension + 1) if a not in lac)

    @property
    def lacunary_positions(self) -> tuple[int, ...]:
        return tuple(a - 1 for a in self.lacunary_axes)

    @property
    def free_positions(self) -> tuple[int, ...]:
        return tuple(a - 1 for a in self.free_axes)

    @property
    def k(self) -> int:
        return len(self.lacunary_axes)


@dataclass(frozen=True)
class LacunaryCheck:
    ok: bool
    violation_index: int | None = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate_lacunary(terms: Sequence[int], q: float) -> LacunaryCheck:
    """Check that ``terms`` starts at 1 and consecutive ratios are >= q.

    Returns the index of the first offending term on failure.
    """
    terms = list(terms)
    if not terms:
        return LacunaryCheck(False, 0, "sequence is empty")
    if terms[0] != 1:
        return LacunaryCheck(False, 0, f"first term must be 1, got {terms[0]}")
    for i in range(1, len(terms)):
        if terms[i] != int(terms[i]) or terms[i] <= terms[i - 1]:
            return LacunaryCheck(
                False, i, f"terms must be strictly increasing integers, got {terms[i]} at {i}"
            )
        if terms[i] / terms[i - 1] < q:
            return LacunaryCheck(
                False, i, f"ratio {terms[i]}/{terms[i-1]} below q={q} at index {i}"
            )
    return LacunaryCheck(True)


@dataclass(frozen=True)
class LacunaryFamily:
    """One lacunary sequence: terms n(1)=1 < n(2) < ... with ratios >= q."""

    q: float
    terms: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.q <= 1:
            raise LacsumError(f"lacunary ratio must exceed 1, got {self.q}")
        object.__setattr__(self, "terms", tuple(int(t) for t in self.terms))
        check = validate_lacunary(self.terms, self.q)
        if not check:
            raise LacsumError(f"invalid lacunary sequence: {check.message}")

    def __len__(self) -> int:
        return len(self.terms)


def _next_term(prev: int, q: float) -> int:
    nxt = max(math.ceil(q * prev), prev + 1)
    # guard against ceil landing a hair below q*prev through float rounding
    while nxt / prev < q:
        nxt += 1
    return nxt


def make_lacunary(q: float, count: int, rule: str = "minimal") -> LacunaryFamily:
    """Generate a lacunary family with exactly ``count`` terms.

    ``minimal`` takes the densest admissible sequence, stepping to
    ceil(q * previous). ``power`` targets round(q**s), raised where needed
    so the sequence starts at 1, stays strictly increasing and keeps every
    consecutive ratio at least q.
    """
    if q <= 1:
        raise LacsumError(f"lacunary ratio must exceed 1, got {q}")
    if count < 1:
        raise LacsumError(f"count must be >= 1, got {count}")
    if rule not in GROWTH_RULES:
        raise LacsumError(f"unknown growth rule {rule!r}, expected one of {GROWTH_RULES}")
    terms = [1]
    for s in range(1, count):
        floor_next = _next_term(terms[-1], q)
        if rule == "minimal":
            terms.append(floor_next)
        else:
            terms.append(max(round(q**s), floor_next))
    return LacunaryFamily(q=q, terms=tuple(terms))


def make_lacunary_covering(q: float, bound: int, rule: str = "minimal") -> LacunaryFamily:
    """Generate a family whose largest term reaches at least ``bound``."""
    if bound < 1:
        raise LacsumError(f"bound must be >= 1, got {bound}")
    count = 1
    family = make_lacunary(q, count, rule)
    while family.terms[-1] < bound:
        count += 1
        family = make_lacunary(q, count, rule)
    return family


@dataclass(frozen=True)
class JkIndexSpace:
    """Finite index space: family terms on lacunary axes, [0, cap] elsewhere.

    ``families`` aligns with ``sample.lacunary_axes`` and ``free_caps`` with
    ``sample.free_axes``. Free components are unbounded in the underlying
    theory; the caps are the explicit truncation under which every supremum
    is taken, and are echoed in all reports built on top of a space.
    """

    sample: SampleJk
    families: tuple[LacunaryFamily, ...]
    free_caps: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "free_caps", tuple(int(c) for c in self.free_caps))
        if len(self.families) != self.sample.k:
            raise LacsumError(
                f"need one family per lacunary axis: {len(self.families)} families, "
                f"{self.sample.k} lacunary axes"
            )
        if any(len(f) == 0 for f in self.families):
            raise EmptyFamilyError("every lacunary family must have at least one term")
        if len(self.free_caps) != len(self.sample.free_axes):
            raise LacsumError(
                f"need one cap per free axis: {len(self.free_caps)} caps, "
                f"{len(self.sample.free_axes)} free axes"
            )
        if any(c < 0 for c in self.free_caps):
            raise LacsumError(f"free caps must be nonnegative, got {self.free_caps}")

    @property
    def count(self) -> int:
        n = 1
        for fam in self.families:
            n *= len(fam)
        for cap in self.free_caps:
            n *= cap + 1
        return n

    def contains(self, index: Sequence[int]) -> bool:
        idx = check_index(index, self.sample.dimension)
        for pos, fam in zip(self.sample.lacunary_positions, self.families):
            if idx[pos] not in fam.terms:
                return False
        for pos, cap in zip(self.sample.free_positions, self.free_caps):
            if idx[pos] > cap:
                return False
        return True


def enumerate_jk_indices(space: JkIndexSpace) -> Iterator[Index]:
    """Yield every index of the space, lexicographic in (term tuple, free tuple).

    Lacunary components vary slowest, in axis order; free components vary
    fastest, also in axis order. The total count is the product of family
    lengths times the product of (cap + 1).
    """
    if any(len(f) == 0 for f in space.families):
        raise EmptyFamilyError("cannot enumerate a space with an empty family")
    dim = space.sample.dimension
    lac_pos = space.sample.lacunary_positions
    free_pos = space.sample.free_positions

    def rec_lac(i: int, base: list[int]) -> Iterator[Index]:
        if i == len(lac_pos):
            yield from rec_free(0, base)
            return
        for term in space.families[i].terms:
            base[lac_pos[i]] = term
            yield from rec_lac(i + 1, base)

    def rec_free(i: int, base: list[int]) -> Iterator[Index]:
        if i == len(free_pos):
            yield tuple(base)
            return
        for m in range(space.free_caps[i] + 1):
            base[free_pos[i]] = m
            yield from rec_free(i + 1, base)

    yield from rec_lac(0, [0] * dim)
