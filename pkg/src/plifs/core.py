"""Continuous piecewise linear contractions of the real line and the
interval combinatorics built on top of them: smallest invariant interval,
cylinder intervals, separation and smallness checks, and breaking-point
diagnostics."""

from __future__ import annotations

import itertools
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import (
    AmbiguousContainment,
    BudgetExceeded,
    ConvergenceFailure,
    NonContractive,
    ToleranceViolation,
)

Interval = tuple[float, float]
Word = tuple[int, ...]

#: Hard cap on enumerated cylinder intervals unless overridden.
DEFAULT_BUDGET = 2**26

#: Base absolute tolerance for geometric predicates, scaled by the
#: invariant-interval length where appropriate.
GEOM_TOL = 1e-12


def word_str(w: Word) -> str:
    """Serialize a word as a 1-based digit string, e.g. (1, 2, 1) -> '121'."""
    return "".join(str(s) for s in w)


@dataclass(frozen=True)
class PLMap:
    """One continuous piecewise linear contraction.

    The map is determined by its breaking points, the slope on each
    linearity interval, and its value at zero.  Intercepts of the affine
    pieces are reconstructed from ``tau`` by continuity, so a PLMap cannot
    represent a discontinuous function.
    """

    breaks: tuple[float, ...]
    slopes: tuple[float, ...]
    tau: float
    _intercepts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.breaks)
        slopes = tuple(float(s) for s in self.slopes)
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "tau", float(self.tau))
        if len(slopes) != len(breaks) + 1:
            raise ValueError(
                f"need {len(breaks) + 1} slopes for {len(breaks)} breaks, got {len(slopes)}"
            )
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("breaking points must be strictly increasing")
        for s in slopes:
            if s == 0.0:
                raise ValueError("zero slope is not allowed")
            if abs(s) >= 1.0:
                raise NonContractive(f"slope {s} has |slope| >= 1")
        if any(s1 == s2 for s1, s2 in zip(slopes, slopes[1:])):
            raise ValueError("adjacent linearity intervals must have distinct slopes")
        object.__setattr__(self, "_intercepts", self._build_intercepts())

    def _build_intercepts(self) -> tuple[float, ...]:
        # piece i covers (breaks[i-1], breaks[i]); anchor the piece holding 0
        # at tau and propagate continuity across the breaks both ways.
        n = len(self.slopes)
        c = [0.0] * n
        j = bisect_right(self.breaks, 0.0)
        c[j] = self.tau
        for i in range(j, n - 1):
            c[i + 1] = c[i] + (self.slopes[i] - self.slopes[i + 1]) * self.breaks[i]
        for i in range(j - 1, -1, -1):
            c[i] = c[i + 1] + (self.slopes[i + 1] - self.slopes[i]) * self.breaks[i]
        return tuple(c)

    @property
    def pieces(self) -> int:
        return len(self.slopes)

    def piece_index(self, x: float) -> int:
        return bisect_right(self.breaks, x)

    def piece_domain(self, i: int) -> Interval:
        lo = self.breaks[i - 1] if i > 0 else -math.inf
        hi = self.breaks[i] if i < len(self.breaks) else math.inf
        return (lo, hi)

    def piece_affine(self, i: int) -> "AffineMap":
        return AffineMap(self.slopes[i], self._intercepts[i])

    def __call__(self, x: float) -> float:
        i = self.piece_index(x)
        return self.slopes[i] * x + self._intercepts[i]

    def is_injective(self) -> bool:
        return all(s > 0 for s in self.slopes) or all(s < 0 for s in self.slopes)

    @property
    def max_ratio(self) -> float:
        return max(abs(s) for s in self.slopes)

    @property
    def min_ratio(self) -> float:
        return min(abs(s) for s in self.slopes)

    def fixed_point(self) -> float:
        """The unique fixed point (the map is a global contraction)."""
        best, best_res = None, math.inf
        for i in range(self.pieces):
            s, c = self.slopes[i], self._intercepts[i]
            x = c / (1.0 - s)
            lo, hi = self.piece_domain(i)
            pad = 1e-12 * (1.0 + abs(x))
            if lo - pad <= x <= hi + pad:
                res = abs(self(x) - x)
                if res < best_res:
                    best, best_res = x, res
        if best is None:  # rounding pushed the candidate off every piece
            x = 0.0
            for _ in range(100000):
                nx = self(x)
                if abs(nx - x) < 1e-15:
                    break
                x = nx
            best = x
        return best

    def piece_over(self, iv: Interval, tol: float = GEOM_TOL) -> int | None:
        """Index of the linearity piece whose closure covers ``iv``,
        or None if no single piece does (a break is interior)."""
        a, b = iv
        for i in range(self.pieces):
            lo, hi = self.piece_domain(i)
            if a >= lo - tol and b <= hi + tol:
                return i
        return None


@dataclass(frozen=True)
class AffineMap:
    """A similarity x -> ratio*x + offset."""

    ratio: float
    offset: float

    def __call__(self, x: float) -> float:
        return self.ratio * x + self.offset

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """self o inner."""
        return AffineMap(self.ratio * inner.ratio, self.ratio * inner.offset + self.offset)

    def image(self, iv: Interval) -> Interval:
        a, b = self(iv[0]), self(iv[1])
        return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class GeneratedSimilarity:
    """Affine extension of one linearity piece of one map of a system."""

    ratio: float
    offset: float
    map_index: int  # 1-based
    piece_index: int  # 1-based

    def as_affine(self) -> AffineMap:
        return AffineMap(self.ratio, self.offset)


@dataclass(frozen=True)
class Cplifs:
    """An ordered, nonempty list of piecewise linear contractions."""

    maps: tuple[PLMap, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if not self.maps:
            raise ValueError("a system needs at least one map")

    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def type_vector(self) -> tuple[int, ...]:
        return tuple(len(f.breaks) for f in self.maps)

    @property
    def max_ratio(self) -> float:
        return max(f.max_ratio for f in self.maps)

    @property
    def min_ratio(self) -> float:
        return min(f.min_ratio for f in self.maps)

    def map(self, k: int) -> PLMap:
        """1-based map access, matching symbolic words."""
        return self.maps[k - 1]

    def breaking_points(self) -> tuple[tuple[int, float], ...]:
        """All (map_index, point) pairs, 1-based map indices."""
        return tuple((k, b) for k, f in enumerate(self.maps, 1) for b in f.breaks)

    def invariant_interval(self) -> Interval:
        return invariant_interval(self)

    def geom_tol(self) -> float:
        lo, hi = self.invariant_interval()
        return GEOM_TOL * max(1.0, hi - lo)


def eval_map(f: PLMap, x: float) -> float:
    """Evaluate the piecewise affine map at x."""
    return f(x)


def image_interval(f: PLMap, iv: Interval) -> Interval:
    """Exact image f([a, b]): extrema occur at the endpoints or at
    breaking points interior to the interval."""
    a, b = iv
    if b < a:
        raise ValueError("empty interval")
    vals = [f(a), f(b)]
    vals.extend(f(c) for c in f.breaks if a < c < b)
    return (min(vals), max(vals))


@lru_cache(maxsize=512)
def _invariant_interval_cached(F: Cplifs) -> Interval:
    pts = [f.fixed_point() for f in F.maps]
    lo, hi = min(pts), max(pts)
    for _ in range(10000):
        nlo, nhi = lo, hi
        for f in F.maps:
            a, b = image_interval(f, (lo, hi))
            nlo, nhi = min(nlo, a), max(nhi, b)
        if nlo >= lo - 1e-14 and nhi <= hi + 1e-14:
            return (nlo, nhi)
        lo, hi = nlo, nhi
    raise ConvergenceFailure("invariant interval iteration did not stabilize")


def invariant_interval(F: Cplifs) -> Interval:
    """Smallest compact interval J with f_k(J) contained in J for all k.

    Seeded with the hull of the maps' fixed points (which every invariant
    interval contains) and grown by the joint image until stable; the
    growth step preserves being a subset of any invariant interval, so the
    limit is the minimal one.
    """
    return _invariant_interval_cached(F)


# ---------------------------------------------------------------------------
# cylinder intervals


@dataclass(frozen=True)
class CylinderSet:
    """All level-n cylinder intervals, keyed by words over {1..m}."""

    level: int
    entries: dict[Word, Interval]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, w: Word) -> Interval:
        return self.entries[w]

    def words(self) -> Iterator[Word]:
        return iter(self.entries)

    def items(self):
        return self.entries.items()


def _check_budget(m: int, n: int, budget: int) -> int:
    count = m**n
    if count > budget:
        raise BudgetExceeded(count, budget)
    return count


def _eval_array(f: PLMap, x: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(np.asarray(f.breaks), x, side="right")
    return np.asarray(f.slopes)[idx] * x + np.asarray(f._intercepts)[idx]


def _image_arrays(f: PLMap, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ya, yb = _eval_array(f, lo), _eval_array(f, hi)
    out_lo, out_hi = np.minimum(ya, yb), np.maximum(ya, yb)
    for b in f.breaks:
        inside = (lo < b) & (b < hi)
        if inside.any():
            fb = f(b)
            out_lo = np.where(inside, np.minimum(out_lo, fb), out_lo)
            out_hi = np.where(inside, np.maximum(out_hi, fb), out_hi)
    return out_lo, out_hi


def cylinder_arrays(
    F: Cplifs, n: int, budget: int = DEFAULT_BUDGET
) -> tuple[np.ndarray, np.ndarray]:
    """Endpoint arrays of all level-n cylinder intervals in lexicographic
    word order (first symbol most significant)."""
    if n < 0:
        raise ValueError("level must be >= 0")
    _check_budget(F.m, n, budget)
    a, b = invariant_interval(F)
    lo = np.array([a])
    hi = np.array([b])
    for _ in range(n):
        parts = [_image_arrays(f, lo, hi) for f in F.maps]
        lo = np.concatenate([p[0] for p in parts])
        hi = np.concatenate([p[1] for p in parts])
    return lo, hi


def level_words(m: int, n: int) -> Iterator[Word]:
    """All words of length n in lexicographic order."""
    return itertools.product(range(1, m + 1), repeat=n)


def cylinders(F: Cplifs, n: int, budget: int = DEFAULT_BUDGET) -> CylinderSet:
    """Level-n cylinder intervals I_w = f_{w_1} o ... o f_{w_n} (I^F)."""
    if n < 1:
        raise ValueError("level must be >= 1")
    lo, hi = cylinder_arrays(F, n, budget)
    entries = {
        w: (float(lo[i]), float(hi[i])) for i, w in enumerate(level_words(F.m, n))
    }
    return CylinderSet(level=n, entries=entries)


def cylinder_interval(F: Cplifs, w: Word) -> Interval:
    """Single cylinder interval by right-to-left fold (no enumeration)."""
    iv = invariant_interval(F)
    for k in w[::-1]:
        iv = image_interval(F.map(k), iv)
    return iv


# ---------------------------------------------------------------------------
# structural conditions


@dataclass(frozen=True)
class IoscReport:
    """Pairwise disjointness verdict for the first-level cylinders."""

    ok: bool
    min_gap: float
    first_cylinders: tuple[Interval, ...]
    touching_pairs: tuple[tuple[int, int], ...]

    def __bool__(self) -> bool:
        return self.ok


def check_iosc(F: Cplifs) -> IoscReport:
    """True iff the closed first-cylinder intervals are pairwise disjoint
    (shared endpoints count as overlap).  The reported gap is the smallest
    pairwise distance between cylinders."""
    iv = invariant_interval(F)
    cyl = tuple(image_interval(f, iv) for f in F.maps)
    min_gap = math.inf
    bad = []
    for i in range(len(cyl)):
        for j in range(i + 1, len(cyl)):
            (a1, b1), (a2, b2) = cyl[i], cyl[j]
            gap = max(a2 - b1, a1 - b2)
            min_gap = min(min_gap, gap)
            if gap <= 0.0:
                bad.append((i + 1, j + 1))
    return IoscReport(
        ok=not bad, min_gap=min_gap, first_cylinders=cyl, touching_pairs=tuple(bad)
    )


@dataclass(frozen=True)
class MapSmallness:
    map_index: int
    rho: float
    injective: bool
    bound: float
    ok: bool


@dataclass(frozen=True)
class SmallnessReport:
    ok: bool
    sum_rho: float
    sum_ok: bool
    per_map: tuple[MapSmallness, ...]

    def __bool__(self) -> bool:
        return self.ok

    def failing_clauses(self) -> tuple[str, ...]:
        out = []
        if not self.sum_ok:
            out.append("a")
        for e in self.per_map:
            if not e.ok:
                out.append(f"b-{'i' if e.injective else 'ii'}:map {e.map_index}")
        return tuple(out)


def check_small(F: Cplifs) -> SmallnessReport:
    """Smallness: the maximal ratios must sum below 1, and each map's
    maximal ratio must stay below 1/2 (injective map) or below
    (1 - rho_max)/2 (non-injective map)."""
    rhos = [f.max_ratio for f in F.maps]
    rho_max = max(rhos)
    sum_ok = sum(rhos) < 1.0
    per_map = []
    for k, f in enumerate(F.maps, 1):
        inj = f.is_injective()
        bound = 0.5 if inj else (1.0 - rho_max) / 2.0
        per_map.append(
            MapSmallness(map_index=k, rho=rhos[k - 1], injective=inj,
                         bound=bound, ok=rhos[k - 1] < bound)
        )
    ok = sum_ok and all(e.ok for e in per_map)
    return SmallnessReport(ok=ok, sum_rho=sum(rhos), sum_ok=sum_ok, per_map=tuple(per_map))


def is_injective(f: PLMap) -> bool:
    """True iff all slopes share one sign."""
    return f.is_injective()


def generated_ifs(F: Cplifs) -> tuple[GeneratedSimilarity, ...]:
    """The self-similar system of all affine pieces of all maps."""
    out = []
    for k, f in enumerate(F.maps, 1):
        for i in range(f.pieces):
            aff = f.piece_affine(i)
            out.append(GeneratedSimilarity(aff.ratio, aff.offset, k, i + 1))
    return tuple(out)


# ---------------------------------------------------------------------------
# breaking-point diagnostics

CERTIFIED_OFF_ATTRACTOR = "CERTIFIED_OFF_ATTRACTOR"
UNDECIDED_AT_DEPTH = "UNDECIDED_AT_DEPTH"


@dataclass(frozen=True)
class BreakStatus:
    map_index: int
    point: float
    status: str
    depth: int
    witnesses: tuple[Word, ...]


def _containing_words(
    F: Cplifs, x: float, depth: int, budget: int, tol: float
) -> list[Word]:
    """Level-`depth` words whose cylinder contains x, found by descending
    only through containing prefixes (I_{w k} lies inside I_w)."""
    iv = invariant_interval(F)
    frontier: list[tuple[Word, Interval]] = []
    if iv[0] - tol <= x <= iv[1] + tol:
        frontier = [((), iv)]
    for _ in range(depth):
        nxt = []
        for w, _unused in frontier:
            for k in range(1, F.m + 1):
                ww = w + (k,)
                a, b = cylinder_interval(F, ww)
                if a - tol <= x <= b + tol:
                    nxt.append((ww, (a, b)))
        if len(nxt) * F.m > budget:
            raise BudgetExceeded(len(nxt) * F.m, budget, "containment frontier")
        frontier = nxt
        if not frontier:
            break
    return [w for w, _ in frontier]


def regularity_diagnostic(
    F: Cplifs, depth: int, budget: int = DEFAULT_BUDGET
) -> tuple[BreakStatus, ...]:
    """Per breaking point: certified off the attractor when it avoids the
    level-`depth` cylinder union (which contains the attractor), otherwise
    undecided, with the containing words as witnesses."""
    tol = F.geom_tol()
    out = []
    for k, b in F.breaking_points():
        witnesses = _containing_words(F, b, depth, budget, tol)
        status = UNDECIDED_AT_DEPTH if witnesses else CERTIFIED_OFF_ATTRACTOR
        out.append(
            BreakStatus(map_index=k, point=b, status=status, depth=depth,
                        witnesses=tuple(witnesses))
        )
    return tuple(out)


@dataclass(frozen=True)
class BreakCode:
    """A claimed symbolic address of a breaking point: the point is
    f_prefix(y) where y is the periodic point of f_period."""

    point: float
    prefix: Word
    period: Word

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise ValueError("period must be nonempty")

    @property
    def purely_periodic(self) -> bool:
        return not self.prefix


@dataclass(frozen=True)
class CodeCheck:
    ok: bool
    code: BreakCode
    periodic_point: float
    residual_period: float
    residual_prefix: float
    containment_ok: bool

    def __bool__(self) -> bool:
        return self.ok


def _apply_word(F: Cplifs, w: Word, x: float) -> float:
    for k in w[::-1]:
        x = F.map(k)(x)
    return x


def periodic_point(F: Cplifs, period: Word) -> float:
    """Fixed point of the composition f_{period} (a contraction)."""
    lo, hi = invariant_interval(F)
    x = 0.5 * (lo + hi)
    for _ in range(100000):
        nx = _apply_word(F, period, x)
        if abs(nx - x) < 1e-16 * (1.0 + abs(x)):
            return nx
        x = nx
    raise ConvergenceFailure("periodic point iteration did not converge")


def verify_breaking_code(
    F: Cplifs, b: float, prefix: Word, period: Word, tol: float = 1e-9
) -> CodeCheck:
    """Check that b = f_prefix(y) for the periodic point y of f_period and
    that b stays inside the cylinders I_{prefix . period^j}, j = 1..3."""
    points = [p for _, p in F.breaking_points()]
    if not points or min(abs(b - p) for p in points) > tol:
        raise ValueError(f"{b} is not a breaking point of the system")
    code = BreakCode(point=b, prefix=tuple(prefix), period=tuple(period))
    try:
        y = periodic_point(F, code.period)
    except ConvergenceFailure as exc:
        raise ToleranceViolation(
            f"periodic point of {code.period} did not converge",
            {"period": math.inf},
        ) from exc
    res_period = abs(_apply_word(F, code.period, y) - y)
    res_prefix = abs(_apply_word(F, code.prefix, y) - b)
    gtol = F.geom_tol()
    contained = True
    for j in (1, 2, 3):
        a, c = cylinder_interval(F, code.prefix + code.period * j)
        if not (a - gtol <= b <= c + gtol):
            contained = False
            break
    ok = res_period <= tol and res_prefix <= tol and contained
    return CodeCheck(
        ok=ok, code=code, periodic_point=y, residual_period=res_period,
        residual_prefix=res_prefix, containment_ok=contained,
    )


def affine_restriction(F: Cplifs, w: Word, iv: Interval, tol: float | None = None) -> AffineMap:
    """The similarity that f_w restricts to on ``iv``.

    Folds right to left; fails if at some stage the running interval has a
    breaking point of the next map strictly inside it, because then the
    composition is not affine there.
    """
    if tol is None:
        tol = F.geom_tol()
    cur = iv
    total = AffineMap(1.0, 0.0)
    for k in w[::-1]:
        f = F.map(k)
        i = f.piece_over(cur, tol)
        if i is None:
            raise AmbiguousContainment(
                f"map {k} breaks inside [{cur[0]}, {cur[1]}]; composition not affine"
            )
        piece = f.piece_affine(i)
        total = piece.compose(total)
        cur = piece.image(cur)
    return total
