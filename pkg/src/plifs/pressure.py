"""Level-n partition sums of cylinder lengths, their roots s_n, and the
natural-dimension estimate built from the root sequence."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    Cplifs,
    DEFAULT_BUDGET,
    _check_budget,
    _image_arrays,
    cylinder_arrays,
    invariant_interval,
)
from .errors import ConvergenceFailure, DegenerateAttractor


@dataclass(frozen=True)
class PressureProfile:
    """Root s_n of the level-n partition sum, plus run metadata."""

    level: int
    root: float
    word_count: int
    zero_count: int
    elapsed: float


@dataclass(frozen=True)
class NaturalDimEstimate:
    """The s_n sequence over a level range and its tail-window summary.

    The reported estimate is the maximum over the trailing window, a
    finite stand-in for the limit superior of the sequence.
    """

    levels: tuple[int, ...]
    roots: tuple[float, ...]
    estimate: float
    window: int
    spread: float


def _aggregate_lengths(lens: np.ndarray) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Collapse equal cylinder lengths to (log length, log multiplicity);
    piecewise systems repeat few distinct length products, which makes the
    partition sum cheap at deep levels."""
    zero = int(np.count_nonzero(lens <= 0.0))
    lens = lens[lens > 0.0]
    total = lens.size + zero
    if lens.size == 0:
        return np.empty(0), np.empty(0), zero, total
    u, c = np.unique(lens, return_counts=True)
    return np.log(u), np.log(c.astype(float)), zero, total


def _logsumexp(a: np.ndarray) -> float:
    mx = float(np.max(a))
    return mx + math.log(float(np.sum(np.exp(a - mx))))


def pressure_at(F: Cplifs, s: float, n: int, budget: int = DEFAULT_BUDGET) -> float:
    """(1/n) log sum over level-n words of |I_w|^s, in the log domain."""
    if s < 0:
        raise ValueError("s must be >= 0")
    if n < 1:
        raise ValueError("level must be >= 1")
    lo, hi = cylinder_arrays(F, n, budget)
    logu, logc, _, _ = _aggregate_lengths(hi - lo)
    if logu.size == 0:
        raise DegenerateAttractor("all level-%d cylinders have zero length" % n)
    return _logsumexp(s * logu + logc) / n


def _root_from_logs(logu: np.ndarray, logc: np.ndarray, tol: float = 1e-13) -> float:
    # G(s) = log sum |I_w|^s is strictly decreasing when every length < 1.
    if float(np.max(logu)) >= 0.0:
        raise ConvergenceFailure(
            "a cylinder has length >= 1; the partition-sum root is not unique "
            "(conjugate the system into an interval of length <= 1)"
        )

    def G(s: float) -> float:
        return _logsumexp(s * logu + logc)

    if logu.size == 1 and logc[0] == 0.0:
        return 0.0  # single positive cylinder: the sum is 1 only at s = 0
    lo = 0.0
    hi = 1.0
    doublings = 0
    while G(hi) > 0.0:
        hi *= 2.0
        doublings += 1
        if doublings > 60:
            raise ConvergenceFailure("no upper bracket for the partition-sum root")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if G(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_level_root(F: Cplifs, n: int, budget: int = DEFAULT_BUDGET) -> PressureProfile:
    """The unique s_n with sum over level-n words of |I_w|^{s_n} = 1,
    found by bisection on a doubling bracket.

    A system whose cylinders all have zero length is a single point; its
    root is 0 by convention.
    """
    t0 = time.perf_counter()
    lo, hi = cylinder_arrays(F, n, budget)
    logu, logc, zero, count = _aggregate_lengths(hi - lo)
    if logu.size == 0:
        return PressureProfile(level=n, root=0.0, word_count=count,
                               zero_count=zero, elapsed=time.perf_counter() - t0)
    root = _root_from_logs(logu, logc)
    return PressureProfile(level=n, root=root, word_count=count, zero_count=zero,
                           elapsed=time.perf_counter() - t0)


def natural_dimension(
    F: Cplifs,
    n_min: int,
    n_max: int,
    window: int = 3,
    budget: int = DEFAULT_BUDGET,
) -> NaturalDimEstimate:
    """Solve s_n for n_min..n_max in one sweep of the cylinder arrays and
    summarize the tail window."""
    if not (1 <= n_min <= n_max):
        raise ValueError("need 1 <= n_min <= n_max")
    if window < 1:
        raise ValueError("window must be >= 1")
    a, b = invariant_interval(F)
    lo = np.array([a])
    hi = np.array([b])
    roots: list[float] = []
    _check_budget(F.m, n_max, budget)
    for n in range(1, n_max + 1):
        parts = [_image_arrays(f, lo, hi) for f in F.maps]
        lo = np.concatenate([p[0] for p in parts])
        hi = np.concatenate([p[1] for p in parts])
        if n >= n_min:
            logu, logc, _, _ = _aggregate_lengths(hi - lo)
            roots.append(0.0 if logu.size == 0 else _root_from_logs(logu, logc))
    levels = tuple(range(n_min, n_max + 1))
    tail = roots[-window:]
    return NaturalDimEstimate(
        levels=levels,
        roots=tuple(roots),
        estimate=max(tail),
        window=window,
        spread=max(tail) - min(tail),
    )


@dataclass(frozen=True)
class ConsistencyReport:
    consistent: bool
    box_estimate: float
    dim_estimate: float
    margin: float
    tolerance: float


def upper_box_consistency(
    estimate: NaturalDimEstimate | float, box: float, tolerance: float = 0.05
) -> ConsistencyReport:
    """Flag a box-count estimate that exceeds the natural-dimension
    estimate by more than the statistical tolerance: the box dimension can
    never sit above the partition-sum root."""
    s = estimate.estimate if isinstance(estimate, NaturalDimEstimate) else float(estimate)
    margin = box - s
    return ConsistencyReport(
        consistent=margin <= tolerance,
        box_estimate=box,
        dim_estimate=s,
        margin=margin,
        tolerance=tolerance,
    )
