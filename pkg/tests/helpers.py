"""Shared system builders for the test suite."""

from __future__ import annotations

import random

from plifs import Cplifs, PLMap


def paper_example() -> Cplifs:
    """Two maps, one breaking at 0.5 = f_1(1); the classic worked system."""
    return Cplifs((PLMap((0.5,), (0.8, 0.2), 0.0), PLMap((), (0.1,), 0.9)))


def cantor_pair() -> Cplifs:
    return Cplifs((PLMap((), (1 / 3,), 0.0), PLMap((), (1 / 3,), 2 / 3)))


def unit_cover() -> Cplifs:
    """Overlapping pair whose attractor is all of [0, 1]."""
    return Cplifs((PLMap((), (0.6,), 0.0), PLMap((), (0.6,), 0.4)))


def anchored_map(rng: random.Random, fixed_point: float, n_breaks: int,
                 lo: float = 0.05, hi: float = 0.9) -> PLMap:
    """Random increasing map with the given fixed point."""
    while True:
        slopes = [rng.uniform(lo, hi) for _ in range(n_breaks + 1)]
        if all(abs(a - b) > 1e-3 for a, b in zip(slopes, slopes[1:])):
            break
    breaks = sorted(rng.uniform(0.05, 0.95) for _ in range(n_breaks))
    while any(b - a < 1e-3 for a, b in zip(breaks, breaks[1:])):
        breaks = sorted(rng.uniform(0.05, 0.95) for _ in range(n_breaks))
    f0 = PLMap(tuple(breaks), tuple(slopes), 0.0)
    return PLMap(tuple(breaks), tuple(slopes), fixed_point - f0(fixed_point))


def random_increasing_system(rng: random.Random, m: int | None = None,
                             max_breaks: int = 2, span: bool = True) -> Cplifs:
    """Random injective increasing system; with span=True the extreme fixed
    points are 0 and 1, so the invariant interval is [0, 1]."""
    m = m or rng.randint(2, 3)
    fps = [rng.uniform(0.1, 0.9) for _ in range(m)]
    if span:
        fps[0], fps[-1] = 0.0, 1.0
    maps = tuple(anchored_map(rng, fp, rng.randint(0, max_breaks)) for fp in fps)
    return Cplifs(maps)


def random_plmap(rng: random.Random, max_breaks: int = 4) -> PLMap:
    """Random map with slopes of either sign (no structural constraints)."""
    n = rng.randint(0, max_breaks)
    while True:
        slopes = [rng.choice([-1, 1]) * rng.uniform(0.05, 0.95) for _ in range(n + 1)]
        if all(abs(a - b) > 1e-3 for a, b in zip(slopes, slopes[1:])):
            break
    breaks = []
    x = rng.uniform(-1.0, 0.0)
    for _ in range(n):
        x += rng.uniform(0.05, 0.5)
        breaks.append(x)
    return PLMap(tuple(breaks), tuple(slopes), rng.uniform(-0.5, 0.5))


def random_iosc_affine(rng: random.Random, m: int | None = None) -> Cplifs:
    """Affine increasing maps onto pairwise disjoint subintervals of [0, 1]."""
    m = m or rng.randint(2, 3)
    while True:
        points = sorted(rng.uniform(0.0, 1.0) for _ in range(2 * m))
        widths = [points[2 * i + 1] - points[2 * i] for i in range(m)]
        gaps = [points[2 * i] - points[2 * i - 1] for i in range(1, m)]
        if min(widths) > 0.02 and (not gaps or min(gaps) > 0.02):
            break
    maps = tuple(
        PLMap((), (widths[i],), points[2 * i]) for i in range(m)
    )
    return Cplifs(maps)


def random_family_instance(rng: random.Random, m: int = 3):
    """Slope/fixed-point parameters for the fixed-point-breaking family
    that satisfy the disjointness requirement."""
    from plifs.gdifs import build_fixed_point_family

    while True:
        slopes = [rng.uniform(0.1, 0.35) for _ in range(2 * m - 2)]
        if any(abs(a - b) < 1e-3 for a, b in zip(slopes, slopes[1:])):
            continue
        phis = sorted(rng.uniform(0.25, 0.75) for _ in range(m - 2))
        if any(b - a < 0.15 for a, b in zip([0.0] + phis, phis + [1.0])):
            continue
        try:
            return build_fixed_point_family(tuple(slopes), tuple(phis))
        except Exception:
            continue


def conjugate(F: Cplifs, a: float, b: float) -> Cplifs:
    """The system of maps x -> a f((x - b)/a) + b (a > 0)."""
    maps = []
    for f in F.maps:
        breaks = tuple(a * x + b for x in f.breaks)
        tau = a * f((0.0 - b) / a) + b
        maps.append(PLMap(breaks, f.slopes, tau))
    return Cplifs(tuple(maps))
