"""Graph-directed self-similar systems on the line.

Covers the spectral route to the dimension (the unique s where the
weighted adjacency matrix has dominant eigenvalue 1), the determinant
recursion for the family of maps breaking at their own fixed points, the
association of a graph system to a piecewise linear system whose breaking
points carry periodic codes, and the punctured approximation that drops
cylinders containing breaking points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    AffineMap,
    BreakCode,
    Cplifs,
    DEFAULT_BUDGET,
    GeneratedSimilarity,
    Interval,
    PLMap,
    Word,
    affine_restriction,
    check_iosc,
    cylinder_interval,
    cylinders,
    image_interval,
    invariant_interval,
    periodic_point,
    verify_breaking_code,
    word_str,
)
from .pressure import natural_dimension
from . import oracle
from .errors import (
    AmbiguousContainment,
    BudgetExceeded,
    ConvergenceFailure,
    EmptyGraph,
    IoscViolated,
    BadFixedPointOrder,
    NonPeriodicCode,
    NotStronglyConnected,
    RootMismatch,
    UnverifiedCode,
)

# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class GdifsNode:
    """A graph-directed set: the cylinder word that defines it, which half
    of a cut cylinder it is (if any), and its interval hull."""

    word: Word
    side: str | None  # None, "left" or "right"
    hull: Interval

    @property
    def label(self) -> str:
        tag = self.side or "full"
        return f"{word_str(self.word) or '-'}:{tag}"


@dataclass(frozen=True)
class GdifsEdge:
    src: int
    dst: int
    ratio: float
    offset: float


@dataclass(frozen=True, eq=False)
class SpectralMatrix:
    """Evaluator of the q x q matrix whose (i, j) entry sums |r_e|^s over
    the edges from i to j."""

    q: int
    src: np.ndarray
    dst: np.ndarray
    ratios: np.ndarray  # absolute values

    def at(self, s: float) -> np.ndarray:
        M = np.zeros((self.q, self.q))
        np.add.at(M, (self.src, self.dst), self.ratios**s)
        return M


@dataclass(frozen=True)
class Gdifs:
    """A strongly connected multigraph with one similarity per edge."""

    nodes: tuple[GdifsNode, ...]
    edges: tuple[GdifsEdge, ...]

    def __post_init__(self):
        q = len(self.nodes)
        for e in self.edges:
            if not (0 <= e.src < q and 0 <= e.dst < q):
                raise ValueError("edge endpoint out of range")
            if not (0.0 < abs(e.ratio) < 1.0):
                raise ValueError(f"edge ratio {e.ratio} not in (0, 1) in modulus")

    @property
    def q(self) -> int:
        return len(self.nodes)

    def spectral_matrix(self) -> SpectralMatrix:
        src = np.array([e.src for e in self.edges], dtype=np.intp)
        dst = np.array([e.dst for e in self.edges], dtype=np.intp)
        ratios = np.array([abs(e.ratio) for e in self.edges])
        return SpectralMatrix(q=self.q, src=src, dst=dst, ratios=ratios)

    def adjacency(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.q)]
        for e in self.edges:
            adj[e.src].append(e.dst)
        return adj

    def strongly_connected(self) -> bool:
        if self.q == 0:
            return False
        comps = strongly_connected_components(self.q, self.adjacency())
        return len(comps) == 1

    def export_text(self) -> str:
        """Deterministic plain-text listing: node header lines, then edges."""
        lines = []
        for i, node in enumerate(self.nodes):
            lo, hi = node.hull
            lines.append(
                f"node {i} word={word_str(node.word) or '-'} "
                f"side={node.side or 'full'} hull={lo:.17g},{hi:.17g}"
            )
        for e in sorted(self.edges, key=lambda e: (e.src, e.dst, e.ratio, e.offset)):
            lines.append(
                f"edge {e.src} {e.dst} ratio={e.ratio:.17g} offset={e.offset:.17g}"
            )
        return "\n".join(lines) + "\n"


def strongly_connected_components(q: int, adj: list[list[int]]) -> list[list[int]]:
    """Kosaraju with iterative passes; components come out sorted by their
    smallest node index."""
    order: list[int] = []
    seen = [False] * q
    for start in range(q):
        if seen[start]:
            continue
        seen[start] = True
        stack: list[tuple[int, int]] = [(start, 0)]
        while stack:
            v, i = stack[-1]
            if i < len(adj[v]):
                stack[-1] = (v, i + 1)
                w = adj[v][i]
                if not seen[w]:
                    seen[w] = True
                    stack.append((w, 0))
            else:
                order.append(v)
                stack.pop()
    radj: list[list[int]] = [[] for _ in range(q)]
    for v in range(q):
        for w in adj[v]:
            radj[w].append(v)
    comp = [-1] * q
    comps: list[list[int]] = []
    for start in reversed(order):
        if comp[start] != -1:
            continue
        members = [start]
        comp[start] = len(comps)
        stack2 = [start]
        while stack2:
            v = stack2.pop()
            for w in radj[v]:
                if comp[w] == -1:
                    comp[w] = len(comps)
                    members.append(w)
                    stack2.append(w)
        comps.append(sorted(members))
    comps.sort(key=lambda c: c[0])
    return comps


# ---------------------------------------------------------------------------
# Perron root and the dimension value


def perron_root(M: np.ndarray, tol: float = 1e-13, cap: int | None = None) -> float:
    """Dominant eigenvalue of a nonnegative irreducible matrix.

    Power iteration on M + Id (primitive whenever M is irreducible) from
    the all-ones vector, certified by the min/max ratio bounds; falls back
    to a dense eigensolve if the bounds fail to close within the cap.
    """
    q = M.shape[0]
    if q == 1:
        return float(M[0, 0])
    cap = max(200, 10 * q * q) if cap is None else cap
    A = M + np.eye(q)
    v = np.ones(q)
    last = math.inf
    for _ in range(cap):
        w = A @ v
        r = w / v
        lo, hi = float(r.min()), float(r.max())
        if hi - lo <= tol * max(1.0, hi):
            return 0.5 * (lo + hi) - 1.0
        ray = float(v @ w) / float(v @ v)
        if abs(ray - last) < tol and hi - lo <= 1e-9 * max(1.0, hi):
            return ray - 1.0
        last = ray
        v = w / w.max()
    eig = np.linalg.eigvals(M)
    return float(np.max(np.abs(eig)))


def _alpha_from_spectral(sm: SpectralMatrix, tol: float) -> float:
    def rho(s: float) -> float:
        return perron_root(sm.at(s))

    r0 = rho(0.0)
    if r0 < 1.0 - 1e-12:
        raise ConvergenceFailure("spectral radius below 1 at s = 0")
    if r0 <= 1.0 + 1e-12:
        return 0.0
    hi = 1.0
    doublings = 0
    while rho(hi) >= 1.0:
        hi *= 2.0
        doublings += 1
        if doublings > 64:
            raise ConvergenceFailure("no upper bracket for the spectral root")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if rho(mid) >= 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def alpha(g: Gdifs, tol: float = 1e-12) -> float:
    """The unique s with dominant eigenvalue 1, by bisection; the spectral
    radius is strictly decreasing in s."""
    if not g.strongly_connected():
        raise NotStronglyConnected(f"{g.q} nodes, graph not strongly connected")
    return _alpha_from_spectral(g.spectral_matrix(), tol)


# ---------------------------------------------------------------------------
# determinant recursion for the fixed-point-breaking family


@dataclass(frozen=True)
class DetRecursion:
    """Determinant function of the family whose middle maps break at their
    own fixed points, parameterized by the ordered slope list.

    Slope i (1-based) belongs to node i of the associated graph: node 1 is
    the first map, nodes 2k-2 / 2k-1 are the left / right branches of
    middle map k, node 2m-2 is the last map.
    """

    slopes: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "slopes", tuple(float(s) for s in self.slopes))
        if len(self.slopes) < 4 or len(self.slopes) % 2:
            raise ValueError("need an even number of slopes, at least 4")
        if any(not (0.0 < s < 1.0) for s in self.slopes):
            raise ValueError("slopes must lie in (0, 1)")

    @property
    def m(self) -> int:
        return len(self.slopes) // 2 + 1

    def incidence(self) -> np.ndarray:
        """0/1 connectivity: outer rows full, a left branch reaches the
        nodes up to itself, a right branch the nodes from itself on."""
        q = len(self.slopes)
        A = np.zeros((q, q), dtype=int)
        A[0, :] = 1
        A[q - 1, :] = 1
        for k in range(2, self.m):
            A[2 * k - 3, : 2 * k - 2] = 1  # left branch, 1-based row 2k-2
            A[2 * k - 2, 2 * k - 2 :] = 1  # right branch, 1-based row 2k-1
        return A

    def spectral(self, s: float) -> np.ndarray:
        u = np.array(self.slopes) ** s
        return self.incidence() * u[:, None]

    def matrix(self, s: float) -> np.ndarray:
        """The spectral matrix minus the identity; its determinant is the
        determinant function evaluated at s."""
        return self.spectral(s) - np.eye(len(self.slopes))

    def q_and_minors(self, s: float) -> tuple[float, list[float]]:
        """Value of the determinant function together with the bordered
        minors of the current size, built bottom-up from the 2 x 2 block.

        Each growth step expands by the second row from below; a bordered
        minor erases one column and appends the top of the next size's
        last column.
        """
        u = [sl**s for sl in self.slopes]
        q = 1.0 - u[0] - u[1]
        minors = [u[0] * (1.0 - u[1]), -u[0] * u[1]]
        size = 2
        while size < len(self.slopes):
            w, v = u[size], u[size + 1]
            alt = sum((-1) ** (i + 1) * minors[i] for i in range(size))
            q_next = (1.0 - v - w) * q + v * alt
            next_minors = [(1.0 - v) * mi for mi in minors]
            next_minors.append(w * (1.0 - v) * q)
            next_minors.append(v * (alt - w * q))
            q, minors, size = q_next, next_minors, size + 2
        return q, minors


def q_recursion(d: DetRecursion, s: float) -> float:
    """Determinant function via the two-row recursion (no dense matrix)."""
    return d.q_and_minors(s)[0]


def q_root(d: DetRecursion, tol: float = 1e-12) -> float:
    """The determinant root that coincides with the spectral crossing.

    The determinant vanishes at s = 0 as well, so the root is seeded from
    the spectral bisection and polished locally on the determinant.
    """
    sm_alpha = _alpha_from_spectral(_det_spectral_matrix(d), tol)
    root = _polish_on_q(d, sm_alpha)
    if abs(perron_root(d.spectral(root)) - 1.0) > 1e-10:
        raise RootMismatch(
            f"determinant root {root} does not restore spectral radius 1"
        )
    return root


def _det_spectral_matrix(d: DetRecursion) -> SpectralMatrix:
    A = d.incidence()
    src, dst = np.nonzero(A)
    ratios = np.array([d.slopes[i] for i in src])
    return SpectralMatrix(q=len(d.slopes), src=src, dst=dst, ratios=ratios)


def _polish_on_q(d: DetRecursion, seed: float) -> float:
    qv = lambda s: q_recursion(d, s)
    if qv(seed) == 0.0:
        return seed
    eps = 1e-9
    while eps <= 1e-3:
        a, b = max(seed - eps, 1e-15), seed + eps
        fa, fb = qv(a), qv(b)
        if fa == 0.0:
            return a
        if fb == 0.0:
            return b
        if fa * fb < 0.0:
            for _ in range(80):
                mid = 0.5 * (a + b)
                fm = qv(mid)
                if fm == 0.0:
                    return mid
                if fa * fm < 0.0:
                    b = mid
                else:
                    a, fa = mid, fm
            return 0.5 * (a + b)
        eps *= 4.0
    if abs(qv(seed)) < 1e-12:
        return seed
    raise RootMismatch(f"no determinant sign change near spectral root {seed}")


# ---------------------------------------------------------------------------
# the fixed-point-breaking family


@dataclass(frozen=True)
class FixedPointFamily:
    system: Cplifs
    graph: Gdifs
    det: DetRecursion


def build_fixed_point_family(
    slopes: Sequence[float], fixed_points: Sequence[float]
) -> FixedPointFamily:
    """Construct the m-map system whose middle maps break at their own
    fixed points, together with its associated graph.

    The first map fixes 0 with the first slope, the last fixes 1 with the
    final slope, and middle map k breaks at its fixed point with slopes
    number 2k-2 and 2k-1 (1-based).  First cylinders must be
    pairwise disjoint.
    """
    from .core import PLMap  # local to avoid a wide import list above

    det = DetRecursion(tuple(slopes))
    m = det.m
    phis = tuple(float(p) for p in fixed_points)
    if len(phis) != m - 2:
        raise BadFixedPointOrder(f"need {m - 2} interior fixed points, got {len(phis)}")
    full = (0.0,) + phis + (1.0,)
    if any(b <= a for a, b in zip(full, full[1:])):
        raise BadFixedPointOrder("fixed points must satisfy 0 < phi_2 < ... < 1")

    rho = det.slopes
    maps = [PLMap(breaks=(), slopes=(rho[0],), tau=0.0)]
    for k in range(2, m):
        left, right = rho[2 * k - 3], rho[2 * k - 2]  # 1-based rho_{2k-2}, rho_{2k-1}
        phi = full[k - 1]
        maps.append(
            PLMap(breaks=(phi,), slopes=(left, right), tau=phi * (1.0 - left))
        )
    maps.append(PLMap(breaks=(), slopes=(rho[-1],), tau=1.0 - rho[-1]))
    system = Cplifs(maps=tuple(maps))

    iosc = check_iosc(system)
    if not iosc.ok:
        raise IoscViolated(
            f"first cylinders overlap (pairs {iosc.touching_pairs}); "
            "the family construction requires disjoint first cylinders"
        )

    nodes = []
    offsets = []
    cyl = iosc.first_cylinders
    nodes.append(GdifsNode(word=(1,), side=None, hull=cyl[0]))
    offsets.append(0.0)
    for k in range(2, m):
        phi = full[k - 1]
        lo, hi = cyl[k - 1]
        nodes.append(GdifsNode(word=(k,), side="left", hull=(lo, phi)))
        offsets.append(phi * (1.0 - rho[2 * k - 3]))
        nodes.append(GdifsNode(word=(k,), side="right", hull=(phi, hi)))
        offsets.append(phi * (1.0 - rho[2 * k - 2]))
    nodes.append(GdifsNode(word=(m,), side=None, hull=cyl[m - 1]))
    offsets.append(1.0 - rho[-1])

    tol = 1e-12
    edges = []
    for i, node in enumerate(nodes):
        for j, tgt in enumerate(nodes):
            if node.side == "left" and tgt.hull[1] > node.hull[1] + tol:
                continue
            if node.side == "right" and tgt.hull[0] < node.hull[0] - tol:
                continue
            edges.append(GdifsEdge(src=i, dst=j, ratio=rho[i], offset=offsets[i]))
    return FixedPointFamily(system=system, graph=Gdifs(tuple(nodes), tuple(edges)), det=det)


def detect_fixed_point_family(F: Cplifs) -> DetRecursion | None:
    """Recognize a system of the fixed-point-breaking shape and pull out
    its ordered slope list; None when the shape does not match."""
    if F.m < 3:
        return None
    maps = F.maps
    if any(any(s <= 0 for s in f.slopes) for f in maps):
        return None
    if maps[0].breaks or maps[-1].breaks:
        return None
    if any(len(f.breaks) != 1 for f in maps[1:-1]):
        return None
    tol = F.geom_tol()
    if abs(maps[0].fixed_point() - 0.0) > tol or abs(maps[-1].fixed_point() - 1.0) > tol:
        return None
    phis = []
    for f in maps[1:-1]:
        if abs(f(f.breaks[0]) - f.breaks[0]) > tol:
            return None
        phis.append(f.breaks[0])
    if any(b <= a for a, b in zip([0.0] + phis, phis + [1.0])):
        return None
    if not check_iosc(F).ok:
        return None
    slopes = [maps[0].slopes[0]]
    for f in maps[1:-1]:
        slopes.extend(f.slopes)
    slopes.append(maps[-1].slopes[0])
    return DetRecursion(tuple(slopes))


# ---------------------------------------------------------------------------
# association from periodic breaking-point codes


def _lcm(values: Sequence[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


def _refine_contains(
    F: Cplifs, w: Word, x: float, depth: int, tol: float, budget: int
) -> bool:
    """Whether x can still lie in the attractor piece of w after `depth`
    levels of cylinder refinement (False certifies it does not)."""
    frontier = [w]
    for _ in range(depth):
        nxt = []
        for word in frontier:
            for k in range(1, F.m + 1):
                ww = word + (k,)
                a, b = cylinder_interval(F, ww)
                if a - tol <= x <= b + tol:
                    nxt.append(ww)
        if len(nxt) * F.m > budget:
            raise BudgetExceeded(len(nxt) * F.m, budget, "refinement frontier")
        frontier = nxt
        if not frontier:
            return False
    return True


def associate_from_periodic(
    F: Cplifs,
    codes: Sequence[BreakCode] = (),
    refine_depth: int = 12,
    budget: int = DEFAULT_BUDGET,
) -> Gdifs:
    """Associate a self-similar graph system with F, given verified
    periodic codes for the on-attractor breaking points.

    Nodes are the cylinders at the level P = lcm of the code periods; a
    cylinder whose interior holds a coded breaking point is cut at that
    point (the fixed point of its composition) into a left and a right
    half.  There is an edge (A, A') exactly when f_{word(A)} maps the
    piece A' into A; for an uncut A this always holds, for halves it is an
    order comparison against the cut point when the maps are monotone and
    a certified refinement test otherwise.
    """
    tol = F.geom_tol()
    verified: list[BreakCode] = []
    for c in codes:
        chk = verify_breaking_code(F, c.point, c.prefix, c.period)
        if not chk.ok:
            raise UnverifiedCode(
                f"code for {c.point} failed: period residual {chk.residual_period:.3g}, "
                f"prefix residual {chk.residual_prefix:.3g}, "
                f"containment {'ok' if chk.containment_ok else 'failed'}"
            )
        verified.append(c)

    P = _lcm([len(c.period) for c in verified]) if verified else 1
    cyl = cylinders(F, P, budget)

    # Cut words: level-P prefixes of purely periodic codes, when the coded
    # point is interior to the cylinder interval.  Every rotation of a code
    # is cut as well: the shift orbit of a coded breaking point consists of
    # periodic points whose cylinders would otherwise hide a slope change
    # of a composed edge map in their interior.
    cuts: dict[Word, float] = {}
    for c in verified:
        if not c.purely_periodic:
            continue
        p = len(c.period)
        for r in range(p):
            rot = c.period[r:] + c.period[:r]
            phi = c.point if r == 0 else periodic_point(F, rot)
            w = rot * (P // p)
            lo, hi = cyl[w]
            if lo + tol < phi < hi - tol:
                prev = cuts.get(w)
                if prev is not None and abs(prev - phi) > tol:
                    raise AmbiguousContainment(
                        f"two distinct cut points for cylinder {word_str(w)}"
                    )
                cuts.setdefault(w, phi)

    # every other interval containment of a breaking point must either be
    # certified spurious or the construction does not apply
    for _, b in F.breaking_points():
        bcodes = [c for c in verified if abs(c.point - b) <= tol]
        for w, (lo, hi) in cyl.items():
            if not (lo + tol < b < hi - tol):
                continue
            if w in cuts and abs(cuts[w] - b) <= tol:
                continue
            if any(
                c.purely_periodic and c.period * (P // len(c.period)) == w
                for c in bcodes
            ):
                continue
            if _refine_contains(F, w, b, refine_depth, tol, budget):
                if bcodes and all(not c.purely_periodic for c in bcodes):
                    raise NonPeriodicCode(
                        f"breaking point {b} sits inside cylinder {word_str(w)} and "
                        "carries only an eventually periodic code"
                    )
                if not bcodes:
                    raise UnverifiedCode(
                        f"breaking point {b} appears to lie on the attractor "
                        f"(cylinder {word_str(w)}) but has no code"
                    )
                raise AmbiguousContainment(
                    f"cannot certify that {b} avoids the piece of {word_str(w)} "
                    f"at refinement depth {refine_depth}"
                )

    nodes: list[GdifsNode] = []
    for w in sorted(cyl.words()):
        lo, hi = cyl[w]
        if w in cuts:
            phi = cuts[w]
            nodes.append(GdifsNode(word=w, side="left", hull=(lo, phi)))
            nodes.append(GdifsNode(word=w, side="right", hull=(phi, hi)))
        else:
            nodes.append(GdifsNode(word=w, side=None, hull=(lo, hi)))

    injective = all(f.is_injective() for f in F.maps)
    signs = {k: (1.0 if F.map(k).slopes[0] > 0 else -1.0) for k in range(1, F.m + 1)}

    edges: list[GdifsEdge] = []
    for i, node in enumerate(nodes):
        phi = cuts.get(node.word)
        increasing = math.prod(signs[k] for k in node.word) > 0
        for j, tgt in enumerate(nodes):
            if node.side is not None:
                want_low = (node.side == "left") == increasing
                if injective:
                    # monotone composition: compare the target hull with the
                    # cut point, which the composition fixes
                    if want_low:
                        if tgt.hull[1] > phi + tol:
                            continue
                    else:
                        if tgt.hull[0] < phi - tol:
                            continue
                else:
                    verdict = _certify_side(
                        F, node.word, tgt, phi, want_low, refine_depth, tol, budget
                    )
                    if verdict is None:
                        raise AmbiguousContainment(
                            f"edge {node.label} -> {tgt.label} undecidable at "
                            f"refinement depth {refine_depth}"
                        )
                    if not verdict:
                        continue
            sim = affine_restriction(F, node.word, tgt.hull, tol)
            edges.append(GdifsEdge(src=i, dst=j, ratio=sim.ratio, offset=sim.offset))
    return Gdifs(nodes=tuple(nodes), edges=tuple(edges))


def _certify_side(
    F: Cplifs,
    w: Word,
    tgt: GdifsNode,
    phi: float,
    want_low: bool,
    depth: int,
    tol: float,
    budget: int,
) -> bool | None:
    """Certify f_w(piece of tgt) on one side of phi via refined cylinder
    covers of the target piece; None when undecidable at this depth."""

    def fw_image(iv: Interval) -> Interval:
        for k in w[::-1]:
            iv = image_interval(F.map(k), iv)
        return iv

    lo, hi = fw_image(tgt.hull)
    if want_low and hi <= phi + tol:
        return True
    if not want_low and lo >= phi - tol:
        return True
    if want_low and lo > phi + tol:
        return False
    if not want_low and hi < phi - tol:
        return False

    # refine the target piece by deeper cylinders clipped to its hull
    frontier = [tgt.word]
    for _ in range(depth):
        nxt = []
        for word in frontier:
            for k in range(1, F.m + 1):
                ww = word + (k,)
                a, b = cylinder_interval(F, ww)
                a, b = max(a, tgt.hull[0]), min(b, tgt.hull[1])
                if a > b:
                    continue
                nxt.append(ww)
        if len(nxt) * F.m > budget:
            raise BudgetExceeded(len(nxt) * F.m, budget, "certification frontier")
        frontier = nxt
        if not frontier:
            return False
        decided_in = True
        for word in frontier:
            a, b = cylinder_interval(F, word)
            a, b = max(a, tgt.hull[0]), min(b, tgt.hull[1])
            ia, ib = fw_image((a, b))
            inside = (ib <= phi + tol) if want_low else (ia >= phi - tol)
            if not inside:
                decided_in = False
                break
        if decided_in:
            return True
    return None


# ---------------------------------------------------------------------------
# punctured approximation


@dataclass(frozen=True)
class PuncturedLevel:
    level: int
    value: float
    kept: int
    dropped: tuple[Word, ...]
    scc_size: int
    whole_graph_strongly_connected: bool
    graph: Gdifs


def punctured_level(F: Cplifs, k: int, budget: int = DEFAULT_BUDGET) -> PuncturedLevel:
    """Drop the level-k cylinders whose closed interval contains a breaking
    point, connect the rest by the one-step shift on words, and take the
    dimension of the largest strongly connected piece."""
    if k < 2:
        raise ValueError("punctured approximation needs level k >= 2")
    if any(not f.is_injective() for f in F.maps):
        raise ValueError("punctured approximation requires injective maps")
    iosc = check_iosc(F)
    if not iosc.ok:
        raise IoscViolated("punctured approximation requires disjoint first cylinders")
    tol = F.geom_tol()
    cyl = cylinders(F, k, budget)
    points = sorted({b for _, b in F.breaking_points()})
    kept: list[Word] = []
    dropped: list[Word] = []
    for w, (lo, hi) in cyl.items():
        if any(lo - tol <= b <= hi + tol for b in points):
            dropped.append(w)
        else:
            kept.append(w)
    if not kept:
        raise EmptyGraph(f"all level-{k} cylinders contain breaking points")

    index = {w: i for i, w in enumerate(kept)}
    adj: list[list[int]] = [[] for _ in kept]
    sims: dict[tuple[int, int], AffineMap] = {}
    for w in kept:
        i = index[w]
        f = F.map(w[0])
        for b in range(1, F.m + 1):
            w2 = w[1:] + (b,)
            j = index.get(w2)
            if j is None:
                continue
            piece = f.piece_over(cyl[w2], tol)
            if piece is None:
                raise AmbiguousContainment(
                    f"map {w[0]} breaks inside kept cylinder {word_str(w2)}"
                )
            adj[i].append(j)
            sims[(i, j)] = f.piece_affine(piece)

    comps = strongly_connected_components(len(kept), adj)
    whole = len(comps) == 1
    best: list[int] = []
    for members in comps:
        mset = set(members)
        has_edge = any(j in mset for i in members for j in adj[i])
        if has_edge and len(members) > len(best):
            best = members
    if not best:
        raise EmptyGraph(f"level-{k} punctured graph has no cycles")
    if len(best) > 4096:
        raise BudgetExceeded(len(best) ** 2, 4096**2, "dense spectral matrix entries")

    remap = {u: i for i, u in enumerate(best)}
    nodes = tuple(
        GdifsNode(word=kept[u], side=None, hull=cyl[kept[u]]) for u in best
    )
    edges = tuple(
        GdifsEdge(src=remap[i], dst=remap[j], ratio=sims[(i, j)].ratio,
                  offset=sims[(i, j)].offset)
        for (i, j) in sims
        if i in remap and j in remap
    )
    graph = Gdifs(nodes=nodes, edges=edges)
    return PuncturedLevel(
        level=k,
        value=alpha(graph),
        kept=len(kept),
        dropped=tuple(sorted(dropped)),
        scc_size=len(best),
        whole_graph_strongly_connected=whole,
        graph=graph,
    )


def punctured_dimension(F: Cplifs, k: int, budget: int = DEFAULT_BUDGET) -> float:
    return punctured_level(F, k, budget).value


# ---------------------------------------------------------------------------
# finite-depth separation diagnostic


@dataclass(frozen=True)
class EscReport:
    """Minimal distance between distinct n-fold compositions.

    A finite-depth diagnostic only: no finite level proves the exponential
    separation property.
    """

    level: int
    delta: float
    delta_root: float
    compositions: int


def esc_diagnostic(
    sims: Sequence[GeneratedSimilarity | AffineMap | tuple[float, float]],
    n: int,
    budget: int = DEFAULT_BUDGET,
) -> EscReport:
    """Delta_n = min over distinct composition pairs of the similarity
    distance: infinite when the ratios differ, the offset gap otherwise."""
    if n < 1:
        raise ValueError("level must be >= 1")
    pairs = []
    for s in sims:
        if isinstance(s, GeneratedSimilarity):
            pairs.append((s.ratio, s.offset))
        elif isinstance(s, AffineMap):
            pairs.append((s.ratio, s.offset))
        else:
            r, t = s
            pairs.append((float(r), float(t)))
    M = len(pairs)
    if M == 0:
        raise ValueError("need at least one similarity")
    if M**n > budget:
        raise BudgetExceeded(M**n, budget, "compositions")
    base_r = np.array([r for r, _ in pairs])
    base_t = np.array([t for _, t in pairs])
    r = np.array([1.0])
    t = np.array([0.0])
    for _ in range(n):
        r, t = (
            np.concatenate([rk * r for rk in base_r]),
            np.concatenate([rk * t + tk for rk, tk in pairs]),
        )
    order = np.lexsort((t, r))
    r, t = r[order], t[order]
    same = np.isclose(r[1:], r[:-1], rtol=1e-12, atol=0.0)
    if not same.any():
        delta = math.inf
    else:
        delta = float(np.min(np.abs(t[1:] - t[:-1])[same]))
    root = delta ** (1.0 / n) if math.isfinite(delta) and delta > 0 else delta
    return EscReport(level=n, delta=delta, delta_root=root, compositions=int(M**n))


# ---------------------------------------------------------------------------
# aggregate report


@dataclass(frozen=True)
class DimConfig:
    n_min: int = 6
    n_max: int = 11
    window: int = 3
    punctured_k: int = 6
    box_samples: int = 200_000
    box_scales: tuple[float, ...] | None = None
    seed: int = 20240801
    codes: tuple[BreakCode, ...] | None = None
    reg_depth: int = 10
    budget: int = DEFAULT_BUDGET
    box_tolerance: float = 0.05
    agreement_tol: float = 5e-2


@dataclass(frozen=True)
class MethodEstimate:
    method: str
    value: float | None
    detail: str = ""
    error: str | None = None


@dataclass(frozen=True)
class DimReport:
    estimates: tuple[MethodEstimate, ...]
    flags: tuple[str, ...]
    consistent: bool

    def value(self, method: str) -> float | None:
        for e in self.estimates:
            if e.method == method:
                return e.value
        return None


def auto_codes(F: Cplifs) -> tuple[BreakCode, ...]:
    """Detect short codes for breaking points: a point fixed by its own
    map, or the one-step image of some map's fixed point."""
    tol = max(F.geom_tol(), 1e-11)
    out = []
    seen = set()
    for _, b in F.breaking_points():
        if b in seen:
            continue
        seen.add(b)
        found = None
        for k in range(1, F.m + 1):
            if abs(F.map(k)(b) - b) <= tol:
                found = BreakCode(point=b, prefix=(), period=(k,))
                break
        if found is None:
            for i in range(1, F.m + 1):
                for j in range(1, F.m + 1):
                    y = F.map(j).fixed_point()
                    if abs(F.map(i)(y) - b) <= tol:
                        found = BreakCode(point=b, prefix=(i,), period=(j,))
                        break
                if found:
                    break
        if found is not None and verify_breaking_code(F, found.point, found.prefix, found.period).ok:
            out.append(found)
    return tuple(out)


def dim_report(F: Cplifs, config: DimConfig = DimConfig()) -> DimReport:
    """Run every applicable dimension method; per-method failures are
    recorded rather than raised."""
    estimates: list[MethodEstimate] = []

    natural_value = None
    try:
        est = natural_dimension(F, config.n_min, config.n_max, config.window, config.budget)
        natural_value = est.estimate
        estimates.append(
            MethodEstimate(
                method="natural",
                value=est.estimate,
                detail=f"s_n over n={config.n_min}..{config.n_max}, tail spread {est.spread:.2e}",
            )
        )
    except Exception as exc:
        estimates.append(MethodEstimate("natural", None, error=f"{type(exc).__name__}: {exc}"))

    gdifs_value = None
    try:
        codes = config.codes if config.codes is not None else auto_codes(F)
        g = associate_from_periodic(F, codes, budget=config.budget)
        gdifs_value = alpha(g)
        estimates.append(
            MethodEstimate(
                method="gdifs",
                value=gdifs_value,
                detail=f"{g.q} nodes, {len(g.edges)} edges, {len(codes)} codes",
            )
        )
    except Exception as exc:
        estimates.append(MethodEstimate("gdifs", None, error=f"{type(exc).__name__}: {exc}"))

    punctured_value = None
    try:
        pl = punctured_level(F, config.punctured_k, config.budget)
        punctured_value = pl.value
        estimates.append(
            MethodEstimate(
                method="punctured",
                value=pl.value,
                detail=(
                    f"level {pl.level}, kept {pl.kept}, dropped {len(pl.dropped)}, "
                    f"scc {pl.scc_size}"
                ),
            )
        )
    except Exception as exc:
        estimates.append(MethodEstimate("punctured", None, error=f"{type(exc).__name__}: {exc}"))

    det_value = None
    det = detect_fixed_point_family(F)
    if det is not None:
        try:
            det_value = q_root(det)
            estimates.append(
                MethodEstimate("determinant", det_value, detail=f"slopes {det.slopes}")
            )
        except Exception as exc:
            estimates.append(
                MethodEstimate("determinant", None, error=f"{type(exc).__name__}: {exc}")
            )
    else:
        estimates.append(
            MethodEstimate("determinant", None, error="not a fixed-point-breaking family")
        )

    box_value = None
    try:
        cloud = oracle.chaos_game(F, config.box_samples, seed=config.seed)
        scales = config.box_scales
        if scales is None:
            lo, hi = invariant_interval(F)
            width = max(hi - lo, 1e-9)
            scales = tuple(width * (3.0**-j) for j in range(2, 10))
        fit = oracle.box_dimension(cloud, scales)
        box_value = fit.slope
        estimates.append(
            MethodEstimate(
                method="box",
                value=fit.slope,
                detail=f"{config.box_samples} samples, residual {fit.residual:.2e}",
            )
        )
    except Exception as exc:
        estimates.append(MethodEstimate("box", None, error=f"{type(exc).__name__}: {exc}"))

    flags: list[str] = []
    consistent = True
    dims = {}
    if natural_value is not None:
        dims["natural"] = natural_value
    if gdifs_value is not None:
        dims["gdifs"] = min(1.0, gdifs_value)
    if det_value is not None:
        dims["determinant"] = min(1.0, det_value)
    names = sorted(dims)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            d = abs(dims[names[a]] - dims[names[b]])
            ok = d <= config.agreement_tol
            consistent &= ok
            flags.append(f"{names[a]} vs {names[b]}: |diff| = {d:.3e} ({'ok' if ok else 'DISAGREE'})")
    if punctured_value is not None and gdifs_value is not None:
        ok = punctured_value <= min(1.0, gdifs_value) + 1e-6
        consistent &= ok
        flags.append(
            f"punctured <= gdifs: {punctured_value:.8f} <= {min(1.0, gdifs_value):.8f} "
            f"({'ok' if ok else 'VIOLATED'})"
        )
    if box_value is not None and dims:
        ref = min(1.0, max(dims.values()))
        ok = box_value <= ref + config.box_tolerance
        consistent &= ok
        flags.append(
            f"box <= min(1, dim) + {config.box_tolerance}: {box_value:.4f} vs {ref:.4f} "
            f"({'ok' if ok else 'VIOLATED'})"
        )
    return DimReport(estimates=tuple(estimates), flags=tuple(flags), consistent=consistent)
