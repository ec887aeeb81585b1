"""Stochastic walk processes tied to the contraction machinery.

* the loop-contracting random walk (uniform step on the evolving
  contracted graph, closing loops fold into a supervertex);
* exact and Monte Carlo escape probabilities on glued trees;
* the loop-erased random walk under Boltzmann conductances, whose erased
  edges sandwich the contracted ones as the inverse temperature grows;
* invasion percolation and its step-by-step match with the walk on
  symmetric weights.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    PreconditionViolatedError,
    SingularSystemError,
    StepCapReachedError,
    TieDetectedError,
)
from .graph import (
    ContractionStack,
    DirectedMultigraph,
    EdgeId,
    VertexId,
    build_graph,
)
from .util import derive
from .weights import WeightAssignment

HIT_BOUNDARY = "hit_boundary"
HIT_START = "hit_start"
STEP_CAP = "step_cap_reached"


@dataclass
class LcrwStep:
    event: str  # "extend" | "contract" | "hit_boundary"
    edge: EdgeId
    path_len: int          # live path edges after the step
    cycle_len: int = 0     # contracted cycle length (0 unless contracting)


@dataclass
class LcrwTrace:
    """Per-step log of one loop-contracting random walk."""

    start: VertexId
    steps: list[LcrwStep]
    terminal: str
    exposed: list[EdgeId] = field(default_factory=list)

    def path_len_series(self) -> list[int]:
        return [s.path_len for s in self.steps]

    def returns_to_empty(self) -> int:
        return sum(1 for s in self.steps if s.path_len == 0)

    def max_path_len(self) -> int:
        return max((s.path_len for s in self.steps), default=0)

    def increments(self) -> list[int]:
        out = []
        prev = 0
        for s in self.steps:
            out.append(s.path_len - prev)
            prev = s.path_len
        return out

    def fair_step_counts(self) -> tuple[int, int]:
        """(up, down) counts over steps taken from a non-empty live path.

        From an empty path every outgoing edge extends, so the +1 there is
        forced; the fair-coin behaviour of the path length on the line is
        a statement about the remaining steps.
        """
        up = down = 0
        prev = 0
        for s in self.steps:
            if prev > 0:
                if s.path_len > prev:
                    up += 1
                elif s.path_len < prev:
                    down += 1
            prev = s.path_len
        return up, down

    def write_csv(self, path, positions: Sequence[tuple[int, int]] | None = None) -> None:
        """CSV trace: step,event,path_len,cycle_len[,x,y]."""
        with open(path, "w") as fh:
            header = "step,event,path_len,cycle_len"
            if positions is not None:
                header += ",x,y"
            fh.write(header + "\n")
            for i, s in enumerate(self.steps, 1):
                row = f"{i},{s.event},{s.path_len},{s.cycle_len}"
                if positions is not None:
                    x, y = positions[i - 1]
                    row += f",{x},{y}"
                fh.write(row + "\n")


def lcrw_run(graph: DirectedMultigraph, start: VertexId, step_cap: int,
             seed: int, *, boundary: set[VertexId] | None = None,
             stop_at_start: bool = False,
             track_heads: bool = False) -> tuple[LcrwTrace, list[VertexId]]:
    """Uniform walk on the evolving contracted graph, folding closed loops.

    Each step picks uniformly among the live outgoing edges of the current
    supervertex.  A head landing on the live path contracts the loop; a
    head in the boundary ends the walk; reaching the cap is an outcome.
    With ``stop_at_start`` the walk also ends (terminal ``hit_start``) when
    an edge points back at the start vertex, which stays uncontracted
    until then.

    Returns the trace plus (when ``track_heads``) the base-graph head of
    each step's edge, for lattice drawings.
    """
    stack = ContractionStack(graph, allow_compaction=True)
    rng = random.Random(derive(seed, "lcrw"))
    stop = {stack.resolve(b) for b in (boundary if boundary is not None else graph.boundary)}
    current = stack.resolve(start)
    path_vertices = [current]
    pos = {current: 0}
    path_edges: list[EdgeId] = []
    steps: list[LcrwStep] = []
    heads: list[VertexId] = []
    exposed: list[EdgeId] = []
    terminal = STEP_CAP
    while len(steps) < step_cap:
        out = stack.out_edges(current)
        if not out:
            raise PreconditionViolatedError(f"supervertex {current} has no outgoing edge")
        edge = out[rng.randrange(len(out))]
        exposed.append(edge)
        if track_heads:
            heads.append(graph.heads[edge])
        h = stack.head(edge)
        if h in stop:
            steps.append(LcrwStep("hit_boundary", edge, len(path_edges) + 1))
            terminal = HIT_BOUNDARY
            break
        if stop_at_start and h == path_vertices[0]:
            steps.append(LcrwStep("hit_start", edge, 0))
            terminal = HIT_START
            break
        j = pos.get(h)
        if j is None:
            path_vertices.append(h)
            pos[h] = len(path_vertices) - 1
            path_edges.append(edge)
            steps.append(LcrwStep("extend", edge, len(path_edges)))
            current = h
        else:
            cycle = path_edges[j:] + [edge]
            record = stack.contract_cycle(cycle)
            for v in path_vertices[j:]:
                del pos[v]
            del path_vertices[j:]
            del path_edges[j:]
            vc = record.supervertex
            path_vertices.append(vc)
            pos[vc] = j
            steps.append(LcrwStep("contract", edge, len(path_edges), cycle_len=len(cycle)))
            current = vc
    return LcrwTrace(start=start, steps=steps, terminal=terminal, exposed=exposed), heads


# -- glued trees and escape probabilities -------------------------------


def glued_tree(depth: int, arities: Sequence[int] | int) -> DirectedMultigraph:
    """Full rooted tree with all depth-`depth` leaves glued into the boundary.

    ``arities`` gives the branching per level (an int for uniform
    branching).  Vertices are numbered in BFS order from the root (id 1);
    the glued boundary vertex is 0.  Both orientations of every tree edge
    are present, so the unoriented walk degree matches the tree.
    """
    if isinstance(arities, int):
        arities = [arities] * depth
    if len(arities) != depth:
        raise PreconditionViolatedError("need one arity per level")
    vertices = [0, 1]
    edges: list[tuple[int, int]] = []
    level = [1]
    next_id = 2
    for d in range(depth):
        new_level = []
        for parent in level:
            for _ in range(arities[d]):
                if d == depth - 1:
                    edges.append((parent, 0))
                    edges.append((0, parent))
                else:
                    child = next_id
                    next_id += 1
                    vertices.append(child)
                    new_level.append(child)
                    edges.append((parent, child))
                    edges.append((child, parent))
        level = new_level
    return build_graph(vertices, [0], edges)


def srw_escape_exact(tree: DirectedMultigraph, v: VertexId) -> float:
    """P(simple random walk from v hits the boundary before returning to v).

    Solves the harmonic system for h(x) = P_x(boundary before v) over the
    non-boundary vertices, then averages h over v's out-neighbours.
    """
    if v in tree.boundary:
        raise PreconditionViolatedError("start vertex is on the boundary")
    inner = [x for x in tree.vertices if x not in tree.boundary and x != v]
    index = {x: i for i, x in enumerate(inner)}
    n = len(inner)
    a = np.zeros((n, n))
    b = np.zeros(n)
    for i, x in enumerate(inner):
        out = tree.out_edges(x)
        deg = len(out)
        if deg == 0:
            raise SingularSystemError(f"vertex {x} is isolated")
        a[i, i] = deg
        for e in out:
            h = tree.heads[e]
            if h in tree.boundary:
                b[i] += 1.0
            elif h != v:
                a[i, index[h]] -= 1.0
    if n:
        try:
            sol = np.linalg.solve(a, b)
        except np.linalg.LinAlgError as err:
            raise SingularSystemError(str(err)) from err
    else:
        sol = np.zeros(0)
    out = tree.out_edges(v)
    total = 0.0
    for e in out:
        h = tree.heads[e]
        if h in tree.boundary:
            total += 1.0
        else:
            total += sol[index[h]]
    return total / len(out)


def lcrw_escape_mc(tree: DirectedMultigraph, v: VertexId, trials: int,
                   seed: int) -> tuple[float, float]:
    """Monte Carlo P(loop-contracting walk from v escapes before returning).

    Specialized to glued trees: every loop is a backtrack into the previous
    path cluster, so the evolving graph is tracked as a path of clusters
    with per-cluster tallies of boundary edges and unvisited subtrees.
    Returns (estimate, stderr).
    """
    if v in tree.boundary:
        raise PreconditionViolatedError("start vertex is on the boundary")
    boundary = tree.boundary
    nbrs: dict[VertexId, list[VertexId]] = {}
    bnd_count: dict[VertexId, int] = {}
    for x in tree.vertices:
        if x in boundary:
            continue
        ns = []
        nb = 0
        for e in tree.out_edges(x):
            h = tree.heads[e]
            if h in boundary:
                nb += 1
            else:
                ns.append(h)
        nbrs[x] = ns
        bnd_count[x] = nb
    # unique neighbour of each internal vertex on its tree path toward v;
    # the walk only ever enters a fresh vertex through this edge
    toward_v: dict[VertexId, VertexId] = {v: v}
    queue = [v]
    while queue:
        x = queue.pop()
        for y in nbrs[x]:
            if y not in toward_v:
                toward_v[y] = x
                queue.append(y)
    fresh_dang = {x: [c for c in nbrs[x] if c != toward_v[x]] for x in nbrs}
    rng = random.Random(derive(seed, "escape", v))
    rand = rng.random
    hits = 0
    nbrs_v = nbrs[v]
    bnd_v = bnd_count[v]
    deg_v = bnd_v + len(nbrs_v)
    for _ in range(trials):
        # step out of v
        r = int(rand() * deg_v)
        if r < bnd_v:
            hits += 1
            continue
        first = nbrs_v[r - bnd_v]
        # path of clusters beyond v: (boundary-edge tally, dangling subtree
        # roots); each cluster keeps exactly one edge back to its
        # predecessor, so every loop is a backtrack that dissolves the top
        # cluster into the one below
        stack_bnd = [bnd_count[first]]
        stack_dang = [list(fresh_dang[first])]
        escaped = None
        while escaped is None:
            nb = stack_bnd[-1]
            dang = stack_dang[-1]
            total = 1 + nb + len(dang)
            r = int(rand() * total)
            if r == 0:
                if len(stack_bnd) == 1:
                    escaped = False
                else:
                    stack_bnd[-2] += nb
                    stack_dang[-2].extend(dang)
                    stack_bnd.pop()
                    stack_dang.pop()
            elif r <= nb:
                escaped = True
            else:
                idx = r - 1 - nb
                child = dang[idx]
                dang[idx] = dang[-1]
                dang.pop()
                stack_bnd.append(bnd_count[child])
                stack_dang.append(list(fresh_dang[child]))
        if escaped:
            hits += 1
    p = hits / trials
    return p, math.sqrt(p * (1 - p) / trials)


# -- loop-erased random walk under Boltzmann conductances ----------------


@dataclass
class LerwRun:
    """One loop-erased walk: final branch, erased edges, and the cut at the
    last visit to the start vertex."""

    branch: list[EdgeId]
    erased: set[EdgeId]
    erased_before_leaving_start: set[EdgeId]
    steps: int


def wilson_lerw(graph: DirectedMultigraph, conductances: WeightAssignment,
                start: VertexId, seed: int, step_cap: int = 100_000,
                *, boundary: set[VertexId] | None = None) -> LerwRun:
    """Loop-erased random walk from start to the boundary.

    Transition probabilities are proportional to the conductances over the
    tail's outgoing edges.  Cycles are erased chronologically; the erased
    set ignores multiplicity.  Raises StepCapReachedError past the cap.
    """
    stop = boundary if boundary is not None else set(graph.boundary)
    rng = random.Random(derive(seed, "lerw"))
    rand = rng.random
    cumulative: dict[VertexId, tuple[list[float], list[EdgeId]]] = {}

    def edge_from(x: VertexId) -> EdgeId:
        entry = cumulative.get(x)
        if entry is None:
            out = graph.out_edges(x)
            if not out:
                raise PreconditionViolatedError(f"vertex {x} has no outgoing edge")
            weights = []
            acc = 0.0
            for e in out:
                acc += float(conductances.base(e))
                weights.append(acc)
            if acc <= 0.0:
                raise PreconditionViolatedError(f"vertex {x} has zero total conductance")
            entry = (weights, list(out))
            cumulative[x] = entry
        weights, out = entry
        target = rand() * weights[-1]
        lo, hi = 0, len(weights) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if weights[mid] > target:
                hi = mid
            else:
                lo = mid + 1
        return out[lo]

    path: list[EdgeId] = []
    on_path: dict[VertexId, int] = {start: -1}
    erased_at: dict[EdgeId, int] = {}
    last_at_start = 0
    x = start
    for t in range(1, step_cap + 1):
        e = edge_from(x)
        h = graph.heads[e]
        if h in stop:
            path.append(e)
            branch = list(path)
            cut = last_at_start
            erased = set(erased_at)
            early = {edge for edge, when in erased_at.items() if when <= cut}
            return LerwRun(branch=branch, erased=erased,
                           erased_before_leaving_start=early, steps=t)
        j = on_path.get(h)
        if j is None:
            path.append(e)
            on_path[h] = len(path) - 1
            x = h
        else:
            for removed in path[j + 1:]:
                erased_at.setdefault(removed, t)
            erased_at.setdefault(e, t)
            for edge in path[j + 1:]:
                on_path.pop(graph.heads[edge], None)
            del path[j + 1:]
            x = h
        if x == start:
            last_at_start = t
    raise StepCapReachedError(f"loop-erased walk exceeded {step_cap} steps")


@dataclass
class ErasedEdgeReport:
    """Erased-versus-contracted comparison for one walk pair."""

    erased: frozenset[EdgeId]
    cleb_cycle_edges: frozenset[EdgeId]
    cleb_removed_edges: frozenset[EdgeId]
    sandwiched: bool


def first_epoch_contraction_sets(graph: DirectedMultigraph, assign: WeightAssignment,
                                 start: VertexId) -> tuple[frozenset[EdgeId], frozenset[EdgeId]]:
    """Cycle edges and all removed edges of the walk's first epoch.

    The first epoch ends the last time the walk's live path empties; its
    loops are exactly the contractions the deterministic walk performs
    before leaving the start vertex for good.
    """
    from .algorithms import HIT_BOUNDARY as WALK_HIT
    from .algorithms import cleb_walk

    record = cleb_walk(graph, assign, start)
    if record.terminal != WALK_HIT:
        raise StepCapReachedError("contracting walk hit the step cap")
    epoch = record.epochs()[0]
    cycle_edges: set[EdgeId] = set()
    removed: set[EdgeId] = set()
    for loop in epoch.loops:
        cycle_edges.update(loop.cycle)
        removed.update(loop.removed)
    return frozenset(cycle_edges), frozenset(removed)


@dataclass
class SandwichResult:
    beta: float
    trials: int
    successes: int
    capped: int

    @property
    def frequency(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        p = self.frequency
        return math.sqrt(p * (1 - p) / self.trials)


def wilson_sandwich_trial(graph: DirectedMultigraph, base_weights: dict[EdgeId, float],
                          start: VertexId, betas: Sequence[float], trials: int,
                          seed: int, step_cap: int = 100_000
                          ) -> tuple[list[SandwichResult], ErasedEdgeReport]:
    """Frequency, per beta, of the erased set landing between the two
    contraction sets of the deterministic walk on the same weights.

    Capped runs count as failures.  Also returns one representative report
    (largest beta, first trial) for inspection.
    """
    from .weights import BoltzmannConductance, Fixed

    assign = WeightAssignment(Fixed(dict(base_weights)), 0)
    lower, upper = first_epoch_contraction_sets(graph, assign, start)
    results = []
    sample_report: ErasedEdgeReport | None = None
    for beta in betas:
        conductances = WeightAssignment(BoltzmannConductance(base_weights, beta), 0)
        ok = 0
        capped = 0
        for i in range(trials):
            try:
                run = wilson_lerw(graph, conductances, start,
                                  derive(seed, "sandwich", int(beta * 1000), i),
                                  step_cap=step_cap)
            except StepCapReachedError:
                capped += 1
                continue
            erased = frozenset(run.erased_before_leaving_start)
            good = lower <= erased <= upper
            if good:
                ok += 1
            if sample_report is None:
                sample_report = ErasedEdgeReport(erased=erased, cleb_cycle_edges=lower,
                                                 cleb_removed_edges=upper, sandwiched=good)
        results.append(SandwichResult(beta=beta, trials=trials, successes=ok, capped=capped))
    assert sample_report is not None
    return results, sample_report


# -- distributional comparison of the two walk laws ----------------------


def lcrw_equals_cleb_check(graph: DirectedMultigraph, start: VertexId, trials: int,
                           seed: int, step_cap: int = 10_000
                           ) -> tuple[float, float, int]:
    """Total-variation distance between exposed-edge-sequence laws.

    Runs the uniform loop-contracting walk and the contracting walk under
    fresh Exponential(1) weights `trials` times each and compares the
    empirical distributions of the full exposed-edge sequence.  Returns
    (tv, stderr_scale, support); the natural pass bound is
    tv <= 3 * stderr_scale.
    """
    from .algorithms import cleb_walk
    from .weights import Exponential

    counts_l: dict[tuple, int] = {}
    counts_c: dict[tuple, int] = {}
    for i in range(trials):
        trace, _ = lcrw_run(graph, start, step_cap, derive(seed, "tv-l", i))
        key = tuple(trace.exposed)
        counts_l[key] = counts_l.get(key, 0) + 1
        assign = WeightAssignment(Exponential(1.0), derive(seed, "tv-c", i))
        rec = cleb_walk(graph, assign, start, step_cap=step_cap)
        key = tuple(s.edge for s in rec.steps)
        counts_c[key] = counts_c.get(key, 0) + 1
    support = set(counts_l) | set(counts_c)
    tv = 0.5 * sum(abs(counts_l.get(k, 0) - counts_c.get(k, 0)) / trials for k in support)
    stderr_scale = math.sqrt(len(support) / trials)
    return tv, stderr_scale, len(support)


# -- invasion percolation -------------------------------------------------


def build_symmetric_graph(vertices: Sequence[VertexId], boundary: Sequence[VertexId],
                          undirected_edges: Sequence[tuple[VertexId, VertexId]],
                          weights: Sequence[float]
                          ) -> tuple[DirectedMultigraph, list[EdgeId], dict[EdgeId, float]]:
    """Bidirect an undirected weighted graph.

    Returns (graph, reversal map, per-oriented-edge weights): oriented
    edges 2i and 2i+1 are the two orientations of undirected edge i and
    share its weight.
    """
    edges = []
    for (a, b) in undirected_edges:
        edges.append((a, b))
        edges.append((b, a))
    graph = build_graph(vertices, boundary, edges)
    reversal = []
    w: dict[EdgeId, float] = {}
    for i in range(len(undirected_edges)):
        reversal.extend([2 * i + 1, 2 * i])
        w[2 * i] = weights[i]
        w[2 * i + 1] = weights[i]
    return graph, reversal, w


@dataclass
class InvasionSequence:
    """Greedy growth sequence: the k-th prefix is the invaded tree T_k."""

    start: VertexId
    edges: list[EdgeId]  # canonical (even) orientation ids, in invasion order

    def prefix(self, k: int) -> frozenset[EdgeId]:
        return frozenset(self.edges[:k])


def invasion_percolation(graph: DirectedMultigraph, reversal: Sequence[EdgeId],
                         weights: dict[EdgeId, float], start: VertexId,
                         tolerance: float = 1e-12) -> InvasionSequence:
    """Grow a tree from start by always invading the cheapest frontier edge."""
    import heapq

    for e, r in enumerate(reversal):
        if weights[e] != weights[r]:
            raise PreconditionViolatedError(f"orientations {e}/{r} carry different weights")
    invaded = {start}
    chosen: list[EdgeId] = []
    heap: list[tuple[float, EdgeId]] = []

    def push_frontier(v: VertexId) -> None:
        for e in graph.out_edges(v):
            heapq.heappush(heap, (weights[e], min(e, reversal[e])))

    push_frontier(start)
    while heap:
        w, e = heapq.heappop(heap)
        a, b = graph.tails[e], graph.heads[e]
        if a in invaded and b in invaded:
            continue
        while heap and heap[0][1] == e:
            heapq.heappop(heap)
        if heap:
            gap = heap[0][0] - w
            if abs(gap) <= tolerance * max(1.0, abs(w), abs(heap[0][0])):
                nxt = heap[0][1]
                na, nb = graph.tails[nxt], graph.heads[nxt]
                if not (na in invaded and nb in invaded):
                    raise TieDetectedError(w, heap[0][0], "invasion frontier")
        fresh = b if a in invaded else a
        invaded.add(fresh)
        chosen.append(e)
        push_frontier(fresh)
    return InvasionSequence(start=start, edges=chosen)


def kruskal_mst(graph: DirectedMultigraph, reversal: Sequence[EdgeId],
                weights: dict[EdgeId, float]) -> frozenset[EdgeId]:
    """Minimum spanning tree over the unoriented edges (canonical ids)."""
    canon = sorted({min(e, reversal[e]) for e in range(graph.n_edges)},
                   key=lambda e: (weights[e], e))
    parent: dict[VertexId, VertexId] = {}

    def find(x):
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    tree = set()
    for e in canon:
        a, b = find(graph.tails[e]), find(graph.heads[e])
        if a != b:
            parent[a] = b
            tree.add(e)
    return frozenset(tree)


@dataclass
class InvasionEquivalenceVerdict:
    equal_prefixes: bool
    first_mismatch: int | None
    walk_fresh_count: int
    invasion_matches_kruskal: bool


def invasion_equivalence_check(graph: DirectedMultigraph, reversal: Sequence[EdgeId],
                               weights: dict[EdgeId, float], start: VertexId
                               ) -> InvasionEquivalenceVerdict:
    """Fresh-edge prefixes of the contracting walk versus invasion order.

    Runs the walk on the bidirected graph, takes the exposure times of
    edges whose reversal was not yet exposed, and compares the unoriented
    prefix sets against the invasion sequence; also checks the completed
    invasion tree against the independent minimum spanning tree.
    """
    from .algorithms import HIT_BOUNDARY as WALK_HIT
    from .algorithms import cleb_walk
    from .weights import Fixed

    seq = invasion_percolation(graph, reversal, weights, start)
    assign = WeightAssignment(Fixed(dict(weights)), 0)
    record = cleb_walk(graph, assign, start)
    if record.terminal != WALK_HIT:
        raise StepCapReachedError("walk hit the step cap")
    exposed: set[EdgeId] = set()
    fresh_unoriented: list[EdgeId] = []
    for s in record.steps:
        e = s.edge
        if reversal[e] not in exposed:
            fresh_unoriented.append(min(e, reversal[e]))
        exposed.add(e)
    equal = True
    mismatch = None
    for k in range(1, len(fresh_unoriented) + 1):
        if frozenset(fresh_unoriented[:k]) != seq.prefix(k):
            equal = False
            mismatch = k
            break
    mst = kruskal_mst(graph, reversal, weights)
    return InvasionEquivalenceVerdict(
        equal_prefixes=equal, first_mismatch=mismatch,
        walk_fresh_count=len(fresh_unoriented),
        invasion_matches_kruskal=(frozenset(seq.edges) == mst))
