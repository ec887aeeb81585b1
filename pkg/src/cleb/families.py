"""Nested finite realizations of infinite graph families.

Each family realizes a wired ball of a given radius: everything outside
the ball is identified into one boundary vertex.  Realizations at
different radii agree on their overlap through canonical edge ids, and
weights are keyed by those ids, so one master seed yields a single
coupled weight collection across the whole exhaustion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import ConfigError, PreconditionViolatedError, TooLargeError
from .graph import Arborescence, DirectedMultigraph, EdgeId, VertexId, build_graph
from .util import u01
from .weights import WeightAssignment, WeightModel

_PATH_ENC = 1 << 30
_LATTICE_B = 1 << 20


@dataclass(frozen=True)
class Realization:
    graph: DirectedMultigraph
    canonical: list[int]                   # EdgeId -> canonical id
    probe_map: dict[VertexId, VertexId]    # canonical vertex -> graph vertex
    coords: list[tuple[int, ...]] | None = None  # lattice only


class GraphFamily:
    """Base class: subclasses construct wired balls with canonical ids."""

    spec = "?"

    def realize(self, radius: int) -> Realization:
        raise NotImplementedError


class PathSegment(GraphFamily):
    """The integer line, wired at both ends of [-radius, radius]."""

    spec = "path"
    BOUNDARY = 10**9

    def realize(self, radius: int) -> Realization:
        if radius < 1:
            raise PreconditionViolatedError("radius must be at least 1")
        enc = lambda x: x + _PATH_ENC
        vertices = list(range(-radius, radius + 1)) + [self.BOUNDARY]
        edges = []
        canon = []
        for x in range(-radius, radius):
            edges.append((x, x + 1))
            canon.append(2 * enc(x))
            edges.append((x + 1, x))
            canon.append(2 * enc(x) + 1)
        bnd = self.BOUNDARY
        edges += [(-radius, bnd), (bnd, -radius), (radius, bnd), (bnd, radius)]
        canon += [2 * enc(-radius - 1) + 1, 2 * enc(-radius - 1),
                  2 * enc(radius), 2 * enc(radius) + 1]
        graph = build_graph(vertices, [bnd], edges)
        probe = {x: x for x in range(-radius, radius + 1)}
        return Realization(graph, canon, probe)


class RegularTree(GraphFamily):
    """Rooted tree where every vertex has `arity` children, wired at depth r.

    Vertices use heap numbering (root 1); the canonical ids of a child
    edge are 2*child (downward) and 2*child + 1 (upward), which is stable
    across radii.
    """

    spec = "tree"

    def __init__(self, arity: int):
        if arity < 2:
            raise PreconditionViolatedError("arity must be at least 2")
        self.arity = arity

    def children(self, v: VertexId) -> list[VertexId]:
        b = self.arity
        return [b * v - (b - 2) + i for i in range(b)]

    def realize(self, radius: int) -> Realization:
        if radius < 1:
            raise PreconditionViolatedError("radius must be at least 1")
        if self.arity ** radius > 2_000_000:
            raise TooLargeError("tree ball too large")
        vertices = [0, 1]
        edges: list[tuple[int, int]] = []
        canon: list[int] = []
        level = [1]
        for depth in range(radius):
            nxt = []
            for parent in level:
                for child in self.children(parent):
                    head = child if depth < radius - 1 else 0
                    edges.append((parent, head))
                    canon.append(2 * child)
                    edges.append((head, parent))
                    canon.append(2 * child + 1)
                    if depth < radius - 1:
                        vertices.append(child)
                        nxt.append(child)
            level = nxt
        graph = build_graph(vertices, [0], edges)
        probe = {v: v for v in vertices if v != 0}
        return Realization(graph, canon, probe)


class LatticeBox(GraphFamily):
    """The d-dimensional integer lattice, wired outside [-radius, radius]^d."""

    spec = "lattice"

    def __init__(self, dim: int):
        if dim < 1:
            raise PreconditionViolatedError("dimension must be positive")
        self.dim = dim

    def _vcode(self, coords: Sequence[int]) -> int:
        code = 0
        base = 2 * _LATTICE_B + 1
        for c in coords:
            code = code * base + (c + _LATTICE_B)
        return code

    def realize(self, radius: int, *, want_canonical: bool = True) -> Realization:
        d = self.dim
        side = 2 * radius + 1
        if side ** d > 4_000_000:
            raise TooLargeError("lattice box too large")
        coords_list: list[tuple[int, ...]] = []
        index: dict[tuple[int, ...], int] = {}

        def walk(prefix: tuple[int, ...]) -> None:
            if len(prefix) == d:
                index[prefix] = len(coords_list)
                coords_list.append(prefix)
                return
            for c in range(-radius, radius + 1):
                walk(prefix + (c,))

        walk(())
        n = len(coords_list)
        bnd = n
        edges: list[tuple[int, int]] = []
        canon: list[int] | None = [] if want_canonical else None
        for i, coords in enumerate(coords_list):
            for axis in range(d):
                for sign, direction in ((1, 2 * axis + 1), (-1, 2 * axis)):
                    nb = list(coords)
                    nb[axis] += sign
                    nb_t = tuple(nb)
                    inside = abs(nb[axis]) <= radius
                    j = index[nb_t] if inside else bnd
                    edges.append((i, j))
                    if canon is not None:
                        canon.append(self._vcode(coords) * 2 * d + direction)
                    if not inside:
                        edges.append((j, i))
                        if canon is not None:
                            rdir = 2 * axis + (0 if sign > 0 else 1)
                            canon.append(self._vcode(nb_t) * 2 * d + rdir)
        graph = DirectedMultigraph(list(range(n + 1)), [bnd], edges)
        probe = {self._vcode(c): i for i, c in enumerate(coords_list)}
        return Realization(graph, canon if canon is not None else [],
                           probe, coords=coords_list)

    def origin(self, realization: Realization) -> VertexId:
        return realization.probe_map[self._vcode((0,) * self.dim)]


class GaltonWatson(GraphFamily):
    """A branching tree with seeded offspring counts, wired at depth r.

    The offspring law is given as {count: probability} with no mass at
    zero; counts are capped so vertex ids stay well-defined.  The count at
    each vertex is a pure function of (family seed, vertex id), so every
    radius realizes the same underlying tree.
    """

    spec = "gw"

    def __init__(self, law: dict[int, float], seed: int):
        if any(k < 1 for k in law):
            raise PreconditionViolatedError("offspring law must not place mass at zero")
        total = sum(law.values())
        if abs(total - 1.0) > 1e-9:
            raise PreconditionViolatedError("offspring law must sum to one")
        self.law = dict(sorted(law.items()))
        self.seed = seed
        self.max_offspring = max(law)

    @classmethod
    def geometric(cls, p: float, seed: int, cap: int = 12) -> "GaltonWatson":
        """Geometric({1, 2, ...}) offspring, truncated and renormalized."""
        law = {k: p * (1 - p) ** (k - 1) for k in range(1, cap + 1)}
        scale = sum(law.values())
        return cls({k: w / scale for k, w in law.items()}, seed)

    def offspring(self, v: VertexId) -> int:
        u = u01(self.seed, "gw-offspring", v)
        acc = 0.0
        for k, p in self.law.items():
            acc += p
            if u < acc:
                return k
        return self.max_offspring

    def children(self, v: VertexId) -> list[VertexId]:
        base = self.max_offspring + 1
        return [v * base + i for i in range(1, self.offspring(v) + 1)]

    def realize(self, radius: int) -> Realization:
        vertices = [0, 1]
        edges: list[tuple[int, int]] = []
        canon: list[int] = []
        level = [1]
        for depth in range(radius):
            nxt = []
            for parent in level:
                for child in self.children(parent):
                    head = child if depth < radius - 1 else 0
                    edges.append((parent, head))
                    canon.append(2 * child)
                    edges.append((head, parent))
                    canon.append(2 * child + 1)
                    if depth < radius - 1:
                        vertices.append(child)
                        nxt.append(child)
            if len(vertices) > 2_000_000:
                raise TooLargeError("branching ball too large")
            level = nxt
        graph = build_graph(vertices, [0], edges)
        probe = {v: v for v in vertices if v != 0}
        return Realization(graph, canon, probe)


class BoundedSubdivision(GraphFamily):
    """A regular tree with each edge replaced by a path of length <= bound.

    Per-edge lengths are drawn once from the family seed (keyed by the
    child end of the base edge), so all radii subdivide consistently.
    The radius counts base-tree depth.
    """

    spec = "subdiv"

    def __init__(self, arity: int, bound: int, seed: int):
        if bound < 1:
            raise PreconditionViolatedError("bound must be at least 1")
        self.base = RegularTree(arity)
        self.bound = bound
        self.seed = seed
        self._voff = 1 << 45

    def segment_length(self, child: VertexId) -> int:
        return 1 + int(u01(self.seed, "subdiv-len", child) * self.bound)

    def realize(self, radius: int) -> Realization:
        if radius < 1:
            raise PreconditionViolatedError("radius must be at least 1")
        if self.base.arity ** radius > 500_000:
            raise TooLargeError("tree ball too large")
        m1 = self.bound + 1
        vertices = [0, 1]
        edges: list[tuple[int, int]] = []
        canon: list[int] = []
        level = [1]
        for depth in range(radius):
            nxt = []
            for parent in level:
                for child in self.base.children(parent):
                    wired = depth == radius - 1
                    length = 1 if wired else self.segment_length(child)
                    chain = [parent]
                    for j in range(1, length):
                        chain.append(self._voff + child * m1 + j)
                    chain.append(0 if wired else child)
                    for s in range(length):
                        a, b = chain[s], chain[s + 1]
                        code = child * m1 + s
                        edges.append((a, b))
                        canon.append(2 * code)
                        edges.append((b, a))
                        canon.append(2 * code + 1)
                        if s and chain[s] != 0:
                            vertices.append(chain[s])
                    if not wired:
                        vertices.append(child)
                        nxt.append(child)
            level = nxt
        graph = build_graph(vertices, [0], edges)
        probe = {v: v for v in vertices if v != 0}
        return Realization(graph, canon, probe)


def parse_family(spec: str, seed: int = 0) -> GraphFamily:
    """Parse family specs: path | tree:<arity> | lattice:<dim> |
    gw:<p> | subdiv:<arity>:<bound>."""
    parts = spec.split(":")
    kind = parts[0]
    try:
        if kind == "path":
            return PathSegment()
        if kind == "tree":
            return RegularTree(int(parts[1]))
        if kind == "lattice":
            return LatticeBox(int(parts[1]))
        if kind == "gw":
            return GaltonWatson.geometric(float(parts[1]), seed)
        if kind == "subdiv":
            return BoundedSubdivision(int(parts[1]), int(parts[2]), seed)
    except (IndexError, ValueError) as err:
        raise ConfigError(f"bad family spec {spec!r}: {err}") from err
    raise ConfigError(f"unknown family {spec!r}")


def coupled_assignment(model: WeightModel, master_seed: int,
                       realization: Realization) -> WeightAssignment:
    """Weights keyed by canonical edge ids: identical on every radius."""
    canonical = realization.canonical
    if not canonical:
        raise PreconditionViolatedError("realization carries no canonical ids")
    return WeightAssignment(model, master_seed, key_of=canonical.__getitem__)


@dataclass
class ProbeHistory:
    probe: VertexId
    by_radius: dict[int, int]  # radius -> canonical edge id of the probe's outgoing edge

    def stabilization_radius(self) -> int | None:
        radii = sorted(self.by_radius)
        for i, r in enumerate(radii):
            tail = {self.by_radius[s] for s in radii[i:]}
            if len(tail) == 1:
                return r
        return None

    @property
    def censored(self) -> bool:
        radii = sorted(self.by_radius)
        return len(radii) < 2 or self.by_radius[radii[-1]] != self.by_radius[radii[-2]]


@dataclass
class StabilizationReport:
    master_seed: int
    radii: list[int]
    probes: list[ProbeHistory] = field(default_factory=list)

    def probe_for(self, vertex: VertexId) -> ProbeHistory:
        for p in self.probes:
            if p.probe == vertex:
                return p
        raise KeyError(vertex)


def wired_msa_sequence(family: GraphFamily, model: WeightModel, radii: Sequence[int],
                       probes: Sequence[VertexId], master_seed: int) -> StabilizationReport:
    """Track probe vertices' outgoing arborescence edges across radii.

    For each radius the minimal spanning arborescence of the wired ball is
    computed under the coupled weights; the report records each probe's
    outgoing edge (canonically) and where it stops changing within the
    tested window.
    """
    from .algorithms import cleb_walk_algorithm

    report = StabilizationReport(master_seed=master_seed, radii=sorted(radii),
                                 probes=[ProbeHistory(p, {}) for p in probes])
    for radius in report.radii:
        real = family.realize(radius)
        assign = coupled_assignment(model, master_seed, real)
        arb, _ = cleb_walk_algorithm(real.graph, assign)
        for hist in report.probes:
            vertex = real.probe_map.get(hist.probe)
            if vertex is None:
                raise PreconditionViolatedError(
                    f"probe {hist.probe} lies outside radius {radius}")
            hist.by_radius[radius] = real.canonical[arb.outgoing[vertex]]
    return report


@dataclass
class MonotonicityVerdict:
    violations: list[tuple[VertexId, VertexId, int, int]]  # (u, v, radius, next radius)
    bits_by_radius: dict[int, list[int]]

    @property
    def ok(self) -> bool:
        return not self.violations


def connectivity_monotonicity_check(family: GraphFamily, model: WeightModel,
                                    radii: Sequence[int],
                                    pairs: Sequence[tuple[VertexId, VertexId]],
                                    master_seed: int) -> MonotonicityVerdict:
    """Check that pairwise connectivity of probes never drops as radii grow."""
    from .algorithms import cleb_walk_algorithm, connectivity_profile

    radii = sorted(radii)
    bits_by_radius: dict[int, list[int]] = {}
    for radius in radii:
        real = family.realize(radius)
        assign = coupled_assignment(model, master_seed, real)
        arb, _ = cleb_walk_algorithm(real.graph, assign)
        try:
            local_pairs = [(real.probe_map[u], real.probe_map[v]) for u, v in pairs]
        except KeyError as err:
            raise PreconditionViolatedError(
                f"probe pair vertex {err.args[0]} lies outside radius {radius}") from err
        bits_by_radius[radius] = connectivity_profile(real.graph, arb, local_pairs)
    violations = []
    for i in range(len(radii) - 1):
        r, s = radii[i], radii[i + 1]
        for k, (u, v) in enumerate(pairs):
            if bits_by_radius[r][k] > bits_by_radius[s][k]:
                violations.append((u, v, r, s))
    return MonotonicityVerdict(violations=violations, bits_by_radius=bits_by_radius)


@dataclass
class TransienceSummary:
    steps: int
    returns_to_empty: int
    max_path_len: int
    terminal: str


def transience_trace(family: GraphFamily, radius: int, start: VertexId,
                     step_cap: int, seed: int):
    """Loop-contracting walk on a wired ball, with recurrence diagnostics.

    Returns (trace, summary, positions); positions hold per-step lattice
    coordinates of the walker's representative site for lattice families,
    else None.
    """
    from .walks import lcrw_run

    if isinstance(family, LatticeBox):
        real = family.realize(radius, want_canonical=False)
    else:
        real = family.realize(radius)
    vertex = real.probe_map[start]
    track = real.coords is not None
    trace, heads = lcrw_run(real.graph, vertex, step_cap, seed, track_heads=track)
    positions = None
    if track:
        positions = []
        last = real.coords[vertex]
        for h in heads:
            if h < len(real.coords):
                last = real.coords[h]
            positions.append(last)
    summary = TransienceSummary(steps=len(trace.steps),
                                returns_to_empty=trace.returns_to_empty(),
                                max_path_len=trace.max_path_len(),
                                terminal=trace.terminal)
    return trace, summary, positions


@dataclass
class ComponentStats:
    size: int
    unmerged_tips: int


def component_end_stats(graph: DirectedMultigraph, arb: Arborescence) -> list[ComponentStats]:
    """Descriptive component statistics of a spanning arborescence.

    Components are classes of vertices whose futures merge before the
    boundary; ``unmerged_tips`` counts vertices whose path to the boundary
    is joined by no other branch (every interior vertex has a single
    incoming arborescence edge), a finite-volume stand-in for counting
    rays.
    """
    heads = graph.heads
    parent: dict[VertexId, VertexId] = {}

    def find(x: VertexId) -> VertexId:
        while parent.get(x, x) != x:
            parent[x] = parent.get(parent[x], parent[x])
            x = parent[x]
        return x

    for v, e in arb.outgoing.items():
        h = heads[e]
        if h not in graph.boundary:
            a, b = find(v), find(h)
            if a != b:
                parent[a] = b
    indeg: dict[VertexId, int] = {}
    for e in arb.outgoing.values():
        h = heads[e]
        indeg[h] = indeg.get(h, 0) + 1
    comp_size: dict[VertexId, int] = {}
    comp_tips: dict[VertexId, int] = {}
    for v in arb.outgoing:
        root = find(v)
        comp_size[root] = comp_size.get(root, 0) + 1
        x = heads[arb.outgoing[v]]
        clean = True
        while x not in graph.boundary:
            if indeg.get(x, 0) != 1:
                clean = False
                break
            x = heads[arb.outgoing[x]]
        if clean:
            comp_tips[root] = comp_tips.get(root, 0) + 1
    return sorted((ComponentStats(size=comp_size[r], unmerged_tips=comp_tips.get(r, 0))
                   for r in comp_size), key=lambda c: (-c.size, c.unmerged_tips))
