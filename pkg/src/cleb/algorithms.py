"""Cycle-contracting computation of minimal spanning arborescences.

Three front-ends share one engine:

* :func:`original_cleb` reveals every vertex's cheapest outgoing edge at
  once, then repeatedly contracts zero-weight cycles;
* :func:`sequential_cleb` reveals one vertex at a time in any caller-chosen
  order, contracting a cycle the moment one closes;
* :func:`cleb_walk` is the sequential variant whose next vertex is always
  the head of the last exposed edge (or the freshly contracted vertex),
  and :func:`cleb_walk_algorithm` chains such walks over a growing
  boundary until the graph is exhausted.

All variants end with the same backward pass: popping contraction records
in reverse and pulling the arborescence through each one.  Exposed edges
carry colors (contraction depth levels); for generic weights the colored
exposed set is the same for every revelation order, which the test suite
checks rather than assumes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import (
    BadChooserError,
    DisconnectedError,
    IncompleteWalkError,
    NoOutgoingEdgeError,
    NotSpanningError,
)
from .graph import (
    Arborescence,
    ContractionRecord,
    ContractionStack,
    DirectedMultigraph,
    EdgeId,
    VertexId,
    meet_vertex,
    uncontract,
)
from .weights import WeightAssignment, min_out_subtract

HIT_BOUNDARY = "hit_boundary"
STEP_CAP = "step_cap_reached"


@dataclass
class ExposureStep:
    step: int
    vertex: VertexId
    edge: EdgeId
    pi: object
    color: int
    record: ContractionRecord | None = None


@dataclass
class ExposureLog:
    """Ordered record of one run: exposures, colors, contraction events."""

    steps: list[ExposureStep] = field(default_factory=list)
    colors: dict[EdgeId, int] = field(default_factory=dict)

    def exposed_edges(self) -> list[EdgeId]:
        return [s.edge for s in self.steps]

    def records(self) -> list[ContractionRecord]:
        return [s.record for s in self.steps if s.record is not None]

    def colored_exposure_set(self) -> frozenset[tuple[EdgeId, int]]:
        return frozenset(self.colors.items())

    def write_jsonl(self, path) -> None:
        """One JSON object per event: an expose row, then a contract row
        for steps that closed a cycle."""
        with open(path, "w") as fh:
            for s in self.steps:
                row = {"step": s.step, "event": "expose", "edge": s.edge,
                       "color": s.color, "pi": float(s.pi)}
                fh.write(json.dumps(row) + "\n")
                if s.record is not None:
                    row = {"step": s.step, "event": "contract",
                           "edge": s.edge, "color": s.color,
                           "cycle": list(s.record.cycle), "pi": float(s.pi)}
                    fh.write(json.dumps(row) + "\n")


def colored_exposure_set(log: ExposureLog) -> frozenset[tuple[EdgeId, int]]:
    """The exposed edges of a completed run, tagged with their colors."""
    return log.colored_exposure_set()


class _Exposure:
    """Shared bookkeeping: exposed-out map, colors, and the event log."""

    def __init__(self, stack: ContractionStack, assign: WeightAssignment):
        self.stack = stack
        self.assign = assign
        self.exposed_out: dict[VertexId, EdgeId] = {}
        self.vertex_color: dict[VertexId, int] = {}
        self.log = ExposureLog()

    def reveal(self, v: VertexId) -> ExposureStep:
        """Subtract v's minimum and log the newly exposed edge."""
        edge, pi = min_out_subtract(self.assign, self.stack, v)
        color = self.vertex_color.get(v, 1)
        step = ExposureStep(step=len(self.log.steps) + 1, vertex=v,
                            edge=edge, pi=pi, color=color)
        self.log.steps.append(step)
        self.log.colors[edge] = color
        self.exposed_out[v] = edge
        return step

    def contract(self, cycle: Sequence[EdgeId], step: ExposureStep) -> ContractionRecord:
        level = 1 + max(self.log.colors[e] for e in cycle)
        record = self.stack.contract_cycle(cycle)
        for member in record.members:
            self.exposed_out.pop(member, None)
        self.vertex_color[record.supervertex] = level
        step.record = record
        return record

    def cycle_through(self, edge: EdgeId, v: VertexId) -> list[EdgeId] | None:
        """Cycle closed by exposing `edge` at v, following exposed successors."""
        stack = self.stack
        exposed = self.exposed_out
        chain = [edge]
        x = stack.head(edge)
        while x != v:
            nxt = exposed.get(x)
            if nxt is None:
                return None
            chain.append(nxt)
            x = stack.head(nxt)
        return chain

    def terminal_arborescence(self) -> Arborescence:
        """Exposed live edges, one per live non-boundary supervertex."""
        stack = self.stack
        boundary = {stack.resolve(b) for b in stack.base.boundary}
        outgoing = {}
        for v in stack.live_vertices():
            if v in boundary:
                continue
            e = self.exposed_out.get(v)
            if e is None:
                raise NotSpanningError(f"supervertex {v} was never revealed")
            outgoing[v] = e
        return Arborescence(outgoing)


def _unwind(stack: ContractionStack, arb: Arborescence) -> Arborescence:
    """Pop every contraction record in reverse, pulling arb back to the base."""
    while stack.records:
        arb = uncontract(stack, stack.records[-1], arb, validate=False)
    return arb


def original_cleb(graph: DirectedMultigraph, assign: WeightAssignment
                  ) -> tuple[Arborescence, ExposureLog]:
    """Reveal all minima at once, then contract zero-weight cycles until none.

    Returns the minimal spanning arborescence together with the exposure
    log.  Raises DisconnectedError when some vertex cannot reach the
    boundary, TieDetectedError on a genericity failure.
    """
    stack = ContractionStack(graph)
    exp = _Exposure(stack, assign)
    try:
        for v in graph.vertices:
            if v not in graph.boundary:
                exp.reveal(v)
        while True:
            cycle = _zero_cycle(exp)
            if cycle is None:
                break
            record = exp.contract(cycle, _last_step_of(exp, cycle))
            exp.reveal(record.supervertex)
    except NoOutgoingEdgeError as err:
        raise DisconnectedError(str(err)) from err
    arb = exp.terminal_arborescence()
    return _unwind(stack, arb), exp.log


def _last_step_of(exp: _Exposure, cycle: Sequence[EdgeId]) -> ExposureStep:
    cycle_set = set(cycle)
    for step in reversed(exp.log.steps):
        if step.edge in cycle_set:
            return step
    raise AssertionError("cycle edges must have been exposed")


def _zero_cycle(exp: _Exposure) -> list[EdgeId] | None:
    """Cycle among exposed live edges through the lowest-numbered supervertex.

    Exposed live edges form a functional graph (one outgoing edge per
    revealed supervertex), so each component carries at most one cycle;
    picking the cycle with the smallest member keeps runs reproducible.
    """
    stack = exp.stack
    exposed = exp.exposed_out
    state: dict[VertexId, int] = {}
    best: list[VertexId] | None = None
    for start in sorted(exposed):
        if state.get(start):
            continue
        path: list[VertexId] = []
        index: dict[VertexId, int] = {}
        x = start
        while x in exposed and state.get(x) is None:
            state[x] = 1
            index[x] = len(path)
            path.append(x)
            x = stack.head(exposed[x])
        if state.get(x) == 1:
            cycle_vertices = path[index[x]:]
            if best is None or min(cycle_vertices) < min(best):
                best = cycle_vertices
        for y in path:
            state[y] = 2
    if best is None:
        return None
    anchor = best.index(min(best))
    ordered = best[anchor:] + best[:anchor]
    return [exposed[v] for v in ordered]


Chooser = Callable[["_Exposure"], "VertexId | None"]


def order_chooser(order: Sequence[VertexId]) -> Chooser:
    """Chooser revealing supervertices by their earliest member in `order`.

    Always returns a live, unrevealed, non-boundary supervertex (or None
    once every live supervertex is revealed), so it is valid on any
    instance.
    """
    order = list(order)

    def choose(exp: _Exposure) -> VertexId | None:
        stack = exp.stack
        boundary = stack.base.boundary
        for x in order:
            if x in boundary:
                continue
            s = stack.resolve(x)
            if s not in exp.exposed_out and stack.is_live_vertex(s):
                return s
        return None

    return choose


def sequential_cleb(graph: DirectedMultigraph, assign: WeightAssignment,
                    chooser: Chooser) -> tuple[Arborescence, ExposureLog]:
    """One-vertex-at-a-time revelation under a caller-supplied chooser.

    The resulting arborescence is the same for every valid chooser, and so
    is the colored exposed set.
    """
    stack = ContractionStack(graph)
    exp = _Exposure(stack, assign)
    boundary = {stack.resolve(b) for b in graph.boundary}
    try:
        while True:
            v = chooser(exp)
            if v is None:
                break
            if v in exp.exposed_out or not stack.is_live_vertex(v) or v in boundary:
                raise BadChooserError(f"chooser returned unusable vertex {v}")
            step = exp.reveal(v)
            cycle = exp.cycle_through(step.edge, v)
            if cycle is not None:
                exp.contract(cycle, step)
    except NoOutgoingEdgeError as err:
        raise DisconnectedError(str(err)) from err
    arb = exp.terminal_arborescence()
    return _unwind(stack, arb), exp.log


@dataclass
class WalkStep:
    step: int
    vertex: VertexId
    edge: EdgeId
    pi: object
    event: str  # "extend" | "contract" | "hit_boundary"
    cut: int | None = None  # path length a contraction folded back to
    record: ContractionRecord | None = None
    path_len: int = 0  # live path edges after this step


@dataclass
class EpochSummary:
    """One walk epoch: its loops, seed edge, and stopping time.

    ``tau`` is the last step after which the live path equals the epoch's
    base prefix; ``seed_edge`` is exposed at ``tau + 1`` and never
    contracted afterwards.
    """

    index: int
    tau: int
    seed_edge: EdgeId
    loops: list[ContractionRecord]


@dataclass
class WalkRecord:
    """Complete log of a single walk, with retrospective epoch analysis."""

    start: VertexId
    steps: list[WalkStep]
    log: ExposureLog
    terminal: str  # HIT_BOUNDARY or STEP_CAP
    censored: bool = False

    def path_after(self, t: int) -> tuple[EdgeId, ...]:
        """Live exposed path after step t (edge ids, in order)."""
        path: list[EdgeId] = []
        for s in self.steps[:t]:
            if s.event == "contract":
                del path[s.cut:]
            else:
                path.append(s.edge)
        return tuple(path)

    def final_path(self) -> list[WalkStep]:
        """Steps whose edges survive on the live path at termination."""
        path: list[WalkStep] = []
        for s in self.steps:
            if s.event == "contract":
                del path[s.cut:]
            else:
                path.append(s)
        return path

    def empty_path_times(self) -> list[int]:
        """Steps after which every exposed edge is contracted (path empty)."""
        times = []
        depth = 0
        for s in self.steps:
            depth = s.cut if s.event == "contract" else depth + 1
            if depth == 0:
                times.append(s.step)
        return times

    def max_path_len(self) -> int:
        return max((s.path_len for s in self.steps), default=0)

    def epochs(self) -> list[EpochSummary]:
        """Split the walk at the placements of its permanent path edges.

        The live path can only lose edges from its tail, so the edges on
        the final path are exactly the never-contracted ones, and the last
        time the path equals its first j-1 permanent edges is the step
        right before permanent edge j appears.  Loops contracted between
        two placements belong to the later edge's epoch.  On capped runs
        the same analysis applies to the observed prefix (the record stays
        flagged censored); trailing loops after the last surviving
        placement belong to no epoch.
        """
        permanent = self.final_path()
        records = [(s.step, s.record) for s in self.steps if s.record is not None]
        out: list[EpochSummary] = []
        r = 0
        prev_sigma = 0
        for j, s in enumerate(permanent, 1):
            loops = []
            while r < len(records) and records[r][0] < s.step:
                if records[r][0] > prev_sigma:
                    loops.append(records[r][1])
                r += 1
            out.append(EpochSummary(index=j, tau=s.step - 1,
                                    seed_edge=s.edge, loops=loops))
            prev_sigma = s.step
        return out


def cleb_walk(graph: DirectedMultigraph, assign: WeightAssignment, start: VertexId,
              step_cap: int = 1_000_000, *, stack: ContractionStack | None = None,
              exposure: _Exposure | None = None,
              absorbing: set[VertexId] | None = None) -> WalkRecord:
    """Walk from `start`, always revealing at the head of the last exposure.

    Stops on reaching the boundary or at the step cap; hitting the cap is
    an outcome, not an error.  When `absorbing` is given it must already
    contain the resolved boundary and is used as the stop set verbatim
    (the walk-algorithm driver grows one such set across walks).
    """
    stack = stack if stack is not None else ContractionStack(graph)
    exp = exposure if exposure is not None else _Exposure(stack, assign)
    if absorbing is None:
        absorbing = {stack.resolve(b) for b in graph.boundary}
    current = stack.resolve(start)
    if current in absorbing:
        raise BadChooserError(f"walk start {start} is absorbing")
    path_vertices = [current]
    pos = {current: 0}
    steps: list[WalkStep] = []
    terminal = STEP_CAP
    while len(steps) < step_cap:
        try:
            estep = exp.reveal(current)
        except NoOutgoingEdgeError as err:
            raise DisconnectedError(str(err)) from err
        h = stack.head(estep.edge)
        t = len(steps) + 1
        if h in absorbing:
            steps.append(WalkStep(t, current, estep.edge, estep.pi, "hit_boundary",
                                  path_len=len(path_vertices)))
            terminal = HIT_BOUNDARY
            break
        j = pos.get(h)
        if j is None:
            steps.append(WalkStep(t, current, estep.edge, estep.pi, "extend",
                                  path_len=len(path_vertices)))
            path_vertices.append(h)
            pos[h] = len(path_vertices) - 1
            current = h
        else:
            cycle = [exp.exposed_out[path_vertices[i]]
                     for i in range(j, len(path_vertices) - 1)]
            cycle.append(estep.edge)
            record = exp.contract(cycle, estep)
            for v in path_vertices[j:]:
                del pos[v]
            del path_vertices[j:]
            vc = record.supervertex
            path_vertices.append(vc)
            pos[vc] = j
            steps.append(WalkStep(t, current, estep.edge, estep.pi, "contract",
                                  cut=j, record=record, path_len=j))
            current = vc
    return WalkRecord(start=start, steps=steps, log=exp.log, terminal=terminal,
                      censored=(terminal == STEP_CAP))


def cleb_walk_algorithm(graph: DirectedMultigraph, assign: WeightAssignment,
                        order: Sequence[VertexId] | None = None,
                        step_cap: int = 1_000_000
                        ) -> tuple[Arborescence, list[WalkRecord]]:
    """Chain walks over a growing boundary, then unwind to the arborescence.

    Each walk runs until it hits the union of the original boundary and
    everything exposed by earlier walks; the full reverse uncontraction of
    all walks' records yields the minimal spanning arborescence.
    """
    if order is None:
        order = [v for v in graph.vertices if v not in graph.boundary]
    stack = ContractionStack(graph)
    exp = _Exposure(stack, assign)
    visited: set[VertexId] = set(graph.boundary)
    absorbing: set[VertexId] = {stack.resolve(b) for b in graph.boundary}
    walks: list[WalkRecord] = []
    for x in order:
        if x in visited:
            continue
        rec = cleb_walk(graph, assign, x, step_cap=step_cap,
                        stack=stack, exposure=exp, absorbing=absorbing)
        if rec.terminal != HIT_BOUNDARY:
            raise IncompleteWalkError(f"walk from {x} hit the step cap")
        walks.append(rec)
        tails, heads = graph.tails, graph.heads
        for s in rec.steps:
            e = s.edge
            for endpoint in (tails[e], heads[e]):
                if endpoint not in visited:
                    visited.add(endpoint)
                absorbing.add(stack.resolve(endpoint))
    missing = [v for v in graph.vertices if v not in visited]
    if missing:
        raise DisconnectedError(f"vertices never reached: {missing[:5]}")
    arb = exp.terminal_arborescence()
    return _unwind(stack, arb), walks


def recover_branch(graph: DirectedMultigraph, record: WalkRecord
                   ) -> tuple[Arborescence, set[VertexId]]:
    """Rebuild the arborescence fragment a finished walk determines.

    Replays each epoch's loops forward on a scratch stack and uncontracts
    them in reverse, seeding from the epoch's permanent edge.  The result
    is a sub-arborescence of the instance's minimal spanning arborescence
    and contains exactly one edge into the boundary.
    """
    if record.terminal != HIT_BOUNDARY:
        raise IncompleteWalkError("walk did not reach the boundary")
    outgoing: dict[VertexId, EdgeId] = {}
    for epoch in record.epochs():
        rstack = ContractionStack(graph)
        for loop in epoch.loops:
            rstack.contract_cycle(loop.cycle)
        arb = Arborescence({rstack.resolve(graph.tails[epoch.seed_edge]): epoch.seed_edge})
        while rstack.records:
            arb = uncontract(rstack, rstack.records[-1], arb, validate=False)
        outgoing.update(arb.outgoing)
    gamma = Arborescence(outgoing)
    reached = set()
    for e in gamma.outgoing.values():
        reached.add(graph.tails[e])
        reached.add(graph.heads[e])
    return gamma, reached


def connectivity_profile(graph: DirectedMultigraph, arb: Arborescence,
                         pairs: Sequence[tuple[VertexId, VertexId]]) -> list[int]:
    """1 per pair whose futures merge strictly before the boundary."""
    bits = []
    for u, v in pairs:
        m = meet_vertex(graph, arb, u, v)
        bits.append(0 if m is None or m in graph.boundary else 1)
    return bits


def chained_walk_connectivity(graph: DirectedMultigraph, assign: WeightAssignment,
                              u: VertexId, v: VertexId) -> int:
    """Connectivity bit for (u, v) from two chained walks.

    Walk from u first; then walk from v with u's explored cluster
    absorbing.  The pair is connected in the arborescence exactly when the
    second walk stops somewhere other than the original boundary.
    """
    stack = ContractionStack(graph)
    exp = _Exposure(stack, assign)
    rec_u = cleb_walk(graph, assign, u, stack=stack, exposure=exp)
    if rec_u.terminal != HIT_BOUNDARY:
        raise IncompleteWalkError("first walk hit the step cap")
    absorbing = {stack.resolve(b) for b in graph.boundary}
    b_u: set[VertexId] = set(graph.boundary)
    for s in rec_u.steps:
        for endpoint in (graph.tails[s.edge], graph.heads[s.edge]):
            b_u.add(endpoint)
            absorbing.add(stack.resolve(endpoint))
    if v in b_u:
        return 0 if v in graph.boundary else 1
    rec_v = cleb_walk(graph, assign, v, stack=stack, exposure=exp, absorbing=absorbing)
    if rec_v.terminal != HIT_BOUNDARY:
        raise IncompleteWalkError("second walk hit the step cap")
    y = graph.heads[rec_v.steps[-1].edge]
    return 0 if y in graph.boundary else 1
