import pytest

from cleb.algorithms import cleb_walk_algorithm
from cleb.errors import PreconditionViolatedError, TooLargeError
from cleb.families import (
    BoundedSubdivision,
    GaltonWatson,
    LatticeBox,
    PathSegment,
    RegularTree,
    component_end_stats,
    connectivity_monotonicity_check,
    coupled_assignment,
    parse_family,
    transience_trace,
    wired_msa_sequence,
)
from cleb.graph import Arborescence, build_graph, validate_arborescence, wire_boundary
from cleb.util import derive
from cleb.weights import Exponential, Fixed


def test_path_segment_realize():
    real = PathSegment().realize(3)
    g = real.graph
    assert g.n_vertices == 8  # -3..3 plus the boundary
    assert len(real.canonical) == g.n_edges == 2 * 6 + 4


def test_regular_tree_realize():
    real = RegularTree(2).realize(3)
    g = real.graph
    assert g.n_vertices == 8  # depths 0..2 plus the boundary
    assert g.n_edges == 2 * (2 + 4 + 8)
    arb, _ = cleb_walk_algorithm(g, coupled_assignment(Exponential(1.0), 5, real))
    assert validate_arborescence(g, arb).ok


def test_canonical_ids_nest_across_radii():
    fam = RegularTree(3)
    small = fam.realize(2)
    large = fam.realize(4)
    assert set(small.canonical) <= set(large.canonical)


def test_coupled_weights_identical_across_radii():
    fam = RegularTree(2)
    small = fam.realize(3)
    large = fam.realize(8)
    a_small = coupled_assignment(Exponential(1.0), 42, small)
    a_large = coupled_assignment(Exponential(1.0), 42, large)
    canon_small = {c: e for e, c in enumerate(small.canonical)}
    canon_large = {c: e for e, c in enumerate(large.canonical)}
    shared = set(canon_small) & set(canon_large)
    assert shared
    for c in sorted(shared):
        assert a_small.base(canon_small[c]) == a_large.base(canon_large[c])


def test_two_master_seeds_differ_nearly_everywhere():
    fam = RegularTree(2)
    real = fam.realize(9)
    a = coupled_assignment(Exponential(1.0), 1, real)
    b = coupled_assignment(Exponential(1.0), 2, real)
    n = min(1000, real.graph.n_edges)
    differing = sum(a.base(e) != b.base(e) for e in range(n))
    assert differing >= 0.99 * n


def test_fixed_model_passthrough_in_families():
    fam = PathSegment()
    real = fam.realize(2)
    values = {c: float(i + 1) for i, c in enumerate(real.canonical)}
    assign = coupled_assignment(Fixed(values), 0, real)
    assert assign.base(0) == values[real.canonical[0]]


def test_galton_watson_deterministic_and_nested():
    fam = GaltonWatson.geometric(0.5, seed=31)
    a = fam.realize(4)
    b = fam.realize(4)
    assert a.canonical == b.canonical
    c = fam.realize(5)
    assert set(a.canonical) <= set(c.canonical)


def test_galton_watson_rejects_mass_at_zero():
    with pytest.raises(PreconditionViolatedError):
        GaltonWatson({0: 0.5, 1: 0.5}, seed=1)


def test_subdivision_lengths_bounded_and_stable():
    fam = BoundedSubdivision(2, 4, seed=9)
    for child in (2, 3, 4, 5):
        length = fam.segment_length(child)
        assert 1 <= length <= 4
        assert length == fam.segment_length(child)
    real = fam.realize(3)
    arb, _ = cleb_walk_algorithm(real.graph,
                                 coupled_assignment(Exponential(1.0), 4, real))
    assert validate_arborescence(real.graph, arb).ok


def test_lattice_box_matches_wire_boundary():
    fam = LatticeBox(2)
    real = fam.realize(2)
    coords = [(x, y) for x in range(-3, 4) for y in range(-3, 4)]
    idx = {c: i for i, c in enumerate(coords)}
    edges = []
    for (x, y) in coords:
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nb = (x + dx, y + dy)
            if nb in idx:
                edges.append((idx[(x, y)], idx[nb]))
    big = build_graph(list(range(len(coords))), [idx[(3, 3)]], edges)
    kept = [idx[c] for c in coords if abs(c[0]) <= 2 and abs(c[1]) <= 2]
    wired, _ = wire_boundary(big, kept)
    assert (wired.n_vertices, wired.n_edges) == (real.graph.n_vertices, real.graph.n_edges)


def test_lattice_ball_one_wiring_count():
    # keep the origin plus its four neighbours inside a radius-2 box:
    # 8 interior oriented edges plus 12 crossing pairs
    fam = LatticeBox(2)
    real = fam.realize(2)
    g = real.graph
    keep = {real.probe_map[fam._vcode(c)]
            for c in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]}
    wired, _ = wire_boundary(g, keep)
    assert wired.n_vertices == 6
    assert wired.n_edges == 8 + 24


def test_too_large_guards():
    with pytest.raises(TooLargeError):
        RegularTree(2).realize(25)
    with pytest.raises(TooLargeError):
        LatticeBox(2).realize(2000)


def test_parse_family_specs():
    assert isinstance(parse_family("path"), PathSegment)
    assert parse_family("tree:3").arity == 3
    assert parse_family("lattice:2").dim == 2
    assert isinstance(parse_family("gw:0.5", seed=3), GaltonWatson)
    assert isinstance(parse_family("subdiv:2:4", seed=3), BoundedSubdivision)


def test_wired_msa_sequence_reports_probe_history():
    fam = RegularTree(2)
    report = wired_msa_sequence(fam, Exponential(1.0), [3, 4, 5], [1], 77)
    hist = report.probe_for(1)
    assert sorted(hist.by_radius) == [3, 4, 5]
    if len(set(hist.by_radius.values())) == 1:
        assert hist.stabilization_radius() == 3
        assert not hist.censored


def test_forced_weights_stabilize_at_smallest_radius():
    # deterministic weights increasing away from the root pin every edge
    fam = RegularTree(2)

    class Outward:
        spec = "outward"

        def sample(self, seed, key):
            vertex = key // 2
            up = key % 2
            return float(vertex) + (0.25 if up == 0 else 0.5)

        def is_exact(self):
            return False

    report = wired_msa_sequence(fam, Outward(), [3, 4, 5], [1, 2, 3], 0)
    for hist in report.probes:
        assert hist.stabilization_radius() == 3
        assert not hist.censored


def test_path_segment_msa_oscillates_across_radii():
    """On the line the probe edge keeps flipping for many seeds: the limit
    object genuinely fails to settle within any finite window."""
    fam = PathSegment()
    flips = 0
    for s in range(20):
        report = wired_msa_sequence(fam, Exponential(1.0), [10, 20, 40, 80], [0],
                                    derive(5150, s))
        hist = report.probe_for(0)
        if len(set(hist.by_radius.values())) > 1:
            flips += 1
    assert flips >= 5


def test_monotonicity_small_batch():
    tree = RegularTree(3)
    pool = [1, 2, 3, 4]
    verdict = connectivity_monotonicity_check(
        tree, Exponential(1.0), [2, 3, 4], [(1, 2), (3, 4), (2, 4)], 909)
    assert verdict.ok
    path = PathSegment()
    verdict = connectivity_monotonicity_check(
        path, Exponential(1.0), [5, 10, 20], [(-3, 2), (0, 4), (-1, 1)], 910)
    assert verdict.ok


def test_pair_on_common_future_always_connected():
    fam = RegularTree(2)
    real = fam.realize(4)
    assign = coupled_assignment(Exponential(1.0), derive(2211), real)
    arb, _ = cleb_walk_algorithm(real.graph, assign)
    from cleb.algorithms import connectivity_profile
    from cleb.graph import future_edges

    v = 4
    fut = future_edges(real.graph, arb, v)
    mid = real.graph.heads[fut[0]]
    if mid not in real.graph.boundary:
        assert connectivity_profile(real.graph, arb, [(v, mid)]) == [1]


def test_transience_trace_tree_vs_path():
    tree_total = path_total = 0
    for s in range(15):
        _, tree_summary, _ = transience_trace(RegularTree(2), 12, 1, 50_000,
                                              derive(3030, s))
        assert tree_summary.terminal == "hit_boundary"
        tree_total += tree_summary.returns_to_empty
        _, path_summary, _ = transience_trace(PathSegment(), 40, 0, 20_000,
                                              derive(3031, s))
        path_total += path_summary.returns_to_empty
    assert path_total > tree_total


def test_tree_returns_median_small():
    counts = []
    fam = RegularTree(2)
    for s in range(30):
        _, summary, _ = transience_trace(fam, 12, 1, 50_000, derive(4040, s))
        counts.append(summary.returns_to_empty)
    counts.sort()
    assert counts[len(counts) // 2] <= 2


def test_lattice_trace_positions():
    fam = LatticeBox(2)
    trace, summary, positions = transience_trace(fam, 15, fam._vcode((0, 0)),
                                                 3000, derive(5050))
    assert positions is not None and len(positions) == len(trace.steps)
    assert all(max(abs(x), abs(y)) <= 15 for x, y in positions)
    assert positions[0] in [(0, 1), (0, -1), (1, 0), (-1, 0)]


def test_component_stats_star_and_two_components():
    star = build_graph([0, 1, 2, 3], [0], [(1, 0), (2, 1), (3, 1)])
    stats = component_end_stats(star, Arborescence({1: 0, 2: 1, 3: 2}))
    assert len(stats) == 1 and stats[0].size == 3
    two = build_graph([0, 1, 2], [0], [(1, 0), (2, 0)])
    stats = component_end_stats(two, Arborescence({1: 0, 2: 1}))
    assert len(stats) == 2


def test_component_stats_on_tree_sample():
    fam = RegularTree(3)
    real = fam.realize(5)
    assign = coupled_assignment(Exponential(1.0), derive(6060), real)
    arb, _ = cleb_walk_algorithm(real.graph, assign)
    stats = component_end_stats(real.graph, arb)
    assert sum(c.size for c in stats) == len(arb.outgoing)
    assert all(c.unmerged_tips >= 1 for c in stats)
