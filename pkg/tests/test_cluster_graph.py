import itertools

import pytest

from monocluster_core.core.cluster_graph import (
    ClusterGraph,
    Link,
    LinkKind,
    enumerate_graphs,
    first_links,
    sigma_map,
)
from monocluster_core.core.errors import NonContributingGraph
from monocluster_core.core.mayer_lattice import Cell, MayerBox, Window, boxes_in_window
from monocluster_core.core.polymer import Polymer

C0, C1, C2 = Cell((0,)), Cell((1,)), Cell((2,))


def box(c, k):
    return MayerBox(c, k)


@pytest.fixture
def single_source():
    return Polymer({box(C0, 0)})


@pytest.fixture
def two_sources():
    return Polymer({box(C0, 0), box(C1, 0)})


def test_link_is_unordered():
    a, b = box(C1, 0), box(C0, 1)
    assert Link(a, b) == Link(b, a)
    assert Link(a, b).first == b
    with pytest.raises(ValueError):
        Link(a, a)


def test_validate_examples(single_source):
    g = ClusterGraph(single_source, [Link(box(C0, 0), box(C1, 0))])
    assert g.validate().valid
    assert g.kinds == (LinkKind.CLUSTER_ROOF,)

    bad = ClusterGraph(single_source, [Link(box(C1, 0), box(C2, 0))]).validate()
    assert not bad.valid
    assert bad.failed_index == 1
    assert "copy-0" in bad.reason

    g = ClusterGraph(single_source, [Link(box(C0, 1), box(C1, 0))])
    assert g.kinds == (LinkKind.ROOF_ROOF,)


def test_validation_stops_at_first_bad_link(single_source):
    links = [Link(box(C0, 0), box(C1, 0)), Link(box(C0, 0), box(C2, 1)), Link(box(C0, 0), box(C0, 1))]
    result = ClusterGraph(single_source, links).validate()
    assert not result
    assert result.failed_index == 2
    assert result.kinds == (LinkKind.CLUSTER_ROOF,)
    with pytest.raises(ValueError):
        ClusterGraph(single_source, links).stages


def test_indices_of_the_empty_graph(single_source):
    g = ClusterGraph(single_source)
    assert g.conception_index(box(C1, 0), 1) == -1
    assert g.conception_index(box(C0, 0), 1) == -1
    assert g.conception_index(box(C0, 1), 1) == 0
    assert g.conception_index(box(C0, 2), 1) == 1
    assert g.creation_index(box(C0, 0), 1) == 0
    assert g.creation_index(box(C1, 0), 1) == 1
    assert g.creation_index(box(C0, 1), 1) == 1
    assert g.creation_index(box(C0, 5), 1) == 1


def test_truncated_indices(single_source):
    g = ClusterGraph(single_source, [Link(box(C0, 0), box(C1, 0)), Link(box(C1, 0), box(C1, 1))])
    assert g.creation(box(C1, 1)) == 2
    assert g.creation_index(box(C1, 1), 1) == 1
    assert g.conception(box(C1, 2)) == 2
    assert g.conception_index(box(C1, 2), 0) == 0
    with pytest.raises(ValueError):
        g.conception_index(box(C1, 2), 4)


def test_first_links_of_the_two_cell_window(two_sources):
    window = Window.hypercube(1, 2, 1)
    links = first_links(window, two_sources)
    assert len(links) == 5
    graphs = [ClusterGraph(two_sources, [link]) for link in links]
    kinds = [g.kinds[0] for g in graphs]
    assert kinds.count(LinkKind.CLUSTER_ROOF) == 4
    assert kinds.count(LinkKind.ROOF_ROOF) == 1
    contributing = [g for g in graphs if g.is_contributing()]
    assert [g.links[0] for g in contributing] == [Link(box(C0, 1), box(C1, 1))]


def test_vertical_links_never_contribute(single_source):
    g = ClusterGraph(single_source, [Link(box(C0, 0), box(C0, 1))])
    assert g.validate().valid
    assert g.links[0].is_vertical
    assert not g.is_contributing()
    with pytest.raises(NonContributingGraph):
        sigma_map(g)


def test_sigma_of_a_roof_roof_link(single_source):
    g = ClusterGraph(single_source, [Link(box(C0, 1), box(C1, 0))])
    assert g.is_contributing()
    assert sigma_map(g) == {1: 0}


def test_enumeration_matches_brute_force(single_source):
    window = Window.hypercube(1, 2, 1)
    graphs = list(enumerate_graphs(window, single_source, 1))
    assert graphs[0].p == 0
    brute = 0
    for a, b in itertools.combinations(boxes_in_window(window), 2):
        g = ClusterGraph(single_source, [Link(a, b)])
        if g.validate() and all(window.contains_box(x) for x in g.final_stage.boxes):
            brute += 1
    assert len(graphs) == 1 + brute == 4


def test_p_max_zero_yields_the_empty_graph(two_sources):
    graphs = list(enumerate_graphs(Window.hypercube(1, 2, 1), two_sources, 0))
    assert len(graphs) == 1 and graphs[0].p == 0


def test_enumeration_is_lexicographic_and_restartable(single_source):
    window = Window.hypercube(1, 2, 1)
    full = list(enumerate_graphs(window, single_source, 2))
    sequences = [g.links for g in full]
    assert sequences == sorted(sequences)
    assert len(set(sequences)) == len(sequences)
    for link in first_links(window, single_source):
        part = list(enumerate_graphs(window, single_source, 2, prefix=(link,)))
        assert part == [g for g in full if g.links[:1] == (link,)]


def test_enumeration_rejects_sources_outside_the_window():
    window = Window.hypercube(1, 2, 1)
    with pytest.raises(ValueError):
        list(enumerate_graphs(window, Polymer({box(Cell((5,)), 0)}), 1))


def test_enumerated_graphs_grow_solid_on_solid(single_source):
    window = Window.hypercube(1, 3, 2)
    for g in enumerate_graphs(window, single_source, 3):
        assert g.validate().valid
        assert len(g.final_stage) >= g.p
        for i in range(1, g.p + 1):
            before, after = g.stage(i - 1), g.stage(i)
            assert len(after) > len(before)
            assert all(before.in_roof(b) for b in after.boxes - before.boxes)
            for cell in window.cells:
                assert after.altitude(cell) - before.altitude(cell) in (0, 1)
        final = g.final_stage
        for b in set(final.boxes) | set(final.roof(window.cells)):
            assert g.conception(b) < g.creation(b)


def test_contributing_graphs_have_no_vertical_links_and_bounded_sigma(single_source):
    window = Window.hypercube(1, 3, 2)
    for g in enumerate_graphs(window, single_source, 3):
        if not g.is_contributing():
            continue
        assert not any(link.is_vertical for link in g.links)
        for q, value in sigma_map(g).items():
            assert 0 <= value < q


def test_serialization_round_trip(single_source):
    g = ClusterGraph(single_source, [Link(box(C0, 0), box(C1, 0)), Link(box(C1, 0), box(C1, 1))])
    restored = ClusterGraph.from_dict(g.to_dict())
    assert restored == g
    assert hash(restored) == hash(g)
    assert restored.stage_sizes() == [1, 2, 3]


def test_extend_and_truncate(single_source):
    g = ClusterGraph(single_source).extend(Link(box(C0, 0), box(C1, 0)))
    assert g.p == 1 and g.kinds == (LinkKind.CLUSTER_ROOF,)
    with pytest.raises(ValueError):
        g.extend(Link(box(C0, 0), box(C2, 1)))
    assert g.truncated(0) == ClusterGraph(single_source)
    assert g.link_counts() == {box(C0, 0): 1, box(C1, 0): 1}
