import math

import numpy as np
import pytest

from monocluster_core.core.cluster_graph import ClusterGraph, Link, enumerate_graphs
from monocluster_core.core.errors import BudgetExceeded, NonContributingGraph
from monocluster_core.core.gaussian_engine import (
    ClusterIntegrand,
    DiscretizedModel,
    ExpansionEngine,
    Interaction,
    a0_series,
    decoupling_check,
    expansion_identity_check,
    factorization_check,
    fundamental_step_check,
    h_series,
    normalization_factor,
    normalized_schwinger_direct,
    partition_function,
    schwinger,
    window_sequence_check,
    z0_series,
)
from monocluster_core.core.interpolation import HVector
from monocluster_core.core.mayer_lattice import Cell, MayerBox, Window
from monocluster_core.core.worker_pool import ExecutionMode, WorkerPool

C0, C1 = Cell((0,)), Cell((1,))


def box(c, k):
    return MayerBox(c, k)


@pytest.fixture
def pool():
    return WorkerPool(ExecutionMode.SEQUENTIAL)


# -- interaction -------------------------------------------------------------

def test_interaction_parse():
    assert Interaction.parse("x4").coefficients == (0.0, 0.0, 0.0, 0.0, 1.0)
    assert Interaction.parse("x4+0.5x2").coefficients == (0.0, 0.0, 0.5, 0.0, 1.0)
    p = Interaction.parse("2x^4 - x^2 + 1")
    assert p.coefficients == (1.0, 0.0, -1.0, 0.0, 2.0)
    assert str(p) == "2x4-x2+1"
    assert p.m == 2 and p.norm == 2.0


def test_interaction_rejects_bad_polynomials():
    for text in ("x3", "-x4", "abc", ""):
        with pytest.raises(ValueError):
            Interaction.parse(text)


def test_interaction_constants():
    assert Interaction.parse("x4").k2() == 1.0
    assert Interaction.parse("x4-x2").min_value() == pytest.approx(-0.25, abs=1e-12)
    assert Interaction.parse("x4").min_value() == pytest.approx(0.0, abs=1e-12)


def test_model_validation(kernel_1d, make_model):
    window = Window.hypercube(1, 2, 1)
    with pytest.raises(ValueError):
        DiscretizedModel(window, kernel_1d, Interaction.parse("x4"), sources=((5.5,),))
    with pytest.raises(ValueError):
        DiscretizedModel(window, kernel_1d, Interaction.parse("x4"), coupling=-1.0)
    model = DiscretizedModel(window, kernel_1d, Interaction.parse("x4"), nodes_per_cell=2)
    assert np.allclose(model.node_positions(C1).ravel(), [1.25, 1.75])
    assert make_model().node_positions(C0).ravel().tolist() == [0.5]


# -- series of the surrogate -------------------------------------------------

def test_free_two_point_function(make_model, kernel_1d):
    series = h_series(make_model(), 0)
    assert series.coefficients[0] == pytest.approx(kernel_1d.value([1.0]), rel=1e-13)


def test_z0_first_order(make_model, kernel_1d):
    c00 = kernel_1d.value([0.0])
    z0 = z0_series(make_model(), 1)
    assert z0.coefficients[0] == 1.0
    assert z0.coefficients[1] == pytest.approx(-3.0 * c00 ** 2, rel=1e-13)
    assert z0_series(make_model(), 0).to_list() == [1.0]


def test_z0_first_order_matches_quadrature(make_model, kernel_1d):
    lam = 1e-3
    model = make_model(coupling=lam)
    exact = partition_function(model, [C0], points=60)
    c00 = kernel_1d.value([0.0])
    assert exact == pytest.approx(1.0 - 3.0 * c00 ** 2 * lam, abs=1e-5)
    assert math.exp(-3.0 * c00 ** 2 * lam) <= exact + 1e-12 <= 1.0 + 1e-12


def test_partition_function_at_zero_coupling(make_model):
    assert partition_function(make_model(), [C0, C1]) == pytest.approx(1.0, abs=1e-12)


def test_two_decoupled_boxes(make_model):
    model = make_model(side=1, copies=1, sources=())
    z0 = z0_series(model, 1)
    assert h_series(model, 1).coefficients[1] == pytest.approx(2.0 * z0.coefficients[1], rel=1e-13)


@pytest.mark.parametrize("side,copies,sources", [
    (2, 1, ((0.5,), (1.5,))),
    (1, 2, ()),
    (3, 1, ((0.5,), (2.5,))),
])
def test_factorization(make_model, side, copies, sources):
    model = make_model(side=side, copies=copies, sources=sources)
    for order in (0, 1, 2):
        assert factorization_check(model, order) <= 1e-10


def test_budget_guard(kernel_1d):
    model = DiscretizedModel(
        Window.hypercube(1, 2, 1), kernel_1d, Interaction.parse("x4"),
        sources=((0.5,), (1.5,)), matching_budget=1,
    )
    assert h_series(model, 0).coefficients[0] > 0
    with pytest.raises(BudgetExceeded):
        h_series(model, 1)


# -- R(G, h) -----------------------------------------------------------------

def test_r_series_of_the_empty_graph(make_model):
    model = make_model()
    engine = ExpansionEngine(model, 1)
    empty = ClusterGraph(model.source_polymer)
    full = engine.r_series(empty, HVector((1.0,)))
    assert full.max_deviation(h_series(model, 1)) <= 1e-12
    decoupled = ExpansionEngine(model, 0).r_series(empty, HVector((0.0,)))
    assert decoupled.coefficients[0] == pytest.approx(model.kernel.value([1.0]), rel=1e-13)


def test_r_series_vanishes_with_a_zero_weight(make_model):
    model = make_model()
    engine = ExpansionEngine(model, 1)
    vertical = ClusterGraph(model.source_polymer, [Link(box(C0, 0), box(C0, 1))])
    series = engine.r_series(vertical, HVector((0.5, 0.0)))
    assert series.to_list() == [0.0, 0.0]


def test_fundamental_step_base_case(make_model):
    model = make_model()
    empty = ClusterGraph(model.source_polymer)
    assert fundamental_step_check(model, empty, (), 1) <= 1e-8


@pytest.mark.slow
def test_fundamental_step_on_sampled_graphs(make_model):
    rng = np.random.default_rng(17)
    for sources in (((0.5,), (1.5,)), ((0.25,), (0.75,))):
        model = make_model(sources=sources)
        engine = ExpansionEngine(model, 1)
        graphs = list(enumerate_graphs(model.window, model.source_polymer, 2))
        for _ in range(25):
            g = graphs[int(rng.integers(len(graphs)))]
            prefix = tuple(np.sort(rng.uniform(0.05, 0.95, g.p))[::-1])
            assert fundamental_step_check(model, g, prefix, 1, engine) <= 1e-8


def test_fundamental_step_after_one_link(make_model):
    model = make_model(sources=((0.25,), (0.75,)))
    g = ClusterGraph(model.source_polymer, [Link(box(C0, 0), box(C1, 0))])
    assert g.is_contributing()
    assert fundamental_step_check(model, g, (0.6,), 1) <= 1e-8


def test_decoupling(make_model):
    model = make_model()
    engine = ExpansionEngine(model, 1)
    for g in enumerate_graphs(model.window, model.source_polymer, 2):
        if not g.is_contributing():
            continue
        prefix = tuple(np.linspace(0.8, 0.3, g.p)) if g.p else ()
        assert decoupling_check(model, g, prefix, 1, engine) <= 1e-10


# -- A_0 and the expansion ---------------------------------------------------

def test_a0_of_the_empty_graph(make_model):
    model = make_model(sources=((0.25,), (0.75,)))
    empty = ClusterGraph(model.source_polymer)
    value = a0_series(model, empty, 0)
    assert value.coefficients[0] == pytest.approx(model.kernel.value([0.5]), rel=1e-13)


def test_a0_is_window_independent(make_model):
    small = make_model(side=2, copies=1, sources=((0.25,), (0.75,)))
    large = make_model(side=4, copies=3, sources=((0.25,), (0.75,)))
    g = ClusterGraph(small.source_polymer, [Link(box(C0, 0), box(C1, 0))])
    a = a0_series(small, g, 1)
    b = a0_series(large, g, 1)
    assert a.max_deviation(b) <= 1e-10


def test_a0_quadrature_is_exact(make_model):
    model = make_model(sources=((0.25,), (0.75,)))
    g = ClusterGraph(model.source_polymer, [Link(box(C0, 0), box(C1, 0))])
    default = a0_series(model, g, 1)
    refined = a0_series(model, g, 1, points=12)
    assert default.max_deviation(refined) <= 1e-12


def test_a0_integrand_is_bounded_near_the_boundary(make_model):
    model = make_model()
    g = ClusterGraph(model.source_polymer, [Link(box(C0, 1), box(C1, 1))])
    integrand = ClusterIntegrand(model, g, 1)
    for h in (1.0 - 1e-9, 0.5, 1e-9):
        assert np.all(np.isfinite(integrand((h,))))


def test_a0_rejects_non_contributing_graphs(make_model):
    model = make_model()
    vertical = ClusterGraph(model.source_polymer, [Link(box(C0, 0), box(C0, 1))])
    with pytest.raises(NonContributingGraph):
        a0_series(model, vertical, 1)


@pytest.mark.parametrize("order", [0, 1, 2])
def test_expansion_identity_on_two_cells(make_model, pool, order):
    report = expansion_identity_check(make_model(), order, order, pool=pool)
    assert report.deviation <= 1e-6
    assert report.contributing_count <= report.graph_count


def test_expansion_identity_at_order_zero_uses_the_empty_graph(make_model, pool):
    report = expansion_identity_check(make_model(), 0, 0, pool=pool)
    assert report.graph_count == 1
    assert report.lhs.coefficients[0] == pytest.approx(report.rhs.coefficients[0], rel=1e-13)


@pytest.mark.slow
def test_expansion_identity_on_a_taller_window(make_model, pool):
    model = make_model(side=3, copies=2, sources=((0.5,), (1.5,)))
    assert expansion_identity_check(model, 1, 1, pool=pool).deviation <= 1e-6


def test_expansion_identity_needs_enough_links(make_model):
    with pytest.raises(ValueError):
        expansion_identity_check(make_model(), 2, 1)


def test_parallel_and_sequential_runs_agree(make_model):
    model = make_model()
    sequential = expansion_identity_check(model, 1, 1, pool=WorkerPool(ExecutionMode.SEQUENTIAL))
    parallel = expansion_identity_check(model, 1, 1, pool=WorkerPool(ExecutionMode.PARALLEL, 4))
    assert sequential.rhs == parallel.rhs


def test_schwinger_matches_direct_series(make_model, pool):
    model = make_model()
    expanded = schwinger(model, 2, 2, pool=pool)
    direct = normalized_schwinger_direct(model, 2)
    assert expanded.coefficients[0] == pytest.approx(model.kernel.value([1.0]), rel=1e-12)
    assert expanded.relative_deviation(direct) <= 1e-6


def test_normalization_without_full_columns(make_model):
    model = make_model(copies=3)
    g = ClusterGraph(model.source_polymer, [Link(box(C0, 1), box(C1, 1))])
    factor = normalization_factor(model, g, 2)
    expected = z0_series(model, 2) ** (-len(g.final_stage))
    assert factor.max_deviation(expected) <= 1e-12


def test_window_sequence(kernel_1d):
    report = window_sequence_check(
        kernel_1d, Interaction.parse("x4"), [(0.5,), (0.5,)], sides=[2, 3, 4],
    )
    assert len(report.coefficients) == 3
    assert len(report.differences) == 2
    assert len(report.contraction) == 1
    assert report.differences[1] < report.differences[0]
    assert report.to_dict()["sides"] == [2, 3, 4]

    # cells 2 and 3 enter at distances 2 and 3 from both sources
    c2, c3 = kernel_1d.value([2.0]), kernel_1d.value([3.0])
    decay = c3 / c2
    assert report.contraction[0] <= decay
    assert report.contraction[0] == pytest.approx(decay ** 2, rel=1e-6)
