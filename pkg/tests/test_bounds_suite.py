import math

import numpy as np
import pytest

from monocluster_core.core.bounds_suite import (
    BoundConstants,
    BoundsSuite,
    CheckReport,
    count_box_procedures,
    derivation_count_check,
    k3_constant,
    k6_constant,
    lattice_decay_sum,
    local_factorial_check,
    majorant_sum,
    majorant_check,
    parasite_bound_check,
    row_sum_check,
    simplex_integral_check,
    simplex_suite,
    triple_link_check,
    volume_argument_check,
)
from monocluster_core.config.loader import ConfigLoader
from monocluster_core.core.cluster_graph import ClusterGraph, enumerate_graphs
from monocluster_core.core.errors import ContractViolation
from monocluster_core.core.gaussian_engine import Interaction
from monocluster_core.core.mayer_lattice import Cell, MayerBox, Window
from monocluster_core.core.polymer import Polymer
from monocluster_core.core.worker_pool import ExecutionMode, WorkerPool


@pytest.fixture
def constants():
    # frozen for the two-cell window of make_model, p <= 2
    return ConfigLoader().load_constants()


@pytest.fixture
def suite(make_model, constants):
    return BoundsSuite(make_model(), 2, constants=constants, trials=30,
                       pool=WorkerPool(ExecutionMode.SEQUENTIAL))


# -- simplex integrals -------------------------------------------------------

def test_simplex_integral_examples():
    assert simplex_integral_check(1, [1]).exact == "1"
    assert simplex_integral_check(2, [1, 2]).exact == "1/2"
    result = simplex_integral_check(2, [1])
    assert result.value == pytest.approx(1.0)
    assert result.bound == pytest.approx(math.e ** 2)
    assert result.passed


def test_simplex_integral_rejects_bad_input():
    with pytest.raises(ValueError):
        simplex_integral_check(0, [])
    with pytest.raises(ValueError):
        simplex_integral_check(2, [3])


def test_simplex_suite_up_to_five_links():
    report = simplex_suite(5)
    assert report.passed
    assert report.details["cases"] == sum(2 ** p for p in range(1, 6))
    # p = 5 goes through the 50-digit path
    assert simplex_integral_check(5, [1, 2, 3, 4, 5]).value == pytest.approx(1.0 / 24.0 / 5.0, rel=1e-12)


# -- constants ---------------------------------------------------------------

def test_lattice_decay_sum():
    exact = 3.0 + 2.0 * (math.pi ** 2 / 6.0 - 1.0)
    assert lattice_decay_sum(1, 2, 10) >= exact
    assert lattice_decay_sum(1, 2, 40) <= lattice_decay_sum(1, 2, 10)
    with pytest.raises(ValueError):
        lattice_decay_sum(1, 1, 10)
    with pytest.raises(ValueError):
        lattice_decay_sum(1, 2, 0)


def test_interaction_constants():
    c00 = 0.2
    assert k3_constant(Interaction.parse("x4"), c00) == pytest.approx(1.0 + 3.0 * c00)
    assert k6_constant(Interaction.parse("x4")) == 0.0
    assert k6_constant(Interaction.parse("x4-x2")) == pytest.approx(0.25, abs=1e-12)


def test_constants_round_trip(constants):
    assert constants.r1 == 16 and constants.r == 18
    assert BoundConstants.from_dict(constants.to_dict()) == constants
    data = constants.to_dict()
    data.pop("k10")
    with pytest.raises(ValueError):
        BoundConstants.from_dict(data)


def test_fresh_calibration_stays_within_frozen_constants(make_model, constants):
    fresh = BoundConstants.calibrate(make_model(), 2)
    assert (fresh.d, fresh.m, fresh.n, fresh.r1, fresh.r) == (1, 2, 2, 16, 18)
    assert (constants.d, constants.m, constants.n, constants.r1, constants.r) == (1, 2, 2, 16, 18)
    assert fresh.c00 == pytest.approx(constants.c00, rel=1e-8)
    assert fresh.p_norm == constants.p_norm
    assert fresh.k5 == pytest.approx(math.sqrt(math.e * fresh.k4))
    for name in ("k1_r", "k1_d1", "k2", "k3", "k4", "k5", "k6", "k7", "k9", "k10"):
        assert getattr(fresh, name) <= getattr(constants, name), name
    # the family has the empty graph and the roof-roof link between the copy-1 boxes
    assert fresh.k7 == 1.0
    assert fresh.k10 == pytest.approx(1.0 / (2.0 * math.e), rel=1e-12)


def test_frozen_constants_reject_another_source_count(make_model, constants):
    with pytest.raises(ValueError, match="n=2"):
        BoundsSuite(make_model(sources=((0.5,),)), 2, constants)


# -- parasite factors --------------------------------------------------------

def test_parasite_ratio_at_zero_coupling(make_model, constants):
    model = make_model()
    g = ClusterGraph(model.source_polymer)
    report = parasite_bound_check(model, g, constants)
    assert report.passed
    assert report.details["ratio"] == pytest.approx(1.0, abs=1e-12)


def test_parasite_bound_at_small_coupling(make_model, constants):
    model = make_model(coupling=0.1)
    for g in enumerate_graphs(model.window, model.source_polymer, 2):
        if g.is_contributing():
            assert parasite_bound_check(model, g, constants).passed


# -- row sums ----------------------------------------------------------------

def test_row_sum_of_a_single_box():
    g = ClusterGraph(Polymer({MayerBox(Cell((0,)), 0)}))
    assert row_sum_check(g, ()) == pytest.approx(1.0)


def test_row_sums_on_a_three_cell_window():
    rng = np.random.default_rng(3)
    window = Window.hypercube(1, 3, 2)
    sources = Polymer({MayerBox(Cell((1,)), 0)})
    for g in enumerate_graphs(window, sources, 3):
        if not g.is_contributing():
            continue
        h = tuple(np.sort(rng.uniform(0.0, 1.0, g.p))[::-1])
        assert row_sum_check(g, h) <= 1.0 + 1e-12


@pytest.mark.slow
def test_row_sums_exhaustive_up_to_four_links():
    rng = np.random.default_rng(6)
    window = Window.hypercube(1, 3, 3)
    sources = Polymer({MayerBox(Cell((1,)), 0)})
    checked = 0
    for g in enumerate_graphs(window, sources, 4):
        if not g.is_contributing():
            continue
        checked += 1
        for _ in range(20):
            h = tuple(np.sort(rng.uniform(0.0, 1.0, g.p))[::-1])
            assert row_sum_check(g, h) <= 1.0 + 1e-12
    assert checked > 1


def test_covariance_majorant(make_model, constants):
    model = make_model()
    rng = np.random.default_rng(4)
    for g in enumerate_graphs(model.window, model.source_polymer, 2):
        if g.is_contributing():
            h = tuple(np.sort(rng.uniform(0.0, 1.0, g.p))[::-1])
            assert majorant_check(model, g, h, constants).passed


# -- structure and counting --------------------------------------------------

def test_no_triple_links_up_to_four():
    report = triple_link_check(Window.hypercube(1, 3, 2), 4)
    assert report.passed
    assert report.details["graphs_checked"] > 0


@pytest.mark.slow
def test_no_triple_links_with_three_copies():
    assert triple_link_check(Window.hypercube(1, 3, 3), 4).passed


def test_volume_argument():
    report = volume_argument_check(Window.hypercube(1, 3, 2), 3, 2)
    assert report.passed
    assert report.details["r1"] == 16


def test_count_box_procedures():
    assert count_box_procedures(0, 2, [4]) == 1
    # one source or one of four fields of a new vertex
    assert count_box_procedures(1, 1, [4]) == 5
    # 4 ways to open, then 4 new + 3 remaining
    assert count_box_procedures(2, 0, [4]) == 28


def test_derivation_counts(make_model):
    assert derivation_count_check(make_model(), 2).passed


# -- suite -------------------------------------------------------------------

def test_suite_groups(suite):
    for group in ("simplex", "link_structure", "volume", "local_factorials"):
        reports = suite.run(group)
        assert reports and all(isinstance(r, CheckReport) for r in reports)
        assert all(r.passed for r in reports)


def test_convergence_at_the_default_coupling(suite):
    (report,) = suite.run("convergence")
    assert report.passed
    assert report.worst_ratio <= report.limit


def test_unknown_group(suite):
    with pytest.raises(ValueError):
        suite.run("bogus")


def test_failed_report_raises():
    report = CheckReport("row_sums", False, 1.5, witness={"h": [0.5]})
    assert not report
    with pytest.raises(ContractViolation) as info:
        report.raise_on_failure()
    assert info.value.to_record()["check"] == "row_sums"


def test_local_factorial_check_direct(make_model, constants):
    report = local_factorial_check(make_model(), constants, trials=20, seed=3)
    assert report.passed, report.witness


def test_majorant_sum_is_geometric_at_default_coupling(make_model, constants):
    lam = 0.25 / (math.e * constants.k9 * constants.k10)
    report = majorant_sum(make_model(), constants, 2, lam)
    assert report.passed
    assert len(report.terms) == 3
    assert all(b >= a for a, b in zip(report.partial_sums, report.partial_sums[1:]))


@pytest.mark.slow
def test_majorant_convergence_up_to_four_links(make_model):
    model = make_model(side=3, copies=2, sources=((1.5,),))
    constants = BoundConstants.calibrate(model, 4)
    lam = 0.5 / (2.0 * math.e * constants.k9 * constants.k10)
    report = majorant_sum(model, constants, 4, lam)
    assert report.geometric_ratio == pytest.approx(0.5)
    assert len(report.terms) == 5
    assert report.passed
    assert all(t <= g * (1.0 + 1e-9) for t, g in zip(report.terms, report.geometric_terms))
    assert all(r <= 0.5 + 0.05 for r in report.increment_ratios)
