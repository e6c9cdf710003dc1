import math

import numpy as np
import pytest
from scipy import special

from monocluster_core.core.kernel import (
    TOL_PSD,
    Kernel,
    fit_decay_constant,
    make_slice_kernel,
    slice_tail_bound,
)


def test_origin_value_matches_closed_form(kernel_1d):
    # (1/2pi) int e^{-p^2}/(p^2+1) dp = e erfc(1) / 2
    expected = math.e * special.erfc(1.0) / 2.0
    assert kernel_1d.value([0.0]) == pytest.approx(expected, abs=1e-10)


def test_symmetry(kernel_1d):
    rng = np.random.default_rng(1)
    for x, y in rng.uniform(-3.0, 3.0, size=(20, 2)):
        assert abs(kernel_1d([x], [y]) - kernel_1d([y], [x])) <= 1e-15


def test_decay_at_distance_ten(kernel_1d):
    ratio = abs(kernel_1d.value([10.0])) / kernel_1d.value([0.0])
    assert ratio < 1e-3


def test_gram_matrix_is_positive(kernel_1d):
    rng = np.random.default_rng(7)
    points = rng.uniform(0.0, 10.0, size=(40, 1))
    assert kernel_1d.min_gram_eigenvalue(points) >= -TOL_PSD


def test_gram_is_symmetric_and_cached(kernel_1d):
    points = np.array([[0.5], [1.5], [2.5]])
    gram = kernel_1d.gram(points)
    assert np.array_equal(gram, gram.T)
    assert gram[0, 1] == pytest.approx(kernel_1d.value([1.0]), rel=1e-13)
    assert kernel_1d.cache_size > 0


def test_decay_constant_at_zero_is_origin_value(kernel_1d):
    assert fit_decay_constant(kernel_1d, 0, 5.0) == kernel_1d.value([0.0])
    assert kernel_1d.decay_constants[0] == kernel_1d.value([0.0])


def test_decay_constant_grows_with_exponent_and_radius(kernel_1d):
    assert fit_decay_constant(kernel_1d, 2, 10.0) <= fit_decay_constant(kernel_1d, 4, 10.0)
    assert fit_decay_constant(kernel_1d, 6, 10.0) <= fit_decay_constant(kernel_1d, 6, 20.0)


def test_decay_constant_is_stable_in_radius(kernel_1d):
    near = fit_decay_constant(kernel_1d, 6, 20.0)
    far = fit_decay_constant(kernel_1d, 6, 40.0)
    assert abs(far - near) / near < 0.01


def test_decay_constant_rejects_bad_arguments(kernel_1d):
    with pytest.raises(ValueError):
        fit_decay_constant(kernel_1d, 2, 0.5)
    with pytest.raises(ValueError):
        fit_decay_constant(kernel_1d, -1, 5.0)


def test_invalid_dimension_and_cutoff():
    with pytest.raises(ValueError):
        make_slice_kernel(0, 16)
    # erfc(2) leaves far more than the allowed tail mass
    with pytest.raises(ValueError):
        make_slice_kernel(1, 16, cutoff=2.0)


def test_tail_bound_decreases():
    assert slice_tail_bound(1, 8.0) < slice_tail_bound(1, 4.0) < slice_tail_bound(1, 2.0)


def test_custom_kernel_checks_dimension():
    kernel = Kernel(2, lambda s: np.exp(-np.sum(s ** 2, axis=1)), name="gauss")
    assert kernel.value([0.0, 0.0]) == 1.0
    with pytest.raises(ValueError):
        kernel.values(np.zeros((3, 1)))
