import pytest

from monocluster_core.core.gaussian_engine import DiscretizedModel, Interaction
from monocluster_core.core.kernel import make_slice_kernel
from monocluster_core.core.mayer_lattice import Window


@pytest.fixture(scope="session")
def kernel_1d():
    return make_slice_kernel(1, 16)


@pytest.fixture
def make_model(kernel_1d):
    """Factory for d=1 models on the window {0..side-1} x {0..copies}."""

    def build(side=2, copies=1, sources=((0.5,), (1.5,)), poly="x4", coupling=0.0):
        window = Window.hypercube(1, side, copies)
        return DiscretizedModel(
            window=window,
            kernel=kernel_1d,
            interaction=Interaction.parse(poly),
            sources=tuple(sources),
            coupling=coupling,
        )

    return build
