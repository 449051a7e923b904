import numpy as np
import pytest

from qkr import MomentumLattice, Rep, RotorState


@pytest.fixture
def make_random_state():
    """Factory for normalized random momentum-representation states."""

    def build(lattice: MomentumLattice, seed: int = 0) -> RotorState:
        rng = np.random.Generator(np.random.Philox(key=[seed, 0]))
        amps = rng.normal(size=lattice.dim) + 1j * rng.normal(size=lattice.dim)
        amps /= np.linalg.norm(amps)
        return RotorState(amps, Rep.MOMENTUM, lattice)

    return build
