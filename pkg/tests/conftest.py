import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from pinning import renewal


@pytest.fixture(scope="session")
def kernel_half():
    """Canonical alpha = 0.5 kernel at a small horizon."""
    return renewal.make_kernel(0.5, 256)


@pytest.fixture(scope="session")
def mass_half(kernel_half):
    return renewal.mass_table(kernel_half, 256)


@pytest.fixture(scope="session")
def delta_kernel():
    """Deterministic unit-gap kernel: every jump has length one."""
    import numpy as np
    return renewal.RenewalKernel(alpha=1.0, horizon=1, probs=np.array([1.0]))
