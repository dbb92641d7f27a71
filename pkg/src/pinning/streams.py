"""Counter-based random streams.

Every sampler in this package draws from a Philox counter-based generator
keyed by ``(seed, domain, stream)``.  Two draws with the same key triple are
bit-identical; draws with different triples are independent.  This makes
replica sharding structural: worker processes can claim arbitrary replica
indices without coordinating, and results do not depend on how work was
split.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep unrelated samplers off each other's streams even when the
# caller reuses one master seed everywhere.
PATH = 1
BRIDGE = 2
ENV = 3
TILT = 4
SPINE = 5

_MASK64 = (1 << 64) - 1


def stream(seed: int, domain: int, substream: int = 0) -> np.random.Generator:
    """Return the generator for key ``(seed, domain, substream)``."""
    if domain < 0 or substream < 0:
        raise ValueError("domain and substream tags must be nonnegative")
    key = np.array(
        [int(seed) & _MASK64, ((int(domain) << 48) ^ int(substream)) & _MASK64],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(key=key))
