"""Keyed random streams.

Every draw in mamlrates comes from a generator keyed by
(master_seed, stream tag, index, attempt), so per-run randomness does not
depend on execution order or worker count.
"""

from enum import IntEnum

import numpy as np


class StreamTag(IntEnum):
    """Independent families of random streams."""

    META_TRAIN = 0
    META_TEST = 1
    MOMENTS = 2
    WISHART = 3
    CONCENTRATION = 4
    SAMPLING = 5


def make_stream(
    master_seed: int,
    tag: StreamTag,
    index: int = 0,
    attempt: int = 0,
) -> np.random.Generator:
    """Return the generator for one (seed, tag, index, attempt) key.

    Args:
        master_seed: Non-negative experiment seed.
        tag: Stream family.
        index: Run or batch index within the family.
        attempt: Resampling attempt for the same index.

    Returns:
        A PCG64-backed generator.

    Raises:
        ValueError: If any key component is negative.
    """
    if master_seed < 0 or index < 0 or attempt < 0:
        raise ValueError("Stream keys must be non-negative")
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(int(tag), index, attempt)
    )
    return np.random.Generator(np.random.PCG64(seq))
