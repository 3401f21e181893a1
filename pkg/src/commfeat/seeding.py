"""Deterministic fan-out of one global seed into per-stage sub-seeds.

Every pipeline stage draws from its own stream derived as
SeedSequence((seed, stage index)); stages are therefore individually
reproducible and insertion of a new stage never shifts the others.
"""

import numpy as np

from .errors import InputError

STAGES = (
    "graph",
    "labels",
    "features",
    "pairs",
    "factorization",
    "row_split",
    "classifier",
)


def stage_seed(seed, stage):
    """Derive the integer sub-seed of a named stage from the global seed."""
    if stage not in STAGES:
        raise InputError(f"unknown seeding stage {stage!r}")
    sequence = np.random.SeedSequence((int(seed), STAGES.index(stage)))
    return int(sequence.generate_state(1, np.uint64)[0])
