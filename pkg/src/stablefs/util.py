"""Small shared helpers."""

import numpy as np


def derive_seed(seed: int, *tags: int) -> int:
    """Derive a reproducible integer sub-seed from a master seed and tags.

    Every source of randomness in the package flows from one user-facing
    seed; sub-components get independent streams by mixing fixed integer
    tags through a SeedSequence.
    """
    ss = np.random.SeedSequence([int(seed)] + [int(t) for t in tags])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def format_float(value: float) -> str:
    """Render a float with enough digits to round-trip exactly."""
    return format(float(value), ".17g")
