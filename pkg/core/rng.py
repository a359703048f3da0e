"""
The deterministic randomness contract: one 64-bit seed drives numpy and torch.
"""

from dataclasses import dataclass

import numpy as np
import torch


@dataclass(frozen=True)
class RngSeed:
    seed: int

    def __post_init__(self):
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def __int__(self):
        return int(self.seed)


def as_seed(seed):
    """Accept an RngSeed or a plain int."""
    return int(seed) if not isinstance(seed, RngSeed) else seed.seed


def make_rng(seed):
    """
    numpy Generator for a seed.

    Args:
        seed (RngSeed | int): Run seed.

    Returns:
        np.random.Generator: PCG64 generator.
    """
    return np.random.default_rng(np.random.SeedSequence(as_seed(seed)))


def derive_seed(seed, *keys):
    """Deterministic child seed for (seed, key, ...), e.g. one per sweep grid point."""
    keys = [int(k) for k in keys]
    state = np.random.SeedSequence([as_seed(seed), *keys]).generate_state(2, dtype=np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


def torch_generator(seed):
    # torch only accepts seeds in the signed 64-bit range
    gen = torch.Generator()
    gen.manual_seed(as_seed(seed) % (2 ** 63))
    return gen
