"""Deterministic random-stream construction.

Every stochastic routine in the package draws from a counter-based Philox
generator keyed by a 64-bit seed and a 64-bit stream label.  Streams with
different labels are statistically independent, and a (seed, stream) pair
always reproduces the same draws regardless of how many other streams were
consumed before it.

Trial-level keys are derived with a splitmix64 finalizer so that adding or
removing entries from a sweep (extra N values, extra trials) never reshuffles
the randomness of the remaining trials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 finalization round (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


def hash_label(label: str) -> int:
    """64-bit FNV-1a hash of a string label, for keying named streams."""
    h = 0xCBF29CE484222325
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


def mix(*parts: int) -> int:
    """Fold integer parts into one 64-bit key.

    Each part is absorbed through a splitmix64 round, so the result is
    sensitive to order and to every part.
    """
    h = 0
    for part in parts:
        h = splitmix64((h ^ (part & _MASK64)) & _MASK64)
    return h


@dataclass(frozen=True)
class SeededRng:
    """A (seed, stream) pair naming one independent Philox stream."""

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < (1 << 64):
            raise ValueError("seed must fit in 64 bits")
        if not 0 <= self.stream < (1 << 64):
            raise ValueError("stream must fit in 64 bits")

    def generator(self) -> np.random.Generator:
        """Fresh generator at the start of this stream."""
        key = (self.stream << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, label: str, *indices: int) -> "SeededRng":
        """Derived stream for a named sub-purpose (same seed, mixed stream)."""
        return SeededRng(self.seed, mix(self.stream, hash_label(label), *indices))


def trial_stream(base_seed: int, experiment_id: str, n_data: int, trial: int) -> SeededRng:
    """Stream for one Monte Carlo trial.

    The stream label mixes the experiment id, the data-collection length N
    and the trial index, so every (experiment, N, trial) cell is independent
    and stable under changes to the rest of the sweep grid.
    """
    return SeededRng(base_seed, mix(hash_label(experiment_id), n_data, trial))
