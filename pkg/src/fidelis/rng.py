"""Seeded, counter-keyed random substreams.

A substream is identified by a 64-bit base seed plus a tuple of small
non-negative integers (domain tag, graph index, ...). Identical keys yield
bit-identical generators regardless of process, thread, or evaluation
order, which is what makes parallel estimation reproducible.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep streams for unrelated purposes disjoint.
DOMAIN_DATASET = 0
DOMAIN_PLUS = 1
DOMAIN_MINUS = 2
DOMAIN_PERTURB = 3
DOMAIN_CLASSIFIER = 4
DOMAIN_SWEEP = 5
DOMAIN_THEORY = 6
DOMAIN_MISC = 7

_MASK64 = (1 << 64) - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``key`` of the stream seeded by ``seed``."""
    entropy = int(seed) & _MASK64
    spawn_key = tuple(int(k) for k in key)
    return np.random.default_rng(np.random.SeedSequence(entropy=entropy, spawn_key=spawn_key))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit seed deterministically derived from ``(seed, key)``.

    Used where a component needs an independent base seed of its own
    (e.g. the per-cell fidelity runs inside a sweep).
    """
    return int(substream(seed, *key).integers(0, 1 << 63))
