"""
Seed handling shared by every protocol module.

All randomness flows from one integer seed. A party label is hashed into a
second SeedSequence entropy word, so the client, server and adversary streams
are independent and do not depend on the order in which they are created.
"""

import hashlib
from typing import Sequence

import numpy as np


def label_word(label):
    """
    First 8 bytes of sha256(label) as an unsigned integer.

    Args:
        label (str): Stream label, e.g. "client"

    Returns:
        int: 64-bit entropy word
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_seed_sequence(seed, label):
    """
    SeedSequence for the stream ``label`` under ``seed``.

    Args:
        seed (int): Run seed (non-negative)
        label (str): Stream label

    Returns:
        numpy.random.SeedSequence
    """
    if seed is None:
        raise ValueError("A seed is required; ambient entropy is never used")
    if int(seed) < 0:
        raise ValueError(f"Seed must be non-negative, got {seed}")
    return np.random.SeedSequence([int(seed), label_word(label)])


def derive_rng(seed, label):
    """
    Independent numpy Generator for one party.

    Args:
        seed (int): Run seed
        label (str): Stream label ("client", "server", "adversary", ...)

    Returns:
        numpy.random.Generator
    """
    return np.random.default_rng(derive_seed_sequence(seed, label))


def trial_seed(seed, index, label="trial"):
    """
    Seed for trial ``index`` of an experiment.

    Trials get their own seed so that each one can re-derive per-party
    streams exactly as a single run would.

    Args:
        seed (int): Experiment seed
        index (int): Trial number
        label (str): Stream label

    Returns:
        int: 63-bit trial seed
    """
    sequence = np.random.SeedSequence([int(seed), label_word(label), int(index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def random_bits(rng, count):
    """
    ``count`` uniform bits as a list of Python ints.

    Args:
        rng (numpy.random.Generator): Source stream
        count (int): Number of bits

    Returns:
        list[int]
    """
    return [int(b) for b in rng.integers(0, 2, size=count)]


def parity(bits: Sequence[int]) -> int:
    """XOR of a bit sequence."""
    value = 0
    for b in bits:
        value ^= int(b) & 1
    return value
