"""Deterministic random-stream management.

One master seed fans out into independent named substreams so adding a new
consumer never shifts the draws seen by existing ones. The splitting rule is
fixed and documented here: the child stream for ``name`` is

    PCG64(SeedSequence(entropy=master_seed, spawn_key=(crc32(name),)))

Runs use the stream names below; anything else is free for callers.
"""
from __future__ import annotations

import zlib

import numpy as np

#: Streams consumed by the training harness.
STREAM_DATASET = "dataset"        # synthetic dataset generation
STREAM_DATA_ORDER = "data"        # per-epoch mini-batch shuffling
STREAM_SPLIT = "split"            # train/validation split
STREAM_NOISE = "noise"            # stress-scaled noise injection
STREAM_PLASTIC = "plastic"        # plastic-deformation draws
STREAM_PROBES = "probes"          # randomized trace probes
STREAM_DIRECTIONS = "directions"  # loss-surface direction vectors


def substream(master_seed: int, name: str) -> np.random.Generator:
    """Return the named child generator of ``master_seed``."""
    key = zlib.crc32(name.encode("utf-8"))
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(key,))
    return np.random.default_rng(seq)
