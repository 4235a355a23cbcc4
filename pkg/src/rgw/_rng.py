"""Deterministic derivation of named random substreams from one master seed."""

import hashlib

import numpy as np


def _label_words(labels):
    h = hashlib.sha256()
    for lab in labels:
        h.update(repr(lab).encode("utf-8"))
        h.update(b"\x1f")
    return [int.from_bytes(h.digest()[i : i + 8], "little") for i in range(0, 32, 8)]


def substream(seed: int, *labels) -> np.random.Generator:
    """Generator for the substream named by ``labels`` under a master ``seed``.

    The labels are hashed (sha256 of their reprs) into the entropy fed to a
    ``SeedSequence``, so streams are stable across runs, platforms and process
    counts, and distinct labels give statistically independent streams.
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *_label_words(labels)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *labels) -> int:
    """63-bit integer seed for the substream named by ``labels``."""
    words = _label_words((int(seed) & 0xFFFFFFFFFFFFFFFF, *labels))
    return words[0] & 0x7FFFFFFFFFFFFFFF
