"""Deterministic label embeddings standing in for a pretrained text encoder.

Each label string hashes (FNV-1a) to a PRNG seed; the embedding is a unit
vector of Gaussian draws from that stream. The same label therefore always
maps to the same vector, on any platform, with no model weights involved.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import XorShift64Star, fnv1a64, splitmix64


class LabelEmbeddingTable:
    """Maps label strings to deterministic unit vectors of dimension `d_clip`."""

    def __init__(self, d_clip: int = 32, seed: int = 0):
        if d_clip < 1:
            raise ValueError("d_clip must be >= 1")
        self.d_clip = d_clip
        _, self._seed_mix = splitmix64(seed)
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, label: str) -> np.ndarray:
        vec = self._cache.get(label)
        if vec is None:
            stream = XorShift64Star(fnv1a64(label.encode("utf-8")) ^ self._seed_mix)
            raw = np.array([stream.normal() for _ in range(self.d_clip)])
            norm = math.sqrt(float(raw @ raw))
            if norm == 0.0:
                raw[0] = 1.0
                norm = 1.0
            vec = raw / norm
            vec.flags.writeable = False
            self._cache[label] = vec
        return vec

    def embed_labels(self, labels: list[str]) -> np.ndarray:
        """Stacked embeddings, one row per label, each unit norm."""
        return np.stack([self.embed(label) for label in labels])


def embed_labels(labels: list[str], table: LabelEmbeddingTable) -> np.ndarray:
    return table.embed_labels(labels)
