"""Comparison baselines: uniform random, constant neutral, and the
sentence-embedding similarity heuristic."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

import numpy as np
import requests

from .errors import MissingEmbeddingError, ProviderError, ProviderProtocolError
from .stance import NEUTRAL, map_m1

logger = logging.getLogger(__name__)

BASELINE_KINDS = ("random", "predict3", "sentence_embed")

DEFAULT_SEED = 42
DEFAULT_TOP_K = 10


@dataclass(frozen=True)
class BaselineConfig:
    kind: str
    seed: int = DEFAULT_SEED
    top_k: int = DEFAULT_TOP_K

    def __post_init__(self) -> None:
        if self.kind not in BASELINE_KINDS:
            raise ValueError(f"kind must be one of {BASELINE_KINDS}, got {self.kind!r}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


def baseline_random(rng: np.random.Generator) -> int:
    """One label drawn uniformly from {1..5}; seed the generator once per
    experiment run."""
    return int(rng.integers(1, 6))


def baseline_predict3() -> int:
    """Always the neutral label."""
    return NEUTRAL


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cannot take cosine similarity with a zero-norm vector")
    return float(np.dot(a, b) / (na * nb))


def scale_unit_interval(values: np.ndarray) -> np.ndarray:
    """Min-max scale a value set onto [0, 1]; a constant set maps to 0."""
    values = np.asarray(values, dtype=np.float64)
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def baseline_sentence_embed(
    timeline_embeds: Sequence[np.ndarray],
    sentence_embed: np.ndarray,
    top_k: int = DEFAULT_TOP_K,
) -> int:
    """Similarity-based label: cosine similarity of each tweet embedding to
    the statement embedding, min-max scaled over the timeline's similarity
    set, averaged over the ``top_k`` largest values (all of them when the
    timeline is shorter), then mapped through the five-level step function.

    An empty timeline yields the neutral 3. A constant similarity set
    scales to all zeros (the scaler's zero-range convention).
    """
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    if len(timeline_embeds) == 0:
        return NEUTRAL
    sentence = np.asarray(sentence_embed, dtype=np.float64)
    dims = {len(np.asarray(e).ravel()) for e in timeline_embeds} | {len(sentence.ravel())}
    if len(dims) != 1:
        raise ValueError(f"embedding dimensions differ: {sorted(dims)}")
    sims = np.array([cosine_similarity(e, sentence) for e in timeline_embeds])
    scaled = scale_unit_interval(sims)
    top = np.sort(scaled)[::-1][:top_k]
    return map_m1(min(float(top.mean()), 1.0))


class EmbeddingProvider(Protocol):
    def embed(self, model: str, items: Sequence[tuple[str, str]]) -> list[np.ndarray]:
        """Vectors aligned with ``items`` ((id, text) pairs)."""
        ...


def load_embedding_file(path: str | Path) -> dict[str, np.ndarray]:
    """Read a JSONL embedding replay file ({"id", "dim", "values"} lines)."""
    vectors: dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            obj = json.loads(line)
            if not isinstance(obj, dict) or not {"id", "dim", "values"} <= set(obj):
                raise ValueError(f"{path}:{lineno}: expected id/dim/values keys")
            values = np.asarray(obj["values"], dtype=np.float64)
            if values.ndim != 1 or len(values) != int(obj["dim"]):
                raise ValueError(f"{path}:{lineno}: values do not match declared dim")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"{path}:{lineno}: non-finite embedding values")
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(f"{path}:{lineno}: inconsistent dim {len(values)} != {dim}")
            vectors[obj["id"]] = values
    return vectors


class FileReplayEmbeddings:
    """Serves embeddings recorded in a replay file, keyed by item id."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._vectors = load_embedding_file(self.path)

    def embed(self, model, items):
        missing = [item_id for item_id, _ in items if item_id not in self._vectors]
        if missing:
            raise MissingEmbeddingError(f"{self.path}: no embedding for id(s) {missing[:10]}")
        return [self._vectors[item_id] for item_id, _ in items]


class RemoteEmbeddings:
    """Embeddings fetched from the inference sidecar's POST /embed endpoint."""

    def __init__(self, base_url: str, *, timeout: float = 60.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.session = session or requests.Session()

    def embed(self, model, items):
        payload = {"model": model, "texts": [text for _, text in items]}
        try:
            resp = self.session.post(f"{self.base_url}/embed", json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderError(f"{self.base_url}/embed unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(f"{self.base_url}/embed answered HTTP {resp.status_code}")
        body = resp.json()
        vectors = [np.asarray(v, dtype=np.float64) for v in body.get("vectors", [])]
        if len(vectors) != len(items):
            raise ProviderProtocolError(
                f"{self.base_url}/embed returned {len(vectors)} vectors for {len(items)} texts"
            )
        return vectors


class MockEmbeddings:
    """Deterministic unit vectors seeded from each item id; for tests."""

    def __init__(self, dim: int = 32):
        self.dim = dim

    def embed(self, model, items):
        out = []
        for item_id, _ in items:
            seed = int.from_bytes(hashlib.sha256(item_id.encode()).digest()[:8], "big")
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dim)
            out.append(vec / np.linalg.norm(vec))
        return out
