"""Model registry and scoring/embedding backends.

The service config maps public model ids to backends. The three standard
scoring ids resolve to pretrained NLI checkpoints loaded lazily through
transformers; the embedding ids resolve to sentence-transformers
checkpoints. A deterministic "hash" backend ships in the same table so the
HTTP contract can be exercised without model weights (tests, dry runs).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from typing import Optional, Protocol, Sequence

import numpy as np


class ModelNotKnown(KeyError):
    pass


class ScoreBackend(Protocol):
    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


class EmbedBackend(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


#: Public model id -> backend spec. Override/extend via a JSON file named
#: by T2S_SIDECAR_CONFIG with the same two-section shape.
DEFAULT_MODEL_TABLE = {
    "score": {
        "BART": {"backend": "zero_shot_nli", "checkpoint": "facebook/bart-large-mnli"},
        "XRoberta_1": {"backend": "zero_shot_nli", "checkpoint": "joeddav/xlm-roberta-large-xnli"},
        "XRoberta_2": {"backend": "zero_shot_nli", "checkpoint": "Jiva/xlm-roberta-large-it-mnli"},
        "hash": {"backend": "hash"},
    },
    "embed": {
        "all-mpnet-base-v2": {
            "backend": "sentence_transformer",
            "checkpoint": "sentence-transformers/all-mpnet-base-v2",
        },
        "distiluse-base-multilingual-cased-v1": {
            "backend": "sentence_transformer",
            "checkpoint": "sentence-transformers/distiluse-base-multilingual-cased-v1",
        },
        "hash": {"backend": "hash", "dim": 64},
    },
}

CONFIG_ENV = "T2S_SIDECAR_CONFIG"


def load_model_table() -> dict:
    table = {section: dict(entries) for section, entries in DEFAULT_MODEL_TABLE.items()}
    override_path = os.environ.get(CONFIG_ENV)
    if override_path:
        with open(override_path, encoding="utf-8") as fh:
            override = json.load(fh)
        for section in ("score", "embed"):
            table.setdefault(section, {}).update(override.get(section, {}))
    return table


def _hash_unit(parts: Sequence[str]) -> float:
    digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class HashScoreBackend:
    """Deterministic scores derived from the pair texts; no model weights."""

    def score(self, pairs):
        return [_hash_unit([premise, hypothesis]) for premise, hypothesis in pairs]


class HashEmbedBackend:
    """Deterministic unit vectors seeded from each text; no model weights."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed(self, texts):
        rows = []
        for text in texts:
            seed = int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")
            rng = np.random.default_rng(seed)
            vec = rng.standard_normal(self.dim)
            rows.append(vec / np.linalg.norm(vec))
        return np.asarray(rows)


class NliScoreBackend:
    """Entailment scoring with a pretrained NLI cross-encoder.

    Standard single-hypothesis zero-shot convention: softmax over the
    entailment and contradiction logits (neutral dropped); the entailment
    probability is the score. Inference only, no sampling, deterministic
    for fixed weights.
    """

    def __init__(self, checkpoint: str):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(checkpoint)
        self.model = AutoModelForSequenceClassification.from_pretrained(checkpoint)
        self.model.eval()
        labels = {name.lower(): idx for idx, name in self.model.config.id2label.items()}
        self.entailment_idx = labels.get("entailment", len(labels) - 1)
        self.contradiction_idx = labels.get("contradiction", 0)

    def score(self, pairs):
        torch = self._torch
        premises = [p for p, _ in pairs]
        hypotheses = [h for _, h in pairs]
        batch = self.tokenizer(premises, hypotheses, return_tensors="pt",
                               padding=True, truncation=True)
        with torch.no_grad():
            logits = self.model(**batch).logits
        two_way = logits[:, [self.contradiction_idx, self.entailment_idx]]
        probs = torch.softmax(two_way, dim=1)[:, 1]
        return [float(min(max(p, 0.0), 1.0)) for p in probs.tolist()]


class SentenceEmbedBackend:
    """Sentence embeddings from a pretrained encoder, unit-normalized."""

    def __init__(self, checkpoint: str):
        from sentence_transformers import SentenceTransformer

        self.model = SentenceTransformer(checkpoint)

    def embed(self, texts):
        vectors = self.model.encode(list(texts), normalize_embeddings=True,
                                    convert_to_numpy=True)
        return np.asarray(vectors, dtype=np.float64)


_SCORE_BACKENDS = {
    "hash": lambda spec: HashScoreBackend(),
    "zero_shot_nli": lambda spec: NliScoreBackend(spec["checkpoint"]),
}

_EMBED_BACKENDS = {
    "hash": lambda spec: HashEmbedBackend(dim=int(spec.get("dim", 64))),
    "sentence_transformer": lambda spec: SentenceEmbedBackend(spec["checkpoint"]),
}


class ModelRegistry:
    """Lazy, lock-protected backend cache; tracks what has been loaded."""

    def __init__(self, table: Optional[dict] = None):
        self.table = table or load_model_table()
        self._loaded: dict[tuple[str, str], object] = {}
        self._lock = threading.Lock()

    def _get(self, section: str, name: str, factories) -> object:
        try:
            spec = self.table[section][name]
        except KeyError:
            raise ModelNotKnown(name) from None
        key = (section, name)
        with self._lock:
            if key not in self._loaded:
                self._loaded[key] = factories[spec["backend"]](spec)
            return self._loaded[key]

    def score_backend(self, name: str) -> ScoreBackend:
        return self._get("score", name, _SCORE_BACKENDS)

    def embed_backend(self, name: str) -> EmbedBackend:
        return self._get("embed", name, _EMBED_BACKENDS)

    @property
    def loaded_models(self) -> list[str]:
        with self._lock:
            return sorted(name for _, name in self._loaded)
