"""Token encoders behind a tiny registry.

The deterministic toy encoders make every test and demo reproducible without
model downloads; pretrained encoders plug in through the same
``encode_tokens`` surface via `register_encoder`.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..simscore import tokenize


class ToyHashEncoder:
    """Maps each token to a fixed pseudo-random unit vector via a stable hash."""

    def __init__(self, dim: int = 32):
        self.encoder_id = "toy"
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._cache[token] = vec
        return vec

    def encode_tokens(self, tokens: list[str]) -> np.ndarray:
        if not tokens:
            return np.zeros((0, self.dim))
        return np.stack([self._vector(tok) for tok in tokens])


class OrthogonalTestEncoder:
    """Assigns each distinct token its own basis vector; exact orthogonality.

    Intended for tests that need cosine 0 between different tokens. Capacity
    is the dimension; exceeding it raises.
    """

    def __init__(self, dim: int = 512):
        self.encoder_id = "toy-orthogonal"
        self.dim = dim
        self._index: dict[str, int] = {}

    def encode_tokens(self, tokens: list[str]) -> np.ndarray:
        out = np.zeros((len(tokens), self.dim))
        for row, tok in enumerate(tokens):
            idx = self._index.get(tok)
            if idx is None:
                idx = len(self._index)
                if idx >= self.dim:
                    raise ValueError(f"orthogonal encoder capacity {self.dim} exhausted")
                self._index[tok] = idx
            out[row, idx] = 1.0
        return out


class PretrainedEncoderAdapter:
    """Seam for transformer encoders; requires local weights.

    Wraps a Hugging Face model/tokenizer pair into the ``encode_tokens``
    surface. Kept import-lazy so the package never needs torch at runtime.
    """

    def __init__(self, model_path: str, encoder_id: str | None = None):
        try:
            from transformers import AutoModel, AutoTokenizer  # noqa: PLC0415
        except ImportError as exc:
            raise RuntimeError(f"encoder {encoder_id or model_path!r} needs transformers installed") from exc
        self.encoder_id = encoder_id or model_path
        self._tokenizer = AutoTokenizer.from_pretrained(model_path)
        self._model = AutoModel.from_pretrained(model_path)
        self._model.eval()
        self.dim = int(self._model.config.hidden_size)

    def encode_tokens(self, tokens: list[str]) -> np.ndarray:
        import torch  # noqa: PLC0415

        if not tokens:
            return np.zeros((0, self.dim))
        encoded = self._tokenizer(" ".join(tokens), return_tensors="pt", truncation=True)
        with torch.no_grad():
            hidden = self._model(**encoded).last_hidden_state[0]
        return hidden.numpy().astype(float)


_FACTORIES = {
    "toy": ToyHashEncoder,
    "toy-orthogonal": OrthogonalTestEncoder,
}
_INSTANCES: dict[str, object] = {}


def register_encoder(encoder_id: str, factory) -> None:
    _FACTORIES[encoder_id] = factory
    _INSTANCES.pop(encoder_id, None)


def get_encoder(encoder_id: str):
    if encoder_id not in _FACTORIES:
        raise ValueError(f"encoder {encoder_id!r} is not registered")
    if encoder_id not in _INSTANCES:
        _INSTANCES[encoder_id] = _FACTORIES[encoder_id]()
    return _INSTANCES[encoder_id]


def encode(text: str, encoder) -> np.ndarray:
    """One vector per token; empty text gives an empty sequence."""
    if isinstance(encoder, str):
        encoder = get_encoder(encoder)
    return encoder.encode_tokens(tokenize(text))
