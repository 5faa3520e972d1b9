"""Sentence embeddings behind a pluggable provider, with binary persistence.

The real model lives outside the package (command or HTTP provider); a
token-hashing embedder supplies deterministic vectors for offline tests.
Matrices persist as little-endian float32, row-major, with a JSON sidecar.
"""

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .providers import ProviderError, call_command, call_http

DEFAULT_DIM = 384

_TOKEN = re.compile(r"\w+")


class EmbeddingError(Exception):
    pass


class CorruptEmbeddingsError(EmbeddingError):
    """On-disk matrix and sidecar disagree."""


@dataclass
class EmbeddingMatrix:
    n_rows: int
    dim: int
    values: np.ndarray          # float32, shape (n_rows, dim), row-major
    sentence_ids: list = field(default_factory=list)
    provider_id: str = ""

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        if self.values.shape != (self.n_rows, self.dim):
            raise EmbeddingError(
                f"matrix shape {self.values.shape} != ({self.n_rows}, {self.dim})")
        if len(self.sentence_ids) != self.n_rows:
            raise EmbeddingError(
                f"{len(self.sentence_ids)} sentence_ids for {self.n_rows} rows")
        if not np.isfinite(self.values).all():
            raise EmbeddingError("matrix contains non-finite values")


def hash_embedder(sentence_text, dim, seed=0):
    """Deterministic unit vector from the token multiset of a sentence.

    Each token hashes (with the seed) to two signed coordinate
    contributions; the accumulated vector is L2-normalized.  Carries no
    semantics; exists so pipeline tests run without a model.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    tokens = _TOKEN.findall(sentence_text.lower())
    if not tokens:
        raise EmbeddingError(f"no tokens in text {sentence_text!r}")
    vec = np.zeros(dim, dtype=np.float64)
    for tok in tokens:
        digest = hashlib.blake2b(f"{seed}:{tok}".encode("utf-8"),
                                 digest_size=16).digest()
        for off in (0, 8):
            chunk = digest[off:off + 8]
            idx = int.from_bytes(chunk[:4], "little") % dim
            sign = 1.0 if chunk[4] & 1 else -1.0
            vec[idx] += sign
    norm = np.linalg.norm(vec)
    if norm == 0.0:
        # Signed contributions cancelled exactly; pin a deterministic axis.
        vec[0] = 1.0
        norm = 1.0
    return (vec / norm).astype(np.float32)


class HashEmbeddingProvider:
    """Offline fallback provider wrapping hash_embedder."""

    def __init__(self, dim=DEFAULT_DIM, seed=0):
        self.dim = dim
        self.seed = seed
        self.provider_id = f"hash-v1:dim={dim}:seed={seed}"

    def embed(self, texts):
        return [hash_embedder(t, self.dim, self.seed).tolist() for t in texts]


class CommandEmbeddingProvider:
    """Subprocess provider: JSON texts on stdin, JSON vectors on stdout."""

    def __init__(self, command, provider_id=None):
        self.command = command
        self.provider_id = provider_id or f"command:{command}"

    def embed(self, texts):
        return call_command(self.command, texts)


class HTTPEmbeddingProvider:
    def __init__(self, url, provider_id=None):
        self.url = url
        self.provider_id = provider_id or f"http:{url}"

    def embed(self, texts):
        return call_http(self.url, texts)


def embed_batch(sentences, provider, batch_size=64):
    """Embed SentenceRecords in order; output independent of batch size."""
    if not sentences:
        raise EmbeddingError("no sentences to embed")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rows = []
    dim = None
    for start in range(0, len(sentences), batch_size):
        batch = sentences[start:start + batch_size]
        batch_index = start // batch_size
        try:
            vectors = provider.embed([s.text for s in batch])
        except ProviderError as exc:
            exc.batch_index = batch_index
            raise
        for vec in vectors:
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise EmbeddingError(
                    f"dimension drift in batch {batch_index}: "
                    f"{len(vec)} != {dim}")
            rows.append(vec)
    return EmbeddingMatrix(
        n_rows=len(sentences),
        dim=dim,
        values=np.asarray(rows, dtype=np.float32),
        sentence_ids=[s.sentence_id for s in sentences],
        provider_id=getattr(provider, "provider_id", "unknown"),
    )


def _sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def save_embeddings(m, path):
    """Write float32 little-endian row-major binary plus JSON sidecar."""
    path = Path(path)
    path.write_bytes(m.values.astype("<f4").tobytes(order="C"))
    sidecar = {
        "n_rows": m.n_rows,
        "dim": m.dim,
        "provider_id": m.provider_id,
        "sentence_ids": list(m.sentence_ids),
    }
    _sidecar_path(path).write_text(
        json.dumps(sidecar, indent=1, sort_keys=True), encoding="utf-8")
    return path


def load_embeddings(path):
    path = Path(path)
    sidecar_file = _sidecar_path(path)
    if not path.exists() or not sidecar_file.exists():
        raise CorruptEmbeddingsError(f"missing matrix or sidecar for {path}")
    meta = json.loads(sidecar_file.read_text(encoding="utf-8"))
    n_rows, dim = meta["n_rows"], meta["dim"]
    raw = path.read_bytes()
    expected = n_rows * dim * 4
    if len(raw) != expected:
        raise CorruptEmbeddingsError(
            f"{path} holds {len(raw)} bytes, sidecar implies {expected}")
    if len(meta["sentence_ids"]) != n_rows:
        raise CorruptEmbeddingsError("sidecar sentence_ids/n_rows mismatch")
    values = np.frombuffer(raw, dtype="<f4").reshape(n_rows, dim)
    return EmbeddingMatrix(
        n_rows=n_rows, dim=dim, values=values,
        sentence_ids=list(meta["sentence_ids"]),
        provider_id=meta.get("provider_id", ""),
    )
