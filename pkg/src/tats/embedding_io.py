"""Embedding interchange: binary TSEMB1 files, CSV fallback, token
pooling, mean-centering, and a dependency-free hashing embedder used to
keep the test suite hermetic.

TSEMB1 layout (all little-endian regardless of host):
  bytes 0..5    magic "TSEMB1"
  bytes 6..9    T  (uint32)
  bytes 10..13  d  (uint32)
  bytes 14..    T*d float32 values, row-major
"""

import csv
import struct
from pathlib import Path

import numpy as np

from .data import EmbeddingSequence
from .errors import BadMagic, EmptyText, NonFinite, TruncatedPayload
from .validation import check_matrix

MAGIC = b"TSEMB1"
_HEADER = struct.Struct("<6sII")

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def write_embeddings(embeddings, path):
    """Write an embedding matrix as a TSEMB1 file (float32 payload)."""
    if isinstance(embeddings, EmbeddingSequence):
        vectors = embeddings.vectors
    else:
        vectors = check_matrix(embeddings, "embeddings")
    t, d = vectors.shape
    payload = vectors.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, t, d))
        fh.write(payload)


def read_embeddings(path):
    """Read a TSEMB1 file back into an EmbeddingSequence."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size or raw[:6] != MAGIC:
        raise BadMagic(f"{path}: not a TSEMB1 file")
    _, t, d = _HEADER.unpack_from(raw)
    expected = 4 * t * d
    body = raw[_HEADER.size :]
    if len(body) < expected:
        raise TruncatedPayload(
            f"{path}: header claims {expected} payload bytes, found {len(body)}"
        )
    vectors = np.frombuffer(body[:expected], dtype="<f4").reshape(t, d)
    vectors = vectors.astype(np.float64)
    if not np.all(np.isfinite(vectors)):
        raise NonFinite(f"{path}: payload contains non-finite values")
    return EmbeddingSequence(vectors)


def read_embeddings_csv(path):
    """Read a headerless CSV of T rows x d numeric columns."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            rows.append([float(cell) for cell in row])
    return EmbeddingSequence(np.asarray(rows, dtype=np.float64))


def load_embeddings(path):
    """Dispatch on extension: .csv goes through the text reader."""
    if str(path).lower().endswith(".csv"):
        return read_embeddings_csv(path)
    return read_embeddings(path)


def pool_tokens(token_vectors, mode="avg"):
    """Collapse per-token vectors to one embedding row."""
    if mode != "avg":
        raise ValueError(f"unsupported pooling mode {mode!r}")
    token_vectors = np.asarray(token_vectors, dtype=np.float64)
    if token_vectors.ndim != 2 or token_vectors.shape[0] == 0:
        raise EmptyText("pooling requires at least one token vector")
    return token_vectors.mean(axis=0)


def mean_center(embeddings):
    """Subtract the global mean embedding from every row."""
    if isinstance(embeddings, EmbeddingSequence):
        vectors = embeddings.vectors
    else:
        vectors = check_matrix(embeddings, "embeddings")
    return EmbeddingSequence(vectors - vectors.mean(axis=0, keepdims=True))


def _fnv1a(data, seed):
    """64-bit FNV-1a over the seed's little-endian bytes then the data."""
    h = FNV_OFFSET
    for b in int(seed & _MASK64).to_bytes(8, "little"):
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK64
    return h


def hash_embed(text, d, seed=0):
    """Deterministic signed-bucket embedding of whitespace tokens.

    Each token hashes to a bucket (h mod d) and a sign (bit 63); token
    contributions accumulate and the result is L2-normalized when
    nonzero. Identical (text, d, seed) always yields identical vectors,
    on every platform.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    vec = np.zeros(d)
    for token in text.split():
        h = _fnv1a(token.encode("utf-8"), seed)
        index = h % d
        sign = -1.0 if (h >> 63) & 1 else 1.0
        vec[index] += sign
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


def hash_embed_texts(texts, d, seed=0):
    """Stack hash_embed over a list of texts into an EmbeddingSequence."""
    rows = np.stack([hash_embed(t, d, seed) for t in texts])
    return EmbeddingSequence(rows)
