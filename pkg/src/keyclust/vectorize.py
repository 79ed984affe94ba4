"""Corpus vocabulary and L2-normalized tf-idf chunk vectors.

tf-idf is used instead of raw counts so frequent words do not dominate the
vector values, and each vector is normalized onto the unit sphere so no
chunk becomes an outlier by sheer length.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyCorpus
from .preprocess import Chunk


@dataclass
class Vocabulary:
    """Immutable after build; term indices are dense 0..V-1 in sorted term order."""

    term_to_index: dict[str, int]
    document_frequency: dict[str, int]
    n_chunks: int

    def __len__(self) -> int:
        return len(self.term_to_index)

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_index

    def idf(self, term: str) -> float:
        """Smoothed inverse document frequency: ln((1+N)/(1+df)) + 1."""
        return math.log((1 + self.n_chunks) / (1 + self.document_frequency[term])) + 1.0

    def to_records(self) -> list[dict[str, Any]]:
        return [
            {"term": term, "index": idx, "df": self.document_frequency[term]}
            for term, idx in sorted(self.term_to_index.items(), key=lambda kv: kv[1])
        ]

    @classmethod
    def from_records(cls, records: Iterable[Mapping[str, Any]], n_chunks: int) -> "Vocabulary":
        term_to_index = {}
        df = {}
        for rec in records:
            term_to_index[rec["term"]] = rec["index"]
            df[rec["term"]] = rec["df"]
        return cls(term_to_index=term_to_index, document_frequency=df, n_chunks=n_chunks)


@dataclass
class TfIdfVector:
    """Sparse normalized term vector for one chunk.

    ``entries`` maps column index to weight; ``norm`` is the Euclidean norm
    of the stored entries (1 within 1e-9 for non-empty vectors, 0 for a
    chunk whose every token fell outside the vocabulary).
    """

    chunk_id: str
    entries: dict[int, float] = field(default_factory=dict)
    norm: float = 0.0

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def to_record(self) -> dict[str, Any]:
        return {
            "chunk_id": self.chunk_id,
            "entries": [[i, w] for i, w in sorted(self.entries.items())],
            "norm": self.norm,
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "TfIdfVector":
        return cls(
            chunk_id=rec["chunk_id"],
            entries={int(i): float(w) for i, w in rec["entries"]},
            norm=rec["norm"],
        )


def build_vocabulary(
    chunks: Sequence[Chunk], min_df: int = 2, max_df_ratio: float = 0.95
) -> Vocabulary:
    """Count document frequencies and keep terms with min_df <= df <= max_df_ratio*N.

    Pruning both ends curbs the dimensionality blow-up from hapax typos and
    from boilerplate present in nearly every chunk. Index assignment is in
    sorted term order, so identical input always yields the same vocabulary.
    """
    if not chunks:
        raise EmptyCorpus("cannot build a vocabulary from zero chunks")
    df: Counter[str] = Counter()
    for chunk in chunks:
        df.update(set(chunk.tokens))
    n = len(chunks)
    kept = sorted(t for t, c in df.items() if c >= min_df and c <= max_df_ratio * n)
    return Vocabulary(
        term_to_index={t: i for i, t in enumerate(kept)},
        document_frequency={t: df[t] for t in kept},
        n_chunks=n,
    )


def tfidf_vector(chunk: Chunk, vocab: Vocabulary) -> TfIdfVector:
    """tf * idf per vocabulary term, L2-normalized.

    Out-of-vocabulary tokens are ignored; a chunk with no in-vocabulary
    token yields a zero vector (``is_empty``), left for the caller to flag.
    """
    tf = Counter(t for t in chunk.tokens if t in vocab)
    if not tf:
        return TfIdfVector(chunk_id=chunk.chunk_id)
    weights = {vocab.term_to_index[t]: c * vocab.idf(t) for t, c in tf.items()}
    raw_norm = math.sqrt(sum(w * w for w in weights.values()))
    entries = {i: w / raw_norm for i, w in sorted(weights.items())}
    norm = math.sqrt(sum(w * w for w in entries.values()))
    return TfIdfVector(chunk_id=chunk.chunk_id, entries=entries, norm=norm)


def densify(vectors: Sequence[TfIdfVector], vocab_size: int) -> np.ndarray:
    """Stack sparse vectors into a dense (n, V) float64 matrix."""
    out = np.zeros((len(vectors), vocab_size), dtype=np.float64)
    for row, vec in enumerate(vectors):
        for idx, w in vec.entries.items():
            out[row, idx] = w
    return out
