"""Seeded synthetic corpora for benchmarks and determinism checks."""

from __future__ import annotations

import random

from .documents import Document


def synthetic_corpus(
    n_docs: int,
    seed: int = 0,
    vocab_size: int = 2000,
    min_len: int = 20,
    max_len: int = 80,
) -> list[Document]:
    """Reproducible random documents: same arguments, same corpus, any machine."""
    if n_docs < 0:
        raise ValueError("n_docs must be >= 0")
    rng = random.Random(seed)
    vocab = [f"w{i:04d}" for i in range(vocab_size)]
    docs = []
    for i in range(n_docs):
        length = rng.randint(min_len, max_len)
        body = " ".join(rng.choice(vocab) for _ in range(length))
        docs.append(
            Document(
                id=f"synth-{i:06d}",
                source="fixture",
                title=f"synthetic document {i}",
                body=body,
            )
        )
    return docs
