"""Joint document and word embedding.

Documents and words are trained as predictor vectors in one shared space:
skip-gram steps move a surrounding word's vector toward predicting the
window's center word, and distributed-bag-of-words steps move the
document's vector toward predicting words inside the window.  Both kinds
of step predict through a shared hierarchical-softmax output layer built
over a Huffman coding of the vocabulary, so document vectors end up near
the word vectors that predict their content.

With a hierarchical-softmax output layer there is no per-word output
matrix; the single trained word matrix serves both as the skip-gram input
side and as the context-word space consumed downstream, and it is exposed
under both names.
"""

from __future__ import annotations

import heapq
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .corpus import Document, Vocabulary, build_vocabulary, index_documents
from .errors import ValidationError

_WORKER_MODES = ("deterministic", "parallel")


@dataclass(frozen=True)
class EmbeddingConfig:
    """Knobs for embedding training.

    The learning rate decays linearly from ``initial_lr`` to ``final_lr``
    over all scheduled center positions.  In deterministic mode a seed
    fully determines the trained matrices; parallel mode trains document
    shards on threads with unsynchronized updates and forfeits
    bit-reproducibility.
    """

    vector_size: int = 300
    window: int = 15
    epochs: int = 40
    min_count: int = 50
    subsample_threshold: float = 1e-5
    initial_lr: float = 0.025
    final_lr: float = 1e-4
    seed: int = 0
    worker_mode: str = "deterministic"
    workers: int = 4

    def __post_init__(self) -> None:
        if self.vector_size < 1:
            raise ValidationError(f"vector_size must be >= 1, got {self.vector_size}")
        if self.window < 1:
            raise ValidationError(f"window must be >= 1, got {self.window}")
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.min_count < 1:
            raise ValidationError(f"min_count must be >= 1, got {self.min_count}")
        if self.subsample_threshold <= 0:
            raise ValidationError(
                f"subsample_threshold must be > 0, got {self.subsample_threshold}"
            )
        if not 0 < self.final_lr <= self.initial_lr:
            raise ValidationError(
                f"need 0 < final_lr <= initial_lr, got "
                f"{self.final_lr} and {self.initial_lr}"
            )
        if self.worker_mode not in _WORKER_MODES:
            raise ValidationError(
                f"worker_mode must be one of {_WORKER_MODES}, got {self.worker_mode!r}"
            )
        if self.workers < 1:
            raise ValidationError(f"workers must be >= 1, got {self.workers}")


@dataclass
class HuffmanCoding:
    """Huffman tree over the vocabulary for hierarchical softmax.

    ``paths[w]`` lists the inner-node ids on the root-to-leaf path of word
    ``w`` and ``codes[w]`` the branch bit taken at each of them.  Inner
    node ``n - 2`` is the root.  ``inner_node_vectors`` holds one trained
    vector per inner node; a one-word vocabulary has none.
    """

    paths: tuple[np.ndarray, ...]
    codes: tuple[np.ndarray, ...]
    inner_node_vectors: np.ndarray
    signs: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)
    labels: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.signs = tuple(1.0 - 2.0 * c.astype(np.float64) for c in self.codes)
        self.labels = tuple(1.0 - c.astype(np.float64) for c in self.codes)

    def code_lengths(self) -> np.ndarray:
        return np.array([len(c) for c in self.codes], dtype=np.int64)


def build_huffman_coding(vocab: Vocabulary, vector_size: int) -> HuffmanCoding:
    """Build the Huffman tree from vocabulary counts.

    Merging is deterministic: the heap orders by (count, tie key) where
    leaves use their word index and internal nodes use ``n + creation
    step``, so at equal weight the lower word index merges first.  The
    first node popped at each merge takes branch bit 0.  Inner-node
    vectors start at zero.
    """
    n = len(vocab)
    if n == 1:
        return HuffmanCoding(
            paths=(np.empty(0, dtype=np.int32),),
            codes=(np.empty(0, dtype=np.int8),),
            inner_node_vectors=np.zeros((0, vector_size), dtype=np.float64),
        )
    heap: list[tuple[int, int, tuple]] = [
        (int(vocab.counts[i]), i, ("leaf", i)) for i in range(n)
    ]
    heapq.heapify(heap)
    for step in range(n - 1):
        ca, ka, a = heapq.heappop(heap)
        cb, kb, b = heapq.heappop(heap)
        heapq.heappush(heap, (ca + cb, n + step, ("node", step, a, b)))
    root = heap[0][2]
    paths: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    codes: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    stack: list[tuple[tuple, list[int], list[int]]] = [(root, [], [])]
    while stack:
        node, points, bits = stack.pop()
        if node[0] == "leaf":
            paths[node[1]] = np.array(points, dtype=np.int32)
            codes[node[1]] = np.array(bits, dtype=np.int8)
        else:
            _, node_id, left, right = node
            stack.append((left, points + [node_id], bits + [0]))
            stack.append((right, points + [node_id], bits + [1]))
    return HuffmanCoding(
        paths=tuple(paths),
        codes=tuple(codes),
        inner_node_vectors=np.zeros((n - 1, vector_size), dtype=np.float64),
    )


def hs_loss_gradients(
    predictor: np.ndarray, word: int, coding: HuffmanCoding
) -> tuple[float, np.ndarray, np.ndarray]:
    """Negative log-likelihood of a word given a predictor, with gradients.

    Returns ``(loss, grad_predictor, grad_inner)`` where ``grad_inner``
    has one row per inner node on the word's path, aligned with
    ``coding.paths[word]``.  Both gradients are evaluated at the current
    parameter values.
    """
    points = coding.paths[word]
    if points.size == 0:
        d = predictor.shape[0]
        return 0.0, np.zeros(d), np.zeros((0, d))
    nodes = coding.inner_node_vectors[points]
    z = nodes @ predictor
    loss = float(np.logaddexp(0.0, -coding.signs[word] * z).sum())
    g = expit(z) - coding.labels[word]
    return loss, g @ nodes, np.outer(g, predictor)


def hs_probability(predictor: np.ndarray, word: int, coding: HuffmanCoding) -> float:
    """Probability of a word under the hierarchical softmax.

    The product over the word's path of ``sigmoid(+-(predictor . node))``
    with the sign set by the branch bit.  Probabilities over the whole
    vocabulary sum to one for any predictor.
    """
    if not 0 <= word < len(coding.paths):
        raise ValidationError(f"word index {word} out of range")
    points = coding.paths[word]
    if points.size == 0:
        return 1.0
    z = coding.inner_node_vectors[points] @ predictor
    return float(np.exp(-np.logaddexp(0.0, -coding.signs[word] * z).sum()))


def _apply_hs_step(
    matrix: np.ndarray, row: int, word: int, coding: HuffmanCoding, lr: float
) -> float:
    """One gradient step of ``matrix[row]`` predicting ``word``.

    Returns the negative log-likelihood before the update.  Both the
    predictor row and the path's inner-node vectors move; each update uses
    the other side's pre-step values.
    """
    points = coding.paths[word]
    if points.size == 0:
        return 0.0
    pred = matrix[row]
    inner = coding.inner_node_vectors
    nodes = inner[points]
    z = nodes @ pred
    loss = float(np.logaddexp(0.0, -coding.signs[word] * z).sum())
    if lr != 0.0:
        g = expit(z) - coding.labels[word]
        inner[points] = nodes - np.outer(lr * g, pred)
        pred -= lr * (g @ nodes)
    return loss


def train_step_skipgram(
    embedding: "SemanticEmbedding",
    surrounding_word: int,
    context_word: int,
    lr: float,
) -> float:
    """Skip-gram step: the surrounding word's vector predicts the center word.

    Updates the surrounding word's row and the inner-node vectors on the
    center word's path; returns the negative log-likelihood before the
    update.
    """
    return _apply_hs_step(
        embedding.word_vectors, surrounding_word, context_word, embedding.coding, lr
    )


def train_step_dbow(
    embedding: "SemanticEmbedding", doc_index: int, target_word: int, lr: float
) -> float:
    """Bag-of-words step: the document's vector predicts an in-window word.

    Same mechanics as the skip-gram step with the document row as the
    predictor.
    """
    return _apply_hs_step(
        embedding.doc_vectors, doc_index, target_word, embedding.coding, lr
    )


@dataclass
class SemanticEmbedding:
    """Trained document and word vectors sharing one semantic space.

    ``word_vectors`` is the context-word space that similarity queries and
    topic words rank against; ``input_word_vectors`` exposes the skip-gram
    input side, which coincides with it under hierarchical softmax.
    ``epoch_losses`` records the mean per-step negative log-likelihood of
    each training epoch.
    """

    doc_vectors: np.ndarray
    word_vectors: np.ndarray
    coding: HuffmanCoding
    vocabulary: Vocabulary
    doc_ids: tuple[str, ...]
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def input_word_vectors(self) -> np.ndarray:
        return self.word_vectors

    @property
    def vector_size(self) -> int:
        return self.doc_vectors.shape[1]


def _train_documents(
    embedding: SemanticEmbedding,
    doc_indices: list[int],
    token_arrays: list[np.ndarray],
    config: EmbeddingConfig,
    rng: np.random.Generator,
    position_counter: list[int],
    total_positions: int,
) -> tuple[float, int]:
    """Train one pass over the given documents; returns (loss sum, steps)."""
    word_vectors = embedding.word_vectors
    doc_vectors = embedding.doc_vectors
    coding = embedding.coding
    keep = embedding.vocabulary.keep_probability
    window = config.window
    lr0 = config.initial_lr
    lr_span = config.initial_lr - config.final_lr
    final_lr = config.final_lr
    loss_sum = 0.0
    steps = 0
    for di in doc_indices:
        toks = token_arrays[di]
        length = len(toks)
        for p in range(length):
            pos = position_counter[0]
            position_counter[0] = pos + 1
            lr = max(final_lr, lr0 - lr_span * (pos / total_positions))
            left = toks[max(0, p - window) : p]
            right = toks[p + 1 : p + 1 + window]
            around = np.concatenate((left, right))
            draws = rng.random(len(around))
            survivors = around[draws < keep[around]]
            if survivors.size == 0:
                continue
            center = toks[p]
            for w in survivors:
                loss_sum += _apply_hs_step(word_vectors, w, center, coding, lr)
            for w in survivors:
                loss_sum += _apply_hs_step(doc_vectors, di, w, coding, lr)
            steps += 2 * survivors.size
    return loss_sum, steps


def train(docs: list[Document], config: EmbeddingConfig) -> SemanticEmbedding:
    """Build the vocabulary and train document and word vectors.

    For every epoch and every center position, surrounding words that
    survive the subsampling draw each contribute one skip-gram step
    (surrounding word predicts the center) and one bag-of-words step (the
    document predicts the surrounding word).  Predictor rows start uniform
    in ``[-0.5/d, 0.5/d]``; inner nodes start at zero.
    """
    if not docs:
        raise ValidationError("cannot train on an empty corpus")
    vocab = build_vocabulary(docs, config.min_count, config.subsample_threshold)
    indexed = index_documents(docs, vocab)
    token_arrays = [d.tokens for d in indexed]
    d = config.vector_size
    rng = np.random.default_rng(config.seed)
    doc_vectors = (rng.random((len(indexed), d)) - 0.5) / d
    word_vectors = (rng.random((len(vocab), d)) - 0.5) / d
    coding = build_huffman_coding(vocab, d)
    embedding = SemanticEmbedding(
        doc_vectors=doc_vectors,
        word_vectors=word_vectors,
        coding=coding,
        vocabulary=vocab,
        doc_ids=tuple(doc.id for doc in indexed),
    )
    positions_per_epoch = sum(len(t) for t in token_arrays)
    total_positions = max(1, config.epochs * positions_per_epoch)
    doc_indices = list(range(len(indexed)))
    if config.worker_mode == "deterministic" or config.workers == 1:
        counter = [0]
        for _ in range(config.epochs):
            loss_sum, steps = _train_documents(
                embedding, doc_indices, token_arrays, config,
                rng, counter, total_positions,
            )
            embedding.epoch_losses.append(loss_sum / max(steps, 1))
    else:
        shards = [doc_indices[i :: config.workers] for i in range(config.workers)]
        shards = [s for s in shards if s]
        shard_rngs = rng.spawn(len(shards))
        counter = [0]
        for _ in range(config.epochs):
            results: list[tuple[float, int]] = [(0.0, 0)] * len(shards)

            def run(slot: int) -> None:
                results[slot] = _train_documents(
                    embedding, shards[slot], token_arrays, config,
                    shard_rngs[slot], counter, total_positions,
                )

            threads = [
                threading.Thread(target=run, args=(s,)) for s in range(len(shards))
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            loss_sum = sum(r[0] for r in results)
            steps = sum(r[1] for r in results)
            embedding.epoch_losses.append(loss_sum / max(steps, 1))
    return embedding


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; zero vectors are an error."""
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValidationError("cosine similarity is undefined for a zero vector")
    return float(a @ b) / (na * nb)


def _rank_by_cosine(
    matrix: np.ndarray, query: np.ndarray, top_n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Exact top-n rows of ``matrix`` by cosine against ``query``.

    Ties rank the lower row index first.  Rows with zero norm sink to the
    bottom.  Returns (indices, similarities) with top_n clamped to the
    row count.
    """
    qn = float(np.linalg.norm(query))
    if qn == 0.0:
        raise ValidationError("query vector has zero norm")
    norms = np.linalg.norm(matrix, axis=1)
    sims = np.where(
        norms > 0.0, (matrix @ query) / (np.maximum(norms, 1e-300) * qn), -np.inf
    )
    order = np.argsort(-sims, kind="stable")[: max(0, min(top_n, len(sims)))]
    return order, sims[order]


def nearest_words(
    embedding: SemanticEmbedding, query: np.ndarray, top_n: int
) -> list[tuple[str, float]]:
    """Exact top-n vocabulary words by cosine against the query vector."""
    order, sims = _rank_by_cosine(embedding.word_vectors, query, top_n)
    words = embedding.vocabulary.words
    return [(words[i], float(s)) for i, s in zip(order, sims)]


def compose_query(
    positive: list[np.ndarray], negative: list[np.ndarray] = ()
) -> np.ndarray:
    """Unit query vector: mean of positives minus mean of negatives.

    Raises if the combination cancels to zero (or no vectors are given).
    """
    if not positive and not negative:
        raise ValidationError("query needs at least one vector")
    parts = []
    if positive:
        parts.append(np.mean(positive, axis=0))
    if negative:
        parts.append(-np.mean(negative, axis=0))
    query = np.sum(parts, axis=0)
    norm = float(np.linalg.norm(query))
    if norm == 0.0:
        raise ValidationError("query vectors cancel to a zero vector")
    return query / norm
