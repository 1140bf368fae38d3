"""Topic vectors, topic words, and hierarchical topic reduction.

A topic is the centroid of the document vectors assigned to one dense
cluster, computed in the original embedding space with noise documents
excluded.  Because documents and words share that space, the words
nearest a topic vector describe it.  Every document, including noise, is
then assigned to its nearest topic.  Topics can be merged down to a
target count by repeatedly folding the smallest topic into its most
similar neighbor with a size-weighted mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import ClusterLabeling
from .embedding import SemanticEmbedding, nearest_words
from .errors import ValidationError
from .metric import TopicSpec


@dataclass(frozen=True)
class Topic:
    """One topic: its vector, demographics, and describing words.

    ``provenance`` lists the pre-reduction topic ids folded into this one
    (a never-merged topic lists only itself).
    """

    vector: np.ndarray
    size: int
    words: tuple[tuple[str, float], ...]
    member_doc_ids: tuple[str, ...]
    provenance: tuple[int, ...]


@dataclass(frozen=True)
class MergeRecord:
    """One step of topic reduction, with sizes at merge time."""

    absorbed: int
    absorbing: int
    absorbed_size: int
    absorbing_size: int
    vector: np.ndarray


@dataclass(frozen=True)
class TopicModel:
    """Immutable topic inventory over one embedding.

    ``assignment[i]`` is the topic index of document i; sizes always sum
    to the document count.  ``merge_history`` is empty for a freshly
    built model and grows by one record per merge during reduction.
    """

    topics: tuple[Topic, ...]
    assignment: np.ndarray
    embedding: SemanticEmbedding
    merge_history: tuple[MergeRecord, ...] = ()

    @property
    def n_topics(self) -> int:
        return len(self.topics)

    @property
    def doc_ids(self) -> tuple[str, ...]:
        return self.embedding.doc_ids

    def topic_vector_matrix(self) -> np.ndarray:
        return np.stack([t.vector for t in self.topics])


def compute_topic_vectors(doc_vectors: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Centroid of each cluster's document vectors, noise excluded."""
    n_clusters = int(labels.max()) + 1
    if n_clusters < 1:
        raise ValidationError("labels contain no cluster")
    vectors = np.empty((n_clusters, doc_vectors.shape[1]))
    for k in range(n_clusters):
        members = labels == k
        if not np.any(members):
            raise ValidationError(f"cluster {k} has no members")
        vectors[k] = doc_vectors[members].mean(axis=0)
    return vectors


def assign_documents(
    doc_vectors: np.ndarray, topic_vectors: np.ndarray
) -> np.ndarray:
    """Assign every document to its highest-cosine topic.

    Noise documents are not special here: everything gets a topic.  Ties
    go to the lower topic index.
    """
    doc_norms = np.linalg.norm(doc_vectors, axis=1)
    topic_norms = np.linalg.norm(topic_vectors, axis=1)
    if np.any(doc_norms == 0.0) or np.any(topic_norms == 0.0):
        raise ValidationError("cannot assign with zero-norm vectors")
    sims = (doc_vectors / doc_norms[:, None]) @ (
        topic_vectors / topic_norms[:, None]
    ).T
    return np.argmax(sims, axis=1).astype(np.int64)


def topic_words(
    embedding: SemanticEmbedding, topic_vector: np.ndarray, top_n: int = 10
) -> list[tuple[str, float]]:
    """Words nearest a topic vector in the shared semantic space."""
    return nearest_words(embedding, topic_vector, top_n)


def _build_topics(
    embedding: SemanticEmbedding,
    topic_vectors: np.ndarray,
    assignment: np.ndarray,
    provenance: list[list[int]],
    words_per_topic: int,
) -> tuple[Topic, ...]:
    doc_ids = embedding.doc_ids
    topics = []
    for k in range(len(topic_vectors)):
        member_idx = np.flatnonzero(assignment == k)
        topics.append(
            Topic(
                vector=topic_vectors[k].copy(),
                size=len(member_idx),
                words=tuple(topic_words(embedding, topic_vectors[k], words_per_topic)),
                member_doc_ids=tuple(doc_ids[i] for i in member_idx),
                provenance=tuple(provenance[k]),
            )
        )
    return tuple(topics)


def build_topic_model(
    embedding: SemanticEmbedding,
    labeling: ClusterLabeling,
    words_per_topic: int = 10,
) -> TopicModel:
    """Turn a cluster labeling into a topic model.

    Topic vectors are cluster centroids without the noise documents;
    the final assignment covers every document.
    """
    if len(labeling.labels) != len(embedding.doc_vectors):
        raise ValidationError(
            f"labeling covers {len(labeling.labels)} documents, "
            f"embedding has {len(embedding.doc_vectors)}"
        )
    vectors = compute_topic_vectors(embedding.doc_vectors, labeling.labels)
    assignment = assign_documents(embedding.doc_vectors, vectors)
    provenance = [[k] for k in range(len(vectors))]
    return TopicModel(
        topics=_build_topics(
            embedding, vectors, assignment, provenance, words_per_topic
        ),
        assignment=assignment,
        embedding=embedding,
    )


def reduce_topics(
    model: TopicModel, target: int, words_per_topic: int = 10
) -> TopicModel:
    """Merge topics down to ``target`` and return the reduced model.

    Each step folds the smallest topic (ties: lowest index) into its
    nearest other topic by cosine (ties: lowest index).  The absorbing
    vector becomes the size-weighted mean of the pair, all documents are
    reassigned against the surviving vectors, and sizes are recomputed
    before the next step.  A target equal to the current count is a
    no-op and returns the model itself.
    """
    if not 1 <= target <= model.n_topics:
        raise ValidationError(
            f"target must be in [1, {model.n_topics}], got {target}"
        )
    if target == model.n_topics:
        return model
    embedding = model.embedding
    vectors = model.topic_vector_matrix().astype(np.float64)
    assignment = model.assignment.copy()
    provenance = [list(t.provenance) for t in model.topics]
    history = list(model.merge_history)
    while len(vectors) > target:
        sizes = np.bincount(assignment, minlength=len(vectors))
        s = int(np.argmin(sizes))
        norms = np.linalg.norm(vectors, axis=1)
        sims = (vectors @ vectors[s]) / (np.maximum(norms, 1e-300) * norms[s])
        sims[s] = -np.inf
        t = int(np.argmax(sims))
        pair_total = int(sizes[s] + sizes[t])
        if pair_total > 0:
            merged = (sizes[s] * vectors[s] + sizes[t] * vectors[t]) / pair_total
        else:
            merged = (vectors[s] + vectors[t]) / 2.0
        history.append(
            MergeRecord(
                absorbed=s,
                absorbing=t,
                absorbed_size=int(sizes[s]),
                absorbing_size=int(sizes[t]),
                vector=merged.copy(),
            )
        )
        vectors[t] = merged
        provenance[t].extend(provenance[s])
        vectors = np.delete(vectors, s, axis=0)
        del provenance[s]
        assignment = assign_documents(embedding.doc_vectors, vectors)
    return TopicModel(
        topics=_build_topics(
            embedding, vectors, assignment, provenance, words_per_topic
        ),
        assignment=assignment,
        embedding=embedding,
        merge_history=tuple(history),
    )


def search_documents(
    model: TopicModel, query: np.ndarray, top_n: int = 10
) -> list[tuple[str, float]]:
    """Documents nearest the query vector, as (doc id, similarity)."""
    from .embedding import _rank_by_cosine

    order, sims = _rank_by_cosine(model.embedding.doc_vectors, query, top_n)
    return [(model.doc_ids[i], float(s)) for i, s in zip(order, sims)]


def search_topics(
    model: TopicModel, query: np.ndarray, top_n: int = 10
) -> list[tuple[int, float]]:
    """Topics nearest the query vector, as (topic index, similarity)."""
    from .embedding import _rank_by_cosine

    order, sims = _rank_by_cosine(model.topic_vector_matrix(), query, top_n)
    return [(int(i), float(s)) for i, s in zip(order, sims)]


def model_topic_spec(model: TopicModel, words_per_topic: int = 10) -> TopicSpec:
    """Hard-assignment evaluation view of a topic model."""
    words = []
    for topic in model.topics:
        ranked = topic_words(model.embedding, topic.vector, words_per_topic)
        words.append(tuple(w for w, _ in ranked))
    assignments = {
        doc_id: int(t) for doc_id, t in zip(model.doc_ids, model.assignment)
    }
    return TopicSpec(mode="hard", topics=tuple(words), assignments=assignments)


def topics_to_dicts(model: TopicModel, top_n: int = 10) -> list[dict]:
    """JSON-ready topic listing, largest topic first."""
    order = sorted(
        range(model.n_topics), key=lambda k: (-model.topics[k].size, k)
    )
    out = []
    for k in order:
        topic = model.topics[k]
        ranked = topic_words(model.embedding, topic.vector, top_n)
        out.append(
            {
                "topic_id": k,
                "size": topic.size,
                "words": [
                    {"word": w, "similarity": round(float(s), 6)} for w, s in ranked
                ],
                "merged_from": list(topic.provenance),
            }
        )
    return out
