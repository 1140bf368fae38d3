"""Binary model archives.

An archive is a single file: the magic bytes ``TPFG``, a little-endian
u32 format version, a length-prefixed UTF-8 JSON header, then raw
little-endian float32 matrix blocks in row-major order, in the order the
header declares.  All floating-point model state is stored (and kept in
memory) as float32, so a save/load round trip is bit-identical.

Everything is validated before anything is returned: wrong magic, an
unsupported version, a truncated file, or inconsistent shapes raise
``ArchiveError`` and never yield a partially loaded model.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass

import numpy as np

from .clustering import ClusterConfig, ClusterLabeling
from .corpus import Vocabulary
from .embedding import (
    EmbeddingConfig,
    SemanticEmbedding,
    build_huffman_coding,
)
from .errors import ArchiveError
from .reduction import ReductionConfig
from .topics import MergeRecord, Topic, TopicModel

MAGIC = b"TPFG"
FORMAT_VERSION = 1

_MATRIX_NAMES = (
    "doc_vectors",
    "word_vectors",
    "input_word_vectors",
    "inner_node_vectors",
    "reduced_coords",
    "topic_vectors",
)


@dataclass
class ModelArchive:
    """Everything a trained pipeline produced, in storage precision."""

    embedding_config: EmbeddingConfig
    reduction_config: ReductionConfig
    cluster_config: ClusterConfig
    embedding: SemanticEmbedding
    reduced_coords: np.ndarray
    labeling: ClusterLabeling
    topic_model: TopicModel

    @classmethod
    def from_pipeline(
        cls,
        embedding: SemanticEmbedding,
        reduced_coords: np.ndarray,
        labeling: ClusterLabeling,
        topic_model: TopicModel,
        embedding_config: EmbeddingConfig,
        reduction_config: ReductionConfig,
        cluster_config: ClusterConfig,
    ) -> "ModelArchive":
        """Cast a pipeline's float64 results down to storage precision."""
        f4 = lambda a: np.ascontiguousarray(a, dtype=np.float32)  # noqa: E731
        coding = build_huffman_coding(
            embedding.vocabulary, embedding.vector_size
        )
        coding.inner_node_vectors = f4(embedding.coding.inner_node_vectors)
        stored = SemanticEmbedding(
            doc_vectors=f4(embedding.doc_vectors),
            word_vectors=f4(embedding.word_vectors),
            coding=coding,
            vocabulary=embedding.vocabulary,
            doc_ids=embedding.doc_ids,
            epoch_losses=list(embedding.epoch_losses),
        )
        topics = tuple(
            Topic(
                vector=f4(t.vector),
                size=t.size,
                words=tuple((w, float(s)) for w, s in t.words),
                member_doc_ids=t.member_doc_ids,
                provenance=t.provenance,
            )
            for t in topic_model.topics
        )
        model = TopicModel(
            topics=topics,
            assignment=topic_model.assignment.astype(np.int64),
            embedding=stored,
            merge_history=topic_model.merge_history,
        )
        return cls(
            embedding_config=embedding_config,
            reduction_config=reduction_config,
            cluster_config=cluster_config,
            embedding=stored,
            reduced_coords=f4(reduced_coords),
            labeling=labeling,
            topic_model=model,
        )


def _matrices(archive: ModelArchive) -> dict[str, np.ndarray]:
    return {
        "doc_vectors": archive.embedding.doc_vectors,
        "word_vectors": archive.embedding.word_vectors,
        "input_word_vectors": archive.embedding.input_word_vectors,
        "inner_node_vectors": archive.embedding.coding.inner_node_vectors,
        "reduced_coords": archive.reduced_coords,
        "topic_vectors": archive.topic_model.topic_vector_matrix(),
    }


def archive_to_bytes(archive: ModelArchive) -> bytes:
    """Serialize an archive to its on-disk byte sequence."""
    matrices = _matrices(archive)
    vocab = archive.embedding.vocabulary
    header = {
        "embedding_config": dataclasses.asdict(archive.embedding_config),
        "reduction_config": dataclasses.asdict(archive.reduction_config),
        "cluster_config": dataclasses.asdict(archive.cluster_config),
        "vocabulary": {
            "words": list(vocab.words),
            "counts": [int(c) for c in vocab.counts],
            "total_tokens": vocab.total_tokens,
            "min_count": vocab.min_count,
            "subsample_threshold": vocab.subsample_threshold,
        },
        "doc_ids": list(archive.embedding.doc_ids),
        "epoch_losses": [float(x) for x in archive.embedding.epoch_losses],
        "labels": [int(x) for x in archive.labeling.labels],
        "n_clusters": archive.labeling.n_clusters,
        "cluster_stability": [float(x) for x in archive.labeling.cluster_stability],
        "assignment": [int(x) for x in archive.topic_model.assignment],
        "topic_words": [
            [[w, float(s)] for w, s in t.words] for t in archive.topic_model.topics
        ],
        "topic_provenance": [
            list(t.provenance) for t in archive.topic_model.topics
        ],
        "merge_history": [
            {
                "absorbed": r.absorbed,
                "absorbing": r.absorbing,
                "absorbed_size": r.absorbed_size,
                "absorbing_size": r.absorbing_size,
                "vector": [float(x) for x in r.vector],
            }
            for r in archive.topic_model.merge_history
        ],
        "matrices": [
            {"name": name, "rows": int(m.shape[0]), "cols": int(m.shape[1])}
            for name, m in matrices.items()
        ],
    }
    header_bytes = json.dumps(header, separators=(",", ":")).encode("utf-8")
    parts = [
        MAGIC,
        struct.pack("<I", FORMAT_VERSION),
        struct.pack("<I", len(header_bytes)),
        header_bytes,
    ]
    for m in matrices.values():
        parts.append(np.ascontiguousarray(m, dtype="<f4").tobytes())
    return b"".join(parts)


def save_model(archive: ModelArchive, path: str) -> None:
    """Write the archive to disk."""
    data = archive_to_bytes(archive)
    with open(path, "wb") as fh:
        fh.write(data)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ArchiveError(message)


def archive_from_bytes(data: bytes) -> ModelArchive:
    """Parse and validate an archive byte sequence."""
    _require(len(data) >= 12, "archive is truncated before the header")
    _require(data[:4] == MAGIC, "not a topicforge archive (bad magic bytes)")
    (version,) = struct.unpack("<I", data[4:8])
    _require(
        version == FORMAT_VERSION,
        f"unsupported archive version {version} (expected {FORMAT_VERSION})",
    )
    (header_len,) = struct.unpack("<I", data[8:12])
    _require(len(data) >= 12 + header_len, "archive is truncated inside the header")
    try:
        header = json.loads(data[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArchiveError(f"archive header is not valid JSON: {exc}") from exc
    _require(isinstance(header, dict), "archive header must be a JSON object")
    required = (
        "embedding_config",
        "reduction_config",
        "cluster_config",
        "vocabulary",
        "doc_ids",
        "epoch_losses",
        "labels",
        "n_clusters",
        "cluster_stability",
        "assignment",
        "topic_words",
        "topic_provenance",
        "merge_history",
        "matrices",
    )
    for key in required:
        _require(key in header, f"archive header is missing {key!r}")
    manifest = header["matrices"]
    _require(
        isinstance(manifest, list)
        and all(isinstance(m, dict) for m in manifest)
        and tuple(m.get("name") for m in manifest) == _MATRIX_NAMES,
        f"archive must declare matrices {list(_MATRIX_NAMES)}",
    )
    offset = 12 + header_len
    blocks: dict[str, np.ndarray] = {}
    for m in manifest:
        rows, cols = int(m["rows"]), int(m["cols"])
        _require(rows >= 0 and cols >= 0, f"matrix {m['name']} has negative shape")
        nbytes = rows * cols * 4
        _require(
            len(data) >= offset + nbytes,
            f"archive is truncated inside matrix {m['name']!r}",
        )
        block = np.frombuffer(
            data, dtype="<f4", count=rows * cols, offset=offset
        ).reshape(rows, cols)
        blocks[m["name"]] = block.copy()
        offset += nbytes
    _require(
        offset == len(data),
        f"archive has {len(data) - offset} unexpected trailing bytes",
    )
    try:
        embedding_config = EmbeddingConfig(**header["embedding_config"])
        reduction_config = ReductionConfig(**header["reduction_config"])
        cluster_config = ClusterConfig(**header["cluster_config"])
        v = header["vocabulary"]
        words = tuple(v["words"])
        counts = np.array(v["counts"], dtype=np.int64)
        from .corpus import subsample_keep_probability

        retained = int(counts.sum())
        keep = np.array(
            [
                subsample_keep_probability(
                    int(c) / retained, v["subsample_threshold"]
                )
                for c in counts
            ]
        )
        vocab = Vocabulary(
            words=words,
            counts=counts,
            total_tokens=int(v["total_tokens"]),
            min_count=int(v["min_count"]),
            subsample_threshold=float(v["subsample_threshold"]),
            keep_probability=keep,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ArchiveError(f"archive header failed validation: {exc}") from exc
    n_docs = len(header["doc_ids"])
    n_words = len(words)
    dim = embedding_config.vector_size
    shape_checks = (
        ("doc_vectors", (n_docs, dim)),
        ("word_vectors", (n_words, dim)),
        ("input_word_vectors", (n_words, dim)),
        ("inner_node_vectors", (max(n_words - 1, 0), dim)),
        ("reduced_coords", (n_docs, reduction_config.n_components)),
    )
    for name, shape in shape_checks:
        _require(
            blocks[name].shape == shape,
            f"matrix {name!r} has shape {blocks[name].shape}, expected {shape}",
        )
    for name, block in blocks.items():
        _require(
            bool(np.isfinite(block).all()),
            f"matrix {name!r} contains non-finite values",
        )
    labels = np.array(header["labels"], dtype=np.int64)
    n_clusters = int(header["n_clusters"])
    _require(len(labels) == n_docs, "label count does not match document count")
    _require(
        bool(np.all((labels >= -1) & (labels < n_clusters))),
        "cluster labels out of range",
    )
    assignment = np.array(header["assignment"], dtype=np.int64)
    n_topics = len(blocks["topic_vectors"])
    _require(len(assignment) == n_docs, "assignment does not cover every document")
    _require(
        len(header["topic_words"]) == n_topics
        and len(header["topic_provenance"]) == n_topics,
        "topic metadata does not match the topic vector count",
    )
    _require(
        n_topics > 0 and bool(np.all((assignment >= 0) & (assignment < n_topics))),
        "topic assignment out of range",
    )
    coding = build_huffman_coding(vocab, dim)
    coding.inner_node_vectors = blocks["inner_node_vectors"]
    embedding = SemanticEmbedding(
        doc_vectors=blocks["doc_vectors"],
        word_vectors=blocks["word_vectors"],
        coding=coding,
        vocabulary=vocab,
        doc_ids=tuple(header["doc_ids"]),
        epoch_losses=[float(x) for x in header["epoch_losses"]],
    )
    labeling = ClusterLabeling(
        labels=labels,
        n_clusters=n_clusters,
        cluster_stability=np.array(header["cluster_stability"], dtype=np.float64),
    )
    doc_ids = embedding.doc_ids
    topics = []
    for k in range(n_topics):
        member_idx = np.flatnonzero(assignment == k)
        topics.append(
            Topic(
                vector=blocks["topic_vectors"][k],
                size=len(member_idx),
                words=tuple(
                    (str(w), float(s)) for w, s in header["topic_words"][k]
                ),
                member_doc_ids=tuple(doc_ids[i] for i in member_idx),
                provenance=tuple(int(p) for p in header["topic_provenance"][k]),
            )
        )
    history = tuple(
        MergeRecord(
            absorbed=int(r["absorbed"]),
            absorbing=int(r["absorbing"]),
            absorbed_size=int(r["absorbed_size"]),
            absorbing_size=int(r["absorbing_size"]),
            vector=np.array(r["vector"], dtype=np.float64),
        )
        for r in header["merge_history"]
    )
    topic_model = TopicModel(
        topics=tuple(topics),
        assignment=assignment,
        embedding=embedding,
        merge_history=history,
    )
    return ModelArchive(
        embedding_config=embedding_config,
        reduction_config=reduction_config,
        cluster_config=cluster_config,
        embedding=embedding,
        reduced_coords=blocks["reduced_coords"],
        labeling=labeling,
        topic_model=topic_model,
    )


def load_model(path: str) -> ModelArchive:
    """Read and validate an archive from disk."""
    with open(path, "rb") as fh:
        data = fh.read()
    return archive_from_bytes(data)
