"""Tokenization, vocabulary construction, and corpus loading."""

import json
import math

import numpy as np
import pytest

from topicforge import (
    CorpusError,
    Document,
    EmptyVocabularyError,
    ValidationError,
    build_vocabulary,
    index_documents,
    load_corpus,
    tokenize,
)
from topicforge.corpus import subsample_keep_probability


class TestTokenize:
    def test_lowercases_and_splits_on_punctuation(self):
        assert tokenize("Hello, World! It's 2024.") == [
            "hello", "world", "it", "s", "2024",
        ]

    def test_underscore_separates(self):
        assert tokenize("snake_case_name") == ["snake", "case", "name"]

    def test_digits_and_unicode_letters_survive(self):
        assert tokenize("café 42 straße") == ["café", "42", "straße"]

    def test_empty_and_symbol_only_input(self):
        assert tokenize("") == []
        assert tokenize("!!! --- ???") == []

    def test_idempotent_under_rejoin(self):
        rng = np.random.default_rng(0)
        alphabet = "abc XY,.z12_-'"
        for _ in range(50):
            text = "".join(
                alphabet[i] for i in rng.integers(0, len(alphabet), size=40)
            )
            toks = tokenize(text)
            assert tokenize(" ".join(toks)) == toks


class TestKeepProbability:
    def test_rare_word_always_kept(self):
        assert subsample_keep_probability(1e-6, 1e-5) == 1.0

    def test_at_threshold_kept(self):
        assert subsample_keep_probability(1e-5, 1e-5) == 1.0

    def test_frequent_word_damped(self):
        p = subsample_keep_probability(1e-3, 1e-5)
        assert p == pytest.approx(math.sqrt(1e-5 / 1e-3))
        assert p < 1.0

    def test_monotone_in_frequency(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            t = float(rng.uniform(1e-6, 1e-2))
            f1, f2 = sorted(rng.uniform(1e-6, 0.5, size=2))
            assert subsample_keep_probability(f1, t) >= subsample_keep_probability(
                f2, t
            )

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValidationError):
            subsample_keep_probability(0.0, 1e-5)
        with pytest.raises(ValidationError):
            subsample_keep_probability(0.1, 0.0)


class TestBuildVocabulary:
    def docs(self):
        return [
            Document(id="a", raw="apple apple apple banana banana cherry"),
            Document(id="b", raw="apple banana fig"),
        ]

    def test_orders_by_count_then_word(self):
        vocab = build_vocabulary(self.docs(), min_count=1)
        assert vocab.words == ("apple", "banana", "cherry", "fig")
        assert vocab.counts.tolist() == [4, 3, 1, 1]

    def test_min_count_filters(self):
        vocab = build_vocabulary(self.docs(), min_count=3)
        assert vocab.words == ("apple", "banana")
        # total_tokens still counts the filtered words' occurrences
        assert vocab.total_tokens == 9
        assert vocab.retained_tokens == 7

    def test_tie_break_is_alphabetical(self):
        docs = [Document(id="0", raw="pear kiwi pear kiwi lime lime")]
        vocab = build_vocabulary(docs, min_count=1)
        assert vocab.words == ("kiwi", "lime", "pear")

    def test_keep_probability_uses_retained_mass(self):
        vocab = build_vocabulary(self.docs(), min_count=3, subsample_threshold=0.5)
        expected = [min(1.0, math.sqrt(0.5 / (c / 7))) for c in (4, 3)]
        assert vocab.keep_probability.tolist() == pytest.approx(expected)

    def test_index_lookup(self):
        vocab = build_vocabulary(self.docs(), min_count=1)
        assert vocab.index["apple"] == 0
        assert "apple" in vocab
        assert "durian" not in vocab

    def test_empty_vocabulary_raises(self):
        with pytest.raises(EmptyVocabularyError):
            build_vocabulary(self.docs(), min_count=10)

    def test_rejects_bad_parameters(self):
        with pytest.raises(ValidationError):
            build_vocabulary(self.docs(), min_count=0)
        with pytest.raises(ValidationError):
            build_vocabulary(self.docs(), subsample_threshold=0.0)


class TestIndexDocuments:
    def test_maps_tokens_and_drops_oov(self):
        docs = [
            Document(id="a", raw="apple banana apple"),
            Document(id="b", raw="cherry banana"),
        ]
        vocab = build_vocabulary(docs, min_count=2)
        indexed = index_documents(docs, vocab)
        assert indexed[0].tokens.tolist() == [
            vocab.index["apple"], vocab.index["banana"], vocab.index["apple"],
        ]
        assert indexed[1].tokens.tolist() == [vocab.index["banana"]]

    def test_keeps_empty_documents(self):
        docs = [
            Document(id="a", raw="apple apple"),
            Document(id="b", raw="zzz yyy"),
        ]
        vocab = build_vocabulary(docs, min_count=2)
        indexed = index_documents(docs, vocab)
        assert len(indexed) == 2
        assert len(indexed[1]) == 0


class TestLoadCorpus:
    def test_jsonl_roundtrip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        lines = [
            {"id": "x", "text": "first document"},
            {"text": "second has no id"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in lines) + "\n")
        docs = load_corpus(str(path))
        assert [(d.id, d.raw) for d in docs] == [
            ("x", "first document"),
            ("1", "second has no id"),
        ]

    def test_jsonl_skips_blank_lines(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text('{"text": "a"}\n\n{"text": "b"}\n')
        assert len(load_corpus(str(path))) == 2

    def test_plain_format(self, tmp_path):
        path = tmp_path / "corpus.txt"
        path.write_text("line one\nline two\n")
        docs = load_corpus(str(path), fmt="plain")
        assert [(d.id, d.raw) for d in docs] == [("0", "line one"), ("1", "line two")]

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": "ok"}\n{not json}\n')
        with pytest.raises(CorpusError, match="line 2"):
            load_corpus(str(path))

    def test_non_object_record(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('["not", "an", "object"]\n')
        with pytest.raises(CorpusError, match="object"):
            load_corpus(str(path))

    def test_missing_text_field(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a"}\n')
        with pytest.raises(CorpusError, match="text"):
            load_corpus(str(path))

    def test_wrong_text_type(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": 5}\n')
        with pytest.raises(CorpusError, match="string"):
            load_corpus(str(path))

    def test_wrong_id_type(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 3, "text": "a"}\n')
        with pytest.raises(CorpusError, match="'id'"):
            load_corpus(str(path))

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
        with pytest.raises(CorpusError, match="duplicate"):
            load_corpus(str(path))

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValidationError):
            load_corpus(str(tmp_path / "whatever"), fmt="xml")

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_corpus(str(tmp_path / "nope.jsonl"))
