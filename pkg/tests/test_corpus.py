import json
import random
from collections import Counter

import pytest

from frugaltext.corpus import (
    ConfusionCounts,
    Document,
    FoldedCorpus,
    clean_whitespace,
    dump_documents_jsonl,
    f1_per_class,
    label_counts,
    load_corpus_jsonl,
    macro_f1,
    make_split,
    micro_f1,
    upsample_balance,
)
from frugaltext.errors import (
    CorpusFormatError,
    EmptyCorpusError,
    FoldIndexError,
)

from support import oracle_macro_f1


def docs(n, label="x", prefix="d"):
    return [Document(id=f"{prefix}{i}", label=label, text=f"text {i}")
            for i in range(n)]


def corpus_with_counts(count_by_label, n_folds=5, seed=0):
    rng = random.Random(seed)
    all_docs = []
    for label, count in count_by_label.items():
        all_docs.extend(docs(count, label=label, prefix=f"{label}-"))
    rng.shuffle(all_docs)
    folds = [[] for _ in range(n_folds)]
    for i, doc in enumerate(all_docs):
        folds[i % n_folds].append(doc)
    return FoldedCorpus(folds=folds)


class TestCleanWhitespace:
    def test_collapses_mixed_runs(self):
        assert clean_whitespace("a\n\n b\t\tc\xa0d  e") == "a b c d e"

    def test_strips_ends(self):
        assert clean_whitespace("  hello  ") == "hello"

    def test_idempotent(self):
        rng = random.Random(3)
        chars = "ab \t\n\r\xa0"
        for _ in range(200):
            s = "".join(rng.choice(chars) for _ in range(rng.randint(0, 30)))
            once = clean_whitespace(s)
            assert clean_whitespace(once) == once


class TestLoadDump:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "c.jsonl"
        records = [
            {"id": "a", "label": "x", "text": "satu dua", "fold": 0},
            {"id": "b", "label": "y", "text": "tiga", "fold": 4},
        ]
        path.write_text("\n".join(json.dumps(r) for r in records) + "\n")
        corpus = load_corpus_jsonl(path)
        assert corpus.n_folds == 5
        assert [d.id for d in corpus.folds[0]] == ["a"]
        assert [d.id for d in corpus.folds[4]] == ["b"]
        assert corpus.labels == {"x", "y"}

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text('{"id": "a", "label": "x", "text": "t", "fold": 0}\nnot json\n')
        with pytest.raises(CorpusFormatError) as err:
            load_corpus_jsonl(path)
        assert err.value.line_no == 2

    @pytest.mark.parametrize("record", [
        {"label": "x", "text": "t", "fold": 0},
        {"id": "a", "text": "t", "fold": 0},
        {"id": "a", "label": "x", "fold": 0},
        {"id": "a", "label": "x", "text": "t"},
        {"id": "", "label": "x", "text": "t", "fold": 0},
        {"id": "a", "label": "", "text": "t", "fold": 0},
        {"id": "a", "label": "x", "text": 7, "fold": 0},
        {"id": "a", "label": "x", "text": "t", "fold": 5},
        {"id": "a", "label": "x", "text": "t", "fold": -1},
        {"id": "a", "label": "x", "text": "t", "fold": "0"},
        {"id": "a", "label": "x", "text": "t", "fold": True},
    ])
    def test_invalid_record_rejected(self, tmp_path, record):
        path = tmp_path / "c.jsonl"
        path.write_text(json.dumps(record) + "\n")
        with pytest.raises(CorpusFormatError) as err:
            load_corpus_jsonl(path)
        assert err.value.line_no == 1

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        rec = {"id": "a", "label": "x", "text": "t", "fold": 0}
        path.write_text(json.dumps(rec) + "\n" + json.dumps(rec) + "\n")
        with pytest.raises(CorpusFormatError):
            load_corpus_jsonl(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        path.write_text("\n\n")
        with pytest.raises(CorpusFormatError):
            load_corpus_jsonl(path)

    def test_dump_then_load(self, tmp_path):
        path = tmp_path / "out.jsonl"
        dump_documents_jsonl(docs(3, label="k"), path, fold=0)
        loaded = load_corpus_jsonl(path, n_folds=1)
        assert [d.id for d in loaded.folds[0]] == ["d0", "d1", "d2"]


class TestMakeSplit:
    def test_partitions_every_document_once(self):
        corpus = corpus_with_counts({"a": 40, "b": 60})
        for fold in range(corpus.n_folds):
            split = make_split(corpus, fold, seed=1)
            ids = ([d.id for d in split.train] + [d.id for d in split.valid]
                   + [d.id for d in split.test])
            assert sorted(ids) == sorted(d.id for d in corpus.documents())

    def test_test_set_is_fold_verbatim(self):
        corpus = corpus_with_counts({"a": 25})
        split = make_split(corpus, 2, seed=9)
        assert list(split.test) == corpus.folds[2]

    def test_valid_size_is_rounded_fraction(self):
        corpus = corpus_with_counts({"a": 100})
        split = make_split(corpus, 0, seed=0)
        non_test = len(corpus) - len(corpus.folds[0])
        assert len(split.valid) == round(0.05 * non_test)

    def test_deterministic_per_seed(self):
        corpus = corpus_with_counts({"a": 30, "b": 30})
        one = make_split(corpus, 1, seed=5)
        two = make_split(corpus, 1, seed=5)
        assert [d.id for d in one.valid] == [d.id for d in two.valid]
        assert [d.id for d in one.train] == [d.id for d in two.train]

    def test_different_seed_different_sample(self):
        corpus = corpus_with_counts({"a": 200})
        one = make_split(corpus, 0, seed=1)
        two = make_split(corpus, 0, seed=2)
        assert [d.id for d in one.valid] != [d.id for d in two.valid]

    def test_bad_fold_index(self):
        corpus = corpus_with_counts({"a": 10})
        with pytest.raises(FoldIndexError):
            make_split(corpus, 5, seed=0)
        with pytest.raises(FoldIndexError):
            make_split(corpus, -1, seed=0)


class TestUpsampleBalance:
    def test_two_class_example(self):
        data = docs(3, label="A") + docs(1, label="B", prefix="b")
        out = upsample_balance(data, seed=0)
        counts = label_counts(out)
        assert counts == Counter({"A": 3, "B": 3})
        assert sum(1 for d in out if d.id == "b0") == 3

    def test_majority_counts_from_corpus_scale(self):
        sizes = {"headline": 7192, "news": 4768, "opinion": 2578,
                 "politics": 2303, "sport": 1803, "inspiration": 130}
        data = []
        for label, n in sizes.items():
            data.extend(docs(n, label=label, prefix=f"{label}-"))
        out = upsample_balance(data, seed=0)
        counts = label_counts(out)
        assert set(counts.values()) == {7192}
        assert len(out) == 7192 * 6

    def test_originals_preserved(self):
        data = docs(5, label="A") + docs(2, label="B", prefix="b")
        out = upsample_balance(data, seed=3)
        out_ids = Counter(d.id for d in out)
        for d in data:
            assert out_ids[d.id] >= 1

    def test_whole_passes_before_remainder(self):
        # deficit 7 over a class of 3: two whole passes plus one extra copy
        data = docs(10, label="A") + docs(3, label="B", prefix="b")
        out = upsample_balance(data, seed=11)
        b_counts = Counter(d.id for d in out if d.label == "B")
        assert sorted(b_counts.values()) in ([3, 3, 4], [3, 4, 3], [4, 3, 3])
        assert sum(b_counts.values()) == 10

    def test_balanced_input_is_fixed_point_multiset(self):
        data = docs(4, label="A") + docs(4, label="B", prefix="b")
        out = upsample_balance(data, seed=2)
        assert Counter(d.id for d in out) == Counter(d.id for d in data)

    def test_deterministic_per_seed(self):
        data = docs(9, label="A") + docs(4, label="B", prefix="b")
        one = upsample_balance(data, seed=6)
        two = upsample_balance(data, seed=6)
        assert [d.id for d in one] == [d.id for d in two]

    def test_empty_input_rejected(self):
        with pytest.raises(EmptyCorpusError):
            upsample_balance([], seed=0)


class TestF1:
    def test_perfect_predictions(self):
        counts = ConfusionCounts.from_pairs(["a", "b", "a"], ["a", "b", "a"])
        assert macro_f1(counts) == 1.0

    def test_hand_example(self):
        counts = ConfusionCounts(tp={"A": 1, "B": 1}, fp={"A": 0, "B": 1},
                                 fn={"A": 1, "B": 0})
        assert macro_f1(counts) == pytest.approx((2 / 3 + 2 / 3) / 2)

    def test_zero_support_class_contributes_zero(self):
        counts = ConfusionCounts.from_pairs(["a", "a"], ["a", "a"],
                                            classes=["a", "ghost"])
        assert macro_f1(counts) == pytest.approx(0.5)

    def test_unpredictable_true_label_counts_as_miss(self):
        # "c" never appears among predictions: it forms an all-miss class
        counts = ConfusionCounts.from_pairs(["a", "c"], ["a", "a"])
        scores = f1_per_class(counts)
        assert scores["c"] == 0.0
        assert macro_f1(counts) == pytest.approx(
            (scores["a"] + 0.0) / 2)

    def test_matches_independent_oracle_on_random_tables(self):
        rng = random.Random(17)
        labels = ["w", "x", "y", "z"]
        for _ in range(100):
            y_true = [rng.choice(labels) for _ in range(rng.randint(1, 40))]
            y_pred = [rng.choice(labels) for _ in y_true]
            counts = ConfusionCounts.from_pairs(y_true, y_pred)
            tp, fp, fn = {}, {}, {}
            for t, p in zip(y_true, y_pred):
                if t == p:
                    tp[t] = tp.get(t, 0) + 1
                else:
                    fn[t] = fn.get(t, 0) + 1
                    fp[p] = fp.get(p, 0) + 1
            for c in set(y_true) | set(y_pred):
                tp.setdefault(c, 0)
            assert macro_f1(counts) == pytest.approx(oracle_macro_f1(tp, fp, fn))

    def test_micro_f1_pooled(self):
        counts = ConfusionCounts.from_pairs(["a", "b", "b"], ["a", "a", "b"])
        # pooled: TP=2, FP=1, FN=1
        assert micro_f1(counts) == pytest.approx(4 / 6)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ConfusionCounts.from_pairs(["a"], ["a", "b"])

    def test_no_classes(self):
        with pytest.raises(EmptyCorpusError):
            macro_f1(ConfusionCounts())


class TestFoldedCorpus:
    def test_duplicate_id_rejected(self):
        d = Document(id="same", label="x", text="t")
        with pytest.raises(CorpusFormatError):
            FoldedCorpus(folds=[[d], [d]])

    def test_empty_rejected(self):
        with pytest.raises(EmptyCorpusError):
            FoldedCorpus(folds=[[], []])
