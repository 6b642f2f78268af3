"""End-to-end acceptance checks, one verdict line printed per criterion."""

import random
import time
from collections import Counter
from contextlib import contextmanager

import numpy as np
import pytest

from frugaltext.backends import FixtureBackend
from frugaltext.corpus import Document, make_split, upsample_balance
from frugaltext.grid import snap
from frugaltext.hpo import (
    Direction,
    PHASE_DONE,
    SearchConfig,
    classify_direction,
    evaluate_all_folds,
    pick_candidates,
    propagate,
    session_run,
)
from frugaltext.ledger import ALL_FOLDS, Ledger, STATUS_DONE
from frugaltext.optim import OptimizerConfig, adamw_step
from frugaltext.reference import reference_table
from frugaltext.shorten import (
    Strategy,
    StopwordList,
    TokenBudget,
    apply_strategy,
    truncate,
)
from frugaltext.tokenizer import audit, is_punctuation, subword_tokenize
from frugaltext.trainer import (
    Hyperparams,
    softmax_cross_entropy,
    softmax_cross_entropy_grads,
    train_builtin,
)

from support import (
    CountingBackend,
    EXHAUSTIVE_TRIALS,
    Killed,
    KillingLedger,
    SyntheticSurfaceBackend,
    char_vocab,
    keyword_corpus,
    oracle_audit,
    word_vocab,
)


@contextmanager
def check(capfd, number, title):
    try:
        yield
    except BaseException:
        _announce(capfd, number, title, "FAIL")
        raise
    _announce(capfd, number, title, "PASS")


def _announce(capfd, number, title, verdict):
    with capfd.disabled():
        print(f"{verdict} acceptance {number:>2}: {title}", flush=True)


SEARCH_CFG = SearchConfig(lr0=5e-5, initial_bs=128)

# single-fold probe curves of the recorded search, bs=128, epochs 1..3
PROBE_CURVES = {
    "5e-5": (0.8013, 0.7585, 0.7794),
    "1e-5": (0.8066, 0.8192, 0.7979),
    "5e-6": (0.8088, 0.8183, 0.8203),
    "1e-6": (0.7578, 0.7872, 0.7996),
}

# per-epoch winners and all-fold averages of the recorded search
RECORDED_WINNERS = {
    128: {1: ("1e-5", 0.8216), 2: ("4e-6", 0.8194), 3: ("5e-6", 0.8205)},
    64: {1: ("7e-6", 0.8218), 2: ("2e-6", 0.8173), 3: ("2e-6", 0.8167)},
    32: {1: ("7e-6", 0.8153), 2: ("2e-6", 0.8187), 3: ("9e-7", 0.8162)},
}


def test_01_direction_classification_replay(capfd):
    with check(capfd, 1,
               "recorded probes classify high/low/in-range and pick "
               "{5e-6, 1e-5}"):
        start = time.perf_counter()
        cfg = SearchConfig()
        assert classify_direction(PROBE_CURVES["5e-5"], cfg) is Direction.TOO_HIGH
        assert classify_direction(PROBE_CURVES["1e-6"], cfg) is Direction.TOO_LOW
        assert classify_direction(PROBE_CURVES["5e-6"], cfg) is Direction.IN_RANGE
        probes = {snap(float(label)): curve
                  for label, curve in PROBE_CURVES.items()}
        assert set(pick_candidates(probes, cfg)) == {snap(5e-6), snap(1e-5)}
        assert time.perf_counter() - start < 1.0


def test_02_recorded_search_conclusions(capfd, tmp_path):
    with check(capfd, 2,
               "full replay reproduces every per-epoch winner to 4 decimals"):
        start = time.perf_counter()
        ledger = Ledger(tmp_path / "trials.jsonl")
        report = session_run(SEARCH_CFG, FixtureBackend(reference_table()),
                             ledger)
        assert report.state.phase == PHASE_DONE
        conclusions = report.state.conclusions
        assert sorted(conclusions) == sorted(RECORDED_WINNERS)
        for bs, per_epoch in RECORDED_WINNERS.items():
            for epoch, (label, value) in per_epoch.items():
                point, avg = conclusions[bs][epoch]
                assert point.label == label, (bs, epoch)
                assert avg == pytest.approx(value, abs=5e-5), (bs, epoch)
        assert time.perf_counter() - start < 5.0


def test_03_hill_climb_neighbor_replay(capfd, tmp_path):
    with check(capfd, 3, "hill climbs evaluate exactly the recorded "
                         "neighbor sets"):
        backend = FixtureBackend(reference_table())
        ledger = Ledger(tmp_path / "trials.jsonl")

        def averaged_labels():
            return {snap(r.lr).label for r in ledger.records
                    if r.status == STATUS_DONE and r.fold == ALL_FOLDS
                    and r.batch_size == 128}

        for lr in (5e-6, 1e-5):
            evaluate_all_folds(lr, 128, 3, backend, ledger, SEARCH_CFG)
        seen = averaged_labels()

        propagate(3, 5e-6, ledger, backend, SEARCH_CFG, bs=128)
        assert averaged_labels() - seen == {"4e-6", "6e-6"}
        seen = averaged_labels()

        propagate(2, 4e-6, ledger, backend, SEARCH_CFG, bs=128)
        assert averaged_labels() - seen == {"3e-6"}
        seen = averaged_labels()

        propagate(1, 1e-5, ledger, backend, SEARCH_CFG, bs=128)
        assert averaged_labels() - seen == {"9e-6", "2e-5"}


def test_04_synthetic_search_efficiency(capfd, tmp_path):
    with check(capfd, 4, "100 unimodal surfaces: argmax found within 40% of "
                         "exhaustive trials"):
        start = time.perf_counter()
        cfg = SearchConfig(lr0=5e-5, initial_bs=128, min_bs=128)
        cap = int(EXHAUSTIVE_TRIALS * 0.4)
        for surface_seed in range(100):
            surface = SyntheticSurfaceBackend(surface_seed)
            backend = CountingBackend(surface)
            ledger = Ledger(tmp_path / f"s{surface_seed}.jsonl", fsync=False)
            report = session_run(cfg, backend, ledger)
            assert report.state.phase == PHASE_DONE
            for epoch in (1, 2, 3):
                point, avg = report.state.conclusions[128][epoch]
                assert point == surface.true_argmax(epoch), \
                    (surface_seed, epoch)
                assert avg == pytest.approx(0.80, abs=1e-9)
            assert len(backend.calls) <= cap, surface_seed
        assert time.perf_counter() - start < 10.0


def test_05_optimizer_and_gradient_oracles(capfd):
    with check(capfd, 5, "decay and first-step oracles at 1e-12; gradients "
                         "match finite differences"):
        cfg = OptimizerConfig()
        theta = np.array([2.0, -3.0])
        zeros = np.zeros(2)
        decayed, _, _ = adamw_step(theta, zeros, zeros, zeros, t=1, lr=0.01,
                                   cfg=cfg)
        np.testing.assert_allclose(decayed, theta * (1.0 - 0.01 * 0.01),
                                   rtol=0, atol=1e-12)

        one = np.ones(1)
        stepped, _, _ = adamw_step(one, one, np.zeros(1), np.zeros(1), t=1,
                                   lr=0.01, cfg=cfg)
        expected = 1.0 - 0.01 * (1.0 / (1.0 + 1e-8) + 0.01 * 1.0)
        np.testing.assert_allclose(stepped, [expected], rtol=0, atol=1e-12)

        eps = 1e-6
        for seed in range(25):
            rng = np.random.default_rng(seed)
            n, d, k = 10, 5, 3
            X = rng.normal(size=(n, d))
            y = rng.integers(0, k, size=n)
            W = rng.normal(size=(d, k)) * 0.1
            b = rng.normal(size=k) * 0.1
            dW, db = softmax_cross_entropy_grads(W, b, X, y)

            fd_W = np.zeros_like(W)
            for i in range(W.size):
                bump = np.zeros(W.size)
                bump[i] = eps
                hi = softmax_cross_entropy((W.ravel() + bump).reshape(W.shape),
                                           b, X, y)
                lo = softmax_cross_entropy((W.ravel() - bump).reshape(W.shape),
                                           b, X, y)
                fd_W.ravel()[i] = (hi - lo) / (2 * eps)
            fd_b = np.zeros_like(b)
            for i in range(b.size):
                bump = np.zeros(b.size)
                bump[i] = eps
                hi = softmax_cross_entropy(W, b + bump, X, y)
                lo = softmax_cross_entropy(W, b - bump, X, y)
                fd_b[i] = (hi - lo) / (2 * eps)
            np.testing.assert_allclose(dW, fd_W, rtol=1e-4, atol=1e-8)
            np.testing.assert_allclose(db, fd_b, rtol=1e-4, atol=1e-8)


def test_06_desk_scale_pipeline(capfd):
    with check(capfd, 6, "600-doc pipeline reaches macro-F1 >= 0.95, "
                         "bit-identical across runs"):
        start = time.perf_counter()
        corpus, vocab, stopwords = keyword_corpus()
        assert sum(len(f) for f in corpus.folds) == 600
        split = make_split(corpus, test_fold_index=0, seed=0)
        hp = Hyperparams(lr=1e-2, batch_size=32, epochs=1,
                         strategy=Strategy.A2, budget=TokenBudget(128))
        first = train_builtin(split, hp, OptimizerConfig(), vocab, stopwords)
        second = train_builtin(split, hp, OptimizerConfig(), vocab, stopwords)
        assert first[-1].f1_test >= 0.95
        assert first == second
        assert time.perf_counter() - start < 60.0


def _is_punct_token(token):
    return bool(token) and all(is_punctuation(ch) for ch in token)


def _is_subsequence(needle, haystack):
    it = iter(haystack)
    return all(tok in it for tok in needle)


def test_07_shortening_property_suite(capfd):
    with check(capfd, 7, "shortening invariants hold on 1000 random "
                         "sequences per strategy"):
        words_pool = ("merah", "kota", "jalan", "besar", "rumah", "air",
                      "hari", "buku")
        stop_pool = ("yang", "dan", "di", "itu")
        punct_pool = (".", ",", "!", "--")
        stopwords = StopwordList(stop_pool)
        vocab = word_vocab(words_pool + stop_pool)
        rng = random.Random(99)
        for _ in range(1000):
            pool = words_pool + stop_pool + punct_pool
            words = [rng.choice(pool) for _ in range(rng.randint(0, 40))]
            budget = TokenBudget(rng.randint(1, 12))

            for strategy in Strategy:
                out = apply_strategy(words, strategy, stopwords)
                assert _is_subsequence(out, words), strategy

            a2 = apply_strategy(words, Strategy.A2, stopwords)
            assert not set(a2) & set(stop_pool)
            for strategy in (Strategy.A3, Strategy.A4, Strategy.C1):
                out = apply_strategy(words, strategy, stopwords)
                assert not any(_is_punct_token(t) for t in out), strategy
            c1 = apply_strategy(words, Strategy.C1, stopwords)
            assert len(c1) == len(set(c1))

            for strategy in Strategy:
                cut = truncate(words, strategy, budget, vocab)
                assert len(cut) <= budget.max_tokens, strategy
            head_only = truncate(words, Strategy.A1, budget, vocab)
            encoded = subword_tokenize(words, vocab)
            assert head_only == encoded[:len(head_only)]


def test_08_upsampler_balances_skewed_counts(capfd):
    with check(capfd, 8, "skewed class counts upsample to the majority, "
                         "originals preserved"):
        counts = (7192, 4768, 2578, 2303, 1803, 130)
        docs = []
        for ci, count in enumerate(counts):
            label = f"class-{ci}"
            docs.extend(Document(id=f"{label}-{i}", label=label, text="isi")
                        for i in range(count))
        balanced = upsample_balance(docs, seed=0)
        assert set(Counter(d.label for d in balanced).values()) == {7192}
        assert {d.id for d in balanced} == {d.id for d in docs}
        again = upsample_balance(docs, seed=0)
        assert [d.id for d in again] == [d.id for d in balanced]


def test_09_audit_matches_independent_recount(capfd):
    with check(capfd, 9, "inflation audit matches an independent recount "
                         "and applies the 15% rule"):
        vocab = char_vocab()
        docs = [
            Document(id="d0", label="x", text="kota besar, jalan kecil."),
            Document(id="d1", label="x", text="air   dan api!"),
            Document(id="d2", label="x", text="merah"),
            Document(id="d3", label="x", text="   "),
        ]
        report = audit(docs, vocab)
        expected = oracle_audit(docs, set(vocab))
        assert report.ratios == expected
        assert report.n_docs == len(expected) == 3
        assert report.min_pct == min(expected)
        assert report.max_pct == max(expected)
        assert report.avg_pct == sum(expected) / len(expected)

        whole = word_vocab(("kota", "besar", "jalan"))
        flat = audit([Document(id="d", label="x", text="kota besar jalan")],
                     whole)
        assert flat.min_pct == flat.avg_pct == flat.max_pct == 0.0
        assert flat.recommended is True

        # every 5-letter word becomes 5 pieces: 400% inflation
        inflated = audit([Document(id="d", label="x", text="lampu hijau")],
                         vocab)
        assert inflated.avg_pct > 15.0
        assert inflated.recommended is False


def test_10_crash_resume_reaches_identical_conclusions(capfd, tmp_path):
    with check(capfd, 10, "search resumes after every crash to identical "
                          "conclusions without retraining"):
        clean_ledger = Ledger(tmp_path / "clean.jsonl")
        clean = session_run(SEARCH_CFG, FixtureBackend(reference_table()),
                            clean_ledger)

        backend = CountingBackend(FixtureBackend(reference_table()))
        path = tmp_path / "crashy.jsonl"
        report = None
        for _ in range(300):
            try:
                report = session_run(SEARCH_CFG, backend, KillingLedger(path))
                break
            except Killed:
                continue
        assert report is not None and report.state.phase == PHASE_DONE

        assert len(backend.calls) == len(set(backend.calls))
        resumed = report.state.conclusions
        for bs, per_epoch in clean.state.conclusions.items():
            for epoch, (point, avg) in per_epoch.items():
                assert resumed[bs][epoch] == (point, avg)
