"""Metrics against independent oracles: a hand-tallied loop for the
confusion counts, direct formula evaluation for the scalar metrics, and the
O(n^2) positive/negative pair count for the ROC sweep."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emoscale.metrics import (
    Confusion,
    auroc_sweep,
    balanced_rate,
    basic_metrics,
    confusion,
    kappa,
    mcc,
    mean_metric_set,
    metric_set,
)


def tally_oracle(scores, labels, threshold=0.5):
    """Elementwise loop tally, independent of the vectorized path."""
    tp = fp = tn = fn = 0
    for s, y in zip(scores, labels):
        pred = 1 if s >= threshold else 0
        if pred and y:
            tp += 1
        elif pred and not y:
            fp += 1
        elif not pred and not y:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def pair_count_auroc(scores, labels):
    """O(n^2) oracle: P(score_pos > score_neg) + 0.5 P(tie)."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_simple_tally(self):
        c = confusion([0.9, 0.1], [1, 0])
        assert (c.tp, c.tn, c.fp, c.fn) == (1, 1, 0, 0)

    def test_tie_predicts_positive(self):
        c = confusion([0.5], [0])
        assert c.fp == 1 and c.tn == 0

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(3)
        scores = rng.random(1000)
        labels = rng.integers(0, 2, 1000)
        c = confusion(scores, labels)
        assert (c.tp, c.fp, c.tn, c.fn) == tuple(
            tally_oracle(scores, labels)[i] for i in (0, 1, 2, 3)
        )

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            confusion([], [])
        with pytest.raises(ValueError):
            confusion([0.5, 0.5], [1])
        with pytest.raises(ValueError):
            confusion([1.5], [1])
        with pytest.raises(ValueError):
            confusion([0.5], [2])


class TestScalarMetrics:
    def test_worked_example(self):
        c = Confusion(tp=40, fp=10, tn=30, fn=20)
        precision, recall, f1, accuracy = basic_metrics(c)
        assert precision == pytest.approx(0.8, abs=1e-4)
        assert recall == pytest.approx(0.6667, abs=1e-4)
        assert f1 == pytest.approx(0.7273, abs=1e-4)
        assert accuracy == pytest.approx(0.7, abs=1e-4)
        assert mcc(c) == pytest.approx(0.4082, abs=1e-4)
        assert kappa(c) == pytest.approx(0.4, abs=1e-4)
        assert balanced_rate(c) == pytest.approx(0.7083, abs=1e-4)

    def test_perfect_classifier(self):
        c = Confusion(tp=50, fp=0, tn=50, fn=0)
        assert basic_metrics(c) == (1.0, 1.0, 1.0, 1.0)
        assert mcc(c) == 1.0
        assert kappa(c) == 1.0
        assert balanced_rate(c) == 1.0

    def test_random_classifier(self):
        c = Confusion(tp=25, fp=25, tn=25, fn=25)
        assert mcc(c) == 0.0
        assert kappa(c) == 0.0

    def test_all_positive_balanced_labels_kappa_zero(self):
        # substitute tp = fp = n/2, fn = tn = 0 into the agreement formula
        c = Confusion(tp=50, fp=50, tn=0, fn=0)
        assert kappa(c) == 0.0

    def test_degenerate_flags(self):
        flags = set()
        c = Confusion(tp=0, fp=0, tn=5, fn=5)
        precision, recall, f1, _ = basic_metrics(c, flags)
        assert precision == 0.0 and "precision" in flags
        assert f1 == 0.0 and "f1" in flags
        flags = set()
        assert mcc(c, flags) == 0.0 and "mcc" in flags

    def test_direct_formula_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            tp, fp, tn, fn = (int(v) for v in rng.integers(0, 1000, size=4))
            if tp + fp + tn + fn == 0:
                continue
            c = Confusion(tp=tp, fp=fp, tn=tn, fn=fn)
            precision, recall, f1, accuracy = basic_metrics(c)
            if tp + fp:
                assert abs(precision - tp / (tp + fp)) < 1e-12
            if tp + fn:
                assert abs(recall - tp / (tp + fn)) < 1e-12
            if precision + recall:
                expected_f1 = 2 * precision * recall / (precision + recall)
                assert abs(f1 - expected_f1) < 1e-12
            assert abs(accuracy - (tp + tn) / (tp + fp + tn + fn)) < 1e-12
            factors = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
            if factors:
                expected = (tp * tn - fp * fn) / math.sqrt(factors)
                assert abs(mcc(c) - expected) < 1e-12
            den = (tp + fp) * (fp + tn) + (tp + fn) * (fn + tn)
            if den:
                assert abs(kappa(c) - 2 * (tp * tn - fp * fn) / den) < 1e-12

    def test_f1_algebraic_identity(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            tp, fp, tn, fn = (int(v) for v in rng.integers(0, 50, size=4))
            if tp + fp + tn + fn == 0 or 2 * tp + fp + fn == 0:
                continue
            c = Confusion(tp=tp, fp=fp, tn=tn, fn=fn)
            _, _, f1, _ = basic_metrics(c)
            assert f1 == pytest.approx(2 * tp / (2 * tp + fp + fn), abs=1e-12)

    def test_balanced_rate_needs_both_classes(self):
        with pytest.raises(ValueError):
            balanced_rate(Confusion(tp=3, fp=0, tn=0, fn=2))

    @given(
        tp=st.integers(0, 500), fp=st.integers(0, 500),
        tn=st.integers(0, 500), fn=st.integers(0, 500),
    )
    @settings(max_examples=200, deadline=None)
    def test_bounds(self, tp, fp, tn, fn):
        if tp + fp + tn + fn == 0:
            return
        c = Confusion(tp=tp, fp=fp, tn=tn, fn=fn)
        precision, recall, f1, accuracy = basic_metrics(c)
        for value in (precision, recall, f1, accuracy):
            assert 0.0 <= value <= 1.0
        assert -1.0 <= mcc(c) <= 1.0
        assert -1.0 <= kappa(c) <= 1.0


class TestAurocSweep:
    def test_perfect_ranking(self):
        assert auroc_sweep([0.0, 1.0, 1.0, 0.0], [0, 1, 1, 0]) == 1.0

    def test_all_ties(self):
        assert auroc_sweep([0.3] * 10, [0, 1] * 5) == pytest.approx(0.5)

    def test_single_class_raises(self):
        with pytest.raises(ValueError):
            auroc_sweep([0.2, 0.4], [1, 1])

    def test_pair_count_oracle(self):
        rng = np.random.default_rng(5)
        for trial in range(100):
            n = int(rng.integers(5, 201))
            # coarse grid on even trials forces ties through the sweep
            if trial % 2:
                scores = rng.random(n)
            else:
                scores = rng.integers(0, 6, n) / 5.0
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                labels[0] = 1 - labels[0]
            assert auroc_sweep(scores, labels) == pytest.approx(
                pair_count_auroc(scores, labels), abs=1e-9
            )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(9)
        scores = rng.random(200)
        labels = rng.integers(0, 2, 200)
        labels[0], labels[1] = 0, 1
        squashed = 1.0 / (1.0 + np.exp(-3.0 * (scores - 0.5)))
        assert auroc_sweep(scores, labels) == pytest.approx(
            auroc_sweep(squashed, labels), abs=1e-12
        )


class TestMetricSet:
    def test_perfect(self):
        labels = np.array([0, 1, 1, 0, 1])
        ms = metric_set(labels.astype(float), labels)
        assert ms.precision == ms.recall == ms.f1 == ms.accuracy == 1.0
        assert ms.mcc == ms.kappa == ms.auroc_sweep == ms.balanced_rate == 1.0
        assert not ms.degenerate_flags

    def test_constant_scores(self):
        labels = np.array([0, 0, 0, 1, 1])
        ms = metric_set(np.full(5, 0.7), labels)
        assert ms.accuracy == pytest.approx(2 / 5)  # all predicted positive
        assert ms.mcc == 0.0
        assert ms.auroc_sweep == pytest.approx(0.5)

    def test_fields_match_standalone_ops(self):
        rng = np.random.default_rng(41)
        scores = rng.random(300)
        labels = rng.integers(0, 2, 300)
        ms = metric_set(scores, labels)
        c = confusion(scores, labels)
        precision, recall, f1, accuracy = basic_metrics(c)
        assert ms.precision == precision
        assert ms.recall == recall
        assert ms.f1 == f1
        assert ms.accuracy == accuracy
        assert ms.mcc == mcc(c)
        assert ms.kappa == kappa(c)
        assert ms.auroc_sweep == auroc_sweep(scores, labels)
        assert ms.balanced_rate == balanced_rate(c)

    def test_single_class_sets_flags_not_exceptions(self):
        ms = metric_set([0.2, 0.9], [1, 1])
        assert math.isnan(ms.auroc_sweep)
        assert math.isnan(ms.balanced_rate)
        assert {"auroc_sweep", "balanced_rate"} <= ms.degenerate_flags

    def test_symmetry_under_class_flip(self):
        # flip labels and complement scores: tp <-> tn, fp <-> fn, so
        # accuracy, |mcc| and the sweep are invariant (scores avoid the
        # 0.5 tie point, where the >= rule breaks the symmetry)
        rng = np.random.default_rng(77)
        scores = 0.5 + np.where(rng.random(400) < 0.5, -1, 1) * rng.uniform(0.01, 0.49, 400)
        labels = rng.integers(0, 2, 400)
        labels[:2] = (0, 1)
        ms = metric_set(scores, labels)
        flipped = metric_set(1.0 - scores, 1 - labels)
        assert flipped.confusion.tp == ms.confusion.tn
        assert flipped.confusion.fp == ms.confusion.fn
        assert flipped.accuracy == pytest.approx(ms.accuracy, abs=1e-12)
        assert abs(flipped.mcc) == pytest.approx(abs(ms.mcc), abs=1e-12)
        assert flipped.auroc_sweep == pytest.approx(ms.auroc_sweep, abs=1e-12)

    def test_balanced_rate_is_recall_specificity_mean(self):
        rng = np.random.default_rng(13)
        scores = rng.random(250)
        labels = rng.integers(0, 2, 250)
        labels[:2] = (0, 1)
        ms = metric_set(scores, labels)
        c = ms.confusion
        specificity = c.tn / (c.tn + c.fp)
        assert ms.balanced_rate == pytest.approx((ms.recall + specificity) / 2, abs=1e-12)

    def test_mean_metric_set(self):
        rng = np.random.default_rng(29)
        sets = [
            metric_set(rng.random(50), np.r_[rng.integers(0, 2, 48), 0, 1])
            for _ in range(5)
        ]
        mean = mean_metric_set(sets)
        assert mean.accuracy == pytest.approx(
            np.mean([s.accuracy for s in sets]), abs=1e-12
        )
        assert mean.confusion.tp == sum(s.confusion.tp for s in sets)
