"""Metrics and experiment drivers: AUC, F1, 5x2cv, the paired F-test, curves.

AUC is the Mann-Whitney pair-counting statistic (ties count one half); an
independent trapezoidal integration over the full ROC is also provided and
the two must agree to machine precision. Method comparison uses the combined
5x2cv F-test with 10 and 5 degrees of freedom.
"""

import logging
import math
import random
import statistics
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

from . import baseline as kron
from . import tensor_model as tm
from .data import PLAUSIBLE, VerbDataset, make_5x2cv_splits, subsample
from .util import DataError, derive_seed

log = logging.getLogger(__name__)

METHOD_TENSOR = "tensor"
METHOD_BASELINE = "baseline"

# Upper 5% critical value of the F distribution with (10, 5) degrees of
# freedom; the only significance level this test supports.
F_CRITICAL_10_5 = 4.735
F_TEST_ALPHA = 0.05


@dataclass(frozen=True)
class FoldResult:
    repetition: int
    fold: int
    auc: float
    f1: float
    n_test: int


@dataclass(frozen=True)
class FoldSummary:
    mean_auc: float
    sd_auc: float
    mean_f1: float
    sd_f1: float
    n_folds: int


@dataclass(frozen=True)
class ComparisonVerdict:
    f_statistic: float
    significant: bool
    alpha: float


@dataclass(frozen=True)
class CurvePoint:
    size: int
    mean_auc: float
    sd_auc: float


def _check_binary(labels):
    n_pos = sum(1 for lab in labels if lab == PLAUSIBLE)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")
    return n_pos, n_neg


def roc_auc(scores, labels) -> float:
    """Pair-counting AUC: fraction of positive-negative pairs ranked right.

    Computed from average ranks, so tied scores contribute exactly one half.
    """
    scores = np.asarray(list(scores), dtype=np.float64)
    labels = list(labels)
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    n_pos, n_neg = _check_binary(labels)
    ranks = rankdata(scores, method="average")
    pos_rank_sum = float(sum(r for r, lab in zip(ranks, labels) if lab == PLAUSIBLE))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def roc_auc_trapezoidal(scores, labels) -> float:
    """AUC by trapezoidal integration over the full ROC curve.

    Walks every distinct threshold from high to low, collecting (FPR, TPR)
    points, and integrates. Serves as the independent cross-check for the
    pair-counting implementation.
    """
    scores = np.asarray(list(scores), dtype=np.float64)
    labels = list(labels)
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    n_pos, n_neg = _check_binary(labels)
    is_pos = np.asarray([lab == PLAUSIBLE for lab in labels])
    order = np.argsort(-scores, kind="mergesort")
    sorted_scores = scores[order]
    sorted_pos = is_pos[order]
    tpr = [0.0]
    fpr = [0.0]
    tp = fp = 0
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j < n and sorted_scores[j] == sorted_scores[i]:
            j += 1
        tp += int(sorted_pos[i:j].sum())
        fp += (j - i) - int(sorted_pos[i:j].sum())
        tpr.append(tp / n_pos)
        fpr.append(fp / n_neg)
        i = j
    return float(_trapezoid(tpr, fpr))


def f1_plausible(predicted_labels, gold_labels) -> float:
    """F1 over the plausible class; zero when precision + recall is zero."""
    predicted_labels = list(predicted_labels)
    gold_labels = list(gold_labels)
    if not predicted_labels or len(predicted_labels) != len(gold_labels):
        raise ValueError("need equal-length non-empty label sequences")
    tp = sum(1 for p, g in zip(predicted_labels, gold_labels) if p == PLAUSIBLE and g == PLAUSIBLE)
    fp = sum(1 for p, g in zip(predicted_labels, gold_labels) if p == PLAUSIBLE and g != PLAUSIBLE)
    fn = sum(1 for p, g in zip(predicted_labels, gold_labels) if p != PLAUSIBLE and g == PLAUSIBLE)
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2.0 * tp / denom


def _fit_and_score(method, train_triples, test_triples, embeddings, train_config, fold_seed):
    """Train one method on the train half and score the test half.

    Returns (scores, predicted_labels) aligned with ``test_triples``. The
    tensor ranks by its plausibility probability; the baseline ranks by
    cosine and labels with its equal-error cutoff calibrated on the train
    half.
    """
    if method == METHOD_TENSOR:
        config = tm.with_seed(train_config, fold_seed)
        result = tm.train(train_triples, embeddings, config)
        scored = [
            tm.predict(result.model, embeddings.vector(t.subject), embeddings.vector(t.object))
            for t in test_triples
        ]
        labels = [lab for lab, _ in scored]
        scores = [val for _, val in scored]
        return scores, labels
    if method == METHOD_BASELINE:
        positives = [t for t in train_triples if t.is_plausible]
        model = kron.train_baseline(positives, embeddings)
        pos_scores = [
            kron.score(model, embeddings.vector(t.subject), embeddings.vector(t.object))
            for t in train_triples
            if t.is_plausible
        ]
        neg_scores = [
            kron.score(model, embeddings.vector(t.subject), embeddings.vector(t.object))
            for t in train_triples
            if not t.is_plausible
        ]
        kron.calibrate_cutoff(model, pos_scores, neg_scores)
        scored = [
            kron.predict_baseline(model, embeddings.vector(t.subject), embeddings.vector(t.object))
            for t in test_triples
        ]
        labels = [lab for lab, _ in scored]
        scores = [val for _, val in scored]
        return scores, labels
    raise ValueError(f"unknown method {method!r}")


def evaluate_on_splits(method, dataset, splits, embeddings, train_config, seed) -> list:
    """Score one method on a fixed list of CV splits.

    Per-fold training seeds derive from (seed, repetition, fold), so two
    methods evaluated on the same splits with the same seed are directly
    comparable by the paired F-test.
    """
    triples = dataset.triples if isinstance(dataset, VerbDataset) else list(dataset)
    results = []
    for split in splits:
        train_triples = [triples[i] for i in split.train]
        test_triples = [triples[i] for i in split.test]
        fold_seed = derive_seed(seed, "fold", split.repetition, split.fold)
        try:
            scores, predicted = _fit_and_score(
                method, train_triples, test_triples, embeddings, train_config, fold_seed
            )
        except Exception as exc:
            raise RuntimeError(
                f"{method} failed on repetition {split.repetition} fold {split.fold}: {exc}"
            ) from exc
        gold = [t.label for t in test_triples]
        results.append(
            FoldResult(
                repetition=split.repetition,
                fold=split.fold,
                auc=roc_auc(scores, gold),
                f1=f1_plausible(predicted, gold),
                n_test=len(test_triples),
            )
        )
    return results


def run_5x2cv(method, dataset, embeddings, train_config, seed) -> list:
    """Five repetitions of stratified 2-fold CV; returns the 10 fold results."""
    splits = make_5x2cv_splits(dataset, seed)
    return evaluate_on_splits(method, dataset, splits, embeddings, train_config, seed)


def summarize(fold_results) -> FoldSummary:
    """Mean and sample standard deviation (n-1) of AUC and F1 across folds."""
    aucs = [r.auc for r in fold_results]
    f1s = [r.f1 for r in fold_results]
    if len(aucs) < 2:
        raise ValueError("need at least two folds to summarize")
    return FoldSummary(
        mean_auc=statistics.fmean(aucs),
        sd_auc=statistics.stdev(aucs),
        mean_f1=statistics.fmean(f1s),
        sd_f1=statistics.stdev(f1s),
        n_folds=len(aucs),
    )


def f_test_5x2cv(metric_a, metric_b, alpha: float = F_TEST_ALPHA) -> ComparisonVerdict:
    """Combined 5x2cv F-test on two aligned lists of 10 fold metrics.

    With per-fold differences d_ij (repetition i, fold j) and per-repetition
    variance s_i^2 = (d_i1 - mean_i)^2 + (d_i2 - mean_i)^2, the statistic is
    F = sum(d_ij^2) / (2 sum(s_i^2)), compared against the F(10, 5) critical
    value. A zero denominator means the methods move in lockstep: with a zero
    numerator they are identical (not significant, F=0); with a nonzero
    numerator the difference is perfectly consistent (significant, F=inf).
    """
    if alpha != F_TEST_ALPHA:
        raise ValueError(f"only alpha={F_TEST_ALPHA} is supported (critical value is embedded)")
    a = [float(x) for x in metric_a]
    b = [float(x) for x in metric_b]
    if len(a) != 10 or len(b) != 10:
        raise ValueError("expected 10 aligned values per method (5 repetitions x 2 folds)")
    diffs = [[a[2 * i + j] - b[2 * i + j] for j in range(2)] for i in range(5)]
    numerator = sum(d * d for row in diffs for d in row)
    denominator = 0.0
    for d1, d2 in diffs:
        mean = (d1 + d2) / 2.0
        denominator += (d1 - mean) ** 2 + (d2 - mean) ** 2
    denominator *= 2.0
    if denominator == 0.0:
        if numerator == 0.0:
            return ComparisonVerdict(f_statistic=0.0, significant=False, alpha=alpha)
        return ComparisonVerdict(f_statistic=math.inf, significant=True, alpha=alpha)
    f_stat = numerator / denominator
    return ComparisonVerdict(
        f_statistic=f_stat, significant=f_stat > F_CRITICAL_10_5, alpha=alpha
    )


def fold_metric_vector(fold_results, metric: str) -> list:
    """Metrics ordered by (repetition, fold), as the F-test expects."""
    ordered = sorted(fold_results, key=lambda r: (r.repetition, r.fold))
    return [getattr(r, metric) for r in ordered]


def learning_curve(
    method,
    dataset: VerbDataset,
    train_sizes,
    embeddings,
    train_config,
    seed,
    repeats: int = 5,
) -> list:
    """AUC on a fixed held-out half as the training sample grows.

    The dataset is halved once (stratified, seeded); every point subsamples
    the training half to the requested size, trains, and scores the held-out
    half. Each size repeats with ``repeats`` distinct seeds for a mean and
    sample standard deviation.
    """
    train_sizes = list(train_sizes)
    pool, held_out = _holdout_halves(dataset, derive_seed(seed, "curve-holdout"))
    if max(train_sizes) > len(pool):
        raise DataError(
            f"largest train size {max(train_sizes)} exceeds the training half ({len(pool)})"
        )
    held_triples = held_out.triples
    points = []
    for size in train_sizes:
        aucs = []
        for rep in range(repeats):
            sub = subsample(pool, size, derive_seed(seed, "curve", size, rep))
            fold_seed = derive_seed(seed, "curve-train", size, rep)
            scores, _ = _fit_and_score(
                method, sub.triples, held_triples, embeddings, train_config, fold_seed
            )
            aucs.append(roc_auc(scores, [t.label for t in held_triples]))
        sd = statistics.stdev(aucs) if len(aucs) > 1 else 0.0
        points.append(CurvePoint(size=size, mean_auc=statistics.fmean(aucs), sd_auc=sd))
    return points


def _holdout_halves(dataset: VerbDataset, seed: int):
    """Stratified halving into (training pool, held-out test half)."""
    triples = dataset.triples
    pos = [i for i, t in enumerate(triples) if t.is_plausible]
    neg = [i for i, t in enumerate(triples) if not t.is_plausible]
    if len(pos) < 2 or len(neg) < 2:
        raise DataError("dataset too small to hold out a stratified half")
    rng = random.Random(seed)
    rng.shuffle(pos)
    rng.shuffle(neg)
    pool_idx = sorted(pos[: len(pos) // 2] + neg[: len(neg) // 2])
    held_idx = sorted(pos[len(pos) // 2 :] + neg[len(neg) // 2 :])
    pool = VerbDataset(dataset.verb, [triples[i] for i in pool_idx], dict(dataset.metadata))
    held = VerbDataset(dataset.verb, [triples[i] for i in held_idx], dict(dataset.metadata))
    return pool, held
