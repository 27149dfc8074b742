"""Linear discriminant probing of the embedding space.

The probe asks how much inflectional information (class, case, number)
is linearly recoverable from meaning vectors: Gaussian classes with a
shared covariance, classification by largest log prior minus half the
Mahalanobis distance.  The pooled covariance can be shrunk toward its
diagonal, which keeps it invertible when classes are small relative to
the embedding dimension.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .embeddings import SemanticMatrix
from .errors import DataError, NumericalError
from .lexicon import UNCERTAIN_CASE, UNKNOWN_CLASS, LexiconEntry


@dataclass
class LdaModel:
    class_labels: list
    class_means: np.ndarray
    pooled_covariance: np.ndarray
    shrinkage: float
    priors: np.ndarray

    def __post_init__(self):
        self._cho = scipy.linalg.cho_factor(self.pooled_covariance, check_finite=False)


def lda_fit(X: np.ndarray, labels: list, shrinkage: float = 0.1) -> LdaModel:
    """Fit class means and a pooled (optionally shrunk) covariance.

    The pooled within-class covariance is regularized as
    (1 - lambda) * S + lambda * diag(S).  Labels with a single member
    cannot contribute to pooling and are rejected.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != len(labels):
        raise ValueError("one label per row required")
    if not 0.0 <= shrinkage <= 1.0:
        raise ValueError(f"shrinkage must lie in [0, 1], got {shrinkage}")

    counts = Counter(labels)
    if len(counts) < 2:
        raise DataError("need at least 2 distinct labels")
    singles = sorted(str(lab) for lab, c in counts.items() if c < 2)
    if singles:
        raise DataError(f"cannot pool covariance: single-member labels {singles}")

    class_labels = sorted(counts)
    labels_arr = np.asarray(labels)
    means = np.empty((len(class_labels), X.shape[1]))
    scatter = np.zeros((X.shape[1], X.shape[1]))
    for i, lab in enumerate(class_labels):
        rows = X[labels_arr == lab]
        means[i] = rows.mean(axis=0)
        centered = rows - means[i]
        scatter += centered.T @ centered
    pooled = scatter / (X.shape[0] - len(class_labels))

    if shrinkage > 0.0:
        pooled = (1.0 - shrinkage) * pooled + shrinkage * np.diag(np.diag(pooled))

    priors = np.array([counts[lab] / len(labels) for lab in class_labels])
    try:
        return LdaModel(
            class_labels=class_labels,
            class_means=means,
            pooled_covariance=pooled,
            shrinkage=shrinkage,
            priors=priors,
        )
    except scipy.linalg.LinAlgError as exc:
        if shrinkage == 0.0:
            raise NumericalError(
                "pooled covariance is singular; retry with shrinkage > 0"
            ) from exc
        raise NumericalError(f"covariance factorization failed: {exc}") from exc


def _decision_scores(model: LdaModel, X: np.ndarray) -> np.ndarray:
    """Per-class discriminants, dropping the class-independent x'S^-1 x term."""
    inv_means = scipy.linalg.cho_solve(model._cho, model.class_means.T, check_finite=False)
    linear = X @ inv_means
    const = -0.5 * np.sum(model.class_means.T * inv_means, axis=0) + np.log(model.priors)
    return linear + const


def lda_predict_batch(model: LdaModel, X: np.ndarray) -> tuple[list, np.ndarray]:
    """Labels plus a mask of exact decision ties (broken by label order)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.class_means.shape[1]:
        raise ValueError(
            f"input has {X.shape[1]} dims, model expects {model.class_means.shape[1]}"
        )
    scores = _decision_scores(model, X)
    winners = np.argmax(scores, axis=1)
    top = scores[np.arange(len(winners)), winners]
    ties = np.sum(scores == top[:, None], axis=1) > 1
    return [model.class_labels[i] for i in winners], ties


def lda_predict(model: LdaModel, x: np.ndarray):
    """Single-vector classification; deterministic tie-break by label order."""
    labels, _ = lda_predict_batch(model, np.asarray(x, dtype=np.float64))
    return labels[0]


def resubstitution_accuracy(model: LdaModel, X: np.ndarray, labels: list) -> float:
    predicted, _ = lda_predict_batch(model, X)
    return float(np.mean([p == t for p, t in zip(predicted, labels)]))


def _loocv_counts(X: np.ndarray, labels: list, shrinkage: float) -> tuple[int, int, int]:
    """(correct, evaluated, skipped) under exact per-fold re-fitting."""
    X = np.asarray(X, dtype=np.float64)
    counts = Counter(labels)
    correct = evaluated = skipped = 0
    mask = np.ones(len(labels), dtype=bool)
    for i in range(len(labels)):
        if counts[labels[i]] - 1 < 2:
            skipped += 1
            continue
        mask[i] = False
        fold = lda_fit(X[mask], [lab for j, lab in enumerate(labels) if j != i], shrinkage)
        mask[i] = True
        evaluated += 1
        correct += int(lda_predict(fold, X[i]) == labels[i])
    return correct, evaluated, skipped


def loocv_accuracy(X: np.ndarray, labels: list, shrinkage: float = 0.1) -> float:
    """Leave-one-out accuracy over the evaluable folds.

    Folds whose removal would leave a single-member label are skipped
    (the per-fold fit could not pool).  Zero evaluable folds yields 0.
    """
    correct, evaluated, _ = _loocv_counts(X, labels, shrinkage)
    return correct / evaluated if evaluated else 0.0


def majority_baseline(labels: list) -> float:
    """Accuracy of always guessing the modal label."""
    if not labels:
        raise ValueError("need at least one label")
    return Counter(labels).most_common(1)[0][1] / len(labels)


TARGETS = ("class", "case", "number", "case_number")


def target_label(entry: LexiconEntry, target: str):
    """Probe label for an entry, or None when the value is unidentifiable."""
    if target == "class":
        return None if entry.inflectional_class == UNKNOWN_CLASS else entry.inflectional_class
    if target == "case":
        return None if entry.case == UNCERTAIN_CASE else entry.case
    if target == "number":
        return entry.number if entry.number in ("sg", "pl") else None
    if target == "case_number":
        return None if entry.case == UNCERTAIN_CASE else entry.cell
    raise ValueError(f"unknown probe target {target!r}, expected one of {TARGETS}")


@dataclass
class ProbeSummary:
    target: str
    n: int
    accuracy: float
    loocv: float | None
    baseline: float


def probe_overall(
    entries: list[LexiconEntry],
    S: SemanticMatrix,
    target: str = "class",
    shrinkage: float = 0.1,
    loocv: bool = True,
) -> ProbeSummary:
    """Whole-dataset probe on row-aligned entries and vectors."""
    if len(entries) != S.rows:
        raise ValueError("entries and semantic rows misaligned")
    rows, labels = [], []
    for i, e in enumerate(entries):
        lab = target_label(e, target)
        if lab is None:
            continue
        rows.append(i)
        labels.append(lab)
    counts = Counter(labels)
    keep = [i for i, lab in zip(rows, labels) if counts[lab] >= 2]
    labels = [lab for lab in labels if counts[lab] >= 2]
    X = S.values[keep]
    model = lda_fit(X, labels, shrinkage)
    return ProbeSummary(
        target=target,
        n=len(labels),
        accuracy=resubstitution_accuracy(model, X, labels),
        loocv=loocv_accuracy(X, labels, shrinkage) if loocv else None,
        baseline=majority_baseline(labels),
    )


@dataclass
class CellProbeResult:
    cell: str
    n_class: int
    n_lexeme: int
    n_token: int
    lda_pct: float | None
    lda_cv_pct: float | None
    baseline_pct: float | None
    note: str = ""


def probe_by_cell(
    entries: list[LexiconEntry],
    S: SemanticMatrix,
    target: str = "class",
    shrinkage: float = 0.1,
    min_tokens: int = 30,
    loocv: bool = True,
) -> list[CellProbeResult]:
    """Run the probe separately inside each paradigm cell.

    Cells below `min_tokens` eligible rows are reported as NA rather
    than fitted, as are cells where fewer than two labels have the two
    members pooling requires.
    """
    if len(entries) != S.rows:
        raise ValueError("entries and semantic rows misaligned")
    cells: dict[str, list[int]] = {}
    for i, e in enumerate(entries):
        if target_label(e, target) is None:
            continue
        cells.setdefault(e.cell, []).append(i)

    out = []
    for cell in sorted(cells):
        idx = cells[cell]
        members = [entries[i] for i in idx]
        labels = [target_label(e, target) for e in members]
        n_class = len(set(labels))
        n_lexeme = len({e.lexeme for e in members})
        n_token = len(idx)
        base = CellProbeResult(
            cell=cell, n_class=n_class, n_lexeme=n_lexeme, n_token=n_token,
            lda_pct=None, lda_cv_pct=None, baseline_pct=None,
        )
        if n_token < min_tokens:
            base.note = f"fewer than {min_tokens} tokens"
            out.append(base)
            continue
        counts = Counter(labels)
        keep = [j for j, lab in enumerate(labels) if counts[lab] >= 2]
        kept_labels = [labels[j] for j in keep]
        if len(set(kept_labels)) < 2:
            base.note = "fewer than 2 poolable labels"
            out.append(base)
            continue
        X = S.values[[idx[j] for j in keep]]
        model = lda_fit(X, kept_labels, shrinkage)
        base.lda_pct = round(100.0 * resubstitution_accuracy(model, X, kept_labels), 1)
        if loocv:
            base.lda_cv_pct = round(100.0 * loocv_accuracy(X, kept_labels, shrinkage), 1)
        base.baseline_pct = round(100.0 * majority_baseline(kept_labels), 1)
        out.append(base)
    return out


def write_cell_table(results: list[CellProbeResult], path: str | Path) -> None:
    """Paradigm-cell probe table in the shape used throughout the reports."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["cell", "n_class", "n_lexeme", "n_token",
             "lda_pct", "lda_cv_pct", "baseline_pct"]
        )
        for r in results:
            writer.writerow(
                [
                    r.cell, r.n_class, r.n_lexeme, r.n_token,
                    "NA" if r.lda_pct is None else r.lda_pct,
                    "NA" if r.lda_cv_pct is None else r.lda_cv_pct,
                    "NA" if r.baseline_pct is None else r.baseline_pct,
                ]
            )
