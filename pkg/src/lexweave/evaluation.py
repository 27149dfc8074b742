"""Nearest-neighbor evaluation of predicted vectors.

A prediction counts as correct when the gold row it was trained toward
is its nearest neighbor among all candidate gold rows, with similarity
measured by Pearson correlation (scale- and shift-invariant, so any
positive affine transform of a predicted row leaves the ranking
unchanged).  Ties break toward the lower row index and are flagged:
identical gold rows do occur for homographic cue sets and cap the
attainable accuracy.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericalError

_BLOCK = 512


@dataclass
class WordResult:
    key: str
    target_correlation: float
    rank_of_target: int
    correct_at_1: bool
    correct_at_k: bool
    tied: bool


@dataclass
class EvaluationReport:
    per_word: list[WordResult]
    k: int
    type_at_1: float
    type_at_k: float
    token_at_1: float | None
    n_ties: int

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["word_key", "target_correlation", "rank_of_target",
                 "correct_at_1", "correct_at_k", "tied"]
            )
            for r in self.per_word:
                writer.writerow(
                    [r.key, repr(r.target_correlation), r.rank_of_target,
                     int(r.correct_at_1), int(r.correct_at_k), int(r.tied)]
                )

    def summary(self) -> dict:
        return {
            "k": self.k,
            "n_words": len(self.per_word),
            "type_at_1": self.type_at_1,
            "type_at_k": self.type_at_k,
            "token_at_1": self.token_at_1,
            "n_ties": self.n_ties,
        }

    def write_summary(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.summary(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def target_correlation(predicted: np.ndarray, gold: np.ndarray) -> float:
    """Pearson correlation between a predicted vector and its gold target."""
    x = np.asarray(predicted, dtype=np.float64).ravel()
    y = np.asarray(gold, dtype=np.float64).ravel()
    if x.shape != y.shape or x.size < 2:
        raise ValueError("vectors must share a length of at least 2")
    xc = x - x.mean()
    yc = y - y.mean()
    nx = np.linalg.norm(xc)
    ny = np.linalg.norm(yc)
    if nx == 0.0 or ny == 0.0:
        raise NumericalError("correlation undefined for a constant vector")
    return float(xc @ yc / (nx * ny))


def _zscore_rows(values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    centered = values - values.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1, keepdims=True)
    bad = np.flatnonzero(norms.ravel() == 0.0)
    if bad.size:
        raise NumericalError(
            f"{what} row {bad[0]} is constant; correlation ranking undefined"
        )
    return centered / norms


def _dense(m) -> np.ndarray:
    if hasattr(m, "dense"):
        return m.dense()
    if hasattr(m, "values") and isinstance(getattr(m, "values"), np.ndarray):
        return m.values
    if hasattr(m, "toarray"):
        return m.toarray()
    return np.asarray(m, dtype=np.float64)


def _row_ids(m, n: int) -> list[str]:
    ids = getattr(m, "row_ids", None)
    return list(ids) if ids is not None else [str(i) for i in range(n)]


def evaluate_against_pool(
    predicted,
    pool,
    targets: list[int] | np.ndarray,
    k: int,
    frequencies: list[int] | np.ndarray | None = None,
    keys: list[str] | None = None,
) -> EvaluationReport:
    """Rank every predicted row against the full gold pool.

    targets[i] is the pool row that predicted row i was aimed at, so a
    held-out prediction must beat trained words too.  rank_of_target is
    the 1-based position of the target under descending correlation,
    ties resolved toward the lower pool row index.
    """
    P = _dense(predicted)
    G = _dense(pool)
    targets = np.asarray(targets, dtype=np.intp)
    if P.shape[0] != targets.shape[0]:
        raise ValueError("one target row index required per predicted row")
    if np.any(targets < 0) or np.any(targets >= G.shape[0]):
        raise ValueError("target index outside the pool")
    if k < 1 or k > G.shape[0]:
        raise ValueError(f"k must lie in 1..{G.shape[0]}, got {k}")
    if frequencies is not None and len(frequencies) != P.shape[0]:
        raise ValueError("one frequency per predicted row required")

    if keys is None:
        keys = _row_ids(predicted, P.shape[0])
    pz = _zscore_rows(P, "predicted")
    gz = _zscore_rows(G, "gold")

    per_word: list[WordResult] = []
    n_ties = 0
    for start in range(0, pz.shape[0], _BLOCK):
        stop = min(start + _BLOCK, pz.shape[0])
        corr = pz[start:stop] @ gz.T
        for i in range(stop - start):
            t = targets[start + i]
            row = corr[i]
            ct = row[t]
            greater = int(np.count_nonzero(row > ct))
            equal = int(np.count_nonzero(row == ct))
            equal_before = int(np.count_nonzero(row[:t] == ct))
            rank = 1 + greater + equal_before
            tied = equal > 1
            n_ties += int(tied)
            per_word.append(
                WordResult(
                    key=keys[start + i],
                    target_correlation=float(ct),
                    rank_of_target=rank,
                    correct_at_1=rank == 1,
                    correct_at_k=rank <= k,
                    tied=tied,
                )
            )

    at1 = np.array([r.correct_at_1 for r in per_word], dtype=np.float64)
    atk = np.array([r.correct_at_k for r in per_word], dtype=np.float64)
    token_at_1 = None
    if frequencies is not None:
        f = np.asarray(frequencies, dtype=np.float64)
        token_at_1 = float((f * at1).sum() / f.sum())
    return EvaluationReport(
        per_word=per_word,
        k=k,
        type_at_1=float(at1.mean()),
        type_at_k=float(atk.mean()),
        token_at_1=token_at_1,
        n_ties=n_ties,
    )


def evaluate_nearest(
    predicted,
    gold,
    k: int,
    frequencies: list[int] | np.ndarray | None = None,
    keys: list[str] | None = None,
) -> EvaluationReport:
    """Row-aligned evaluation: predicted row i targets gold row i."""
    P = _dense(predicted)
    G = _dense(gold)
    if P.shape[0] != G.shape[0]:
        raise ValueError("predicted and gold must be row-aligned")
    if keys is None:
        keys = _row_ids(gold, G.shape[0])
    return evaluate_against_pool(
        P, G, np.arange(G.shape[0]), k, frequencies=frequencies, keys=keys
    )
