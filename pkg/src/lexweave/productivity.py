"""Per-inflectional-class productivity measures and rank correlations.

Productivity is gauged per class from lemma statistics: the type count
V, the hapax count V(1), the token count N, the median lemma frequency,
the vocabulary growth rate P = V(1)/N, and the class's share of all
hapax legomena P*.  Model performance aggregated per class is then
related to these measures with Spearman rank correlations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.stats

from .errors import DataError, NumericalError
from .evaluation import EvaluationReport
from .lexicon import AMBIGUOUS_NUMBER, UNKNOWN_CLASS, LexiconEntry
from .production import ProductionRecord

MEASURES = ("log_p", "log_v", "log_v1", "log_median", "log_pstar")


@dataclass
class ClassProductivity:
    class_id: int
    V: int
    V1: int
    N: int
    median_lemma_freq: float
    P: float
    Pstar: float

    # Log transforms back off from zero by 1 for V(1) and by 0.01 for
    # the two probability measures.
    @property
    def log_v(self) -> float:
        return math.log(self.V)

    @property
    def log_v1(self) -> float:
        return math.log(self.V1 + 1)

    @property
    def log_p(self) -> float:
        return math.log(self.P + 0.01)

    @property
    def log_pstar(self) -> float:
        return math.log(self.Pstar + 0.01)

    @property
    def log_median(self) -> float:
        return math.log(self.median_lemma_freq)

    def measure(self, name: str) -> float:
        return getattr(self, name)


@dataclass
class ClassPerformance:
    class_id: int
    mean_target_correlation: float | None
    mean_accuracy: float
    mean_support: float | None
    n_words: int

    @property
    def unstable(self) -> bool:
        """Means over very few test words are flagged, not dropped."""
        return self.n_words < 5


@dataclass
class PerWordPerformance:
    key: str
    correct: bool
    correlation: float | None = None
    support: float | None = None


def performance_from_evaluation(report: EvaluationReport) -> list[PerWordPerformance]:
    return [
        PerWordPerformance(
            key=r.key, correct=r.correct_at_1, correlation=r.target_correlation
        )
        for r in report.per_word
    ]


def performance_from_production(records: list[ProductionRecord]) -> list[PerWordPerformance]:
    return [
        PerWordPerformance(key=r.key, correct=r.correct, support=r.support)
        for r in records
    ]


def class_measures(
    entries: list[LexiconEntry], lemma_freqs: dict[str, int]
) -> list[ClassProductivity]:
    """Lexeme-level measures per inflectional class.

    Types are distinct lexemes, tokens are summed lemma frequencies and
    hapaxes are lexemes of frequency 1; the lemma frequency table is a
    separate input because per-form corpus counts cannot reconstruct
    lemma statistics.  Classes without an identifiable id are skipped.
    """
    lexeme_class: dict[str, int] = {}
    for e in entries:
        if e.inflectional_class == UNKNOWN_CLASS:
            continue
        lexeme_class.setdefault(e.lexeme, int(e.inflectional_class))

    by_class: dict[int, list[int]] = {}
    for lexeme, cls in lexeme_class.items():
        freq = lemma_freqs.get(lexeme)
        if freq is None:
            raise DataError(f"no lemma frequency for lexeme {lexeme!r}")
        by_class.setdefault(cls, []).append(freq)

    total_hapaxes = sum(
        sum(1 for f in freqs if f == 1) for freqs in by_class.values()
    )
    out = []
    for cls in sorted(by_class):
        freqs = by_class[cls]
        v = len(freqs)
        v1 = sum(1 for f in freqs if f == 1)
        n = sum(freqs)
        out.append(
            ClassProductivity(
                class_id=cls,
                V=v,
                V1=v1,
                N=n,
                median_lemma_freq=float(np.median(freqs)),
                P=v1 / n,
                Pstar=v1 / total_hapaxes if total_hapaxes else 0.0,
            )
        )
    return out


def good_turing_novel_estimate(entries: list[LexiconEntry]) -> float:
    """Probability that the next token is of an unseen type: V(1)/N over forms."""
    n = sum(e.frequency for e in entries)
    v1 = sum(1 for e in entries if e.frequency == 1)
    return v1 / n if n else 0.0


def class_performance(
    rows: list[PerWordPerformance], entries: list[LexiconEntry]
) -> list[ClassPerformance]:
    """Per-class means of correlation, accuracy and support.

    Entries with unknown inflectional class or ambiguous number are
    excluded before aggregating.
    """
    by_key = {e.key: e for e in entries}
    grouped: dict[int, list[PerWordPerformance]] = {}
    for row in rows:
        entry = by_key.get(row.key)
        if entry is None:
            continue
        if entry.inflectional_class == UNKNOWN_CLASS or entry.number == AMBIGUOUS_NUMBER:
            continue
        grouped.setdefault(int(entry.inflectional_class), []).append(row)
    if not grouped:
        raise DataError("no performance rows joined to lexicon entries")

    out = []
    for cls in sorted(grouped):
        members = grouped[cls]
        corrs = [r.correlation for r in members if r.correlation is not None]
        supports = [r.support for r in members if r.support is not None]
        out.append(
            ClassPerformance(
                class_id=cls,
                mean_target_correlation=float(np.mean(corrs)) if corrs else None,
                mean_accuracy=float(np.mean([r.correct for r in members])),
                mean_support=float(np.mean(supports)) if supports else None,
                n_words=len(members),
            )
        )
    return out


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> tuple[float, float]:
    """Spearman rho with mid-rank ties, p from the t approximation.

    rho is the Pearson correlation of the rank-transformed inputs; the
    p-value tests t = rho * sqrt((n-2)/(1-rho^2)) against a t
    distribution with n-2 degrees of freedom (two-sided).  rho = +-1
    yields p = 0 by convention.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise ValueError("need two equal-length vectors of at least 3 values")
    rx = _midranks(x)
    ry = _midranks(y)
    rxc = rx - rx.mean()
    ryc = ry - ry.mean()
    nx = np.linalg.norm(rxc)
    ny = np.linalg.norm(ryc)
    if nx == 0.0 or ny == 0.0:
        raise NumericalError("Spearman correlation undefined for constant input")
    rho = float(np.clip(rxc @ ryc / (nx * ny), -1.0, 1.0))
    if abs(rho) == 1.0:
        return rho, 0.0
    n = x.size
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(scipy.stats.t.sf(abs(t), df=n - 2))
    return rho, p


@dataclass
class CorrelationRow:
    measure: str
    metric: str
    rho: float | None
    p: float | None
    note: str = ""


@dataclass
class CorrelationReport:
    rows: list[CorrelationRow]
    scatter: list[dict]
    excluded_classes: list[int]

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["measure", "metric", "rho", "p", "note"])
            for r in self.rows:
                writer.writerow(
                    [
                        r.measure,
                        r.metric,
                        "" if r.rho is None else repr(r.rho),
                        "" if r.p is None else repr(r.p),
                        r.note,
                    ]
                )

    def write_scatter_csv(self, path: str | Path) -> None:
        if not self.scatter:
            return
        fields = list(self.scatter[0])
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in self.scatter:
                writer.writerow(row)


def productivity_correlation_report(
    perf: list[ClassPerformance],
    prod: list[ClassProductivity],
    min_types: int = 3,
) -> CorrelationReport:
    """Spearman rho/p for every productivity measure against every metric.

    Classes with fewer than `min_types` lexemes carry too little signal
    for rank statistics and are excluded from the join (recorded in the
    report).  A constant metric or measure makes that pair's rho
    undefined; the error is surfaced per row rather than aborting the
    rest of the table.
    """
    prod_by_class = {p.class_id: p for p in prod if p.V >= min_types}
    excluded = sorted(p.class_id for p in prod if p.V < min_types)
    joined = [(pf, prod_by_class[pf.class_id]) for pf in perf if pf.class_id in prod_by_class]
    if len(joined) < 3:
        raise DataError(
            f"only {len(joined)} classes join performance to productivity; need >= 3"
        )

    metrics: dict[str, list[float]] = {"mean_accuracy": [pf.mean_accuracy for pf, _ in joined]}
    if all(pf.mean_target_correlation is not None for pf, _ in joined):
        metrics["mean_target_correlation"] = [
            pf.mean_target_correlation for pf, _ in joined
        ]
    if all(pf.mean_support is not None for pf, _ in joined):
        metrics["mean_support"] = [pf.mean_support for pf, _ in joined]

    rows: list[CorrelationRow] = []
    scatter: list[dict] = []
    for i, (pf, pr) in enumerate(joined):
        rec = {"class_id": pf.class_id, "n_words": pf.n_words}
        for m in MEASURES:
            rec[m] = pr.measure(m)
        for name, series in metrics.items():
            rec[name] = series[i]
        scatter.append(rec)

    for measure in MEASURES:
        xs = [pr.measure(measure) for _, pr in joined]
        for metric, ys in metrics.items():
            try:
                rho, p = spearman(xs, ys)
                rows.append(CorrelationRow(measure=measure, metric=metric, rho=rho, p=p))
            except NumericalError as exc:
                rows.append(
                    CorrelationRow(
                        measure=measure, metric=metric, rho=None, p=None, note=str(exc)
                    )
                )
    return CorrelationReport(rows=rows, scatter=scatter, excluded_classes=excluded)


def write_class_measures_csv(measures: list[ClassProductivity], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["class", "V", "V1", "N", "median_lemma_freq", "P", "Pstar",
             "log_p", "log_v", "log_v1", "log_median", "log_pstar"]
        )
        for m in measures:
            writer.writerow(
                [m.class_id, m.V, m.V1, m.N, repr(m.median_lemma_freq),
                 repr(m.P), repr(m.Pstar), repr(m.log_p), repr(m.log_v),
                 repr(m.log_v1), repr(m.log_median), repr(m.log_pstar)]
            )


def load_lemma_frequencies(path: str | Path) -> dict[str, int]:
    """Read the optional ``lexeme,frequency`` table."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"lemma frequency file not found: {path}")
    freqs: dict[str, int] = {}
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["lexeme", "frequency"]:
            raise DataError(f"{path}: expected header 'lexeme,frequency'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path} line {lineno}: expected 2 columns")
            try:
                freq = int(row[1])
            except ValueError:
                raise DataError(
                    f"{path} line {lineno}: frequency {row[1]!r} is not an integer"
                ) from None
            if freq < 1:
                raise DataError(f"{path} line {lineno}: frequency {freq} < 1")
            freqs[row[0].strip().lower()] = freq
    return freqs
