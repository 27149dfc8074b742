"""Dataset assembly and experiment runners shared by the CLI commands.

A working dataset keeps one row per lexicon entry, with the form matrix
and the semantic matrix row-aligned; entries whose surface has no
pretrained embedding are dropped up front.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .cues import CueInventory, FormMatrix, build_form_matrix, build_inventory
from .embeddings import CoverageReport, SemanticMatrix, load_embeddings
from .errors import ConfigError
from .evaluation import EvaluationReport, evaluate_against_pool
from .lexicon import (
    DataSplit,
    LexiconEntry,
    load_lexicon,
    split_by_frequency,
    split_holdout_constrained,
)
from .mappings import (
    FeedforwardNetwork,
    LinearMapping,
    apply_mapping,
    solve_linear,
    train_network,
)
from .production import ProductionRecord, produce_from_support


@dataclass
class DatasetBundle:
    entries: list[LexiconEntry]
    S: SemanticMatrix
    C: FormMatrix
    inventory: CueInventory
    coverage: CoverageReport

    def row_of(self, key: str) -> int:
        if not hasattr(self, "_row_index"):
            self._row_index = {k: i for i, k in enumerate(self.S.row_ids)}
        return self._row_index[key]


def build_bundle(lexicon_path: str, embeddings_path: str, grams: int) -> DatasetBundle:
    """Load, join and encode: the working lexicon is the embedding-covered part."""
    entries = load_lexicon(lexicon_path)
    vocab = list(dict.fromkeys(e.surface for e in entries))
    by_surface, coverage = load_embeddings(embeddings_path, vocab)
    index = {s: i for i, s in enumerate(by_surface.row_ids)}

    working = [e for e in entries if e.surface in index]
    keys = [e.key for e in working]
    values = by_surface.values[[index[e.surface] for e in working]]
    S = SemanticMatrix(values=values, row_ids=keys)

    surfaces = [e.surface for e in working]
    inventory = build_inventory(surfaces, grams)
    C = build_form_matrix(surfaces, inventory, row_ids=keys)
    return DatasetBundle(
        entries=working, S=S, C=C, inventory=inventory, coverage=coverage
    )


def make_split(entries: list[LexiconEntry], config: ExperimentConfig) -> DataSplit:
    if config.split.mode == "frequency":
        return split_by_frequency(entries, config.split.threshold)
    if config.split.mode == "constrained":
        return split_holdout_constrained(
            entries, config.split.fraction, config.split.seed
        )
    if config.split.mode == "none":
        return DataSplit(train=list(entries), test=[])
    raise ConfigError(f"unknown split mode {config.split.mode!r}")


def _rows_for(bundle: DatasetBundle, entries: list[LexiconEntry]) -> np.ndarray:
    return np.array([bundle.row_of(e.key) for e in entries], dtype=np.intp)


@dataclass
class ComprehensionResult:
    mapping: LinearMapping
    train_report: EvaluationReport
    test_report: EvaluationReport | None


def run_comprehension(bundle: DatasetBundle, config: ExperimentConfig) -> ComprehensionResult:
    """Train the form-to-meaning mapping and rank against the full pool.

    Type and token accuracies are reported for the training rows; the
    held-out rows compete against every gold vector in the lexicon, so
    a test prediction must beat all trained words too.
    """
    split = make_split(bundle.entries, config)
    train_idx = _rows_for(bundle, split.train)
    test_idx = _rows_for(bundle, split.test)
    if train_idx.size == 0:
        raise ConfigError("split left no training rows")

    weights = None
    if config.learning == "FIL":
        weights = np.array([e.frequency for e in split.train], dtype=np.float64)
    F = solve_linear(
        bundle.C.matrix[train_idx],
        bundle.S.values[train_idx],
        weights=weights,
        ridge=config.mapping.ridge,
        kind="comprehension",
        learning=config.learning,
    )

    k = config.evaluation.k
    pool = bundle.S.values
    predicted_train = apply_mapping(F, bundle.C.matrix[train_idx])
    train_report = evaluate_against_pool(
        predicted_train,
        pool,
        train_idx,
        k,
        frequencies=[e.frequency for e in split.train],
        keys=[e.key for e in split.train],
    )
    test_report = None
    if test_idx.size:
        predicted_test = apply_mapping(F, bundle.C.matrix[test_idx])
        test_report = evaluate_against_pool(
            predicted_test,
            pool,
            test_idx,
            k,
            frequencies=[e.frequency for e in split.test],
            keys=[e.key for e in split.test],
        )
    return ComprehensionResult(mapping=F, train_report=train_report, test_report=test_report)


@dataclass
class ProductionOutcome:
    records: list[ProductionRecord]
    accuracy: float
    mean_support: float
    what_report: EvaluationReport | None
    what_model: LinearMapping | FeedforwardNetwork | None
    feedback: LinearMapping


def run_production(bundle: DatasetBundle, config: ExperimentConfig) -> ProductionOutcome:
    """What-system prediction, weaving and synthesis over the evaluation rows.

    With a split, production is evaluated on the held-out rows; without
    one, every word is produced (low-frequency words then act as the
    generalization probe).  The what-system is a trained network, a
    linear mapping, or the gold form vectors themselves, per config.
    """
    split = make_split(bundle.entries, config)
    train_idx = _rows_for(bundle, split.train)
    eval_entries = split.test if split.test else bundle.entries
    eval_idx = _rows_for(bundle, eval_entries)

    feedback_weights = None
    if config.production.feedback == "FIL":
        feedback_weights = np.array(
            [e.frequency for e in split.train], dtype=np.float64
        )
    F = solve_linear(
        bundle.C.matrix[train_idx],
        bundle.S.values[train_idx],
        weights=feedback_weights,
        ridge=config.mapping.ridge,
        kind="comprehension",
        learning=config.production.feedback,
    )

    what = config.production.what
    what_model: LinearMapping | FeedforwardNetwork | None = None
    what_report = None
    if what == "network":
        what_model = train_network(
            bundle.S.values[train_idx],
            bundle.C.matrix[train_idx],
            hidden=config.network.hidden,
            epochs=config.network.epochs,
            patience=config.network.patience,
            validation_fraction=config.network.validation_fraction,
            seed=config.network.seed,
            step=config.network.step,
            batch=config.network.batch,
        )
        predicted_forms = np.asarray(
            np.vstack(
                [
                    what_model.logits(bundle.S.values[eval_idx[i : i + 512]])
                    for i in range(0, eval_idx.size, 512)
                ]
            )
        )
        # rank on logits: the logistic is monotone, correlations differ,
        # but support thresholds below apply to the [0,1] outputs
        from .mappings import network_forward

        support_rows = network_forward(what_model, bundle.S.values[eval_idx])
        what_report = evaluate_against_pool(
            support_rows, bundle.C.dense(), eval_idx, config.evaluation.k,
            keys=[e.key for e in eval_entries],
        )
    elif what == "linear":
        what_weights = None
        if config.learning == "FIL":
            what_weights = np.array(
                [e.frequency for e in split.train], dtype=np.float64
            )
        what_model = solve_linear(
            bundle.S.values[train_idx],
            bundle.C.matrix[train_idx],
            weights=what_weights,
            ridge=config.mapping.ridge,
            kind="production",
            learning=config.learning,
        )
        support_rows = apply_mapping(what_model, bundle.S.values[eval_idx])
        what_report = evaluate_against_pool(
            support_rows, bundle.C.dense(), eval_idx, config.evaluation.k,
            keys=[e.key for e in eval_entries],
        )
    elif what == "gold":
        support_rows = bundle.C.matrix[eval_idx].toarray()
    else:
        raise ConfigError(f"unknown what-system {what!r}")

    if what != "gold":
        if isinstance(what_model, FeedforwardNetwork):
            from .mappings import network_forward

            support_rows = network_forward(what_model, bundle.S.values[eval_idx])
        else:
            support_rows = apply_mapping(what_model, bundle.S.values[eval_idx])

    records = []
    supports = []
    for i, entry in enumerate(eval_entries):
        result = produce_from_support(
            support_rows[i],
            bundle.S.values[eval_idx[i]],
            F,
            bundle.inventory,
            threshold=config.production.threshold,
            max_length=config.production.max_length,
            cap=config.production.candidate_cap,
        )
        emitted = result.best.surface if result.best else ""
        support = result.best.support if result.best else float("nan")
        correct = emitted == entry.surface
        records.append(
            ProductionRecord(
                key=entry.key,
                emitted=emitted,
                target=entry.surface,
                support=support,
                n_candidates=result.n_candidates,
                correct=correct,
            )
        )
        if np.isfinite(support):
            supports.append(support)

    accuracy = float(np.mean([r.correct for r in records])) if records else 0.0
    mean_support = float(np.mean(supports)) if supports else float("nan")
    return ProductionOutcome(
        records=records,
        accuracy=accuracy,
        mean_support=mean_support,
        what_report=what_report,
        what_model=what_model,
        feedback=F,
    )
