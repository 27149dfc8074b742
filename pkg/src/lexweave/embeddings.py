"""Pretrained embedding ingestion and number shift vectors.

Embeddings arrive in the plain-text vector format common to pretrained
subword models: a ``vocab_count dim`` header line, then one token
followed by ``dim`` reals per line.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .lexicon import LexiconEntry, AMBIGUOUS_NUMBER


@dataclass
class SemanticMatrix:
    """Dense words-by-dimensions matrix of meaning vectors."""

    values: np.ndarray
    row_ids: list[str]

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def dims(self) -> int:
        return self.values.shape[1]


@dataclass
class CoverageReport:
    vocabulary_size: int
    found: int
    missing: list[str]

    @property
    def hit_ratio(self) -> float:
        return self.found / self.vocabulary_size if self.vocabulary_size else 0.0


@dataclass
class ShiftVectorSet:
    """Plural-minus-singular embedding differences for matched pairs."""

    pairs: list[tuple[str, str]]
    shifts: np.ndarray
    cases: list[str]
    classes: list[int | str]


def load_embeddings(
    path: str | Path, vocabulary: list[str]
) -> tuple[SemanticMatrix, CoverageReport]:
    """Load vectors for the vocabulary items present in the file.

    Rows come back in vocabulary order, one per vocabulary item found;
    items sharing a token share (copies of) its vector.  Dimension
    mismatches against the header are hard errors, as is a vocabulary
    with zero coverage.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"embedding file not found: {path}")

    wanted = set(vocabulary)
    by_token: dict[str, np.ndarray] = {}
    with path.open(encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise DataError(f"{path}: expected 'vocab_count dim' header, got {header!r}")
        try:
            declared_dim = int(header[1])
        except ValueError:
            raise DataError(f"{path}: non-integer dimension in header {header!r}") from None
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            token = parts[0]
            if token not in wanted or token in by_token:
                continue
            vector = np.array([float(v) for v in parts[1:] if v], dtype=np.float64)
            if vector.shape[0] != declared_dim:
                raise DataError(
                    f"{path} line {lineno}: vector for {token!r} has "
                    f"{vector.shape[0]} dims, header declares {declared_dim}"
                )
            if not np.all(np.isfinite(vector)):
                raise DataError(f"{path} line {lineno}: non-finite value for {token!r}")
            if not np.any(vector):
                raise DataError(f"{path} line {lineno}: all-zero vector for {token!r}")
            by_token[token] = vector
            if len(by_token) == len(wanted):
                break

    found_ids = [v for v in vocabulary if v in by_token]
    missing = sorted(wanted - set(by_token))
    report = CoverageReport(
        vocabulary_size=len(vocabulary), found=len(found_ids), missing=missing
    )
    if not found_ids:
        raise DataError(
            f"{path}: zero embedding coverage for a vocabulary of {len(vocabulary)} items"
        )
    values = np.stack([by_token[v] for v in found_ids])
    return SemanticMatrix(values=values, row_ids=found_ids), report


def compute_shift_vectors(
    entries: list[LexiconEntry], S: SemanticMatrix
) -> ShiftVectorSet:
    """Exhaustively pair same-lexeme same-case sg/pl entries and subtract.

    S must be row-aligned with entries.  Each shift row is the plural
    embedding minus the singular embedding, exactly.
    """
    if len(entries) != S.rows:
        raise ValueError(
            f"entries ({len(entries)}) and semantic rows ({S.rows}) misaligned"
        )
    by_cell: dict[tuple[str, str, str], int] = {}
    for i, e in enumerate(entries):
        if e.number == AMBIGUOUS_NUMBER:
            continue
        by_cell[(e.lexeme, e.case, e.number)] = i

    pairs: list[tuple[str, str]] = []
    rows: list[np.ndarray] = []
    cases: list[str] = []
    classes: list[int | str] = []
    for (lexeme, case, number), i in by_cell.items():
        if number != "sg":
            continue
        j = by_cell.get((lexeme, case, "pl"))
        if j is None:
            continue
        pairs.append((entries[i].key, entries[j].key))
        rows.append(S.values[j] - S.values[i])
        cases.append(case)
        classes.append(entries[i].inflectional_class)

    shifts = np.stack(rows) if rows else np.zeros((0, S.dims))
    return ShiftVectorSet(pairs=pairs, shifts=shifts, cases=cases, classes=classes)
