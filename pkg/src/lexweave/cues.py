"""Boundary-marked letter n-grams and the sparse binary form matrix.

A word's form vector is a multiple-hot row over the inventory of
n-grams attested in the data: entry (i, j) is 1 iff cue j occurs in the
boundary-padded surface of word i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError
from .lexicon import BOUNDARY


def extract_ngrams(surface: str, n: int) -> list[str]:
    """Left-to-right n-grams of ``#surface#``, duplicates preserved.

    A single boundary marker is attached on each side; a word shorter
    than n - 2 characters yields no grams.
    """
    if not surface:
        raise ValueError("surface must be non-empty")
    if n not in (3, 4):
        raise ValueError(f"gram size must be 3 or 4, got {n}")
    if BOUNDARY in surface:
        raise DataError(f"surface {surface!r} contains the reserved symbol {BOUNDARY!r}")
    padded = BOUNDARY + surface + BOUNDARY
    return [padded[i : i + n] for i in range(len(padded) - n + 1)]


@dataclass
class CueInventory:
    """Ordered universe of n-grams with stable column assignment."""

    n: int
    cues: list[str]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {cue: i for i, cue in enumerate(self.cues)}
        if len(self.index) != len(self.cues):
            raise DataError("cue inventory contains duplicates")

    def __len__(self) -> int:
        return len(self.cues)

    def __contains__(self, cue: str) -> bool:
        return cue in self.index

    def save(self, path: str | Path) -> None:
        """One cue per line; line number = column index."""
        Path(path).write_text("\n".join(self.cues) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, n: int | None = None) -> "CueInventory":
        cues = Path(path).read_text(encoding="utf-8").splitlines()
        if not cues:
            raise DataError(f"empty cue inventory: {path}")
        if n is None:
            n = len(cues[0])
        return cls(n=n, cues=cues)


def build_inventory(surfaces: list[str], n: int) -> CueInventory:
    """First-seen-order union of the n-grams of all surfaces."""
    if not surfaces:
        raise ValueError("need at least one surface")
    seen: dict[str, None] = {}
    for surface in surfaces:
        for gram in extract_ngrams(surface, n):
            seen.setdefault(gram)
    return CueInventory(n=n, cues=list(seen))


@dataclass
class FormMatrix:
    """Sparse binary words-by-cues matrix with aligned row keys."""

    matrix: sp.csr_matrix
    row_ids: list[str]
    skipped: list[tuple[str, str]]

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def collision_groups(self) -> list[list[str]]:
        """Groups of row keys whose cue sets coincide exactly.

        Identical rows put a ceiling on nearest-neighbor accuracy, so
        the build surfaces them rather than leaving callers to guess.
        """
        buckets: dict[tuple[int, ...], list[str]] = {}
        indptr = self.matrix.indptr
        indices = self.matrix.indices
        for i, rid in enumerate(self.row_ids):
            cols = tuple(sorted(indices[indptr[i] : indptr[i + 1]].tolist()))
            buckets.setdefault(cols, []).append(rid)
        return [ids for ids in buckets.values() if len(ids) > 1]

    def save(self, path_prefix: str | Path) -> None:
        """Triplet text file ``<prefix>.triplets`` plus ``<prefix>.rows`` manifest."""
        prefix = Path(path_prefix)
        coo = self.matrix.tocoo()
        lines = [f"{r} {c} 1" for r, c in zip(coo.row.tolist(), coo.col.tolist())]
        header = f"{self.rows} {self.cols}"
        Path(str(prefix) + ".triplets").write_text(
            header + "\n" + "\n".join(lines) + "\n", encoding="utf-8"
        )
        Path(str(prefix) + ".rows").write_text(
            "\n".join(self.row_ids) + "\n", encoding="utf-8"
        )


def build_form_matrix(
    surfaces: list[str],
    inventory: CueInventory,
    row_ids: list[str] | None = None,
    policy: str = "strict",
) -> FormMatrix:
    """Encode surfaces as binary rows over a frozen inventory.

    policy="strict" raises on any cue missing from the inventory (the
    training-time contract); policy="skip" drops unknown cues from the
    row and records them, which is the defined behavior for held-out
    words encoded against a training inventory.
    """
    if policy not in ("strict", "skip"):
        raise ValueError(f"unknown policy {policy!r}")
    if row_ids is None:
        row_ids = list(surfaces)
    if len(row_ids) != len(surfaces):
        raise ValueError("row_ids and surfaces must have equal length")

    index = inventory.index
    rows: list[int] = []
    cols: list[int] = []
    skipped: list[tuple[str, str]] = []
    for i, surface in enumerate(surfaces):
        for gram in set(extract_ngrams(surface, inventory.n)):
            j = index.get(gram)
            if j is None:
                if policy == "strict":
                    raise DataError(
                        f"word {surface!r}: cue {gram!r} not in inventory"
                    )
                skipped.append((row_ids[i], gram))
                continue
            rows.append(i)
            cols.append(j)

    matrix = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.float64), (rows, cols)),
        shape=(len(surfaces), len(inventory)),
    )
    return FormMatrix(matrix=matrix, row_ids=row_ids, skipped=sorted(skipped))


def encode_row(surface: str, inventory: CueInventory) -> np.ndarray:
    """Single dense binary row over the inventory; unknown cues are dropped."""
    row = np.zeros(len(inventory), dtype=np.float64)
    for gram in extract_ngrams(surface, inventory.n):
        j = inventory.index.get(gram)
        if j is not None:
            row[j] = 1.0
    return row
