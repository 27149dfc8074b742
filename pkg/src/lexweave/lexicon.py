"""Inflected-noun lexicon: loading, validation, and train/test splits.

The lexicon is a UTF-8 comma-delimited file with header
``surface,lexeme,case,number,class,frequency``.  Rows whose case, number
or inflectional class cannot be interpreted are retained with the
markers ``uncertain`` / ``ambiguous`` / ``unknown`` so that downstream
filters can act on them; structurally broken rows are hard errors.
"""

from __future__ import annotations

import csv
import json
import unicodedata
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError

BOUNDARY = "#"

CASES = (
    "nominative",
    "genitive",
    "partitive",
    "illative",
    "inessive",
    "elative",
    "allative",
    "adessive",
    "ablative",
    "essive",
    "translative",
    "abessive",
    "instructive",
    "comitative",
)

CASE_ABBREV = {
    "nominative": "nom",
    "genitive": "gen",
    "partitive": "par",
    "illative": "ill",
    "inessive": "ine",
    "elative": "ela",
    "allative": "all",
    "adessive": "ade",
    "ablative": "abl",
    "essive": "ess",
    "translative": "tra",
    "abessive": "abe",
    "instructive": "ins",
    "comitative": "com",
}

_ABBREV_CASE = {v: k for k, v in CASE_ABBREV.items()}

UNCERTAIN_CASE = "uncertain"
AMBIGUOUS_NUMBER = "ambiguous"
UNKNOWN_CLASS = "unknown"

NUMBERS = ("sg", "pl", AMBIGUOUS_NUMBER)

CLASS_RANGE = range(1, 52)

HEADER = ["surface", "lexeme", "case", "number", "class", "frequency"]


@dataclass(frozen=True)
class LexiconEntry:
    """One inflected word form attested in the corpus."""

    surface: str
    lexeme: str
    case: str
    number: str
    inflectional_class: int | str
    frequency: int

    @property
    def key(self) -> str:
        """Stable identifier: surface|lexeme|case|number."""
        return f"{self.surface}|{self.lexeme}|{self.case}|{self.number}"

    @property
    def cell(self) -> str:
        """Paradigm cell label, e.g. ``sg_gen`` (``sg_pl_com`` for ambiguous number)."""
        num = "sg_pl" if self.number == AMBIGUOUS_NUMBER else self.number
        case = CASE_ABBREV.get(self.case, self.case)
        return f"{num}_{case}"


@dataclass
class DataSplit:
    """Disjoint train/test partition of a lexicon."""

    train: list[LexiconEntry]
    test: list[LexiconEntry]


def _parse_case(raw: str) -> str:
    c = raw.strip().lower()
    if c in CASES:
        return c
    if c in _ABBREV_CASE:
        return _ABBREV_CASE[c]
    return UNCERTAIN_CASE


def _parse_number(raw: str) -> str:
    n = raw.strip().lower()
    if n in ("sg", "singular"):
        return "sg"
    if n in ("pl", "plural"):
        return "pl"
    return AMBIGUOUS_NUMBER


def _parse_class(raw: str) -> int | str:
    c = raw.strip()
    try:
        value = int(c)
    except ValueError:
        return UNKNOWN_CLASS
    return value if value in CLASS_RANGE else UNKNOWN_CLASS


def _normalize_surface(raw: str, lineno: int) -> str:
    # Finnish a-umlaut / o-umlaut must be single codepoints so that
    # n-gram identity is stable across sources.
    surface = unicodedata.normalize("NFC", raw.strip().lower())
    if not surface:
        raise DataError(f"line {lineno}: empty surface")
    if any(ch.isspace() for ch in surface):
        raise DataError(f"line {lineno}: surface {raw!r} contains whitespace")
    if BOUNDARY in surface:
        raise DataError(
            f"line {lineno}: surface {raw!r} contains the reserved boundary symbol {BOUNDARY!r}"
        )
    return surface


def load_lexicon(path: str | Path) -> list[LexiconEntry]:
    """Read a lexicon file, validating structure row by row.

    Structural problems (wrong column count, non-positive or non-integer
    frequency, duplicate keys) raise DataError naming the offending
    line.  Unparsable case / number / class values fall back to the
    ``uncertain`` / ``ambiguous`` / ``unknown`` markers.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"lexicon file not found: {path}")

    entries: list[LexiconEntry] = []
    seen: set[tuple[str, str, str, str]] = set()
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected header {','.join(HEADER)}") from None
        if [h.strip().lower() for h in header] != HEADER:
            raise DataError(
                f"{path}: bad header {','.join(header)!r}, expected {','.join(HEADER)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(HEADER):
                raise DataError(
                    f"line {lineno}: expected {len(HEADER)} columns, got {len(row)}"
                )
            surface = _normalize_surface(row[0], lineno)
            lexeme = unicodedata.normalize("NFC", row[1].strip().lower())
            if not lexeme:
                raise DataError(f"line {lineno}: empty lexeme")
            try:
                frequency = int(row[5].strip())
            except ValueError:
                raise DataError(
                    f"line {lineno}: frequency {row[5]!r} is not an integer"
                ) from None
            if frequency < 1:
                raise DataError(f"line {lineno}: frequency {frequency} < 1")
            entry = LexiconEntry(
                surface=surface,
                lexeme=lexeme,
                case=_parse_case(row[2]),
                number=_parse_number(row[3]),
                inflectional_class=_parse_class(row[4]),
                frequency=frequency,
            )
            dupe_key = (entry.surface, entry.lexeme, entry.case, entry.number)
            if dupe_key in seen:
                raise DataError(f"line {lineno}: duplicate entry {entry.key}")
            seen.add(dupe_key)
            entries.append(entry)
    return entries


def save_lexicon(entries: list[LexiconEntry], path: str | Path) -> None:
    """Write entries back in the loadable file format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for e in entries:
            writer.writerow(
                [e.surface, e.lexeme, e.case, e.number, e.inflectional_class, e.frequency]
            )


def split_by_frequency(entries: list[LexiconEntry], threshold: int) -> DataSplit:
    """Partition: frequency > threshold trains, frequency <= threshold tests."""
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    train = [e for e in entries if e.frequency > threshold]
    test = [e for e in entries if e.frequency <= threshold]
    return DataSplit(train=train, test=test)


def split_holdout_constrained(
    entries: list[LexiconEntry], test_fraction: float, seed: int
) -> DataSplit:
    """Random held-out split whose test entries are fully attested in train.

    Every test entry's lexeme, case and number each occur in at least
    one training entry.  The selection walks a seeded permutation and
    greedily moves entries that the constraint still permits; the split
    is reproducible from the seed.  If the achievable test size falls
    more than 1% short of the request, raises DataError naming the
    binding constraint.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(entries)
    target = int(round(test_fraction * n))
    if target == 0:
        return DataSplit(train=list(entries), test=[])

    lexeme_left: dict[str, int] = {}
    case_left: dict[str, int] = {}
    number_left: dict[str, int] = {}
    for e in entries:
        lexeme_left[e.lexeme] = lexeme_left.get(e.lexeme, 0) + 1
        case_left[e.case] = case_left.get(e.case, 0) + 1
        number_left[e.number] = number_left.get(e.number, 0) + 1

    rng = np.random.default_rng(seed)
    order = rng.permutation(n)

    in_test = np.zeros(n, dtype=bool)
    picked = 0
    blocked = {"lexeme": 0, "case": 0, "number": 0}
    for idx in order:
        if picked >= target:
            break
        e = entries[idx]
        if lexeme_left[e.lexeme] < 2:
            blocked["lexeme"] += 1
            continue
        if case_left[e.case] < 2:
            blocked["case"] += 1
            continue
        if number_left[e.number] < 2:
            blocked["number"] += 1
            continue
        in_test[idx] = True
        picked += 1
        lexeme_left[e.lexeme] -= 1
        case_left[e.case] -= 1
        number_left[e.number] -= 1

    if picked < target and (target - picked) > 0.01 * target:
        binding = max(blocked, key=lambda k: blocked[k])
        raise DataError(
            f"constrained split infeasible: requested {target} test entries, "
            f"only {picked} selectable (binding constraint: {binding}, "
            f"{blocked[binding]} candidates rejected)"
        )

    train = [e for i, e in enumerate(entries) if not in_test[i]]
    test = [e for i, e in enumerate(entries) if in_test[i]]
    return DataSplit(train=train, test=test)


def save_split(split: DataSplit, out_dir: str | Path, sidecar: dict) -> None:
    """Emit train.csv / test.csv plus a JSON sidecar recording the parameters."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_lexicon(split.train, out / "train.csv")
    save_lexicon(split.test, out / "test.csv")
    info = dict(sidecar)
    info["n_train"] = len(split.train)
    info["n_test"] = len(split.test)
    (out / "split.json").write_text(
        json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
