"""The where-system: weaving supported cues into candidate word forms.

Production runs in three steps: threshold the predicted per-cue support
vector, chain the selected n-grams into boundary-to-boundary strings
(consecutive cues overlap in n-1 characters), and pick the candidate
whose comprehension-predicted meaning correlates best with the intended
meaning.  That internal feedback loop makes the final choice, so a
production is accurate exactly when no competitor form expresses the
intended meaning better than the target does.
"""

from __future__ import annotations

import csv
import heapq
import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cues import CueInventory, encode_row
from .lexicon import BOUNDARY
from .mappings import FeedforwardNetwork, LinearMapping, apply_mapping, network_forward

DEFAULT_THRESHOLD = 0.01
DEFAULT_MAX_LENGTH = 25
DEFAULT_CANDIDATE_CAP = 10_000

# Abort runaway expansions of pathological cue graphs; completed
# candidates found so far are kept.
_EXPANSION_BUDGET = 1_000_000


@dataclass
class ProductionCandidate:
    surface: str
    cue_path: list[str]
    support: float | None = None


@dataclass
class ProductionResult:
    best: ProductionCandidate | None
    ranked: list[ProductionCandidate]
    n_candidates: int
    tied: bool = False

    @property
    def produced(self) -> bool:
        return self.best is not None


def select_cues(
    predicted_form: np.ndarray, inventory: CueInventory, threshold: float = DEFAULT_THRESHOLD
) -> set[str]:
    """Cues whose predicted support exceeds the threshold."""
    vec = np.asarray(predicted_form, dtype=np.float64).ravel()
    if vec.shape[0] != len(inventory):
        raise ValueError(
            f"support vector has {vec.shape[0]} entries, inventory holds {len(inventory)}"
        )
    return {inventory.cues[j] for j in np.flatnonzero(vec > threshold)}


def _merge_path(path: tuple[str, ...]) -> str:
    merged = path[0] + "".join(c[-1] for c in path[1:])
    return merged.strip(BOUNDARY)


def _validate_cues(cues: list[str]) -> int:
    sizes = {len(c) for c in cues}
    if len(sizes) != 1:
        raise ValueError(f"cues must share one gram size, got sizes {sorted(sizes)}")
    n = sizes.pop()
    for c in cues:
        if BOUNDARY in c[1:-1]:
            raise ValueError(f"cue {c!r} has an internal boundary symbol")
    return n


def weave(
    cues: set[str] | list[str],
    max_length: int = DEFAULT_MAX_LENGTH,
    cue_support: dict[str, float] | None = None,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> list[ProductionCandidate]:
    """All surfaces derivable by overlap-chaining the cues.

    Paths start at a boundary-initial cue, extend while the trailing
    n-1 characters match the next cue's leading n-1, and complete at a
    boundary-final cue.  Cue reuse along a path is allowed (geminates
    and vowel doubling make repeats legitimate), so paths are pruned
    once the merged surface would exceed max_length.  Surfaces are
    deduplicated, keeping a shortest derivation.  If the candidate set
    overflows `cap`, the walk restarts in best-first order by summed
    cue support and keeps the first `cap` completions.
    """
    cue_list = sorted(set(cues))
    if not cue_list:
        return []
    n = _validate_cues(cue_list)
    starts = [c for c in cue_list if c[0] == BOUNDARY]
    has_end = any(c[-1] == BOUNDARY for c in cue_list)
    max_path = max_length - n + 3  # surface length = n + path_length - 3
    if not starts or not has_end or max_path < 1:
        return []

    # only non-initial cues can continue a path (a '#' can never sit mid-word)
    by_prefix: dict[str, list[str]] = {}
    for c in cue_list:
        if c[0] != BOUNDARY:
            by_prefix.setdefault(c[:-1], []).append(c)

    found = _weave_exhaustive(starts, by_prefix, max_path, cap)
    if found is None:
        found = _weave_best_first(starts, by_prefix, max_path, cap, cue_support or {})

    out = [
        ProductionCandidate(surface=s, cue_path=list(p)) for s, p in found.items()
    ]
    out.sort(key=lambda c: (len(c.surface), c.surface))
    return out


def _weave_exhaustive(starts, by_prefix, max_path, cap):
    """Breadth-first enumeration; None signals candidate-cap overflow."""
    found: dict[str, tuple[str, ...]] = {}
    queue = deque((c,) for c in starts)
    expansions = 0
    while queue:
        path = queue.popleft()
        last = path[-1]
        if last[-1] == BOUNDARY:
            surface = _merge_path(path)
            if surface not in found:
                found[surface] = path
                if len(found) > cap:
                    return None
            continue
        if len(path) >= max_path:
            continue
        for nxt in by_prefix.get(last[1:], ()):
            queue.append(path + (nxt,))
            expansions += 1
            if expansions > _EXPANSION_BUDGET:
                return None
    return found


def _weave_best_first(starts, by_prefix, max_path, cap, support):
    """Highest summed-support paths first; stops at `cap` completions."""
    found: dict[str, tuple[str, ...]] = {}
    heap: list[tuple[float, tuple[str, ...]]] = []
    for c in starts:
        heapq.heappush(heap, (-support.get(c, 0.0), (c,)))
    expansions = 0
    while heap and len(found) < cap:
        neg_score, path = heapq.heappop(heap)
        last = path[-1]
        if last[-1] == BOUNDARY:
            found.setdefault(_merge_path(path), path)
            continue
        if len(path) >= max_path:
            continue
        for nxt in by_prefix.get(last[1:], ()):
            heapq.heappush(heap, (neg_score - support.get(nxt, 0.0), path + (nxt,)))
            expansions += 1
            if expansions > _EXPANSION_BUDGET:
                return found
    return found


def synthesize_by_analysis(
    candidates: list[ProductionCandidate],
    F: LinearMapping,
    inventory: CueInventory,
    intended: np.ndarray,
) -> tuple[ProductionCandidate | None, list[ProductionCandidate]]:
    """Rank candidates by how well their comprehended meaning matches.

    Each candidate surface is re-encoded over the inventory, mapped
    through the comprehension mapping, and correlated with the intended
    semantic vector; that correlation is the candidate's support.  Ties
    break to the shorter surface, then lexicographically.  Candidates
    whose predicted meaning is constant get NaN support and can never
    win.  An empty candidate set is the no-production outcome (None).
    """
    if not candidates:
        return None, []
    intended = np.asarray(intended, dtype=np.float64).ravel()
    rows = np.stack([encode_row(c.surface, inventory) for c in candidates])
    predicted = apply_mapping(F, rows)

    ic = intended - intended.mean()
    inorm = np.linalg.norm(ic)
    if inorm == 0.0:
        raise ValueError("intended semantic vector is constant")
    pc = predicted - predicted.mean(axis=1, keepdims=True)
    pnorm = np.linalg.norm(pc, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        supports = np.where(pnorm > 0.0, pc @ ic / (pnorm * inorm), np.nan)

    ranked = []
    for cand, s in zip(candidates, supports):
        ranked.append(
            ProductionCandidate(
                surface=cand.surface, cue_path=cand.cue_path, support=float(s)
            )
        )
    ranked.sort(
        key=lambda c: (
            math.isnan(c.support),
            -(c.support if not math.isnan(c.support) else 0.0),
            len(c.surface),
            c.surface,
        )
    )
    best = ranked[0] if not math.isnan(ranked[0].support) else None
    return best, ranked


def produce_from_support(
    support_vector: np.ndarray,
    intended: np.ndarray,
    F: LinearMapping,
    inventory: CueInventory,
    threshold: float = DEFAULT_THRESHOLD,
    max_length: int = DEFAULT_MAX_LENGTH,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> ProductionResult:
    """Weave from an explicit per-cue support vector (e.g. gold form rows)."""
    vec = np.asarray(support_vector, dtype=np.float64).ravel()
    selected = select_cues(vec, inventory, threshold)
    cue_support = {c: float(vec[inventory.index[c]]) for c in selected}
    candidates = weave(selected, max_length=max_length, cue_support=cue_support, cap=cap)
    best, ranked = synthesize_by_analysis(candidates, F, inventory, intended)
    tied = False
    if best is not None and len(ranked) > 1:
        tied = ranked[1].support == best.support
    return ProductionResult(
        best=best, ranked=ranked, n_candidates=len(candidates), tied=tied
    )


def produce(
    intended: np.ndarray,
    what: LinearMapping | FeedforwardNetwork,
    F: LinearMapping,
    inventory: CueInventory,
    threshold: float = DEFAULT_THRESHOLD,
    max_length: int = DEFAULT_MAX_LENGTH,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> ProductionResult:
    """Full pipeline: what-system prediction, weaving, synthesis by analysis."""
    intended = np.asarray(intended, dtype=np.float64).ravel()
    if isinstance(what, FeedforwardNetwork):
        support_vector = network_forward(what, intended)
    else:
        support_vector = apply_mapping(what, intended[None, :]).ravel()
    return produce_from_support(
        support_vector, intended, F, inventory,
        threshold=threshold, max_length=max_length, cap=cap,
    )


@dataclass
class ProductionRecord:
    key: str
    emitted: str
    target: str
    support: float
    n_candidates: int
    correct: bool


def write_production_log(records: list[ProductionRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["word_key", "emitted", "target", "support", "n_candidates", "correct"]
        )
        for r in records:
            writer.writerow(
                [r.key, r.emitted, r.target, repr(r.support), r.n_candidates, int(r.correct)]
            )
