"""Linear and nonlinear mappings between form and semantic spaces.

Comprehension maps form rows to meaning rows, production the reverse.
Linear mappings minimize a (frequency-)weighted least-squares objective
solved through the normal equations; weighting each word type by its
token frequency is exactly equivalent to replicating its row that many
times, so usage-based learning needs no token-level matrices.

The nonlinear what-system is a single-hidden-layer network with
rectified linear hidden units and logistic outputs, trained with the
binary cross-entropy loss by mini-batch gradient descent.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import NumericalError


def _as_array(m):
    """Accept FormMatrix / SemanticMatrix wrappers, sparse, or ndarray."""
    if hasattr(m, "matrix"):
        return m.matrix
    if hasattr(m, "values") and isinstance(getattr(m, "values"), np.ndarray):
        return m.values
    return m


@dataclass
class LinearMapping:
    """Dense linear transform between form and semantic spaces."""

    weights: np.ndarray
    kind: str = "comprehension"
    learning: str = "EOL"
    ridge: float = 0.0

    @property
    def input_dims(self) -> int:
        return self.weights.shape[0]

    @property
    def output_dims(self) -> int:
        return self.weights.shape[1]


def solve_linear(
    X,
    Y,
    weights: np.ndarray | None = None,
    ridge: float = 0.0,
    kind: str = "comprehension",
    learning: str | None = None,
) -> LinearMapping:
    """Minimize sum_i w_i ||x_i B - y_i||^2 + ridge ||B||_F^2.

    Solved via the weighted normal equations
    (X' W X + ridge I) B = X' W Y with a symmetric positive-definite
    factorization.  No weights means W = I (type-based, endstate
    learning); weights equal to token frequencies gives the
    frequency-informed solution.
    """
    X = _as_array(X)
    Y = _as_array(Y)
    if sp.issparse(Y):
        Y = Y.toarray()
    Y = np.asarray(Y, dtype=np.float64)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"row counts differ: X has {X.shape[0]}, Y has {Y.shape[0]}")
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")

    if weights is not None:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (X.shape[0],):
            raise ValueError(
                f"weights shape {w.shape} does not match {X.shape[0]} rows"
            )
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        Xw = X.multiply(w[:, None]).tocsr() if sp.issparse(X) else X * w[:, None]
    else:
        Xw = X

    gram = X.T @ Xw
    if sp.issparse(gram):
        gram = gram.toarray()
    gram = np.asarray(gram, dtype=np.float64)
    if ridge > 0:
        gram = gram + ridge * np.eye(gram.shape[0])
    rhs = Xw.T @ Y
    if sp.issparse(rhs):
        rhs = rhs.toarray()
    rhs = np.asarray(rhs, dtype=np.float64)

    try:
        cho = scipy.linalg.cho_factor(gram, check_finite=False)
        B = scipy.linalg.cho_solve(cho, rhs, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        if ridge == 0.0:
            raise NumericalError(
                "normal equations are singular with ridge = 0; "
                "retry with a small positive ridge (e.g. 1e-6)"
            ) from exc
        raise NumericalError(f"positive-definite solve failed: {exc}") from exc

    if not np.all(np.isfinite(B)):
        raise NumericalError("solved mapping contains non-finite entries")
    if learning is None:
        learning = "FIL" if weights is not None else "EOL"
    return LinearMapping(weights=B, kind=kind, learning=learning, ridge=ridge)


def apply_mapping(mapping: LinearMapping, rows) -> np.ndarray:
    """Predict: rows times the mapping's weight matrix."""
    rows = _as_array(rows)
    if rows.shape[-1] != mapping.input_dims:
        raise ValueError(
            f"input has {rows.shape[-1]} columns, mapping expects {mapping.input_dims}"
        )
    out = rows @ mapping.weights
    if sp.issparse(out):
        out = out.toarray()
    return np.asarray(out)


def inventory_hash(cues: list[str]) -> str:
    return hashlib.sha256("\n".join(cues).encode("utf-8")).hexdigest()


def save_mapping(mapping: LinearMapping, path_prefix: str | Path, **metadata) -> None:
    """Binary weight container plus a JSON metadata sidecar."""
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    np.save(str(prefix) + ".npy", mapping.weights)
    meta = {
        "kind": mapping.kind,
        "learning": mapping.learning,
        "ridge": mapping.ridge,
        "shape": list(mapping.weights.shape),
    }
    meta.update(metadata)
    Path(str(prefix) + ".json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_mapping(path_prefix: str | Path) -> LinearMapping:
    prefix = Path(path_prefix)
    weights = np.load(str(prefix) + ".npy")
    meta = json.loads(Path(str(prefix) + ".json").read_text(encoding="utf-8"))
    return LinearMapping(
        weights=weights,
        kind=meta.get("kind", "comprehension"),
        learning=meta.get("learning", "EOL"),
        ridge=float(meta.get("ridge", 0.0)),
    )


# ---------------------------------------------------------------------------
# Deep what-system
# ---------------------------------------------------------------------------


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_from_logits(z: np.ndarray, t: np.ndarray) -> float:
    # softplus(z) - t*z, computed stably; mean over every output unit.
    return float(np.mean(np.maximum(z, 0.0) - t * z + np.log1p(np.exp(-np.abs(z)))))


@dataclass
class FeedforwardNetwork:
    """Semantic-to-form network: one ReLU hidden layer, logistic outputs."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    trained_epochs: int = 0
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        return (self.w1.shape[0], self.w1.shape[1], self.w2.shape[1])

    @property
    def parameter_count(self) -> int:
        return self.w1.size + self.b1.size + self.w2.size + self.b2.size

    def logits(self, x: np.ndarray) -> np.ndarray:
        h = np.maximum(x @ self.w1 + self.b1, 0.0)
        return h @ self.w2 + self.b2

    def copy_params(self) -> tuple[np.ndarray, ...]:
        return (self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def set_params(self, params: tuple[np.ndarray, ...]) -> None:
        self.w1, self.b1, self.w2, self.b2 = (p.copy() for p in params)


def init_network(n_in: int, hidden: int, n_out: int, seed: int) -> FeedforwardNetwork:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    rng = np.random.default_rng(seed)
    lim1 = np.sqrt(6.0 / (n_in + hidden))
    lim2 = np.sqrt(6.0 / (hidden + n_out))
    return FeedforwardNetwork(
        w1=rng.uniform(-lim1, lim1, size=(n_in, hidden)),
        b1=np.zeros(hidden),
        w2=rng.uniform(-lim2, lim2, size=(hidden, n_out)),
        b2=np.zeros(n_out),
    )


def network_forward(net: FeedforwardNetwork, s: np.ndarray) -> np.ndarray:
    """Per-cue support in [0, 1] for a semantic vector (or a batch of them)."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape[-1] != net.w1.shape[0]:
        raise ValueError(
            f"input has {s.shape[-1]} dims, network expects {net.w1.shape[0]}"
        )
    return _sigmoid(net.logits(s))


def network_loss_and_grads(
    net: FeedforwardNetwork, x: np.ndarray, t: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean binary cross-entropy and its analytic parameter gradients."""
    z1 = x @ net.w1 + net.b1
    h = np.maximum(z1, 0.0)
    z2 = h @ net.w2 + net.b2
    loss = _bce_from_logits(z2, t)

    dz2 = (_sigmoid(z2) - t) / t.size
    dw2 = h.T @ dz2
    db2 = dz2.sum(axis=0)
    dh = dz2 @ net.w2.T
    dz1 = dh * (z1 > 0)
    dw1 = x.T @ dz1
    db1 = dz1.sum(axis=0)
    return loss, {"w1": dw1, "b1": db1, "w2": dw2, "b2": db2}


def train_network(
    S,
    C,
    hidden: int = 1000,
    epochs: int = 100,
    patience: int = 5,
    validation_fraction: float = 0.05,
    seed: int = 0,
    step: float = 1e-3,
    batch: int = 512,
) -> FeedforwardNetwork:
    """Fit the what-system by mini-batch gradient descent with early stopping.

    Stops after `epochs` epochs or once the validation cross-entropy
    fails to improve for `patience` consecutive end-of-epoch
    evaluations, restoring the best-validation parameters.  With
    validation_fraction = 0 early stopping is disabled and the network
    trains for the full epoch budget.  Deterministic given the seed.
    """
    X = _as_array(S)
    T = _as_array(C)
    X = np.asarray(X, dtype=np.float64) if not sp.issparse(X) else X.toarray()
    if X.shape[0] != T.shape[0]:
        raise ValueError(f"row counts differ: S has {X.shape[0]}, C has {T.shape[0]}")
    if hidden < 1:
        raise ValueError(f"hidden must be >= 1, got {hidden}")
    if not 0.0 <= validation_fraction < 1.0:
        raise ValueError(f"validation_fraction must lie in [0, 1), got {validation_fraction}")

    n = X.shape[0]
    rng = np.random.default_rng(seed)
    net = init_network(X.shape[1], hidden, T.shape[1], seed)

    def target_rows(idx: np.ndarray) -> np.ndarray:
        block = T[idx]
        return block.toarray() if sp.issparse(block) else np.asarray(block, dtype=np.float64)

    n_val = int(round(validation_fraction * n))
    order = rng.permutation(n)
    val_idx, train_idx = order[:n_val], order[n_val:]
    if train_idx.size == 0:
        raise ValueError("validation split leaves no training rows")
    X_val = X[val_idx]
    T_val = target_rows(val_idx)

    best_params = net.copy_params()
    best_val = np.inf
    bad_evals = 0

    for epoch in range(1, epochs + 1):
        perm = rng.permutation(train_idx.size)
        for start in range(0, train_idx.size, batch):
            idx = train_idx[perm[start : start + batch]]
            loss, grads = network_loss_and_grads(net, X[idx], target_rows(idx))
            if not np.isfinite(loss):
                raise NumericalError(f"non-finite training loss at epoch {epoch}")
            net.w1 -= step * grads["w1"]
            net.b1 -= step * grads["b1"]
            net.w2 -= step * grads["w2"]
            net.b2 -= step * grads["b2"]

        net.trained_epochs = epoch
        if n_val == 0:
            continue
        val_loss = _bce_from_logits(net.logits(X_val), T_val)
        if not np.isfinite(val_loss):
            raise NumericalError(f"non-finite validation loss at epoch {epoch}")
        net.history.append({"epoch": epoch, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_params = net.copy_params()
            bad_evals = 0
        else:
            bad_evals += 1
            if bad_evals >= patience:
                break

    if n_val > 0:
        epochs_done = net.trained_epochs
        net.set_params(best_params)
        net.trained_epochs = epochs_done
    return net


def save_network(net: FeedforwardNetwork, path_prefix: str | Path, **metadata) -> None:
    prefix = Path(path_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    np.savez(str(prefix) + ".npz", w1=net.w1, b1=net.b1, w2=net.w2, b2=net.b2)
    meta = {
        "layer_sizes": list(net.layer_sizes),
        "trained_epochs": net.trained_epochs,
    }
    meta.update(metadata)
    Path(str(prefix) + ".json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_network(path_prefix: str | Path) -> FeedforwardNetwork:
    prefix = Path(path_prefix)
    arrays = np.load(str(prefix) + ".npz")
    meta = json.loads(Path(str(prefix) + ".json").read_text(encoding="utf-8"))
    net = FeedforwardNetwork(
        w1=arrays["w1"], b1=arrays["b1"], w2=arrays["w2"], b2=arrays["b2"]
    )
    net.trained_epochs = int(meta.get("trained_epochs", 0))
    return net
