"""Monte-Carlo deck search over a learned win-rate predictor f_hat."""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from deckrec import config as cfgmod
from deckrec.decks import DECK_DTYPE, deck_from_indices, deck_indices, random_deck
from deckrec.engine.match import EVALUATIONS, derive_seed
from deckrec.errors import InvalidArgument, TrainingDiverged
from deckrec.qlearn.agent import CHECKPOINT_VERSION
from deckrec.qlearn.mlp import MlpParams, init_mlp, q_forward_batch, weighted_gradient

SAMPLE_CHUNK = 4096
# matches behind each predictor training label
LABEL_MATCHES = 100


# ---------------------------------------------------------------- dataset

@dataclass
class Dataset:
    n: int
    d: int
    x_p: np.ndarray  # (size, n) int8
    x_o: np.ndarray  # (size, n) int8
    labels: np.ndarray  # (size,)
    matches_per_label: int = 0
    seed: int = 0

    def __len__(self):
        return len(self.labels)

    def features(self) -> np.ndarray:
        return np.hstack([self.x_p, self.x_o]).astype(float)

    def save_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for p, o, y in zip(self.x_p, self.x_o, self.labels):
                fh.write(json.dumps({"x_p": deck_indices(p), "x_o": deck_indices(o), "label": float(y)}) + "\n")

    @classmethod
    def load_jsonl(cls, path, n: int) -> "Dataset":
        rows = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
        x_p = np.array([deck_from_indices(r["x_p"], n) for r in rows])
        x_o = np.array([deck_from_indices(r["x_o"], n) for r in rows])
        d = int(x_p[0].sum()) if rows else 0
        return cls(n, d, x_p, x_o, np.array([r["label"] for r in rows], dtype=float))


def build_predictor_dataset(evaluator, d: int, size: int, seed: int = 0,
                            mirror_fraction: float = 0.05) -> Dataset:
    """Random deck pairs labelled by ``evaluator``.

    ``evaluator.many`` gives the labels; its ``num_matches`` is the match
    count per label. A ``mirror_fraction`` of the pairs are (x, x) mirrors.
    """
    if size < 1:
        raise InvalidArgument("dataset size must be >= 1")
    n = evaluator.pool.n_cards
    rng = np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, n, d, size]))
    n_mirror = int(round(mirror_fraction * size))
    x_p = np.array([random_deck(n, d, rng) for _ in range(size)])
    x_o = np.array([random_deck(n, d, rng) for _ in range(size)])
    if n_mirror:
        x_o[:n_mirror] = x_p[:n_mirror]
    seeds = [derive_seed(seed, 7, i) for i in range(size)]
    labels = np.array(evaluator.many(list(zip(x_p, x_o)), seeds), dtype=float)
    return Dataset(n, d, x_p.astype(DECK_DTYPE), x_o.astype(DECK_DTYPE), labels,
                   matches_per_label=evaluator.num_matches, seed=seed)


# ---------------------------------------------------------------- predictor

@dataclass
class PredictorHyperparams:
    hidden: int = 128
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 60
    folds: int = 10
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "PredictorHyperparams":
        return cfgmod.from_dict(cls, d)


@dataclass
class WinRatePredictor:
    theta: MlpParams
    n: int
    d: int
    meta: dict = field(default_factory=dict)

    def predict(self, x_p, x_o) -> np.ndarray:
        """f_hat for row-aligned batches (or single decks); clamped to [0, 1]."""
        x_p = np.atleast_2d(x_p)
        x_o = np.atleast_2d(x_o)
        if x_o.shape[0] == 1 and x_p.shape[0] > 1:
            x_o = np.broadcast_to(x_o, x_p.shape)
        feats = np.hstack([x_p, x_o]).astype(float)
        return np.clip(q_forward_batch(self.theta, feats), 0.0, 1.0)

    def save(self, path) -> None:
        doc = {"format_version": CHECKPOINT_VERSION, "kind": "win_rate_predictor",
               "n": self.n, "d": self.d, "hidden": self.theta.hidden,
               **self.theta.to_dict(), "meta": self.meta}
        Path(path).write_text(json.dumps(doc))

    @classmethod
    def load(cls, path) -> "WinRatePredictor":
        doc = json.loads(Path(path).read_text())
        if doc.get("kind") != "win_rate_predictor":
            raise InvalidArgument(f"{path} is not a win-rate predictor checkpoint")
        return cls(MlpParams.from_dict(doc), int(doc["n"]), int(doc["d"]), doc.get("meta", {}))


def _mse_r2(y, pred) -> tuple:
    err = float(np.mean((y - pred) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = float("nan") if sst == 0 else 1.0 - float(np.sum((y - pred) ** 2)) / sst
    return err, r2


def _fit(X, y, hp: PredictorHyperparams, rng: np.random.Generator) -> MlpParams:
    """Mini-batch Adam on squared error."""
    theta = init_mlp(X.shape[1], hp.hidden, rng)
    theta.b2 = float(y.mean())
    flat = theta.flat()
    m = np.zeros_like(flat)
    v = np.zeros_like(flat)
    b1, b2, eps = 0.9, 0.999, 1e-8
    step = 0
    for _ in range(hp.epochs):
        order = rng.permutation(len(y))
        for start in range(0, len(y), hp.batch_size):
            idx = order[start:start + hp.batch_size]
            resid = q_forward_batch(theta, X[idx]) - y[idx]
            # gradient of the mean squared error
            g = weighted_gradient(theta, X[idx], 2.0 * resid / len(idx)).flat()
            step += 1
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            mhat = m / (1 - b1 ** step)
            vhat = v / (1 - b2 ** step)
            flat = flat - hp.learning_rate * mhat / (np.sqrt(vhat) + eps)
            theta = MlpParams.from_flat(flat, X.shape[1], hp.hidden)
        if not np.isfinite(flat).all():
            raise TrainingDiverged("predictor weights became non-finite")
    return theta


def train_predictor(data: Dataset, hp: Optional[PredictorHyperparams] = None) -> tuple:
    """Fit f_hat on ``data``; report k-fold cross-validated MSE and R^2.

    The returned predictor is refit on the whole dataset after the folds.
    """
    hp = hp or PredictorHyperparams()
    if len(data) < 10 * hp.batch_size:
        raise InvalidArgument(f"need at least {10 * hp.batch_size} samples, got {len(data)}")
    X, y = data.features(), np.asarray(data.labels, dtype=float)
    rng = np.random.default_rng(hp.seed)
    folds = np.array_split(rng.permutation(len(y)), hp.folds)
    per_fold = []
    for k, test_idx in enumerate(folds):
        train_idx = np.concatenate([f for j, f in enumerate(folds) if j != k])
        theta = _fit(X[train_idx], y[train_idx], hp, np.random.default_rng([hp.seed, k]))
        tr = _mse_r2(y[train_idx], np.clip(q_forward_batch(theta, X[train_idx]), 0, 1))
        te = _mse_r2(y[test_idx], np.clip(q_forward_batch(theta, X[test_idx]), 0, 1))
        per_fold.append((*tr, *te))
    arr = np.array(per_fold)
    metrics = {
        "train_mse": float(np.mean(arr[:, 0])),
        "train_r2": float(np.nanmean(arr[:, 1])) if np.isfinite(arr[:, 1]).any() else float("nan"),
        "test_mse": float(np.mean(arr[:, 2])),
        "test_r2": float(np.nanmean(arr[:, 3])) if np.isfinite(arr[:, 3]).any() else float("nan"),
        "folds": hp.folds,
    }
    theta = _fit(X, y, hp, np.random.default_rng([hp.seed, hp.folds]))
    meta = {"dataset_size": len(y), "matches_per_label": data.matches_per_label,
            "hyperparams": asdict(hp), "metrics": metrics}
    return WinRatePredictor(theta, data.n, data.d, meta), metrics


# ---------------------------------------------------------------- search

@dataclass
class McConfig:
    x: int = 670
    seed: int = 0

    def __post_init__(self):
        if self.x < 1:
            raise InvalidArgument("X must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "McConfig":
        return cfgmod.from_dict(cls, d)


@dataclass
class McLog:
    x: int = 0
    predicted_win_rate: float = 0.0
    f_calls: int = 0
    wall_s: float = 0.0
    cpu_s: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def sample_decks(rng: np.random.Generator, count: int, n: int, d: int) -> np.ndarray:
    """``count`` uniform random decks; consecutive calls continue one stream,
    so a larger sample from the same seed extends a smaller one."""
    keys = rng.random((count, n))
    top = np.argpartition(keys, n - d, axis=1)[:, n - d:]
    out = np.zeros((count, n), dtype=DECK_DTYPE)
    np.put_along_axis(out, top, 1, axis=1)
    return out


def mc_solve(predictor: WinRatePredictor, x_o, cfg: McConfig) -> tuple:
    """argmax of f_hat(x, x_o) over X random decks; no f evaluations."""
    x_o = np.asarray(x_o, dtype=DECK_DTYPE)
    n, d = predictor.n, predictor.d
    if x_o.shape[0] != n:
        raise InvalidArgument(f"predictor expects N={n}, opponent deck has N={x_o.shape[0]}")
    f_before = EVALUATIONS.value
    t0, c0 = time.monotonic(), time.process_time()
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed & 0xFFFFFFFFFFFFFFFF, n, d]))
    best_x, best_v = None, -np.inf
    done = 0
    while done < cfg.x:
        chunk = sample_decks(rng, min(SAMPLE_CHUNK, cfg.x - done), n, d)
        preds = predictor.predict(chunk, x_o)
        i = int(np.argmax(preds))
        if preds[i] > best_v:
            best_x, best_v = chunk[i].copy(), float(preds[i])
        done += len(chunk)
    mlog = McLog(x=cfg.x, predicted_win_rate=best_v, f_calls=EVALUATIONS.value - f_before,
                 wall_s=time.monotonic() - t0, cpu_s=time.process_time() - c0)
    return best_x, mlog
