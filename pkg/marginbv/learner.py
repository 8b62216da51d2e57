"""
Datasets and bootstrap-trained linear margin models.

``bootstrap_margins`` turns a labelled dataset into the empirical model
distribution the decompositions consume: M linear models, each trained by
full-batch gradient descent on a bootstrap resample, evaluated on a fixed
evaluation split.
"""

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, Field, ValidationError
from scipy.special import expit

from .decomp import MarginSampleMatrix
from .errors import ConfigError, DivergenceError, ResampleError
from .loss_zoo import LossDescriptor, load_loss
from .utils.logging_config import get_logger

logger = get_logger("learner")

SYNTHETIC_KINDS = ("two_gaussians", "logistic_ground_truth")
MAX_HALVINGS = 30
MAX_REDRAWS = 100
MIN_TRAIN_POINTS = 10


@dataclass(frozen=True)
class LabeledDataset:
    """Features, ±1 labels, optional exact posteriors, and a train/eval split."""

    features: np.ndarray
    labels: np.ndarray
    posterior: Optional[np.ndarray] = None
    split: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.labels, dtype=float)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ConfigError(f"features {x.shape} and labels {y.shape} do not line up")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ConfigError("labels must be -1 or +1")
        if not np.all(np.isfinite(x)):
            raise ConfigError("features must be finite")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

        if self.posterior is not None:
            p = np.asarray(self.posterior, dtype=float)
            if p.shape != y.shape or np.any((p < 0.0) | (p > 1.0)) or not np.all(np.isfinite(p)):
                raise ConfigError("posterior must hold one probability per point")
            object.__setattr__(self, "posterior", p)

        split = np.full(y.shape, "train") if self.split is None else np.asarray(self.split).astype(str)
        if split.shape != y.shape or not np.all(np.isin(split, ("train", "eval"))):
            raise ConfigError("split tags must be 'train' or 'eval'")
        object.__setattr__(self, "split", split)

    @property
    def size(self) -> int:
        return self.labels.shape[0]

    @property
    def dimension(self) -> int:
        return self.features.shape[1]

    @property
    def has_posterior(self) -> bool:
        return self.posterior is not None

    def subset(self, mask: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(
            features=self.features[mask],
            labels=self.labels[mask],
            posterior=None if self.posterior is None else self.posterior[mask],
            split=self.split[mask],
        )

    def train_split(self) -> "LabeledDataset":
        return self.subset(self.split == "train")

    def eval_split(self) -> "LabeledDataset":
        """Evaluation points; the whole dataset when no point is tagged 'eval'."""
        mask = self.split == "eval"
        return self.subset(mask) if np.any(mask) else self


class TrainConfig(BaseModel):
    """Hyperparameters of the bootstrap linear learner."""

    loss: str = "logistic"
    learning_rate: float = Field(0.1, gt=0)
    iterations: int = Field(500, ge=1)
    l2_penalty: float = Field(1e-4, ge=0)
    bootstrap_count: int = Field(50, ge=1)
    seed: int = Field(0, ge=0)
    learner: Literal["linear"] = "linear"
    init_scale: float = Field(0.0, ge=0, description="std of random initial weights; 0 starts at zero")
    resample: bool = Field(True, description="draw bootstrap resamples; off leaves init_scale as the only randomness")
    n_jobs: int = Field(1, ge=1)

    @classmethod
    def create(cls, **values) -> "TrainConfig":
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigError(f"invalid training configuration: {exc}") from exc


@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float
    history: List[float] = field(default_factory=list)

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=float) @ self.weights + self.intercept


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def make_synthetic(
    kind: str,
    n: int,
    d: int = 2,
    separation: float = 2.0,
    seed: int = 0,
    eval_fraction: float = 0.5,
) -> LabeledDataset:
    """
    Seeded synthetic data with exact posteriors.

    two_gaussians: equal priors, unit-covariance classes centred at
    ±separation·e₁, so p(x) = σ(2·separation·x₁).
    logistic_ground_truth: x ~ N(0, I), p(x) = σ(w₀·x) with w₀ a seeded
    direction of length ``separation``; labels are drawn from p.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ConfigError(f"unknown synthetic kind '{kind}'; choose from {', '.join(SYNTHETIC_KINDS)}")
    if n < 2 or d < 1:
        raise ConfigError(f"synthetic data needs n >= 2 and d >= 1, got n={n}, d={d}")
    if not 0.0 <= eval_fraction < 1.0:
        raise ConfigError(f"eval fraction must be in [0, 1), got {eval_fraction}")

    rng = np.random.default_rng(seed)
    if kind == "two_gaussians":
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        x = rng.standard_normal((n, d))
        x[:, 0] += separation * y
        p = expit(2.0 * separation * x[:, 0])
    else:
        direction = rng.standard_normal(d)
        w0 = separation * direction / np.linalg.norm(direction)
        x = rng.standard_normal((n, d))
        p = expit(x @ w0)
        y = np.where(rng.random(n) < p, 1.0, -1.0)

    n_eval = int(round(eval_fraction * n))
    split = np.array(["train"] * (n - n_eval) + ["eval"] * n_eval)
    logger.debug(f"{kind}: n={n}, d={d}, separation={separation}, eval={n_eval}")
    return LabeledDataset(features=x, labels=y, posterior=p, split=split)


def parse_synthetic_spec(spec: str) -> Dict[str, object]:
    """``kind[:n=..,d=..,sep=..,eval=..]`` → keyword arguments for ``make_synthetic``."""
    kind, _, rest = spec.strip().partition(":")
    kwargs: Dict[str, object] = {"kind": kind.strip(), "n": 1000}
    names = {"n": ("n", int), "d": ("d", int), "sep": ("separation", float), "eval": ("eval_fraction", float)}
    if rest:
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            key = key.strip()
            if not sep or key not in names:
                raise ConfigError(f"bad synthetic parameter '{item}'; expected one of {', '.join(names)}")
            target, cast = names[key]
            try:
                kwargs[target] = cast(value.strip())
            except ValueError as exc:
                raise ConfigError(f"non-numeric synthetic parameter '{item}'") from exc
    return kwargs


def load_dataset_csv(path: str | Path, eval_fraction: float = 0.5) -> LabeledDataset:
    """
    Read ``f1..fd,y[,p][,split]`` rows.

    Without a ``split`` column the trailing ``eval_fraction`` of rows is the
    evaluation split.
    """
    path = Path(path)
    try:
        with path.open(newline="") as handle:
            reader = csv.DictReader(handle)
            columns = reader.fieldnames or []
            rows = list(reader)
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from exc

    feature_columns = sorted((c for c in columns if c.startswith("f") and c[1:].isdigit()), key=lambda c: int(c[1:]))
    if not feature_columns or "y" not in columns or not rows:
        raise ConfigError(f"dataset {path} needs feature columns f1..fd, a label column y and at least one row")
    try:
        x = np.array([[float(row[c]) for c in feature_columns] for row in rows])
        y = np.array([float(row["y"]) for row in rows])
        p = np.array([float(row["p"]) for row in rows]) if "p" in columns else None
    except ValueError as exc:
        raise ConfigError(f"non-numeric value in dataset {path}") from exc

    if "split" in columns:
        split = np.array([row["split"].strip() for row in rows])
    else:
        n_eval = int(round(eval_fraction * len(rows)))
        split = np.array(["train"] * (len(rows) - n_eval) + ["eval"] * n_eval)
    return LabeledDataset(features=x, labels=y, posterior=p, split=split)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def _objective(loss: LossDescriptor, x, y, w, b, l2):
    margins = y * (x @ w + b)
    return float(np.mean(loss.eval(margins)) + 0.5 * l2 * float(w @ w)), margins


def train_linear(
    dataset: LabeledDataset,
    config: TrainConfig,
    loss: Optional[LossDescriptor] = None,
    init: Optional[np.ndarray] = None,
) -> LinearModel:
    """
    Minimise mean ℓ(y·(w·x + b)) + ½·λ·‖w‖² by full-batch gradient descent.

    Each step starts at ``learning_rate`` and is halved (up to 30 times)
    while it would increase the objective; a step that cannot decrease it
    is skipped, so the recorded objective never increases.

    Raises:
        DivergenceError: the objective or gradient is not finite
    """
    loss = loss or load_loss(config.loss)
    x, y = dataset.features, dataset.labels
    n, d = x.shape
    w, b = np.zeros(d), 0.0
    if init is not None:
        # d weights followed by the intercept
        w, b = np.asarray(init[:d], dtype=float).copy(), float(init[d])
    l2 = config.l2_penalty

    current, margins = _objective(loss, x, y, w, b, l2)
    if not math.isfinite(current):
        raise DivergenceError(f"initial objective is not finite for {loss.spec}", iteration=0)
    history = [current]

    for iteration in range(1, config.iterations + 1):
        slope = loss.grad(margins) * y
        grad_w = x.T @ slope / n + l2 * w
        grad_b = float(np.mean(slope))
        if not (np.all(np.isfinite(grad_w)) and math.isfinite(grad_b)):
            raise DivergenceError(f"gradient is not finite at iteration {iteration}", iteration=iteration)

        step = config.learning_rate
        for _ in range(MAX_HALVINGS + 1):
            w_new, b_new = w - step * grad_w, b - step * grad_b
            candidate, candidate_margins = _objective(loss, x, y, w_new, b_new, l2)
            if math.isfinite(candidate) and candidate <= current:
                w, b, current, margins = w_new, b_new, candidate, candidate_margins
                break
            step *= 0.5
        history.append(current)

    if not math.isfinite(current):
        raise DivergenceError(f"objective is not finite after {config.iterations} iterations", iteration=config.iterations)
    return LinearModel(weights=w, intercept=b, history=history)


def _bootstrap_job(index: int, train: LabeledDataset, evaluation: LabeledDataset, config: TrainConfig, loss):
    rng = np.random.default_rng([config.seed, index])
    n = train.size
    if config.resample:
        for attempt in range(MAX_REDRAWS):
            rows = np.floor(rng.random(n) * n).astype(int)
            if np.unique(train.labels[rows]).size == 2:
                break
            logger.debug(f"bootstrap {index}: single-class resample, redraw {attempt + 1}")
        else:
            raise ResampleError(f"bootstrap {index}: {MAX_REDRAWS} resamples in a row contained a single class")
        sample = train.subset(rows)
    else:
        sample = train

    init = None
    if config.init_scale > 0.0:
        init = config.init_scale * rng.standard_normal(train.dimension + 1)
    model = train_linear(sample, config, loss=loss, init=init)
    return model.decision_function(evaluation.features)


def bootstrap_margins(
    dataset: LabeledDataset,
    config: TrainConfig,
    loss: Optional[LossDescriptor] = None,
) -> MarginSampleMatrix:
    """
    Train ``bootstrap_count`` models and stack their outputs on the evaluation split.

    Job i draws from ``default_rng([seed, i])`` only, so the matrix does not
    depend on ``n_jobs`` or scheduling.

    Raises:
        ConfigError: fewer than 10 training points
        ResampleError: a job kept drawing single-class resamples
    """
    loss = loss or load_loss(config.loss)
    train = dataset.train_split()
    evaluation = dataset.eval_split()
    if train.size < MIN_TRAIN_POINTS:
        raise ConfigError(f"bootstrap needs at least {MIN_TRAIN_POINTS} training points, got {train.size}")

    m = config.bootstrap_count
    logger.info(f"training {m} linear models on {train.size} points ({config.n_jobs} jobs)")
    if config.n_jobs > 1:
        rows = Parallel(n_jobs=config.n_jobs, prefer="threads", verbose=0)(
            delayed(_bootstrap_job)(i, train, evaluation, config, loss) for i in range(m)
        )
    else:
        rows = [_bootstrap_job(i, train, evaluation, config, loss) for i in range(m)]
    return MarginSampleMatrix(np.vstack(rows))
