"""3-5-3 feedforward network that learns the rule table.

Sigmoid hidden layer, softmax output, cross-entropy loss. Training data is
a labeled grid generated from the rule-base oracle; inference maps a raw
sensor reading to a pump duty. Class order everywhere is (Full, Half, Off)
and argmax ties break toward Off.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rulebase import PumpDuty, SensorReading, classify

N_INPUTS = 3
N_HIDDEN = 5
N_OUTPUTS = 3

DUTY_CLASSES = (PumpDuty.FULL, PumpDuty.HALF, PumpDuty.OFF)
_CLASS_INDEX = {duty: i for i, duty in enumerate(DUTY_CLASSES)}

WEIGHTS_SCHEMA_VERSION = 1


class WeightsError(ValueError):
    """Weight matrices have wrong shape, bad values, or a bad file format."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class NormalizationRanges:
    temperature: tuple[float, float] = (0.0, 50.0)
    humidity: tuple[float, float] = (0.0, 100.0)
    soil_moisture: tuple[float, float] = (0.0, 100.0)

    def __post_init__(self) -> None:
        for name in ("temperature", "humidity", "soil_moisture"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} range must have min < max, got ({lo}, {hi})")

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        lows = np.array([self.temperature[0], self.humidity[0], self.soil_moisture[0]])
        highs = np.array([self.temperature[1], self.humidity[1], self.soil_moisture[1]])
        return lows, highs


DEFAULT_RANGES = NormalizationRanges()


@dataclass
class NetworkWeights:
    w_hidden: np.ndarray  # (5, 3)
    b_hidden: np.ndarray  # (5,)
    w_out: np.ndarray  # (3, 5)
    b_out: np.ndarray  # (3,)

    def __post_init__(self) -> None:
        self.w_hidden = np.asarray(self.w_hidden, dtype=np.float64)
        self.b_hidden = np.asarray(self.b_hidden, dtype=np.float64)
        self.w_out = np.asarray(self.w_out, dtype=np.float64)
        self.b_out = np.asarray(self.b_out, dtype=np.float64)
        expected = {
            "w_hidden": (N_HIDDEN, N_INPUTS),
            "b_hidden": (N_HIDDEN,),
            "w_out": (N_OUTPUTS, N_HIDDEN),
            "b_out": (N_OUTPUTS,),
        }
        for name, shape in expected.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise WeightsError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise WeightsError(f"{name} contains non-finite entries")

    @classmethod
    def zeros(cls) -> "NetworkWeights":
        return cls(
            np.zeros((N_HIDDEN, N_INPUTS)),
            np.zeros(N_HIDDEN),
            np.zeros((N_OUTPUTS, N_HIDDEN)),
            np.zeros(N_OUTPUTS),
        )

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(
            self.w_hidden.copy(),
            self.b_hidden.copy(),
            self.w_out.copy(),
            self.b_out.copy(),
        )


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 0.1
    epochs: int = 2000
    batch_size: int = 32
    seed: int = 0
    target_accuracy: float = 0.99

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if not 0.0 < self.target_accuracy <= 1.0:
            raise ValueError("target_accuracy must be in (0, 1]")


@dataclass
class Dataset:
    inputs: np.ndarray  # (n, 3), normalized to [0, 1]
    labels: np.ndarray  # (n, 3), one-hot, class order (Full, Half, Off)

    def __post_init__(self) -> None:
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.inputs.ndim != 2 or self.inputs.shape[1] != N_INPUTS:
            raise ValueError(f"inputs must be (n, {N_INPUTS})")
        if self.labels.shape != (self.inputs.shape[0], N_OUTPUTS):
            raise ValueError("labels must match inputs row count, one-hot width 3")
        if np.any(self.inputs < 0) or np.any(self.inputs > 1):
            raise ValueError("inputs must lie in [0, 1]")
        ok = np.all(np.isin(self.labels, (0.0, 1.0))) and np.all(
            self.labels.sum(axis=1) == 1.0
        )
        if not ok:
            raise ValueError("labels must be exactly one-hot")

    def __len__(self) -> int:
        return self.inputs.shape[0]


def normalize(
    reading: SensorReading, ranges: NormalizationRanges = DEFAULT_RANGES
) -> np.ndarray:
    """Min-max scale a reading to [0, 1]^3, clamping out-of-range values."""
    lows, highs = ranges.as_arrays()
    raw = np.array(
        [reading.temperature_c, reading.humidity_pct, reading.soil_moisture_pct]
    )
    return np.clip((raw - lows) / (highs - lows), 0.0, 1.0)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def forward(weights: NetworkWeights, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one normalized input 3-vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (N_INPUTS,):
        raise ValueError(f"input must be a {N_INPUTS}-vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input must be finite")
    hidden = _sigmoid(weights.w_hidden @ x + weights.b_hidden)
    return _softmax(weights.w_out @ hidden + weights.b_out)


def loss_and_gradients(
    weights: NetworkWeights, inputs: np.ndarray, labels: np.ndarray
) -> tuple[float, NetworkWeights]:
    """Mean cross-entropy over a batch and its exact gradients.

    Returns the gradients packed in a NetworkWeights-shaped structure.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    labels = np.atleast_2d(np.asarray(labels, dtype=np.float64))
    n = inputs.shape[0]
    if n == 0:
        raise ValueError("batch must be non-empty")

    hidden = _sigmoid(inputs @ weights.w_hidden.T + weights.b_hidden)
    probs = _softmax(hidden @ weights.w_out.T + weights.b_out)
    loss = float(-np.mean(np.sum(labels * np.log(np.clip(probs, 1e-300, None)), axis=1)))

    d_logits = (probs - labels) / n
    g_w_out = d_logits.T @ hidden
    g_b_out = d_logits.sum(axis=0)
    d_hidden = (d_logits @ weights.w_out) * hidden * (1.0 - hidden)
    g_w_hidden = d_hidden.T @ inputs
    g_b_hidden = d_hidden.sum(axis=0)
    return loss, NetworkWeights(g_w_hidden, g_b_hidden, g_w_out, g_b_out)


def generate_dataset(
    grid_points_per_axis: int, ranges: NormalizationRanges = DEFAULT_RANGES
) -> Dataset:
    """Uniform grid over the raw sensor ranges, labeled by the rule base."""
    if grid_points_per_axis < 2:
        raise ValueError("grid must have at least 2 points per axis")
    lows, highs = ranges.as_arrays()
    axes = [np.linspace(lows[i], highs[i], grid_points_per_axis) for i in range(3)]
    rows = []
    labels = []
    for t in axes[0]:
        for h in axes[1]:
            for m in axes[2]:
                reading = SensorReading(float(t), float(h), float(m))
                rows.append(normalize(reading, ranges))
                one_hot = np.zeros(N_OUTPUTS)
                one_hot[_CLASS_INDEX[classify(reading)]] = 1.0
                labels.append(one_hot)
    return Dataset(np.array(rows), np.array(labels))


def _accuracy(weights: NetworkWeights, dataset: Dataset) -> float:
    hidden = _sigmoid(dataset.inputs @ weights.w_hidden.T + weights.b_hidden)
    probs = _softmax(hidden @ weights.w_out.T + weights.b_out)
    return float(np.mean(probs.argmax(axis=1) == dataset.labels.argmax(axis=1)))


def train(
    dataset: Dataset, config: TrainingConfig
) -> tuple[NetworkWeights, list[float]]:
    """Minibatch SGD, deterministic under the config seed.

    Stops early once training-set argmax accuracy reaches the target.
    Returns the trained weights and the per-epoch loss history.
    """
    if len(dataset) == 0:
        raise ValueError("dataset must be non-empty")
    rng = np.random.default_rng(config.seed)
    weights = NetworkWeights(
        rng.uniform(-0.5, 0.5, (N_HIDDEN, N_INPUTS)),
        rng.uniform(-0.5, 0.5, N_HIDDEN),
        rng.uniform(-0.5, 0.5, (N_OUTPUTS, N_HIDDEN)),
        rng.uniform(-0.5, 0.5, N_OUTPUTS),
    )
    n = len(dataset)
    lr = config.learning_rate
    history: list[float] = []
    for _ in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            _, grads = loss_and_gradients(
                weights, dataset.inputs[idx], dataset.labels[idx]
            )
            weights.w_hidden -= lr * grads.w_hidden
            weights.b_hidden -= lr * grads.b_hidden
            weights.w_out -= lr * grads.w_out
            weights.b_out -= lr * grads.b_out
        epoch_loss, _ = loss_and_gradients(weights, dataset.inputs, dataset.labels)
        if not math.isfinite(epoch_loss):
            raise TrainingDiverged(f"loss became {epoch_loss} after epoch {len(history) + 1}")
        history.append(epoch_loss)
        if _accuracy(weights, dataset) >= config.target_accuracy:
            break
    return weights, history


def predict_duty(
    weights: NetworkWeights,
    reading: SensorReading,
    ranges: NormalizationRanges = DEFAULT_RANGES,
) -> PumpDuty:
    """Argmax duty for a raw reading; exact ties break toward Off."""
    probs = forward(weights, normalize(reading, ranges))
    best = int(np.flatnonzero(probs == probs.max())[-1])
    return DUTY_CLASSES[best]


def oracle_agreement(
    weights: NetworkWeights,
    grid_points_per_axis: int,
    ranges: NormalizationRanges = DEFAULT_RANGES,
) -> float:
    """Fraction of a uniform evaluation grid where the network matches the rule base."""
    lows, highs = ranges.as_arrays()
    axes = [np.linspace(lows[i], highs[i], grid_points_per_axis) for i in range(3)]
    agree = 0
    total = 0
    for t in axes[0]:
        for h in axes[1]:
            for m in axes[2]:
                reading = SensorReading(float(t), float(h), float(m))
                agree += predict_duty(weights, reading, ranges) == classify(reading)
                total += 1
    return agree / total


@dataclass
class TrainedModel:
    """Weights plus everything needed to reproduce and apply them."""

    weights: NetworkWeights
    ranges: NormalizationRanges = field(default_factory=NormalizationRanges)
    seed: int = 0

    def to_json_dict(self) -> dict:
        w = self.weights
        return {
            "v": WEIGHTS_SCHEMA_VERSION,
            "n_inputs": N_INPUTS,
            "n_hidden": N_HIDDEN,
            "n_outputs": N_OUTPUTS,
            "w_hidden": w.w_hidden.ravel().tolist(),
            "b_hidden": w.b_hidden.tolist(),
            "w_out": w.w_out.ravel().tolist(),
            "b_out": w.b_out.tolist(),
            "ranges": {
                "temperature": list(self.ranges.temperature),
                "humidity": list(self.ranges.humidity),
                "soil_moisture": list(self.ranges.soil_moisture),
            },
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrainedModel":
        if not isinstance(doc, dict):
            raise WeightsError("weights document must be a JSON object")
        if doc.get("v") != WEIGHTS_SCHEMA_VERSION:
            raise WeightsError(f"unsupported weights schema version {doc.get('v')!r}")
        dims = (doc.get("n_inputs"), doc.get("n_hidden"), doc.get("n_outputs"))
        if dims != (N_INPUTS, N_HIDDEN, N_OUTPUTS):
            raise WeightsError(
                f"dimension mismatch: expected {(N_INPUTS, N_HIDDEN, N_OUTPUTS)}, got {dims}"
            )
        try:
            weights = NetworkWeights(
                np.array(doc["w_hidden"]).reshape(N_HIDDEN, N_INPUTS),
                np.array(doc["b_hidden"]),
                np.array(doc["w_out"]).reshape(N_OUTPUTS, N_HIDDEN),
                np.array(doc["b_out"]),
            )
            r = doc["ranges"]
            ranges = NormalizationRanges(
                tuple(r["temperature"]), tuple(r["humidity"]), tuple(r["soil_moisture"])
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise WeightsError(f"malformed weights document: {exc}") from exc
        return cls(weights=weights, ranges=ranges, seed=int(doc.get("seed", 0)))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise WeightsError(f"weights file is not valid JSON: {exc}") from exc
        return cls.from_json_dict(doc)
