"""Model specifications, network assembly, and two-stage cascade prediction.

A ModelSpec is a declarative layer list; build_model materializes it into an
ordered stack of layers with seeded initialization, validating that adjacent
shapes are compatible.  The two shipped architectures:

Stage 1 (binary detector): 13-d embedding over 500 ids, two convolution
blocks (256 then 128 filters, kernel 7, ReLU, 2x2 max pooling), then dense
64 -> 16 -> 1 with a sigmoid output.

Stage 2 (class classifier): 300-d embedding over 400 ids, two convolution
blocks (64 then 128 filters, kernel 3, ReLU, batch normalization, 2x2 max
pooling), an LSTM returning its full sequence (100 cells) feeding a second
LSTM reduced to its last step (10 cells), then dense 100 -> C with softmax.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .dataset import LabelMap
from .errors import IncompatibleSpecError, ShapeMismatchError
from .layers import (
    Activation,
    BatchNorm1D,
    Conv1D,
    Dense,
    Embedding,
    Flatten,
    Layer,
    LSTM,
    MaxPool1D,
)
from .normalizer import normalize_source
from .vocab import Vocabulary, encode

STAGE1_INPUT_LENGTH = 500
STAGE1_EMBEDDING_DIM = 13
STAGE2_INPUT_LENGTH = 400
STAGE2_EMBEDDING_DIM = 300


@dataclass(frozen=True)
class ConvSpec:
    filters: int
    kernel_size: int


@dataclass(frozen=True)
class PoolSpec:
    window: int = 2
    stride: int = 2


@dataclass(frozen=True)
class BatchNormSpec:
    momentum: float = 0.9
    eps: float = 1e-5


@dataclass(frozen=True)
class LSTMSpec:
    units: int
    return_sequences: bool


@dataclass(frozen=True)
class DenseSpec:
    units: int


@dataclass(frozen=True)
class ActivationSpec:
    kind: str


@dataclass(frozen=True)
class FlattenSpec:
    pass


_SPEC_TYPES = {
    "conv": ConvSpec,
    "pool": PoolSpec,
    "batchnorm": BatchNormSpec,
    "lstm": LSTMSpec,
    "dense": DenseSpec,
    "activation": ActivationSpec,
    "flatten": FlattenSpec,
}
_TYPE_NAMES = {cls: name for name, cls in _SPEC_TYPES.items()}


@dataclass
class ModelSpec:
    stage: int
    vocab_size: int
    embedding_dim: int
    input_length: int
    layers: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        out = {
            "stage": self.stage,
            "vocab_size": self.vocab_size,
            "embedding_dim": self.embedding_dim,
            "input_length": self.input_length,
            "layers": [],
        }
        for spec in self.layers:
            entry = {"type": _TYPE_NAMES[type(spec)]}
            entry.update(vars(spec))
            out["layers"].append(entry)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        layers = []
        for entry in data["layers"]:
            kwargs = dict(entry)
            kind = kwargs.pop("type")
            layers.append(_SPEC_TYPES[kind](**kwargs))
        return cls(
            stage=data["stage"],
            vocab_size=data["vocab_size"],
            embedding_dim=data["embedding_dim"],
            input_length=data["input_length"],
            layers=tuple(layers),
        )


def stage1_spec(
    vocab_size: int,
    input_length: int = STAGE1_INPUT_LENGTH,
    embedding_dim: int = STAGE1_EMBEDDING_DIM,
    final_activation: str = "sigmoid",
) -> ModelSpec:
    """Binary detector; final_activation may be 'scaled_tanh' for a tanh
    output unit remapped onto (0, 1)."""
    if final_activation not in ("sigmoid", "scaled_tanh"):
        raise ValueError("stage-1 head must be 'sigmoid' or 'scaled_tanh'")
    return ModelSpec(
        stage=1,
        vocab_size=vocab_size,
        embedding_dim=embedding_dim,
        input_length=input_length,
        layers=(
            ConvSpec(256, 7), ActivationSpec("relu"), PoolSpec(2, 2),
            ConvSpec(128, 7), ActivationSpec("relu"), PoolSpec(2, 2),
            FlattenSpec(),
            DenseSpec(64), ActivationSpec("relu"),
            DenseSpec(16), ActivationSpec("relu"),
            DenseSpec(1), ActivationSpec(final_activation),
        ),
    )


def stage2_spec(
    vocab_size: int,
    num_classes: int,
    input_length: int = STAGE2_INPUT_LENGTH,
    embedding_dim: int = STAGE2_EMBEDDING_DIM,
    head: str = "softmax",
) -> ModelSpec:
    """Multiclass classifier; head may be 'sigmoid' for independent per-class
    probabilities instead of a softmax distribution."""
    if head not in ("softmax", "sigmoid"):
        raise ValueError("stage-2 head must be 'softmax' or 'sigmoid'")
    return ModelSpec(
        stage=2,
        vocab_size=vocab_size,
        embedding_dim=embedding_dim,
        input_length=input_length,
        layers=(
            ConvSpec(64, 3), ActivationSpec("relu"), BatchNormSpec(), PoolSpec(2, 2),
            ConvSpec(128, 3), ActivationSpec("relu"), BatchNormSpec(), PoolSpec(2, 2),
            LSTMSpec(100, return_sequences=True),
            LSTMSpec(10, return_sequences=False),
            DenseSpec(100), ActivationSpec("relu"),
            DenseSpec(num_classes), ActivationSpec(head),
        ),
    )


class Model:
    """An ordered layer stack materialized from a ModelSpec."""

    def __init__(self, spec: ModelSpec, layers: list[Layer], output_width: int):
        self.spec = spec
        self.layers = layers
        self.output_width = output_width
        self.forward_calls = 0
        self.eval_samples = 0

    def forward(self, ids: np.ndarray, training: bool = False) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.ndim != 2 or ids.shape[1] != self.spec.input_length:
            raise ShapeMismatchError(
                f"expected a (B, {self.spec.input_length}) id batch, got {ids.shape}"
            )
        self.forward_calls += 1
        self.eval_samples += ids.shape[0]
        h = ids
        for layer in self.layers:
            h = layer.forward(h, training=training)
        return h

    def backward(self, upstream: np.ndarray) -> None:
        grad = upstream
        for layer in reversed(self.layers):
            grad = layer.backward(grad)

    def params(self) -> list[np.ndarray]:
        return [arr for layer in self.layers for _, arr in layer.params()]

    def grads(self) -> list[np.ndarray]:
        return [arr for layer in self.layers for _, arr in layer.grads()]

    def named_tensors(self) -> list[tuple[str, np.ndarray]]:
        """All persistent arrays (trainable plus running statistics) in
        declared layer order, with layer-indexed names."""
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.tensors():
                out.append((f"layer{i}.{name}", arr))
        return out

    def zero_grad(self) -> None:
        for layer in self.layers:
            layer.zero_grad()

    def param_count(self) -> int:
        return sum(arr.size for arr in self.params())

    @property
    def head_kind(self) -> str:
        last = self.spec.layers[-1]
        return last.kind if isinstance(last, ActivationSpec) else "linear"


def build_model(spec: ModelSpec, seed: int = 0) -> Model:
    """Allocate and initialize every layer, checking shape compatibility.

    The same seed always produces bitwise-identical initial parameters.
    """
    rng = np.random.default_rng(seed)
    layers: list[Layer] = [Embedding(spec.vocab_size, spec.embedding_dim, rng)]
    # shape state after the embedding: a (length, channels) sequence
    seq: tuple[int, int] | None = (spec.input_length, spec.embedding_dim)
    flat: int | None = None
    prev_name = "embedding"

    def fail(i, layer_spec, why):
        raise IncompatibleSpecError(
            f"layer {i} ({_TYPE_NAMES[type(layer_spec)]}) after {prev_name}: {why}"
        )

    for i, ls in enumerate(spec.layers):
        if isinstance(ls, ConvSpec):
            if seq is None:
                fail(i, ls, "convolution needs sequence input, got flat features")
            length, channels = seq
            if length < ls.kernel_size:
                fail(i, ls, f"sequence length {length} < kernel size {ls.kernel_size}")
            layers.append(Conv1D(channels, ls.filters, ls.kernel_size, rng))
            seq = (length - ls.kernel_size + 1, ls.filters)
        elif isinstance(ls, PoolSpec):
            if seq is None:
                fail(i, ls, "pooling needs sequence input, got flat features")
            length, channels = seq
            if length < ls.window:
                fail(i, ls, f"sequence length {length} < pool window {ls.window}")
            layers.append(MaxPool1D(ls.window, ls.stride))
            seq = ((length - ls.window) // ls.stride + 1, channels)
        elif isinstance(ls, BatchNormSpec):
            features = seq[1] if seq is not None else flat
            layers.append(BatchNorm1D(features, momentum=ls.momentum, eps=ls.eps))
        elif isinstance(ls, LSTMSpec):
            if seq is None:
                fail(i, ls, "lstm needs sequence input, got flat features")
            length, channels = seq
            layers.append(LSTM(channels, ls.units, rng,
                               return_sequences=ls.return_sequences))
            if ls.return_sequences:
                seq = (length, ls.units)
            else:
                seq, flat = None, ls.units
        elif isinstance(ls, FlattenSpec):
            if seq is None:
                fail(i, ls, "flatten needs sequence input, got flat features")
            length, channels = seq
            layers.append(Flatten())
            seq, flat = None, length * channels
        elif isinstance(ls, DenseSpec):
            if flat is None:
                fail(i, ls, "dense needs flat input; flatten or reduce the sequence first")
            layers.append(Dense(flat, ls.units, rng))
            flat = ls.units
        elif isinstance(ls, ActivationSpec):
            layers.append(Activation(ls.kind))
        else:
            fail(i, ls, "unknown layer descriptor")
        prev_name = _TYPE_NAMES[type(ls)]

    if flat is None:
        raise IncompatibleSpecError(
            "network never reduces to flat features; it cannot feed a classifier head"
        )
    return Model(spec, layers, output_width=flat)


class Verdict(Enum):
    NON_VULNERABLE = "non_vulnerable"
    VULNERABLE = "vulnerable"


@dataclass
class Prediction:
    stage1_probability: float
    verdict: Verdict
    class_distribution: np.ndarray | None = None
    predicted_cwe: str | None = None


def _distribution(stage2: Model, ids: np.ndarray) -> np.ndarray:
    dist = stage2.forward(ids)[0]
    if stage2.head_kind != "softmax":
        # independent per-class head: renormalize so the report is a distribution
        dist = dist / dist.sum()
    return dist


def predict_two_stage_encoded(
    stage1: Model,
    stage2: Model,
    label_map: LabelMap,
    ids_stage1: np.ndarray,
    ids_stage2: np.ndarray,
    threshold: float = 0.5,
) -> Prediction:
    """Cascade decision for one pre-encoded sample.

    The second model runs only when the detector probability reaches the
    threshold; a probability exactly at the threshold counts as vulnerable.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie strictly between 0 and 1")
    p = float(stage1.forward(np.asarray(ids_stage1).reshape(1, -1))[0, 0])
    if p < threshold:
        return Prediction(p, Verdict.NON_VULNERABLE)
    dist = _distribution(stage2, np.asarray(ids_stage2).reshape(1, -1))
    cwe = label_map.cwe_of(int(np.argmax(dist)))
    return Prediction(p, Verdict.VULNERABLE, class_distribution=dist, predicted_cwe=cwe)


def predict_two_stage(
    stage1: Model,
    stage2: Model,
    vocab: Vocabulary,
    label_map: LabelMap,
    source: str,
    threshold: float = 0.5,
    preserve: frozenset[str] = frozenset(),
) -> Prediction:
    """Normalize raw source, encode it at both input lengths, and cascade."""
    sample = normalize_source(source, preserve=preserve)
    ids1 = encode(sample, vocab, stage1.spec.input_length).ids
    ids2 = encode(sample, vocab, stage2.spec.input_length).ids
    return predict_two_stage_encoded(stage1, stage2, label_map, ids1, ids2, threshold)
