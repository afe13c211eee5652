"""Network architectures: MLP, CNN, and the image+landmark fusion model.

Every network is partitioned into a feature extractor M (everything up to
and including the 512-wide hidden layer, or the 1024-wide concatenation for
the fusion model) and a classifier C (one dense layer to K logits). Softmax
is applied by the loss at training time and by predict_proba at eval time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import Tensor, concat, conv2d, dense, dropout, flatten, maxpool2, relu, softmax
from .nn.checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "NetworkSpec",
    "Network",
    "build_mlp",
    "build_cnn",
    "build_fusion",
    "build_network",
    "save_network",
    "load_network",
]

KINDS = ("mlp", "cnn", "fusion")


@dataclass(frozen=True)
class NetworkSpec:
    kind: str
    n_classes: int
    input_feature_dim: int | None = None  # mlp / fusion
    input_image_size: int | None = None  # cnn / fusion
    conv_channels: tuple = (8, 16, 32)
    hidden: int = 512
    dropout_p: float = 0.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if self.kind in ("mlp", "fusion"):
            if not self.input_feature_dim or self.input_feature_dim < 1:
                raise ValueError("input_feature_dim must be >= 1 (empty feature selection?)")
        if self.kind in ("cnn", "fusion"):
            if not self.input_image_size or self.input_image_size % 8 != 0:
                raise ValueError("input_image_size must be a positive multiple of 8")
            if len(self.conv_channels) != 3 or any(c < 1 for c in self.conv_channels):
                raise ValueError("conv_channels must be 3 positive integers")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must be in [0, 1)")

    @property
    def latent_width(self) -> int:
        return 2 * self.hidden if self.kind == "fusion" else self.hidden

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "n_classes": self.n_classes,
            "input_feature_dim": self.input_feature_dim,
            "input_image_size": self.input_image_size,
            "conv_channels": list(self.conv_channels),
            "hidden": self.hidden,
            "dropout_p": self.dropout_p,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NetworkSpec":
        return cls(
            kind=obj["kind"],
            n_classes=int(obj["n_classes"]),
            input_feature_dim=obj.get("input_feature_dim"),
            input_image_size=obj.get("input_image_size"),
            conv_channels=tuple(obj.get("conv_channels", (8, 16, 32))),
            hidden=int(obj.get("hidden", 512)),
            dropout_p=float(obj.get("dropout_p", 0.5)),
        )


def _uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(np.float32)


@dataclass
class Network:
    spec: NetworkSpec
    params: dict = field(default_factory=dict)  # name -> Tensor

    def parameters(self) -> list[Tensor]:
        return [self.params[name] for name in sorted(self.params)]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())

    # forward passes -----------------------------------------------------

    def _as_tensor(self, value) -> Tensor:
        return value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=np.float32))

    def _mlp_latent(self, feats: Tensor, training: bool, rng) -> Tensor:
        h = relu(dense(feats, self.params["mlp.hidden.W"], self.params["mlp.hidden.b"]))
        return dropout(h, self.spec.dropout_p, training, rng)

    def _cnn_latent(self, image: Tensor, training: bool, rng) -> Tensor:
        h = image
        for i in (1, 2, 3):
            h = maxpool2(conv2d(h, self.params[f"cnn.conv{i}.k"]))
        h = relu(dense(flatten(h), self.params["cnn.hidden.W"], self.params["cnn.hidden.b"]))
        return dropout(h, self.spec.dropout_p, training, rng)

    def forward_latent(self, inputs, training: bool = False, rng=None) -> Tensor:
        """Feature extractor M; ``inputs`` maps 'image'/'features' to arrays or Tensors."""
        kind = self.spec.kind
        if kind == "mlp":
            return self._mlp_latent(self._as_tensor(inputs["features"]), training, rng)
        if kind == "cnn":
            return self._cnn_latent(self._as_tensor(inputs["image"]), training, rng)
        zg = self._cnn_latent(self._as_tensor(inputs["image"]), training, rng)
        zh = self._mlp_latent(self._as_tensor(inputs["features"]), training, rng)
        return concat(zg, zh)

    def forward_classifier(self, latent: Tensor) -> Tensor:
        return dense(latent, self.params["clf.W"], self.params["clf.b"])

    def forward_logits(self, inputs, training: bool = False, rng=None) -> Tensor:
        return self.forward_classifier(self.forward_latent(inputs, training, rng))

    def predict_proba(self, inputs) -> np.ndarray:
        return softmax(self.forward_logits(inputs, training=False)).data

    def predict(self, inputs) -> np.ndarray:
        return np.argmax(self.predict_proba(inputs), axis=1)


def _init_mlp_params(spec: NetworkSpec, rng, params: dict) -> None:
    p, h = spec.input_feature_dim, spec.hidden
    params["mlp.hidden.W"] = Tensor(_uniform(rng, (p, h), p, h), requires_grad=True)
    params["mlp.hidden.b"] = Tensor(np.zeros(h, dtype=np.float32), requires_grad=True)


def _init_cnn_params(spec: NetworkSpec, rng, params: dict) -> None:
    channels = (1,) + tuple(spec.conv_channels)
    for i in (1, 2, 3):
        c_in, c_out = channels[i - 1], channels[i]
        params[f"cnn.conv{i}.k"] = Tensor(
            _uniform(rng, (c_out, c_in, 3, 3), c_in * 9, c_out * 9), requires_grad=True
        )
    side = spec.input_image_size // 8
    flat = side * side * spec.conv_channels[2]
    params["cnn.hidden.W"] = Tensor(_uniform(rng, (flat, spec.hidden), flat, spec.hidden), requires_grad=True)
    params["cnn.hidden.b"] = Tensor(np.zeros(spec.hidden, dtype=np.float32), requires_grad=True)


def init_classifier(spec: NetworkSpec, rng, params: dict) -> None:
    width, k = spec.latent_width, spec.n_classes
    params["clf.W"] = Tensor(_uniform(rng, (width, k), width, k), requires_grad=True)
    params["clf.b"] = Tensor(np.zeros(k, dtype=np.float32), requires_grad=True)


def build_network(spec: NetworkSpec, rng: np.random.Generator) -> Network:
    params: dict = {}
    if spec.kind in ("mlp", "fusion"):
        _init_mlp_params(spec, rng, params)
    if spec.kind in ("cnn", "fusion"):
        _init_cnn_params(spec, rng, params)
    init_classifier(spec, rng, params)
    return Network(spec=spec, params=params)


def build_mlp(spec: NetworkSpec, rng: np.random.Generator) -> Network:
    if spec.kind != "mlp":
        raise ValueError("spec.kind must be 'mlp'")
    return build_network(spec, rng)


def build_cnn(spec: NetworkSpec, rng: np.random.Generator) -> Network:
    if spec.kind != "cnn":
        raise ValueError("spec.kind must be 'cnn'")
    return build_network(spec, rng)


def build_fusion(spec: NetworkSpec, rng: np.random.Generator) -> Network:
    if spec.kind != "fusion":
        raise ValueError("spec.kind must be 'fusion'")
    return build_network(spec, rng)


def save_network(directory, net: Network) -> None:
    save_checkpoint(directory, net.spec.to_json(), {k: v.data for k, v in net.params.items()})


def load_network(directory) -> Network:
    arch, tensors = load_checkpoint(directory)
    spec = NetworkSpec.from_json(arch)
    params = {name: Tensor(arr.astype(np.float32), requires_grad=True) for name, arr in tensors.items()}
    return Network(spec=spec, params=params)
