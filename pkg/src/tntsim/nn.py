"""From-scratch perceiver network: forward, backprop, SGD, snapshots.

Everything is float64 numpy.  Convolutions are valid-padding stride-1 via
im2col matmuls; pooling is 2x2 max.  Gradients are exact (checked against
central finite differences in the test suite).  ParameterSet is an immutable
value with a content hash over the tensor bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .seeds import generator


class NumericalOverflowError(ArithmeticError):
    pass


class SnapshotIntegrityError(ValueError):
    pass


@dataclass(frozen=True)
class NetSpec:
    """Ordered layer descriptors.  The stock net has four conv and two dense
    layers: conv8-conv8-pool-conv16-conv16-pool-dense64-denseK."""

    input_hw: tuple[int, int] = (64, 64)
    layers: tuple[tuple, ...] = ()

    def conv_count(self) -> int:
        return sum(1 for l in self.layers if l[0] == "conv")

    def dense_count(self) -> int:
        return sum(1 for l in self.layers if l[0] == "dense")


def default_netspec(num_classes: int = 16, hidden: int = 64,
                    input_hw: tuple[int, int] = (64, 64),
                    conv_widths: tuple[int, int, int, int] = (8, 8, 16, 16)) -> NetSpec:
    w1, w2, w3, w4 = conv_widths
    return NetSpec(input_hw=input_hw, layers=(
        ("conv", w1, 3), ("relu",),
        ("conv", w2, 3), ("relu",),
        ("maxpool", 2),
        ("conv", w3, 3), ("relu",),
        ("conv", w4, 3), ("relu",),
        ("maxpool", 2),
        ("flatten",),
        ("dense", hidden), ("relu",),
        ("dense", num_classes),
        ("softmax",),
    ))


def parameter_shapes(spec: NetSpec) -> dict[str, tuple[int, ...]]:
    """Layer-name -> tensor shape, walking the spec with shape inference."""
    shapes: dict[str, tuple[int, ...]] = {}
    c, h, w = 1, spec.input_hw[0], spec.input_hw[1]
    flat = None
    conv_i = dense_i = 0
    for layer in spec.layers:
        kind = layer[0]
        if kind == "conv":
            conv_i += 1
            out_ch, k = layer[1], layer[2]
            if flat is not None:
                raise ValueError("conv after flatten")
            if h < k or w < k:
                raise ValueError(f"conv{conv_i}: input {h}x{w} smaller than kernel {k}")
            shapes[f"conv{conv_i}.w"] = (out_ch, c, k, k)
            shapes[f"conv{conv_i}.b"] = (out_ch,)
            c, h, w = out_ch, h - k + 1, w - k + 1
        elif kind == "maxpool":
            p = layer[1]
            if h % p or w % p:
                raise ValueError(f"maxpool on odd size {h}x{w}")
            h, w = h // p, w // p
        elif kind == "flatten":
            flat = c * h * w
        elif kind == "dense":
            dense_i += 1
            if flat is None:
                raise ValueError("dense before flatten")
            out = layer[1]
            shapes[f"dense{dense_i}.w"] = (out, flat)
            shapes[f"dense{dense_i}.b"] = (out,)
            flat = out
        elif kind in ("relu", "softmax"):
            pass
        else:
            raise ValueError(f"unknown layer kind {kind!r}")
    return shapes


def output_dim(spec: NetSpec) -> int:
    dense_layers = [l for l in spec.layers if l[0] == "dense"]
    if not dense_layers:
        raise ValueError("net has no dense layers")
    return dense_layers[-1][1]


def feature_dim(spec: NetSpec) -> int:
    """Width of the penultimate dense layer (the feature vector)."""
    dense_layers = [l for l in spec.layers if l[0] == "dense"]
    if len(dense_layers) < 2:
        raise ValueError("net has no penultimate dense layer")
    return dense_layers[-2][1]


@dataclass(frozen=True)
class ParameterSet:
    tensors: dict[str, np.ndarray]
    version: str = "v0001"

    def __post_init__(self):
        frozen = {}
        for name, t in self.tensors.items():
            arr = np.ascontiguousarray(t, dtype=np.float64)
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "tensors", frozen)

    def content_hash(self) -> str:
        h = hashlib.sha256(b"params:")
        for name, t in self.tensors.items():
            h.update(name.encode("utf-8"))
            h.update(repr(t.shape).encode("ascii"))
            h.update(t.tobytes())
        return h.hexdigest()

    def copy_with(self, tensors: dict[str, np.ndarray], version: str | None = None) -> "ParameterSet":
        return ParameterSet(tensors=tensors, version=version or self.version)


@dataclass(frozen=True)
class LabelDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.ascontiguousarray(self.probs, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        if p.ndim != 1:
            raise ValueError("probs must be a vector")
        if (p < -1e-12).any():
            raise ValueError("negative probability")
        if abs(float(p.sum()) - 1.0) > 1e-6:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")

    @property
    def top_index(self) -> int:
        # np.argmax returns the lowest index on ties
        return int(np.argmax(self.probs))

    @property
    def k(self) -> int:
        return int(self.probs.shape[0])


def init_params(spec: NetSpec, seed: int) -> ParameterSet:
    """He-style fan-in uniform init for weights, zeros for biases."""
    rng = generator(seed)
    tensors = {}
    for name, shape in parameter_shapes(spec).items():
        if name.endswith(".b"):
            tensors[name] = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            tensors[name] = rng.uniform(-bound, bound, size=shape)
    return ParameterSet(tensors=tensors)


def zero_params(spec: NetSpec) -> ParameterSet:
    return ParameterSet(tensors={n: np.zeros(s) for n, s in parameter_shapes(spec).items()})


def _im2col(x: np.ndarray, k: int) -> np.ndarray:
    """(N,C,H,W) -> (N, C*k*k, OH*OW) patch matrix."""
    n, c, h, w = x.shape
    oh, ow = h - k + 1, w - k + 1
    windows = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    cols = windows.transpose(0, 1, 4, 5, 2, 3).reshape(n, c * k * k, oh * ow)
    return np.ascontiguousarray(cols)


def _col2im(dcols: np.ndarray, x_shape, k: int) -> np.ndarray:
    """Fold patch-matrix gradients back onto the input, summing overlaps."""
    n, c, h, w = x_shape
    oh, ow = h - k + 1, w - k + 1
    dcols = dcols.reshape(n, c, k, k, oh, ow)
    dx = np.zeros(x_shape)
    for i in range(k):
        for j in range(k):
            dx[:, :, i:i + oh, j:j + ow] += dcols[:, :, i, j]
    return dx


def _check_finite(name: str, arr: np.ndarray, check: bool):
    if check and not np.isfinite(arr).all():
        raise NumericalOverflowError(f"numerical overflow in {name}")


def _forward_tape(params: ParameterSet, x: np.ndarray, spec: NetSpec,
                  check: bool = False):
    """Run the net over a batch, recording what backward needs.

    Returns (logits, probs, features, tape); features is the input to the
    final dense layer."""
    tape = []
    conv_i = dense_i = 0
    dense_total = spec.dense_count()
    features = None
    probs = None
    for layer in spec.layers:
        kind = layer[0]
        if kind == "conv":
            conv_i += 1
            name = f"conv{conv_i}"
            w, b = params.tensors[name + ".w"], params.tensors[name + ".b"]
            o, c_in, k, _ = w.shape
            if x.shape[1] != c_in:
                raise ValueError(f"{name}: expected {c_in} channels, got {x.shape[1]}")
            cols = _im2col(x, k)
            out = np.matmul(w.reshape(o, -1), cols) + b[:, None]
            oh, ow = x.shape[2] - k + 1, x.shape[3] - k + 1
            out = out.reshape(x.shape[0], o, oh, ow)
            tape.append((kind, name, cols, x.shape, k))
            x = out
        elif kind == "relu":
            mask = x > 0
            tape.append((kind, mask))
            x = x * mask
        elif kind == "maxpool":
            p = layer[1]
            n, c, h, w_ = x.shape
            oh, ow = h // p, w_ // p
            patches = x.reshape(n, c, oh, p, ow, p).transpose(0, 1, 2, 4, 3, 5)
            patches = patches.reshape(n, c, oh, ow, p * p)
            arg = np.argmax(patches, axis=-1)
            out = np.take_along_axis(patches, arg[..., None], axis=-1)[..., 0]
            tape.append((kind, arg, x.shape, p))
            x = out
        elif kind == "flatten":
            tape.append((kind, x.shape))
            x = x.reshape(x.shape[0], -1)
        elif kind == "dense":
            dense_i += 1
            name = f"dense{dense_i}"
            if dense_i == dense_total:
                features = x
            w, b = params.tensors[name + ".w"], params.tensors[name + ".b"]
            if x.shape[1] != w.shape[1]:
                raise ValueError(f"{name}: expected input {w.shape[1]}, got {x.shape[1]}")
            tape.append((kind, name, x))
            x = x @ w.T + b
        elif kind == "softmax":
            logits = x
            shifted = x - x.max(axis=1, keepdims=True)
            e = np.exp(shifted)
            probs = e / e.sum(axis=1, keepdims=True)
            tape.append((kind, probs))
            x = probs
        _check_finite(kind, x, check)
    if probs is None or features is None:
        raise ValueError("net must end in dense+softmax over a dense feature layer")
    return logits, probs, features, tape


def _backward_tape(params: ParameterSet, dlogits: np.ndarray, tape,
                   check: bool = False) -> dict[str, np.ndarray]:
    """Walk the tape backwards from d(loss)/d(logits)."""
    grads: dict[str, np.ndarray] = {}
    d = dlogits
    for entry in reversed(tape):
        kind = entry[0]
        if kind == "softmax":
            continue  # caller differentiates through softmax into dlogits
        if kind == "dense":
            _, name, x_in = entry
            w = params.tensors[name + ".w"]
            grads[name + ".w"] = d.T @ x_in
            grads[name + ".b"] = d.sum(axis=0)
            d = d @ w
        elif kind == "flatten":
            d = d.reshape(entry[1])
        elif kind == "maxpool":
            _, arg, x_shape, p = entry
            n, c, h, w_ = x_shape
            oh, ow = h // p, w_ // p
            dpatch = np.zeros((n, c, oh, ow, p * p))
            np.put_along_axis(dpatch, arg[..., None], d[..., None], axis=-1)
            d = dpatch.reshape(n, c, oh, ow, p, p).transpose(0, 1, 2, 4, 3, 5)
            d = d.reshape(x_shape)
        elif kind == "relu":
            d = d * entry[1]
        elif kind == "conv":
            _, name, cols, x_shape, k = entry
            w = params.tensors[name + ".w"]
            o = w.shape[0]
            oh, ow = x_shape[2] - k + 1, x_shape[3] - k + 1
            dflat = d.reshape(x_shape[0], o, oh * ow)
            grads[name + ".w"] = np.matmul(dflat, cols.transpose(0, 2, 1)).sum(axis=0).reshape(w.shape)
            grads[name + ".b"] = dflat.sum(axis=(0, 2))
            dcols = np.matmul(w.reshape(o, -1).T, dflat)
            d = _col2im(dcols, x_shape, k)
        _check_finite(f"backward:{kind}", d, check)
    return grads


def _as_batch(image) -> np.ndarray:
    """Accept a RasterView or a 2-D array; return (1,1,H,W) float64."""
    pixels = getattr(image, "pixels", image)
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("image must be a 2-D grid")
    return arr[None, None]


def forward(params: ParameterSet, image, spec: NetSpec):
    """-> (logits, LabelDistribution, features) for one image."""
    x = _as_batch(image)
    if x.shape[2:] != spec.input_hw:
        raise ValueError(f"input {x.shape[2:]} does not match net input {spec.input_hw}")
    logits, probs, features, _ = _forward_tape(params, x, spec)
    return logits[0], LabelDistribution(probs=probs[0]), features[0]


def forward_batch(params: ParameterSet, images: np.ndarray, spec: NetSpec):
    """-> (logits, probs, features) arrays for an (N,H,W) image stack."""
    x = np.asarray(images, dtype=np.float64)[:, None]
    logits, probs, features, _ = _forward_tape(params, x, spec)
    return logits, probs, features


def _loss_and_dlogits(probs: np.ndarray, targets: np.ndarray, loss_kind: str):
    n, k = probs.shape
    if loss_kind == "mse":
        diff = probs - targets
        loss = float(np.mean(np.sum(diff * diff, axis=1) / k))
        dprobs = 2.0 * diff / (k * n)
        dot = np.sum(probs * dprobs, axis=1, keepdims=True)
        dlogits = probs * (dprobs - dot)
    elif loss_kind == "cross_entropy":
        logp = np.log(np.maximum(probs, 1e-300))
        loss = float(-np.mean(np.sum(targets * logp, axis=1)))
        dlogits = (probs - targets) / n
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    return loss, dlogits


def loss_and_grad(params: ParameterSet, batch, loss_kind: str, spec: NetSpec):
    """Mean loss and exact gradients over a batch of (image, target-vector).

    Pure function; raises NumericalOverflowError on non-finite intermediates.
    """
    if not batch:
        raise ValueError("empty batch")
    x = np.concatenate([_as_batch(img) for img, _ in batch], axis=0)
    targets = np.stack([np.asarray(t, dtype=np.float64) for _, t in batch])
    k = output_dim(spec)
    if targets.shape[1] != k:
        raise ValueError(f"targets have length {targets.shape[1]}, net emits {k}")
    _, probs, _, tape = _forward_tape(params, x, spec, check=True)
    loss, dlogits = _loss_and_dlogits(probs, targets, loss_kind)
    if not np.isfinite(loss):
        raise NumericalOverflowError("numerical overflow in loss")
    grads = _backward_tape(params, dlogits, tape, check=True)
    return loss, grads


def sgd_step(params: ParameterSet, grads: dict[str, np.ndarray], lr: float) -> ParameterSet:
    if lr < 0:
        raise ValueError("learning rate must be nonnegative")
    updated = {}
    for name, t in params.tensors.items():
        g = grads.get(name)
        updated[name] = t if g is None or lr == 0.0 else t - lr * g
    return params.copy_with(updated)


def cosine(a, b) -> float:
    """Cosine similarity of two equal-length vectors."""
    va = np.asarray(a, dtype=np.float64).ravel()
    vb = np.asarray(b, dtype=np.float64).ravel()
    if va.shape != vb.shape:
        raise ValueError(f"length mismatch: {va.shape} vs {vb.shape}")
    na, nb = float(np.linalg.norm(va)), float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("undefined similarity for a zero vector")
    return float(np.dot(va, vb) / (na * nb))


# --- snapshot container: one JSON header line, then little-endian float64 ---

SNAPSHOT_SCHEMA = 1


def save_params(params: ParameterSet, path) -> None:
    header = {
        "schema_version": SNAPSHOT_SCHEMA,
        "version": params.version,
        "hash": params.content_hash(),
        "layers": [{"name": n, "shape": list(t.shape)} for n, t in params.tensors.items()],
    }
    blob = bytearray(json.dumps(header, sort_keys=True).encode("utf-8"))
    blob += b"\n"
    for t in params.tensors.values():
        blob += t.astype("<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_params(path) -> ParameterSet:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("schema_version") != SNAPSHOT_SCHEMA:
        raise SnapshotIntegrityError(f"unsupported snapshot schema in {path}")
    offset = nl + 1
    tensors = {}
    for entry in header["layers"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * 8
        tensors[entry["name"]] = np.frombuffer(raw[offset:end], dtype="<f8").reshape(shape)
        offset = end
    if offset != len(raw):
        raise SnapshotIntegrityError(f"snapshot integrity: trailing bytes in {path}")
    params = ParameterSet(tensors=tensors, version=header["version"])
    if params.content_hash() != header["hash"]:
        raise SnapshotIntegrityError(f"snapshot integrity: hash mismatch in {path}")
    return params
