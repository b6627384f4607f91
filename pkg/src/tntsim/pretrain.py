"""Perceiver pretraining on a procedurally generated silhouette corpus.

Sixteen archetype shape classes (arrow, bird, boat, ...) are drawn as
polygon templates with per-vertex jitter, random aspect, optional mirroring
and a uniformly random rotation, then rasterized through the same pipeline
the naming game uses.  Training is plain minibatch SGD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PolygonSet
from .nn import NetSpec, ParameterSet, _loss_and_dlogits, _backward_tape, _forward_tape, init_params
from .raster import rasterize
from .seeds import derive, generator


def _ring(points):
    return tuple((float(x), float(y)) for x, y in points)


def _arc(cx, cy, r, a0, a1, n):
    return [(cx + r * math.cos(a), cy + r * math.sin(a))
            for a in np.linspace(a0, a1, n)]


def _arrow():
    return [_ring([(-2.2, -0.45), (0.6, -0.45), (0.6, -1.1), (2.4, 0.0),
                   (0.6, 1.1), (0.6, 0.45), (-2.2, 0.45)])]


def _bird():
    return [_ring([(-2.0, 1.0), (0.0, 0.15), (2.0, 1.0), (2.0, 0.35),
                   (0.0, -0.6), (-2.0, 0.35)])]


def _boat():
    return [_ring([(-1.8, 0.0), (0.05, 0.0), (0.05, 1.7), (1.5, 0.15),
                   (1.8, 0.0), (1.1, -0.85), (-1.1, -0.85)])]


def _bolt():
    return [_ring([(-0.4, 2.0), (0.65, 2.0), (0.1, 0.65), (0.95, 0.65),
                   (-0.55, -2.0), (-0.1, 0.05), (-0.95, 0.05)])]


def _bridge():
    return [_ring([(-2.0, -1.2), (-1.35, -1.2), (-1.35, 0.0), (1.35, 0.0),
                   (1.35, -1.2), (2.0, -1.2), (2.0, 0.6), (-2.0, 0.6)])]


def _cross():
    return [_ring([(-0.5, 1.5), (0.5, 1.5), (0.5, 0.5), (1.5, 0.5),
                   (1.5, -0.5), (0.5, -0.5), (0.5, -1.5), (-0.5, -1.5),
                   (-0.5, -0.5), (-1.5, -0.5), (-1.5, 0.5), (-0.5, 0.5)])]


def _crown():
    return [_ring([(-1.6, -1.0), (1.6, -1.0), (1.6, 0.0), (1.07, 1.2),
                   (0.53, 0.15), (0.0, 1.2), (-0.53, 0.15), (-1.07, 1.2),
                   (-1.6, 0.0)])]


def _diamond():
    return [_ring([(0.0, 1.5), (0.85, 0.0), (0.0, -1.5), (-0.85, 0.0)])]


def _fish():
    return [_ring([(1.9, 0.0), (0.6, 0.8), (-0.9, 0.6), (-1.9, 1.05),
                   (-1.4, 0.0), (-1.9, -1.05), (-0.9, -0.6), (0.6, -0.8)])]


def _house():
    return [_ring([(-1.2, -1.1), (1.2, -1.1), (1.2, 0.5), (0.0, 1.6),
                   (-1.2, 0.5)])]


def _kite():
    return [_ring([(0.0, 1.7), (0.85, 0.35), (0.0, -1.2), (-0.85, 0.35)])]


def _ladder():
    polys = [
        _ring([(-0.75, -2.0), (-0.45, -2.0), (-0.45, 2.0), (-0.75, 2.0)]),
        _ring([(0.45, -2.0), (0.75, -2.0), (0.75, 2.0), (0.45, 2.0)]),
    ]
    for y in (-1.5, -0.5, 0.5, 1.5):
        polys.append(_ring([(-0.45, y - 0.13), (0.45, y - 0.13),
                            (0.45, y + 0.13), (-0.45, y + 0.13)]))
    return polys


def _moon():
    outer = _arc(0.0, 0.0, 1.6, -1.95, 1.95, 14)
    inner = _arc(0.75, 0.0, 1.35, 1.55, -1.55, 14)
    return [_ring(outer + inner)]


def _star():
    pts = []
    for i in range(10):
        a = math.pi / 2 + i * math.pi / 5
        r = 1.7 if i % 2 == 0 else 0.66
        pts.append((r * math.cos(a), r * math.sin(a)))
    return [_ring(pts)]


def _tower():
    return [_ring([(-0.45, -2.0), (0.45, -2.0), (0.45, 0.9), (0.85, 0.9),
                   (0.85, 1.5), (-0.85, 1.5), (-0.85, 0.9), (-0.45, 0.9)])]


def _tree():
    return [_ring([(-0.28, -2.0), (0.28, -2.0), (0.28, -1.0), (1.15, -1.0),
                   (0.5, 0.1), (0.9, 0.1), (0.32, 1.1), (0.62, 1.1),
                   (0.0, 2.0), (-0.62, 1.1), (-0.32, 1.1), (-0.9, 0.1),
                   (-0.5, 0.1), (-1.15, -1.0), (-0.28, -1.0)])]


ARCHETYPES: dict[str, callable] = {
    "arrow": _arrow, "bird": _bird, "boat": _boat, "bolt": _bolt,
    "bridge": _bridge, "cross": _cross, "crown": _crown, "diamond": _diamond,
    "fish": _fish, "house": _house, "kite": _kite, "ladder": _ladder,
    "moon": _moon, "star": _star, "tower": _tower, "tree": _tree,
}

DEFAULT_CLASSES = tuple(ARCHETYPES)

_MIRRORABLE = {"arrow", "boat", "bolt", "fish", "moon"}


def sample_silhouette(class_name: str, rng, jitter: float = 0.05) -> PolygonSet:
    """One jittered, rotated instance of an archetype class."""
    polys = ARCHETYPES[class_name]()
    sx = rng.uniform(0.85, 1.15)
    sy = rng.uniform(0.85, 1.15)
    mirror = class_name in _MIRRORABLE and rng.random() < 0.5
    theta = rng.uniform(0.0, 2.0 * math.pi)
    c, s = math.cos(theta), math.sin(theta)
    out = []
    for poly in polys:
        pts = []
        for x, y in poly:
            if mirror:
                x = -x
            x = x * sx + rng.normal(0.0, jitter)
            y = y * sy + rng.normal(0.0, jitter)
            pts.append((x * c - y * s, x * s + y * c))
        out.append(tuple(pts))
    return PolygonSet(tuple(out))


def make_dataset(classes=DEFAULT_CLASSES, samples_per_class: int = 200,
                 seed: int = 0, image_hw: tuple[int, int] = (64, 64)):
    """-> (images (N,H,W) float64 binary, labels (N,) int64)."""
    rng = generator(derive(seed, "silhouette-corpus"))
    h, w = image_hw
    images = np.zeros((len(classes) * samples_per_class, h, w))
    labels = np.zeros(len(classes) * samples_per_class, dtype=np.int64)
    i = 0
    for ci, name in enumerate(classes):
        for _ in range(samples_per_class):
            view = rasterize(sample_silhouette(name, rng), width=w, height=h)
            images[i] = view.pixels
            labels[i] = ci
            i += 1
    return images, labels


@dataclass(frozen=True)
class PretrainConfig:
    epochs: int = 8
    lr: float = 0.08
    batch: int = 32
    val_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.epochs <= 0 or self.lr <= 0 or self.batch <= 0:
            raise ValueError("pretrain hyperparameters must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0,1)")


def pretrain(spec: NetSpec, dataset, hp: PretrainConfig):
    """Train the perceiver; -> (ParameterSet, val_accuracy).

    Fully determined by hp.seed: init, the train/val split and every epoch
    shuffle derive from it.
    """
    if isinstance(dataset, tuple) and len(dataset) == 2:
        images, labels = dataset
        images = np.asarray(images, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
    else:
        pairs = list(dataset)
        images = np.stack([np.asarray(getattr(im, "pixels", im), dtype=np.float64)
                           for im, _ in pairs])
        labels = np.asarray([lab for _, lab in pairs], dtype=np.int64)
    if np.unique(labels).size < 2:
        raise ValueError("degenerate labels: dataset covers fewer than 2 classes")

    k = [l for l in spec.layers if l[0] == "dense"][-1][1]
    onehot = np.eye(k)[labels]

    rng = generator(derive(hp.seed, "pretrain-shuffle"))
    params = init_params(spec, derive(hp.seed, "pretrain-init"))

    n = images.shape[0]
    perm = rng.permutation(n)
    n_val = max(1, int(round(n * hp.val_fraction)))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    x_train, t_train = images[train_idx], onehot[train_idx]
    x_val, y_val = images[val_idx], labels[val_idx]

    n_train = x_train.shape[0]
    for _ in range(hp.epochs):
        order = rng.permutation(n_train)
        for start in range(0, n_train, hp.batch):
            sel = order[start:start + hp.batch]
            xb = x_train[sel][:, None]
            _, probs, _, tape = _forward_tape(params, xb, spec)
            _, dlogits = _loss_and_dlogits(probs, t_train[sel], "cross_entropy")
            grads = _backward_tape(params, dlogits, tape)
            tensors = {name: t - hp.lr * grads[name] for name, t in params.tensors.items()}
            params = params.copy_with(tensors)

    # held-out accuracy in one batched pass
    _, probs, _, _ = _forward_tape(params, x_val[:, None], spec)
    val_accuracy = float(np.mean(np.argmax(probs, axis=1) == y_val))
    return params, val_accuracy
