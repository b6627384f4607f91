"""Perceiver network: shape inference, gradients, SGD, snapshots.

Gradient correctness is established against the central finite-difference
oracle in oracles.py; the full 25-fixture sweep lives in the acceptance
suite, this file keeps a fast smoke version of the same check.
"""

import numpy as np
import pytest
from oracles import finite_difference_grads, relative_grad_error

from tntsim import nn
from tntsim.seeds import generator

GRAD_TOL = 1e-6


def smooth_image(rng, hw=(16, 16)) -> np.ndarray:
    # continuous pixel values keep finite differences away from relu kinks
    # and pooling ties
    return rng.uniform(0.05, 0.95, size=hw)


def random_target(rng, k: int) -> np.ndarray:
    t = rng.uniform(0.05, 1.0, size=k)
    return t / t.sum()


# -------------------------------------------------------------- structure

def test_parameter_shapes_default_net():
    spec = nn.default_netspec()
    shapes = nn.parameter_shapes(spec)
    # 64 -conv3-> 62 -conv3-> 60 -pool-> 30 -conv3-> 28 -conv3-> 26 -pool-> 13
    assert shapes["conv1.w"] == (8, 1, 3, 3)
    assert shapes["conv2.w"] == (8, 8, 3, 3)
    assert shapes["conv3.w"] == (16, 8, 3, 3)
    assert shapes["conv4.w"] == (16, 16, 3, 3)
    assert shapes["dense1.w"] == (64, 16 * 13 * 13)
    assert shapes["dense2.w"] == (16, 64)
    assert shapes["dense2.b"] == (16,)
    assert nn.output_dim(spec) == 16
    assert nn.feature_dim(spec) == 64


def test_parameter_shapes_rejects_impossible_nets():
    with pytest.raises(ValueError):
        nn.parameter_shapes(nn.NetSpec(input_hw=(4, 4), layers=(
            ("conv", 2, 5), ("flatten",), ("dense", 2), ("softmax",))))
    with pytest.raises(ValueError):
        nn.parameter_shapes(nn.NetSpec(input_hw=(5, 5), layers=(
            ("maxpool", 2), ("flatten",), ("dense", 2), ("softmax",))))
    with pytest.raises(ValueError):
        nn.parameter_shapes(nn.NetSpec(input_hw=(8, 8), layers=(
            ("dense", 4), ("softmax",))))


def test_init_params_deterministic_and_bias_free():
    spec = nn.default_netspec(num_classes=3, hidden=4, input_hw=(16, 16),
                              conv_widths=(2, 2, 3, 3))
    a = nn.init_params(spec, seed=5)
    b = nn.init_params(spec, seed=5)
    c = nn.init_params(spec, seed=6)
    assert a.content_hash() == b.content_hash()
    assert a.content_hash() != c.content_hash()
    assert np.all(a.tensors["conv1.b"] == 0.0)


def test_forward_emits_distribution_and_features(tiny_netspec, tiny_params):
    rng = generator(0)
    logits, dist, features = nn.forward(tiny_params, smooth_image(rng),
                                        tiny_netspec)
    assert logits.shape == (3,)
    assert features.shape == (4,)
    assert float(dist.probs.sum()) == pytest.approx(1.0, abs=1e-12)
    assert dist.top_index == int(np.argmax(logits))


def test_forward_rejects_wrong_input_size(tiny_netspec, tiny_params):
    with pytest.raises(ValueError):
        nn.forward(tiny_params, np.zeros((8, 8)), tiny_netspec)


def test_label_distribution_validation():
    with pytest.raises(ValueError):
        nn.LabelDistribution(probs=np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        nn.LabelDistribution(probs=np.array([1.5, -0.5]))
    # argmax tie resolves to the lowest index
    assert nn.LabelDistribution(probs=np.array([0.4, 0.4, 0.2])).top_index == 0


# --------------------------------------------------------------- gradients

@pytest.mark.parametrize("loss_kind", ["mse", "cross_entropy"])
def test_gradients_match_finite_differences(tiny_netspec, loss_kind):
    rng = generator(101 if loss_kind == "mse" else 202)
    params = nn.init_params(tiny_netspec, seed=int(rng.integers(1 << 30)))
    batch = [(smooth_image(rng), random_target(rng, 3)) for _ in range(2)]
    _, analytic = nn.loss_and_grad(params, batch, loss_kind, tiny_netspec)
    numeric = finite_difference_grads(params, batch, loss_kind, tiny_netspec)
    assert relative_grad_error(analytic, numeric) < GRAD_TOL


def test_loss_and_grad_input_validation(tiny_netspec, tiny_params):
    rng = generator(3)
    with pytest.raises(ValueError):
        nn.loss_and_grad(tiny_params, [], "mse", tiny_netspec)
    with pytest.raises(ValueError):
        nn.loss_and_grad(tiny_params, [(smooth_image(rng), np.ones(5))],
                         "mse", tiny_netspec)
    with pytest.raises(ValueError):
        nn.loss_and_grad(tiny_params, [(smooth_image(rng), np.ones(3) / 3)],
                         "huber", tiny_netspec)


def test_overflow_detected(tiny_netspec, tiny_params):
    # two stacked huge layers push activations past float64 range
    blown = {n: t * 1e200 if n in ("conv1.w", "conv2.w") else t
             for n, t in tiny_params.tensors.items()}
    rng = generator(4)
    with np.errstate(over="ignore"), pytest.raises(nn.NumericalOverflowError):
        nn.loss_and_grad(tiny_params.copy_with(blown),
                         [(smooth_image(rng), np.ones(3) / 3)],
                         "mse", tiny_netspec)


# -------------------------------------------------------------------- sgd

def test_sgd_step_updates_and_fixed_points(tiny_netspec, tiny_params):
    rng = generator(8)
    batch = [(smooth_image(rng), random_target(rng, 3))]
    loss0, grads = nn.loss_and_grad(tiny_params, batch, "mse", tiny_netspec)
    stepped = nn.sgd_step(tiny_params, grads, lr=0.1)
    loss1, _ = nn.loss_and_grad(stepped, batch, "mse", tiny_netspec)
    assert loss1 < loss0
    # lr=0 and zero gradients are both exact fixed points
    assert nn.sgd_step(tiny_params, grads, 0.0).content_hash() \
        == tiny_params.content_hash()
    zeros = {n: np.zeros_like(t) for n, t in tiny_params.tensors.items()}
    assert nn.sgd_step(tiny_params, zeros, 0.1).content_hash() \
        == tiny_params.content_hash()
    with pytest.raises(ValueError):
        nn.sgd_step(tiny_params, grads, -0.1)


def test_cosine_values():
    assert nn.cosine([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0, abs=1e-12)
    assert nn.cosine([2.0, 0.0], [5.0, 0.0]) == pytest.approx(1.0)
    assert nn.cosine([1.0, 0.0], [1.0, 1.0]) == pytest.approx(
        1.0 / np.sqrt(2.0))
    with pytest.raises(ValueError):
        nn.cosine([1.0, 0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        nn.cosine([1.0], [1.0, 2.0])


# --------------------------------------------------------------- snapshots

def test_snapshot_round_trip(tmp_path, tiny_params):
    path = tmp_path / "net.params"
    nn.save_params(tiny_params, path)
    loaded = nn.load_params(path)
    assert loaded.content_hash() == tiny_params.content_hash()
    assert loaded.version == tiny_params.version
    for name, t in tiny_params.tensors.items():
        assert np.array_equal(loaded.tensors[name], t)


def test_snapshot_corruption_detected(tmp_path, tiny_params):
    path = tmp_path / "net.params"
    nn.save_params(tiny_params, path)
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(nn.SnapshotIntegrityError):
        nn.load_params(path)


def test_snapshot_trailing_bytes_detected(tmp_path, tiny_params):
    path = tmp_path / "net.params"
    nn.save_params(tiny_params, path)
    path.write_bytes(path.read_bytes() + b"extra")
    with pytest.raises(nn.SnapshotIntegrityError):
        nn.load_params(path)
