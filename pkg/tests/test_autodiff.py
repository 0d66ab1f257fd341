"""Finite-difference checks for every op, plus tape semantics."""

import numpy as np
import pytest

from senttune import autodiff as ad
from senttune import rng
from senttune.errors import TapeError, ValidationError

RNG = np.random.default_rng(905)
EPS = 1e-6
TOL = 1e-4


def numeric_grad(fn, value):
    """Central finite differences of a scalar-valued fn at value."""
    flat = value.reshape(-1)
    grad = np.zeros_like(flat)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + EPS
        hi = fn()
        flat[i] = keep - EPS
        lo = fn()
        flat[i] = keep
        grad[i] = (hi - lo) / (2 * EPS)
    return grad.reshape(value.shape)


def check_grads(build_loss, tensors):
    """build_loss() -> scalar Tensor using the given watched tensors."""
    with ad.GradientTape() as tape:
        tape.watch(*tensors)
        loss = build_loss()
    grads = tape.gradients(loss)
    for t in tensors:
        expected = numeric_grad(lambda: build_loss().item(), t.data)
        got = grads[t].data
        denom = max(np.abs(expected).max(), 1e-8)
        rel = np.abs(got - expected).max() / denom
        assert rel < TOL, f"{t.name}: rel error {rel:.2e}"


def t(shape, scale=1.0, name=None):
    return ad.Tensor(RNG.normal(size=shape) * scale, name=name)


def test_matmul_2d():
    a, b = t((3, 4), name="a"), t((4, 5), name="b")
    check_grads(lambda: ad.sum_all(ad.matmul(a, b)), [a, b])


def test_matmul_batched_weight():
    a, b = t((2, 3, 4), name="a"), t((4, 6), name="b")
    check_grads(lambda: ad.sum_all(ad.matmul(a, b)), [a, b])


def test_matmul_batched_both():
    a, b = t((2, 3, 4), name="a"), t((2, 4, 5), name="b")
    check_grads(lambda: ad.sum_all(ad.matmul(a, b)), [a, b])


def test_matmul_4d_attention_shapes():
    q, k = t((2, 2, 3, 4), name="q"), t((2, 2, 4, 3), name="k")
    check_grads(lambda: ad.sum_all(ad.matmul(q, k)), [q, k])


def test_matmul_shape_mismatch_names_shapes():
    a, b = t((3, 4)), t((5, 6))
    with pytest.raises(ValidationError, match=r"3, 4.*5, 6"):
        ad.matmul(a, b)


def test_add_sub_mul_broadcast():
    a, b = t((3, 4), name="a"), t((4,), name="b")
    check_grads(lambda: ad.sum_all(ad.add(a, b)), [a, b])
    check_grads(lambda: ad.sum_all(ad.sub(a, b)), [a, b])
    check_grads(lambda: ad.sum_all(ad.mul(a, b)), [a, b])


def test_add_const_no_grad_to_constant():
    a = t((2, 3), name="a")
    bias = RNG.normal(size=(2, 3))
    check_grads(lambda: ad.sum_all(ad.add_const(a, bias)), [a])


def test_scale_reshape_transpose():
    a = t((2, 3, 4), name="a")
    check_grads(lambda: ad.sum_all(ad.scale(a, -1.7)), [a])
    check_grads(lambda: ad.sum_all(ad.reshape(a, (4, 6))), [a])
    check_grads(lambda: ad.sum_all(ad.transpose(a, (2, 0, 1))), [a])


def test_softmax(backend):
    a = t((3, 5), scale=3.0, name="a")
    w = RNG.normal(size=(3, 5))

    def loss():
        return ad.sum_all(ad.mul(ad.softmax(a), ad.Tensor(w)))

    check_grads(loss, [a])


def test_layer_norm(backend):
    x = t((4, 8), name="x")
    gamma = t((8,), name="gamma")
    beta = t((8,), name="beta")
    w = RNG.normal(size=(4, 8))

    def loss():
        return ad.sum_all(ad.mul(ad.layer_norm(x, gamma, beta), ad.Tensor(w)))

    check_grads(loss, [x, gamma, beta])


def test_gelu(backend):
    a = t((3, 7), scale=2.0, name="a")
    check_grads(lambda: ad.sum_all(ad.gelu(a)), [a])


def test_cross_entropy(backend):
    logits = t((6, 3), scale=2.0, name="logits")
    labels = np.array([0, 1, 2, 2, 1, 0], dtype=np.int64)
    check_grads(lambda: ad.cross_entropy(logits, labels), [logits])


def test_cross_entropy_rejects_bad_labels():
    logits = t((2, 3))
    with pytest.raises(ValidationError):
        ad.cross_entropy(logits, np.array([0, 3], dtype=np.int64))


def test_embedding(backend):
    table = t((10, 4), name="table")
    ids = np.array([[1, 3, 3], [0, 9, 1]], dtype=np.int64)
    w = RNG.normal(size=(2, 3, 4))

    def loss():
        return ad.sum_all(ad.mul(ad.embedding(table, ids), ad.Tensor(w)))

    check_grads(loss, [table])


def test_embedding_range_check():
    table = t((5, 4))
    with pytest.raises(ValidationError):
        ad.embedding(table, np.array([[0, 5]], dtype=np.int64))


def test_first_token():
    x = t((3, 4, 5), name="x")
    check_grads(lambda: ad.sum_all(ad.first_token(x)), [x])


def test_dropout_identity_when_off():
    x = t((3, 4))
    with ad.GradientTape() as tape:
        tape.watch(x)
        out = ad.dropout(x, 0.0, rng.stream(0, "d"))
        loss = ad.sum_all(out)
    np.testing.assert_array_equal(out.data, x.data)
    grads = tape.gradients(loss)
    np.testing.assert_array_equal(grads[x].data, np.ones_like(x.data))


def test_dropout_inverted_scaling():
    x = ad.Tensor(np.ones((200, 50)))
    out = ad.dropout(x, 0.25, rng.stream(3, "d"))
    kept = out.data[out.data != 0]
    assert np.allclose(kept, 1.0 / 0.75)
    assert abs((out.data == 0).mean() - 0.25) < 0.02


def test_gradients_requires_scalar_loss():
    x = t((2, 2))
    with ad.GradientTape() as tape:
        tape.watch(x)
        out = ad.scale(x, 2.0)
    with pytest.raises(ValidationError, match="scalar"):
        tape.gradients(out)


def test_gradients_rejects_off_tape_loss():
    x = t((2, 2))
    with ad.GradientTape() as tape:
        tape.watch(x)
        ad.sum_all(x)
    with ad.GradientTape() as other:
        other.watch(x)
        foreign = ad.sum_all(ad.scale(x, 3.0))
    with pytest.raises(TapeError):
        tape.gradients(foreign)


def test_watched_without_path_gets_zeros():
    x, y = t((2, 2), name="x"), t((3,), name="y")
    with ad.GradientTape() as tape:
        tape.watch(x, y)
        loss = ad.sum_all(x)
    grads = tape.gradients(loss)
    np.testing.assert_array_equal(grads[y].data, np.zeros(3))


def test_unwatched_tensors_are_not_in_result():
    x, y = t((2, 2), name="x"), t((2, 2), name="y")
    with ad.GradientTape() as tape:
        tape.watch(x)
        loss = ad.sum_all(ad.mul(x, y))
    grads = tape.gradients(loss)
    assert x in grads and y not in grads


def test_tensor_rejects_non_finite():
    with pytest.raises(ValidationError):
        ad.Tensor(np.array([1.0, np.nan]))
    with pytest.raises(ValidationError):
        ad.Tensor(np.array([np.inf]))


def test_full_tiny_model_gradcheck(backend):
    """A two-layer forward pass through every op family at once."""
    from senttune.model import ModelConfig, forward, init_model

    config = ModelConfig(
        vocab_size=50, max_len=6, d_model=8, n_heads=2, n_layers=2,
        d_ff=16, dropout_rate=0.0, seed=3,
    ).validate()
    model = init_model(config)
    ids = np.array(
        [[2, 5, 9, 0, 0, 0], [2, 30, 41, 7, 0, 0],
         [2, 3, 0, 0, 0, 0], [2, 11, 12, 13, 14, 15]],
        dtype=np.int64,
    )
    mask = (ids != 0).astype(np.float64)
    labels = np.array([0, 1, 2, 1], dtype=np.int64)
    params = [model.params[name] for name in sorted(model.params)]

    def loss():
        return ad.cross_entropy(forward(model, ids, mask, train_mode=False), labels)

    with ad.GradientTape() as tape:
        tape.watch(*params)
        value = loss()
    grads = tape.gradients(value)
    checked = 0
    for p in params:
        expected = numeric_grad(lambda: loss().item(), p.data)
        got = grads[p].data
        denom = max(np.abs(expected).max(), 1e-8)
        rel = np.abs(got - expected).max() / denom
        assert rel < TOL, f"{p.name}: rel error {rel:.2e}"
        checked += p.data.size
    assert checked > 1000
