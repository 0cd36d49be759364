import numpy as np
import pytest

from conftest import check_gradients
from hyperrec import tensor as tn
from hyperrec.layers import AttentionParams, ParamStore, attention
from hyperrec.tensor import ShapeError


def _identity_params(d):
    eye = np.eye(d)
    return AttentionParams(*(tn.parameter(eye.copy()) for _ in range(4)))


def _random_params(d, seed=0):
    rng = np.random.default_rng(seed)
    return AttentionParams(*(tn.parameter(rng.standard_normal((d, d)) * 0.3)
                             for _ in range(4)))


def test_uniform_attention_is_mean():
    # identical keys give uniform attention weights, so the output row is the
    # plain mean of the value rows (identity projections)
    d = 4
    params = _identity_params(d)
    rng = np.random.default_rng(5)
    q = tn.parameter(rng.standard_normal((1, d)))
    k = tn.parameter(np.tile(rng.standard_normal(d), (6, 1)))
    v = tn.parameter(rng.standard_normal((6, d)))
    out = attention(q, k, v, None, 2, params)
    assert np.allclose(out.data, v.data.mean(axis=0, keepdims=True), atol=1e-12)


def test_bias_shift_invariance():
    # adding a constant to every bias entry of a query row cannot change the
    # softmax, hence the output
    d = 4
    params = _random_params(d, seed=1)
    rng = np.random.default_rng(6)
    x = tn.parameter(rng.standard_normal((3, d)))
    bias = rng.standard_normal((3, 3))
    a = attention(x, x, x, bias, 2, params)
    b = attention(x, x, x, bias + 7.5, 2, params)
    assert np.allclose(a.data, b.data, atol=1e-10)


def test_zero_bias_matches_no_bias_bitwise():
    d = 4
    params = _random_params(d, seed=2)
    rng = np.random.default_rng(7)
    x = tn.parameter(rng.standard_normal((3, d)))
    a = attention(x, x, x, None, 2, params)
    b = attention(x, x, x, np.zeros((3, 3)), 2, params)
    assert np.array_equal(a.data, b.data)


def test_key_mask_excludes_rows():
    # masking a key is the same as deleting that row from k/v
    d = 4
    params = _random_params(d, seed=3)
    rng = np.random.default_rng(8)
    q = tn.parameter(rng.standard_normal((1, 2, d)))
    kv = rng.standard_normal((1, 5, d))
    mask = np.array([[True, True, False, True, False]])
    full = attention(q, tn.parameter(kv), tn.parameter(kv), None, 2, params,
                     key_mask=mask)
    kept = kv[:, mask[0], :]
    trimmed = attention(q, tn.parameter(kept), tn.parameter(kept), None, 2, params)
    assert np.allclose(full.data, trimmed.data, atol=1e-12)


def test_batched_groups_independent():
    # each group in a 3-d batch must match running that group alone
    d = 4
    params = _random_params(d, seed=4)
    rng = np.random.default_rng(9)
    x = rng.standard_normal((3, 5, d))
    batched = attention(tn.parameter(x), tn.parameter(x), tn.parameter(x),
                        None, 2, params)
    for g in range(3):
        single = attention(tn.parameter(x[g]), tn.parameter(x[g]),
                           tn.parameter(x[g]), None, 2, params)
        assert np.allclose(batched.data[g], single.data, atol=1e-12)


def test_attention_gradients():
    d = 4
    params = _random_params(d, seed=11)
    rng = np.random.default_rng(12)
    x = tn.parameter(rng.standard_normal((3, d)))
    bias_table = tn.parameter(rng.standard_normal((2, 3)) * 0.1)
    buckets = rng.integers(0, 3, size=(1, 3, 3))
    leaves = {"x": x, "wq": params.wq, "wk": params.wk, "wv": params.wv,
              "wo": params.wo, "bias_table": bias_table}
    weights = rng.standard_normal((3, d))

    def build_loss():
        bias = tn.distance_bias(bias_table, buckets)
        out = attention(x, x, x, bias, 2, params)
        return tn.sum_all(tn.mul_const(out, weights))

    check_gradients(build_loss, leaves, tol=1e-4)


def test_heads_must_divide_width():
    params = _random_params(4)
    x = tn.parameter(np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        attention(x, x, x, None, 3, params)


class TestParamStore:
    def test_seeded_init_deterministic(self):
        a, b = ParamStore(), ParamStore()
        a.add("w", (3, 4), np.random.default_rng(1))
        b.add("w", (3, 4), np.random.default_rng(1))
        assert np.array_equal(a["w"].data, b["w"].data)

    def test_init_bound(self):
        store = ParamStore()
        store.add("w", (16, 8), np.random.default_rng(0))
        assert np.abs(store["w"].data).max() <= 1.0 / np.sqrt(16)

    def test_duplicate_name_rejected(self):
        store = ParamStore()
        store.add_zeros("w", (2, 2))
        with pytest.raises(KeyError):
            store.add_zeros("w", (2, 2))

    def test_gradients_zero_for_unreachable(self):
        store = ParamStore()
        rng = np.random.default_rng(2)
        a = store.add("a", (2, 2), rng)
        store.add("b", (2, 2), rng)
        grads = store.gradients(tn.sum_all(a))
        assert np.array_equal(grads["a"], np.ones((2, 2)))
        assert np.array_equal(grads["b"], np.zeros((2, 2)))

    def test_save_load_bitwise(self, tmp_path):
        store = ParamStore()
        rng = np.random.default_rng(3)
        store.add("embed.X", (5, 3), rng)
        store.add("layer0.up_u", (6, 3), rng)
        meta = {"variant": "ehi_plus", "seed": 7}
        extra = {"counter": np.arange(4, dtype=np.int64)}
        path = tmp_path / "ckpt.npz"
        store.save(path, meta=meta, extra=extra)
        loaded, meta2, extra2 = ParamStore.load(path)
        assert meta2 == meta
        assert np.array_equal(extra2["counter"], extra["counter"])
        assert loaded.names() == store.names()
        for name in store.names():
            assert np.array_equal(loaded[name].data, store[name].data)

    def test_copy_is_deep(self):
        store = ParamStore()
        store.add_zeros("w", (2, 2))
        clone = store.copy()
        clone["w"].data[0, 0] = 9.0
        assert store["w"].data[0, 0] == 0.0
