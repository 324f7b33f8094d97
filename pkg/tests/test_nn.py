import math

import numpy as np
import pytest

from astreg import autodiff as ad
from astreg.autodiff import Parameter, Tensor
from astreg.nn import (
    Adam,
    EncoderBlock,
    LayerNorm,
    MultiHeadAttention,
    embed_with_positions,
    embedding_init,
    ffn_forward,
    load_checkpoint,
    save_checkpoint,
    uniform_init,
    zeros_init,
)


class TestEmbedWithPositions:
    def test_zero_positions_give_token_rows(self, rng):
        tokens = Parameter(rng.normal(size=(10, 4)), "tok")
        positions = zeros_init((6, 4), "pos")
        out = embed_with_positions([3, 1, 4], tokens, positions)
        assert np.allclose(out.data, tokens.data[[3, 1, 4]])

    def test_single_position(self, rng):
        tokens = Parameter(rng.normal(size=(5, 3)), "tok")
        positions = Parameter(rng.normal(size=(4, 3)), "pos")
        out = embed_with_positions([0], tokens, positions)
        assert np.allclose(out.data[0], tokens.data[0] + positions.data[0])

    def test_overlength_truncates_with_warning(self, rng, caplog):
        tokens = Parameter(rng.normal(size=(5, 3)), "tok")
        positions = Parameter(rng.normal(size=(2, 3)), "pos")
        import logging

        with caplog.at_level(logging.WARNING):
            out = embed_with_positions([0, 1, 2, 3], tokens, positions)
        assert out.shape == (2, 3)
        assert any("truncated" in r.message for r in caplog.records)

    def test_gradients_flow_to_both_tables(self, rng):
        tokens = Parameter(rng.normal(size=(5, 3)), "tok")
        positions = Parameter(rng.normal(size=(4, 3)), "pos")

        def f():
            return ad.tsum(embed_with_positions([2, 2, 0], tokens, positions))

        assert ad.grad_check(f, [tokens, positions]) < 1e-6


def naive_multi_head(x_q, x_kv, mha: MultiHeadAttention) -> np.ndarray:
    """Explicit per-head loop oracle."""
    q = x_q @ mha.wq.data
    k = x_kv @ mha.wk.data
    v = x_kv @ mha.wv.data
    dk = mha.head_dim
    heads = []
    for h in range(mha.heads):
        qh, kh, vh = (m[:, h * dk : (h + 1) * dk] for m in (q, k, v))
        scores = qh @ kh.T / math.sqrt(dk)
        weights = np.exp(scores - scores.max(axis=1, keepdims=True))
        weights /= weights.sum(axis=1, keepdims=True)
        heads.append(weights @ vh)
    return np.concatenate(heads, axis=1) @ mha.wo.data


class TestMultiHeadAttention:
    def test_single_key_gets_full_weight(self, rng):
        mha = MultiHeadAttention(4, 2, rng, "mha")
        kv = Tensor(rng.normal(size=(1, 4)))
        for query_scale in (0.1, 5.0):
            q = Tensor(query_scale * rng.normal(size=(3, 4)))
            out = mha(q, kv)
            expected = (kv.data @ mha.wv.data) @ mha.wo.data
            assert np.allclose(out.data, np.repeat(expected, 3, axis=0))
            for w in mha.attention_weights(q, kv):
                assert np.allclose(w, 1.0)

    def test_duplicate_keys_split_weight(self, rng):
        mha = MultiHeadAttention(4, 2, rng, "mha")
        row = rng.normal(size=4)
        kv = Tensor(np.stack([row, row]))
        q = Tensor(rng.normal(size=(2, 4)))
        for w in mha.attention_weights(q, kv):
            assert np.allclose(w, 0.5)

    def test_matches_per_head_oracle(self, rng):
        mha = MultiHeadAttention(4, 2, rng, "mha")
        q = rng.normal(size=(3, 4))
        kv = rng.normal(size=(5, 4))
        out = mha(Tensor(q), Tensor(kv))
        assert np.allclose(out.data, naive_multi_head(q, kv, mha), atol=1e-12)

    def test_weight_rows_sum_to_one(self, rng):
        mha = MultiHeadAttention(8, 4, rng, "mha")
        q = Tensor(rng.normal(size=(6, 8)))
        kv = Tensor(rng.normal(size=(7, 8)))
        mask = np.array([True, True, False, True, False, True, True])
        for w in mha.attention_weights(q, kv, key_mask=mask):
            assert np.allclose(w.sum(axis=1), 1.0, atol=1e-6)
            assert np.all(w[:, ~mask] == 0.0)

    def test_all_keys_masked_raises(self, rng):
        mha = MultiHeadAttention(4, 2, rng, "mha")
        q = Tensor(rng.normal(size=(2, 4)))
        kv = Tensor(rng.normal(size=(3, 4)))
        with pytest.raises(ValueError, match="empty attention support"):
            mha(q, kv, key_mask=np.zeros(3, dtype=bool))

    def test_dim_not_divisible_rejected(self, rng):
        with pytest.raises(ValueError):
            MultiHeadAttention(6, 4, rng, "mha")

    def test_gradcheck(self, rng):
        mha = MultiHeadAttention(4, 2, rng, "mha")
        q = Tensor(rng.normal(size=(3, 4)))
        kv = Tensor(rng.normal(size=(4, 4)))

        def f():
            return ad.tsum(ad.tanh(mha(q, kv)))

        assert ad.grad_check(f, mha.parameters()) < 1e-6


class TestFeedForward:
    def test_zero_input_passes_output_bias(self, rng):
        w1 = Tensor(rng.normal(size=(4, 8)))
        b1 = Tensor(np.zeros(8))
        w2 = Tensor(rng.normal(size=(8, 4)))
        b2 = Tensor(np.full(4, 2.5))
        out = ffn_forward(Tensor(np.zeros((3, 4))), w1, b1, w2, b2)
        assert np.allclose(out.data, 2.5)

    def test_relu_kills_negative_preactivations(self, rng):
        w1 = Tensor(rng.normal(size=(4, 8)))
        b1 = Tensor(np.full(8, -1e6))
        w2 = Tensor(rng.normal(size=(8, 4)))
        b2 = Tensor(rng.normal(size=4))
        out = ffn_forward(Tensor(rng.normal(size=(3, 4))), w1, b1, w2, b2)
        assert np.allclose(out.data, np.broadcast_to(b2.data, (3, 4)))

    def test_matches_two_loop_oracle(self, rng):
        x = rng.normal(size=(3, 4))
        w1, b1 = rng.normal(size=(4, 6)), rng.normal(size=6)
        w2, b2 = rng.normal(size=(6, 4)), rng.normal(size=4)
        expected = np.zeros((3, 4))
        for i in range(3):
            hidden = np.maximum(x[i] @ w1 + b1, 0.0)
            expected[i] = hidden @ w2 + b2
        out = ffn_forward(Tensor(x), Tensor(w1), Tensor(b1), Tensor(w2), Tensor(b2))
        assert np.allclose(out.data, expected, atol=1e-12)


class TestLayerNorm:
    def test_constant_row_maps_to_zero(self):
        norm = LayerNorm(4, "ln")
        out = norm(Tensor(np.full((2, 4), 3.0)))
        assert np.allclose(out.data, 0.0)

    def test_unit_variance_row(self):
        norm = LayerNorm(2, "ln")
        out = norm(Tensor(np.array([[1.0, -1.0]])))
        assert np.allclose(out.data, [[1.0, -1.0]], atol=1e-4)

    def test_normalizes_random_rows(self, rng):
        norm = LayerNorm(16, "ln")
        out = norm(Tensor(rng.normal(2.0, 3.0, size=(5, 16)))).data
        assert np.all(np.abs(out.mean(axis=1)) < 1e-7)
        assert np.allclose(out.var(axis=1), 1.0, atol=1e-3)


class TestAdam:
    def test_zero_gradient_leaves_parameters(self):
        p = Parameter(np.array([1.0, 2.0]), "p")
        before = p.data.copy()
        Adam([p], lr=0.1).step()
        assert np.array_equal(p.data, before)

    def test_descends_quadratic(self):
        p = Parameter(np.array([1.0]), "p")
        opt = Adam([p], lr=0.1)
        ad.tsum(ad.square(p)).backward()
        opt.step()
        assert p.data[0] < 1.0

    def test_converges_on_2d_quadratic(self):
        p = Parameter(np.array([3.0, -2.0]), "p")
        opt = Adam([p], lr=0.05)
        for _ in range(500):
            loss = ad.tsum(ad.square(p))
            loss.backward()
            opt.step()
        assert ad.tsum(ad.square(p)).item() < 1e-6

    def test_gradients_zeroed_after_step(self):
        p = Parameter(np.array([1.0]), "p")
        opt = Adam([p], lr=0.1)
        ad.tsum(ad.square(p)).backward()
        opt.step()
        assert np.all(p.grad == 0.0)
        assert opt.step_count == 1

    def test_nonfinite_gradient_names_parameter(self):
        p = Parameter(np.array([1.0]), "culprit")
        p.grad = np.array([np.nan])
        with pytest.raises(ad.NonFiniteError, match="culprit"):
            Adam([p]).step()


class TestCheckpoint:
    def test_round_trip(self, rng, tmp_path):
        params = [
            uniform_init(rng, (3, 4), "w"),
            zeros_init((4,), "b"),
            embedding_init(rng, (5, 2), "emb"),
        ]
        save_checkpoint(params, {"model": "demo"}, tmp_path / "ckpt")
        originals = [p.data.copy() for p in params]
        for p in params:
            p.data = np.zeros_like(p.data)
        config = load_checkpoint(params, tmp_path / "ckpt")
        assert config == {"model": "demo"}
        for p, original in zip(params, originals):
            assert np.array_equal(p.data, original)

    def test_shape_mismatch_rejected(self, rng, tmp_path):
        params = [uniform_init(rng, (3, 4), "w")]
        save_checkpoint(params, {}, tmp_path / "ckpt")
        wrong = [uniform_init(rng, (4, 3), "w")]
        with pytest.raises(ValueError, match="shape mismatch"):
            load_checkpoint(wrong, tmp_path / "ckpt")

    def test_little_endian_blob(self, rng, tmp_path):
        p = Parameter(np.array([[1.5, -2.0]]), "w")
        save_checkpoint([p], {}, tmp_path / "ckpt")
        blob = next((tmp_path / "ckpt").glob("*.bin")).read_bytes()
        assert np.array_equal(np.frombuffer(blob, dtype="<f8"), [1.5, -2.0])


class TestEncoderBlock:
    def test_residual_then_norm_ordering(self, rng):
        # zeroing the FFN weights must leave O == LayerNorm(O')
        block = EncoderBlock(8, 2, 16, rng, "blk")
        for p in block.ffn.parameters():
            p.data = np.zeros_like(p.data)
        x = Tensor(rng.normal(size=(5, 8)))
        attended = block.attention(x, x, None)
        o_prime = block.norm1(x + attended)
        expected = block.norm2(o_prime)
        assert np.allclose(block(x).data, expected.data, atol=1e-12)
