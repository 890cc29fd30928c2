import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oci.augmenter import augment, render_bbox
from oci.autodiff import Tensor
from oci.encoders import (CH_GRIPPER, CH_KIND, N_CHANNELS, NUMERIC, UNK, EncoderError, FrozenInstructionEmbedder,
                          ObsEncoder, ObsTensor, TextEncoder, TokenSeq, Vocab, encode_obs, encode_text, fuse,
                          tokenize_text)
from oci.geometry import BBox
from oci.trainer import TrainConfig, TrainingError, build_embedder, build_model, check_frozen_exclusion

V = Vocab.default()


def text_encoder(seed=0, width=8):
    return TextEncoder(V, width, np.random.default_rng(seed))


def grid(w=2, h=2, gripper=(0, 0)):
    g = np.zeros((w, h, N_CHANNELS))
    g[gripper[0], gripper[1], CH_GRIPPER] = 1.0
    return g


class TestVocab:
    def test_dense_and_sentinels(self):
        assert sorted(V.index.values()) == list(range(len(V)))
        assert NUMERIC in V.index and UNK in V.index

    def test_json_round_trip(self):
        assert Vocab.from_json(V.to_json()) == V

    def test_rejects_bad_json(self):
        with pytest.raises(EncoderError):
            Vocab.from_json('{"a": 1}')
        with pytest.raises(EncoderError):
            Vocab(["a", "b"])


class TestTokenize:
    def test_plain_command(self):
        t = tokenize_text("pick up the cube", V)
        assert len(t) == 4 and V.unk_id not in t.ids and V.numeric_id not in t.ids

    def test_reference_coordinates(self):
        t = tokenize_text("[0.396, 0.682, 0.516, 0.786]", V)
        num = t.ids == V.numeric_id
        assert num.sum() == 4
        np.testing.assert_array_equal(t.numeric_values[num], [0.396, 0.682, 0.516, 0.786])

    def test_empty(self):
        t = tokenize_text("", V)
        assert len(t) == 0 and len(t.numeric_values) == 0

    def test_unknown_word(self):
        assert list(tokenize_text("xylophone", V).ids) == [V.unk_id]

    @given(st.text(max_size=60))
    def test_total_and_deterministic(self, s):
        a, b = tokenize_text(s, V), tokenize_text(s, V)
        assert np.array_equal(a.ids, b.ids) and len(a.ids) == len(a.numeric_values)
        assert np.all(np.isfinite(a.numeric_values))

    @given(st.lists(st.floats(0, 1), min_size=4, max_size=4).map(sorted))
    def test_rendered_box_values_recovered(self, v):
        box = BBox(v[0], v[1], v[2], v[3])
        t = tokenize_text(render_bbox(box), V)
        got = t.numeric_values[t.ids == V.numeric_id]
        np.testing.assert_allclose(got, v, atol=5e-4 + 1e-12)


class TestTextEncoder:
    def test_positions_distinguish(self):
        out = encode_text(tokenize_text("cube cube", V), text_encoder()).data
        assert not np.allclose(out[0], out[1])

    def test_numeric_linearity(self):
        enc = text_encoder()
        ids = np.array([V.numeric_id])
        a = enc(TokenSeq(ids, np.array([0.2]))).data
        b = enc(TokenSeq(ids, np.array([0.8]))).data
        np.testing.assert_allclose(b - a, 0.6 * enc.value_vec.data[None], atol=1e-14)

    def test_empty_then_fuse(self):
        empty = encode_text(tokenize_text("", V), text_encoder())
        assert empty.shape == (0, 8)
        img = Tensor(np.ones((4, 8)))
        np.testing.assert_array_equal(fuse(img, empty).data, img.data)

    def test_out_of_range_id(self):
        with pytest.raises(EncoderError, match="range"):
            text_encoder()(TokenSeq(np.array([len(V)]), np.zeros(1)))


class TestObs:
    def test_shape(self):
        enc = ObsEncoder(8, (2, 2), np.random.default_rng(0))
        assert encode_obs(ObsTensor(grid()), enc).shape == (4, 8)

    def test_locality(self):
        enc = ObsEncoder(8, (3, 3), np.random.default_rng(0))
        g = grid(3, 3)
        g[1, 1, CH_KIND] = 1.0
        g[2, 0, CH_KIND + 1] = 1.0
        g2 = g.copy()
        g2[1, 1], g2[2, 0] = g[2, 0], g[1, 1]
        diff = np.abs(enc(g).data - enc(g2).data).sum(-1)
        changed = set(np.flatnonzero(diff > 0))
        assert changed == {1 * 3 + 1, 2 * 3 + 0}

    def test_empty_grid_is_bias_plus_position(self):
        enc = ObsEncoder(8, (2, 3), np.random.default_rng(0))
        g = np.zeros((2, 3, N_CHANNELS))
        np.testing.assert_allclose(enc(g).data, enc.b.data + enc.positions, atol=1e-15)

    @pytest.mark.parametrize("mutate", [lambda g: g.__setitem__((0, 0, 0), 1.5),
                                        lambda g: g.__setitem__((1, 1, CH_GRIPPER), 1.0),
                                        lambda g: g.__setitem__((0, 0, CH_GRIPPER), 0.0)])
    def test_validation(self, mutate):
        g = grid()
        mutate(g)
        with pytest.raises(EncoderError):
            ObsTensor(g)


class TestFuse:
    def test_counts_and_order(self, rng):
        img, txt = Tensor(rng.normal(size=(4, 8))), Tensor(rng.normal(size=(6, 8)))
        M = fuse(img, txt)
        assert M.shape == (10, 8)
        np.testing.assert_array_equal(M.data[:4], img.data)

    def test_width_mismatch(self):
        with pytest.raises(EncoderError, match="width"):
            fuse(Tensor(np.ones((2, 8))), Tensor(np.ones((2, 4))))


class TestFrozenEmbedder:
    def test_deterministic(self):
        e = FrozenInstructionEmbedder(V, seed=3)
        assert e("open the box").data.tobytes() == e("open the box").data.tobytes()
        assert e.calls == 2

    def test_coordinate_sensitivity(self):
        e = FrozenInstructionEmbedder(V)
        assert not np.allclose(e("box [0.1, 0.2, 0.3, 0.4]").data, e("box [0.1, 0.2, 0.3, 0.5]").data)

    def test_cross_process_identical(self):
        code = ("from oci.encoders import frozen_instruction_embedder as f;"
                "import sys; sys.stdout.write(f('pick up the red cube [0.1, 0.2, 0.3, 0.4]', seed=5).data.tobytes().hex())")
        outs = {subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, check=True).stdout
                for _ in range(2)}
        assert len(outs) == 1

    def test_registry_excludes_embedder(self):
        cfg = TrainConfig()
        emb, model = build_embedder(cfg), build_model(cfg)
        check_frozen_exclusion(model.parameters(), emb)
        assert all(p.frozen for p in emb.params())
        with pytest.raises(TrainingError, match="frozen"):
            check_frozen_exclusion(model.parameters() + emb.params()[:1], emb)
