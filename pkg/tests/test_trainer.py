import math
from dataclasses import replace

import numpy as np
import pytest

from oci import trainer
from oci.autodiff import CheckpointError
from oci.encoders import FrozenInstructionEmbedder, Vocab
from oci.frm import FrmConfig
from oci.sim import ACTIONS, HORIZON, TaskFamily, sample_scene, step, success
from oci.trainer import (CSV_COLUMNS, GridSpec, Metrics, TrainConfig, TrainingError, build_model, evaluate,
                         gen_dataset, run_ablation_grid, train_bc)

F1 = TrainConfig(family=1, n_demos=10, epochs=11, seed=0, eval_episodes=20)


@pytest.fixture(scope="module")
def short_run():
    data = gen_dataset(F1)
    return data, train_bc(data, F1)


class TestDataset:
    def test_count_and_flags(self, tmp_path):
        path = tmp_path / "d.jsonl"
        eps = gen_dataset(F1, path)
        assert len(eps) == 10 and len(path.read_text().splitlines()) == 10
        assert all(ep.outcome and len(ep) <= HORIZON for ep in eps)
        assert all("[" in ep.aug_text for ep in eps)

    def test_no_abs_has_no_brackets(self):
        assert all("[" not in ep.aug_text for ep in gen_dataset(replace(F1, use_abs=False)))

    def test_byte_identical(self, tmp_path):
        gen_dataset(F1, tmp_path / "a.jsonl")
        gen_dataset(F1, tmp_path / "b.jsonl")
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_paraphrases_vary(self):
        firsts = {ep.aug_text.split()[0] for ep in gen_dataset(replace(F1, n_demos=25))}
        assert len(firsts) >= 4

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(TrainingError, match="missing"):
            gen_dataset(F1, tmp_path / "missing" / "d.jsonl")


class TestTraining:
    def test_uniform_start(self, short_run):
        data, result = short_run
        assert abs(result.losses[0] - math.log(6)) <= 0.3
        model = build_model(F1)
        emb = FrozenInstructionEmbedder(Vocab.default(), F1.frm.D, F1.embedder_seed)
        p = trainer._prepare(data[:1], emb, Vocab.default())[0]
        z = model.logits(p.E, p.toks, p.grids).data
        assert np.all(z == z[:, :1])

    def test_loss_decreases(self, short_run):
        losses = short_run[1].losses
        assert len(losses) == 11
        assert sum(b < a for a, b in zip(losses, losses[1:])) >= 8

    def test_overfit_single_demo(self):
        cfg = replace(F1, n_demos=1, epochs=500, lr=3e-3)
        assert train_bc(gen_dataset(cfg), cfg).accuracy == 1.0

    def test_empty_dataset(self):
        with pytest.raises(TrainingError, match="empty"):
            train_bc([], F1)

    def test_divergence_reported(self):
        cfg = replace(F1, n_demos=2, epochs=30, lr=1e12)
        with pytest.raises(TrainingError, match="diverged"):
            train_bc(gen_dataset(cfg), cfg)

    def test_deterministic_trajectory(self):
        cfg = replace(F1, n_demos=2, epochs=3)
        data = gen_dataset(cfg)
        assert train_bc(data, cfg).losses == train_bc(data, cfg).losses

    def test_no_frm_excludes_attention(self):
        on, off = build_model(F1), build_model(replace(F1, use_frm=False))
        assert len(off.parameters()) < len(on.parameters())
        assert not any(".head0.wq" in p.name for p in off.parameters())

    def test_checkpoint_round_trip(self, short_run, tmp_path):
        model = short_run[1].model
        model.save(tmp_path / "m.ckpt")
        other = build_model(replace(F1, seed=9))
        other.load(tmp_path / "m.ckpt")
        for a, b in zip(model.all_parameters(), other.all_parameters()):
            np.testing.assert_array_equal(a.data, b.data)

    def test_checkpoint_config_mismatch(self, short_run, tmp_path):
        short_run[1].model.save(tmp_path / "m.ckpt")
        wide = build_model(replace(F1, frm=FrmConfig(D=32, D_prime=32)))
        with pytest.raises(CheckpointError, match="shape mismatch"):
            wide.load(tmp_path / "m.ckpt")


class TestEvaluate:
    def test_expert_upper_bound(self):
        m = evaluate(None, replace(F1, family=5), expert=True)
        assert m.success_rate == 1.0 and m.embedder_calls == m.episodes == 20

    def test_deterministic_and_cached(self, short_run):
        model = short_run[1].model
        a, b = evaluate(model, F1), evaluate(model, F1)
        assert a == b
        assert a.embedder_calls == a.episodes
        assert a.success_rate * a.episodes == round(a.success_rate * a.episodes)

    def test_random_policy_chance_level(self):
        rng = np.random.default_rng(0)
        wins = 0
        for i in range(1000):
            w, _, t = sample_scene(TaskFamily.CUBE_BY_POSITION, 10_000 + i)
            for _ in range(HORIZON):
                w = step(w, ACTIONS[int(rng.integers(6))])
                if success(w, t):
                    wins += 1
                    break
        assert wins / 1000 <= 0.15
        model = build_model(replace(F1, family=5))
        w3, _ = model.head[2]
        w3.data[...] = rng.normal(scale=0.5, size=w3.shape)
        assert evaluate(model, replace(F1, family=5, eval_episodes=100)).success_rate <= 0.15


def _fake_cell(cfg, variant):
    rate = ((cfg.family * 7 + cfg.n_demos + cfg.seed * 3 + len(variant)) % 50) / 50
    return Metrics(cfg.family, cfg.n_demos, variant, cfg.seed, rate, 10.0, 0.5, cfg.eval_episodes, cfg.eval_episodes)


class TestGrid:
    def test_shape_and_aggregates(self, monkeypatch):
        monkeypatch.setattr(trainer, "run_cell", _fake_cell)
        res = run_ablation_grid(TrainConfig())
        assert len(res.rows) == 250 and not res.failures
        lines = res.to_csv().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        seed_rows = [l for l in lines[1:] if not l.split(",")[3] == "mean"]
        assert len(seed_rows) == 250 and len(lines) > 251
        for agg in res.aggregate():
            vals = [m.success_rate for m in res.rows if m.variant == agg["variant"] and m.regime == agg["regime"]
                    and (agg["family"] == "all" or m.family == agg["family"])]
            assert agg["success_rate"] == pytest.approx(sum(vals) / len(vals), abs=1e-15)

    def test_failures_recorded(self, monkeypatch):
        def flaky(cfg, variant):
            if variant == "no-rel" and cfg.seed == 1:
                raise RuntimeError("boom")
            return _fake_cell(cfg, variant)

        monkeypatch.setattr(trainer, "run_cell", flaky)
        res = run_ablation_grid(TrainConfig(), GridSpec(families=(5,), regimes=(10,)))
        assert len(res.rows) == 24 and res.failures == [((5, 10, "no-rel", 1), "RuntimeError: boom")]

    def test_audit(self, monkeypatch):
        monkeypatch.setattr(trainer, "run_cell", _fake_cell)
        audit = run_ablation_grid(TrainConfig(), GridSpec(families=(2,), regimes=(25,))).audit_csv().splitlines()
        assert audit[0] == "family,regime,variant,seed,episodes,embedder_calls"
        assert all(r.split(",")[4] == r.split(",")[5] for r in audit[1:])

    def test_real_cell_cache_audit(self):
        cfg = replace(F1, n_demos=2, epochs=1, eval_episodes=5, eval_seeds=1)
        res = run_ablation_grid(cfg, GridSpec(families=(3,), regimes=(2,), variants=("full", "no-frm")))
        assert [(m.episodes, m.embedder_calls) for m in res.rows] == [(5, 5), (5, 5)]
