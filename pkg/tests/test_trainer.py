import json

import numpy as np
import pytest

from hiddenhmc import encoder as enc
from hiddenhmc import labelspace, synthdata, trainer
from hiddenhmc.data import Dataset
from hiddenhmc.errors import CheckpointVersionError, InvalidInputError, TrainingError
from hiddenhmc.trainer import Adam, TrainConfig

from oracles import central_diff, rel_err


@pytest.fixture(scope="module")
def small_grid():
    train, test, h = synthdata.generate(synthdata.GaussianGridSpec(total_samples=800, seed=3))
    return train, test, h


def quick(**kw):
    base = dict(epochs=4, batch_size=32, hidden=(16,), embed_dim=4, seed=11)
    base.update(kw)
    return TrainConfig(**base)


class TestAdam:
    def test_zero_gradient(self):
        a = np.array([1.0, -2.0])
        opt = Adam([a])
        opt.step([a], [np.zeros(2)])
        np.testing.assert_array_equal(a, [1.0, -2.0])
        assert opt.t == 1

    def test_first_step_magnitude(self):
        a = np.zeros(3)
        g = np.array([3.0, -0.2, 1e-3])
        Adam([a], lr=0.01).step([a], [g])
        np.testing.assert_allclose(a, -0.01 * g / (np.abs(g) + 1e-8), rtol=1e-12)

    def test_identical_problems(self):
        a = np.array([0.5, 0.5])
        opt = Adam([a])
        for _ in range(5):
            opt.step([a], [2 * a])
        assert a[0] == a[1]

    def test_non_finite(self):
        a = np.zeros(2)
        with pytest.raises(TrainingError, match="non-finite"):
            Adam([a]).step([a], [np.array([np.nan, 0.0])])

    def test_state_mismatch(self):
        a = np.zeros(2)
        with pytest.raises(InvalidInputError):
            Adam([a]).step([a, a], [a, a])

    def test_functional_wrapper(self):
        a = np.ones(1)
        state = trainer.adam_step(Adam([a], lr=0.1), [a], [np.ones(1)])
        assert state.t == 1 and a[0] == pytest.approx(0.9)


def tiny_problem(rng, L, n):
    params = enc.init_encoder([2, 3, n], rng)
    for b in params.biases:
        b[:] = rng.normal(scale=0.1, size=b.shape)
    theta = rng.normal(scale=0.5, size=(n, L))
    x = rng.normal(size=(5, 2))
    y = rng.integers(0, 2, size=(5, L))
    cooc = labelspace.count_cooccurrence(rng.integers(0, 2, size=(12, L)))
    return params, theta, x, y, cooc


class TestJointObjective:
    def test_lambda_zero(self):
        rng = np.random.default_rng(0)
        params, theta, x, y, cooc = tiny_problem(rng, 4, 3)
        a = trainer.joint_objective(params, theta, x, y, cooc, 0.0)
        b = enc.l1_gradients(params, theta, x, y)
        assert a[0] == b[0]
        np.testing.assert_array_equal(a[2], b[2])

    def test_additivity(self):
        rng = np.random.default_rng(1)
        params, theta, x, y, cooc = tiny_problem(rng, 5, 3)
        for metric in labelspace.METRICS:
            v, (dws, _), dt = trainer.joint_objective(params, theta, x, y, cooc, 0.3, metric)
            l1, (dws1, _), dt1 = enc.l1_gradients(params, theta, x, y)
            l2, g2 = labelspace.cooc_loss(theta, cooc, metric)
            assert v == l1 + 0.3 * l2
            np.testing.assert_array_equal(dt, dt1 + 0.3 * g2)
            np.testing.assert_array_equal(dws[0], dws1[0])

    def test_two_labels(self):
        rng = np.random.default_rng(2)
        params, theta, x, y, _ = tiny_problem(rng, 2, 3)
        cooc = np.array([[0, 4], [4, 0]])
        v = trainer.joint_objective(params, theta, x, y, cooc, 0.5)[0]
        assert v == enc.l1_gradients(params, theta, x, y)[0]

    def test_negative_lambda(self):
        rng = np.random.default_rng(3)
        params, theta, x, y, cooc = tiny_problem(rng, 3, 2)
        with pytest.raises(InvalidInputError):
            trainer.joint_objective(params, theta, x, y, cooc, -1.0)

    @pytest.mark.parametrize("metric", labelspace.METRICS)
    def test_finite_differences(self, metric):
        rng = np.random.default_rng(4)
        for _ in range(50):
            L, n = int(rng.integers(2, 7)), int(rng.integers(1, 5))
            params, theta, x, y, cooc = tiny_problem(rng, L, n)
            lam = float(rng.uniform(0.05, 2))

            def f_theta(t):
                return trainer.joint_objective(params, t, x, y, cooc, lam, metric)[0]

            def f_weight(w):
                q = params.copy()
                q.weights[0][...] = w
                return trainer.joint_objective(q, theta, x, y, cooc, lam, metric)[0]

            _, (dws, _), dt = trainer.joint_objective(params, theta, x, y, cooc, lam, metric)
            assert rel_err(dt, central_diff(f_theta, theta)) < 1e-5
            assert rel_err(dws[0], central_diff(f_weight, params.weights[0])) < 1e-5


class TestSplit:
    def test_sizes(self):
        d = Dataset(np.arange(100.0)[:, None], np.zeros((100, 2)))
        tr, val = trainer.split_validation(d, 0.1, 0)
        assert len(tr) == 90 and len(val) == 10
        assert sorted(tr.ids + val.ids, key=int) == d.ids

    def test_deterministic(self):
        d = Dataset(np.arange(1000.0)[:, None], np.zeros((1000, 2)))
        a = trainer.split_validation(d, 0.1, 5)[1].ids
        assert a == trainer.split_validation(d, 0.1, 5)[1].ids
        assert a != trainer.split_validation(d, 0.1, 6)[1].ids

    def test_too_small(self):
        with pytest.raises(InvalidInputError):
            trainer.split_validation(Dataset(np.zeros((1, 1)), np.zeros((1, 1))), 0.5, 0)
        with pytest.raises(InvalidInputError):
            trainer.split_validation(Dataset(np.zeros((4, 1)), np.zeros((4, 1))), 1.0, 0)


class TestConfig:
    def test_unknown_field(self):
        with pytest.raises(InvalidInputError, match="bogus"):
            TrainConfig.from_dict({"bogus": 1})

    @pytest.mark.parametrize("kw", [{"variant": "xyz"}, {"lam": -0.1}, {"label_dropout": 1.0},
                                    {"validation_fraction": 0.0}, {"l2_schedule": "never"}])
    def test_invalid(self, kw):
        with pytest.raises(InvalidInputError):
            TrainConfig(**kw).validate()


class TestVariants:
    def test_flat_identity(self, small_grid):
        model = trainer.train(small_grid[0], quick(variant="flt"))
        np.testing.assert_array_equal(model.theta, np.eye(21))

    def test_flat_separable_toy(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(400, 2))
        y = np.stack([x[:, 0] > 0, x[:, 1] > 0], axis=1).astype(np.uint8)
        model = trainer.train(Dataset(x, y), quick(variant="flt", epochs=40, learning_rate=0.01,
                                                   doc_dropout=0.0, label_dropout=0.0))
        assert trainer.f1_scores(model.predict(x), y).micro_f1 > 0.99

    def test_cascaded_theta_frozen(self, small_grid):
        train = small_grid[0]
        cfg = quick(variant="cas", stage1_steps=20)
        model = trainer.train(train, cfg)
        split_seed, _, theta_rng, _, _ = trainer._streams(cfg.seed)
        inner, _ = trainer.split_validation(train, cfg.validation_fraction, split_seed)
        theta0 = trainer._init_theta(cfg, 21, theta_rng)
        theta, losses = trainer.fit_cooccurrence(
            theta0, labelspace.count_cooccurrence(inner.labels), steps=20, lr=cfg.learning_rate)
        np.testing.assert_array_equal(model.theta, theta)
        assert model.stage1_history == losses and losses[-1] < losses[0]

    def test_cascaded_default_budget(self, small_grid):
        model = trainer.train(small_grid[0], quick(variant="cas"))
        assert len(model.stage1_history) == 4 + 1

    def test_cascaded_zero_cooccurrence(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(60, 2))
        y = np.eye(3, dtype=np.uint8)[rng.integers(0, 3, size=60)]
        cfg = quick(variant="cas", embed_dim=2)
        model = trainer.train(Dataset(x, y), cfg)
        draw = trainer._init_theta(cfg, 3, trainer._streams(cfg.seed)[2])
        np.testing.assert_array_equal(model.theta, draw)
        assert np.abs(model.theta).max() <= 1e-3

    def test_joint_lambda_zero_matches_flat(self, small_grid):
        flat = trainer.train(small_grid[0], quick(variant="flt"))
        joint = trainer.train(small_grid[0], quick(variant="jnt", lam=0.0, theta_init="identity",
                                                   train_theta=False))
        assert joint.history == flat.history
        np.testing.assert_array_equal(joint.params.weights[-1], flat.params.weights[-1])

    @pytest.mark.parametrize("variant", trainer.VARIANTS)
    def test_selection_and_history(self, small_grid, variant):
        model = trainer.train(small_grid[0], quick(variant=variant))
        hist = model.history
        assert len(hist) == 4
        best = hist[model.best_epoch - 1]["val_micro_f1"]
        assert all(best >= h["val_micro_f1"] for h in hist)
        assert all(best > h["val_micro_f1"] for h in hist[:model.best_epoch - 1])
        assert hist[-1]["objective"] < model.initial_objective

    def test_first_batch_schedule(self, small_grid):
        model = trainer.train(small_grid[0], quick(variant="jnt", l2_schedule="first_batch"))
        assert np.all(np.isfinite(model.theta))

    def test_deterministic(self, small_grid, tmp_path):
        a = trainer.train(small_grid[0], quick(variant="jnt"))
        b = trainer.train(small_grid[0], quick(variant="jnt"))
        trainer.save_checkpoint(tmp_path / "a.json", a)
        trainer.save_checkpoint(tmp_path / "b.json", b)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_wrong_entry_point(self, small_grid):
        with pytest.raises(InvalidInputError):
            trainer.train_flat(small_grid[0], quick(variant="jnt"))


class TestCheckpoint:
    def test_round_trip(self, small_grid, tmp_path):
        train, test, _ = small_grid
        model = trainer.train(train, quick(variant="euc"))
        trainer.save_checkpoint(tmp_path / "m.json", model)
        back = trainer.load_checkpoint(tmp_path / "m.json")
        np.testing.assert_array_equal(back.theta, model.theta)
        np.testing.assert_array_equal(back.scores(test.features), model.scores(test.features))
        assert back.config == model.config and back.metric == "euclidean"
        assert back.history == model.history

    def test_version(self, tmp_path):
        p = tmp_path / "old.json"
        p.write_text(json.dumps({"format": "HIDDEN-CKPT-0"}))
        with pytest.raises(CheckpointVersionError, match="HIDDEN-CKPT-0.*HIDDEN-CKPT-1"):
            trainer.load_checkpoint(p)
