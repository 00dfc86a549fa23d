import numpy as np
import pytest

from adhoc_topics.nn import NnModel, model_digest
from adhoc_topics.training import (
    Adam,
    RangeTestResult,
    TrainConfig,
    TrainingDiverged,
    derive_bounds,
    lr_range_test,
    one_cycle,
    train,
)


class TestOneCycle:
    def test_endpoints_and_midpoint_exact(self):
        lo, hi = 2e-6, 2e-5
        total = 1000
        assert one_cycle(0, total, lo, hi) == lo
        assert one_cycle(total // 2, total, lo, hi) == hi
        assert one_cycle(total, total, lo, hi) == lo

    def test_exact_for_odd_totals_via_float_midpoint(self):
        lo, hi = 1e-3, 1e-2
        total = 7
        assert one_cycle(total / 2, total, lo, hi) == hi

    def test_linear_segments(self):
        lo, hi = 0.0, 1.0
        total = 100
        assert one_cycle(25, total, lo, hi) == pytest.approx(0.5)
        assert one_cycle(75, total, lo, hi) == pytest.approx(0.5)

    def test_beta1_runs_in_reverse(self):
        total = 10
        start = one_cycle(0, total, 0.95, 0.85)
        mid = one_cycle(5, total, 0.95, 0.85)
        end = one_cycle(10, total, 0.95, 0.85)
        assert (start, mid, end) == (0.95, 0.85, 0.95)

    def test_bounds_checked(self):
        with pytest.raises(ValueError):
            one_cycle(11, 10, 0.0, 1.0)
        with pytest.raises(ValueError):
            one_cycle(0, 1, 0.0, 1.0)


class TestAdam:
    def test_quadratic_descent_with_fixed_lr(self):
        # one-parameter convex objective f(x) = (x - 3)^2 via a fake "model"
        x = np.array([10.0])

        class Shim:
            params = {"x": x}

        m = Adam.__new__(Adam)
        m.model = Shim()
        m.beta2 = 0.999
        m.eps = 1e-8
        m.t = 0
        m.m = {"x": np.zeros(1)}
        m.v = {"x": np.zeros(1)}

        import adhoc_topics.training as tr

        original = tr.PARAM_NAMES
        tr.PARAM_NAMES = ("x",)
        try:
            losses = []
            for _ in range(400):
                losses.append(float((x[0] - 3.0) ** 2))
                m.step({"x": np.array([2 * (x[0] - 3.0)])}, lr=0.05, beta1=0.9)
            tail = losses[-5:]
        finally:
            tr.PARAM_NAMES = original
        assert losses[0] > losses[50] > losses[150]
        assert all(t < 1e-3 for t in tail)


def toy_data(n=48, vocab=12, seed=0):
    rng = np.random.default_rng(seed)
    inputs = [rng.integers(0, vocab, size=rng.integers(1, 6)).tolist()
              for _ in range(n)]
    targets = (rng.random((n, 20)) < 0.3).astype(float)
    return inputs, targets


class TestTrain:
    def test_loss_trace_recorded_and_schedule_applied(self):
        inputs, targets = toy_data()
        cfg = TrainConfig(batch_size=8, epochs=2, lr_min=1e-3, lr_max=1e-2)
        model = NnModel.init(12, seed=0)
        result = train(model, inputs, targets, cfg, seed=0)
        assert len(result.loss_trace) == result.total_steps
        assert result.lr_trace[0] == cfg.lr_min
        assert max(result.lr_trace) <= cfg.lr_max

    def test_bit_reproducible_for_fixed_seed(self):
        inputs, targets = toy_data()
        cfg = TrainConfig(batch_size=6, epochs=2, lr_min=1e-3, lr_max=1e-2)
        digests = []
        for _ in range(2):
            model = NnModel.init(12, seed=5)
            result = train(model, inputs, targets, cfg, seed=5)
            digests.append((model_digest(model), tuple(result.loss_trace)))
        assert digests[0] == digests[1]

    def test_different_seed_changes_run(self):
        inputs, targets = toy_data()
        cfg = TrainConfig(batch_size=6, epochs=2, lr_min=1e-3, lr_max=1e-2)
        m1 = NnModel.init(12, seed=5)
        train(m1, inputs, targets, cfg, seed=5)
        m2 = NnModel.init(12, seed=5)
        train(m2, inputs, targets, cfg, seed=6)
        assert model_digest(m1) != model_digest(m2)

    def test_divergence_aborts_with_diagnostic(self):
        inputs, targets = toy_data()
        cfg = TrainConfig(batch_size=6, epochs=2, lr_min=1e250, lr_max=1e260)
        model = NnModel.init(12, seed=1)
        with pytest.raises(TrainingDiverged, match="step"):
            train(model, inputs, targets, cfg, seed=1)

    def test_empty_data_rejected(self):
        cfg = TrainConfig()
        with pytest.raises(ValueError):
            train(NnModel.init(5), [], np.zeros((0, 20)), cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(lr_min=1e-2, lr_max=1e-3)
        with pytest.raises(ValueError):
            TrainConfig(threshold=0.0)
        with pytest.raises(ValueError):
            TrainConfig(beta1_min=0.99, beta1_max=0.9)


class TestRangeTest:
    def test_five_point_linear_grid(self):
        inputs, targets = toy_data()
        model = NnModel.init(12, seed=2)
        result = lr_range_test(model, inputs, targets,
                               lr_lo=1e-6, lr_hi=1e-5, steps=5)
        lrs = [lr for lr, _ in result.curve]
        assert lrs == pytest.approx([1e-6, 3.25e-6, 5.5e-6, 7.75e-6, 1e-5])

    def test_flat_curve_falls_back_to_geometric_midpoint(self):
        # all-zero gradients: zero final layer and zero targets keep the loss
        # bitwise constant across steps
        model = NnModel.init(12, seed=3)
        result = RangeTestResult(
            curve=[(1e-6, 1.0), (1e-4, 1.0)],
            suggested_min=0.0, suggested_max=0.0, diverged=False,
            flat_fallback=False,
        )
        # drive through the public function with genuinely flat losses
        inputs, _ = toy_data()
        targets = np.full((len(inputs), 20), 0.5)
        model.params["w2"][:] = 0.0
        model.params["b2"][:] = 0.0
        out = lr_range_test(model, inputs, targets, 1e-6, 1e-4, steps=6)
        assert out.flat_fallback
        assert out.suggested_max == pytest.approx(np.sqrt(1e-6 * 1e-4))
        assert out.suggested_min == pytest.approx(out.suggested_max / 10)

    def test_probe_leaves_caller_model_unchanged(self):
        inputs, targets = toy_data()
        model = NnModel.init(12, seed=4)
        before = model_digest(model)
        lr_range_test(model, inputs, targets, 1e-5, 1e-2, steps=10)
        assert model_digest(model) == before

    def test_suggested_bounds_in_stable_region_of_convex_problem(self):
        # grid-search oracle: the suggested max must fall inside the lr range
        # where single-step training still reduces the loss
        inputs, targets = toy_data(n=60, seed=9)
        model = NnModel.init(12, seed=9)
        result = lr_range_test(model, inputs, targets, 1e-5, 0.5, steps=40)

        def one_step_improves(lr):
            probe = model.copy()
            from adhoc_topics.training import Adam

            opt = Adam(probe)
            loss0 = probe.loss(inputs, targets, training=True)
            _, grads = probe.loss_and_grads(inputs, targets)
            opt.step(grads, lr=lr, beta1=0.9)
            return probe.loss(inputs, targets, training=True) < loss0

        stable = [lr for lr in np.geomspace(1e-5, 0.5, 25) if one_step_improves(lr)]
        assert stable, "grid search found no stable learning rate"
        assert result.suggested_max <= max(stable) * 1.5
        assert result.suggested_min < result.suggested_max

    def test_divergence_truncates_and_flags(self):
        inputs, targets = toy_data()
        model = NnModel.init(12, seed=5)
        result = lr_range_test(model, inputs, targets, 1e3, 1e9, steps=30,
                               divergence_factor=1.5)
        assert result.diverged
        assert len(result.curve) < 30

    def test_derive_bounds_applies_suggestion(self):
        cfg = TrainConfig(lr_min=1e-6, lr_max=1e-5)
        result = RangeTestResult(curve=[], suggested_min=1e-4,
                                 suggested_max=1e-3, diverged=False,
                                 flat_fallback=False)
        updated = derive_bounds(cfg, result)
        assert (updated.lr_min, updated.lr_max) == (1e-4, 1e-3)
