import numpy as np
import pytest

from holonet.activations import Activation
from holonet.losses import Loss
from holonet.network import Architecture, ClassConstraints, Network
from holonet.training import (
    TrainConfig,
    empirical_risk,
    gradient,
    project_constraints,
    train_erm,
)

RELU = Activation("relu")


def _net_from_theta(widths, theta, activation=RELU, clamp=None):
    shapes = []
    for i in range(len(widths) - 1):
        shapes.append((widths[i + 1], widths[i]))
    layers = []
    pos = 0
    theta = np.asarray(theta, dtype=float)
    for (rows, cols) in shapes:
        w = theta[pos : pos + rows * cols].reshape(rows, cols)
        pos += rows * cols
        b = theta[pos : pos + rows]
        pos += rows
        layers.append((w, b))
    return Network(layers, activation, clamp)


def _random_dense(rng, widths, activation=RELU, scale=0.8, clamp=None):
    layers = []
    for i in range(len(widths) - 1):
        layers.append(
            (rng.uniform(-scale, scale, size=(widths[i + 1], widths[i])),
             rng.uniform(-scale, scale, size=widths[i + 1]))
        )
    return Network(layers, activation, clamp)


class TestEmpiricalRisk:
    def test_zero_net_absolute_hand_sum(self):
        net = _net_from_theta((1, 1), [0.0, 0.0])
        x = np.zeros((3, 1))
        y = np.array([1.0, -1.0, 2.0])
        assert empirical_risk(net, x, y, Loss.make("absolute")) == pytest.approx(4.0 / 3.0)

    def test_perfect_predictor_zero(self):
        rng = np.random.default_rng(0)
        net = _random_dense(rng, (1, 4, 1))
        x = rng.normal(size=(50, 1))
        y = net.forward(x).ravel()
        assert empirical_risk(net, x, y, Loss.make("absolute")) == 0.0

    def test_duplication_invariance(self):
        rng = np.random.default_rng(1)
        net = _random_dense(rng, (1, 3, 1))
        x = rng.normal(size=(20, 1))
        y = rng.normal(size=20)
        r1 = empirical_risk(net, x, y, Loss.make("absolute"))
        r2 = empirical_risk(net, np.vstack([x, x]), np.concatenate([y, y]),
                            Loss.make("absolute"))
        assert r1 == pytest.approx(r2)

    def test_empty_rejected(self):
        net = _net_from_theta((1, 1), [1.0, 0.0])
        with pytest.raises(ValueError):
            empirical_risk(net, np.zeros((0, 1)), np.zeros(0), Loss.make("absolute"))


class TestGradient:
    def test_hand_example_linear_unit(self):
        # h(x) = w x, squared loss, (x, y) = (1, 0), w = 2: d/dw (wx - y)^2 = 4
        net = _net_from_theta((1, 1), [2.0, 0.0])
        g = gradient(net, np.array([[1.0]]), np.array([0.0]),
                     Loss.make("squared", output_cap=10, y_bound=1))
        assert g[0] == pytest.approx(4.0)

    def test_zero_residual_zero_gradient(self):
        rng = np.random.default_rng(2)
        net = _random_dense(rng, (2, 3, 1))
        x = rng.normal(size=(30, 2))
        y = net.forward(x).ravel()
        g = gradient(net, x, y, Loss.make("squared", output_cap=10, y_bound=10))
        np.testing.assert_allclose(g, 0.0, atol=1e-12)

    def _finite_difference(self, net, x, y, loss, step=1e-6):
        theta = net.param_vector()
        out = np.empty_like(theta)
        for i in range(len(theta)):
            tp, tm = theta.copy(), theta.copy()
            tp[i] += step
            tm[i] -= step
            rp = empirical_risk(net.with_params(tp), x, y, loss)
            rm = empirical_risk(net.with_params(tm), x, y, loss)
            out[i] = (rp - rm) / (2 * step)
        return out

    @pytest.mark.parametrize("kind", ["squared", "huber", "logistic", "absolute"])
    def test_against_central_differences_random_net(self, kind):
        rng = np.random.default_rng(3)
        loss = Loss.make(kind, delta=0.3, output_cap=5.0, y_bound=2.0)
        net = _random_dense(rng, (2, 5, 4, 1))
        x = rng.normal(size=(16, 2))
        y = (rng.choice([-1.0, 1.0], 16) if kind == "logistic"
             else rng.normal(size=16))
        pres, _ = _forward_pres(net, x)
        keep = np.all([np.min(np.abs(p), axis=1) > 1e-3 for p in pres[:-1]], axis=0)
        if kind in ("absolute", "huber"):
            keep &= np.abs(net.forward(x).ravel() - y) > 1e-3
        x, y = x[keep], y[keep]
        g = gradient(net, x, y, loss)
        fd = self._finite_difference(net, x, y, loss)
        scale = np.maximum(np.abs(fd), 1e-8)
        assert np.max(np.abs(g - fd) / scale) <= 1e-5

    def test_clamp_mask_zeroes_saturated_outputs(self):
        net = _net_from_theta((1, 1), [3.0, 0.0], clamp=1.0)
        # at x = 1 the raw output 3 saturates the clamp, so d risk / d w = 0
        g = gradient(net, np.array([[1.0]]), np.array([0.0]),
                     Loss.make("squared", output_cap=1.0, y_bound=1.0))
        assert g[0] == 0.0


def _forward_pres(net, x):
    pres = []
    a = x
    last = len(net.layers) - 1
    for i, (w, b) in enumerate(net.layers):
        z = a @ w.T + b
        pres.append(z)
        if i < last:
            a = net.activation(z)
    return pres, a


class TestProjection:
    def test_magnitude_ranking(self):
        net = _net_from_theta((1, 1, 1), [3.0, -0.5, 0.1, 0.0])
        out = project_constraints(net, 2, np.inf)
        np.testing.assert_array_equal(out.param_vector(), [3.0, -0.5, 0.0, 0.0])

    def test_clamp_then_no_further_zeroing(self):
        net = _net_from_theta((1, 1, 1), [3.0, -0.5, 0.0, 0.0])
        out = project_constraints(net, 3, 1.0)
        np.testing.assert_array_equal(out.param_vector(), [1.0, -0.5, 0.0, 0.0])

    def test_feasible_point_unchanged(self):
        net = _net_from_theta((1, 1, 1), [0.5, -0.25, 0.0, 0.1])
        out = project_constraints(net, 3, 1.0)
        np.testing.assert_array_equal(out.param_vector(), net.param_vector())

    def test_tie_zeroes_later_index(self):
        net = _net_from_theta((1, 1, 1), [0.5, -0.5, 0.5, 0.5])
        out = project_constraints(net, 2, np.inf)
        np.testing.assert_array_equal(out.param_vector(), [0.5, -0.5, 0.0, 0.0])

    def test_idempotent_on_random_vectors(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            theta = rng.normal(size=11) * rng.choice([0.0, 1.0, 5.0], size=11)
            net = _net_from_theta((1, 2, 1), theta)
            once = project_constraints(net, 4, 1.5)
            twice = project_constraints(once, 4, 1.5)
            np.testing.assert_array_equal(once.param_vector(), twice.param_vector())
            v = once.param_vector()
            assert np.count_nonzero(v) <= 4
            assert np.max(np.abs(v)) <= 1.5


def _caps(**kw):
    base = dict(depth_cap=3, width_cap=16, sparsity_cap=500, weight_cap=4.0, output_cap=4.0)
    base.update(kw)
    return ClassConstraints(**base)


class TestTrainErm:
    def test_realizable_teacher(self):
        rng = np.random.default_rng(5)
        teacher = _net_from_theta((1, 2, 1), [0.8, -0.6, 0.0, 0.1, 0.5, 0.4, 0.05])
        x = rng.uniform(-1, 1, size=(256, 1))
        y = teacher.forward(x).ravel()
        caps = _caps()
        loss = Loss.make("squared", output_cap=4.0, y_bound=float(np.max(np.abs(y))))
        cfg = TrainConfig(epochs=800, step_size=0.1, restarts=10, decay_factor=0.5,
                          decay_interval=250, projection_interval=10, seed=42)
        model = train_erm(caps, x, y, loss, Architecture((1, 8, 1)), cfg)
        teacher_risk = empirical_risk(teacher.with_output_clamp(4.0), x, y, loss)
        assert model.empirical_risk <= teacher_risk + 1e-3
        assert model.constraint_report["ok"]

    def test_constant_label_beats_constant_grid(self):
        rng = np.random.default_rng(6)
        x = rng.uniform(-1, 1, size=(200, 1))
        y = np.full(200, 0.37)
        caps = _caps()
        loss = Loss.make("absolute")
        cfg = TrainConfig(epochs=1000, step_size=0.05, restarts=4, decay_factor=0.5,
                          decay_interval=100, projection_interval=10, seed=7)
        model = train_erm(caps, x, y, loss, Architecture((1, 4, 1)), cfg)
        grid_best = min(
            empirical_risk(_net_from_theta((1, 1), [0.0, c], clamp=4.0), x, y, loss)
            for c in np.linspace(-1, 1, 201)
        )
        assert model.empirical_risk <= grid_best + 1e-3

    def test_feasibility_always(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(-1, 1, size=(64, 1))
        y = np.sin(x).ravel()
        caps = _caps(sparsity_cap=9, weight_cap=0.7)
        cfg = TrainConfig(epochs=40, step_size=0.05, restarts=2, seed=3,
                          projection_interval=7)
        model = train_erm(caps, x, y, Loss.make("absolute"), Architecture((1, 6, 1)), cfg)
        stats = model.net.param_stats()
        assert stats["sparsity"] <= 9
        assert stats["max_abs"] <= 0.7
        assert model.constraint_report["ok"]

    def test_dominates_initial_candidates(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, size=(100, 1))
        y = 0.5 * x.ravel() + 0.1
        caps = _caps()
        loss = Loss.make("absolute")
        cfg = TrainConfig(epochs=120, step_size=0.05, restarts=3, seed=11,
                          projection_interval=10)
        model = train_erm(caps, x, y, loss, Architecture((1, 4, 1)), cfg)
        # rebuild every restart's projected initial candidate independently
        from holonet.rng import stream
        from holonet.training import _init_network

        for r in range(cfg.restarts):
            rng_r = stream(cfg.seed, "erm-init", r)
            init = _init_network(Architecture((1, 4, 1)), RELU, caps.weight_cap,
                                 cfg.init_scale, caps.output_cap, rng_r)
            init = project_constraints(init, caps.sparsity_cap, caps.weight_cap)
            assert model.empirical_risk <= empirical_risk(init, x, y, loss) + 1e-12

    def test_deterministic_bytes(self):
        rng = np.random.default_rng(10)
        x = rng.uniform(-1, 1, size=(80, 1))
        y = np.cos(x).ravel()
        caps = _caps()
        cfg = TrainConfig(epochs=60, step_size=0.05, restarts=2, seed=5,
                          projection_interval=10)
        m1 = train_erm(caps, x, y, Loss.make("absolute"), Architecture((1, 5, 1)), cfg)
        m2 = train_erm(caps, x, y, Loss.make("absolute"), Architecture((1, 5, 1)), cfg)
        assert m1.net.to_json() == m2.net.to_json()
        assert m1.empirical_risk == m2.empirical_risk
        assert m1.restart_index == m2.restart_index

    def test_arch_exceeding_caps_rejected(self):
        caps = _caps(depth_cap=1)
        cfg = TrainConfig(epochs=5, seed=1)
        with pytest.raises(ValueError):
            train_erm(caps, np.zeros((4, 1)), np.zeros(4), Loss.make("absolute"),
                      Architecture((1, 4, 4, 1)), cfg)
