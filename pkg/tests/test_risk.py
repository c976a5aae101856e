import math

import numpy as np
import pytest

from holonet.losses import Loss
from holonet.network import Network
from holonet.processes import ProcessSpec, SupervisedTask, make_supervised
from holonet.risk import (
    bound_ingredients,
    deviation_denominator,
    estimate_partial_sum_variance,
    excess_and_decomposition,
    mc_risk,
)
from holonet.targets import Box, HolderTarget, corpus_target

ABS = Loss.make("absolute")


def _zero_target():
    return HolderTarget("zero", 1.5, 0.5, Box((-1.0,), (1.0,)),
                        lambda x: np.zeros(x.shape[0]),
                        lambda b, x: np.zeros(x.shape[0]))


def _task(target=None, noise_sd=0.0):
    return SupervisedTask(
        process=ProcessSpec("ar1", a=0.5, noise_sd=1.0),
        target=target if target is not None else corpus_target("sin1d_half", 2.5),
        noise_sd=noise_sd,
        clip=Box((-1.0,), (1.0,)),
    )


class TestMCRisk:
    def test_perfect_predictor(self):
        task = _task(noise_sd=0.0)
        r = mc_risk(task.target, task, ABS, 5000, seed=1)
        assert r.value == pytest.approx(0.0, abs=1e-12)

    def test_absolute_moment_of_standard_normal(self):
        task = _task(target=_zero_target(), noise_sd=1.0)
        r = mc_risk(lambda x: np.zeros(x.shape[0]), task, ABS, 100_000, seed=2)
        assert abs(r.value - math.sqrt(2 / math.pi)) <= 3 * r.stderr

    def test_stderr_scaling(self):
        task = _task(target=_zero_target(), noise_sd=1.0)
        r1 = mc_risk(lambda x: np.zeros(x.shape[0]), task, ABS, 20_000, seed=3)
        r2 = mc_risk(lambda x: np.zeros(x.shape[0]), task, ABS, 40_000, seed=3)
        assert r2.stderr / r1.stderr == pytest.approx(1 / math.sqrt(2), rel=0.1)

    def test_minimum_sample_size(self):
        with pytest.raises(ValueError):
            mc_risk(_zero_target(), _task(), ABS, 100, seed=1)


class TestDecomposition:
    def test_all_zero_when_everything_is_the_target(self):
        task = _task(noise_sd=0.0)
        out = excess_and_decomposition(task.target, task.target, task, ABS, 2000, seed=4)
        assert out["excess"] == 0.0
        assert out["est_error"] == 0.0
        assert out["approx_error"] == 0.0

    def test_additivity_exact(self):
        rng = np.random.default_rng(5)
        task = _task(noise_sd=0.3)
        model = Network([(rng.normal(size=(3, 1)), rng.normal(size=3)),
                         (rng.normal(size=(1, 3)), rng.normal(size=1))],
                        __import__("holonet.activations", fromlist=["Activation"]).Activation("relu"))
        proxy = lambda x: 0.4 * np.sin(np.pi * x[:, 0])
        out = excess_and_decomposition(model, proxy, task, ABS, 3000, seed=6)
        assert out["excess"] == out["est_error"] + out["approx_error"]


class TestBoundIngredients:
    def test_absolute_loss_hand_values(self):
        # sup |u - y| over the radius-1 ball is 2; cap = 2 + 2*1*(1+1) = 6
        caps = bound_ingredients(1.0, ABS, x_bound=1.0, y_bound=1.0)
        assert caps["loss_sup_ball"] == pytest.approx(2.0)
        assert caps["loss_sup_cap"] == pytest.approx(6.0)
        assert caps["loss_lipschitz_cap"] == 1.0

    def test_sampled_losses_below_cap(self):
        rng = np.random.default_rng(7)
        caps = bound_ingredients(1.0, ABS, x_bound=1.0, y_bound=1.0)
        u = rng.uniform(-1, 1, 5000)
        y = rng.uniform(-1, 1, 5000)
        assert np.max(ABS.value(u, y)) <= caps["loss_sup_cap"]

    def test_unbounded_range_rejected(self):
        with pytest.raises(ValueError):
            bound_ingredients(1.0, ABS, x_bound=np.inf, y_bound=1.0)

    def test_lipschitz_cap_sampled_quotients(self):
        """Network-pair loss differences never exceed K times the sup gap."""
        rng = np.random.default_rng(8)
        from holonet.activations import Activation

        relu = Activation("relu")
        probes = np.linspace(-1, 1, 101)[:, None]
        worst = 0.0
        for _ in range(200):
            def rand_net():
                return Network(
                    [(rng.normal(size=(3, 1)), rng.normal(size=3)),
                     (rng.normal(size=(1, 3)), rng.normal(size=1))], relu, 1.0)
            h1, h2 = rand_net(), rand_net()
            o1, o2 = h1.forward(probes).ravel(), h2.forward(probes).ravel()
            gap = float(np.max(np.abs(o1 - o2)))
            if gap < 1e-9:
                continue
            y = rng.uniform(-1, 1)
            worst = max(worst, float(np.max(np.abs(ABS.value(o1, y) - ABS.value(o2, y)))) / gap)
        assert worst <= ABS.lipschitz * (1 + 1e-9)


class TestDeviationDenominator:
    def test_hand_value_at_quarter_nu(self):
        # with c1 = 1, cap = 1/2 and nu = 1/4, at n = e the log and power
        # factors are 1 and e^0 = 1, so the result is e^2 / (e + 1)
        n = math.e
        val = deviation_denominator(n, 1.0, 0.5, 0.25)
        assert val == pytest.approx(math.e**2 / (math.e + 1.0))

    def test_asymptotically_linear_in_n(self):
        v6 = deviation_denominator(10**6, 2.0, 3.0, 0.3)
        v7 = deviation_denominator(10**7, 2.0, 3.0, 0.3)
        assert v7 / v6 == pytest.approx(10.0, rel=0.01)
        assert v6 == pytest.approx(10**6 / 2.0, rel=0.01)

    def test_positive(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            val = deviation_denominator(
                int(rng.integers(2, 10**6)), rng.uniform(0.01, 10),
                rng.uniform(0.5, 50), rng.uniform(0.05, 0.95))
            assert val > 0

    def test_rejects_nonpositive_constant(self):
        with pytest.raises(ValueError):
            deviation_denominator(100, 0.0, 1.0, 0.5)


class TestPartialSumVariance:
    def test_iid_matches_plain_variance(self):
        task = SupervisedTask(
            process=ProcessSpec("ar1", a=0.0, noise_sd=1.0),
            target=_zero_target(), noise_sd=0.0, clip=Box((-1.0,), (1.0,)))
        model = lambda x: np.zeros(x.shape[0])
        c = estimate_partial_sum_variance(model, task, ABS, 120, 512, seed=10)
        # losses are |clip(N(0,1))|: compare against the直 sampled variance
        x, y = make_supervised(task, 200_000, 999, purpose="var-oracle")
        var = float(np.var(ABS.value(np.zeros_like(y), y)))
        assert c == pytest.approx(var, rel=0.2)

    def test_constant_loss_gives_zero(self):
        task = _task(target=_zero_target(), noise_sd=0.0)
        model = lambda x: np.ones(x.shape[0])  # loss identically 1
        c = estimate_partial_sum_variance(model, task, ABS, 30, 256, seed=11)
        assert c == pytest.approx(0.0, abs=1e-20)

    def test_positive_dependence_inflates(self):
        """AR(1) losses |clip(X_t)| are positively autocorrelated, so the
        partial-sum variance exceeds the i.i.d. value at the same marginal
        (same stationary law N(0, 4/3), clipped)."""
        ident = HolderTarget("ident", 1.5, 3.0, Box((-1.0,), (1.0,)),
                             lambda x: x[:, 0],
                             lambda b, x: np.ones(x.shape[0]) if b == (1,)
                             else x[:, 0] if sum(b) == 0 else np.zeros(x.shape[0]))
        dep = SupervisedTask(
            process=ProcessSpec("ar1", a=0.5, noise_sd=1.0),
            target=ident, noise_sd=0.0, clip=Box((-1.0,), (1.0,)))
        iid = SupervisedTask(
            process=ProcessSpec("ar1", a=0.0, noise_sd=math.sqrt(4.0 / 3.0)),
            target=ident, noise_sd=0.0, clip=Box((-1.0,), (1.0,)))
        # a constant prediction below the label range makes the loss linear
        # in clip(X_t), keeping the full first-order autocorrelation
        model = lambda x: np.full(x.shape[0], -2.0)
        c_dep = estimate_partial_sum_variance(model, dep, ABS, 160, 1024, seed=12)
        c_iid = estimate_partial_sum_variance(model, iid, ABS, 160, 1024, seed=12)
        assert c_dep > c_iid * 1.5

    def test_minimum_replications(self):
        with pytest.raises(ValueError):
            estimate_partial_sum_variance(_zero_target(), _task(), ABS, 10, 100, seed=1)
