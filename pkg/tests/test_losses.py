import numpy as np
import pytest

from holonet.losses import LOSS_KINDS, Loss


def _working_losses():
    return [
        Loss.make("absolute"),
        Loss.make("squared", output_cap=1.0, y_bound=1.0),
        Loss.make("huber", delta=0.5),
        Loss.make("hinge"),
        Loss.make("logistic"),
    ]


class TestValues:
    def test_absolute(self):
        loss = Loss.make("absolute")
        np.testing.assert_array_equal(loss.value(np.array([1.0, -1.0]), np.array([0.0, 1.0])),
                                      [1.0, 2.0])

    def test_squared(self):
        loss = Loss.make("squared", output_cap=2.0, y_bound=1.0)
        assert loss.value(3.0, 1.0) == 4.0
        assert loss.lipschitz == 2.0 * (2.0 + 1.0)

    def test_huber_branches(self):
        loss = Loss.make("huber", delta=1.0)
        assert loss.value(0.5, 0.0) == pytest.approx(0.125)  # quadratic branch
        assert loss.value(3.0, 0.0) == pytest.approx(2.5)  # linear branch

    def test_hinge(self):
        loss = Loss.make("hinge")
        assert loss.value(0.5, 1.0) == pytest.approx(0.5)
        assert loss.value(2.0, 1.0) == 0.0

    def test_logistic_stable(self):
        loss = Loss.make("logistic")
        assert loss.value(50.0, 1.0) == pytest.approx(0.0, abs=1e-20)
        assert loss.value(-50.0, 1.0) == pytest.approx(50.0, rel=1e-12)

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        u = rng.normal(size=1000)
        y = rng.choice([-1.0, 1.0], size=1000)
        for loss in _working_losses():
            assert np.all(loss.value(u, y) >= 0)


class TestGradients:
    @pytest.mark.parametrize("loss", _working_losses(), ids=lambda l: l.kind)
    def test_matches_central_differences(self, loss):
        rng = np.random.default_rng(1)
        u = rng.uniform(-0.9, 0.9, 300)
        y = rng.choice([-1.0, 1.0], 300) if loss.kind in ("hinge", "logistic") \
            else rng.uniform(-0.9, 0.9, 300)
        # stay away from the loss kinks
        if loss.kind == "absolute":
            keep = np.abs(u - y) > 1e-3
        elif loss.kind == "hinge":
            keep = np.abs(1.0 - y * u) > 1e-3
        else:
            keep = np.ones_like(u, dtype=bool)
        u, y = u[keep], y[keep]
        h = 1e-7
        numeric = (loss.value(u + h, y) - loss.value(u - h, y)) / (2 * h)
        np.testing.assert_allclose(loss.grad(u, y), numeric, atol=1e-6)

    def test_kink_conventions(self):
        assert Loss.make("absolute").grad(1.0, 1.0) == 0.0
        assert Loss.make("hinge").grad(1.0, 1.0) == 0.0  # margin exactly 1


class TestLipschitz:
    @pytest.mark.parametrize("loss", _working_losses(), ids=lambda l: l.kind)
    def test_sampled_joint_quotient_on_working_range(self, loss):
        rng = np.random.default_rng(2)
        f_cap = 1.0
        u1 = rng.uniform(-f_cap, f_cap, 3000)
        u2 = rng.uniform(-f_cap, f_cap, 3000)
        if loss.kind in ("hinge", "logistic"):
            y1 = rng.choice([-1.0, 1.0], 3000)
            y2 = y1.copy()  # classification labels are compared same-class
        else:
            y1 = rng.uniform(-1, 1, 3000)
            y2 = rng.uniform(-1, 1, 3000)
        num = np.abs(loss.value(u1, y1) - loss.value(u2, y2))
        den = np.abs(u1 - u2) + np.abs(y1 - y2)
        keep = den > 1e-12
        assert np.max(num[keep] / den[keep]) <= loss.lipschitz * (1 + 1e-9)


def test_validation():
    with pytest.raises(ValueError):
        Loss.make("quantile")
    with pytest.raises(ValueError):
        Loss.make("huber", delta=0.0)
    with pytest.raises(ValueError):
        Loss.make("squared")  # needs range information
    assert set(l.kind for l in _working_losses()) == set(LOSS_KINDS)


def test_json_round_trip():
    for loss in _working_losses():
        assert Loss.from_json(loss.to_json()) == loss
