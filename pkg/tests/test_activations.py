import numpy as np
import pytest

from holonet.activations import ACTIVATION_KINDS, Activation


def _all_kinds():
    return [
        Activation("relu"),
        Activation("leaky_relu", 0.1),
        Activation("elu", 1.0),
        Activation("isrlu", 1.0),
        Activation("sign_relu", 0.5),
        Activation("sigmoid"),
    ]


class TestFixedSegment:
    def test_identity_on_segment_except_sigmoid(self):
        """Every non-sigmoid kind returns z exactly on [1/4, 3/4]."""
        zs = np.arange(0.25, 0.7501, 0.05)
        for act in _all_kinds():
            if act.kind == "sigmoid":
                continue
            out = act(zs)
            assert np.array_equal(out, zs), act.kind

    def test_sigmoid_fixes_no_segment(self):
        act = Activation("sigmoid")
        zs = np.linspace(0.0, 1.0, 101)
        assert not np.any(act(zs) == zs)
        assert act.fixes_unit_segment is False


class TestTaxonomy:
    def test_piecewise_linear_flags(self):
        assert Activation("relu").is_piecewise_linear
        assert Activation("leaky_relu", 0.3).is_piecewise_linear
        for kind, a in [("elu", 1.0), ("isrlu", 2.0), ("sign_relu", 0.2), ("sigmoid", None)]:
            assert Activation(kind, a).is_locally_quadratic

    def test_parameter_ranges(self):
        with pytest.raises(ValueError):
            Activation("leaky_relu", 1.5)
        with pytest.raises(ValueError):
            Activation("sign_relu", 0.0)
        with pytest.raises(ValueError):
            Activation("elu", -1.0)
        with pytest.raises(ValueError):
            Activation("leaky_relu")  # missing parameter
        with pytest.raises(ValueError):
            Activation("relu", 0.5)  # relu takes none
        with pytest.raises(ValueError):
            Activation("swish")


class TestLipschitz:
    def test_sampled_quotients_below_constant(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-20, 20, 4000)
        y = rng.uniform(-20, 20, 4000)
        keep = np.abs(x - y) > 1e-12
        for act in _all_kinds():
            q = np.abs(act(x[keep]) - act(y[keep])) / np.abs(x[keep] - y[keep])
            assert np.max(q) <= act.lipschitz_constant * (1 + 1e-12), act.kind

    def test_constants(self):
        assert Activation("relu").lipschitz_constant == 1.0
        assert Activation("elu", 2.0).lipschitz_constant == 2.0
        assert Activation("sigmoid").lipschitz_constant == 0.25


class TestDerivative:
    @pytest.mark.parametrize("act", _all_kinds(), ids=lambda a: a.kind)
    def test_matches_central_differences(self, act):
        rng = np.random.default_rng(11)
        z = rng.uniform(-4, 4, 500)
        z = z[np.abs(z) > 1e-3]  # stay away from the kink at 0
        h = 1e-6
        numeric = (act(z + h) - act(z - h)) / (2 * h)
        np.testing.assert_allclose(act.derivative(z), numeric, atol=1e-6, rtol=1e-5)

    def test_kink_conventions(self):
        assert Activation("relu").derivative(0.0) == 0.0
        assert Activation("leaky_relu", 0.1).derivative(0.0) == 0.1


def test_json_round_trip():
    for act in _all_kinds():
        back = Activation.from_json(act.to_json())
        assert back == act


def test_kind_list_is_exhaustive():
    assert set(a.kind for a in _all_kinds()) == set(ACTIVATION_KINDS)
