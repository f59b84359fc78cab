import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import phase_network, single_mzi_network
from uonn.field import DimensionError, power, random_field
from uonn.mesh import CLEMENTS, RECK, clements_layout, mesh_unitary
from uonn.network import (
    INPUT_PHASE,
    PHI,
    THETA,
    Activation,
    Detection,
    MeshLayer,
    ModeError,
    Network,
    Observable,
    ParamRef,
    forward_field,
    forward_intensity,
    identity_network,
    measure_observable,
    network_from_dict,
    network_to_dict,
    random_network,
)

PI = math.pi
S = 1 / math.sqrt(2)


class TestForwardField:
    def test_empty_network(self):
        np.testing.assert_array_equal(forward_field(Network(2), [S, 1j * S]), [S, 1j * S])

    @pytest.mark.parametrize("theta", [0.0, 0.4, PI / 2, 3.0])
    def test_phase_on_mode_0(self, theta):
        np.testing.assert_allclose(forward_field(phase_network(theta), [1, 0]), [np.exp(1j * theta), 0], atol=1e-15)

    def test_single_mzi_cross(self):
        np.testing.assert_allclose(forward_field(single_mzi_network(0.0), [1, 0]), [0, 1j], atol=1e-15)

    def test_detection_is_mode_error(self):
        net = Network(2, (MeshLayer(clements_layout(2)), Detection()))
        with pytest.raises(ModeError):
            forward_field(net, [1, 0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            forward_field(identity_network(3), [1, 0])

    def test_unnormalised_input_warns(self):
        with pytest.warns(UserWarning, match="power"):
            forward_field(identity_network(2), [1, 1])

    def test_matches_network_unitary(self, rng):
        net = random_network(5, 3, seed=4)
        e = random_field(5, rng)
        np.testing.assert_allclose(forward_field(net, e), net.unitary() @ e, atol=1e-13)


class TestForwardIntensity:
    @pytest.mark.parametrize(
        "theta, expected", [(0.0, [0, 1]), (PI / 2, [0.5, 0.5]), (PI, [1, 0])]
    )
    def test_single_mzi(self, theta, expected):
        np.testing.assert_allclose(forward_intensity(single_mzi_network(theta), [1, 0]), expected, atol=1e-15)

    def test_closed_form_over_theta(self):
        for theta in np.linspace(0, 2 * PI, 17):
            got = forward_intensity(single_mzi_network(theta, phi=1.3), [1, 0])
            assert got[0] == pytest.approx((1 - math.cos(theta)) / 2, abs=1e-14)

    def test_trailing_detection_is_readout(self, rng):
        base = random_network(3, 2, seed=1)
        net = Network(3, base.layers + (Detection(),))
        e = random_field(3, rng)
        np.testing.assert_allclose(forward_intensity(net, e), forward_intensity(base, e), atol=1e-15)

    def test_amplitude_detection_preserves_power(self, rng):
        a, b = random_network(3, 1, 1), random_network(3, 1, 2)
        net = Network(3, a.layers + (Detection(), Activation("identity")) + b.layers)
        assert sum(forward_intensity(net, random_field(3, rng))) == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            forward_intensity(identity_network(2), [1, 0, 0])


class TestObservable:
    def test_examples(self):
        assert measure_observable([0, 1j], Observable.mode(0, 2)) == 0.0
        assert measure_observable([S, 1j * S], Observable((1.0, -1.0))) == pytest.approx(0.0, abs=1e-16)
        assert measure_observable([0, 1j], Observable.mode(1, 2)) == 1.0

    def test_equals_trace_with_density_matrix(self, rng):
        e = random_field(4, rng)
        o = np.array([0.3, -1.0, 2.0, 0.5])
        rho = np.outer(e, e.conj())
        assert measure_observable(e, Observable(tuple(o))) == pytest.approx(np.trace(np.diag(o) @ rho).real)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            measure_observable([1, 0, 0], Observable.mode(0, 2))

    def test_bad_diagonal(self):
        with pytest.raises(ValueError):
            Observable((1.0, float("nan")))


class TestParameters:
    def test_param_refs_layout(self):
        net = Network(3, (MeshLayer(clements_layout(3)), Activation(), MeshLayer(clements_layout(3))))
        refs = net.param_refs()
        assert len(refs) == 2 * (3 * 2 + 3)
        assert {r.layer for r in refs} == {0, 2}
        assert str(refs[0]) == "L0.theta[0]"
        assert refs[1].which == PHI
        assert refs[6].which == INPUT_PHASE

    def test_with_phase_and_get_phase(self):
        net = identity_network(3)
        ref = ParamRef(0, 1, THETA)
        moved = net.with_phase(ref, 1.25)
        assert moved.get_phase(ref) == pytest.approx(1.25)
        assert net.get_phase(ref) == pytest.approx(PI)
        np.testing.assert_allclose(moved.shifted(ref, 2 * PI).parameters(), moved.parameters(), atol=1e-12)

    def test_unresolvable_refs(self):
        net = Network(2, (MeshLayer(clements_layout(2)), Activation()))
        for ref in (ParamRef(1, 0, THETA), ParamRef(0, 5, THETA), ParamRef(0, 0, "gamma"), ParamRef(3, 0, PHI)):
            with pytest.raises(KeyError):
                net.get_phase(ref)

    def test_unitary_needs_unitary_only(self):
        with pytest.raises(ModeError):
            Network(2, (Detection(),)).unitary()

    def test_layer_size_mismatch(self):
        with pytest.raises(ValueError):
            Network(3, (MeshLayer(clements_layout(2)),))

    def test_bad_layer_options(self):
        with pytest.raises(ValueError):
            Activation("relu")
        with pytest.raises(ValueError):
            Detection("phase")


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(2, 6),
    depth=st.integers(1, 3),
    seed=st.integers(0, 2**31),
    scheme=st.sampled_from([CLEMENTS, RECK]),
)
def test_forward_is_unitary_and_linear(n, depth, seed, scheme):
    net = random_network(n, depth, seed, scheme)
    rng = np.random.default_rng(seed)
    a, b = random_field(n, rng), random_field(n, rng)
    out_a, out_b = forward_field(net, a), forward_field(net, b)
    assert abs(power(out_a) - 1.0) < 1e-10
    c = complex(*rng.normal(size=2))
    combo = (a + c * b) / np.linalg.norm(a + c * b)
    np.testing.assert_allclose(forward_field(net, combo), (out_a + c * out_b) / np.linalg.norm(a + c * b), atol=1e-12)


def test_network_dict_round_trip(rng):
    a = random_network(3, 1, 8)
    net = Network(3, a.layers + (Detection("intensity"), Activation("modsquare"), MeshLayer(clements_layout(3)), Detection()))
    again = network_from_dict(network_to_dict(net))
    assert [type(x) for x in again.layers] == [type(x) for x in net.layers]
    assert again.layers[1].reinject == "intensity"
    np.testing.assert_allclose(again.parameters(), net.parameters(), atol=1e-12, rtol=0)
    np.testing.assert_allclose(mesh_unitary(again.layers[0].layout), mesh_unitary(a.layers[0].layout), atol=1e-12)
    with pytest.raises(ValueError):
        network_from_dict({"n_modes": 2, "layers": [{"kind": "lens"}]})
    with pytest.raises(ValueError):
        network_from_dict({"layers": []})
