import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import phase_network, single_mzi_network
from uonn.field import random_field
from uonn.losses import FieldMSE, IntensityMSE, ObservableTarget
from uonn.mesh import RECK, clements_layout
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
    propagate,
    random_network,
)
from uonn.oracles import FDConfig, grad_analytic, grad_loss_analytic, grad_network_fd
from uonn.optics import ShiftRuleSpec, phase_shift_rule_spec
from uonn.psr import (
    PSR,
    CountingForward,
    GradientReport,
    field_gradients,
    grad_field_psr,
    grad_intensity_psr,
    grad_loss_chained,
    grad_loss_intensity_psr,
    shift_rule_general,
)

PI = math.pi
Z1 = Observable.mode(0, 2)
PAULI = ShiftRuleSpec(a=0.5, e0=-1.0, e1=1.0)  # r = 1/2


class TestShiftRuleGeneral:
    def test_cos_stationary(self):
        assert shift_rule_general(math.cos, 0.0, PAULI) == pytest.approx(0.0, abs=1e-15)

    def test_cos_quarter(self):
        assert shift_rule_general(math.cos, PI / 2, PAULI) == pytest.approx(-1.0, abs=1e-15)

    def test_phase_shifter_rule_on_sin2(self):
        f = lambda t: math.sin(t / 2) ** 2
        assert shift_rule_general(f, PI / 2, phase_shift_rule_spec()) == pytest.approx(0.5, abs=1e-15)

    @settings(max_examples=100, deadline=None)
    @given(
        a=st.floats(0.1, 3.0),
        b=st.floats(-2.0, 2.0),
        c=st.floats(-PI, PI),
        theta=st.floats(-10.0, 10.0),
    )
    def test_exact_on_single_harmonics(self, a, b, c, theta):
        # for a generator with eigenvalue gap 1 and scale a, f has frequency a
        spec = ShiftRuleSpec(a=a, e0=0.0, e1=1.0)
        f = lambda t: b * math.cos(a * t + c) + 0.7
        assert shift_rule_general(f, theta, spec) == pytest.approx(-a * b * math.sin(a * theta + c), abs=1e-12)


class TestIntensityRule:
    @pytest.mark.parametrize("theta, expected", [(0.0, 0.0), (PI / 2, 0.5), (PI, 0.0), (3 * PI / 2, -0.5)])
    def test_single_mzi_theta(self, theta, expected):
        report = grad_intensity_psr(single_mzi_network(theta), [1, 0], Z1, [ParamRef(0, 0, THETA)])
        assert report.values()[0] == pytest.approx(expected, abs=1e-15)
        assert report.records[0].n_evals == 2
        assert report.records[0].method == PSR

    @pytest.mark.parametrize("phi", np.linspace(0, 2 * PI, 7))
    def test_single_mzi_phi_has_no_effect(self, phi):
        report = grad_intensity_psr(single_mzi_network(0.9, phi), [1, 0], Z1, [ParamRef(0, 0, PHI)])
        assert report.values()[0] == pytest.approx(0.0, abs=1e-15)

    def test_two_evaluations_per_parameter(self):
        net = random_network(4, 2, seed=3)
        counter = CountingForward()
        report = grad_intensity_psr(net, random_field(4, np.random.default_rng(0)), Observable.mode(1, 4), forward=counter)
        assert counter.calls == 2 * len(net.param_refs()) == 2 * len(report.records)

    def test_rejects_nonlinear_network(self):
        net = Network(2, (MeshLayer(clements_layout(2)), Activation(), MeshLayer(clements_layout(2))))
        with pytest.raises(ModeError, match="grad_loss_chained"):
            grad_intensity_psr(net, [1, 0], Z1)

    def test_threads_give_same_result(self):
        net = random_network(4, 2, seed=9)
        e = random_field(4, np.random.default_rng(1))
        obs = Observable.mode(2, 4)
        serial = grad_intensity_psr(net, e, obs)
        parallel = grad_intensity_psr(net, e, obs, forward=CountingForward(), threads=4)
        np.testing.assert_array_equal(serial.values(), parallel.values())


class TestFieldRule:
    def test_phase_at_zero(self):
        d = grad_field_psr(phase_network(0.0), [1, 0], ParamRef(0, 0, INPUT_PHASE))
        np.testing.assert_allclose(d, [1j, 0], atol=1e-15)

    def test_phase_at_quarter(self):
        d = grad_field_psr(phase_network(PI / 2), [1, 0], ParamRef(0, 0, INPUT_PHASE))
        np.testing.assert_allclose(d, [-1, 0], atol=1e-15)

    def test_untouched_mode(self):
        d = grad_field_psr(phase_network(0.3), [0, 1], ParamRef(0, 0, INPUT_PHASE))
        np.testing.assert_allclose(d, [0, 0], atol=1e-15)

    def test_two_evaluations(self):
        counter = CountingForward()
        grad_field_psr(random_network(3, 1, 2), [1, 0, 0], ParamRef(0, 1, PHI), forward=counter)
        assert counter.calls == 2

    def test_unresolvable_parameter(self):
        with pytest.raises(KeyError):
            grad_field_psr(phase_network(0.0), [1, 0], ParamRef(0, 3, THETA))

    def test_rejects_nonlinear_network(self):
        with pytest.raises(ModeError):
            grad_field_psr(Network(2, (Detection(),)), [1, 0], ParamRef(0, 0, THETA))

    def test_shared_base_matches_single_parameter_rule(self):
        net = random_network(4, 2, seed=5, scheme=RECK)
        e = random_field(4, np.random.default_rng(2))
        report = field_gradients(net, e)
        for rec in report.records:
            np.testing.assert_allclose(rec.value, grad_field_psr(net, e, rec.param), atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 5), seed=st.integers(0, 2**31), k=st.integers(0, 4))
def test_intensity_gradients_sum_to_zero(n, seed, k):
    # total power does not depend on any phase
    net = random_network(n, 1, seed)
    e = random_field(n, np.random.default_rng(seed))
    ref = net.param_refs()[k % len(net.param_refs())]
    total = sum(grad_intensity_psr(net, e, Observable.mode(m, n), [ref]).values()[0] for m in range(n))
    assert abs(total) < 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), k=st.integers(0, 8), turns=st.integers(-3, 3))
def test_gradient_periodic_in_phase(seed, k, turns):
    net = random_network(3, 1, seed)
    ref = net.param_refs()[k]
    e = [1, 0, 0]
    obs = Observable.mode(2, 3)
    moved = net.with_phase(ref, net.get_phase(ref) + 2 * PI * turns)
    a = grad_intensity_psr(net, e, obs, [ref]).values()[0]
    b = grad_intensity_psr(moved, e, obs, [ref]).values()[0]
    assert abs(a - b) < 1e-12


class TestChained:
    def test_field_loss_on_phase(self):
        loss = FieldMSE()
        ref = [ParamRef(0, 0, INPUT_PHASE)]
        at_zero = grad_loss_chained(phase_network(0.0), [1, 0], loss, [1, 0], ref)
        at_quarter = grad_loss_chained(phase_network(PI / 2), [1, 0], loss, [1, 0], ref)
        assert at_zero.values()[0] == pytest.approx(0.0, abs=1e-15)
        assert at_quarter.values()[0] == pytest.approx(2.0, abs=1e-14)

    def test_reduces_to_intensity_rule(self):
        net = random_network(4, 3, seed=21)
        e = random_field(4, np.random.default_rng(3))
        obs = Observable((0.5, -1.0, 0.0, 2.0))
        chained = grad_loss_chained(net, e, ObservableTarget(obs))
        direct = grad_intensity_psr(net, e, obs)
        assert chained.compare(direct) < 1e-10
        assert chained.residuals

    @pytest.mark.parametrize("reinject", ["amplitude", "intensity"])
    @pytest.mark.parametrize("activation", ["modsquare", "identity"])
    def test_nonlinear_network_against_oracles(self, reinject, activation):
        a, b, c = (random_network(3, 1, s).layers[0] for s in (1, 2, 3))
        net = Network(3, (a, Detection(reinject), b, Activation(activation), c, Detection()))
        e = random_field(3, np.random.default_rng(4))
        loss, target = IntensityMSE(), [0.2, 0.5, 0.3]
        psr = grad_loss_chained(net, e, loss, target, threads=2)
        analytic = grad_loss_analytic(net, e, loss, target)
        fd = grad_network_fd(
            lambda n: loss.value(_pre_readout(n, e), target), net, cfg=FDConfig(1e-5)
        )
        assert psr.compare(analytic) < 1e-10
        assert psr.compare(fd) < 1e-7

    def test_intensity_only_rule_matches_chained(self):
        net = random_network(3, 2, seed=13)
        e = random_field(3, np.random.default_rng(5))
        loss, target = IntensityMSE(), [0.1, 0.6, 0.3]
        a = grad_loss_intensity_psr(net, e, loss, target)
        b = grad_loss_chained(net, e, loss, target)
        assert a.compare(b) < 1e-12
        with pytest.raises(TypeError):
            grad_loss_intensity_psr(net, e, FieldMSE(), e)


def _pre_readout(net, e):
    return propagate(net, np.asarray(e, dtype=complex))[-1]


def test_report_records():
    net = phase_network(0.2)
    report = GradientReport(field_gradients(net, [1, 0], [ParamRef(0, 0, INPUT_PHASE)]).records)
    rows = report.to_records()
    assert rows[0]["which"] == INPUT_PHASE
    assert rows[0]["n_evals"] == 2
    assert len(rows[0]["value_im"]) == 2
    real = grad_intensity_psr(single_mzi_network(0.3), [1, 0], Z1).to_records()
    assert "value_im" not in real[0]
