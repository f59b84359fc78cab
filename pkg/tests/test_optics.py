import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uonn.field import is_unitary
from uonn.optics import (
    PHASE_GENERATOR,
    MZIParams,
    ShiftRuleSpec,
    beam_splitter,
    mzi_from_components,
    mzi_unitary,
    phase_shift_rule_spec,
    phase_shifter,
    wrap_phase,
)

PI = math.pi
phases = st.floats(-20.0, 20.0, allow_nan=False)


def test_beam_splitter_matrix():
    np.testing.assert_allclose(beam_splitter(), (math.sqrt(2) / 2) * np.array([[1, 1j], [1j, 1]]))
    assert is_unitary(beam_splitter())


def test_two_beam_splitters_cross():
    bs = beam_splitter()
    np.testing.assert_allclose(bs @ bs, [[0, 1j], [1j, 0]], atol=1e-15)


@pytest.mark.parametrize(
    "theta, expected",
    [(0.0, np.eye(2)), (PI / 2, np.diag([1j, 1])), (PI, np.diag([-1, 1]))],
)
def test_phase_shifter(theta, expected):
    np.testing.assert_allclose(phase_shifter(theta), expected, atol=1e-15)


def test_phase_shifter_at_quarter_turn_matches_generator_form():
    # U(pi/2) = I - (1 - i) G
    np.testing.assert_allclose(phase_shifter(PI / 2), np.eye(2) - (1 - 1j) * PHASE_GENERATOR, atol=1e-15)


@pytest.mark.parametrize(
    "theta, phi, expected",
    [
        (0.0, 0.0, [[0, 1j], [1j, 0]]),
        (PI, PI, np.eye(2)),
        (PI, 0.0, [[-1, 0], [0, 1]]),
    ],
)
def test_mzi_special_settings(theta, phi, expected):
    np.testing.assert_allclose(mzi_unitary(MZIParams(0, theta, phi)), expected, atol=1e-15)
    np.testing.assert_allclose(mzi_from_components(theta, phi), expected, atol=1e-15)


def test_mzi_from_components_dense_sample(rng):
    for theta, phi in rng.uniform(-2 * PI, 4 * PI, size=(100, 2)):
        np.testing.assert_allclose(
            mzi_from_components(theta, phi), mzi_unitary(MZIParams(0, theta, phi)), atol=1e-12, rtol=0
        )


@settings(max_examples=200, deadline=None)
@given(theta=phases, phi=phases)
def test_mzi_unitary_and_unit_determinant(theta, phi):
    u = mzi_unitary(MZIParams(0, theta, phi))
    assert is_unitary(u, 1e-12)
    assert abs(abs(np.linalg.det(u)) - 1) < 1e-12


@settings(max_examples=100, deadline=None)
@given(theta=phases)
def test_phase_shifter_periodic(theta):
    np.testing.assert_allclose(phase_shifter(theta + 2 * PI), phase_shifter(theta), atol=1e-12)


def test_mzi_params_wrap():
    p = MZIParams(1, -PI / 2, 5 * PI)
    assert p.theta == pytest.approx(3 * PI / 2)
    assert p.phi == pytest.approx(PI)
    assert 0.0 <= wrap_phase(-1e-18) < 2 * PI
    with pytest.raises(ValueError):
        MZIParams(-1, 0.0, 0.0)


class TestShiftRuleSpec:
    def test_phase_shifter_rule(self):
        spec = phase_shift_rule_spec()
        assert spec.a == -1
        assert (spec.e0, spec.e1) == (0.0, 1.0)
        assert spec.r == -0.5
        assert abs(spec.shift) == pytest.approx(PI / 2)

    def test_generator_properties(self):
        g = PHASE_GENERATOR
        np.testing.assert_array_equal(g, g.conj().T)
        np.testing.assert_array_equal(g @ g, g)
        np.testing.assert_array_equal(np.linalg.eigvalsh(g), [0.0, 1.0])

    def test_generator_reproduces_phase_shifter(self):
        # exp(-i a theta G) with a = -1 is diag(e^{i theta}, 1)
        theta = 0.731
        expm = np.diag(np.exp(1j * theta * np.diag(PHASE_GENERATOR)))
        np.testing.assert_allclose(expm, phase_shifter(theta))

    def test_pauli_rule(self):
        spec = ShiftRuleSpec(a=0.5, e0=-1.0, e1=1.0)
        assert spec.r == 0.5
        assert spec.shift == pytest.approx(PI / 2)

    def test_degenerate_generator_rejected(self):
        with pytest.raises(ValueError):
            ShiftRuleSpec(a=0.0, e0=0.0, e1=1.0)
        with pytest.raises(ValueError):
            ShiftRuleSpec(a=1.0, e0=1.0, e1=1.0)
