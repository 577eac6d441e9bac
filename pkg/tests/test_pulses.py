import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mwgrav.grid import make_grid
from mwgrav.pulses import PulseSpec, apply_final_bs, apply_momentum_reunite, apply_pulse
from mwgrav.wavepacket import Spinor, gaussian, moments

GRID = make_grid(512, -64, 64)


def test_splitter_halves_populations():
    out = apply_pulse(gaussian(GRID, 5.0), PulseSpec.splitter())
    pa, pb = out.populations()
    assert pa == pytest.approx(0.5, abs=1e-12)
    assert pb == pytest.approx(0.5, abs=1e-12)


def test_mirror_transfers_and_kicks():
    out = apply_pulse(gaussian(GRID, 5.0), PulseSpec.mirror())
    assert out.populations()[1] == pytest.approx(1.0, abs=1e-12)
    assert moments(out).mean_p == pytest.approx(1.0, abs=1e-10)


def test_pulse_phase_enters_coupling():
    s = gaussian(GRID, 5.0)
    out = apply_pulse(s, PulseSpec(math.pi, 0.7))
    ratio = out.comp_b / (s.comp_a * np.exp(1j * GRID.z))
    mask = np.abs(s.comp_a) > 1e-3
    assert np.allclose(ratio[mask], -1j * np.exp(-0.7j))


def test_area_range_enforced():
    with pytest.raises(ValueError):
        PulseSpec(-0.1)
    with pytest.raises(ValueError):
        PulseSpec(7.0)
    PulseSpec(2 * math.pi)


def _random_spinor(seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=(2, GRID.n_points)) + 1j * rng.normal(size=(2, GRID.n_points))
    return Spinor(psi / np.sqrt(np.sum(np.abs(psi) ** 2) * GRID.dz), GRID)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2 * math.pi), st.floats(-math.pi, math.pi))
def test_pulse_unitarity(seed, theta, phi):
    s = _random_spinor(seed)
    out = apply_pulse(s, PulseSpec(theta, phi))
    assert out.norm() == pytest.approx(1.0, abs=1e-12)
    back = apply_pulse(out, PulseSpec(2 * math.pi - theta, phi))
    # U(theta) U(2 pi - theta) = U(2 pi) = -1
    assert np.allclose(back.psi, -s.psi, atol=1e-12)


def test_reunite_removes_recoil():
    kicked = apply_pulse(gaussian(GRID, 5.0), PulseSpec.mirror())
    assert moments(apply_momentum_reunite(kicked)).mean_p == pytest.approx(0.0, abs=1e-10)


def test_final_mixer():
    s = apply_pulse(gaussian(GRID, 5.0), PulseSpec.splitter())
    twice = apply_final_bs(apply_final_bs(s))
    assert np.allclose(twice.comp_a, s.comp_b)
    assert np.allclose(twice.comp_b, -s.comp_a)
    assert apply_final_bs(s).norm() == pytest.approx(1.0, abs=1e-12)
