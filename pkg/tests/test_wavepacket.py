import numpy as np
import pytest

from mwgrav.grid import PhysicalParams, make_grid
from mwgrav.propagator import apply_kinetic
from mwgrav.wavepacket import (
    Spinor,
    chirped_gaussian,
    dump_state,
    fidelity,
    gaussian,
    l2_distance,
    load_state,
    measure_distribution,
    moments,
)

NATURAL = PhysicalParams()


def test_gaussian_moments(fast_grid):
    m = moments(gaussian(fast_grid, 10.0))
    assert m.mean_z == pytest.approx(0, abs=1e-12)
    assert m.mean_p == pytest.approx(0, abs=1e-12)
    assert m.var_z == pytest.approx(50.0, rel=1e-10)
    assert m.var_p == pytest.approx(0.005, rel=1e-10)
    assert m.cov_zp == pytest.approx(0, abs=1e-12)


def test_chirped_moments(fast_grid):
    m = moments(chirped_gaussian(fast_grid, 10.0))
    assert m.var_z == pytest.approx(200.0, rel=1e-10)
    assert m.var_p == pytest.approx(17 / 800, rel=1e-8)
    assert m.cov_zp == pytest.approx(-2.0, rel=1e-8)


def test_displaced_packet(fast_grid):
    m = moments(gaussian(fast_grid, 10.0, z_center=20.0, p_center=0.3))
    assert m.mean_z == pytest.approx(20.0, rel=1e-10)
    assert m.mean_p == pytest.approx(0.3, rel=1e-10)


def test_under_resolved_width_rejected(fast_grid):
    with pytest.raises(ValueError):
        gaussian(fast_grid, 2.0)
    with pytest.raises(ValueError):
        chirped_gaussian(fast_grid, -1.0)


def test_unnormalized_state_rejected(fast_grid):
    s = gaussian(fast_grid, 10.0)
    with pytest.raises(ValueError):
        moments(s.with_psi(2 * s.psi))


def test_spinor_shape_checked(fast_grid):
    with pytest.raises(ValueError):
        Spinor(np.zeros((3, fast_grid.n_points)), fast_grid)


@pytest.mark.parametrize("kind", [gaussian, chirped_gaussian])
def test_ballistic_spreading(fast_grid, kind):
    # The covariance enters with coefficient 2t/m.
    s = kind(fast_grid, 10.0)
    m0 = moments(s)
    for t in (50.0, 200.0):
        mt = moments(s.with_psi(apply_kinetic(s.psi, fast_grid, NATURAL, t)))
        expected = m0.var_z + 2 * t * m0.cov_zp + t**2 * m0.var_p
        assert mt.var_z == pytest.approx(expected, rel=1e-9)
        assert mt.cov_zp == pytest.approx(m0.cov_zp + t * m0.var_p, rel=1e-8)


def test_half_coefficient_is_inconsistent(fast_grid):
    s = chirped_gaussian(fast_grid, 10.0)
    m0 = moments(s)
    t = 50.0
    mt = moments(s.with_psi(apply_kinetic(s.psi, fast_grid, NATURAL, t)))
    wrong = m0.var_z + t / 2 * m0.cov_zp + t**2 * m0.var_p
    assert abs(mt.var_z - wrong) > 100


def test_gaussian_spreads_to_250(fast_grid):
    s = gaussian(fast_grid, 10.0)
    mt = moments(s.with_psi(apply_kinetic(s.psi, fast_grid, NATURAL, 200.0)))
    assert mt.var_z == pytest.approx(250.0, rel=1e-9)


@pytest.mark.parametrize("basis", ["population", "position", "momentum"])
def test_distributions_normalized(fast_grid, basis):
    s = gaussian(fast_grid, 10.0)
    psi = s.psi.copy()
    psi[1] = psi[0] * np.exp(1j * fast_grid.z)
    s = s.with_psi(psi / np.sqrt(2))
    d = measure_distribution(s, basis)
    assert np.all(d.mass >= 0)
    assert d.total() == pytest.approx(1.0, abs=1e-10)
    if basis != "population":
        joint = measure_distribution(s, basis, per_state=False)
        assert joint.mass.shape == (fast_grid.n_points,)
        assert joint.total() == pytest.approx(1.0, abs=1e-10)


def test_unknown_basis(fast_grid):
    with pytest.raises(ValueError):
        measure_distribution(gaussian(fast_grid, 10.0), "spin")


def test_dump_round_trip(tmp_path):
    grid = make_grid(256, -80, 80)
    s = chirped_gaussian(grid, 5.0)
    path = tmp_path / "state.txt"
    dump_state(s, path)
    back = load_state(path, grid)
    assert l2_distance(s, back) < 1e-15
    assert fidelity(s, back) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        load_state(path, make_grid(512, -80, 80))
