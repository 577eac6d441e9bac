"""Two-component spinor states, their moments and measurement distributions."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .grid import Grid, check_edges

Basis = Literal["position", "momentum", "population"]

NORM_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class Spinor:
    """Amplitudes of internal states ``|a>`` and ``|b>`` on a shared grid.

    ``psi`` has shape ``(2, n_points)``: row 0 is ``|a>``, row 1 is ``|b>``.
    """

    psi: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != (2, self.grid.n_points):
            raise ValueError(f"spinor array must have shape (2, {self.grid.n_points}), got {psi.shape}")
        object.__setattr__(self, "psi", psi)

    @classmethod
    def from_components(cls, comp_a: np.ndarray, comp_b: np.ndarray, grid: Grid) -> Spinor:
        return cls(np.stack([np.asarray(comp_a, complex), np.asarray(comp_b, complex)]), grid)

    @property
    def comp_a(self) -> np.ndarray:
        return self.psi[0]

    @property
    def comp_b(self) -> np.ndarray:
        return self.psi[1]

    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.grid.dz)

    def populations(self) -> tuple[float, float]:
        pa, pb = np.sum(np.abs(self.psi) ** 2, axis=-1) * self.grid.dz
        return float(pa), float(pb)

    def with_psi(self, psi: np.ndarray) -> Spinor:
        return Spinor(psi, self.grid)


@dataclass(frozen=True)
class Moments:
    mean_z: float
    mean_p: float
    var_z: float
    var_p: float
    cov_zp: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.mean_z, self.mean_p, self.var_z, self.var_p, self.cov_zp)


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability density over measurement outcomes.

    ``mass`` is a density: ``sum(mass) * bin_width == 1``. With ``per_state``
    set it has shape ``(2, n_bins)`` (rows ``a``, ``b``) and the joint outcome
    space is (internal state, bin). The population basis uses bins ``(0, 1)``
    for ``(a, b)`` with unit width.
    """

    basis: str
    per_state: bool
    bins: np.ndarray
    mass: np.ndarray
    bin_width: float

    def total(self) -> float:
        return float(np.sum(self.mass) * self.bin_width)

    def with_mass(self, mass: np.ndarray) -> Distribution:
        return Distribution(self.basis, self.per_state, self.bins, mass, self.bin_width)


def _normalized(grid: Grid, amp: np.ndarray) -> Spinor:
    psi = np.zeros((2, grid.n_points), dtype=complex)
    psi[0] = amp
    psi /= np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dz)
    check_edges(grid, psi, "state preparation")
    return Spinor(psi, grid)


def _check_resolution(grid: Grid, sigma: float) -> None:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    if sigma < 4 * grid.dz:
        raise ValueError(f"sigma={sigma} is under-resolved by dz={grid.dz} (need sigma >= 4 dz)")


def gaussian(grid: Grid, sigma: float, z_center: float = 0.0, p_center: float = 0.0) -> Spinor:
    """Minimum-uncertainty packet ``exp(-z^2/2 sigma^2)/(pi sigma^2)^(1/4)`` in ``|a>``.

    Position variance is ``sigma^2/2`` and momentum variance ``hbar^2/(2 sigma^2)``.
    """
    _check_resolution(grid, sigma)
    x = grid.z - z_center
    amp = np.exp(-(x**2) / (2.0 * sigma**2) + 1j * p_center * x / grid.hbar)
    return _normalized(grid, amp / (np.pi * sigma**2) ** 0.25)


def chirped_gaussian(grid: Grid, sigma: float, z_center: float = 0.0) -> Spinor:
    """Focusing packet ``exp(-(1/4 + i) z^2/2 sigma^2)/[pi (2 sigma)^2]^(1/4)`` in ``|a>``.

    Position variance ``2 sigma^2``, momentum variance ``17 hbar^2/(8 sigma^2)``
    and covariance ``-2 hbar``; negative covariance means the packet narrows
    before it spreads.
    """
    _check_resolution(grid, sigma)
    x = grid.z - z_center
    amp = np.exp(-(0.25 + 1j) * x**2 / (2.0 * sigma**2))
    return _normalized(grid, amp / (np.pi * (2.0 * sigma) ** 2) ** 0.25)


def _require_normalized(state: Spinor) -> None:
    n = state.norm()
    if abs(n - 1.0) > NORM_TOLERANCE:
        raise ValueError(f"state is not normalized (norm = {n:.12g})")


def moments(state: Spinor) -> Moments:
    """First and second moments of the motional state, summed over both components.

    Momentum moments are evaluated in momentum space; the covariance is the
    symmetrized ``Re <(z - <z>)(p - <p>)>``.
    """
    _require_normalized(state)
    grid = state.grid
    psi = state.psi
    rho_z = np.sum(np.abs(psi) ** 2, axis=0) * grid.dz
    mean_z = float(np.sum(rho_z * grid.z))
    var_z = float(np.sum(rho_z * (grid.z - mean_z) ** 2))

    phi = grid.to_momentum(psi)
    rho_p = np.sum(np.abs(phi) ** 2, axis=0) * grid.dp
    p = grid.momenta
    mean_p = float(np.sum(rho_p * p))
    var_p = float(np.sum(rho_p * (p - mean_p) ** 2))

    p_psi = grid.from_momentum(phi * (p - mean_p))
    cov = np.sum(np.conj(psi) * (grid.z - mean_z) * p_psi).real * grid.dz
    return Moments(mean_z, mean_p, var_z, var_p, float(cov))


def measure_distribution(state: Spinor, basis: Basis, per_state: bool = True) -> Distribution:
    """Ideal outcome distribution of a position, momentum or population measurement."""
    grid = state.grid
    psi = state.psi
    if basis == "population":
        pops = np.sum(np.abs(psi) ** 2, axis=-1) * grid.dz
        return Distribution("population", True, np.array([0.0, 1.0]), pops, 1.0)
    if basis == "position":
        dens = np.abs(psi) ** 2
        bins, width = np.asarray(grid.z), grid.dz
    elif basis == "momentum":
        dens = np.abs(grid.to_momentum(psi)[:, grid.sort_index]) ** 2
        bins, width = np.asarray(grid.momenta_sorted), grid.dp
    else:
        raise ValueError(f"unknown basis {basis!r}")
    if not per_state:
        dens = dens.sum(axis=0)
    return Distribution(basis, per_state, bins, dens, width)


def overlap(x: Spinor, y: Spinor) -> complex:
    """Inner product ``<x|y>`` summed over both internal states."""
    if x.grid != y.grid:
        raise ValueError("spinors live on different grids")
    return complex(np.sum(np.conj(x.psi) * y.psi) * x.grid.dz)


def fidelity(x: Spinor, y: Spinor) -> float:
    return abs(overlap(x, y))


def l2_distance(x: Spinor, y: Spinor) -> float:
    if x.grid != y.grid:
        raise ValueError("spinors live on different grids")
    return float(np.sqrt(np.sum(np.abs(x.psi - y.psi) ** 2) * x.grid.dz))


def dump_state(state: Spinor, path) -> None:
    """Write ``z  Re a  Im a  Re b  Im b`` as a whitespace-separated text table."""
    table = np.column_stack(
        [state.grid.z, state.comp_a.real, state.comp_a.imag, state.comp_b.real, state.comp_b.imag]
    )
    np.savetxt(path, table, fmt="%.17g", header="z re_a im_a re_b im_b")


def load_state(path, grid: Grid) -> Spinor:
    table = np.loadtxt(path)
    if table.shape != (grid.n_points, 5) or not np.allclose(table[:, 0], grid.z, rtol=0, atol=1e-9 * grid.length):
        raise ValueError("state dump does not match the grid")
    return Spinor.from_components(table[:, 1] + 1j * table[:, 2], table[:, 3] + 1j * table[:, 4], grid)
