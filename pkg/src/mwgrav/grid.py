"""Physical parameters, unit conversions and the periodic spatial/momentum lattice."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

#: Norm fraction allowed in the outer strips of the domain before a run is invalid.
EDGE_TOLERANCE = 1e-10
EDGE_FRACTION = 0.05


class NumericalValidityError(RuntimeError):
    """A propagation left the regime where the discretization is trustworthy."""


@dataclass(frozen=True)
class PhysicalParams:
    """Constants entering the Hamiltonian.

    Natural units (``hbar = mass = k0 = 1``) are the default, so lengths are in
    ``1/k0`` and times in ``mass / (hbar k0**2)``.
    """

    hbar: float = 1.0
    mass: float = 1.0
    k0: float = 1.0
    g_offset: float = 0.0

    def __post_init__(self) -> None:
        for name in ("hbar", "mass", "k0"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be positive and finite, got {value!r}")

    @property
    def length_unit(self) -> float:
        return 1.0 / self.k0

    @property
    def time_unit(self) -> float:
        return self.mass / (self.hbar * self.k0**2)

    @property
    def recoil_detuning(self) -> float:
        """Two-photon resonance ``hbar k0^2 / (2 m)`` (angular frequency)."""
        return self.hbar * self.k0**2 / (2.0 * self.mass)


def natural_units(k0_si: float, m_si: float, hbar_si: float) -> tuple[float, float]:
    """Return the length and time scales ``(1/k0, m/(hbar k0^2))`` in SI."""
    for name, value in (("k0_si", k0_si), ("m_si", m_si), ("hbar_si", hbar_si)):
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value!r}")
    return 1.0 / k0_si, m_si / (hbar_si * k0_si**2)


@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on ``[z_min, z_max)`` with its conjugate momenta.

    ``momenta`` is in FFT ordering; ``momenta_sorted`` and ``sort_index`` give
    the monotone ordering used for reported distributions.
    """

    n_points: int
    z_min: float
    z_max: float
    hbar: float = 1.0

    def __post_init__(self) -> None:
        n = self.n_points
        if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {n!r}")
        if n & (n - 1):
            raise ValueError(f"n_points must be a power of two, got {n}")
        if not self.z_max > self.z_min:
            raise ValueError(f"z_max ({self.z_max}) must exceed z_min ({self.z_min})")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def length(self) -> float:
        return self.z_max - self.z_min

    @property
    def dz(self) -> float:
        return self.length / self.n_points

    @property
    def dp(self) -> float:
        return 2.0 * np.pi * self.hbar / self.length

    @property
    def p_max(self) -> float:
        """Nyquist momentum ``pi hbar / dz``."""
        return np.pi * self.hbar / self.dz

    @cached_property
    def z(self) -> np.ndarray:
        z = self.z_min + self.dz * np.arange(self.n_points)
        z.flags.writeable = False
        return z

    @cached_property
    def momenta(self) -> np.ndarray:
        p = 2.0 * np.pi * self.hbar * sfft.fftfreq(self.n_points, d=self.dz)
        p.flags.writeable = False
        return p

    @cached_property
    def sort_index(self) -> np.ndarray:
        idx = np.argsort(self.momenta, kind="stable")
        idx.flags.writeable = False
        return idx

    @cached_property
    def momenta_sorted(self) -> np.ndarray:
        p = self.momenta[self.sort_index]
        p.flags.writeable = False
        return p

    def to_momentum(self, psi: np.ndarray) -> np.ndarray:
        """Momentum-space amplitude normalized so that ``sum |phi|^2 dp`` is the norm.

        The global phase from the lattice origin is dropped; only densities
        and relative phases are consumed downstream.
        """
        return sfft.fft(psi, axis=-1) * (self.dz / np.sqrt(2.0 * np.pi * self.hbar))

    def from_momentum(self, phi: np.ndarray) -> np.ndarray:
        return sfft.ifft(phi, axis=-1) * (np.sqrt(2.0 * np.pi * self.hbar) / self.dz)

    def momentum_phase(self, psi: np.ndarray, phase: np.ndarray) -> np.ndarray:
        """Multiply by a diagonal momentum-space operator (FFT ordering)."""
        return sfft.ifft(sfft.fft(psi, axis=-1) * phase, axis=-1)

    def edge_fraction(self, psi: np.ndarray) -> float:
        """Largest fraction of the norm found in the outer 5% strips of the domain.

        ``psi`` may carry leading batch/component axes; components are summed
        and the worst batch entry is reported.
        """
        dens = np.abs(psi) ** 2
        if dens.ndim == 1:
            dens = dens[None, :]
        else:
            dens = dens.sum(axis=-2).reshape(-1, self.n_points)
        width = max(1, int(round(EDGE_FRACTION * self.n_points)))
        outer = dens[:, :width].sum(axis=-1) + dens[:, -width:].sum(axis=-1)
        total = dens.sum(axis=-1)
        return float(np.max(outer / total))


def make_grid(n_points: int, z_min: float, z_max: float, hbar: float = 1.0) -> Grid:
    return Grid(n_points=n_points, z_min=float(z_min), z_max=float(z_max), hbar=float(hbar))


def production_grid(hbar: float = 1.0) -> Grid:
    """8192 points over ``[-512, 768]`` natural lengths."""
    return make_grid(8192, -512.0, 768.0, hbar=hbar)


def check_edges(grid: Grid, psi: np.ndarray, where: str = "") -> float:
    frac = grid.edge_fraction(psi)
    if frac > EDGE_TOLERANCE:
        loc = f" after {where}" if where else ""
        raise NumericalValidityError(
            f"edge density {frac:.3e} exceeds {EDGE_TOLERANCE:.0e}{loc}; enlarge the domain"
        )
    return frac
