"""Instantaneous internal-state operations: Raman pulses and the readout unitaries."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid, PhysicalParams
from .wavepacket import Spinor


@dataclass(frozen=True)
class PulseSpec:
    """Raman pulse of area ``theta`` and laser phase ``phi``."""

    theta: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not -1e-12 <= self.theta <= 2 * math.pi + 1e-12:
            raise ValueError(f"pulse area must lie in [0, 2 pi], got {self.theta!r}")

    @classmethod
    def splitter(cls, phi: float = 0.0) -> PulseSpec:
        return cls(math.pi / 2, phi)

    @classmethod
    def mirror(cls, phi: float = 0.0) -> PulseSpec:
        return cls(math.pi, phi)


def pulse_array(psi: np.ndarray, grid: Grid, k0: float, theta: float, phi: float) -> np.ndarray:
    kick = np.exp(1j * (k0 * grid.z - phi))
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    a, b = psi[..., 0, :], psi[..., 1, :]
    return np.stack([c * a - 1j * s * np.conj(kick) * b, c * b - 1j * s * kick * a], axis=-2)


def reunite_array(psi: np.ndarray, grid: Grid, k0: float) -> np.ndarray:
    out = psi.copy()
    out[..., 1, :] *= np.exp(-1j * k0 * grid.z)
    return out


def final_bs_array(psi: np.ndarray) -> np.ndarray:
    a, b = psi[..., 0, :], psi[..., 1, :]
    return np.stack([a + b, b - a], axis=-2) / math.sqrt(2.0)


def apply_pulse(state: Spinor, pulse: PulseSpec, params: PhysicalParams = PhysicalParams()) -> Spinor:
    """Beam splitter / mirror ``cos(theta/2) - i sin(theta/2) (|b><a| e^{i(k0 z - phi)} + h.c.)``."""
    return state.with_psi(pulse_array(state.psi, state.grid, params.k0, pulse.theta, pulse.phi))


def apply_momentum_reunite(state: Spinor, params: PhysicalParams = PhysicalParams()) -> Spinor:
    """Remove the recoil of ``|b>``: ``|a><a| + |b><b| e^{-i k0 z}``."""
    return state.with_psi(reunite_array(state.psi, state.grid, params.k0))


def apply_final_bs(state: Spinor) -> Spinor:
    """Momentum-free 50/50 mixer ``(a, b) -> ((a + b)/sqrt2, (b - a)/sqrt2)``."""
    return state.with_psi(final_bs_array(state.psi))
