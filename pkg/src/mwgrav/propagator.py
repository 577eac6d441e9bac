"""Time evolution of spinors: split-step engines and exact factorized propagators.

All array-level helpers accept ``psi`` with shape ``(..., 2, n_points)`` and a
gravity value ``g`` that is either a scalar or an array broadcast against the
leading batch axis, so several perturbed copies of a run can share the FFTs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .grid import Grid, PhysicalParams, check_edges
from .wavepacket import Spinor

DEFAULT_DT = 0.05
PULSE_STEPS = 200
MAX_RABI_STEP = 0.1


@dataclass(frozen=True)
class PotentialSpec:
    """External potential acting identically on both internal states.

    ``linear_gravity`` is ``m g z``; ``harmonic`` is ``m omega^2 (z - z0)^2 / 2``
    plus ``m g z`` while ``gravity_enabled``.
    """

    kind: Literal["none", "linear_gravity", "harmonic"] = "none"
    g: float = 0.0
    omega: float = 0.0
    z0: float = 0.0
    gravity_enabled: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("none", "linear_gravity", "harmonic"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "harmonic" and not self.omega > 0:
            raise ValueError("harmonic potential requires omega > 0")

    def values(self, grid: Grid, params: PhysicalParams, g=None) -> np.ndarray:
        """Potential on the grid; a batched ``g`` gives shape ``(G, 1, n_points)``."""
        z = grid.z
        g = self.g if g is None else g
        v = np.zeros_like(z)
        if self.kind == "harmonic":
            v = 0.5 * params.mass * self.omega**2 * (z - self.z0) ** 2
        if self.kind != "none" and self.gravity_enabled:
            g_arr = np.asarray(g, dtype=float)
            if g_arr.ndim:
                return v + params.mass * g_arr.reshape(-1, 1, 1) * z
            return v + params.mass * float(g_arr) * z
        return v


def _g_column(g) -> np.ndarray | float:
    g_arr = np.asarray(g, dtype=float)
    return g_arr.reshape(-1, 1, 1) if g_arr.ndim else float(g_arr)


def kinetic_phase(grid: Grid, params: PhysicalParams, t: float) -> np.ndarray:
    return np.exp(-1j * grid.momenta**2 * t / (2.0 * params.mass * params.hbar))


def apply_kinetic(psi: np.ndarray, grid: Grid, params: PhysicalParams, t: float) -> np.ndarray:
    if t == 0:
        return psi
    return grid.momentum_phase(psi, kinetic_phase(grid, params, t))


def translate_array(psi: np.ndarray, grid: Grid, shift) -> np.ndarray:
    """``psi(z) -> psi(z - shift)`` via a momentum-space phase."""
    return grid.momentum_phase(psi, np.exp(-1j * grid.momenta * _g_column(shift) / grid.hbar))


class SplitStepper:
    """Strang steps ``K(h/2) V(h) K(h/2)`` with cached phase factors.

    ``potential`` is either a real array broadcastable to the state (scalar
    potential, applied to both components) or a callable ``(psi, h) -> psi``
    for internal-state-coupling potentials.
    """

    def __init__(self, grid: Grid, params: PhysicalParams, dt: float, potential=None):
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        self.grid = grid
        self.params = params
        self.dt = float(dt)
        self.potential = potential
        self._cache: dict[float, tuple[np.ndarray, object]] = {}

    def _factors(self, h: float):
        if h not in self._cache:
            half = kinetic_phase(self.grid, self.params, 0.5 * h)
            if self.potential is None:
                pot = None
            elif callable(self.potential):
                pot = self.potential
            else:
                pot = np.exp(-1j * self.potential * h / self.params.hbar)
            self._cache[h] = (half, pot)
        return self._cache[h]

    def step(self, psi: np.ndarray, h: float | None = None) -> np.ndarray:
        h = self.dt if h is None else h
        half, pot = self._factors(h)
        psi = self.grid.momentum_phase(psi, half)
        if pot is not None:
            psi = pot(psi, h) if callable(pot) else psi * pot
        return self.grid.momentum_phase(psi, half)

    def split(self, duration: float) -> tuple[int, float]:
        """Number of full steps and the leftover partial step for ``duration``."""
        n = int(math.floor(duration / self.dt * (1 + 1e-12)))
        rest = duration - n * self.dt
        if rest <= 1e-12 * self.dt:
            rest = 0.0
        return n, rest

    def run(self, psi: np.ndarray, duration: float) -> np.ndarray:
        if duration < 0:
            raise ValueError("duration must be non-negative")
        n, rest = self.split(duration)
        for _ in range(n):
            psi = self.step(psi)
        if rest:
            psi = self.step(psi, rest)
        return psi


def evolve_split_step(
    state: Spinor,
    duration: float,
    pot: PotentialSpec = PotentialSpec(),
    dt: float = DEFAULT_DT,
    params: PhysicalParams = PhysicalParams(),
    check: bool = True,
) -> Spinor:
    """Strang-split evolution under ``p^2/2m + V(z)``.

    ``duration`` is covered by whole steps of ``dt`` plus one final partial
    step for any remainder.
    """
    grid = state.grid
    stepper = SplitStepper(grid, params, dt, pot.values(grid, params) if pot.kind != "none" else None)
    psi = stepper.run(state.psi, duration)
    if check:
        check_edges(grid, psi, "split-step evolution")
    return state.with_psi(psi)


def g0_generator_array(psi: np.ndarray, grid: Grid, params: PhysicalParams, strength, T: float) -> np.ndarray:
    """Apply ``exp(-i s G0(T))`` with ``G0(T) = (T/hbar)(T p/2 + m z)``.

    Factorized as position phase x translation x the scalar commutator phase
    ``exp(i m s^2 T^3 / 4 hbar)``.
    """
    s = _g_column(strength)
    hbar, m = params.hbar, params.mass
    psi = translate_array(psi, grid, s * T**2 / 2.0)
    psi = psi * np.exp(-1j * s * T * m * grid.z / hbar)
    return psi * np.exp(1j * m * s**2 * T**3 / (4.0 * hbar))


def ug_analytic_array(psi: np.ndarray, grid: Grid, params: PhysicalParams, T: float, g) -> np.ndarray:
    """Exact free fall ``exp[-i T (p^2/2m + m g z)/hbar]`` including its global phase."""
    if T == 0:
        return psi
    g_col = _g_column(g)
    psi = g0_generator_array(psi, grid, params, g, T)
    psi = psi * np.exp(1j * params.mass * g_col**2 * T**3 / (12.0 * params.hbar))
    return apply_kinetic(psi, grid, params, T)


def apply_g0_generator(state: Spinor, strength: float, T: float, params: PhysicalParams = PhysicalParams()) -> Spinor:
    return state.with_psi(g0_generator_array(state.psi, state.grid, params, strength, T))


def apply_ug_analytic(
    state: Spinor, T: float, g: float, params: PhysicalParams = PhysicalParams(), check: bool = True
) -> Spinor:
    if T < 0:
        raise ValueError("T must be non-negative")
    psi = ug_analytic_array(state.psi, state.grid, params, T, g)
    if check:
        check_edges(state.grid, psi, "free fall")
    return state.with_psi(psi)


def translate(state: Spinor, shift: float) -> Spinor:
    return state.with_psi(translate_array(state.psi, state.grid, shift))


def raman_coupling(grid: Grid, params: PhysicalParams, omega_rabi: float, delta: float, phi: float, g=0.0):
    """Exact per-point exponential of the internal Hamiltonian of a Raman pulse.

    The 2x2 block ``[[0, W*], [W, -delta]] + m g z/hbar`` with
    ``W = (Omega/2) exp(i(k0 z - phi))`` is exponentiated in closed form.
    Returns a callable ``(psi, h) -> psi`` for :class:`SplitStepper`.
    """
    theta = params.k0 * grid.z - phi
    fwd = 0.5 * omega_rabi * np.exp(1j * theta)
    bwd = np.conj(fwd)
    grav = params.mass * _g_column(g) * grid.z / params.hbar
    r = 0.5 * math.hypot(delta, omega_rabi)

    def apply(psi: np.ndarray, h: float) -> np.ndarray:
        c = math.cos(r * h)
        s = math.sin(r * h) / r if r > 0 else h
        common = np.exp(-1j * (-0.5 * delta + grav) * h)
        a, b = psi[..., 0, :], psi[..., 1, :]
        new_a = (c - 0.5j * s * delta) * a - 1j * s * bwd * b
        new_b = -1j * s * fwd * a + (c + 0.5j * s * delta) * b
        return np.stack([new_a, new_b], axis=-2) * common

    return apply


def hbs_array(
    psi: np.ndarray,
    grid: Grid,
    params: PhysicalParams,
    *,
    pulse_area: float,
    delta_t: float,
    phi: float = 0.0,
    delta: float | None = None,
    dt: float | None = None,
    g=0.0,
) -> np.ndarray:
    if delta_t < 0:
        raise ValueError("delta_t must be non-negative")
    if delta_t == 0:
        if pulse_area != 0:
            raise ValueError("a nonzero pulse area needs a nonzero duration")
        return psi
    omega_rabi = pulse_area / delta_t
    delta = params.recoil_detuning if delta is None else delta
    dt = delta_t / PULSE_STEPS if dt is None else dt
    if abs(omega_rabi) * dt > MAX_RABI_STEP:
        raise ValueError(f"step too coarse: Omega*dt = {abs(omega_rabi) * dt:.3g} rad > {MAX_RABI_STEP}")
    stepper = SplitStepper(grid, params, dt, raman_coupling(grid, params, omega_rabi, delta, phi, g))
    return stepper.run(psi, delta_t)


def evolve_hbs(
    state: Spinor,
    *,
    pulse_area: float,
    delta_t: float,
    phi: float = 0.0,
    omega_rabi: float | None = None,
    delta: float | None = None,
    dt: float | None = None,
    g: float = 0.0,
    params: PhysicalParams = PhysicalParams(),
    check: bool = True,
) -> Spinor:
    """Finite-duration Raman pulse including motion (and gravity) during the pulse.

    ``delta`` defaults to the two-photon resonance ``hbar k0^2/2m`` and ``dt``
    to ``delta_t/200``.
    """
    if omega_rabi is not None and not math.isclose(omega_rabi * delta_t, pulse_area, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError("omega_rabi * delta_t must equal pulse_area")
    psi = hbs_array(
        state.psi, state.grid, params, pulse_area=pulse_area, delta_t=delta_t, phi=phi, delta=delta, dt=dt, g=g
    )
    if check:
        check_edges(state.grid, psi, "finite pulse")
    return state.with_psi(psi)
