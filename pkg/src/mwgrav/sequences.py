"""Interferometer sequences, named presets and Fisher-information scans."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from . import fisher
from .grid import Grid, NumericalValidityError, PhysicalParams, check_edges, production_grid
from .propagator import PotentialSpec, SplitStepper, apply_kinetic, hbs_array, ug_analytic_array
from .pulses import PulseSpec, final_bs_array, pulse_array, reunite_array
from .wavepacket import Moments, Spinor, chirped_gaussian, gaussian, moments

NATURAL = PhysicalParams()
HALF_PI = math.pi / 2
KC_PHASES = (0.0, 0.0, HALF_PI)
NORM_DRIFT_LIMIT = 1e-8
QCRB_SLACK = 2e-2
TRAP_STEP_FACTOR = 0.01
WORKERS_ENV = "MWGRAV_WORKERS"

COLUMNS = ("FQ_numeric", "FQ_analytic", "FC_pop", "FC_pos", "FC_mom")
BASIS_COLUMNS = {"population": "FC_pop", "position": "FC_pos", "momentum": "FC_mom"}
ALL_BASES = ("qfi", "population", "position", "momentum")


# -- events -------------------------------------------------------------------


@dataclass(frozen=True)
class Free:
    """Free flight; ``gravity=None`` follows the current gravity switch."""

    duration: float
    gravity: bool | None = None


@dataclass(frozen=True)
class Pulse:
    spec: PulseSpec


@dataclass(frozen=True)
class FinitePulse:
    """Raman pulse of area ``theta`` lasting ``delta_t`` (``dt`` defaults to ``delta_t/200``).

    The pulse Hamiltonian has no gravity term unless ``gravity`` is set.
    """

    theta: float
    phi: float
    delta_t: float
    dt: float | None = None
    delta: float | None = None
    gravity: bool = False


@dataclass(frozen=True)
class Trap:
    """Harmonic segment ``m omega^2 (z - z0)^2 / 2``; ``dt`` defaults to ``0.01/omega``."""

    omega: float
    z0: float
    duration: float
    dt: float | None = None

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else TRAP_STEP_FACTOR / self.omega


@dataclass(frozen=True)
class Reunite:
    pass


@dataclass(frozen=True)
class FinalBS:
    pass


@dataclass(frozen=True)
class GravityOff:
    pass


Event = Union[Free, Pulse, FinitePulse, Trap, Reunite, FinalBS, GravityOff]


@dataclass(frozen=True)
class SequenceSpec:
    """Ordered events applied to an initial spinor.

    ``free_method`` selects the propagator for free flight: the exact
    factorized one (``"analytic"``) or Strang steps of ``free_dt``.
    """

    events: tuple
    params: PhysicalParams = NATURAL
    name: str = ""
    free_method: str = "analytic"
    free_dt: float = 0.05

    def __post_init__(self) -> None:
        object.__setattr__(self, "events", tuple(self.events))
        for ev in self.events:
            dur = getattr(ev, "duration", getattr(ev, "delta_t", 0.0))
            if dur < 0:
                raise ValueError(f"negative duration in {ev!r}")
        if self.free_method not in ("analytic", "split_step"):
            raise ValueError(f"unknown free_method {self.free_method!r}")

    def _durations(self):
        gravity = True
        for ev in self.events:
            if isinstance(ev, GravityOff):
                gravity = False
            elif isinstance(ev, Free):
                yield ev.duration, gravity if ev.gravity is None else ev.gravity
            elif isinstance(ev, FinitePulse):
                yield ev.delta_t, gravity and ev.gravity
            elif isinstance(ev, Trap):
                yield ev.duration, gravity

    @property
    def total_time(self) -> float:
        return float(sum(d for d, _ in self._durations()))

    @property
    def gravity_time(self) -> float:
        return float(sum(d for d, on in self._durations() if on))

    def with_events(self, events: Iterable[Event], name: str | None = None) -> SequenceSpec:
        return SequenceSpec(tuple(events), self.params, self.name if name is None else name,
                            self.free_method, self.free_dt)


def _interrogation(t_pi: float, t: float) -> tuple[float, float]:
    if t < 0:
        raise ValueError("t must be non-negative")
    return (t, 0.0) if t <= t_pi else (t_pi, t - t_pi)


def build_kc(t_pi: float, t: float, params: PhysicalParams = NATURAL, phases=KC_PHASES) -> SequenceSpec:
    """Splitter, ``T1``, mirror (only once ``t > t_pi``), ``T2``, final splitter."""
    T1, T2 = _interrogation(t_pi, t)
    phi1, phi2, phi3 = phases
    events: list[Event] = [Pulse(PulseSpec.splitter(phi1)), Free(T1)]
    if t > t_pi:
        events += [Pulse(PulseSpec.mirror(phi2)), Free(T2)]
    events.append(Pulse(PulseSpec.splitter(phi3)))
    return SequenceSpec(tuple(events), params, "kc")


def build_ramsey(t: float, params: PhysicalParams = NATURAL, phases=(0.0, HALF_PI)) -> SequenceSpec:
    if t < 0:
        raise ValueError("t must be non-negative")
    phi1, phi3 = phases
    events = (Pulse(PulseSpec.splitter(phi1)), Free(t), Pulse(PulseSpec.splitter(phi3)))
    return SequenceSpec(events, params, "ramsey")


def trap_center(t_pi: float, params: PhysicalParams = NATURAL) -> float:
    return params.hbar * params.k0 * t_pi / params.mass


def default_trap_omega(t_pi: float) -> float:
    return 3.0 * math.pi / (2.0 * t_pi)


def _trap_prefix(t_pi: float, params: PhysicalParams) -> list[Event]:
    return [
        Pulse(PulseSpec.splitter(KC_PHASES[0])),
        Free(t_pi),
        Pulse(PulseSpec.mirror(KC_PHASES[1])),
        Free(t_pi),
        Reunite(),
        GravityOff(),
    ]


def build_trap_scheme(
    t_pi: float, omega: float, t: float, params: PhysicalParams = NATURAL, trap_dt: float | None = None
) -> SequenceSpec:
    """KC to ``2 t_pi``, recoil removal, gravity off, harmonic hold, 50/50 readout.

    Before ``2 t_pi`` this is the plain KC sequence.
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    if t < 2 * t_pi:
        seq = build_kc(t_pi, t, params)
        return seq.with_events(seq.events, "trap")
    events = _trap_prefix(t_pi, params)
    events += [Trap(omega, trap_center(t_pi, params), t - 2 * t_pi, trap_dt), FinalBS()]
    return SequenceSpec(tuple(events), params, "trap")


def build_kc_finite(t_pi: float, delta_t: float, params: PhysicalParams = NATURAL, phases=KC_PHASES) -> SequenceSpec:
    """Symmetric KC with finite pulses; the mirror lasts ``2 delta_t`` at the same Rabi frequency."""
    phi1, phi2, phi3 = phases
    events = (
        FinitePulse(HALF_PI, phi1, delta_t),
        Free(t_pi),
        FinitePulse(math.pi, phi2, 2 * delta_t),
        Free(t_pi),
        FinitePulse(HALF_PI, phi3, delta_t),
    )
    return SequenceSpec(events, params, "kc_finite")


def output_contrast(exp: "Experiment", T1: float, T2: float, g: float = 0.0) -> float:
    """``2 |<a| e^{-i k0 z} |b>|`` just before the readout pulse: the overlap of the two arms."""
    events: list[Event] = [Pulse(PulseSpec.splitter(KC_PHASES[0])), Free(T1)]
    if T2 > 0:
        events += [Pulse(PulseSpec.mirror(KC_PHASES[1])), Free(T2)]
    seq = SequenceSpec(tuple(events), exp.params, "contrast", exp.free_method)
    out = run_sequence(seq, g, exp.initial())
    kick = np.exp(-1j * exp.params.k0 * exp.grid.z)
    return float(2.0 * abs(np.sum(np.conj(out.comp_a) * kick * out.comp_b) * exp.grid.dz))


# -- execution ----------------------------------------------------------------


def run_events(seq: SequenceSpec, psi: np.ndarray, grid: Grid, gs, check: bool = True) -> tuple[np.ndarray, float]:
    """Apply ``seq`` to a batch ``psi`` of shape ``(G, 2, N)``, one copy per entry of ``gs``.

    Returns the final batch and the largest edge density seen.
    """
    params = seq.params
    gs = np.atleast_1d(np.asarray(gs, dtype=float))
    gravity = True
    edge = grid.edge_fraction(psi)
    for ev in seq.events:
        g_now = gs if gravity else 0.0
        if isinstance(ev, GravityOff):
            gravity = False
            continue
        if isinstance(ev, Free):
            on = gravity if ev.gravity is None else ev.gravity
            if not on:
                psi = apply_kinetic(psi, grid, params, ev.duration)
            elif seq.free_method == "analytic":
                psi = ug_analytic_array(psi, grid, params, ev.duration, gs)
            else:
                pot = PotentialSpec("linear_gravity").values(grid, params, gs)
                psi = SplitStepper(grid, params, seq.free_dt, pot).run(psi, ev.duration)
        elif isinstance(ev, Pulse):
            psi = pulse_array(psi, grid, params.k0, ev.spec.theta, ev.spec.phi)
        elif isinstance(ev, FinitePulse):
            psi = hbs_array(psi, grid, params, pulse_area=ev.theta, delta_t=ev.delta_t, phi=ev.phi,
                            delta=ev.delta, dt=ev.dt, g=g_now if ev.gravity else 0.0)
        elif isinstance(ev, Trap):
            pot = PotentialSpec("harmonic", omega=ev.omega, z0=ev.z0, gravity_enabled=gravity)
            psi = SplitStepper(grid, params, ev.step, pot.values(grid, params, gs)).run(psi, ev.duration)
        elif isinstance(ev, Reunite):
            psi = reunite_array(psi, grid, params.k0)
        elif isinstance(ev, FinalBS):
            psi = final_bs_array(psi)
        else:
            raise TypeError(f"unknown event {ev!r}")
        if check:
            edge = max(edge, check_edges(grid, psi, type(ev).__name__))
    if check:
        _check_norm(psi, grid)
    return psi, edge


def _check_norm(psi: np.ndarray, grid: Grid) -> None:
    norms = np.sum(np.abs(psi) ** 2, axis=(-2, -1)) * grid.dz
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > NORM_DRIFT_LIMIT:
        raise NumericalValidityError(f"norm drifted by {drift:.3e}")


def run_sequence(seq: SequenceSpec, g: float, initial: Spinor, check: bool = True) -> Spinor:
    psi, _ = run_events(seq, initial.psi[None], initial.grid, [g], check)
    return initial.with_psi(psi[0])


# -- experiments and scans ----------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    """Everything a preset needs besides the scan times."""

    params: PhysicalParams = NATURAL
    grid: Grid = field(default_factory=production_grid)
    sigma: float = 10.0
    t_pi: float = 100.0
    state: str = "gaussian"
    omega: float | None = None
    floor: float = fisher.PROBABILITY_FLOOR
    free_method: str = "analytic"

    def __post_init__(self) -> None:
        if self.state not in ("gaussian", "chirped"):
            raise ValueError(f"unknown state {self.state!r}")
        if not self.t_pi > 0:
            raise ValueError("t_pi must be positive")

    @property
    def trap_omega(self) -> float:
        return self.omega if self.omega is not None else default_trap_omega(self.t_pi)

    @property
    def trap_period(self) -> float:
        return 2.0 * math.pi / self.trap_omega

    @property
    def unit(self) -> float:
        return fisher.fq_semiclassical(self.params.k0, self.t_pi)

    def initial(self) -> Spinor:
        if self.state == "chirped":
            return chirped_gaussian(self.grid, self.sigma)
        return gaussian(self.grid, self.sigma)

    @cached_property
    def input_moments(self) -> Moments:
        return moments(self.initial())

    def with_state(self, state: str) -> Experiment:
        return Experiment(self.params, self.grid, self.sigma, self.t_pi, state, self.omega, self.floor,
                          self.free_method)


PRESETS = ("kc", "kc_chirped", "ramsey", "trap")


def preset_experiment(preset: str, exp: Experiment) -> Experiment:
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    return exp.with_state("chirped") if preset == "kc_chirped" else exp


def build_preset(preset: str, exp: Experiment, t: float) -> SequenceSpec:
    if preset in ("kc", "kc_chirped"):
        seq = build_kc(exp.t_pi, t, exp.params)
    elif preset == "ramsey":
        seq = build_ramsey(t, exp.params)
    elif preset == "trap":
        seq = build_trap_scheme(exp.t_pi, exp.trap_omega, t, exp.params)
    else:
        raise ValueError(f"unknown preset {preset!r}")
    return SequenceSpec(seq.events, seq.params, preset, exp.free_method)


def analytic_qfi(preset: str, exp: Experiment, t: float) -> float:
    m = exp.input_moments
    if preset == "ramsey":
        return fisher.qfi_kc_analytic(t, 0.0, m, exp.params)
    if preset == "trap" and t > 2 * exp.t_pi:
        t = 2 * exp.t_pi
    T1, T2 = _interrogation(exp.t_pi, t)
    return fisher.qfi_kc_analytic(T1, T2, m, exp.params)


def perturbations(dg: float, g0: float = 0.0) -> np.ndarray:
    """Gravity values ``[g0, g0+dg, g0-dg, g0+dg/2, g0-dg/2]`` used by every estimate."""
    return g0 + np.array([0.0, dg, -dg, dg / 2, -dg / 2])


@dataclass
class RowResult:
    values: dict
    convergence: dict
    flags: list
    edge: float = 0.0


def evaluate_batch(psi: np.ndarray, grid: Grid, dg: float, bases: Sequence[str], floor: float, unit: float) -> RowResult:
    """Fisher values (in ``unit``) from a batch ordered as :func:`perturbations`."""
    atol = 1e-6 * unit
    values, conv, flags = {}, {}, []
    if "qfi" in bases:
        q1 = fisher.qfi_from_states(psi[0], psi[1], psi[2], dg, grid.dz)
        q2 = fisher.qfi_from_states(psi[0], psi[3], psi[4], dg / 2, grid.dz)
        values["FQ_numeric"] = q1 / unit
        conv["FQ_numeric"] = fisher._relative(q1, q2, atol)
        if conv["FQ_numeric"] > fisher.CONVERGENCE_LIMIT:
            flags.append(f"FQ_numeric: step refinement changed value by {conv['FQ_numeric']:.2%}")
    for basis in bases:
        if basis == "qfi":
            continue
        col = BASIS_COLUMNS[basis]
        dists = [_distribution(psi[i], grid, basis) for i in range(5)]
        width = dists[0][1]
        masses = [d[0] for d in dists]
        f1 = fisher.cfi_from_masses(masses[0], masses[1], masses[2], dg, width, floor)
        f2 = fisher.cfi_from_masses(masses[0], masses[3], masses[4], dg / 2, width, floor)
        f_floor = fisher.cfi_from_masses(masses[0], masses[1], masses[2], dg, width, 10 * floor)
        values[col] = f1 / unit
        conv[col] = fisher._relative(f1, f2, atol)
        if conv[col] > fisher.CONVERGENCE_LIMIT:
            flags.append(f"{col}: step refinement changed value by {conv[col]:.2%}")
        floor_err = fisher._relative(f1, f_floor, atol)
        if floor_err > fisher.FLOOR_SENSITIVITY_LIMIT:
            flags.append(f"{col}: probability floor changed value by {floor_err:.2%}")
    if "FQ_numeric" in values:
        for col in BASIS_COLUMNS.values():
            if col in values and values[col] > values["FQ_numeric"] * (1 + QCRB_SLACK) + 1e-9:
                flags.append(f"{col} exceeds FQ_numeric beyond tolerance (QCRB)")
    return RowResult(values, conv, flags)


def _distribution(psi: np.ndarray, grid: Grid, basis: str) -> tuple[np.ndarray, float]:
    if basis == "population":
        return np.sum(np.abs(psi) ** 2, axis=-1) * grid.dz, 1.0
    if basis == "position":
        return np.abs(psi) ** 2, grid.dz
    if basis == "momentum":
        return np.abs(grid.to_momentum(psi)[:, grid.sort_index]) ** 2, grid.dp
    raise ValueError(f"unknown basis {basis!r}")


@dataclass
class FisherTrace:
    """Scan output: one row per time, Fisher columns in units of ``k0^2 T_pi^4``."""

    times: np.ndarray
    columns: dict
    metadata: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        for name in COLUMNS:
            col = np.asarray(self.columns.get(name, np.full(len(self.times), np.nan)), dtype=float)
            if col.shape != self.times.shape:
                raise ValueError(f"column {name} has {col.shape[0]} rows, expected {len(self.times)}")
            self.columns[name] = col

    def __len__(self) -> int:
        return len(self.times)

    @property
    def valid(self) -> bool:
        return not any(d.get("invalid") for d in self.diagnostics)

    def qcrb_violations(self, slack: float = QCRB_SLACK) -> list[int]:
        fq = self.columns["FQ_numeric"]
        bad = []
        for i in range(len(self)):
            for col in BASIS_COLUMNS.values():
                v = self.columns[col][i]
                if np.isfinite(v) and np.isfinite(fq[i]) and v > fq[i] * (1 + slack) + 1e-9:
                    bad.append(i)
                    break
        return bad


def _row_task(args) -> tuple[int, dict, dict, list, float, str | None]:
    preset, exp, t, bases, dg, index = args
    try:
        seq = build_preset(preset, exp, t)
        init = exp.initial()
        gs = perturbations(dg, exp.params.g_offset)
        batch = np.broadcast_to(init.psi, (len(gs),) + init.psi.shape).copy()
        psi, edge = run_events(seq, batch, exp.grid, gs)
        res = evaluate_batch(psi, exp.grid, dg, bases, exp.floor, exp.unit)
        return index, res.values, res.convergence, res.flags, edge, None
    except (NumericalValidityError, ValueError) as exc:
        return index, {}, {}, [], float("nan"), str(exc)


def _trap_rows(exp: Experiment, rows: list[tuple[int, float]], bases, dg) -> list:
    """Rows inside the trap window, sharing one propagation of the held state.

    Each row is bit-for-bit the same computation as an independent run: the
    shared state advances by whole trap steps and every row finishes with its
    own partial step.
    """
    params, grid = exp.params, exp.grid
    gs = perturbations(dg, params.g_offset)
    init = exp.initial()
    prefix = SequenceSpec(tuple(_trap_prefix(exp.t_pi, params)), params, "trap", exp.free_method)
    batch = np.broadcast_to(init.psi, (len(gs),) + init.psi.shape).copy()
    out = []
    try:
        base, edge0 = run_events(prefix, batch, grid, gs)
    except NumericalValidityError as exc:
        return [(i, {}, {}, [], float("nan"), str(exc)) for i, _ in rows]
    trap = Trap(exp.trap_omega, trap_center(exp.t_pi, params), 0.0)
    pot = PotentialSpec("harmonic", omega=trap.omega, z0=trap.z0, gravity_enabled=False)
    stepper = SplitStepper(grid, params, trap.step, pot.values(grid, params, gs))
    done = 0
    for index, t in sorted(rows, key=lambda r: r[1]):
        n, rest = stepper.split(t - 2 * exp.t_pi)
        while done < n:
            base = stepper.step(base)
            done += 1
        psi = stepper.step(base, rest) if rest else base
        try:
            edge = max(edge0, check_edges(grid, psi, "Trap"))
            psi = final_bs_array(psi)
            _check_norm(psi, grid)
        except NumericalValidityError as exc:
            out.append((index, {}, {}, [], float("nan"), str(exc)))
            continue
        res = evaluate_batch(psi, grid, dg, bases, exp.floor, exp.unit)
        out.append((index, res.values, res.convergence, res.flags, edge, None))
    return out


def workers_from_env(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, default)))
    except ValueError:
        return default


def scan(
    preset: str,
    times: Sequence[float],
    bases: Sequence[str] = ALL_BASES,
    dg: float | None = None,
    exp: Experiment | None = None,
    workers: int | None = None,
) -> FisherTrace:
    """Fisher information of ``preset`` at each time, one independent row per time.

    ``dg`` defaults to a 1 mrad phase over the longest gravity exposure in the
    scan. Invalid rows are kept as NaN with a diagnostic.
    """
    times = [float(t) for t in times]
    if not times:
        raise ValueError("times must be nonempty")
    for b in bases:
        if b not in ALL_BASES:
            raise ValueError(f"unknown basis {b!r}")
    exp = preset_experiment(preset, exp or Experiment())
    if dg is None:
        dg = fisher.default_dg(max(build_preset(preset, exp, t).gravity_time for t in times), exp.params.k0)
    workers = workers_from_env() if workers is None else workers

    trap_rows = [(i, t) for i, t in enumerate(times) if preset == "trap" and t > 2 * exp.t_pi]
    trap_idx = {i for i, _ in trap_rows}
    tasks = [(preset, exp, t, tuple(bases), dg, i) for i, t in enumerate(times) if i not in trap_idx]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_row_task, tasks))
    else:
        results = [_row_task(task) for task in tasks]
    if trap_rows:
        results += _trap_rows(exp, trap_rows, bases, dg)
    results.sort(key=lambda r: r[0])

    n = len(times)
    cols = {name: np.full(n, np.nan) for name in COLUMNS}
    conv = {name: np.full(n, np.nan) for name in COLUMNS}
    edges = np.full(n, np.nan)
    diagnostics = []
    for index, values, convergence, flags, edge, error in results:
        for name, v in values.items():
            cols[name][index] = v
        for name, v in convergence.items():
            conv[name][index] = v
        edges[index] = edge
        if error is not None:
            diagnostics.append({"row": index, "t": times[index], "invalid": True, "message": error})
        for msg in flags:
            diagnostics.append({"row": index, "t": times[index], "invalid": "QCRB" in msg, "message": msg})
        if error is None and "qfi" in bases:
            cols["FQ_analytic"][index] = analytic_qfi(preset, exp, times[index]) / exp.unit

    metadata = {
        "preset": preset,
        "params": {"hbar": exp.params.hbar, "mass": exp.params.mass, "k0": exp.params.k0,
                   "g_offset": exp.params.g_offset},
        "grid": {"n_points": exp.grid.n_points, "z_min": exp.grid.z_min, "z_max": exp.grid.z_max},
        "state": exp.state,
        "sigma": exp.sigma,
        "t_pi": exp.t_pi,
        "trap_omega": exp.trap_omega if preset == "trap" else None,
        "dg": dg,
        "floor": exp.floor,
        "free_method": exp.free_method,
        "trap_dt": TRAP_STEP_FACTOR / exp.trap_omega if preset == "trap" else None,
        "bases": list(bases),
        "unit": "k0^2 T_pi^4",
        "convergence_errors": {k: v.tolist() for k, v in conv.items() if np.isfinite(v).any()},
        "edge_density_max": float(np.nanmax(edges)) if np.isfinite(edges).any() else None,
    }
    return FisherTrace(np.array(times), cols, metadata, diagnostics)


def default_times(preset: str, exp: Experiment, points: int = 200, trap_points: int = 400) -> np.ndarray:
    """Default time grids: ``points`` over ``(0, 2 T_pi]``; the trap adds one trap period."""
    base = np.linspace(0.0, 2.0 * exp.t_pi, points + 1)[1:]
    if preset != "trap":
        return base
    window = 2.0 * exp.t_pi + np.linspace(0.0, exp.trap_period, trap_points + 1)[1:]
    return np.concatenate([base, window])


# -- sweeps at the output time --------------------------------------------------


@dataclass
class SweepTable:
    """Small result table; ``columns`` map names to equal-length arrays."""

    columns: dict
    metadata: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]


def _output_batch(preset: str, exp: Experiment, dg: float) -> np.ndarray:
    seq = build_preset(preset, exp, 2.0 * exp.t_pi)
    init = exp.initial()
    gs = perturbations(dg, exp.params.g_offset)
    batch = np.broadcast_to(init.psi, (len(gs),) + init.psi.shape).copy()
    psi, _ = run_events(seq, batch, exp.grid, gs)
    return psi


def resolution_sweep(
    preset: str, sigma_p_values: Sequence[float], exp: Experiment | None = None, dg: float | None = None
) -> SweepTable:
    """Momentum-basis CFI at ``2 T_pi`` after blurring each internal state's distribution."""
    if preset not in ("kc", "ramsey"):
        raise ValueError("resolution sweeps are defined for the kc and ramsey presets")
    exp = exp or Experiment()
    dg = dg if dg is not None else fisher.default_dg(2.0 * exp.t_pi, exp.params.k0)
    psi = _output_batch(preset, exp, dg)
    grid = exp.grid
    masses = [np.abs(grid.to_momentum(psi[i])[:, grid.sort_index]) ** 2 for i in range(5)]
    values, conv = [], []
    atol = 1e-6 * exp.unit
    for sp in sigma_p_values:
        blurred = []
        for mass in masses:
            d = fisher.Distribution("momentum", True, grid.momenta_sorted, mass, grid.dp)
            blurred.append(fisher.convolve_resolution(d, sp).mass)
        f1 = fisher.cfi_from_masses(blurred[0], blurred[1], blurred[2], dg, grid.dp, exp.floor)
        f2 = fisher.cfi_from_masses(blurred[0], blurred[3], blurred[4], dg / 2, grid.dp, exp.floor)
        values.append(f1 / exp.unit)
        conv.append(fisher._relative(f1, f2, atol))
    meta = {"preset": preset, "t": 2.0 * exp.t_pi, "dg": dg, "t_pi": exp.t_pi, "sigma": exp.sigma,
            "unit": "k0^2 T_pi^4", "convergence_errors": conv,
            "momentum_width": exp.params.hbar / (math.sqrt(2.0) * exp.sigma)}
    return SweepTable({"sigma_p": np.asarray(sigma_p_values, float), "FC_mom": np.array(values)}, meta)


def pulse_duration_sweep(delta_t_values: Sequence[float], exp: Experiment | None = None) -> SweepTable:
    """Symmetric KC with finite Raman pulses of duration ``delta_t`` (mirror ``2 delta_t``).

    Also reports the instantaneous-pulse reference and the total sequence time.
    """
    exp = exp or Experiment()
    bases = ALL_BASES
    ref = scan("kc", [2.0 * exp.t_pi], bases, exp=exp, workers=1)
    cols = {name: [] for name in ("delta_t", "sequence_time", "FQ_numeric", "FC_pop", "FC_pos", "FC_mom")}
    conv = []
    for delta_t in delta_t_values:
        seq = build_kc_finite(exp.t_pi, delta_t, exp.params)
        seq = SequenceSpec(seq.events, seq.params, seq.name, exp.free_method)
        dg = fisher.default_dg(seq.gravity_time, exp.params.k0)
        gs = perturbations(dg, exp.params.g_offset)
        init = exp.initial()
        batch = np.broadcast_to(init.psi, (len(gs),) + init.psi.shape).copy()
        psi, _ = run_events(seq, batch, exp.grid, gs)
        res = evaluate_batch(psi, exp.grid, dg, bases, exp.floor, exp.unit)
        cols["delta_t"].append(delta_t)
        cols["sequence_time"].append(seq.total_time)
        for name in ("FQ_numeric", "FC_pop", "FC_pos", "FC_mom"):
            cols[name].append(res.values[name])
        conv.append(res.convergence)
    reference = {name: float(ref.columns[name][0]) for name in ("FQ_numeric", "FC_pop", "FC_pos", "FC_mom")}
    meta = {"t_pi": exp.t_pi, "sigma": exp.sigma, "unit": "k0^2 T_pi^4", "instantaneous": reference,
            "convergence_errors": conv}
    return SweepTable({k: np.asarray(v, float) for k, v in cols.items()}, meta)
