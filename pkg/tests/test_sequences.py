import math

import numpy as np
import pytest

from mwgrav import fisher
from mwgrav.grid import make_grid, production_grid
from mwgrav.pulses import PulseSpec
from mwgrav.sequences import (
    ALL_BASES,
    Experiment,
    FinalBS,
    Free,
    Pulse,
    Reunite,
    SequenceSpec,
    Trap,
    build_kc,
    build_kc_finite,
    build_ramsey,
    build_trap_scheme,
    default_times,
    output_contrast,
    pulse_duration_sweep,
    resolution_sweep,
    run_sequence,
    scan,
)
from mwgrav.wavepacket import measure_distribution, moments

T_PI = 20.0


def test_kc_structure():
    early = build_kc(T_PI, 10.0)
    assert [type(e) for e in early.events] == [Pulse, Free, Pulse]
    late = build_kc(T_PI, 30.0)
    assert [type(e) for e in late.events] == [Pulse, Free, Pulse, Free, Pulse]
    assert late.events[2].spec == PulseSpec.mirror(0.0)
    assert late.events[-1].spec.phi == pytest.approx(math.pi / 2)
    assert late.total_time == 30.0 and late.gravity_time == 30.0
    zero = build_kc(T_PI, 0.0)
    assert zero.total_time == 0.0
    with pytest.raises(ValueError):
        build_kc(T_PI, -1.0)


def test_ramsey_and_trap_structure():
    assert [type(e) for e in build_ramsey(40.0).events] == [Pulse, Free, Pulse]
    trap = build_trap_scheme(T_PI, 0.2, 50.0)
    kinds = [type(e) for e in trap.events]
    assert kinds[-3:] == [Reunite, Trap, FinalBS] or kinds[-2:] == [Trap, FinalBS]
    assert Reunite in kinds
    hold = next(e for e in trap.events if isinstance(e, Trap))
    assert hold.duration == pytest.approx(10.0) and hold.z0 == pytest.approx(T_PI)
    assert trap.gravity_time == pytest.approx(2 * T_PI)
    assert build_trap_scheme(T_PI, 0.2, 30.0).events == build_kc(T_PI, 30.0).events
    with pytest.raises(ValueError):
        build_trap_scheme(T_PI, 0.0, 50.0)


def test_finite_sequence_bookkeeping():
    seq = build_kc_finite(100.0, 40.0)
    assert seq.total_time == pytest.approx(360.0)
    assert seq.gravity_time == pytest.approx(200.0)


def test_negative_duration_rejected():
    with pytest.raises(ValueError):
        SequenceSpec((Free(-1.0),))
    with pytest.raises(ValueError):
        SequenceSpec((Free(1.0),), free_method="euler")


def test_zero_area_pulses_are_free_fall(fast_exp):
    seq = SequenceSpec((Pulse(PulseSpec(0.0)), Free(50.0), Pulse(PulseSpec(0.0))))
    out = run_sequence(seq, 1e-3, fast_exp.initial())
    assert moments(out).mean_p == pytest.approx(-1e-3 * 50.0, rel=1e-9)


@pytest.mark.parametrize("T2", [20.0, 15.0, 10.0, 4.0])
def test_output_populations(fast_exp, T2):
    g = 2e-4
    out = run_sequence(build_kc(T_PI, T_PI + T2), g, fast_exp.initial())
    T1, T = T_PI, T_PI + T2
    c = fisher.contrast_analytic(T1, T2, 10.0)
    alpha = (T2 - T1) / 2 - g * (T**2 / 2 - T1**2)
    pa, pb = out.populations()
    assert pa == pytest.approx(0.5 * (1 + c * math.sin(alpha)), abs=1e-9)
    assert pb == pytest.approx(0.5 * (1 - c * math.sin(alpha)), abs=1e-9)


def test_interferometric_contrast(fast_exp):
    for T2 in (0.0, 5.0, 12.0, 20.0):
        assert output_contrast(fast_exp, T_PI, T2) == pytest.approx(
            fisher.contrast_analytic(T_PI, T2, 10.0), abs=1e-9)


def test_split_step_free_flight_agrees(fast_exp):
    seq = build_kc(T_PI, 2 * T_PI)
    stepped = SequenceSpec(seq.events, seq.params, free_method="split_step", free_dt=0.05)
    a = run_sequence(seq, 1e-4, fast_exp.initial())
    b = run_sequence(stepped, 1e-4, fast_exp.initial())
    assert np.sqrt(np.sum(np.abs(a.psi - b.psi) ** 2) * a.grid.dz) < 1e-6


def test_kc_scan_matches_closed_forms(fast_exp):
    times = default_times("kc", fast_exp, points=20)
    trace = scan("kc", times, exp=fast_exp)
    assert trace.valid and not trace.qcrb_violations()
    np.testing.assert_allclose(trace.columns["FQ_numeric"], trace.columns["FQ_analytic"], rtol=5e-3)
    unit = fast_exp.unit
    for t, v in zip(times, trace.columns["FC_pop"]):
        T1, T2 = (t, 0.0) if t <= T_PI else (T_PI, t - T_PI)
        a = fisher.cfi_population_analytic(T1, T2, 10.0) / unit
        if max(a, v) > 0.01:
            assert v == pytest.approx(a, rel=1e-2)
    assert trace.columns["FC_pop"][-1] == pytest.approx(1.0, rel=1e-2)
    assert trace.metadata["dg"] == pytest.approx(fisher.default_dg(2 * T_PI))


def test_ramsey_qfi_column(fast_exp):
    times = [10.0, 25.0, 40.0]
    trace = scan("ramsey", times, bases=("qfi",), exp=fast_exp)
    expected = [fisher.qfi_kc_analytic(t, 0, fast_exp.input_moments) / fast_exp.unit for t in times]
    np.testing.assert_allclose(trace.columns["FQ_numeric"], expected, rtol=5e-3)
    assert np.all(np.isnan(trace.columns["FC_pop"]))


def test_ramsey_momentum_fringes(fast_exp):
    # arms separated by hbar k0 t / m interfere with period 2 pi hbar / separation
    t = 160.0
    out = run_sequence(build_ramsey(t), 0.0, fast_exp.initial())
    d = measure_distribution(out, "momentum")
    p, dens = d.bins, d.mass[0]
    window = np.flatnonzero((p > -0.1) & (p < 0.1))
    zeros = [i for i in window if dens[i] < dens[i - 1] and dens[i] < dens[i + 1]]
    spacing = (p[zeros[-1]] - p[zeros[0]]) / (len(zeros) - 1)
    assert len(zeros) >= 4
    assert spacing == pytest.approx(2 * math.pi / t, rel=0.05)


def test_rows_are_independent(fast_exp):
    times = [12.0, 25.0, 40.0]
    together = scan("kc", times, exp=fast_exp, workers=1)
    alone = scan("kc", [25.0], exp=fast_exp, dg=together.metadata["dg"], workers=1)
    for name in ("FQ_numeric", "FC_pop", "FC_pos", "FC_mom"):
        assert together.columns[name][1] == alone.columns[name][0]


def test_parallel_rows_identical(fast_exp):
    times = [12.0, 25.0, 40.0]
    serial = scan("kc", times, exp=fast_exp, workers=1)
    parallel = scan("kc", times, exp=fast_exp, workers=2)
    for name in serial.columns:
        np.testing.assert_array_equal(serial.columns[name], parallel.columns[name])


@pytest.fixture(scope="module")
def trap_exp():
    # the trap rotates position width into momentum width m omega sigma, so it
    # needs the fine production lattice even on the fast tier
    return Experiment(grid=production_grid(), t_pi=T_PI)


def test_trap_shared_propagation_matches_single_rows(trap_exp):
    period = trap_exp.trap_period
    times = [2 * T_PI + f * period for f in (0.1, 0.35, 0.8)]
    together = scan("trap", times, exp=trap_exp)
    for i, t in enumerate(times):
        alone = scan("trap", [t], exp=trap_exp, dg=together.metadata["dg"])
        for name in ("FQ_numeric", "FC_pos", "FC_mom"):
            assert alone.columns[name][0] == pytest.approx(together.columns[name][i], rel=1e-12)


def test_trap_rows_match_direct_sequence(trap_exp):
    t = 2 * T_PI + 0.3 * trap_exp.trap_period
    trace = scan("trap", [t], bases=("qfi",), exp=trap_exp)
    seq = build_trap_scheme(T_PI, trap_exp.trap_omega, t)
    dg = trace.metadata["dg"]
    est = fisher.qfi_numeric(lambda g: run_sequence(seq, g, trap_exp.initial()), dg)
    assert trace.columns["FQ_numeric"][0] == pytest.approx(est.value / trap_exp.unit, rel=1e-10)


def test_invalid_rows_recorded():
    exp = Experiment(grid=make_grid(512, -64, 64), sigma=5.0, t_pi=60.0)
    trace = scan("kc", [10.0, 120.0], exp=exp)
    assert not trace.valid
    assert np.isfinite(trace.columns["FQ_numeric"][0])
    assert np.isnan(trace.columns["FQ_numeric"][1])
    bad = [d for d in trace.diagnostics if d["invalid"]]
    assert bad[0]["row"] == 1 and "edge" in bad[0]["message"].lower()


def test_scan_argument_checks(fast_exp):
    with pytest.raises(ValueError):
        scan("kc", [], exp=fast_exp)
    with pytest.raises(ValueError):
        scan("bragg", [1.0], exp=fast_exp)
    with pytest.raises(ValueError):
        scan("kc", [1.0], bases=("spin",), exp=fast_exp)


def test_resolution_sweep_monotone(fast_exp):
    sigmas = [0.0, 0.01, 0.03, 0.07, 0.2, 0.5]
    for preset in ("kc", "ramsey"):
        table = resolution_sweep(preset, sigmas, exp=fast_exp)
        vals = table["FC_mom"]
        assert np.all(np.diff(vals) <= 1e-9 * vals[0])
    with pytest.raises(ValueError):
        resolution_sweep("trap", sigmas, exp=fast_exp)


def test_pulse_sweep_small_duration(fast_exp):
    table = pulse_duration_sweep([0.02], exp=fast_exp)
    ref = table.metadata["instantaneous"]
    for name in ("FQ_numeric", "FC_pop", "FC_pos", "FC_mom"):
        assert table[name][0] == pytest.approx(ref[name], rel=1e-2)
    assert table["sequence_time"][0] == pytest.approx(2 * T_PI + 0.08)


def test_all_bases_listed():
    assert set(ALL_BASES) == {"qfi", "population", "position", "momentum"}
