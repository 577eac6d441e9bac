"""One-dimensional two-state matterwave interferometer simulator with Fisher-information analysis."""
from .fisher import (
    FisherEstimate,
    cfi_distribution,
    cfi_population_analytic,
    contrast_analytic,
    convolve_resolution,
    fq_semiclassical,
    optimal_quadrature,
    optimal_quadrature_cfi,
    qfi_kc_analytic,
    qfi_free_analytic,
    qfi_numeric,
)
from .grid import Grid, NumericalValidityError, PhysicalParams, make_grid, natural_units, production_grid
from .propagator import (
    PotentialSpec,
    apply_g0_generator,
    apply_ug_analytic,
    evolve_hbs,
    evolve_split_step,
    translate,
)
from .pulses import PulseSpec, apply_final_bs, apply_momentum_reunite, apply_pulse
from .sequences import (
    Experiment,
    FisherTrace,
    SequenceSpec,
    build_kc,
    build_ramsey,
    build_trap_scheme,
    pulse_duration_sweep,
    resolution_sweep,
    run_sequence,
    scan,
)
from .wavepacket import Distribution, Moments, Spinor, chirped_gaussian, gaussian, measure_distribution, moments

__version__ = "0.1.0"
