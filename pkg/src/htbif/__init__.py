"""htbif: steady-state multiplicity and bifurcation structure of a diffusive
saturating predator-prey model on the unit interval.

Modules
-------
model      parameters, coefficient functions, scalar kinetics and potential
spectral   eigencurves at the constant state, root windows, Morse staircase
timemap    phase-plane half-period map, center limit, monotonicity certificate
nodal      exact n-crossing solution pairs, solution loops, Cauchy profiles
linstab    Sturm-Liouville spectra, Morse indices, branch expansion checks
perturbed  coupled-system Newton solves, corrections, coexistence census
cli        command-line front end (CSV/JSON/SVG emission)
"""

from .errors import (
    ConvergenceError,
    DegenerateError,
    DegeneracyWarning,
    DomainError,
    GridMismatchError,
    InsufficientDataError,
    IntegrationError,
    NoSolutionError,
    PositivityError,
    QuadratureError,
)
from .model import (
    CoeffFn,
    ModelParams,
    PhaseState,
    Profile,
    energy,
    kinetic_d2f,
    kinetic_d3f,
    kinetic_df,
    kinetic_f,
    potential_F,
    potential_gap,
    w0_const,
)
from .spectral import (
    EigencurveRoot,
    MorseIndexTable,
    lambda_roots,
    morse_index_table,
    morse_index_w0,
    mu_threshold,
    tau0,
    tau0_dot,
)
from .timemap import (
    ABReport,
    TimeMapSample,
    ab_certify,
    companion,
    homoclinic_extent,
    monotone_check,
    time_map,
    time_map_center,
)
from .nodal import (
    LoopPoint,
    NodalSolution,
    SolutionSet,
    bvp_residual,
    crossing_count,
    enumerate_solutions,
    integrate_cauchy,
    nodal_pair,
    solve_amplitude,
    trace_loop,
)
from .linstab import (
    ExpansionCheck,
    Spectrum,
    detect_singular_set,
    eta2_closed_form,
    fit_expansion,
    morse_index_nodal,
    sturm_spectrum,
    y1_closed_form,
)
from .perturbed import (
    CensusResult,
    CoexistenceState,
    ContinuationResult,
    census,
    constant_states,
    continue_in_eps,
    first_order_corrections,
    newton_solve,
    residual,
    residual_fine,
)

__version__ = "0.1.0"
