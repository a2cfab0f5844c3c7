"""Relativistic atomic structure in Gaussian bases with kinetic balance."""

from .angular import AngularSymmetry, allowed_l_range, gamma_coefficient, threejm_half
from .basis import (
    RadialFunction,
    RadialShell,
    even_tempered,
    even_tempered_shells,
    kinetic_balance,
    large_function,
    parse_basis_file,
    serialize_basis,
)
from .dirac_one import (
    SPEED_OF_LIGHT,
    SpinorLevel,
    assemble_block,
    select_electronic,
    solve_block,
    solve_generalized,
    sommerfeld_energy,
)
from .integrals import (
    SlaterCache,
    build_block_matrices,
    erf_gauss_moment,
    f_integral,
    g_integral,
    gauss_moment,
    nuclear_element,
    overlap,
    pi_element,
    slater_rl,
    two_range_moment,
)
from .nucleus import (
    NucleusModel,
    eta_from_rms,
    gaussian_nucleus,
    point_nucleus,
    potential_at,
    potential_origin_limit,
    rms_radius_bohr,
)
from .properties import (
    LevelReport,
    expectation_r_power,
    nucleus_comparison_report,
    radial_functions_on_grid,
)
from .scf import (
    AtomSpec,
    Occupation,
    ScfOptions,
    ScfState,
    aufbau_occupations,
    build_fock,
    run_scf,
    total_energy,
)

__version__ = "0.1.0"
