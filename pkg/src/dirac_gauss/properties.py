"""Post-SCF observables: radial moments, nuclear-model comparisons, wave grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import RadialFunction
from .integrals import SlaterCache, gauss_moment
from .scf import AtomSpec, ScfOptions, ScfState, _level_sort_key, run_scf

__all__ = [
    "LevelReport",
    "orbital_functions",
    "expectation_r_power",
    "radial_functions_on_grid",
    "default_grid",
    "nucleus_comparison_report",
]


@dataclass(frozen=True)
class LevelReport:
    """Point-vs-Gaussian energies of one level; delta = gaussian - point."""

    label: str
    n: int
    kappa: int
    energy_point: float
    energy_gaussian: float

    @property
    def delta(self) -> float:
        return self.energy_gaussian - self.energy_point


def orbital_functions(level, shell) -> tuple[RadialFunction, RadialFunction]:
    """Radial (u, v) expansions of a solved level over its shell's primitives.

    The pair is jointly normalized: ∫ (u^2 + v^2) dr = 1.
    """
    large = shell.large_functions()
    small = shell.small_functions()
    u_terms = []
    for coeff, func in zip(level.coeff_large, large):
        u_terms.extend((coeff * c, p, z) for c, p, z in func.terms)
    v_terms = []
    for coeff, func in zip(level.coeff_small, small):
        v_terms.extend((coeff * c, p, z) for c, p, z in func.terms)
    return RadialFunction(tuple(u_terms)), RadialFunction(tuple(v_terms))


def expectation_r_power(level, shell, k: int) -> float:
    """⟨r^k⟩ = ∫ r^k (u^2 + v^2) dr for k in {-1, 1, 2}, via closed moments."""
    if k not in (-1, 1, 2):
        raise ValueError("supported moments: k in {-1, 1, 2}")
    u, v = orbital_functions(level, shell)
    total = 0.0
    for f in (u, v):
        for ci, pi, zi in f.terms:
            for cj, pj, zj in f.terms:
                total += ci * cj * gauss_moment(pi + pj + k, zi + zj)
    return total


def default_grid(n_points: int = 600, r_min: float = 1e-7, r_max: float = 10.0):
    """Logarithmic radial grid resolving both the nuclear region and the tail."""
    return np.geomspace(r_min, r_max, n_points)


def radial_functions_on_grid(level, shell, grid):
    """Pointwise (r, u(r), v(r)) triples over an ascending positive grid."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be positive and strictly ascending")
    u, v = orbital_functions(level, shell)
    return grid, u(grid), v(grid)


def nucleus_comparison_report(
    spec_point: AtomSpec,
    spec_gaussian: AtomSpec,
    shells: dict,
    options: ScfOptions = ScfOptions(),
    cache: SlaterCache | None = None,
) -> tuple[list[LevelReport], ScfState, ScfState]:
    """Run both nuclear models and pair their levels by (n, kappa).

    The two runs share one Slater cache (the two-electron integrals do not
    depend on the nuclear model).  Reports come out in the spectroscopic
    order 1s, 2s, 2p-, 2p, ...
    """
    if spec_point.occupations != spec_gaussian.occupations:
        raise ValueError("comparison requires identical occupations")
    if spec_point.c != spec_gaussian.c:
        raise ValueError("comparison requires identical speed of light")
    if not spec_point.model.is_point or spec_gaussian.model.is_point:
        raise ValueError("pass the point spec first and the gaussian spec second")
    if cache is None:
        cache = SlaterCache(shells)
    state_p = run_scf(spec_point, shells, options, cache=cache)
    state_g = run_scf(spec_gaussian, shells, options, cache=cache)
    reports = []
    for lv in sorted(state_p.levels, key=_level_sort_key):
        partner = state_g.level(lv.n, lv.kappa)
        reports.append(
            LevelReport(
                label=lv.label(),
                n=lv.n,
                kappa=lv.kappa,
                energy_point=lv.energy,
                energy_gaussian=partner.energy,
            )
        )
    return reports, state_p, state_g
