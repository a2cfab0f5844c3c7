"""Average-of-configuration Dirac-Hartree-Fock for atoms.

The two-electron energy is assembled per shell pair from direct (F_0) and
exchange (Gamma-weighted F_l / G_l) Slater integrals,

    E2 = sum_a  n_a (n_a - 1) / 2 * [ F_0(a,a) - d_a/(d_a-1) *
                                       sum_{l>0} Gamma^l F_l(a,a) ]
       + sum_{a<b} n_a n_b * [ F_0(a,b) - sum_l Gamma^l G_l(a,b) ],

with d_a = 2j_a + 1 the shell degeneracy.  For closed shells this is the
exact determinant average; the fractional prefactors carry open shells.
The shell Fock operators are the exact derivatives of this functional; a
kappa block is iterated with the occupation-weighted average of its shell
operators, which coincides with the usual closed-shell operator whenever
the block holds no open shell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .angular import AngularSymmetry, allowed_l_range, gamma_coefficient
from .dirac_one import (
    SPEED_OF_LIGHT,
    SpinorLevel,
    assemble_from_matrices,
    select_electronic,
    solve_generalized,
)
from .integrals import SlaterCache, build_block_matrices
from .nucleus import NucleusModel

__all__ = [
    "Occupation",
    "AtomSpec",
    "ScfOptions",
    "ScfState",
    "VariationalCollapseError",
    "aufbau_occupations",
    "total_energy",
    "build_fock",
    "run_scf",
]


class VariationalCollapseError(RuntimeError):
    """An occupied level fell below -c^2: the basis has collapsed."""


@dataclass(frozen=True)
class Occupation:
    """Shell occupation: principal number, symmetry, electron count n_a."""

    n: int
    symmetry: AngularSymmetry
    n_a: float

    def __post_init__(self):
        if not 0 < self.n_a <= self.degeneracy:
            raise ValueError(
                f"occupation {self.n_a} outside (0, {self.degeneracy}] "
                f"for kappa={self.symmetry.kappa}"
            )
        if self.n < self.symmetry.l_large + 1:
            raise ValueError(f"n={self.n} impossible for kappa={self.symmetry.kappa}")

    @property
    def degeneracy(self) -> int:
        return self.symmetry.degeneracy

    @property
    def self_interaction_weight(self) -> float:
        """Weight (d_a - n_a)/(d_a - 1) of the shell's self-term correction."""
        return (self.degeneracy - self.n_a) / (self.degeneracy - 1)

    def label(self) -> str:
        return f"{self.n}{self.symmetry.label()}"


@dataclass(frozen=True)
class AtomSpec:
    """Nuclear model, speed of light, and the shell occupations of one atom."""

    model: NucleusModel
    occupations: tuple[Occupation, ...]
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        keys = [(o.n, o.symmetry.kappa) for o in self.occupations]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (n, kappa) occupation")
        if self.c <= 0:
            raise ValueError("speed of light must be positive")

    @property
    def electron_count(self) -> float:
        return sum(o.n_a for o in self.occupations)


# relativistic aufbau: Madelung (n+l, n) order, j = l - 1/2 before j = l + 1/2
def aufbau_occupations(n_electrons: int) -> tuple[Occupation, ...]:
    """Ground-configuration occupations for a neutral-atom electron count."""
    if n_electrons < 1:
        raise ValueError("need at least one electron")
    order = []
    for n_plus_l in range(1, 16):
        for n in range((n_plus_l + 2) // 2, n_plus_l + 1):
            l = n_plus_l - n
            if l == 0:
                order.append((n, -1))
            else:
                order.append((n, l))
                order.append((n, -(l + 1)))
    occs = []
    remaining = float(n_electrons)
    for n, kappa in order:
        if remaining <= 0:
            break
        sym = AngularSymmetry(kappa)
        take = min(remaining, float(sym.degeneracy))
        occs.append(Occupation(n, sym, take))
        remaining -= take
    if remaining > 0:
        raise ValueError(f"electron count {n_electrons} exceeds the aufbau table")
    return tuple(occs)


@dataclass(frozen=True)
class ScfOptions:
    max_iter: int = 200
    e_tol: float = 1e-9
    d_tol: float = 1e-7
    damping: float = 0.4  # fraction of the new density mixed in each step
    level_shift: float = 0.0  # hartree added to virtuals during iteration
    lindep_threshold: float = 1e-12
    threads: int = 1

    def __post_init__(self):
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.max_iter < 1 or self.e_tol <= 0 or self.d_tol <= 0:
            raise ValueError("iteration controls must be positive")


@dataclass(frozen=True)
class ScfState:
    levels: tuple[SpinorLevel, ...]
    total_energy: float
    iteration: int
    energy_delta: float
    density_delta: float
    converged: bool
    history: tuple[tuple[int, float, float, float], ...]
    trace_energy: float

    def level(self, n: int, kappa: int) -> SpinorLevel:
        for lv in self.levels:
            if lv.n == n and lv.kappa == kappa:
                return lv
        raise KeyError(f"no level (n={n}, kappa={kappa})")


def _level_sort_key(occ_or_level):
    sym = occ_or_level.symmetry
    return (occ_or_level.n, sym.l_large, sym.j)


class _Engine:
    """Holds per-block matrices and contracts cached Slater grids."""

    def __init__(self, spec: AtomSpec, shells: dict, cache: SlaterCache, threads=1):
        self.spec = spec
        self.c = spec.c
        self.occs = sorted(spec.occupations, key=_level_sort_key)
        self.kappas = sorted({o.symmetry.kappa for o in self.occs})
        for k in self.kappas:
            if AngularSymmetry(k) not in shells:
                raise ValueError(f"basis is missing a kappa={k} shell")
        self.shells = {k: shells[AngularSymmetry(k)] for k in self.kappas}
        self.sizes = {k: self.shells[k].size for k in self.kappas}
        self.cache = cache
        self.blocks = {
            k: build_block_matrices(self.shells[k], spec.model) for k in self.kappas
        }
        self.h = {}
        self.s = {}
        for k in self.kappas:
            h, s = assemble_from_matrices(self.blocks[k], self.c)
            self.h[k] = h
            self.s[k] = s
        self.gammas = {}
        self.l_values = {}
        for ka in self.kappas:
            for kb in self.kappas:
                sa, sb = AngularSymmetry(ka), AngularSymmetry(kb)
                ls = allowed_l_range(sa, sb)
                self.l_values[(ka, kb)] = ls
                for l in ls:
                    self.gammas[(ka, kb, l)] = gamma_coefficient(sa, sb, l)
        self.fill_tasks(threads)

    def fill_tasks(self, threads: int):
        tasks = []
        for i, ka in enumerate(self.kappas):
            for kb in self.kappas[i:]:
                combos = [("L", "L"), ("L", "S"), ("S", "S")]
                if ka != kb:
                    combos.append(("S", "L"))
                for x, y in combos:
                    tasks.append(("direct", ka, kb, 0, x, y))
                for l in self.l_values[(ka, kb)]:
                    for x, y in [("L", "L"), ("S", "S"), ("L", "S")]:
                        tasks.append(("exchange", ka, kb, l, x, y))
        self.cache.fill(tasks, threads=threads)

    # -- density bookkeeping ------------------------------------------------

    def level_density(self, level: SpinorLevel) -> np.ndarray:
        vec = np.concatenate([level.coeff_large, level.coeff_small])
        return np.outer(vec, vec)

    def _blocks_of(self, kappa: int, dens: np.ndarray):
        n = self.sizes[kappa]
        return {
            "LL": dens[:n, :n],
            "SS": dens[n:, n:],
            "LS": dens[:n, n:],
        }

    # -- kernel contractions --------------------------------------------------

    def coulomb_matrix(self, ka: int, kb: int, dens_b: np.ndarray) -> np.ndarray:
        """Full-block Coulomb matrix on ka from the (u^2 + v^2) density of kb."""
        db = self._blocks_of(kb, dens_b)
        n = self.sizes[ka]
        out = np.zeros((2 * n, 2 * n))
        for x, sl in (("L", slice(0, n)), ("S", slice(n, 2 * n))):
            mat = self.cache.direct_matrix(ka, kb, x, "L", db["LL"])
            mat = mat + self.cache.direct_matrix(ka, kb, x, "S", db["SS"])
            out[sl, sl] = mat
        return out

    def exchange_kernel(self, ka: int, kb: int, l: int, dens_b: np.ndarray):
        """Full-block exchange kernel K^l on ka from a density on kb."""
        db = self._blocks_of(kb, dens_b)
        n = self.sizes[ka]
        out = np.zeros((2 * n, 2 * n))
        out[:n, :n] = self.cache.exchange_matrix(ka, kb, l, "L", "L", db["LL"])
        out[n:, n:] = self.cache.exchange_matrix(ka, kb, l, "S", "S", db["SS"])
        kls = self.cache.exchange_matrix(ka, kb, l, "L", "S", db["LS"])
        out[:n, n:] = kls
        out[n:, :n] = kls.T
        return out

    def gamma_exchange(self, ka: int, kb: int, dens_b: np.ndarray) -> np.ndarray:
        """Gamma-weighted exchange sum over allowed multipoles."""
        n = self.sizes[ka]
        out = np.zeros((2 * n, 2 * n))
        for l in self.l_values[(ka, kb)]:
            out += self.gammas[(ka, kb, l)] * self.exchange_kernel(ka, kb, l, dens_b)
        return out

    def interaction_matrix(self, ka: int, kb: int, dens_b: np.ndarray) -> np.ndarray:
        """J - Gamma-weighted-K on block ka from one density on kb."""
        return self.coulomb_matrix(ka, kb, dens_b) - self.gamma_exchange(
            ka, kb, dens_b
        )

    # -- Fock matrices ---------------------------------------------------------

    def fock_matrices(self, densities: dict):
        """Common potential, per-open-shell corrections, averaged Fock per kappa.

        densities maps each occupation to its one-electron density matrix.
        Returns (v_common, corrections, fock_avg).
        """
        block_density = {}
        for occ, dens in densities.items():
            k = occ.symmetry.kappa
            block_density[k] = block_density.get(k, 0.0) + occ.n_a * dens
        v_common = {}
        for ka in self.kappas:
            n = self.sizes[ka]
            v = np.zeros((2 * n, 2 * n))
            for kb in self.kappas:
                if kb in block_density:
                    v += self.interaction_matrix(ka, kb, block_density[kb])
            v_common[ka] = v
        corrections = {}
        for occ, dens in densities.items():
            w = occ.n_a * occ.self_interaction_weight
            if w != 0.0:
                k = occ.symmetry.kappa
                corrections[occ] = w * self.interaction_matrix(k, k, dens)
        fock_avg = {}
        for ka in self.kappas:
            f = self.h[ka] + v_common[ka]
            n_block = sum(o.n_a for o in self.occs if o.symmetry.kappa == ka)
            for occ, corr in corrections.items():
                if occ.symmetry.kappa == ka:
                    f = f - (occ.n_a / n_block) * corr
            fock_avg[ka] = 0.5 * (f + f.T)
        return v_common, corrections, fock_avg

    # -- energies ----------------------------------------------------------------

    def one_electron_energy(self, densities: dict) -> float:
        return sum(
            occ.n_a * float(np.sum(dens * self.h[occ.symmetry.kappa]))
            for occ, dens in densities.items()
        )

    def two_electron_energy(self, densities: dict, v_common, corrections) -> float:
        e = 0.0
        for occ, dens in densities.items():
            e += occ.n_a * float(np.sum(dens * v_common[occ.symmetry.kappa]))
            if occ in corrections:
                e -= occ.n_a * float(np.sum(dens * corrections[occ]))
        return 0.5 * e

    def shell_fock_expectation(self, occ, dens, v_common, corrections) -> float:
        """<a|F_a|a> with the shell's own variational Fock operator."""
        k = occ.symmetry.kappa
        f = self.h[k] + v_common[k]
        if occ in corrections:
            f = f - corrections[occ]
        return float(np.sum(dens * f))

    def pair_integrals(self, occ_a, dens_a, occ_b, dens_b):
        """F_0 and the Gamma-weighted exchange sums between two shell densities."""
        ka, kb = occ_a.symmetry.kappa, occ_b.symmetry.kappa
        da, db = self._blocks_of(ka, dens_a), self._blocks_of(kb, dens_b)
        f0 = 0.0
        for x in ("L", "S"):
            for y in ("L", "S"):
                f0 += self.cache.direct_energy(
                    ka, kb, x, y, da[f"{x}{x}"], db[f"{y}{y}"]
                )
        exch = {}
        for l in self.l_values[(ka, kb)]:
            val = self.cache.exchange_energy(ka, kb, l, "L", "L", da["LL"], db["LL"])
            val += self.cache.exchange_energy(ka, kb, l, "S", "S", da["SS"], db["SS"])
            val += 2.0 * self.cache.exchange_energy(
                ka, kb, l, "L", "S", da["LS"], db["LS"]
            )
            exch[l] = val
        return f0, exch


def _density_map(engine: _Engine, levels) -> dict:
    by_key = {(lv.n, lv.kappa): lv for lv in levels}
    out = {}
    for occ in engine.occs:
        lv = by_key.get((occ.n, occ.symmetry.kappa))
        if lv is None:
            raise ValueError(f"missing level for occupation {occ.label()}")
        out[occ] = engine.level_density(lv)
    return out


def total_energy(levels, spec: AtomSpec, cache: SlaterCache) -> float:
    """Dirac-Coulomb average-of-configuration energy from converged levels.

    Assembled shell pair by shell pair from F_0/F_l/G_l Slater integrals,
    independently of the Fock-operator route.
    """
    engine = _Engine(spec, {s.symmetry: s for s in cache.shells.values()}, cache)
    densities = _density_map(engine, levels)
    e = engine.one_electron_energy(densities)
    occs = engine.occs
    for i, a in enumerate(occs):
        da = densities[a]
        dega = a.degeneracy
        f0_aa, exch_aa = engine.pair_integrals(a, da, a, da)
        gamma_sum = sum(
            engine.gammas[(a.symmetry.kappa, a.symmetry.kappa, l)] * val
            for l, val in exch_aa.items()
            if l > 0
        )
        e += 0.5 * a.n_a * (a.n_a - 1.0) * (f0_aa - dega / (dega - 1.0) * gamma_sum)
        for b in occs[i + 1 :]:
            db = densities[b]
            f0_ab, exch_ab = engine.pair_integrals(a, da, b, db)
            gamma_sum = sum(
                engine.gammas[(a.symmetry.kappa, b.symmetry.kappa, l)] * val
                for l, val in exch_ab.items()
            )
            e += a.n_a * b.n_a * (f0_ab - gamma_sum)
    return e


def build_fock(spec: AtomSpec, levels, shells: dict, cache: SlaterCache) -> dict:
    """Averaged Fock matrix per kappa for the given occupied levels."""
    engine = _Engine(spec, shells, cache)
    densities = _density_map(engine, levels)
    _, _, fock = engine.fock_matrices(densities)
    return fock


def run_scf(
    spec: AtomSpec,
    shells: dict,
    options: ScfOptions = ScfOptions(),
    cache: SlaterCache | None = None,
) -> ScfState:
    """Self-consistent field loop: build Fock, diagonalize, fill, mix, repeat.

    Returns the final state with convergence flags; a non-converged run is
    returned (not raised) so callers can inspect the iteration history.
    """
    if cache is None:
        cache = SlaterCache(shells)
    engine = _Engine(spec, shells, cache, threads=options.threads)
    c = spec.c

    densities: dict | None = None
    virtuals: dict = {}
    energy = 0.0
    history = []
    converged = False
    d_delta = math.inf
    e_delta = math.inf
    iteration = 0
    levels_by_occ = {}

    for iteration in range(1, options.max_iter + 1):
        if densities is None:
            fock = {k: engine.h[k] for k in engine.kappas}
        else:
            _, _, fock = engine.fock_matrices(densities)
        new_levels = {}
        new_virtuals = {}
        for k in engine.kappas:
            f = fock[k]
            if options.level_shift > 0.0 and k in virtuals:
                s = engine.s[k]
                proj = s @ virtuals[k] @ virtuals[k].T @ s
                f = f + options.level_shift * proj
            evals, evecs = solve_generalized(f, engine.s[k], options.lindep_threshold)
            electronic = select_electronic(evals, evecs, AngularSymmetry(k), c)
            occupied_n = {o.n for o in engine.occs if o.symmetry.kappa == k}
            for lv in electronic:
                if lv.n in occupied_n:
                    new_levels[(lv.n, k)] = lv
            occ_vecs = {lv.n for lv in electronic if lv.n in occupied_n}
            if occupied_n - occ_vecs:
                raise VariationalCollapseError(
                    f"kappa={k}: occupied levels {sorted(occupied_n - occ_vecs)} "
                    "not present in the electronic spectrum"
                )
            virt = [
                np.concatenate([lv.coeff_large, lv.coeff_small])
                for lv in electronic
                if lv.n not in occupied_n
            ]
            if virt:
                new_virtuals[k] = np.column_stack(virt)
        virtuals = new_virtuals

        levels_by_occ = {}
        new_densities = {}
        for occ in engine.occs:
            lv = new_levels[(occ.n, occ.symmetry.kappa)]
            if lv.energy <= -c * c:
                raise VariationalCollapseError(
                    f"occupied level {occ.label()} at {lv.energy} below -c^2"
                )
            levels_by_occ[occ] = lv
            new_densities[occ] = engine.level_density(lv)

        if densities is None:
            densities = new_densities
            d_delta = math.inf
        else:
            mixed = {}
            d_delta = 0.0
            for occ in engine.occs:
                diff = new_densities[occ] - densities[occ]
                d_delta = max(d_delta, float(np.linalg.norm(diff)))
                mixed[occ] = densities[occ] + options.damping * diff
            densities = mixed

        v_common, corrections, _ = engine.fock_matrices(densities)
        new_energy = engine.one_electron_energy(densities)
        new_energy += engine.two_electron_energy(densities, v_common, corrections)
        e_delta = abs(new_energy - energy) if iteration > 1 else math.inf
        energy = new_energy
        history.append((iteration, energy, e_delta, d_delta))
        if e_delta < options.e_tol and d_delta < options.d_tol:
            converged = True
            break

    # final diagnostics on the pure final levels (mixed densities converge to
    # these): the trace formula then matches the assembled energy identically
    pure = {occ: engine.level_density(levels_by_occ[occ]) for occ in engine.occs}
    v_common, corrections, _ = engine.fock_matrices(pure)
    trace_sum = 0.0
    for occ in engine.occs:
        dens = pure[occ]
        eps = engine.shell_fock_expectation(occ, dens, v_common, corrections)
        h_aa = float(np.sum(dens * engine.h[occ.symmetry.kappa]))
        trace_sum += occ.n_a * (eps + h_aa)
    trace = 0.5 * trace_sum

    # report each level at its own shell's Fock expectation: for closed
    # blocks this equals the iterated eigenvalue, while an open shell drops
    # the self-interaction its block-averaged eigenvalue still carries
    final_levels = {}
    for occ in engine.occs:
        lv = levels_by_occ[occ]
        eps = engine.shell_fock_expectation(occ, pure[occ], v_common, corrections)
        final_levels[occ] = replace(lv, energy=eps)

    levels = tuple(
        sorted((final_levels[occ] for occ in engine.occs), key=_level_sort_key)
    )
    return ScfState(
        levels=levels,
        total_energy=energy,
        iteration=iteration,
        energy_delta=e_delta,
        density_delta=d_delta,
        converged=converged,
        history=tuple(history),
        trace_energy=trace,
    )
