"""One-electron radial Dirac eigenproblem per kappa block.

The Hamiltonian uses the rest-mass-subtracted energy scale, so electronic
eigenvalues sit near zero while the negative-continuum representatives
cluster near -2c^2.  With restricted kinetic balance and equal large and
small expansion lengths N, every sound basis yields exactly N states on
each side of -c^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .angular import AngularSymmetry
from .integrals import ConditioningError, KappaBlockMatrices, build_block_matrices

__all__ = [
    "SPEED_OF_LIGHT",
    "SpinorLevel",
    "SpectrumSplitError",
    "SupercriticalError",
    "assemble_block",
    "assemble_from_matrices",
    "solve_generalized",
    "select_electronic",
    "sommerfeld_energy",
    "solve_block",
]

SPEED_OF_LIGHT = 137.03602  # atomic units; matches the reference calculations

DEFAULT_LINDEP = 1e-12


class SpectrumSplitError(RuntimeError):
    """Electronic state count differs from N: the basis is pathological."""


class SupercriticalError(ValueError):
    """Point-charge level with Z*alpha >= |kappa| has no bound solution."""


@dataclass(frozen=True)
class SpinorLevel:
    """One solved spinor: (n, kappa), energy, and expansion coefficients."""

    n: int
    symmetry: AngularSymmetry
    energy: float
    coeff_large: np.ndarray
    coeff_small: np.ndarray

    @property
    def kappa(self) -> int:
        return self.symmetry.kappa

    def label(self) -> str:
        return f"{self.n}{self.symmetry.label()}"


def assemble_from_matrices(
    blocks: KappaBlockMatrices, c: float
) -> tuple[np.ndarray, np.ndarray]:
    """(H, S) of one kappa block from precomputed radial matrices."""
    n = blocks.size
    h = np.zeros((2 * n, 2 * n))
    s = np.zeros((2 * n, 2 * n))
    h[:n, :n] = blocks.V_LL
    h[:n, n:] = c * blocks.Pi_SL.T
    h[n:, :n] = c * blocks.Pi_SL
    h[n:, n:] = blocks.V_SS - 2.0 * c * c * blocks.S_SS
    s[:n, :n] = blocks.S_LL
    s[n:, n:] = blocks.S_SS
    return h, s


def assemble_block(shell, model, c: float) -> tuple[np.ndarray, np.ndarray]:
    """Assemble (H, S) for one shell and nucleus model; both exactly symmetric."""
    if c <= 0:
        raise ValueError("speed of light must be positive")
    return assemble_from_matrices(build_block_matrices(shell, model), c)


def solve_generalized(
    h: np.ndarray, s: np.ndarray, lindep_threshold: float = DEFAULT_LINDEP
):
    """Solve H x = lambda S x by canonical orthonormalization.

    Overlap eigenvectors below lindep_threshold * max eigenvalue are
    discarded before the transformed symmetric eigenproblem is solved.
    Returns (eigenvalues ascending, eigenvectors as columns), with the
    eigenvectors S-orthonormal.
    """
    if h.shape != s.shape or h.shape[0] != h.shape[1]:
        raise ValueError("H and S must be square matrices of equal dimension")
    if lindep_threshold <= 0:
        raise ValueError("lindep_threshold must be positive")
    sev, svec = scipy.linalg.eigh(s)
    smax = sev[-1]
    if smax <= 0:
        raise ConditioningError(f"overlap matrix not positive (max eig {smax:.3e})")
    cut = lindep_threshold * smax
    if sev[0] < -cut:
        raise ConditioningError(
            f"overlap eigenvalue {sev[0]:.3e} below -threshold; matrix indefinite"
        )
    keep = sev >= cut
    x = svec[:, keep] / np.sqrt(sev[keep])
    h_t = x.T @ h @ x
    evals, evecs = scipy.linalg.eigh(0.5 * (h_t + h_t.T))
    return evals, x @ evecs


def select_electronic(evals, evecs, symmetry: AngularSymmetry, c: float):
    """Keep electronic states (energy > -c^2) and assign principal numbers.

    With RKB and equal component counts, exactly half of the spectrum must
    survive; any other count signals a pathological basis.
    """
    n_large = evecs.shape[0] // 2
    mask = evals > -c * c
    kept = int(np.count_nonzero(mask))
    if kept == 0:
        raise SpectrumSplitError(f"no electronic states retained (kappa={symmetry.kappa})")
    if kept != len(evals) - kept or kept != n_large:
        raise SpectrumSplitError(
            f"kappa={symmetry.kappa}: {kept} of {len(evals)} states above -c^2, "
            f"expected {n_large}"
        )
    levels = []
    l = symmetry.l_large
    idx = np.where(mask)[0]
    for count, i in enumerate(idx):
        vec = evecs[:, i]
        # fix the arbitrary eigenvector phase by the dominant large coefficient
        lead = np.argmax(np.abs(vec[:n_large]))
        if vec[lead] < 0:
            vec = -vec
        levels.append(
            SpinorLevel(
                n=l + 1 + count,
                symmetry=symmetry,
                energy=float(evals[i]),
                coeff_large=vec[:n_large].copy(),
                coeff_small=vec[n_large:].copy(),
            )
        )
    return levels


def solve_block(shell, model, c: float, lindep_threshold: float = DEFAULT_LINDEP):
    """Assemble and solve one kappa block; returns electronic SpinorLevels."""
    h, s = assemble_block(shell, model, c)
    evals, evecs = solve_generalized(h, s, lindep_threshold)
    return select_electronic(evals, evecs, shell.symmetry, c)


def sommerfeld_energy(n: int, kappa: int, Z: float, c: float = SPEED_OF_LIGHT) -> float:
    """Analytic point-nucleus Dirac level, rest mass subtracted.

    E = c^2 [ (1 + (Z a)^2 / (n - |k| + sqrt(k^2 - (Z a)^2))^2)^(-1/2) - 1 ]
    with a = 1/c.
    """
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    sym = AngularSymmetry(kappa)
    if n < sym.l_large + 1:
        raise ValueError(f"n={n} below l+1={sym.l_large + 1} for kappa={kappa}")
    za = Z / c
    if za >= abs(kappa):
        raise SupercriticalError(
            f"Z*alpha = {za:.4f} >= |kappa| = {abs(kappa)}: level dives"
        )
    gamma = math.sqrt(kappa * kappa - za * za)
    denom = n - abs(kappa) + gamma
    return c * c * (1.0 / math.sqrt(1.0 + (za / denom) ** 2) - 1.0)
