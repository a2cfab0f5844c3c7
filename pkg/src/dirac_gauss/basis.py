"""Gaussian radial basis sets.

Large-component primitives are r^(l+1)*exp(-zeta*r^2); the matching small
components come from the kinetic-balance operator (d/dr + kappa/r) so a
finite basis cannot collapse into the negative-energy continuum.  A plain
text file format carries externally supplied exponent sets; an
even-tempered (geometric progression) generator provides self-contained
fallback bases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .angular import AngularSymmetry, L_LETTERS
from .integrals import gauss_moment

__all__ = [
    "RadialFunction",
    "RadialShell",
    "BasisFormatError",
    "even_tempered",
    "large_function",
    "kinetic_balance",
    "parse_basis_file",
    "serialize_basis",
]


class BasisFormatError(ValueError):
    """Malformed basis file; carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class RadialFunction:
    """Sum of c * r^p * exp(-zeta r^2) terms; constructors normalize to unit L2 norm."""

    terms: tuple[tuple[float, int, float], ...]

    def __post_init__(self):
        if not self.terms:
            raise ValueError("RadialFunction needs at least one term")
        for c, p, zeta in self.terms:
            if zeta <= 0:
                raise ValueError("Gaussian exponents must be positive")
            if p < 0 or p != int(p):
                raise ValueError("powers must be nonnegative integers")

    @property
    def norm2(self) -> float:
        """∫ f(r)^2 dr from closed-form Gaussian moments."""
        total = 0.0
        for ci, pi, zi in self.terms:
            for cj, pj, zj in self.terms:
                total += ci * cj * gauss_moment(pi + pj, zi + zj)
        return total

    def normalized(self) -> "RadialFunction":
        scale = 1.0 / math.sqrt(self.norm2)
        return RadialFunction(tuple((c * scale, p, z) for c, p, z in self.terms))

    def __call__(self, r):
        """Evaluate pointwise; accepts scalars or numpy arrays."""
        import numpy as np

        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c, p, z in self.terms:
            out += c * r**p * np.exp(-z * r * r)
        return out


@dataclass(frozen=True)
class RadialShell:
    """Large-component exponents of one kappa block, sorted descending."""

    symmetry: AngularSymmetry
    exponents: tuple[float, ...]

    def __post_init__(self):
        if not self.exponents:
            raise ValueError("RadialShell needs at least one exponent")
        if any(z <= 0 for z in self.exponents):
            raise ValueError("exponents must be positive")
        if len(set(self.exponents)) != len(self.exponents):
            raise ValueError(
                f"duplicate exponents in kappa={self.symmetry.kappa} shell"
            )
        object.__setattr__(
            self, "exponents", tuple(sorted(self.exponents, reverse=True))
        )

    @property
    def size(self) -> int:
        return len(self.exponents)

    def large_functions(self) -> list[RadialFunction]:
        return [large_function(self.symmetry, z) for z in self.exponents]

    def small_functions(self) -> list[RadialFunction]:
        return [kinetic_balance(self.symmetry, z) for z in self.exponents]


def even_tempered(alpha: float, beta: float, count: int) -> list[float]:
    """Geometric progression of exponents alpha * beta^k, k = 0..count-1."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if beta <= 1:
        raise ValueError("beta must exceed 1, otherwise exponents degenerate")
    if count < 1:
        raise ValueError("count must be at least 1")
    return [alpha * beta**k for k in range(count)]


def large_function(symmetry: AngularSymmetry, zeta: float) -> RadialFunction:
    """Normalized large-component primitive r^(l+1) * exp(-zeta r^2)."""
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    l = symmetry.l_large
    return RadialFunction(((1.0, l + 1, zeta),)).normalized()


def kinetic_balance(symmetry: AngularSymmetry, zeta: float) -> RadialFunction:
    """Normalized image of the large primitive under (d/dr + kappa/r).

    (d/dr + kappa/r) r^(l+1) e^(-zeta r^2)
        = (l+1+kappa) r^l e^(-zeta r^2) - 2 zeta r^(l+2) e^(-zeta r^2),
    which collapses to the single r^(l+2) term whenever kappa = -(l+1).
    """
    if zeta <= 0:
        raise ValueError("zeta must be positive")
    l = symmetry.l_large
    kappa = symmetry.kappa
    lead = float(l + 1 + kappa)
    terms = []
    if lead != 0.0:
        terms.append((lead, l, zeta))
    terms.append((-2.0 * zeta, l + 2, zeta))
    return RadialFunction(tuple(terms)).normalized()


def _shells_for_l(l: int, exponents: list[float]) -> list[RadialShell]:
    """One shell per kappa derived from an l block (two for l > 0)."""
    kappas = [-(l + 1)] if l == 0 else [l, -(l + 1)]
    return [
        RadialShell(AngularSymmetry(kappa), tuple(exponents)) for kappa in kappas
    ]


def parse_basis_file(text: str) -> dict[AngularSymmetry, RadialShell]:
    """Parse the plain-text exponent format into kappa-keyed shells.

    Format: header ``element <symbol> Z=<integer>``, then per-l blocks of a
    letter line (S/P/D/F/G) followed by one exponent per line.  ``#``
    starts a comment.  Exponents are deduplicated and sorted descending;
    l > 0 blocks populate both kappa = l and kappa = -(l+1).
    """
    header_seen = False
    blocks: dict[int, list[float]] = {}
    block_order: list[int] = []
    current_l: int | None = None
    letters = {c.upper(): i for i, c in enumerate(L_LETTERS[:5])}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            parts = line.split()
            if len(parts) != 3 or parts[0] != "element" or not parts[2].startswith("Z="):
                raise BasisFormatError(
                    "expected header 'element <symbol> Z=<integer>'", lineno
                )
            try:
                int(parts[2][2:])
            except ValueError:
                raise BasisFormatError("Z must be an integer", lineno) from None
            header_seen = True
            continue
        if line.upper() in letters:
            l = letters[line.upper()]
            if l in blocks:
                raise BasisFormatError(f"duplicate {line.upper()} block", lineno)
            blocks[l] = []
            block_order.append(l)
            current_l = l
            continue
        if current_l is None:
            raise BasisFormatError(f"exponent before any l block: {line!r}", lineno)
        try:
            zeta = float(line)
        except ValueError:
            raise BasisFormatError(f"cannot parse exponent {line!r}", lineno) from None
        if zeta <= 0:
            raise BasisFormatError(f"exponent must be positive, got {zeta}", lineno)
        blocks[current_l].append(zeta)

    if not header_seen:
        raise BasisFormatError("missing 'element' header line")
    if not blocks:
        raise BasisFormatError("no l blocks found")
    for l in block_order:
        if not blocks[l]:
            raise BasisFormatError(f"empty {L_LETTERS[l].upper()} block")

    shells: dict[AngularSymmetry, RadialShell] = {}
    for l in block_order:
        unique = sorted(set(blocks[l]), reverse=True)
        for shell in _shells_for_l(l, unique):
            shells[shell.symmetry] = shell
    return shells


def serialize_basis(
    shells: dict[AngularSymmetry, RadialShell], symbol: str, Z: int
) -> str:
    """Inverse of parse_basis_file; parsing the output reproduces the exponents."""
    by_l: dict[int, tuple[float, ...]] = {}
    for sym, shell in shells.items():
        l = sym.l_large
        if l in by_l and by_l[l] != shell.exponents:
            raise ValueError(f"inconsistent exponents between kappa partners of l={l}")
        by_l[l] = shell.exponents
    lines = [f"element {symbol} Z={int(Z)}"]
    for l in sorted(by_l):
        lines.append(L_LETTERS[l].upper())
        lines.extend(f"{z:.16e}" for z in by_l[l])
    return "\n".join(lines) + "\n"


def even_tempered_shells(
    alpha: float, beta: float, counts: dict[int, int]
) -> dict[AngularSymmetry, RadialShell]:
    """Even-tempered shells for each l in counts (l -> number of exponents)."""
    shells: dict[AngularSymmetry, RadialShell] = {}
    for l, count in sorted(counts.items()):
        exps = even_tempered(alpha, beta, count)
        for shell in _shells_for_l(l, exps):
            shells[shell.symmetry] = shell
    return shells
