"""Radial matrix elements over polynomial-times-Gaussian functions.

Everything reduces to three primitive families, all evaluated in closed
form with log-space scaling so exponents up to ~1e9 neither overflow nor
underflow:

* gauss_moment      -- ∫ r^n exp(-a r^2) dr
* erf_gauss_moment  -- ∫ r^m erf(c r) exp(-a r^2) dr   (Gaussian-nucleus attraction)
* two_range_moment  -- ∫ r^P exp(-a r^2) [∫_0^r s^Q exp(-b s^2) ds] dr

The last one carries the two-electron Slater integrals R^l.  It is
evaluated by one of three schemes picked per exponent ratio: a
positive-term hypergeometric series (always convergent, cancellation
free), an erf/polynomial closed form when the inner Gaussian saturates
across the outer weight, and an elementary form for odd inner powers.
Grids of R^l over basis-pair exponents are derived from a single base
evaluation per grid through the two all-positive recursions (inner power
down, outer power up).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.special import gammaln

if TYPE_CHECKING:
    from .angular import AngularSymmetry
    from .basis import RadialShell

__all__ = [
    "IntegralError",
    "ConditioningError",
    "gauss_moment",
    "erf_gauss_moment",
    "two_range_moment",
    "overlap",
    "pi_element",
    "nuclear_element",
    "slater_rl",
    "f_integral",
    "g_integral",
    "KappaBlockMatrices",
    "build_block_matrices",
    "SlaterCache",
]

SCREEN_THRESHOLD = 1e-18  # relative coefficient-product cutoff in term sums
_SQRT_PI = math.sqrt(math.pi)


class IntegralError(RuntimeError):
    """Integral evaluation failed to converge; message carries diagnostics."""


class ConditioningError(RuntimeError):
    """An overlap-type matrix is numerically singular beyond the threshold."""


# ---------------------------------------------------------------------------
# primitive moments


def gauss_moment(n: int, a: float) -> float:
    """∫_0^∞ r^n exp(-a r^2) dr = Γ((n+1)/2) / (2 a^((n+1)/2)), in log space."""
    if a <= 0:
        raise ValueError("exponent a must be positive")
    if n < 0:
        raise ValueError("moment power must be nonnegative")
    s = 0.5 * (n + 1)
    return 0.5 * math.exp(math.lgamma(s) - s * math.log(a))


def _gauss_moment_arr(n: int, a):
    """Vectorized gauss_moment over an exponent array."""
    s = 0.5 * (n + 1)
    return 0.5 * np.exp(gammaln(s) - s * np.log(a))


def erf_gauss_moment(m: int, a, c):
    """∫_0^∞ r^m erf(c r) exp(-a r^2) dr by upward integration-by-parts recursion.

    Seeded by the arctan form at m = 0 and the elementary form at m = 1;
    every recursion term is positive, so the chain is stable for any
    exponent ratio.  Accepts scalars or broadcastable arrays for a and c.
    """
    if m < 0:
        raise ValueError("moment power must be nonnegative")
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    scalar = a.ndim == 0 and c.ndim == 0
    a, c = np.broadcast_arrays(a, c)
    ac = a + c * c
    if m % 2 == 0:
        cur = np.arctan(c / np.sqrt(a)) / np.sqrt(np.pi * a)
        start = 0
    else:
        cur = c / (2.0 * a * np.sqrt(ac))
        start = 1
    for k in range(start + 2, m + 1, 2):
        cur = (k - 1) / (2.0 * a) * cur + c / (a * _SQRT_PI) * _gauss_moment_arr(
            k - 1, ac
        )
    return float(cur) if scalar else cur


# ---------------------------------------------------------------------------
# two-range moment W(P, Q, a, b) = ∫ r^P e^{-a r^2} G_Q(r; b) dr,
# with G_Q(r; b) = ∫_0^r s^Q e^{-b s^2} ds


def _w_zseries(P, Q, a, b, max_terms=2_000_000):
    """Positive-term hypergeometric series; valid for all P + Q >= -1, Q >= 0.

    W = Γ(M) (a+b)^{-M} / 4 * Σ_k u_k,  u_0 = 1/c,
    u_{k+1} = u_k * z * (M+k)/(k+1+c),  z = b/(a+b),
    with M = (P+Q+2)/2 and c = (Q+1)/2.  Convergence slows as z -> 1.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scalar = a.ndim == 0 and b.ndim == 0
    a, b = np.broadcast_arrays(a, b)
    M = 0.5 * (P + Q + 2)
    cc = 0.5 * (Q + 1)
    apb = a + b
    z = b / apb
    z_max = float(np.max(z))
    term = np.full(a.shape, 1.0 / cc)
    total = term.copy()
    k = 0
    while True:
        term = term * z * ((M + k) / (k + 1 + cc))
        total += term
        k += 1
        # growth phase ends once the worst-case term ratio drops below 1
        if (M + k) * z_max < (k + 1 + cc):
            tail = term * (z / (1.0 - z))
            if np.all(tail <= 1e-17 * total):
                break
        if k >= max_terms:
            raise IntegralError(
                f"two-range series not converged after {k} terms "
                f"(worst z = {z_max:.6f})"
            )
    pre = 0.25 * np.exp(math.lgamma(M) - M * np.log(apb))
    out = pre * total
    return float(out) if scalar else out


def _w_erf(P, Q, a, b):
    """Closed form for even Q and odd P >= 1 via erf moments.

    G_Q(r) = beta * erf(sqrt(b) r) - e^{-b r^2} Σ_j g_j r^{2j+1}; accurate
    when the inner Gaussian saturates across the outer weight, i.e. for
    b/a ≳ (Q+1)/(P+1).
    """
    assert Q % 2 == 0 and P % 2 == 1 and P >= 1
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scalar = a.ndim == 0 and b.ndim == 0
    a, b = np.broadcast_arrays(a, b)
    apb = a + b
    beta = _SQRT_PI / (2.0 * np.sqrt(b))
    poly = []  # coefficient of r^(2j+1) e^{-b r^2} at index j
    for q in range(2, Q + 1, 2):
        fac = (q - 1) / (2.0 * b)
        poly = [g * fac for g in poly]
        poly.append(1.0 / (2.0 * b))
        beta = beta * fac
    out = beta * erf_gauss_moment(P, a, np.sqrt(b))
    for j, g in enumerate(poly):
        out = out - g * _gauss_moment_arr(P + 2 * j + 1, apb)
    return float(out) if scalar else out


def _w_elementary(P, Q, a, b):
    """Closed form for odd Q and P >= 0; stable for b ≳ a."""
    assert Q % 2 == 1 and P >= 0
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scalar = a.ndim == 0 and b.ndim == 0
    a, b = np.broadcast_arrays(a, b)
    k = (Q - 1) // 2
    apb = a + b
    term = _gauss_moment_arr(P, apb)
    acc = term.copy()
    for j in range(1, k + 1):
        term = term * b * (P + 2 * j - 1) / (2.0 * apb * j)
        acc = acc + term
    pre = 0.5 * np.exp(math.lgamma(k + 1) - (k + 1) * np.log(b))
    out = pre * (_gauss_moment_arr(P, a) - acc)
    return float(out) if scalar else out


def _erf_gate(P: int, Q: int) -> float:
    """b/a ratio above which the erf closed form keeps full precision."""
    return 2.0 * max(1.0, (Q + 1.0) / (P + 1.0))


def two_range_moment(P: int, Q: int, a: float, b: float) -> float:
    """W(P, Q, a, b) for integer powers, Q >= 0 and P + Q >= -1."""
    if Q < 0:
        raise ValueError("inner power Q must be nonnegative")
    if P + Q < -1:
        raise ValueError("two-range moment diverges for P + Q < -1")
    if a <= 0 or b <= 0:
        raise ValueError("exponents must be positive")
    if Q % 2 == 0 and P % 2 == 1 and P >= 1 and b >= _erf_gate(P, Q) * a:
        return _w_erf(P, Q, a, b)
    if Q % 2 == 1 and P >= 0 and b >= 2.0 * a:
        return _w_elementary(P, Q, a, b)
    return _w_zseries(P, Q, a, b)


def _w_flat(P: int, Q: int, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vectorized two_range_moment over paired flat arrays."""
    out = np.empty_like(a)
    if Q % 2 == 0 and P % 2 == 1 and P >= 1:
        hi = b >= _erf_gate(P, Q) * a
        hi_fn = _w_erf
    elif Q % 2 == 1 and P >= 0:
        hi = b >= 2.0 * a
        hi_fn = _w_elementary
    else:
        hi = np.zeros(a.shape, dtype=bool)
        hi_fn = None
    if np.any(hi):
        out[hi] = hi_fn(P, Q, a[hi], b[hi])
    lo = ~hi
    if np.any(lo):
        # separate the fast-converging small-z entries from the slow tail
        near = lo & (b < 0.5 * a)
        far = lo & ~near
        if np.any(near):
            out[near] = _w_zseries(P, Q, a[near], b[near])
        if np.any(far):
            out[far] = _w_zseries(P, Q, a[far], b[far])
    return out


def _w_table(l, powers1, powers2, e1, e2):
    """Tables of W(p1 - l - 1, p2 + l, e1, e2) for channel powers stepping by 2.

    e1 and e2 are paired flat arrays of equal shape.  One full evaluation
    at (min p1, max p2) seeds two all-positive recursions: inner power
    down,
        W(P, Q-2) = (2 b W(P, Q) + A(P+Q-1, a+b)) / (Q - 1),
    and outer power up,
        W(P+2, Q) = ((P+1) W(P, Q) + A(P+Q+1, a+b)) / (2 a).
    """
    p1s = sorted(powers1)
    p2s = sorted(powers2)
    assert all(q - p == 2 for p, q in zip(p1s, p1s[1:]))
    assert all(q - p == 2 for p, q in zip(p2s, p2s[1:]))
    log_ee = np.log(e1 + e2)

    def mom(n):
        s = 0.5 * (n + 1)
        return 0.5 * np.exp(gammaln(s) - s * log_ee)

    table: dict[tuple[int, int], np.ndarray] = {}
    p1_0 = p1s[0]
    base_P = p1_0 - l - 1
    table[(p1_0, p2s[-1])] = _w_flat(base_P, p2s[-1] + l, e1, e2)
    for p2_hi, p2 in zip(list(reversed(p2s)), list(reversed(p2s))[1:]):
        Q = p2_hi + l
        table[(p1_0, p2)] = (2.0 * e2 * table[(p1_0, p2_hi)] + mom(base_P + Q - 1)) / (
            Q - 1
        )
    for p2 in p2s:
        Q = p2 + l
        for p1_lo, p1 in zip(p1s, p1s[1:]):
            P = p1_lo - l - 1
            table[(p1, p2)] = ((P + 1) * table[(p1_lo, p2)] + mom(P + Q + 1)) / (
                2.0 * e1
            )
    return table


# ---------------------------------------------------------------------------
# one-electron matrix elements over RadialFunction expansions


def _terms_of(f) -> tuple[tuple[float, int, float], ...]:
    """Accept a RadialFunction or a raw iterable of (coeff, power, zeta)."""
    terms = getattr(f, "terms", f)
    return tuple((float(c), int(p), float(z)) for c, p, z in terms)


def _screened(pairs):
    """Drop term pairs with negligible coefficient products."""
    if not pairs:
        return pairs
    top = max(abs(c) for c, _, _ in pairs)
    cut = SCREEN_THRESHOLD * top
    return [t for t in pairs if abs(t[0]) >= cut]


def _product_terms(f, g):
    """Termwise product of two expansions: (coeff, power, exponent) triples."""
    acc: dict[tuple[int, float], float] = {}
    for cf, pf, zf in _terms_of(f):
        for cg, pg, zg in _terms_of(g):
            key = (pf + pg, zf + zg)
            acc[key] = acc.get(key, 0.0) + cf * cg
    return _screened([(c, p, z) for (p, z), c in acc.items()])


def overlap(f, g) -> float:
    """∫ f(r) g(r) dr via Gaussian moments; symmetric in its arguments."""
    return math.fsum(c * gauss_moment(p, z) for c, p, z in _product_terms(f, g))


def _derivative_plus_kappa_over_r(terms, kappa: int):
    """Symbolic (d/dr + kappa/r) applied to a term expansion."""
    out = []
    for c, p, z in terms:
        if p + kappa != 0:
            if p == 0:
                raise ValueError("operator on r^0 term produces non-integrable 1/r")
            out.append((c * (p + kappa), p - 1, z))
        out.append((-2.0 * z * c, p + 1, z))
    return out


def pi_element(small, symmetry: "AngularSymmetry", large_zeta: float) -> float:
    """⟨small | (d/dr + kappa/r) | large⟩ with the normalized large primitive.

    The operator is applied symbolically to r^(l+1) e^{-zeta r^2} and the
    result integrated by Gaussian moments.
    """
    from .basis import large_function

    large = large_function(symmetry, large_zeta)
    image = _derivative_plus_kappa_over_r(_terms_of(large), symmetry.kappa)
    return overlap(small, image)


def nuclear_element(f, g, model) -> float:
    """⟨f| V_nuc |g⟩ for a point or Gaussian nucleus."""
    pairs = _product_terms(f, g)
    if model.is_point:
        for _, p, _ in pairs:
            if p < 1:
                raise ValueError("point-nucleus element needs combined power >= 1")
        return -model.Z * math.fsum(c * gauss_moment(p - 1, z) for c, p, z in pairs)
    root_eta = math.sqrt(model.eta)
    return -model.Z * math.fsum(
        c * erf_gauss_moment(p - 1, z, root_eta) for c, p, z in pairs
    )


# ---------------------------------------------------------------------------
# two-electron radial (Slater) integrals, scalar API


def _slater_r_density(l: int, rho1, rho2) -> float:
    """R^l between two radial density expansions (term lists)."""
    total = 0.0
    for c1, p1, a in rho1:
        for c2, p2, b in rho2:
            w = two_range_moment(p1 - l - 1, p2 + l, a, b) + two_range_moment(
                p2 - l - 1, p1 + l, b, a
            )
            total += c1 * c2 * w
    return total


def slater_rl(l: int, fa, fb, fc, fd) -> float:
    """R^l(ab, cd) = ∬ f_a(1) f_c(1) [r_<^l / r_>^(l+1)] f_b(2) f_d(2) dr1 dr2."""
    if l < 0:
        raise ValueError("multipole order l must be nonnegative")
    return _slater_r_density(l, _product_terms(fa, fc), _product_terms(fb, fd))


def _orbital_density(orbital):
    u, v = orbital
    return _screened(_product_terms(u, u) + _product_terms(v, v))


def f_integral(l: int, orbital_a, orbital_b) -> float:
    """Direct Slater integral F_l(a, b) over (u, v) radial spinor pairs."""
    return _slater_r_density(
        l, _orbital_density(orbital_a), _orbital_density(orbital_b)
    )


def g_integral(l: int, orbital_a, orbital_b) -> float:
    """Exchange Slater integral G_l(a, b); equals F_l when the orbitals coincide."""
    ua, va = orbital_a
    ub, vb = orbital_b
    rho = _screened(_product_terms(ua, ub) + _product_terms(va, vb))
    return _slater_r_density(l, rho, rho)


# ---------------------------------------------------------------------------
# kappa-block one-electron matrices


@dataclass(frozen=True)
class ComponentRows:
    """Exponents plus (coefficient array, power) rows of one component set."""

    zetas: np.ndarray
    rows: tuple[tuple[np.ndarray, int], ...]

    @property
    def size(self) -> int:
        return self.zetas.size


def component_rows(symmetry: "AngularSymmetry", zetas, component: str) -> ComponentRows:
    """Normalized large ('L') or kinetically balanced small ('S') function rows."""
    z = np.asarray(zetas, dtype=float)
    l = symmetry.l_large
    if component == "L":
        norm = 1.0 / np.sqrt(_gauss_moment_arr(2 * l + 2, 2.0 * z))
        return ComponentRows(z, ((norm, l + 1),))
    if component != "S":
        raise ValueError("component must be 'L' or 'S'")
    lead = float(l + 1 + symmetry.kappa)
    c2 = -2.0 * z
    if lead == 0.0:
        n2 = c2 * c2 * _gauss_moment_arr(2 * l + 4, 2.0 * z)
        norm = 1.0 / np.sqrt(n2)
        return ComponentRows(z, ((c2 * norm, l + 2),))
    n2 = (
        lead * lead * _gauss_moment_arr(2 * l, 2.0 * z)
        + 2.0 * lead * c2 * _gauss_moment_arr(2 * l + 2, 2.0 * z)
        + c2 * c2 * _gauss_moment_arr(2 * l + 4, 2.0 * z)
    )
    norm = 1.0 / np.sqrt(n2)
    return ComponentRows(z, ((lead * norm, l), (c2 * norm, l + 2)))


def _pair_channels(ca: ComponentRows, cb: ComponentRows):
    """Exponent-sum grid and power-keyed coefficient grids of f_i * g_j products."""
    e = ca.zetas[:, None] + cb.zetas[None, :]
    channels: dict[int, np.ndarray] = {}
    for coeff_a, pow_a in ca.rows:
        for coeff_b, pow_b in cb.rows:
            p = pow_a + pow_b
            grid = np.asarray(coeff_a)[:, None] * np.asarray(coeff_b)[None, :]
            channels[p] = channels.get(p, 0.0) + grid
    return e, channels


def _channel_moment_matrix(e, channels, shift: int, model=None):
    """Σ_t C_t * moment(P_t + shift, e); nuclear-attraction form when model given."""
    out = np.zeros_like(e)
    root_eta = None
    if model is not None and not model.is_point:
        root_eta = math.sqrt(model.eta)
    for p, coeff in channels.items():
        n = p + shift
        if root_eta is None:
            out += coeff * _gauss_moment_arr(n, e)
        else:
            out += coeff * erf_gauss_moment(n, e, root_eta)
    return out


@dataclass(frozen=True)
class KappaBlockMatrices:
    """One-electron radial matrices of a kappa block (RKB pairing)."""

    symmetry: "AngularSymmetry"
    S_LL: np.ndarray
    S_SS: np.ndarray
    Pi_SL: np.ndarray
    V_LL: np.ndarray
    V_SS: np.ndarray

    @property
    def size(self) -> int:
        return self.S_LL.shape[0]


def build_block_matrices(shell: "RadialShell", model) -> KappaBlockMatrices:
    """Overlap, kinetic-coupling and nuclear-attraction matrices of one block."""
    sym = shell.symmetry
    z = np.asarray(shell.exponents, dtype=float)
    large = component_rows(sym, z, "L")
    small = component_rows(sym, z, "S")

    e_ll, ch_ll = _pair_channels(large, large)
    e_ss, ch_ss = _pair_channels(small, small)
    s_ll = _channel_moment_matrix(e_ll, ch_ll, 0)
    s_ss = _channel_moment_matrix(e_ss, ch_ss, 0)
    v_ll = -model.Z * _channel_moment_matrix(e_ll, ch_ll, -1, model)
    v_ss = -model.Z * _channel_moment_matrix(e_ss, ch_ss, -1, model)

    # operator image of each normalized large primitive, paired with small rows
    l = sym.l_large
    lead = float(l + 1 + sym.kappa)
    norm_large = large.rows[0][0]
    image_rows = []
    if lead != 0.0:
        image_rows.append((lead * norm_large, l))
    image_rows.append((-2.0 * z * norm_large, l + 2))
    image = ComponentRows(z, tuple(image_rows))
    e_sl, ch_sl = _pair_channels(small, image)
    pi_sl = _channel_moment_matrix(e_sl, ch_sl, 0)

    return KappaBlockMatrices(sym, s_ll, s_ss, pi_sl, v_ll, v_ss)


# ---------------------------------------------------------------------------
# cached R^l grids over basis-pair exponents for the SCF


def _rl_grid(l, e1, ch1, e2, ch2, symmetric: bool):
    """R^l grid between two coordinate pair-bases given as channel dicts.

    Result[i, j] = Σ_{p1,p2} C1_{p1}[i] C2_{p2}[j] *
        ( W(p1-l-1, p2+l, e1[i], e2[j]) + W(p2-l-1, p1+l, e2[j], e1[i]) ).
    With symmetric=True the two descriptors must be identical; only the
    upper triangle is evaluated and mirrored.
    """
    p1s = sorted(ch1)
    p2s = sorted(ch2)
    f1 = e1.ravel()
    f2 = e2.ravel()
    n1, n2 = f1.size, f2.size
    c1 = {p: np.asarray(ch1[p]).ravel() for p in p1s}
    c2 = {p: np.asarray(ch2[p]).ravel() for p in p2s}

    if symmetric:
        assert n1 == n2 and p1s == p2s
        iu = np.triu_indices(n1)
        a = f1[iu[0]]
        b = f1[iu[1]]
        t_ab = _w_table(l, p1s, p2s, a, b)
        t_ba = _w_table(l, p1s, p2s, b, a)
        flat = np.zeros(a.shape)
        for p1 in p1s:
            for p2 in p2s:
                flat += c1[p1][iu[0]] * c2[p2][iu[1]] * t_ab[(p1, p2)]
                flat += c1[p2][iu[0]] * c2[p1][iu[1]] * t_ba[(p1, p2)]
        out = np.zeros((n1, n1))
        out[iu] = flat
        out.T[iu] = flat
        return out

    a = np.repeat(f1, n2)
    b = np.tile(f2, n1)
    t_fwd = _w_table(l, p1s, p2s, a, b)
    t_rev = _w_table(l, p2s, p1s, b, a)
    out = np.zeros(a.shape)
    for p1 in p1s:
        r1 = np.repeat(c1[p1], n2)
        for p2 in p2s:
            r2 = np.tile(c2[p2], n1)
            out += r1 * r2 * (t_fwd[(p1, p2)] + t_rev[(p2, p1)])
    return out.reshape(n1, n2)


def _packed_pair(comp: ComponentRows):
    """Upper-triangle packing of the within-block pair basis of one component."""
    n = comp.zetas.size
    iu = np.triu_indices(n)
    e_full, channels_full = _pair_channels(comp, comp)
    e = e_full[iu]
    channels = {p: grid[iu] for p, grid in channels_full.items()}
    return e, channels, iu, n


class SlaterCache:
    """Precomputed R^l grids over basis pairs, keyed by kappa-block pairs.

    Direct grids carry R^0 between within-block densities (the Coulomb
    potential); exchange grids carry R^l between cross-block products (the
    exchange kernels).  Grids are iteration-independent, so one fill serves
    every SCF cycle and both nuclear models.  Filling distinct keys may run
    on several threads; reads after the fill are safe to share.
    """

    def __init__(self, shells: dict):
        self.shells = {sym.kappa: shell for sym, shell in shells.items()}
        self._comps: dict[tuple[int, str], ComponentRows] = {}
        self._direct: dict[tuple[int, int, str, str], dict] = {}
        self._exchange: dict[tuple[int, int, int, str, str], np.ndarray] = {}

    def _comp(self, kappa: int, component: str) -> ComponentRows:
        key = (kappa, component)
        if key not in self._comps:
            shell = self.shells[kappa]
            self._comps[key] = component_rows(
                shell.symmetry, np.asarray(shell.exponents), component
            )
        return self._comps[key]

    # -- direct (Coulomb) grids -------------------------------------------

    def _direct_entry(self, ka: int, kb: int, x: str, y: str):
        for key in ((ka, kb, x, y), (kb, ka, y, x)):
            if key in self._direct:
                return key, self._direct[key]
        ea, cha, iua, na = _packed_pair(self._comp(ka, x))
        eb, chb, iub, nb = _packed_pair(self._comp(kb, y))
        sym = ka == kb and x == y
        grid = _rl_grid(0, ea, cha, eb, chb, symmetric=sym)
        key = (ka, kb, x, y)
        self._direct[key] = {
            "grid": grid,
            "iu_a": iua,
            "iu_b": iub,
            "na": na,
            "nb": nb,
        }
        return key, self._direct[key]

    def direct_matrix(self, ka: int, kb: int, x: str, y: str, dens_b) -> np.ndarray:
        """Coulomb matrix on (x, x) of block ka from density block (y, y) of kb."""
        key, entry = self._direct_entry(ka, kb, x, y)
        grid = entry["grid"]
        if key == (ka, kb, x, y):
            iu_a, iu_b, na = entry["iu_a"], entry["iu_b"], entry["na"]
        else:
            grid = grid.T
            iu_a, iu_b, na = entry["iu_b"], entry["iu_a"], entry["nb"]
        vec = dens_b[iu_b] * np.where(iu_b[0] == iu_b[1], 1.0, 2.0)
        packed = grid @ vec
        out = np.zeros((na, na))
        out[iu_a] = packed
        out.T[iu_a] = packed
        return out

    def direct_energy(self, ka: int, kb: int, x: str, y: str, da, db) -> float:
        """⟨rho_a(x) | r_>^-1 | rho_b(y)⟩ between two density blocks."""
        return float(np.sum(self.direct_matrix(ka, kb, x, y, db) * da))

    # -- exchange grids -----------------------------------------------------

    def _exchange_entry(self, ka: int, kb: int, l: int, x: str, y: str):
        for key in (
            (ka, kb, l, x, y),
            (ka, kb, l, y, x),
            (kb, ka, l, x, y),
            (kb, ka, l, y, x),
        ):
            if key in self._exchange:
                return key, self._exchange[key]
        e1, ch1 = _pair_channels(self._comp(ka, x), self._comp(kb, x))
        e2, ch2 = _pair_channels(self._comp(ka, y), self._comp(kb, y))
        na = self._comp(ka, x).size
        nb = self._comp(kb, x).size
        grid = _rl_grid(l, e1, ch1, e2, ch2, symmetric=(x == y))
        grid = grid.reshape(na, nb, na, nb)
        key = (ka, kb, l, x, y)
        self._exchange[key] = grid
        return key, grid

    def exchange_matrix(
        self, ka: int, kb: int, l: int, x: str, y: str, dens_b
    ) -> np.ndarray:
        """K^{xy}[p, q] = Σ_{rs} D_b^{xy}[r, s] R^l(x_p x_r | y_q y_s) on block ka.

        dens_b is the (x, y) block of the source-shell density on kb.
        """
        key, grid = self._exchange_entry(ka, kb, l, x, y)
        ka0, _, _, x0, y0 = key
        if (ka0, x0, y0) == (ka, x, y):
            return np.einsum("prqs,rs->pq", grid, dens_b)
        if (ka0, x0, y0) == (ka, y, x):
            # stored with swapped components: wanted[(p,r),(q,s)] = grid[q,s,p,r]
            return np.einsum("qspr,rs->pq", grid, dens_b)
        if (ka0, x0, y0) == (kb, x, y):
            return np.einsum("prqs,pq->rs", grid, dens_b)
        return np.einsum("qspr,pq->rs", grid, dens_b)

    def exchange_energy(
        self, ka: int, kb: int, l: int, x: str, y: str, da, db
    ) -> float:
        return float(np.sum(self.exchange_matrix(ka, kb, l, x, y, db) * da))

    def fill(self, tasks, threads: int = 1):
        """Precompute grids for (kind, ka, kb, l, x, y) task tuples."""

        def run(task):
            kind, ka, kb, l, x, y = task
            if kind == "direct":
                self._direct_entry(ka, kb, x, y)
            else:
                self._exchange_entry(ka, kb, l, x, y)

        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(run, tasks))
        else:
            for task in tasks:
                run(task)
