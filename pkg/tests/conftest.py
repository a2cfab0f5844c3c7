"""Shared quadrature and symbolic oracles for the test suite.

Every closed-form integral in the package is checked against an
independent numeric route: adaptive quadrature in scale-normalized
variables (so exponents spanning 1e-2..1e9 stay well conditioned) and
sympy for angular coefficients.
"""

import math

import numpy as np
import pytest
from scipy import integrate


def terms_of(f):
    return getattr(f, "terms", f)


def eval_terms(terms, r):
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for c, p, z in terms_of(terms):
        out += c * r**p * np.exp(-z * r * r)
    return out


def _scales(*term_lists):
    zs = [z for terms in term_lists for _, _, z in terms_of(terms)]
    return min(zs), max(zs)


def quad_product(f, g, weight=lambda r: 1.0, epsrel=1e-13):
    """∫ f(r) g(r) weight(r) dr in a scale-normalized variable."""
    zmin, zmax = _scales(f, g)
    scale = 1.0 / math.sqrt(zmin + zmax)

    def integrand(t):
        r = t * scale
        return eval_terms(f, r) * eval_terms(g, r) * weight(r) * scale

    # break the range at the scale ratios so quad resolves every Gaussian
    pts = sorted(
        {min(40.0, math.sqrt((zmin + zmax) / (2 * z))) for _, _, z in terms_of(f)}
        | {min(40.0, math.sqrt((zmin + zmax) / (2 * z))) for _, _, z in terms_of(g)}
    )
    val, err = integrate.quad(
        integrand, 0.0, 40.0, points=pts, epsabs=0.0, epsrel=epsrel, limit=400
    )
    return val


def slater_quad(l, rho1, rho2, epsrel=1e-11):
    """2-D quadrature oracle for R^l between two density term lists.

    Inner integrals run in s = x * r1 (region s < r1) and s = r1 / x
    (region s > r1), so both are smooth maps of (0, 1].
    """
    z1min, z1max = _scales(rho1)

    def inner_lower(r1):
        def f(x):
            s = x * r1
            return eval_terms(rho2, s) * (x**l) * r1
        val, _ = integrate.quad(f, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
        return val / r1

    def inner_upper(r1):
        def f(x):
            s = r1 / x
            return eval_terms(rho2, s) * (r1 / s) ** (l + 1) * r1 / (x * x)
        val, _ = integrate.quad(f, 1e-12, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
        return val / r1

    scale = 1.0 / math.sqrt(z1min)

    def outer(t):
        r1 = t * scale
        return eval_terms(rho1, r1) * (inner_lower(r1) + inner_upper(r1)) * scale

    pts = sorted({min(40.0, math.sqrt(z1min / z)) for _, _, z in terms_of(rho1)})
    val, _ = integrate.quad(
        outer, 0.0, 40.0, points=pts, epsabs=0.0, epsrel=epsrel, limit=400
    )
    return val


def product_terms(f, g):
    out = {}
    for cf, pf, zf in terms_of(f):
        for cg, pg, zg in terms_of(g):
            key = (pf + pg, zf + zg)
            out[key] = out.get(key, 0.0) + cf * cg
    return [(c, p, z) for (p, z), c in out.items()]


def slater_rl_quad(l, fa, fb, fc, fd, epsrel=1e-11):
    """Quadrature value of R^l(ab, cd) matching the slater_rl convention."""
    return slater_quad(l, product_terms(fa, fc), product_terms(fb, fd), epsrel)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
