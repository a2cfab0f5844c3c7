import math

import numpy as np
import pytest
from scipy import integrate

from dirac_gauss.angular import AngularSymmetry, allowed_l_range
from dirac_gauss.basis import RadialShell, kinetic_balance, large_function
from dirac_gauss.integrals import (
    SlaterCache,
    build_block_matrices,
    component_rows,
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
from dirac_gauss.nucleus import gaussian_nucleus, point_nucleus

from conftest import eval_terms, quad_product, slater_rl_quad

S12 = AngularSymmetry(-1)
P12 = AngularSymmetry(1)
P32 = AngularSymmetry(-2)
D32 = AngularSymmetry(2)


class TestGaussMoment:
    def test_n0(self):
        assert gauss_moment(0, 1.0) == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-14)

    def test_n2_a2(self):
        # Gamma(3/2) / (2 * 2^(3/2)) = sqrt(pi) / (4 * 2^(3/2))
        assert gauss_moment(2, 2.0) == pytest.approx(0.15666333, rel=1e-7)
        val, _ = integrate.quad(lambda r: r * r * math.exp(-2 * r * r), 0, 20)
        assert gauss_moment(2, 2.0) == pytest.approx(val, rel=1e-12)

    def test_n1_a3(self):
        assert gauss_moment(1, 3.0) == pytest.approx(1.0 / 6.0, rel=1e-14)

    def test_extreme_exponents_stay_finite(self):
        # the log-space form must survive the full physical exponent range
        for n in (0, 5, 20, 41):
            for a in (1e-9, 1e-2, 1.0, 1e9, 4e9):
                v = gauss_moment(n, a)
                assert math.isfinite(v) and v > 0.0

    def test_quadrature_oracle_randomized(self, rng):
        for _ in range(60):
            n = int(rng.integers(0, 14))
            a = float(10.0 ** rng.uniform(-2, 9))
            scale = 1.0 / math.sqrt(a)
            ref, _ = integrate.quad(
                lambda t: (t * scale) ** n * math.exp(-t * t) * scale, 0, 12
            )
            assert gauss_moment(n, a) == pytest.approx(ref, rel=1e-12)


class TestErfGaussMoment:
    def test_base_m0_arctan(self):
        a, c = 1.7, 0.9
        assert erf_gauss_moment(0, a, c) == pytest.approx(
            math.atan(c / math.sqrt(a)) / math.sqrt(math.pi * a), rel=1e-14
        )

    def test_base_m1(self):
        a, c = 2.3, 1.4
        assert erf_gauss_moment(1, a, c) == pytest.approx(
            c / (2 * a * math.sqrt(a + c * c)), rel=1e-14
        )

    def test_quadrature_oracle_randomized(self, rng):
        for _ in range(40):
            m = int(rng.integers(0, 10))
            a = float(10.0 ** rng.uniform(-2, 8))
            c = float(10.0 ** rng.uniform(-1, 5))
            scale = 1.0 / math.sqrt(a + c * c)
            ref, _ = integrate.quad(
                lambda t: (t * scale) ** m
                * math.erf(c * t * scale)
                * math.exp(-a * (t * scale) ** 2)
                * scale,
                0,
                14.0 * max(1.0, math.sqrt((a + c * c) / a)),
                limit=300,
            )
            assert erf_gauss_moment(m, a, c) == pytest.approx(ref, rel=1e-10)

    def test_saturation_limit(self):
        # c -> infinity turns erf into 1: moment approaches the plain Gaussian one
        a = 3.0
        c = 1e7
        assert erf_gauss_moment(3, a, c) == pytest.approx(
            gauss_moment(3, a), rel=1e-12
        )


class TestOverlap:
    def test_normalized_self_overlap(self):
        f = large_function(S12, 2.7)
        assert overlap(f, f) == pytest.approx(1.0, rel=1e-12)

    def test_single_term_closed_form(self):
        f = large_function(S12, 1.0)
        g = large_function(S12, 3.0)
        n1, n2 = f.terms[0][0], g.terms[0][0]
        assert overlap(f, g) == pytest.approx(n1 * n2 * gauss_moment(2, 4.0), rel=1e-14)

    def test_symmetry_and_quadrature(self, rng):
        for _ in range(15):
            za, zb = 10.0 ** rng.uniform(-1, 3, size=2)
            sym = AngularSymmetry(int(rng.choice([-1, 1, -2, 2])))
            f = kinetic_balance(sym, float(za))
            g = kinetic_balance(sym, float(zb))
            val = overlap(f, g)
            assert val == pytest.approx(overlap(g, f), rel=1e-15)
            assert val == pytest.approx(quad_product(f, g), rel=1e-12)


class TestPiElement:
    def test_rkb_self_pairing_identity(self):
        # <f^S | op | f^L> with matched zeta equals N_L * ||unnormalized small||,
        # i.e. the norm ratio of the operator image
        sym, zeta = S12, 1.3
        small = kinetic_balance(sym, zeta)
        got = pi_element(small, sym, zeta)
        raw = ((-2.0 * zeta, sym.l_large + 2, zeta),)
        raw_norm = math.sqrt(
            sum(
                c1 * c2 * gauss_moment(p1 + p2, z1 + z2)
                for c1, p1, z1 in raw
                for c2, p2, z2 in raw
            )
        )
        n_large = large_function(sym, zeta).terms[0][0]
        assert abs(got) == pytest.approx(n_large * raw_norm, rel=1e-12)

    def test_quadrature_oracle(self, rng):
        for kappa in (-1, 1, -2, 2, -3):
            sym = AngularSymmetry(kappa)
            z_small = float(10.0 ** rng.uniform(-1, 3))
            z_large = float(10.0 ** rng.uniform(-1, 3))
            small = kinetic_balance(sym, z_small)
            large_raw = ((1.0, sym.l_large + 1, z_large),)
            n_large = large_function(sym, z_large).terms[0][0]

            def op_large(r):
                l = sym.l_large
                return n_large * (
                    (l + 1 + kappa) * r**l - 2 * z_large * r ** (l + 2)
                ) * np.exp(-z_large * r * r)

            scale = 1.0 / math.sqrt(z_small + z_large)
            ref, _ = integrate.quad(
                lambda t: eval_terms(small, t * scale) * op_large(t * scale) * scale,
                0, 14, limit=200,
            )
            assert pi_element(small, sym, z_large) == pytest.approx(ref, rel=1e-11)


class TestNuclearElement:
    def test_point_1s_closed_form(self):
        f = large_function(S12, 1.0)
        n2 = f.terms[0][0] ** 2
        got = nuclear_element(f, f, point_nucleus(1.0))
        assert got == pytest.approx(-n2 * gauss_moment(1, 2.0), rel=1e-14)
        assert got == pytest.approx(-1.5957691, rel=1e-7)

    def test_gaussian_point_limit(self):
        zeta = 3.0
        f = large_function(P32, zeta)
        vp = nuclear_element(f, f, point_nucleus(40.0))
        vg = nuclear_element(f, f, gaussian_nucleus(40.0, 1e12 * zeta))
        assert abs(vg - vp) / abs(vp) < 1e-8

    def test_gaussian_quadrature_oracle(self, rng):
        for _ in range(20):
            sym = AngularSymmetry(int(rng.choice([-1, 1, -2])))
            z1, z2 = (float(10.0 ** rng.uniform(-1, 4)) for _ in range(2))
            eta = float(10.0 ** rng.uniform(0, 6))
            Z = float(rng.uniform(1, 120))
            f = large_function(sym, z1)
            g = kinetic_balance(AngularSymmetry(-sym.l_large - 1), z2) \
                if sym.l_large == 0 else large_function(sym, z2)
            ref = -Z * quad_product(
                f, g, weight=lambda r: math.erf(math.sqrt(eta) * r) / r, epsrel=1e-12
            )
            got = nuclear_element(f, g, gaussian_nucleus(Z, eta))
            assert got == pytest.approx(ref, rel=1e-10)


class TestTwoRangeMoment:
    def test_quadrature_oracle(self, rng):
        # direct quadrature of the defining double integral, inner coordinate
        # mapped to s = x r so both integrals stay smooth and well scaled
        for _ in range(25):
            P = int(rng.integers(-4, 9))
            Q = int(rng.integers(0, 12))
            if P + Q < 1:
                continue
            a = float(10.0 ** rng.uniform(-2, 2))
            b = float(10.0 ** rng.uniform(-2, 2))
            scale = 1.0 / math.sqrt(a)

            def outer(t):
                r = t * scale
                layer = min(1.0, 1.0 / (r * math.sqrt(b) + 1e-30))
                inner, _ = integrate.quad(
                    lambda x: x**Q * math.exp(-b * (x * r) ** 2),
                    0.0, 1.0, points=[layer], epsabs=0.0, epsrel=1e-12, limit=200,
                )
                return r ** (P + Q + 1) * math.exp(-a * r * r) * inner * scale

            ref, _ = integrate.quad(
                outer, 0.0, 16.0, epsabs=0.0, epsrel=1e-11, limit=300
            )
            assert two_range_moment(P, Q, a, b) == pytest.approx(ref, rel=1e-9)

    def test_split_identity(self, rng):
        # W(P,Q,a,b) + W(Q,P,b,a) = A(P,a) A(Q,b) for P, Q > -1
        for _ in range(30):
            P = int(rng.integers(0, 10))
            Q = int(rng.integers(0, 10))
            a = float(10.0 ** rng.uniform(-2, 6))
            b = float(10.0 ** rng.uniform(-2, 6))
            lhs = two_range_moment(P, Q, a, b) + two_range_moment(Q, P, b, a)
            rhs = gauss_moment(P, a) * gauss_moment(Q, b)
            assert lhs == pytest.approx(rhs, rel=1e-12)


class TestSlaterRl:
    def test_pinned_1s_self_repulsion(self):
        # frozen from the 2-D quadrature oracle (slater_rl_quad, epsrel 1e-12)
        f = large_function(S12, 1.0)
        v0 = slater_rl(0, f, f, f, f)
        assert v0 == pytest.approx(1.1283791670955126, rel=1e-11)
        assert v0 == pytest.approx(slater_rl_quad(0, f, f, f, f), rel=1e-10)

    def test_eightfold_symmetry(self, rng):
        for _ in range(6):
            zs = 10.0 ** rng.uniform(-1, 3, size=4)
            fa, fc = (large_function(S12, float(z)) for z in zs[:2])
            fb, fd = (large_function(P32, float(z)) for z in zs[2:])
            l = 1
            base = slater_rl(l, fa, fb, fc, fd)
            assert slater_rl(l, fc, fb, fa, fd) == pytest.approx(base, rel=1e-12)
            assert slater_rl(l, fa, fd, fc, fb) == pytest.approx(base, rel=1e-12)
            assert slater_rl(l, fb, fa, fd, fc) == pytest.approx(base, rel=1e-12)
            assert slater_rl(l, fc, fd, fa, fb) == pytest.approx(base, rel=1e-12)

    def test_monotonically_decreasing_in_l(self):
        f = large_function(S12, 2.0)
        values = [slater_rl(l, f, f, f, f) for l in range(0, 13)]
        assert all(hi > lo > 0.0 for hi, lo in zip(values, values[1:]))
        # spot check the large-l tail against quadrature
        assert values[12] == pytest.approx(
            slater_rl_quad(12, f, f, f, f), rel=1e-9
        )

    def test_positive_for_positive_functions(self, rng):
        for _ in range(5):
            fs = [large_function(S12, float(10.0 ** rng.uniform(-1, 2)))
                  for _ in range(4)]
            assert slater_rl(0, *fs) > 0.0

    def test_quadrature_oracle_mixed_components(self, rng):
        for _ in range(8):
            sym1 = AngularSymmetry(int(rng.choice([-1, 1, -2])))
            sym2 = AngularSymmetry(int(rng.choice([-1, 2, -3])))
            fa = large_function(sym1, float(10.0 ** rng.uniform(-1, 2)))
            fc = kinetic_balance(sym1, float(10.0 ** rng.uniform(-1, 2)))
            fb = large_function(sym2, float(10.0 ** rng.uniform(-1, 2)))
            fd = kinetic_balance(sym2, float(10.0 ** rng.uniform(-1, 2)))
            l = int(rng.integers(0, 5))
            got = slater_rl(l, fa, fb, fc, fd)
            ref = slater_rl_quad(l, fa, fb, fc, fd)
            assert got == pytest.approx(ref, rel=1e-9, abs=1e-14)


class TestFGIntegrals:
    def _orbital(self, sym, zeta):
        u = large_function(sym, zeta)
        v = kinetic_balance(sym, zeta)
        # crude spinor weighting: small component scaled down as in light atoms
        v = type(v)(tuple((0.01 * c, p, z) for c, p, z in v.terms))
        return (u, v)

    def test_g_equals_f_for_same_orbital(self):
        orb = self._orbital(S12, 1.3)
        for l in (0, 2):
            assert g_integral(l, orb, orb) == pytest.approx(
                f_integral(l, orb, orb), rel=1e-13
            )

    def test_f0_symmetric(self):
        a = self._orbital(S12, 0.8)
        b = self._orbital(P32, 2.1)
        assert f_integral(0, a, b) == pytest.approx(f_integral(0, b, a), rel=1e-13)

    def test_electrostatic_limit_separated_shells(self):
        # F_0 between a compact and a diffuse shell approaches <1/r> of the
        # diffuse one within a percent
        tight = self._orbital(S12, 4.0e4)
        diffuse = self._orbital(S12, 0.05)
        f0 = f_integral(0, tight, diffuse)
        u, v = diffuse
        inv_r = sum(
            c1 * c2 * gauss_moment(p1 + p2 - 1, z1 + z2)
            for f in (u, v)
            for c1, p1, z1 in f.terms
            for c2, p2, z2 in f.terms
        )
        norm = sum(
            c1 * c2 * gauss_moment(p1 + p2, z1 + z2)
            for f in (u, v)
            for c1, p1, z1 in f.terms
            for c2, p2, z2 in f.terms
        )
        assert f0 == pytest.approx(inv_r / norm, rel=0.01)

    def test_f0_pinned_hydrogenic_pair(self):
        # frozen from the 2-D quadrature oracle
        a = self._orbital(S12, 1.0)
        got = f_integral(0, a, a)
        u, v = a
        rho = []
        for f in (u, v):
            for c1, p1, z1 in f.terms:
                for c2, p2, z2 in f.terms:
                    rho.append((c1 * c2, p1 + p2, z1 + z2))
        from conftest import slater_quad

        ref = slater_quad(0, rho, rho)
        assert got == pytest.approx(ref, rel=1e-10)
        assert got == pytest.approx(1.1284479, rel=1e-6)


class TestBlockMatrices:
    def test_spd_overlaps_and_symmetry(self, rng):
        shell = RadialShell(P12, tuple(10.0 ** np.linspace(-1, 6, 14)))
        blocks = build_block_matrices(shell, point_nucleus(30.0))
        for mat in (blocks.S_LL, blocks.S_SS):
            assert np.max(np.abs(mat - mat.T)) < 1e-14
            assert np.linalg.eigvalsh(mat)[0] > 0.0
        for mat in (blocks.V_LL, blocks.V_SS):
            assert np.max(np.abs(mat - mat.T)) == 0.0

    def test_matrix_elements_match_scalar_api(self):
        shell = RadialShell(D32, (5.0, 1.0, 0.2))
        model = gaussian_nucleus(80.0, 3.0e7)
        blocks = build_block_matrices(shell, model)
        larges = shell.large_functions()
        smalls = shell.small_functions()
        for i in range(3):
            for j in range(3):
                assert blocks.S_LL[i, j] == pytest.approx(
                    overlap(larges[i], larges[j]), rel=1e-12
                )
                assert blocks.S_SS[i, j] == pytest.approx(
                    overlap(smalls[i], smalls[j]), rel=1e-12
                )
                assert blocks.V_LL[i, j] == pytest.approx(
                    nuclear_element(larges[i], larges[j], model), rel=1e-12
                )
                assert blocks.V_SS[i, j] == pytest.approx(
                    nuclear_element(smalls[i], smalls[j], model), rel=1e-12
                )
                assert blocks.Pi_SL[i, j] == pytest.approx(
                    pi_element(smalls[i], D32, shell.exponents[j]), rel=1e-12
                )

    def test_component_rows_match_basis_functions(self, rng):
        for kappa in (-1, 1, -2, 2, -3, 3, -4):
            sym = AngularSymmetry(kappa)
            zetas = np.sort(10.0 ** rng.uniform(-2, 8, size=5))[::-1]
            rows = component_rows(sym, zetas, "S")
            rs = np.geomspace(1e-5, 3.0, 50)
            for idx, zeta in enumerate(zetas):
                ref = eval_terms(kinetic_balance(sym, float(zeta)), rs)
                terms = [(coeff[idx], p, zeta) for coeff, p in rows.rows]
                got = eval_terms(terms, rs)
                assert np.allclose(got, ref, rtol=1e-11, atol=1e-300)


class TestSlaterCacheConsistency:
    def test_grid_matches_scalar_slater(self, rng):
        za = (8.0, 1.5, 0.3)
        zb = (4.0, 0.7)
        shells = {
            S12: RadialShell(S12, za),
            D32: RadialShell(D32, zb),
        }
        cache = SlaterCache(shells)
        maker = {"L": large_function, "S": kinetic_balance}
        for l in allowed_l_range(S12, D32):
            for x, y in (("L", "L"), ("S", "S"), ("L", "S")):
                _, grid = cache._exchange_entry(-1, 2, l, x, y)
                for _ in range(3):
                    p, q = rng.integers(0, 3, size=2)
                    r, s = rng.integers(0, 2, size=2)
                    ref = slater_rl(
                        l,
                        maker[x](S12, za[p]), maker[y](S12, za[q]),
                        maker[x](D32, zb[r]), maker[y](D32, zb[s]),
                    )
                    assert grid[p, r, q, s] == pytest.approx(ref, rel=1e-10)

    def test_determinism(self):
        shells = {S12: RadialShell(S12, (3.0, 1.0))}
        v1 = SlaterCache(shells)._exchange_entry(-1, -1, 0, "L", "L")[1]
        v2 = SlaterCache(shells)._exchange_entry(-1, -1, 0, "L", "L")[1]
        assert np.array_equal(v1, v2)
