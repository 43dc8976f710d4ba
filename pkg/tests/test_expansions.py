import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmm2d.errors import DomainError
from fmm2d.expansions import (
    Expansion,
    binomial_table,
    evaluate_local,
    evaluate_multipole,
    l2l,
    m2l,
    m2m,
    p2m,
    p2p_direct,
)
from oracles import dense_sum, fitted_ratio


def random_cluster(rng, n, center=0j, radius=1.0):
    r = radius * np.sqrt(rng.uniform(size=n))
    th = rng.uniform(0, 2 * np.pi, size=n)
    return center + r * np.exp(1j * th), rng.normal(size=n)


def unit(p, k=0, value=1.0):
    c = np.zeros(p + 1, dtype=complex)
    c[k] = value
    return c


class TestP2M:
    def test_charge_at_center(self):
        e = p2m([1 + 1j], [2.0], 1 + 1j, 5)
        assert np.array_equal(e.coeffs, unit(5, 0, 2.0))

    def test_offset_charge_closed_form(self):
        e = p2m([0.1], [1.0], 0.0, 4)
        assert e.coeffs[0] == 1
        for k in range(1, 5):
            assert e.coeffs[k] == pytest.approx(-(0.1**k) / k, rel=1e-14)
        assert e.coeffs[3] == pytest.approx(-0.000333333333333, rel=1e-9)

    def test_far_field_matches_direct(self, rng):
        z, q = random_cluster(rng, 10, center=0.3 - 0.2j, radius=0.5)
        e = p2m(z, q, 0.3 - 0.2j, 25)
        targets = 0.3 - 0.2j + 5.0 * np.exp(1j * rng.uniform(0, 2 * np.pi, 20))
        want = [sum(qj * math.log(abs(t - zj)) for zj, qj in zip(z, q)) for t in targets]
        got = evaluate_multipole(e, targets).real
        assert np.max(np.abs(got - want)) <= 1e-12

    def test_rejects_bad_order(self):
        with pytest.raises(DomainError):
            p2m([0.0], [1.0], 0.0, 41)
        with pytest.raises(DomainError):
            p2m([0.0], [1.0], 0.0, -1)


class TestM2M:
    def test_zero_shift(self, rng):
        e = p2m(*random_cluster(rng, 5), 0.0, 8)
        assert np.array_equal(m2m(e, 0.0).coeffs, e.coeffs)

    def test_single_charge_equals_p2m(self):
        zj, qj, new = 0.21 + 0.13j, 1.7, -0.25 + 0.3j
        shifted = m2m(p2m([zj], [qj], 0.0, 20), new)
        direct = p2m([zj], [qj], new, 20)
        assert np.all(np.abs(shifted.coeffs - direct.coeffs) <= 1e-13 * np.abs(direct.coeffs))

    def test_zero_stays_zero(self):
        e = Expansion("multipole", 0.0, np.zeros(7))
        assert not np.any(m2m(e, 1 + 2j).coeffs)

    def test_translation_consistency(self, rng):
        z, q = random_cluster(rng, 30, radius=0.5)
        e = p2m(z, q, 0.0, 30)
        s = m2m(e, 0.4 + 0.3j)
        far = 6.0 * np.exp(1j * rng.uniform(0, 2 * np.pi, 50))
        d = dense_sum(np.r_[far, z], np.r_[np.zeros(50), q])[:50].real
        assert np.max(np.abs(evaluate_multipole(s, far).real - d)) < 1e-12
        assert np.max(np.abs(evaluate_multipole(e, far).real - d)) < 1e-12

    def test_wrong_kind(self):
        with pytest.raises(DomainError):
            m2m(Expansion("local", 0, unit(3)), 1.0)


class TestM2L:
    def test_zero(self):
        e = Expansion("multipole", 0.0, np.zeros(9))
        assert not np.any(m2l(e, 3.0).coeffs)

    def test_unit_monopole(self):
        e = Expansion("multipole", 0.0, unit(10))
        loc = m2l(e, 4.0)
        assert evaluate_local(loc, 4.0).real == pytest.approx(math.log(4), abs=1e-15)
        assert evaluate_local(loc, 4.0).real == pytest.approx(evaluate_multipole(e, 4.0).real)
        assert math.log(4) == pytest.approx(1.386294, abs=1e-6)

    def test_matches_multipole_near_local_center(self, rng):
        z, q = random_cluster(rng, 20, radius=1.0)
        e = p2m(z, q, 0.0, 30)
        loc = m2l(e, 5 + 2j)
        pts = 5 + 2j + 0.6 * np.exp(1j * rng.uniform(0, 2 * np.pi, 30))
        diff = evaluate_local(loc, pts, "field") - evaluate_multipole(e, pts, "field")
        assert np.max(np.abs(diff)) < 1e-12

    def test_convergence_rate(self, rng):
        # source and target disks of radius 0.24 about centers a distance 1
        # apart: combined radius over separation is 0.48
        z, q = random_cluster(rng, 40, radius=0.24)
        zl = np.exp(0.7j)
        targets = zl + 0.24 * np.sqrt(rng.uniform(size=100)) * np.exp(1j * rng.uniform(0, 6.3, 100))
        exact = p2p_direct(targets, z, q).real
        orders = list(range(4, 25, 2))
        errs = []
        for p in orders:
            loc = m2l(p2m(z, q, 0.0, p), zl)
            errs.append(np.max(np.abs(evaluate_local(loc, targets).real - exact)))
        assert fitted_ratio(orders, errs) <= 0.55
        assert all(b <= 1.1 * a for a, b in zip(errs, errs[1:]))

    def test_coincident_centers(self):
        with pytest.raises(DomainError):
            m2l(Expansion("multipole", 1j, unit(4)), 1j)


class TestL2L:
    def test_zero_shift(self, rng):
        e = Expansion("local", 0.5, rng.normal(size=9) + 1j * rng.normal(size=9))
        assert np.array_equal(l2l(e, 0.5).coeffs, e.coeffs)

    def test_constant(self):
        e = Expansion("local", 0.0, unit(6, 0, 5.0))
        assert np.array_equal(l2l(e, 3 - 7j).coeffs, unit(6, 0, 5.0))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 30))
    def test_exact(self, seed, p):
        rng = np.random.default_rng(seed)
        e = Expansion("local", 0.0, rng.normal(size=p + 1) + 1j * rng.normal(size=p + 1))
        child = 0.25 * (rng.uniform(-1, 1) + 1j * rng.uniform(-1, 1))
        moved = l2l(e, child)
        pts = child + 0.25 * (rng.uniform(-1, 1, 10) + 1j * rng.uniform(-1, 1, 10))
        a, b = evaluate_local(moved, pts), evaluate_local(e, pts)
        assert np.all(np.abs(a - b) <= 1e-13 * np.maximum(np.abs(b), 1.0))


class TestEvaluate:
    def test_multipole_examples(self):
        e = Expansion("multipole", 1.0, unit(5))
        assert evaluate_multipole(e, 3.0) == pytest.approx(math.log(2))
        assert evaluate_multipole(e, 3.0, "field") == pytest.approx(0.5)

    def test_local_examples(self):
        assert evaluate_local(Expansion("local", 0, unit(4, 0, 3.0)), 7 - 1j) == 3
        e = Expansion("local", 1j, unit(4, 1))
        assert evaluate_local(e, 2 + 2j) == pytest.approx(2 + 1j)
        assert evaluate_local(e, 2 + 2j, "field") == pytest.approx(1)

    def test_multipole_at_center(self):
        with pytest.raises(DomainError):
            evaluate_multipole(Expansion("multipole", 0, unit(3)), 0.0)

    @pytest.mark.parametrize("kind", ["multipole", "local"])
    def test_field_is_derivative(self, rng, kind):
        c = rng.normal(size=11) + 1j * rng.normal(size=11)
        e = Expansion(kind, 0.0, c)
        ev = evaluate_multipole if kind == "multipole" else evaluate_local
        # stay clear of the log branch cut along the negative real axis
        r = rng.uniform(2, 3, 20) if kind == "multipole" else rng.uniform(0.2, 0.8, 20)
        pts = r * np.exp(1j * rng.uniform(-2.5, 2.5, 20))
        h = 1e-5
        fd = (ev(e, pts + h) - ev(e, pts - h)) / (2 * h)
        exact = ev(e, pts, "field")
        assert np.all(np.abs(fd - exact) <= 1e-6 * np.abs(exact))

    def test_bad_mode(self):
        with pytest.raises(DomainError):
            evaluate_local(Expansion("local", 0, unit(2)), 1.0, "gradient")


class TestP2P:
    def test_unit_distance(self):
        out = p2p_direct([0, 1], [0, 1], [1, 1])
        assert np.allclose(out.real, 0.0, atol=0)

    def test_distance_e(self):
        out = p2p_direct([0, math.e], [0, math.e], [1, 1])
        assert np.allclose(out.real, 1.0, rtol=1e-15)

    def test_matches_dense_oracle(self, rng):
        z, q = random_cluster(rng, 50)
        for mode in ("potential", "field"):
            got = p2p_direct(z, z, q, mode)
            want = dense_sum(z, q, mode)
            if mode == "potential":
                got, want = got.real, want.real
            assert np.max(np.abs(got - want)) <= 1e-14 * np.max(np.abs(want)) * 10

    def test_coincident_pairs_skipped(self):
        out = p2p_direct([0, 0, 1], [0, 0, 1], [1, 1, 1], "field")
        assert out[0] == pytest.approx(-1.0) and out[1] == pytest.approx(-1.0)
        assert out[2] == pytest.approx(2.0)

    def test_principal_log(self):
        out = p2p_direct([-1.0], [0.0], [1.0])
        assert out[0] == pytest.approx(cmath.log(-1.0))


def test_binomials_exact_to_order_40():
    C = binomial_table(80)
    for n in range(81):
        for k in range(n + 1):
            assert C[n, k] == float(math.comb(n, k))


class TestProperties:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, seed, alpha, beta):
        rng = np.random.default_rng(seed)
        z = rng.uniform(-0.5, 0.5, 8) + 1j * rng.uniform(-0.5, 0.5, 8)
        q1, q2 = rng.normal(size=8), rng.normal(size=8)
        mix = alpha * q1 + beta * q2
        p = 10
        m1, m2, mm = p2m(z, q1, 0, p), p2m(z, q2, 0, p), p2m(z, mix, 0, p)

        def close(x, y):
            scale = max(np.max(np.abs(y)), 1e-300)
            return np.max(np.abs(x - y)) <= 1e-12 * scale

        assert close(mm.coeffs, alpha * m1.coeffs + beta * m2.coeffs)
        for op, arg in ((m2m, 0.3j), (m2l, 4 + 1j)):
            a, b, c = op(m1, arg).coeffs, op(m2, arg).coeffs, op(mm, arg).coeffs
            assert close(c, alpha * a + beta * b)
        l1, l2 = m2l(m1, 4 + 1j), m2l(m2, 4 + 1j)
        lm = Expansion("local", l1.center, alpha * l1.coeffs + beta * l2.coeffs)
        assert close(l2l(lm, 4.2 + 1j).coeffs,
                     alpha * l2l(l1, 4.2 + 1j).coeffs + beta * l2l(l2, 4.2 + 1j).coeffs)
        t = np.array([3 + 3j, -4 + 0.5j])
        assert close(p2p_direct(t, z, mix, "field"),
                     alpha * p2p_direct(t, z, q1, "field") + beta * p2p_direct(t, z, q2, "field"))

    def test_far_field_convergence(self, rng):
        r_over_R = 0.48
        z, q = random_cluster(rng, 60, radius=r_over_R)
        targets = np.exp(1j * rng.uniform(0, 2 * np.pi, 100))
        exact = p2p_direct(targets, z, q).real
        orders = list(range(2, 27, 2))
        errs = [np.max(np.abs(evaluate_multipole(p2m(z, q, 0, p), targets).real - exact))
                for p in orders]
        assert fitted_ratio(orders, errs) <= 0.55
        assert all(b < a for a, b in zip(errs, errs[1:]))
