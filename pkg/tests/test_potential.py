"""Potential construction, evaluation, derivatives and the JSON format."""

import json
import math
from fractions import Fraction

import numpy as np
import pytest

from kahlercomp import potential as P
from kahlercomp.polynomials import QC, CPoly


def rand_hermitian_terms(rng, n, count, magnitude=0.1):
    terms = []
    for _ in range(count):
        alpha = tuple(int(x) for x in rng.integers(0, 3, size=n))
        beta = tuple(int(x) for x in rng.integers(0, 3, size=n))
        c = QC(Fraction(float(rng.normal(0, magnitude))),
               0 if alpha == beta else Fraction(float(rng.normal(0, magnitude))))
        terms.append((alpha, beta, c))
        terms.append((beta, alpha, c.conjugate()))
    return terms


def rand_potential(rng, n=2):
    terms = [(tuple(1 if k == i else 0 for k in range(n)),) * 2 + (Fraction(1),)
             for i in range(n)]
    terms += rand_hermitian_terms(rng, n, 5, magnitude=0.05)
    return P.RealAnalyticPotential(n, terms, validity_radius=0.3)


class TestEvaluate:
    def test_flat_at_origin(self):
        assert P.evaluate(P.flat(2), np.zeros(2)) == 0.0

    def test_flat_has_exactly_n_terms(self):
        for n in (1, 2, 3):
            assert len(P.flat(n).terms) == n

    def test_section6_on_axis_matches_printed_series(self):
        a = 0.1
        pot = P.section6(a, 0.0)
        for z1 in (0.05, 0.03 + 0.02j, -0.07j):
            t = abs(z1) ** 2
            expected = t + a * t ** 2 + (8.0 / 3.0) * a ** 2 * t ** 3
            got = P.evaluate(pot, np.array([z1, 0.0]))
            assert got == pytest.approx(expected, abs=1e-15)

    def test_section6_term_list_verbatim(self):
        a, lam = Fraction(1, 10), Fraction(50)
        pot = P.section6(a, lam)
        coeffs = pot.poly.coeffs
        assert coeffs[((2, 0), (2, 0))] == QC(a)
        assert coeffs[((1, 1), (1, 1))] == QC(8 * a)
        assert coeffs[((3, 0), (3, 0))] == QC(Fraction(8, 3) * a * a)
        assert coeffs[((2, 1), (2, 1))] == QC(28 * a * a)
        assert coeffs[((4, 0), (4, 0))] == QC(-lam)
        assert coeffs[((3, 1), (3, 1))] == QC(-8 * lam)
        assert coeffs[((1, 3), (1, 3))] == QC(-8 * lam)

    def test_random_potential_matches_independent_resummation(self):
        rng = np.random.default_rng(7)
        pot = rand_potential(rng)
        for _ in range(5):
            z = (rng.normal(size=2) + 1j * rng.normal(size=2)) * 0.1
            # independent oracle: per-term powers, summed in a different order
            parts = []
            for (alpha, beta), c in pot.poly.coeffs.items():
                val = complex(c)
                for i, e in enumerate(alpha):
                    val *= z[i] ** e
                for i, e in enumerate(beta):
                    val *= np.conj(z[i]) ** e
                parts.append(val)
            parts.sort(key=lambda v: (abs(v), v.real, v.imag))
            oracle = complex(math.fsum(p.real for p in parts),
                             math.fsum(p.imag for p in parts))
            assert P.evaluate(pot, z) == pytest.approx(oracle.real, abs=1e-12)
            assert abs(oracle.imag) < 1e-12

    def test_value_is_real_for_hermitian_potentials(self):
        rng = np.random.default_rng(11)
        for seed in range(5):
            pot = rand_potential(np.random.default_rng(seed))
            z = (rng.normal(size=2) + 1j * rng.normal(size=2)) * 0.1
            val = pot.poly.evaluate(z)
            assert abs(val.imag) < 1e-14 * max(1.0, abs(val.real))


class TestMixedPartial:
    def test_flat_metric_entry(self):
        pot = P.flat(2)
        for z in (np.zeros(2), np.array([0.2 + 0.1j, -0.4j])):
            assert P.mixed_partial(pot, (1, 0), (1, 0), z) == pytest.approx(1.0)

    def test_section6_d1_d2bar_printed_line(self):
        a = Fraction(1, 10)
        pot = P.section6(a, 0)
        got = P.mixed_partial_poly(pot, (1, 0), (0, 1))
        expected = (CPoly.monomial(2, (0, 1), (1, 0), 8 * a)
                    + CPoly.monomial(2, (1, 1), (2, 0), 56 * a * a)
                    + CPoly.monomial(2, (0, 2), (1, 1), 56 * a * a))
        assert got == expected

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(3)
        pot = rand_potential(rng)
        z = np.array([0.05 + 0.02j, -0.03 + 0.04j])
        h = 1e-5
        for i in (0, 1):
            e = np.zeros(2)
            holo = [0, 0]
            holo[i] = 1
            # d/dz_i = (d/dx - i d/dy)/2 on the polynomial (beta derivative absent)
            dx = np.zeros(2, dtype=complex)
            dx[i] = h
            fx = (pot.poly.evaluate(z + dx) - pot.poly.evaluate(z - dx)) / (2 * h)
            dy = np.zeros(2, dtype=complex)
            dy[i] = 1j * h
            fy = (pot.poly.evaluate(z + dy) - pot.poly.evaluate(z - dy)) / (2 * h)
            fd = 0.5 * (fx - 1j * fy)
            exact = P.mixed_partial(pot, tuple(holo), (0, 0), z)
            assert fd == pytest.approx(exact, rel=1e-8, abs=1e-10)

    def test_order_beyond_degree_returns_zero(self):
        pot = P.flat(2)
        assert P.mixed_partial(pot, (3, 0), (0, 0), np.zeros(2)) == 0

    def test_derivative_order_commutes(self):
        rng = np.random.default_rng(5)
        pot = rand_potential(rng)
        z = np.array([0.04 - 0.01j, 0.02 + 0.03j])
        a = P.mixed_partial(pot, (1, 1), (1, 0), z)
        # same multi-index assembled by sequential single derivatives in other orders
        p1 = pot.poly.dz(1).dz(0).dzbar(0)
        p2 = pot.poly.dzbar(0).dz(0).dz(1)
        assert p1 == p2
        assert p1.evaluate(z) == pytest.approx(a, rel=1e-14)

    def test_conjugation_symmetry(self):
        rng = np.random.default_rng(9)
        pot = rand_potential(rng)
        z = np.array([0.03 + 0.05j, -0.02 - 0.01j])
        lhs = P.mixed_partial(pot, (2, 0), (0, 1), z)
        rhs = P.mixed_partial(pot, (0, 1), (2, 0), z)
        assert lhs == pytest.approx(np.conj(rhs), rel=1e-13, abs=1e-15)


class TestValidation:
    def test_non_hermitian_rejected(self):
        with pytest.raises(P.ValidationError, match="Hermitian"):
            P.RealAnalyticPotential(2, [
                ((1, 0), (1, 0), 1), ((0, 1), (0, 1), 1),
                ((2, 0), (1, 1), 0.3),
            ])

    def test_non_positive_metric_rejected(self):
        with pytest.raises(P.ValidationError, match="positive definite"):
            P.RealAnalyticPotential(2, [((1, 0), (1, 0), -1), ((0, 1), (0, 1), 1)])

    def test_negative_exponent_rejected(self):
        with pytest.raises(P.ValidationError):
            P.RealAnalyticPotential(2, [((-1, 0), (1, 0), 1)])

    def test_duplicate_terms_merge(self):
        pot = P.RealAnalyticPotential(2, [
            ((1, 0), (1, 0), 0.5), ((1, 0), (1, 0), 0.5), ((0, 1), (0, 1), 1),
        ])
        assert pot.poly.coeffs[((1, 0), (1, 0))] == QC(1)

    def test_perturbed_is_even_and_seeded(self):
        p1 = P.perturbed(2, 42)
        p2 = P.perturbed(2, 42)
        assert p1 == p2
        assert p1.is_even()
        assert P.perturbed(3, 1).n == 3

    def test_space_form_zero_curvature_degenerates_to_flat_terms(self):
        pot = P.space_form(2, 0)
        assert pot.poly == P.flat(2).poly


class TestJsonFormat:
    def test_round_trip_is_exact(self):
        pot = P.section6(0.1, 50.0)
        again = P.loads(P.dumps(pot))
        assert again == pot
        assert P.dumps(again) == P.dumps(pot)

    def test_spec_sample_document(self):
        doc = {"n": 2, "max_degree": 8,
               "terms": [{"alpha": [1, 0], "beta": [1, 0], "re": 1.0, "im": 0.0},
                          {"alpha": [0, 1], "beta": [0, 1], "re": 1.0, "im": 0.0}]}
        pot = P.loads(json.dumps(doc))
        assert pot == P.flat(2)

    def test_catalog_addressing(self):
        doc = {"catalog": {"name": "section6", "a": 0.1, "lambda": 50.0}}
        pot = P.loads(json.dumps(doc))
        assert pot == P.section6(0.1, 50.0)

    def test_rational_coefficients_round_trip_as_strings(self):
        text = P.dumps(P.section6(0.1, 0))
        assert "/" in text  # 8/3 a^2 terms are not representable as floats
        assert P.loads(text) == P.section6(0.1, 0)

    def test_non_hermitian_document_rejected(self):
        doc = {"n": 1, "terms": [{"alpha": [2], "beta": [0], "re": 1.0, "im": 0.0},
                                  {"alpha": [1], "beta": [1], "re": 1.0, "im": 0.0}]}
        with pytest.raises(P.ValidationError):
            P.loads(json.dumps(doc))
