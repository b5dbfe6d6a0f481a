import math

import numpy as np
import pytest

from bosonmetro.algebra import NormalPolynomial, excess, multiply, parse_expression
from bosonmetro.fock import FockSpace, coherent_vector, eigh, realize
from bosonmetro.generators import (
    SU2,
    Custom,
    Kerr,
    Number,
    Quadrature,
    Squeeze,
    angular_momentum,
    coherent_qfi,
    excess_catalog,
    format_generator,
    parse_generator,
    polynomial,
)
from bosonmetro.metrology import qfi_pure


def random_unit(rng):
    v = rng.normal(size=3)
    return tuple(v / np.linalg.norm(v))


def same_up_to_ulps(p, q, ulps=4):
    if set(p.terms) != set(q.terms):
        return False
    return all(abs(p.terms[k] - q.terms[k]) <= ulps * np.finfo(float).eps * abs(q.terms[k])
               for k in p.terms)


class TestPolynomial:
    def test_number(self):
        assert polynomial(Number()) == NormalPolynomial.number()

    def test_kerr(self):
        assert polynomial(Kerr()) == parse_expression("ad^2*a^2 + ad*a")

    def test_su2_z(self):
        assert polynomial(SU2((0, 0, 1))) == parse_expression("ad1*a1 - ad2*a2", 2)

    def test_su2_verbatim(self):
        jx, jy, jz = angular_momentum()
        assert jx == parse_expression("ad1*a2 + a1*ad2", 2)
        assert jy == parse_expression("i*(ad1*a2 - a1*ad2)", 2)
        for j in (jx, jy, jz):
            assert j.is_hermitian()

    def test_su2_algebra(self):
        # with J_y = i(ad1*a2 - a1*ad2) the triple closes with a minus sign
        jx, jy, jz = angular_momentum()
        assert multiply(jx, jy) - multiply(jy, jx) == -2j * jz
        assert multiply(jy, jz) - multiply(jz, jy) == -2j * jx
        assert multiply(jz, jx) - multiply(jx, jz) == -2j * jy

    def test_all_hermitian(self, rng):
        for spec in (Number(), Kerr(), Quadrature(rng.random() * 6), Squeeze(rng.random() * 6),
                     SU2(random_unit(rng))):
            assert polynomial(spec).is_hermitian()


class TestCatalog:
    def test_examples(self):
        assert excess_catalog(Number()) == NormalPolynomial.number()
        total = parse_expression("ad1*a1 + ad2*a2", 2)
        for u in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            assert excess_catalog(SU2(u)) == total
        assert excess_catalog(Squeeze(1.234)) == parse_expression("4*ad*a + 2")

    def test_exact_consistency(self):
        for spec in (Number(), Kerr(), Quadrature(0.0), Squeeze(0.0),
                     SU2((1, 0, 0)), SU2((0, 1, 0)), SU2((0, 0, 1))):
            assert excess(polynomial(spec)) == excess_catalog(spec)

    def test_random_parameters(self, rng):
        for _ in range(10):
            th = rng.uniform(0, 2 * math.pi)
            for spec in (Quadrature(th), Squeeze(th)):
                assert excess(polynomial(spec)).allclose(excess_catalog(spec), 1e-15)
            spec = SU2(random_unit(rng))
            assert same_up_to_ulps(excess(polynomial(spec)), excess_catalog(spec))

    def test_custom_defers(self):
        with pytest.raises(ValueError, match="excess"):
            excess_catalog(Custom(parse_expression("(ad*a)^3")))


class TestCoherentQfi:
    def test_examples(self):
        assert coherent_qfi(Number(), 1.0) == pytest.approx(4)
        assert coherent_qfi(Quadrature(0.8), 2 - 1j) == pytest.approx(4)
        assert coherent_qfi(Kerr(), 1.0) == pytest.approx(44)
        assert coherent_qfi(Kerr(), 1j) == pytest.approx(44)

    def test_agrees_with_pure_state_variance(self, rng):
        for spec in (Number(), Kerr(), Quadrature(0.5), Squeeze(2.0)):
            alpha = complex(*rng.normal(size=2))
            space = FockSpace((60,))
            vec, _ = coherent_vector(alpha, space)
            g = realize(polynomial(spec), space)
            assert coherent_qfi(spec, alpha) == pytest.approx(qfi_pure(vec, g), rel=1e-9)

    def test_custom_uses_symbolic_excess(self):
        cubic = Custom(parse_expression("(ad*a)^3"))
        alpha = 0.7
        space = FockSpace((60,))
        vec, _ = coherent_vector(alpha, space)
        g = realize(cubic.poly, space)
        assert coherent_qfi(cubic, alpha) == pytest.approx(qfi_pure(vec, g), rel=1e-9)


def _sector_mask(d):
    idx = np.add.outer(np.arange(d), np.arange(d)).ravel()
    return idx <= d - 1


def test_su2_covariance(rng):
    """U A_{u.J} U^dag equals A of the conjugated generator on exact photon sectors."""
    d = 8
    space = FockSpace((d, d))
    mask = _sector_mask(d)
    jmats = [realize(j, space).data for j in angular_momentum()]
    for _ in range(5):
        u = random_unit(rng)
        g = realize(polynomial(SU2(u)), space)
        rot = realize(polynomial(SU2(random_unit(rng))), space)
        vals, vecs = eigh(rot)
        phi = rng.uniform(0, math.pi)
        umat = (vecs * np.exp(1j * phi * vals)) @ vecs.conj().T
        conj_g = (umat @ g.data @ umat.conj().T)[np.ix_(mask, mask)]
        # read off the rotated direction by Hilbert-Schmidt projection onto J on the sectors
        blocks = [j[np.ix_(mask, mask)] for j in jmats]
        gram = np.array([[np.vdot(a, b).real for b in blocks] for a in blocks])
        rhs = np.array([np.vdot(b, conj_g).real for b in blocks])
        u_new = np.linalg.solve(gram, rhs)
        assert np.linalg.norm(u_new) == pytest.approx(1, abs=1e-10)
        assert np.max(np.abs(sum(c * b for c, b in zip(u_new, blocks)) - conj_g)) < 1e-8

        lhs = umat @ realize(excess(polynomial(SU2(u))), space).data @ umat.conj().T
        new_spec = SU2(tuple(u_new / np.linalg.norm(u_new)))
        rhs_mat = realize(excess(polynomial(new_spec)), space).data
        assert np.max(np.abs(lhs - rhs_mat)[np.ix_(mask, mask)]) < 1e-8


class TestTextForms:
    def test_parse(self):
        assert parse_generator("number") == Number()
        assert parse_generator("kerr") == Kerr()
        assert parse_generator("quad:theta=0") == Quadrature(0)
        assert parse_generator("squeeze:theta=0.5") == Squeeze(0.5)
        assert parse_generator("su2:u=0,0,1") == SU2((0, 0, 1))
        assert parse_generator("su2:u=0,0,2") == SU2((0, 0, 1))
        assert parse_generator("custom:(ad*a)^2").poly == polynomial(Kerr())
        assert parse_generator("custom:ad1*a2 + a1*ad2").modes == 2

    def test_round_trip(self):
        for spec in (Number(), Kerr(), Quadrature(0.25), Squeeze(1.0), SU2((0.6, 0, 0.8)),
                     Custom(parse_expression("ad^2*a^2 + 3*ad*a"))):
            assert parse_generator(format_generator(spec)) == spec

    def test_errors(self):
        with pytest.raises(ValueError):
            parse_generator("cubic")
        with pytest.raises(ValueError):
            parse_generator("custom:a")  # not Hermitian
        with pytest.raises(ValueError):
            SU2((1, 1, 0))
