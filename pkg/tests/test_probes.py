import math

import numpy as np
import pytest

from bosonmetro.algebra import parse_expression
from bosonmetro.fock import FockSpace, TruncationError, choose_dim, realize
from bosonmetro.generators import Kerr, Quadrature, dim_weight, polynomial
from bosonmetro.probes import (
    ClassicalMix,
    Coherent,
    Fock,
    SqueezedVacuum,
    TwoModeCoherent,
    VacuumDoped,
    auto_space,
    build_density,
    format_probe,
    matched_coherent,
    mean_photons,
    parse_probe,
)


def built(spec, weight=2.0):
    return build_density(spec, auto_space(spec, weight))


def test_vacuum_projector():
    rho = built(Coherent(0))
    expected = np.zeros_like(rho.data)
    expected[0, 0] = 1
    assert np.array_equal(rho.data, expected)


def test_vacuum_doped_spectrum():
    p, alpha = 0.5, 1.0
    rho = built(VacuumDoped(p, alpha))
    # oracle: Gram matrix of {sqrt(p)|beta>, sqrt(1-p)|0>} has the same non-zero spectrum
    s = math.exp(-abs(alpha) ** 2 / p / 2)
    w = np.array([math.sqrt(p), math.sqrt(1 - p)])
    gram = np.outer(w, w) * np.array([[1, s], [s, 1]])
    expected = np.sort(np.linalg.eigvalsh(gram))[::-1]
    vals = np.sort(np.linalg.eigvalsh(rho.data))[::-1]
    assert np.allclose(vals[:2], expected, atol=1e-12)
    assert np.all(np.abs(vals[2:]) < 1e-10)
    assert abs(np.trace(rho.data) - 1) < 1e-12


def test_squeezed_variance():
    r = 0.5
    rho = built(SqueezedVacuum(r, 0.0))
    x = realize(parse_expression("a + ad"), rho.space).data
    var = np.trace(rho.data @ x @ x).real
    assert var == pytest.approx(math.exp(-2 * r), abs=1e-10)
    assert var == pytest.approx(0.3679, abs=1e-4)
    assert mean_photons(rho) == pytest.approx(math.sinh(r) ** 2, abs=1e-10)


def test_dims_follow_bright_component():
    spec = VacuumDoped(0.25, 1.0)
    assert auto_space(spec, 8).dims[0] == choose_dim(2.0, 8)
    with pytest.raises(TruncationError):
        build_density(spec, FockSpace((choose_dim(1.0, 0),)))


class TestMeanPhotons:
    def test_vacuum(self):
        assert mean_photons(built(Fock(0))) == 0

    def test_coherent(self):
        assert mean_photons(built(Coherent(math.sqrt(2)))) == pytest.approx(2, abs=1e-10)

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    def test_vacuum_doped_matches(self, p):
        assert mean_photons(built(VacuumDoped(p, 1.3j))) == pytest.approx(1.69, abs=1e-10)


class TestMatchedCoherent:
    def test_examples(self):
        assert matched_coherent(built(Fock(4))) == pytest.approx(2)
        assert matched_coherent(built(Fock(0))) == 0
        assert matched_coherent(built(VacuumDoped(0.5, 2))) == pytest.approx(2, abs=1e-10)

    def test_phase_override(self):
        alpha = matched_coherent(built(Fock(9)), phase=math.pi / 2)
        assert alpha == pytest.approx(3j)

    def test_two_mode(self):
        rho = built(TwoModeCoherent(1.0, 0.5j))
        a1, a2 = matched_coherent(rho)
        assert abs(a1) ** 2 + abs(a2) ** 2 == pytest.approx(1.25, abs=1e-10)


def test_every_state_valid():
    for spec in (Coherent(1 + 1j), Fock(3), VacuumDoped(0.3, 0.8), SqueezedVacuum(1.0, 0.4),
                 ClassicalMix(((0.5, 1), (0.5, -1))), TwoModeCoherent(0.5, -0.5j)):
        rho = built(spec)
        assert np.allclose(rho.data, rho.data.conj().T)
        assert abs(np.trace(rho.data) - 1) < 1e-10
        assert np.linalg.eigvalsh(rho.data)[0] > -1e-10
        assert rho.tail_mass < rho.space.tau


def test_mixture_linearity():
    comps = ((0.2, 0.5), (0.3, -1j), (0.5, 1.1 + 0.2j))
    space = FockSpace((30,))
    mix = build_density(ClassicalMix(comps), space).data
    lin = sum(w * build_density(Coherent(a), space).data for w, a in comps)
    assert np.max(np.abs(mix - lin)) < 1e-12


def test_fock_expectation_is_diagonal():
    for g in (Kerr(), Quadrature(0.3)):
        spec = Fock(3)
        rho = build_density(spec, auto_space(spec, dim_weight(g)))
        gm = realize(polynomial(g), rho.space).data
        assert np.trace(rho.data @ gm) == gm[3, 3]


class TestValidation:
    @pytest.mark.parametrize("p", [0.0, 1.0, 1.5, -0.2])
    def test_vacuum_doped_range(self, p):
        with pytest.raises(ValueError, match="out of"):
            VacuumDoped(p, 1.0)

    def test_mixture_weights(self):
        with pytest.raises(ValueError, match="sum to 1"):
            ClassicalMix(((0.5, 1), (0.6, 0)))
        with pytest.raises(ValueError, match="non-negative"):
            ClassicalMix(((1.5, 1), (-0.5, 0)))


class TestTextForms:
    def test_parse(self):
        assert parse_probe("coherent:1.5+0i") == Coherent(1.5)
        assert parse_probe("vacuumdoped:p=0.25,alpha=1") == VacuumDoped(0.25, 1)
        assert parse_probe("mix:0.5@1,0.5@-1") == ClassicalMix(((0.5, 1), (0.5, -1)))
        assert parse_probe("fock:3") == Fock(3)
        assert parse_probe("sqvac:r=0.5,phi=0") == SqueezedVacuum(0.5, 0)
        assert parse_probe("coherent:3i") == Coherent(3j)

    def test_round_trip(self):
        for spec in (Coherent(1 - 2j), VacuumDoped(0.3, 1j), Fock(2), SqueezedVacuum(1, 0.2),
                     ClassicalMix(((0.25, 1), (0.75, -0.5j))), TwoModeCoherent(1, 2j)):
            assert parse_probe(format_probe(spec)) == spec

    @pytest.mark.parametrize("bad", ["blob:1", "vacuumdoped:p=0.5", "mix:0.5", "sqvac:q=1",
                                     "vacuumdoped:p=1.5,alpha=1"])
    def test_errors(self, bad):
        with pytest.raises(ValueError):
            parse_probe(bad)
