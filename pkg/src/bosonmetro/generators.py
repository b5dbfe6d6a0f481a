"""Signal generators, their normal-ordered forms and closed-form excess operators.

The two-mode angular momentum operators follow the unnormalized convention

    J_x = a1^dag a2 + a1 a2^dag
    J_y = i (a1^dag a2 - a1 a2^dag)
    J_z = a1^dag a1 - a2^dag a2

so ``[J_x, J_y] = -2i J_z`` and the excess of ``u.J`` is ``n1 + n2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .algebra import NormalPolynomial, coherent_expectation, excess, parse_expression

__all__ = [
    "Number",
    "Quadrature",
    "Squeeze",
    "Kerr",
    "SU2",
    "Custom",
    "GeneratorSpec",
    "LINEAR",
    "polynomial",
    "excess_catalog",
    "excess_of",
    "coherent_qfi",
    "angular_momentum",
    "parse_generator",
    "format_generator",
    "dim_weight",
]


@dataclass(frozen=True)
class Number:
    modes = 1


@dataclass(frozen=True)
class Quadrature:
    theta: float = 0.0
    modes = 1


@dataclass(frozen=True)
class Squeeze:
    theta: float = 0.0
    modes = 1


@dataclass(frozen=True)
class Kerr:
    modes = 1


@dataclass(frozen=True)
class SU2:
    u: tuple = (0.0, 0.0, 1.0)
    modes = 2

    def __post_init__(self):
        u = tuple(float(x) for x in self.u)
        if len(u) != 3:
            raise ValueError("SU(2) direction must be a 3-vector")
        if abs(math.sqrt(sum(x * x for x in u)) - 1.0) > 1e-12:
            raise ValueError(f"SU(2) direction {u} is not a unit vector")
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class Custom:
    poly: NormalPolynomial

    def __post_init__(self):
        if not self.poly.is_hermitian():
            raise ValueError("custom generator must be Hermitian")

    @property
    def modes(self):
        return self.poly.modes


GeneratorSpec = Union[Number, Quadrature, Squeeze, Kerr, SU2, Custom]
LINEAR = (Number, Quadrature, Squeeze, SU2)


def angular_momentum() -> tuple[NormalPolynomial, NormalPolynomial, NormalPolynomial]:
    ad1_a2 = NormalPolynomial.monomial([(1, 0), (0, 1)])
    a1_ad2 = NormalPolynomial.monomial([(0, 1), (1, 0)])
    jx = ad1_a2 + a1_ad2
    jy = 1j * (ad1_a2 - a1_ad2)
    jz = NormalPolynomial.number(0, 2) - NormalPolynomial.number(1, 2)
    return jx, jy, jz


def polynomial(spec: GeneratorSpec) -> NormalPolynomial:
    """Normal-ordered polynomial of the generator."""
    if isinstance(spec, Number):
        return NormalPolynomial.number()
    if isinstance(spec, Quadrature):
        e = cmath.exp(1j * spec.theta)
        return NormalPolynomial({((0, 1),): e, ((1, 0),): e.conjugate()})
    if isinstance(spec, Squeeze):
        e = cmath.exp(1j * spec.theta)
        return NormalPolynomial({((0, 2),): e, ((2, 0),): e.conjugate()})
    if isinstance(spec, Kerr):
        n = NormalPolynomial.number()
        return n * n
    if isinstance(spec, SU2):
        jx, jy, jz = angular_momentum()
        ux, uy, uz = spec.u
        return ux * jx + uy * jy + uz * jz
    if isinstance(spec, Custom):
        return spec.poly
    raise TypeError(f"unknown generator spec {spec!r}")


def excess_catalog(spec: GeneratorSpec) -> NormalPolynomial:
    """Closed-form ``G^2 - :G^2:`` for the catalog generators."""
    if isinstance(spec, Number):
        return NormalPolynomial.number()
    if isinstance(spec, Quadrature):
        return NormalPolynomial.constant(1.0)
    if isinstance(spec, Squeeze):
        return 4 * NormalPolynomial.number() + 2
    if isinstance(spec, Kerr):
        return NormalPolynomial({((3, 3),): 4.0, ((2, 2),): 6.0, ((1, 1),): 1.0})
    if isinstance(spec, SU2):
        return NormalPolynomial.number(0, 2) + NormalPolynomial.number(1, 2)
    if isinstance(spec, Custom):
        raise ValueError("custom generators have no catalog entry; use algebra.excess")
    raise TypeError(f"unknown generator spec {spec!r}")


def excess_of(spec: GeneratorSpec) -> NormalPolynomial:
    """Catalog entry when there is one, symbolic computation otherwise."""
    if isinstance(spec, Custom):
        return excess(spec.poly)
    return excess_catalog(spec)


def coherent_qfi(spec: GeneratorSpec, alpha) -> float:
    """Quantum Fisher information of a coherent probe, ``4 <alpha|A_G|alpha>``."""
    return 4.0 * coherent_expectation(excess_of(spec), alpha).real


def dim_weight(spec: GeneratorSpec) -> float:
    """Tail weight exponent for truncation: ``G^2`` grows like ``n^4`` for Kerr."""
    if isinstance(spec, Kerr):
        return 8.0
    if isinstance(spec, Custom):
        return 2.0 * max(spec.poly.degree, 1)
    return 2.0


# ---------------------------------------------------------------------------
# text forms: number  quad:theta=0  squeeze:theta=0  kerr  su2:u=0,0,1  custom:<expr>

def _theta(body: str) -> float:
    if not body:
        return 0.0
    key, sep, val = body.partition("=")
    if not sep or key.strip() != "theta":
        raise ValueError(f"expected theta=<value>, got {body!r}")
    return float(val)


def parse_generator(text: str) -> GeneratorSpec:
    kind, _, body = text.strip().partition(":")
    kind = kind.lower()
    if kind == "number":
        return Number()
    if kind == "kerr":
        return Kerr()
    if kind in ("quad", "quadrature"):
        return Quadrature(_theta(body))
    if kind == "squeeze":
        return Squeeze(_theta(body))
    if kind == "su2":
        key, sep, val = body.partition("=")
        if body and (not sep or key.strip() != "u"):
            raise ValueError(f"expected u=x,y,z, got {body!r}")
        u = tuple(float(x) for x in val.split(",")) if body else (0.0, 0.0, 1.0)
        norm = float(np.linalg.norm(u))
        if norm == 0:
            raise ValueError("SU(2) direction must be non-zero")
        return SU2(tuple(x / norm for x in u))
    if kind == "custom":
        modes = 2 if any(s in body for s in ("a1", "a2", "ad1", "ad2")) else 1
        return Custom(parse_expression(body, modes))
    raise ValueError(f"unknown generator kind {kind!r}")


def format_generator(spec: GeneratorSpec) -> str:
    if isinstance(spec, Number):
        return "number"
    if isinstance(spec, Kerr):
        return "kerr"
    if isinstance(spec, Quadrature):
        return f"quad:theta={spec.theta!r}"
    if isinstance(spec, Squeeze):
        return f"squeeze:theta={spec.theta!r}"
    if isinstance(spec, SU2):
        return "su2:u=" + ",".join(repr(x) for x in spec.u)
    if isinstance(spec, Custom):
        return f"custom:{spec.poly}"
    return repr(spec)
