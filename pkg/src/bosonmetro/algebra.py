"""Normally ordered polynomials in bosonic ladder operators.

A polynomial is stored as a map from exponent tuples to complex
coefficients.  For ``k`` modes the key is ``((m_1, n_1), ..., (m_k, n_k))``
and stands for the monomial ``a_1^dag^m_1 a_1^n_1 ... a_k^dag^m_k a_k^n_k``.
Operators on different modes commute, so this is already normal order.

Products are reordered with the single-mode Wick identity

    a^n a^dag^m = sum_k  k! C(n, k) C(m, k)  a^dag^(m-k) a^(n-k)

whose combinatorial factors are exact integers.
"""

from __future__ import annotations

import math
import re
from itertools import product
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "NormalPolynomial",
    "ParseError",
    "multiply",
    "formal_square",
    "excess",
    "coherent_expectation",
    "adjoint",
    "parse_expression",
    "format_polynomial",
    "DROP_TOL",
]

# relative magnitude below which coefficients are treated as roundoff
DROP_TOL = 1e-14

Key = tuple  # tuple[tuple[int, int], ...]


class ParseError(ValueError):
    """Raised for malformed operator expressions; ``offset`` is a byte index."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def _canonical(terms: Mapping[Key, complex], drop_tol: float) -> dict:
    out = {k: complex(v) for k, v in terms.items() if v != 0}
    if not out:
        return out
    cutoff = drop_tol * max(abs(v) for v in out.values())
    return {k: v for k, v in out.items() if abs(v) > cutoff}


class NormalPolynomial:
    """Immutable normally ordered polynomial over a fixed number of modes."""

    __slots__ = ("_terms", "_modes")

    def __init__(self, terms: Mapping[Key, complex] | None = None, modes: int = 1,
                 drop_tol: float = DROP_TOL):
        if modes < 1:
            raise ValueError("mode count must be at least 1")
        terms = dict(terms or {})
        for key in terms:
            if len(key) != modes or any(
                    len(pair) != 2 or pair[0] < 0 or pair[1] < 0 for pair in key):
                raise ValueError(f"bad exponent key {key!r} for {modes} mode(s)")
        norm = {tuple((int(m), int(n)) for m, n in k): v for k, v in terms.items()}
        self._terms = MappingProxyType(_canonical(norm, drop_tol))
        self._modes = modes

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: complex, modes: int = 1) -> "NormalPolynomial":
        return cls({((0, 0),) * modes: value}, modes)

    @classmethod
    def monomial(cls, exponents: Sequence[tuple[int, int]], coeff: complex = 1.0
                 ) -> "NormalPolynomial":
        exponents = tuple(tuple(p) for p in exponents)
        return cls({exponents: coeff}, len(exponents))

    @classmethod
    def annihilator(cls, mode: int = 0, modes: int = 1) -> "NormalPolynomial":
        key = [(0, 0)] * modes
        key[mode] = (0, 1)
        return cls({tuple(key): 1.0}, modes)

    @classmethod
    def creator(cls, mode: int = 0, modes: int = 1) -> "NormalPolynomial":
        key = [(0, 0)] * modes
        key[mode] = (1, 0)
        return cls({tuple(key): 1.0}, modes)

    @classmethod
    def number(cls, mode: int = 0, modes: int = 1) -> "NormalPolynomial":
        key = [(0, 0)] * modes
        key[mode] = (1, 1)
        return cls({tuple(key): 1.0}, modes)

    # -- accessors --------------------------------------------------------
    @property
    def modes(self) -> int:
        return self._modes

    @property
    def terms(self) -> Mapping[Key, complex]:
        return self._terms

    @property
    def degree(self) -> int:
        """Largest per-mode ``m + n`` over all monomials (0 for the zero polynomial)."""
        return max((max(m + n for m, n in key) for key in self._terms), default=0)

    def coefficient(self, key: Sequence[tuple[int, int]]) -> complex:
        return self._terms.get(tuple(tuple(p) for p in key), 0j)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def is_zero(self) -> bool:
        return not self._terms

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max((abs(v) for v in self._terms.values()), default=0.0)
        diff = self - adjoint(self)
        return all(abs(v) <= tol * max(scale, 1.0) for _, v in diff)

    # -- arithmetic -------------------------------------------------------
    def _check(self, other: "NormalPolynomial") -> None:
        if not isinstance(other, NormalPolynomial):
            raise TypeError(f"expected NormalPolynomial, got {type(other).__name__}")
        if other._modes != self._modes:
            raise ValueError(
                f"mode-count mismatch: {self._modes} vs {other._modes}")

    def _lift(self, other) -> "NormalPolynomial":
        if isinstance(other, NormalPolynomial):
            self._check(other)
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return NormalPolynomial.constant(complex(other), self._modes)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0j) + v
        return NormalPolynomial(out, self._modes)

    __radd__ = __add__

    def __neg__(self):
        return NormalPolynomial({k: -v for k, v in self._terms.items()}, self._modes)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return NormalPolynomial({k: v * other for k, v in self._terms.items()},
                                    self._modes)
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        out = NormalPolynomial.constant(1.0, self._modes)
        for _ in range(k):
            out = multiply(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, NormalPolynomial):
            return NotImplemented
        return self._modes == other._modes and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self._modes, frozenset(self._terms.items())))

    def allclose(self, other: "NormalPolynomial", atol: float = 1e-12) -> bool:
        self._check(other)
        return all(abs(v) <= atol for _, v in (self - other))

    def __repr__(self):
        return f"NormalPolynomial({format_polynomial(self)!r}, modes={self._modes})"

    def __str__(self):
        return format_polynomial(self)


# ---------------------------------------------------------------------------
# core operations

def _wick_pair(n1: int, m2: int):
    """Expand ``a^n1 a^dag^m2`` -> [(k, integer factor)]."""
    return [(k, math.factorial(k) * math.comb(n1, k) * math.comb(m2, k))
            for k in range(min(n1, m2) + 1)]


def multiply(p: NormalPolynomial, q: NormalPolynomial) -> NormalPolynomial:
    """Normally ordered product ``p q``."""
    p._check(q)
    out: dict = {}
    for kp, cp in p.terms.items():
        for kq, cq in q.terms.items():
            per_mode = []
            for (m1, n1), (m2, n2) in zip(kp, kq):
                per_mode.append([((m1 + m2 - k, n1 + n2 - k), f)
                                 for k, f in _wick_pair(n1, m2)])
            base = cp * cq
            for combo in product(*per_mode):
                factor = 1
                for _, f in combo:
                    factor *= f
                key = tuple(e for e, _ in combo)
                out[key] = out.get(key, 0j) + factor * base
    return NormalPolynomial(out, p.modes)


def formal_square(p: NormalPolynomial) -> NormalPolynomial:
    """Square of ``p`` inside the normal-order sign: exponents add, no commutators."""
    out: dict = {}
    items = list(p.terms.items())
    for kp, cp in items:
        for kq, cq in items:
            key = tuple((m1 + m2, n1 + n2) for (m1, n1), (m2, n2) in zip(kp, kq))
            out[key] = out.get(key, 0j) + cp * cq
    return NormalPolynomial(out, p.modes)


def excess(g: NormalPolynomial) -> NormalPolynomial:
    """``G^2 - :G^2:``, whose coherent expectation is the coherent variance of G."""
    if not g.is_hermitian():
        raise ValueError("excess requires a Hermitian generator")
    return multiply(g, g) - formal_square(g)


def adjoint(p: NormalPolynomial) -> NormalPolynomial:
    return NormalPolynomial(
        {tuple((n, m) for m, n in k): v.conjugate() for k, v in p.terms.items()},
        p.modes)


def coherent_expectation(p: NormalPolynomial, alpha) -> complex:
    """``<alpha|P|alpha>`` for a normally ordered ``P``; ``alpha`` is one complex per mode."""
    alphas = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alphas.shape != (p.modes,):
        raise ValueError(f"mode-count mismatch: polynomial has {p.modes} mode(s), "
                         f"got {alphas.size} amplitude(s)")
    total = 0j
    for key, c in p.terms.items():
        term = c
        for (m, n), a in zip(key, alphas):
            term *= a.conjugate() ** m * a ** n
        total += term
    return complex(total)


# ---------------------------------------------------------------------------
# text form

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ad>ad\d*)
  | (?P<a>a\d*)
  | (?P<i>i(?![A-Za-z0-9_]))
  | (?P<op>[-+*^()])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)


def _tokenize(text: str):
    pos = 0
    raw = text.encode()
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             len(text[:pos].encode()))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), len(text[:pos].encode())))
        pos = m.end()
    tokens.append(("end", "", len(raw)))
    return tokens


class _Parser:
    # expr   := ['-'] term (('+'|'-') term)*
    # term   := factor ('*' factor)*
    # factor := atom ('^' UINT)?
    # atom   := 'a' MODE? | 'ad' MODE? | NUMBER | 'i' | '(' expr ')'

    def __init__(self, text: str, modes: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.modes = modes

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, val, off = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", off)

    def parse(self) -> NormalPolynomial:
        result = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", off)
        return result

    def expr(self) -> NormalPolynomial:
        negate = False
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            negate = True
        acc = self.term()
        if negate:
            acc = -acc
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                acc = acc + rhs if val == "+" else acc - rhs
            else:
                return acc

    def term(self) -> NormalPolynomial:
        acc = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = multiply(acc, self.factor())
            else:
                return acc

    def factor(self) -> NormalPolynomial:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, off = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be an unsigned integer", off)
            base = base ** int(val)
            kind, val, off = self.peek()
            if kind == "op" and val == "^":
                raise ParseError("exponent on non-atom", off)
        return base

    def _mode(self, suffix: str, off: int, name: str) -> int:
        if suffix == "":
            if self.modes != 1:
                raise ParseError(f"{name!r} needs a mode suffix in {self.modes}-mode input",
                                 off)
            return 0
        if suffix not in ("1", "2") or int(suffix) > self.modes:
            raise ParseError(f"unknown symbol {name + suffix!r}", off)
        return int(suffix) - 1

    def atom(self) -> NormalPolynomial:
        kind, val, off = self.take()
        if kind == "num":
            return NormalPolynomial.constant(float(val), self.modes)
        if kind == "i":
            return NormalPolynomial.constant(1j, self.modes)
        if kind == "ad":
            return NormalPolynomial.creator(self._mode(val[2:], off, "ad"), self.modes)
        if kind == "a":
            return NormalPolynomial.annihilator(self._mode(val[1:], off, "a"), self.modes)
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        if kind == "ident":
            raise ParseError(f"unknown symbol {val!r}", off)
        if kind == "end":
            raise ParseError("unexpected end of input", off)
        raise ParseError(f"unexpected token {val!r}", off)


def parse_expression(text: str, modes: int = 1) -> NormalPolynomial:
    """Parse an operator expression such as ``"(ad*a)^2"`` and normal-order it."""
    return _Parser(text, modes).parse()


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _fmt_coeff(c: complex) -> tuple[str, str]:
    """Return (sign, magnitude text); magnitude text is '' for unit coefficients."""
    re_, im = c.real, c.imag
    if im == 0:
        sign = "-" if re_ < 0 else "+"
        mag = abs(re_)
        return sign, "" if mag == 1 else _fmt_real(mag)
    if re_ == 0:
        sign = "-" if im < 0 else "+"
        mag = abs(im)
        return sign, "i" if mag == 1 else f"{_fmt_real(mag)}*i"
    op = "-" if im < 0 else "+"
    return "+", f"({_fmt_real(re_)} {op} {_fmt_real(abs(im))}*i)"


def _fmt_monomial(key: Key, modes: int) -> str:
    parts = []
    for idx, (m, n) in enumerate(key):
        suffix = "" if modes == 1 else str(idx + 1)
        for name, power in (("ad", m), ("a", n)):
            if power == 1:
                parts.append(f"{name}{suffix}")
            elif power > 1:
                parts.append(f"{name}{suffix}^{power}")
    return "*".join(parts)


def _sort_key(key: Key):
    total = sum(m + n for m, n in key)
    return (-total, tuple(-x for pair in key for x in pair))


def format_polynomial(p: NormalPolynomial) -> str:
    """Render in the expression grammar, e.g. ``4*ad^3*a^3 + 6*ad^2*a^2 + ad*a``."""
    if p.is_zero():
        return "0"
    pieces = []
    for key in sorted(p.terms, key=_sort_key):
        sign, mag = _fmt_coeff(p.terms[key])
        mono = _fmt_monomial(key, p.modes)
        if mono and mag:
            body = f"{mag}*{mono}"
        else:
            body = mono or mag or "1"
        pieces.append((sign, body))
    first_sign, first = pieces[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in pieces[1:]:
        out += f" {sign} {body}"
    return out


def polynomial_from_terms(items: Iterable[tuple[Sequence[tuple[int, int]], complex]],
                          modes: int) -> NormalPolynomial:
    out: dict = {}
    for key, c in items:
        key = tuple(tuple(p) for p in key)
        out[key] = out.get(key, 0j) + c
    return NormalPolynomial(out, modes)
