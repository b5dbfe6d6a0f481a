"""Truncated Fock-space matrices, states and unitary signal encoding.

Two-mode operators use the Kronecker convention with the mode-1 index
major: basis index ``j * d2 + k`` is ``|j>|k>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .algebra import NormalPolynomial, adjoint

__all__ = [
    "FockSpace",
    "OperatorMatrix",
    "DensityMatrix",
    "EigenDecomposition",
    "TruncationError",
    "annihilator_matrix",
    "realize",
    "coherent_vector",
    "poisson_tail",
    "choose_dim",
    "eigh",
    "evolve",
    "tensor_product",
    "projector",
]

DEFAULT_TAU = 1e-12
HERMITIAN_TOL = 1e-12


class TruncationError(ValueError):
    """The truncated basis discards more probability than the tolerance allows."""

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


@dataclass(frozen=True)
class FockSpace:
    dims: tuple = (1,)
    tau: float = DEFAULT_TAU
    weight: float = 2.0

    def __post_init__(self):
        dims = tuple(int(d) for d in np.atleast_1d(self.dims))
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"invalid truncation dimensions {self.dims!r}")
        object.__setattr__(self, "dims", dims)
        if self.tau <= 0:
            raise ValueError("tail tolerance must be positive")

    @classmethod
    def single(cls, d: int, tau: float = DEFAULT_TAU, weight: float = 2.0) -> "FockSpace":
        return cls((d,), tau, weight)

    @property
    def modes(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def mode_space(self, mode: int) -> "FockSpace":
        return FockSpace((self.dims[mode],), self.tau, self.weight)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _is_hermitian(h: np.ndarray) -> bool:
    scale = float(np.max(np.abs(h), initial=0.0))
    return float(np.max(np.abs(h - h.conj().T), initial=0.0)) <= HERMITIAN_TOL * max(scale, 1e-300)


@dataclass(frozen=True)
class OperatorMatrix:
    data: np.ndarray
    space: FockSpace
    hermitian: bool = False

    def __post_init__(self):
        data = _frozen(self.data)
        n = self.space.size
        if data.shape != (n, n):
            raise ValueError(f"matrix shape {data.shape} does not match space size {n}")
        if self.hermitian and not _is_hermitian(data):
            raise ValueError("matrix flagged Hermitian is not Hermitian")
        object.__setattr__(self, "data", data)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.space.dims != self.space.dims:
            raise ValueError("space mismatch")
        return OperatorMatrix(self.data @ other.data, self.space)

    @property
    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.data.conj().T, self.space, self.hermitian)


@dataclass(frozen=True)
class DensityMatrix:
    data: np.ndarray
    space: FockSpace
    tail_mass: float = 0.0
    check: bool = field(default=True, compare=False)

    def __post_init__(self):
        data = _frozen(self.data)
        n = self.space.size
        if data.shape != (n, n):
            raise ValueError(f"density matrix shape {data.shape} does not match space size {n}")
        object.__setattr__(self, "data", data)
        if not self.check:
            return
        if not _is_hermitian(data):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(data).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {tr!r} differs from 1")
        lo = np.linalg.eigvalsh(data)[0]
        if lo < -1e-10:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
        if self.tail_mass >= self.space.tau:
            raise TruncationError(
                f"truncation tail mass {self.tail_mass:.3e} exceeds tolerance {self.space.tau:.1e}")

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.data @ self.data)))


class EigenDecomposition(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


# ---------------------------------------------------------------------------

def _lowering(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def _embed(op: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for i, d in enumerate(dims):
        out = np.kron(out, op if i == mode else np.eye(d, dtype=complex))
    return out


def annihilator_matrix(space: FockSpace, mode: int = 0) -> OperatorMatrix:
    """Truncated ``a`` with ``a|k> = sqrt(k)|k-1>``, embedded for multi-mode spaces."""
    if not 0 <= mode < space.modes:
        raise IndexError(f"mode {mode} out of range for {space.modes}-mode space")
    return OperatorMatrix(_embed(_lowering(space.dims[mode]), mode, space.dims), space)


def realize(p: NormalPolynomial, space: FockSpace) -> OperatorMatrix:
    """Matrix of ``sum c a^dag^m a^n`` on the truncated space."""
    if p.modes != space.modes:
        raise ValueError(f"mode-count mismatch: polynomial {p.modes}, space {space.modes}")
    lowers = [_lowering(d) for d in space.dims]
    cache: dict = {}

    def mode_block(i, m, n):
        if (i, m, n) not in cache:
            a = lowers[i]
            cache[(i, m, n)] = (np.linalg.matrix_power(a.conj().T, m)
                                @ np.linalg.matrix_power(a, n))
        return cache[(i, m, n)]

    out = np.zeros((space.size, space.size), dtype=complex)
    for key, c in p.terms.items():
        block = np.ones((1, 1), dtype=complex)
        for i, (m, n) in enumerate(key):
            block = np.kron(block, mode_block(i, m, n))
        out += c * block
    herm = adjoint(p).allclose(p, atol=1e-12 * max((abs(v) for _, v in p), default=1.0))
    if herm:
        out = 0.5 * (out + out.conj().T)
    return OperatorMatrix(out, space, hermitian=herm)


def poisson_tail(mean: float, d: int, weight: float = 0.0) -> float:
    """``sum_{k >= d} Poisson(k; mean) (1 + k)^weight`` summed directly from the tail."""
    if mean == 0:
        return 0.0 if d >= 1 else 1.0
    total = 0.0
    k = d
    log_mean = math.log(mean)
    peak_seen = k >= mean
    while True:
        term = math.exp(k * log_mean - mean - math.lgamma(k + 1) + weight * math.log1p(k))
        total += term
        if k > mean + weight:
            peak_seen = True
        if peak_seen and term < 1e-300 + 1e-18 * total:
            return total
        k += 1


def choose_dim(alpha, weight: float = 0.0, tau: float = DEFAULT_TAU) -> int:
    """Smallest d with the weighted Poisson(|alpha|^2) tail beyond d below ``tau``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    mean = float(np.abs(alpha) ** 2)
    if mean == 0:
        return 1
    d = 1
    # coarse doubling then linear scan keeps the search cheap for large means
    while poisson_tail(mean, 2 * d, weight) >= tau:
        d *= 2
    while poisson_tail(mean, d, weight) >= tau:
        d += 1
    return d


def coherent_vector(alpha: complex, space: FockSpace) -> tuple[np.ndarray, float]:
    """Normalized truncated ``|alpha>`` and the probability discarded by truncation."""
    if space.modes != 1:
        raise ValueError("coherent_vector builds single-mode states")
    d = space.dims[0]
    alpha = complex(alpha)
    mean = abs(alpha) ** 2
    tail = poisson_tail(mean, d)
    if tail >= space.tau:
        need = choose_dim(alpha, 0.0, space.tau)
        raise TruncationError(
            f"dimension {d} too small for |alpha|^2 = {mean:.6g}: tail mass {tail:.3e} "
            f">= {space.tau:.1e}; need d >= {need}", need)
    k = np.arange(d)
    if alpha == 0:
        vec = np.zeros(d, dtype=complex)
        vec[0] = 1.0
        return vec, 0.0
    log_mag = k * math.log(abs(alpha)) - mean / 2 - np.array([math.lgamma(j + 1) / 2 for j in k])
    vec = np.exp(log_mag) * np.exp(1j * k * np.angle(alpha))
    vec = vec / np.linalg.norm(vec)
    return vec, tail


def projector(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec.conj())


def eigh(h: OperatorMatrix) -> EigenDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    if not h.hermitian:
        raise ValueError("eigh requires a matrix flagged Hermitian")
    vals, vecs = np.linalg.eigh(h.data)
    return EigenDecomposition(vals, vecs)


def evolve(rho: DensityMatrix, g: OperatorMatrix, chi: float) -> DensityMatrix:
    """``exp(i chi G) rho exp(-i chi G)``."""
    if rho.space.dims != g.space.dims:
        raise ValueError("space mismatch between state and generator")
    if chi == 0:
        return rho
    vals, vecs = eigh(g)
    u = (vecs * np.exp(1j * chi * vals)) @ vecs.conj().T
    out = u @ rho.data @ u.conj().T
    out = 0.5 * (out + out.conj().T)
    return DensityMatrix(out, rho.space, rho.tail_mass, check=False)


def tensor_product(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """``A (x) B`` on the joint space, mode-1 index major."""
    space = FockSpace(a.space.dims + b.space.dims,
                      min(a.space.tau, b.space.tau), max(a.space.weight, b.space.weight))
    return OperatorMatrix(np.kron(a.data, b.data), space, a.hermitian and b.hermitian)
