"""Quantum Fisher information, the Hilbert-Schmidt measure and the classicality bound."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .fock import DensityMatrix, OperatorMatrix, realize
from .generators import LINEAR, GeneratorSpec, coherent_qfi, excess_of, polynomial
from .probes import matched_coherent, mean_photons

__all__ = [
    "EPS_EIG",
    "MetrologyReport",
    "qfi",
    "qfi_pure",
    "lambda2",
    "classical_bound",
    "witness",
    "proposition_test",
    "REPORT_FIELDS",
]

EPS_EIG = 1e-12
# eigenvalues of rho in [-CLAMP, 0) are eigensolver noise
CLAMP = 1e-10
# relative slack used for both beats_coherent and witness_positive
REPORT_RTOL = 1e-9

REPORT_FIELDS = ("nbar", "fq", "fq_coh", "four_lambda2", "bound", "witness",
                 "beats_coherent", "witness_positive", "dim", "tail_mass", "eps_eig")


def _check_pair(rho: DensityMatrix, g: OperatorMatrix) -> None:
    if rho.space.dims != g.space.dims:
        raise ValueError(f"space mismatch: state {rho.space.dims}, generator {g.space.dims}")
    if not g.hermitian:
        raise ValueError("generator matrix must be Hermitian")


def _spectrum(rho: DensityMatrix):
    vals, vecs = np.linalg.eigh(rho.data)
    if vals[0] < -CLAMP:
        raise ValueError(f"state has eigenvalue {vals[0]:.3e} below -{CLAMP:g}")
    return np.clip(vals, 0.0, None), vecs


def qfi(rho: DensityMatrix, g: OperatorMatrix, eps: float = EPS_EIG) -> float:
    """``2 sum (r_j - r_k)^2 / (r_j + r_k) |<r_j|G|r_k>|^2`` over pairs with ``r_j + r_k > eps``."""
    _check_pair(rho, g)
    r, v = _spectrum(rho)
    gt = v.conj().T @ g.data @ v
    rsum = r[:, None] + r[None, :]
    keep = rsum > eps
    rdiff = r[:, None] - r[None, :]
    weights = np.zeros_like(rsum)
    weights[keep] = rdiff[keep] ** 2 / rsum[keep]
    return float(max(2.0 * np.sum(weights * np.abs(gt) ** 2), 0.0))


def qfi_pure(psi: np.ndarray, g: OperatorMatrix) -> float:
    """``4 (<G^2> - <G>^2)`` for a normalized state vector."""
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"state vector norm {norm!r} is not 1")
    gpsi = g.data @ psi
    mean = np.vdot(psi, gpsi).real
    second = np.vdot(gpsi, gpsi).real
    return float(max(4.0 * (second - mean * mean), 0.0))


def lambda2(rho: DensityMatrix, g: OperatorMatrix) -> float:
    """``tr(rho^2 G^2) - tr(rho G rho G)``, checked against the eigenbasis sum."""
    _check_pair(rho, g)
    rg = rho.data @ g.data
    first = np.real(np.trace(rg.conj().T @ rg))  # tr(G rho rho G) = tr(rho^2 G^2)
    second = np.real(np.trace(rg @ rg))
    trace_form = first - second

    r, v = _spectrum(rho)
    gt = v.conj().T @ g.data @ v
    eigen_form = 0.5 * np.sum((r[:, None] - r[None, :]) ** 2 * np.abs(gt) ** 2)
    scale = max(abs(first), abs(trace_form), 1e-300)
    if abs(trace_form - eigen_form) > 1e-9 * scale:
        raise ArithmeticError(
            f"trace and eigenbasis forms disagree: {trace_form!r} vs {eigen_form!r}")
    return float(max(trace_form, 0.0))


def _excess_matrix(rho: DensityMatrix, spec: GeneratorSpec) -> OperatorMatrix:
    ag = excess_of(spec)
    if ag.modes != rho.space.modes:
        raise ValueError(f"generator acts on {ag.modes} mode(s), state has {rho.space.modes}")
    return realize(ag, rho.space)


def classical_bound(rho: DensityMatrix, spec: GeneratorSpec) -> float:
    """``4 tr(rho A_G)``: the largest QFI any classical state with this rho can have."""
    ag = _excess_matrix(rho, spec)
    return float(4.0 * np.real(np.trace(rho.data @ ag.data)))


def witness(rho: DensityMatrix, spec: GeneratorSpec, eps: float = EPS_EIG) -> float:
    """QFI minus the classical bound; a positive value certifies nonclassicality."""
    g = realize(polynomial(spec), rho.space)
    return qfi(rho, g, eps) - classical_bound(rho, spec)


@dataclass(frozen=True)
class MetrologyReport:
    nbar: float
    fq: float
    fq_coh: float
    four_lambda2: float
    bound: float
    witness: float
    beats_coherent: bool
    witness_positive: bool
    dim: tuple
    tail_mass: float
    eps_eig: float

    def as_dict(self) -> dict:
        out = asdict(self)
        out["dim"] = list(self.dim)
        return out

    @property
    def verdict(self) -> str:
        return "nonclassical" if self.witness_positive else "inconclusive"


def proposition_test(rho: DensityMatrix, spec: GeneratorSpec,
                     eps: float = EPS_EIG) -> MetrologyReport:
    """Compare a probe with the coherent state of equal mean photon number."""
    g = realize(polynomial(spec), rho.space)
    fq = qfi(rho, g, eps)
    fq_coh = coherent_qfi(spec, matched_coherent(rho))
    bound = classical_bound(rho, spec)
    wit = fq - bound
    beats = fq > fq_coh + REPORT_RTOL * max(1.0, abs(fq_coh))
    positive = wit > REPORT_RTOL * max(1.0, abs(bound))
    return MetrologyReport(
        nbar=mean_photons(rho),
        fq=fq,
        fq_coh=fq_coh,
        four_lambda2=4.0 * lambda2(rho, g),
        bound=bound,
        witness=wit,
        beats_coherent=bool(beats),
        witness_positive=bool(positive),
        dim=rho.space.dims,
        tail_mass=rho.tail_mass,
        eps_eig=eps,
    )


def is_linear(spec: GeneratorSpec) -> bool:
    return isinstance(spec, LINEAR)
