"""Homodyne detection of the quadrature ``X = a + a^dag``.

Covers outcome densities P(x|chi) = <x|rho_chi|x>, the classical Fisher
information at chi = 0, seeded sampling and maximum-likelihood estimation
of a small signal chi.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .fock import DensityMatrix, OperatorMatrix, eigh, evolve, realize
from .generators import GeneratorSpec, dim_weight, polynomial
from .metrology import qfi
from .probes import ProbeSpec, auto_space, build_density

__all__ = [
    "QuadratureGrid",
    "HomodyneDistribution",
    "SampleSet",
    "EstimatorResult",
    "DegenerateEstimationError",
    "NormalizationError",
    "default_grid",
    "wavefunctions",
    "distribution",
    "score_at_zero",
    "cfi_at_zero",
    "sample",
    "mle",
    "LikelihoodModel",
    "crb_experiment",
]

EPS_P = 1e-12
GOLDEN = (math.sqrt(5) - 1) / 2


class NormalizationError(ValueError):
    """Grid or truncation too small to capture the outcome density."""


class DegenerateEstimationError(ValueError):
    """The likelihood does not depend on chi over the search window."""


@dataclass(frozen=True)
class QuadratureGrid:
    half_width: float
    points: int

    def __post_init__(self):
        if self.points < 3 or self.half_width <= 0:
            raise ValueError("grid needs a positive half-width and at least 3 points")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)

    @property
    def h(self) -> float:
        return 2 * self.half_width / (self.points - 1)


def default_grid(d: int, refine: float = 1.0) -> QuadratureGrid:
    """Half-width ``2 sqrt(2d)`` and at least 16 points per oscillation of psi_{d-1}.

    For small d that half-width does not yet contain psi_{d-1}; it is then
    widened in steps of 0.5 until the edge density drops below 1e-12.
    """
    half = 2 * math.sqrt(2 * d)
    while wavefunctions(d, np.array([half]))[-1, 0] ** 2 > 1e-12:
        half += 0.5
    # local wavenumber of psi_n in x is about sqrt(n + 1/2)
    h = 2 * math.pi / (16 * math.sqrt(d - 0.5)) / refine
    points = 2 * int(math.ceil(half / h)) + 1
    return QuadratureGrid(half, points)


def wavefunctions(d: int, x: np.ndarray) -> np.ndarray:
    """Rows ``psi_n(x)`` for n < d, eigenfunctions of ``X = a + a^dag``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((d, x.size))
    out[0] = (2 * math.pi) ** -0.25 * np.exp(-x * x / 4)
    if d > 1:
        out[1] = x * out[0]
    for n in range(1, d - 1):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def _grid_wavefunctions(d: int, grid: QuadratureGrid) -> np.ndarray:
    psi = wavefunctions(d, grid.x)
    # the highest state must be (numerically) contained in the grid
    edge = psi[-1, 0] ** 2 + psi[-1, -1] ** 2
    if edge > 1e-10:
        raise NormalizationError(
            f"grid half-width {grid.half_width:.3g} too narrow for Fock dimension {d}")
    return psi


def _single_mode(rho: DensityMatrix) -> int:
    if rho.space.modes != 1:
        raise ValueError("homodyne detection is single-mode")
    return rho.space.dims[0]


def _diag_form(psi: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``sum_mn psi_m(x) M_mn psi_n(x)`` for every x."""
    return np.einsum("mi,mn,ni->i", psi, m, psi)


@dataclass(frozen=True)
class HomodyneDistribution:
    grid: QuadratureGrid
    values: np.ndarray
    chi: float
    provenance: dict = field(default_factory=dict, compare=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "p"])
        for x, p in zip(self.grid.x, self.values):
            w.writerow([f"{x:.17g}", f"{p:.17g}"])
        return buf.getvalue()


def distribution(rho: DensityMatrix, g: OperatorMatrix, chi: float,
                 grid: QuadratureGrid | None = None,
                 provenance: dict | None = None) -> HomodyneDistribution:
    """Outcome density ``P(x|chi) = <x|rho_chi|x>`` on a quadrature grid."""
    d = _single_mode(rho)
    grid = grid or default_grid(d)
    rho_chi = evolve(rho, g, chi)
    psi = _grid_wavefunctions(d, grid)
    values = _diag_form(psi, rho_chi.data)
    if np.max(np.abs(values.imag)) > 1e-10:
        raise ArithmeticError("outcome density has an imaginary part")
    values = values.real
    if values.min() < -1e-12 * max(values.max(), 1.0):
        raise NormalizationError(f"outcome density negative ({values.min():.3e})")
    values = np.clip(values, 0.0, None)
    total = np.sum(values) * grid.h
    if abs(total - 1.0) > 1e-8:
        raise NormalizationError(f"outcome density integrates to {total!r}")
    values.setflags(write=False)
    return HomodyneDistribution(grid, values, chi, dict(provenance or {}))


def score_at_zero(rho: DensityMatrix, g: OperatorMatrix,
                  grid: QuadratureGrid | None = None) -> np.ndarray:
    """``dP(x|chi)/dchi`` at chi = 0, i.e. ``i <x|[G, rho]|x>``."""
    d = _single_mode(rho)
    grid = grid or default_grid(d)
    psi = _grid_wavefunctions(d, grid)
    comm = g.data @ rho.data - rho.data @ g.data
    deriv = 1j * _diag_form(psi, comm)
    if np.max(np.abs(deriv.imag)) > 1e-10 * max(1.0, np.max(np.abs(deriv.real))):
        raise ArithmeticError("score has an imaginary part")
    return deriv.real


def cfi_at_zero(rho: DensityMatrix, g: OperatorMatrix,
                grid: QuadratureGrid | None = None, eps_p: float = EPS_P) -> float:
    """Homodyne Fisher information ``int (dP/dchi)^2 / P dx`` at chi = 0."""
    d = _single_mode(rho)
    grid = grid or default_grid(d)
    p = distribution(rho, g, 0.0, grid).values
    dp = score_at_zero(rho, g, grid)
    keep = p > eps_p * p.max()
    integrand = np.zeros_like(p)
    integrand[keep] = dp[keep] ** 2 / p[keep]
    return float(np.trapezoid(integrand, dx=grid.h))


# ---------------------------------------------------------------------------
# sampling and estimation

@dataclass(frozen=True)
class SampleSet:
    x: np.ndarray
    seed: int
    n: int
    provenance: dict = field(default_factory=dict, compare=False)

    def to_csv(self) -> str:
        rep = self.provenance.get("stream")
        rep = "" if rep is None else rep
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replicate", "sample_index", "x"])
        for i, x in enumerate(self.x):
            w.writerow([rep, i, f"{x:.17g}"])
        return buf.getvalue()


def _rng(seed, stream: int | None = None) -> np.random.Generator:
    if stream is None:
        return np.random.default_rng(seed)
    return np.random.default_rng([int(seed), int(stream)])


def sample(dist: HomodyneDistribution, seed: int, n: int,
           stream: int | None = None) -> SampleSet:
    """Inverse-CDF draws; the CDF is the trapezoid integral, linear within cells."""
    if n < 0:
        raise ValueError("sample count must be non-negative")
    x = dist.grid.x
    p = np.asarray(dist.values)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * dist.grid.h)])
    cdf /= cdf[-1]
    u = _rng(seed, stream).random(n)
    draws = np.interp(u, cdf, x)
    draws.setflags(write=False)
    prov = dict(dist.provenance, chi=dist.chi, stream=stream)
    return SampleSet(draws, seed, n, prov)


class LikelihoodModel:
    """Evaluates ``P(x_i|chi)`` for fixed samples over many chi values.

    With ``G = W diag(lam) W^dag`` and ``rho = sum_k r_k |v_k><v_k|`` the
    amplitude of branch k at x is ``psi(x)^T W exp(i chi lam) W^dag v_k``.
    """

    def __init__(self, rho: DensityMatrix, g: OperatorMatrix, x: np.ndarray):
        d = _single_mode(rho)
        lam, w = eigh(g)
        r, v = np.linalg.eigh(rho.data)
        keep = r > 1e-14
        self._r = r[keep]
        self._coef = w.conj().T @ v[:, keep]
        self._lam = lam
        self._basis = wavefunctions(d, x).T @ w  # (N, d)

    def probabilities(self, chis) -> np.ndarray:
        """Array (len(chis), N) of outcome densities."""
        chis = np.atleast_1d(np.asarray(chis, dtype=float))
        rank = self._r.size
        phase = np.exp(1j * np.outer(self._lam, chis))  # (d, C)
        coef = (phase[:, :, None] * self._coef[:, None, :]).reshape(len(self._lam), -1)
        amp = self._basis @ coef  # (N, C*rank)
        probs = (np.abs(amp) ** 2).reshape(-1, chis.size, rank) @ self._r
        return probs.T

    def log_likelihood(self, chis, floor: float) -> np.ndarray:
        return np.sum(np.log(np.maximum(self.probabilities(chis), floor)), axis=1)


def mle(samples: SampleSet, rho: DensityMatrix, g: OperatorMatrix,
        window: tuple[float, float] = (-0.05, 0.05), coarse: int = 64,
        xtol: float = 1e-7, eps_p: float = EPS_P) -> float:
    """Maximum-likelihood chi: coarse grid search, then golden-section refinement."""
    lo, hi = window
    if not lo < hi:
        raise ValueError("empty estimation window")
    if samples.n == 0:
        raise DegenerateEstimationError("no samples")
    model = LikelihoodModel(rho, g, samples.x)
    # floor relative to the peak density of the probe at the window centre
    floor = eps_p * float(np.max(model.probabilities([0.5 * (lo + hi)])))
    chis = np.linspace(lo, hi, coarse)
    ll = model.log_likelihood(chis, floor)
    if ll.max() - ll.min() < 1e-12:
        raise DegenerateEstimationError("likelihood is flat in chi over the window")
    k = int(np.argmax(ll))
    step = chis[1] - chis[0]
    a, b = max(lo, chis[k] - step), min(hi, chis[k] + step)

    def f(c):
        return -model.log_likelihood([c], floor)[0]

    c1 = b - GOLDEN * (b - a)
    c2 = a + GOLDEN * (b - a)
    f1, f2 = f(c1), f(c2)
    while b - a > xtol:
        if f1 <= f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - GOLDEN * (b - a)
            f1 = f(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + GOLDEN * (b - a)
            f2 = f(c2)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class EstimatorResult:
    chi_true: float
    n: int
    replicates: int
    estimates: np.ndarray
    var_emp: float
    mean_emp: float
    fc: float
    fq: float
    seed: int
    qcrb_consistent: bool = True
    dim: tuple = ()
    tail_mass: float = 0.0

    @property
    def crb_fc(self) -> float:
        return 1.0 / (self.n * self.fc)

    @property
    def crb_fq(self) -> float:
        return 1.0 / (self.n * self.fq)

    @property
    def ratio_fc(self) -> float:
        return self.var_emp / self.crb_fc

    @property
    def ratio_fq(self) -> float:
        return self.var_emp / self.crb_fq

    def as_dict(self) -> dict:
        return {
            "chi_true": self.chi_true,
            "n": self.n,
            "replicates": self.replicates,
            "var_emp": self.var_emp,
            "mean_emp": self.mean_emp,
            "crb_fc": self.crb_fc,
            "crb_fq": self.crb_fq,
            "ratio_fc": self.ratio_fc,
            "ratio_fq": self.ratio_fq,
            "seed": self.seed,
            "fc": self.fc,
            "fq": self.fq,
            "qcrb_consistent": self.qcrb_consistent,
            "dim": list(self.dim),
            "tail_mass": self.tail_mass,
        }


def crb_experiment(probe: ProbeSpec, spec: GeneratorSpec, chi_true: float, n: int,
                   replicates: int, seed: int,
                   window: tuple[float, float] = (-0.05, 0.05),
                   dim: int | None = None, tau: float = 1e-12) -> EstimatorResult:
    """Replicated MLE runs compared with the Cramer-Rao bounds at chi = 0.

    Replicate ``k`` draws from the RNG stream seeded by ``(seed, k)``, so
    results do not depend on execution order.
    """
    if replicates < 2:
        raise ValueError("need at least two replicates for a variance")
    space = auto_space(probe, dim_weight(spec), tau, dim)
    rho = build_density(probe, space)
    g = realize(polynomial(spec), space)
    d = space.dims[0]
    grid = default_grid(d)
    fc = cfi_at_zero(rho, g, grid)
    fq = qfi(rho, g)
    # sampling uses a finer grid so the piecewise-linear CDF bias stays negligible
    dist = distribution(rho, g, chi_true, default_grid(d, refine=4.0))
    estimates = np.array([mle(sample(dist, seed, n, stream=k), rho, g, window)
                          for k in range(replicates)])
    var = float(np.var(estimates, ddof=1))
    slack = 4.0 * math.sqrt(2.0 / (replicates - 1))
    return EstimatorResult(
        chi_true=chi_true, n=n, replicates=replicates, estimates=estimates,
        var_emp=var, mean_emp=float(np.mean(estimates)), fc=fc, fq=fq, seed=seed,
        qcrb_consistent=bool(var >= (1.0 - slack) / (n * fq)),
        dim=space.dims, tail_mass=rho.tail_mass,
    )
