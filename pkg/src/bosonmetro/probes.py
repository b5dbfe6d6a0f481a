"""Probe states and photon-number bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .fock import (
    DEFAULT_TAU,
    DensityMatrix,
    FockSpace,
    TruncationError,
    choose_dim,
    coherent_vector,
    projector,
)

__all__ = [
    "Coherent",
    "Fock",
    "VacuumDoped",
    "ClassicalMix",
    "SqueezedVacuum",
    "TwoModeCoherent",
    "ProbeSpec",
    "build_density",
    "required_dims",
    "auto_space",
    "mean_photons",
    "mode_photons",
    "matched_coherent",
    "parse_probe",
    "format_probe",
]


@dataclass(frozen=True)
class Coherent:
    alpha: complex = 0j

    @property
    def modes(self):
        return 1


@dataclass(frozen=True)
class Fock:
    n: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("Fock photon number must be non-negative")

    @property
    def modes(self):
        return 1


@dataclass(frozen=True)
class VacuumDoped:
    """``p |alpha/sqrt(p)><alpha/sqrt(p)| + (1 - p)|0><0|``, mean photon number ``|alpha|^2``."""

    p: float
    alpha: complex

    def __post_init__(self):
        if not 0 < self.p < 1:
            raise ValueError(f"vacuum-doped weight p={self.p} out of (0,1)")

    @property
    def bright(self) -> complex:
        return complex(self.alpha) / math.sqrt(self.p)

    @property
    def modes(self):
        return 1


@dataclass(frozen=True)
class ClassicalMix:
    """Finite mixture of coherent states; amplitudes are complex or per-mode tuples."""

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), a if isinstance(a, tuple) else complex(a))
                      for w, a in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        if any(w < 0 for w, _ in comps):
            raise ValueError("mixture weights must be non-negative")
        if abs(sum(w for w, _ in comps) - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1")
        sizes = {len(a) if isinstance(a, tuple) else 1 for _, a in comps}
        if len(sizes) != 1:
            raise ValueError("mixture components disagree on mode count")
        object.__setattr__(self, "components", comps)

    @property
    def modes(self):
        a = self.components[0][1]
        return len(a) if isinstance(a, tuple) else 1


@dataclass(frozen=True)
class SqueezedVacuum:
    r: float
    phi: float = 0.0

    @property
    def modes(self):
        return 1


@dataclass(frozen=True)
class TwoModeCoherent:
    alpha1: complex
    alpha2: complex

    @property
    def modes(self):
        return 2


ProbeSpec = Union[Coherent, Fock, VacuumDoped, ClassicalMix, SqueezedVacuum, TwoModeCoherent]


# ---------------------------------------------------------------------------
# squeezed vacuum amplitudes

def _squeezed_log_weights(r: float, count: int) -> np.ndarray:
    """log |c_{2m}|^2 for m < count (unnormalized)."""
    m = np.arange(count)
    t = math.tanh(r)
    if t == 0:
        out = np.full(count, -np.inf)
        out[0] = 0.0
        return out
    lg = np.array([math.lgamma(2 * j + 1) - 2 * math.lgamma(j + 1) for j in m])
    return 2 * m * math.log(t) + lg - 2 * m * math.log(2)


def _squeezed_tail(r: float, d: int, weight: float = 0.0) -> float:
    if r == 0:
        return 0.0 if d >= 1 else 1.0
    # the even-photon distribution decays like tanh(r)^(2m); pick a generous cap
    t2 = math.tanh(r) ** 2
    cap = max(d, 64) + int(200 / max(-math.log(t2), 1e-3)) + 1
    logw = _squeezed_log_weights(r, cap) - math.log(math.cosh(r))
    n = 2 * np.arange(cap)
    w = np.exp(logw + weight * np.log1p(n))
    return float(w[n >= d].sum())


def _squeezed_vector(r: float, phi: float, d: int) -> tuple[np.ndarray, float]:
    vec = np.zeros(d, dtype=complex)
    count = (d + 1) // 2
    logw = _squeezed_log_weights(r, count)
    m = np.arange(count)
    vec[0::2] = np.exp(0.5 * logw) * (-np.exp(1j * phi)) ** m
    tail = _squeezed_tail(r, d)
    return vec / np.linalg.norm(vec), tail


def _squeezed_dim(r: float, weight: float, tau: float) -> int:
    d = 1
    while _squeezed_tail(r, d, weight) >= tau:
        d += 1
    return d


# ---------------------------------------------------------------------------

def _coherent_amplitudes(spec) -> list:
    if isinstance(spec, Coherent):
        return [complex(spec.alpha)]
    if isinstance(spec, VacuumDoped):
        return [spec.bright, 0j]
    if isinstance(spec, ClassicalMix) and spec.modes == 1:
        return [a for _, a in spec.components]
    return []


def required_dims(spec: ProbeSpec, weight: float = 2.0, tau: float = DEFAULT_TAU) -> tuple:
    """Per-mode truncation dimensions meeting the weighted tail criterion."""
    if isinstance(spec, Fock):
        # headroom so that G^2 |n> is not clipped by the truncation
        return (spec.n + 3 + int(math.ceil(weight)),)
    if isinstance(spec, SqueezedVacuum):
        return (_squeezed_dim(spec.r, weight, tau),)
    if isinstance(spec, TwoModeCoherent):
        return (choose_dim(spec.alpha1, weight, tau), choose_dim(spec.alpha2, weight, tau))
    if isinstance(spec, ClassicalMix) and spec.modes > 1:
        return tuple(max(choose_dim(a[i], weight, tau) for _, a in spec.components)
                     for i in range(spec.modes))
    return (max(choose_dim(a, weight, tau) for a in _coherent_amplitudes(spec)),)


def auto_space(spec: ProbeSpec, weight: float = 2.0, tau: float = DEFAULT_TAU,
               dim: int | None = None) -> FockSpace:
    dims = required_dims(spec, weight, tau) if dim is None else (dim,) * spec.modes
    return FockSpace(dims, tau, weight)


def _multimode_coherent(alphas, space: FockSpace):
    vec = np.ones(1, dtype=complex)
    tail = 0.0
    for i, a in enumerate(alphas):
        v, t = coherent_vector(a, space.mode_space(i))
        vec = np.kron(vec, v)
        tail += t
    return vec, tail


def build_density(spec: ProbeSpec, space: FockSpace) -> DensityMatrix:
    """Density matrix of a probe on ``space``; raises TruncationError if too small."""
    if spec.modes != space.modes:
        raise ValueError(f"probe has {spec.modes} mode(s), space has {space.modes}")
    d = space.dims[0]
    if isinstance(spec, Coherent):
        vec, tail = coherent_vector(spec.alpha, space)
        return DensityMatrix(projector(vec), space, tail)
    if isinstance(spec, Fock):
        if spec.n >= d:
            raise TruncationError(f"Fock state |{spec.n}> needs d >= {spec.n + 1}", spec.n + 1)
        vec = np.zeros(d, dtype=complex)
        vec[spec.n] = 1.0
        return DensityMatrix(projector(vec), space, 0.0)
    if isinstance(spec, VacuumDoped):
        bright, tail = coherent_vector(spec.bright, space)
        rho = spec.p * projector(bright)
        rho[0, 0] += 1 - spec.p
        return DensityMatrix(rho, space, spec.p * tail)
    if isinstance(spec, ClassicalMix):
        rho = np.zeros((space.size, space.size), dtype=complex)
        tail = 0.0
        for w, a in spec.components:
            if isinstance(a, tuple):
                vec, t = _multimode_coherent(a, space)
            else:
                vec, t = coherent_vector(a, space)
            rho += w * projector(vec)
            tail += w * t
        return DensityMatrix(rho, space, tail)
    if isinstance(spec, SqueezedVacuum):
        vec, tail = _squeezed_vector(spec.r, spec.phi, d)
        if tail >= space.tau:
            need = _squeezed_dim(spec.r, 0.0, space.tau)
            raise TruncationError(f"dimension {d} too small for squeezing r={spec.r}; "
                                  f"need d >= {need}", need)
        return DensityMatrix(projector(vec), space, tail)
    if isinstance(spec, TwoModeCoherent):
        vec, tail = _multimode_coherent((spec.alpha1, spec.alpha2), space)
        return DensityMatrix(projector(vec), space, tail)
    raise TypeError(f"unknown probe spec {spec!r}")


def mode_photons(rho: DensityMatrix) -> tuple:
    """Mean photon number of each mode."""
    dims = rho.space.dims
    diag = np.real(np.diag(rho.data)).reshape(dims)
    out = []
    for i, d in enumerate(dims):
        axes = tuple(j for j in range(len(dims)) if j != i)
        marginal = diag.sum(axis=axes) if axes else diag
        out.append(float(np.dot(np.arange(d), marginal)))
    return tuple(out)


def mean_photons(rho: DensityMatrix) -> float:
    """``tr(rho a^dag a)`` summed over modes."""
    return float(max(sum(mode_photons(rho)), 0.0))


def matched_coherent(rho: DensityMatrix, phase: float = 0.0):
    """Coherent amplitude with the probe's mean photon number.

    Single-mode input returns one complex number; multi-mode input returns
    one amplitude per mode, each carrying that mode's photon number.
    """
    per_mode = [math.sqrt(max(n, 0.0)) * complex(math.cos(phase), math.sin(phase))
                for n in mode_photons(rho)]
    if len(per_mode) == 1:
        return per_mode[0]
    return tuple(per_mode)


# ---------------------------------------------------------------------------
# text forms: coherent:1.5+0i  vacuumdoped:p=0.25,alpha=1  mix:0.5@1,0.5@-1
#             fock:3  sqvac:r=0.5,phi=0  twomode:1,0.5j

def _complex(text: str) -> complex:
    t = text.strip().replace("i", "j").replace(" ", "")
    if t.endswith("j") and (len(t) == 1 or t[-2] in "+-"):
        t = t[:-1] + "1j"
    try:
        return complex(t)
    except ValueError:
        raise ValueError(f"bad complex number {text!r}") from None


def _kv(body: str, required: Sequence[str], optional: dict) -> dict:
    out = dict(optional)
    for part in filter(None, body.split(",")):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        k = k.strip()
        if k not in required and k not in optional:
            raise ValueError(f"unknown probe parameter {k!r}")
        out[k] = v.strip()
    missing = [k for k in required if k not in out]
    if missing:
        raise ValueError(f"missing probe parameter(s): {', '.join(missing)}")
    return out


def parse_probe(text: str) -> ProbeSpec:
    kind, _, body = text.strip().partition(":")
    kind = kind.lower()
    if kind == "coherent":
        return Coherent(_complex(body))
    if kind == "fock":
        return Fock(int(body))
    if kind == "vacuumdoped":
        kv = _kv(body, ("p", "alpha"), {})
        return VacuumDoped(float(kv["p"]), _complex(kv["alpha"]))
    if kind == "mix":
        comps = []
        for part in body.split(","):
            w, sep, a = part.partition("@")
            if not sep:
                raise ValueError(f"mixture component {part!r} must be weight@alpha")
            comps.append((float(w), _complex(a)))
        return ClassicalMix(tuple(comps))
    if kind == "sqvac":
        kv = _kv(body, ("r",), {"phi": "0"})
        return SqueezedVacuum(float(kv["r"]), float(kv["phi"]))
    if kind == "twomode":
        a1, sep, a2 = body.partition(",")
        if not sep:
            raise ValueError("twomode needs two amplitudes: twomode:a1,a2")
        return TwoModeCoherent(_complex(a1), _complex(a2))
    raise ValueError(f"unknown probe kind {kind!r}")


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{z.imag:+}i"


def format_probe(spec: ProbeSpec) -> str:
    if isinstance(spec, Coherent):
        return f"coherent:{_fmt_complex(spec.alpha)}"
    if isinstance(spec, Fock):
        return f"fock:{spec.n}"
    if isinstance(spec, VacuumDoped):
        return f"vacuumdoped:p={spec.p!r},alpha={_fmt_complex(spec.alpha)}"
    if isinstance(spec, ClassicalMix):
        if spec.modes != 1:
            return repr(spec)
        return "mix:" + ",".join(f"{w!r}@{_fmt_complex(a)}" for w, a in spec.components)
    if isinstance(spec, SqueezedVacuum):
        return f"sqvac:r={spec.r!r},phi={spec.phi!r}"
    if isinstance(spec, TwoModeCoherent):
        return f"twomode:{_fmt_complex(spec.alpha1)},{_fmt_complex(spec.alpha2)}"
    return repr(spec)
