"""Seeded bivariate data-generating processes and the named presets of the simulation study.

Processes
---------
``VAR1``    X_t = A X_{t-1} + e_t,           e_t ~ (0, Sigma)
``VMA1``    X_t = B e_{t-1} + e_t,           e_t ~ (0, Sigma)
``GARCH11`` X_ti = s_ti e_ti, s_ti^2 = omega_i + a_i X_{t-1,i}^2 + b_i s_{t-1,i}^2
``TAR1``    X_ti = a1_i X_{t-1,i} + e_ti if X_{t-1,i} < 0 else a2_i X_{t-1,i} + e_ti
``RCA1``    X_ti = a_ti X_{t-1,i} + e_ti,    a_ti ~ N(0, sigma_i^2)

Correlated innovations are ``L z`` with ``L`` the lower Cholesky factor of
``Sigma`` and ``z`` i.i.d. standardized draws of the chosen law.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .series import TimeSeriesPanel

__all__ = [
    "Innovation",
    "InnovationSampler",
    "VAR1",
    "VMA1",
    "GARCH11",
    "TAR1",
    "RCA1",
    "ModelSpec",
    "preset",
    "PRESET_NAMES",
    "simulate",
]


class Innovation(str, enum.Enum):
    GAUSSIAN = "gaussian"
    LOGISTIC = "logistic"
    DOUBLE_EXPONENTIAL = "double-exponential"

    @classmethod
    def parse(cls, name) -> "Innovation":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("_", "-")
        aliases = {"gauss": "gaussian", "normal": "gaussian", "laplace": "double-exponential", "dexp": "double-exponential"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise InputError(f"unknown innovation law {name!r}; choose from {[m.value for m in cls]}") from None


@dataclass(frozen=True)
class InnovationSampler:
    """I.i.d. draws from a named law, optionally scaled to unit variance."""

    law: Innovation = Innovation.GAUSSIAN
    standardized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "law", Innovation.parse(self.law))

    @property
    def raw_sd(self) -> float:
        return {Innovation.GAUSSIAN: 1.0,
                Innovation.LOGISTIC: np.pi / np.sqrt(3.0),
                Innovation.DOUBLE_EXPONENTIAL: np.sqrt(2.0)}[self.law]

    def __call__(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.law is Innovation.GAUSSIAN:
            z = rng.standard_normal(size)
        elif self.law is Innovation.LOGISTIC:
            z = rng.logistic(0.0, 1.0, size)
        else:
            z = rng.laplace(0.0, 1.0, size)
        return z / self.raw_sd if self.standardized else z


def _matrix(a, name: str) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"{name} must be a square matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


def _cholesky(sigma: np.ndarray) -> np.ndarray:
    if not np.allclose(sigma, sigma.T, atol=1e-12):
        raise InputError("Sigma must be symmetric")
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise InputError("Sigma must be positive definite") from None


def _vector(v, name: str, d: int = 2) -> np.ndarray:
    v = np.broadcast_to(np.asarray(v, dtype=float), (d,)).copy()
    v.setflags(write=False)
    return v


@dataclass(frozen=True)
class VAR1:
    A: np.ndarray
    Sigma: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        A, S = _matrix(self.A, "A"), _matrix(self.Sigma, "Sigma")
        if A.shape != S.shape:
            raise InputError("A and Sigma must have the same shape")
        rho = max(abs(np.linalg.eigvals(A)))
        if rho >= 1:
            raise InputError(f"VAR(1) is not stationary: spectral radius {rho:.4g} >= 1")
        _cholesky(S)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Sigma", S)

    @property
    def d(self) -> int:
        return self.A.shape[0]

    def generate(self, rng, steps: int, sampler: InnovationSampler) -> np.ndarray:
        e = sampler(rng, (steps, self.d)) @ _cholesky(self.Sigma).T
        x = np.zeros((steps, self.d))
        prev = np.zeros(self.d)
        for t in range(steps):
            prev = self.A @ prev + e[t]
            x[t] = prev
        return x


@dataclass(frozen=True)
class VMA1:
    B: np.ndarray
    Sigma: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        B, S = _matrix(self.B, "B"), _matrix(self.Sigma, "Sigma")
        if B.shape != S.shape:
            raise InputError("B and Sigma must have the same shape")
        _cholesky(S)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Sigma", S)

    @property
    def d(self) -> int:
        return self.B.shape[0]

    def generate(self, rng, steps: int, sampler: InnovationSampler) -> np.ndarray:
        # one presample innovation makes the first output exact
        e = sampler(rng, (steps + 1, self.d)) @ _cholesky(self.Sigma).T
        return e[1:] + e[:-1] @ self.B.T


@dataclass(frozen=True)
class GARCH11:
    omega: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        om, a, b = (_vector(getattr(self, k), k) for k in ("omega", "a", "b"))
        if np.any(om <= 0):
            raise InputError("GARCH omega must be positive")
        if np.any(a < 0) or np.any(b < 0):
            raise InputError("GARCH a and b must be nonnegative")
        if np.any(a + b >= 1):
            raise InputError("GARCH needs a + b < 1 in every component")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def d(self) -> int:
        return self.omega.shape[0]

    @property
    def stationary_variance(self) -> np.ndarray:
        return self.omega / (1.0 - self.a - self.b)

    def generate(self, rng, steps: int, sampler: InnovationSampler) -> np.ndarray:
        e = sampler(rng, (steps, self.d))
        x = np.zeros((steps, self.d))
        s2 = self.stationary_variance.copy()
        prev = np.zeros(self.d)
        for t in range(steps):
            s2 = self.omega + self.a * prev**2 + self.b * s2
            prev = np.sqrt(s2) * e[t]
            x[t] = prev
        return x


@dataclass(frozen=True)
class TAR1:
    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        a1, a2 = _vector(self.a1, "a1"), _vector(self.a2, "a2")
        if np.any(np.abs(a1) >= 1) or np.any(np.abs(a2) >= 1):
            raise InputError("TAR coefficients must lie in (-1, 1)")
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @property
    def d(self) -> int:
        return self.a1.shape[0]

    def generate(self, rng, steps: int, sampler: InnovationSampler) -> np.ndarray:
        e = sampler(rng, (steps, self.d))
        x = np.zeros((steps, self.d))
        prev = np.zeros(self.d)
        for t in range(steps):
            prev = np.where(prev < 0, self.a1, self.a2) * prev + e[t]
            x[t] = prev
        return x


@dataclass(frozen=True)
class RCA1:
    sigma: np.ndarray

    def __post_init__(self):
        s = _vector(self.sigma, "sigma")
        if np.any(s < 0) or np.any(s >= 1):
            raise InputError("RCA coefficient sd must lie in [0, 1)")
        object.__setattr__(self, "sigma", s)

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    def generate(self, rng, steps: int, sampler: InnovationSampler) -> np.ndarray:
        e = sampler(rng, (steps, self.d))
        coef = rng.standard_normal((steps, self.d)) * self.sigma
        x = np.zeros((steps, self.d))
        prev = np.zeros(self.d)
        for t in range(steps):
            prev = coef[t] * prev + e[t]
            x[t] = prev
        return x


_PROCESSES = (VAR1, VMA1, GARCH11, TAR1, RCA1)


@dataclass(frozen=True)
class ModelSpec:
    """A process, its innovation law and the burn-in discarded before output."""

    name: str
    process: VAR1 | VMA1 | GARCH11 | TAR1 | RCA1
    innovation: Innovation = Innovation.GAUSSIAN
    burn_in: int = 500

    def __post_init__(self):
        if not isinstance(self.process, _PROCESSES):
            raise InputError(f"unsupported process type {type(self.process).__name__}")
        if self.burn_in < 0:
            raise InputError(f"burn_in must be nonnegative, got {self.burn_in}")
        object.__setattr__(self, "innovation", Innovation.parse(self.innovation))

    @property
    def family(self) -> str:
        return type(self.process).__name__

    @property
    def d(self) -> int:
        return self.process.d


_SIGMA2 = [[1.0, 0.5], [0.5, 1.0]]
_AR = {1: (0.1, 0.1), 2: (0.5, 0.5), 3: (0.9, 0.9), 4: (0.9, 0.8), 5: (0.9, 0.7), 6: (0.9, 0.6)}
_MA = {1: [[0.1, 0.5], [0.5, 0.1]], 2: [[0.5, 0.5], [0.5, 0.5]], 3: [[0.9, 0.5], [0.5, 0.9]],
       4: [[0.5, 0.5], [0.5, 0.7]], 5: [[0.5, 0.5], [0.5, 0.8]], 6: [[0.5, 0.5], [0.5, 0.9]]}
_GARCH_B = {1: (0.2, 0.2), 2: (0.3, 0.3), 3: (0.4, 0.4), 4: (0.2, 0.3), 5: (0.2, 0.4), 6: (0.2, 0.5)}
_TAR = {1: ((-0.2, 0.1), (-0.2, 0.1)), 2: ((-0.3, 0.2), (-0.3, 0.2)), 3: ((-0.4, 0.3), (-0.4, 0.3)),
        4: ((-0.2, 0.1), (-0.3, 0.2)), 5: ((-0.2, 0.1), (-0.4, 0.3)), 6: ((-0.2, 0.1), (-0.5, 0.4))}
_RCA = {1: 0.1, 2: 0.2, 3: 0.3}

PRESET_NAMES = tuple(
    [f"AR{i}" for i in _AR] + [f"MA{i}" for i in _MA] + [f"GARCH{i}" for i in _GARCH_B]
    + [f"TAR{i}" for i in _TAR] + [f"RCA{i}" for i in _RCA]
)


def preset(name: str, innovation="gaussian", burn_in: int = 500) -> ModelSpec:
    """Named model of the simulation study, e.g. ``"AR3"``, ``"MA1"``, ``"GARCH4"``."""
    m = re.fullmatch(r"(AR|MA|GARCH|TAR|RCA)(\d+)", str(name).strip().upper())
    if not m or m.group(0) not in PRESET_NAMES:
        raise InputError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    fam, i = m.group(1), int(m.group(2))
    if fam == "AR":
        proc = VAR1(np.diag(_AR[i]), np.eye(2))
    elif fam == "MA":
        proc = VMA1(_MA[i], _SIGMA2)
    elif fam == "GARCH":
        proc = GARCH11(0.01, 0.1, _GARCH_B[i])
    elif fam == "TAR":
        (c1, d1), (c2, d2) = _TAR[i]
        proc = TAR1((c1, c2), (d1, d2))
    else:
        proc = RCA1(_RCA[i])
    return ModelSpec(m.group(0), proc, Innovation.parse(innovation), burn_in)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.default_rng(int(seed))


def simulate(spec: ModelSpec, n: int, seed) -> TimeSeriesPanel:
    """Generate ``burn_in + n`` steps, drop the burn-in and return a ``p=1``, ``q=d`` panel."""
    if n < 4:
        raise InputError(f"need n >= 4, got {n}")
    sampler = InnovationSampler(spec.innovation)
    x = spec.process.generate(_rng(seed), spec.burn_in + int(n), sampler)[spec.burn_in:]
    if isinstance(spec.process, TAR1):
        x = x - x.mean(axis=0)
    return TimeSeriesPanel(x, 1, spec.d)
