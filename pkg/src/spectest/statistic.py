"""L2 statistic for equality of diagonal spectral blocks, its plug-in centering
and scale, the asymptotic normal test, and two diagnostics (exactness
condition and detection shift).

All frequency integrals are Riemann sums over the ``n`` Fourier frequencies
with weight ``2*pi/n``.  Group indices are 0-based.
"""
from __future__ import annotations

import enum
import math
import statistics
import warnings
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DegenerateScaleError, InputError, NegativeVarianceWarning
from .kernels import Bandwidth, Kernel
from .series import SpectralMatrixField, blocks

__all__ = [
    "StatisticValue",
    "CenteringEstimates",
    "TestKind",
    "TestReport",
    "compute_tn",
    "trace_tensor",
    "estimate_mu_hat",
    "estimate_tau_hat_sq",
    "normal_quantile",
    "standardize",
    "asymptotic_test",
    "exactness_condition",
    "gamma_matrix",
    "detection_shift",
]


def _h(h) -> float:
    h = h.h if isinstance(h, Bandwidth) else float(h)
    if not h > 0:
        raise InputError(f"bandwidth must be positive, got {h}")
    return h


def _riemann(values: np.ndarray, n: int) -> float:
    return float(2.0 * np.pi / n * np.sum(values))


def _check_field(field_: SpectralMatrixField, p: int, q: int) -> None:
    if field_.matrices.shape[0] != field_.grid.n:
        raise InputError("field must be evaluated on its full Fourier grid")
    if q < 2:
        raise InputError(f"need at least two groups, got q={q}")


@dataclass(frozen=True)
class StatisticValue:
    """Observed ``T_n`` with the sample size, bandwidth and grid it was computed on."""

    t_n: float
    n: int
    h: float
    grid_size: int

    def __post_init__(self):
        if not np.isfinite(self.t_n) or self.t_n < 0:
            raise InputError(f"statistic must be finite and nonnegative, got {self.t_n}")


@dataclass(frozen=True)
class CenteringEstimates:
    """Plug-in centering and scale estimates; starred values belong to the randomization statistic."""

    mu_hat: float = float("nan")
    tau_hat_sq: float = float("nan")
    mu_hat_star: float = float("nan")
    tau_hat_star_sq: float = float("nan")

    def __post_init__(self):
        for name in ("tau_hat_sq", "tau_hat_star_sq"):
            v = getattr(self, name)
            if v < 0:
                raise InputError(f"{name} must be nonnegative, got {v}")


class TestKind(str, enum.Enum):
    __test__ = False

    ASYMPTOTIC = "asymptotic"
    UNCENTERED = "uncentered"
    CENTERED = "centered"
    STUDENTIZED = "studentized"


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v in ("None", ""):
        return None
    return v


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test.

    ``critical_value_or_pvalue`` holds the normal quantile for the asymptotic
    test and the Monte Carlo p-value for randomization tests (the rejection
    fraction when the literal rule is requested).  ``observed`` is
    the quantity compared against it.
    """

    __test__ = False

    statistic: StatisticValue
    centering: CenteringEstimates
    test_kind: TestKind
    alpha: float
    critical_value_or_pvalue: float
    reject: bool
    observed: float = float("nan")
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "test_kind", TestKind(self.test_kind))

    @property
    def decision(self) -> str:
        return "reject" if self.reject else "accept"

    def as_dict(self) -> dict[str, Any]:
        md = dict(self.metadata)
        out = {
            "kind": self.test_kind.value,
            "statistic": self.statistic.t_n,
            "observed": self.observed,
            "mu_hat": self.centering.mu_hat,
            "tau_hat_sq": self.centering.tau_hat_sq,
            "mu_hat_star": self.centering.mu_hat_star,
            "tau_hat_star_sq": self.centering.tau_hat_star_sq,
            "critical_value" if self.test_kind is TestKind.ASYMPTOTIC else "pvalue": self.critical_value_or_pvalue,
            "decision": self.decision,
            "alpha": self.alpha,
            "h": self.statistic.h,
            "n": self.statistic.n,
            "p": md.pop("p", None),
            "q": md.pop("q", None),
            "seed": md.pop("seed", None),
            "B": md.pop("B", None),
        }
        out.update(md)
        return out

    def to_text(self) -> str:
        """One ``key=value`` pair per line."""
        return "".join(f"{k}={_fmt(v)}\n" for k, v in self.as_dict().items())

    @classmethod
    def from_text(cls, text: str) -> "TestReport":
        raw = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"line {lineno}: expected key=value, got {line!r}")
            k, v = line.split("=", 1)
            raw[k.strip()] = v.strip()
        try:
            kind = TestKind(raw.pop("kind"))
            n = int(raw.pop("n"))
            stat = StatisticValue(float(raw.pop("statistic")), n, float(raw.pop("h")), n)
            cent = CenteringEstimates(*(float(raw.pop(k)) for k in
                                        ("mu_hat", "tau_hat_sq", "mu_hat_star", "tau_hat_star_sq")))
            cv = float(raw.pop("critical_value" if kind is TestKind.ASYMPTOTIC else "pvalue"))
            decision = raw.pop("decision")
            alpha = float(raw.pop("alpha"))
            observed = float(raw.pop("observed"))
        except KeyError as exc:
            raise InputError(f"report is missing key {exc.args[0]!r}") from None
        if decision not in ("reject", "accept"):
            raise InputError(f"unknown decision {decision!r}")
        md = {k: _parse(v) for k, v in raw.items()}
        return cls(stat, cent, kind, alpha, cv, decision == "reject", observed, md)


# --------------------------------------------------------------------------
# statistic and plug-in estimates


def compute_tn(smoothed: SpectralMatrixField, p: int, q: int, h) -> StatisticValue:
    """``T_n = n h^{1/2} int sum_r ||F_rr - F~||_F^2``, with ``F~`` the mean diagonal block."""
    _check_field(smoothed, p, q)
    h = _h(h)
    n = smoothed.n
    b = blocks(smoothed, p, q)
    diag = b[:, np.arange(q), np.arange(q)]
    dev = diag - diag.mean(axis=1, keepdims=True)
    per_freq = np.sum(dev.real**2 + dev.imag**2, axis=(1, 2, 3))
    t = n * math.sqrt(h) * _riemann(per_freq, n)
    return StatisticValue(t, n, h, n)


def trace_tensor(b: np.ndarray) -> np.ndarray:
    """``G[k, a, b, c, d] = tr(F_ac conj(F_bd)^T)`` from blocks of shape ``(n, q, q, p, p)``."""
    return np.einsum("kacxy,kbdxy->kabcd", b, np.conj(b))


def estimate_mu_hat(smoothed: SpectralMatrixField, kernel: Kernel, p: int, q: int) -> float:
    """Centering ``A_K int [(q-1)|tr F~|^2 - (1/q) sum_{a != b} |tr F_ab|^2]``."""
    _check_field(smoothed, p, q)
    b = blocks(smoothed, p, q)
    tr = np.trace(b, axis1=3, axis2=4)  # (n, q, q)
    pooled = np.mean(np.diagonal(tr, axis1=1, axis2=2), axis=1)
    off = ~np.eye(q, dtype=bool)
    val = (q - 1) * np.abs(pooled) ** 2 - np.sum(np.abs(tr[:, off]) ** 2, axis=1) / q
    return kernel.A_K * _riemann(val, smoothed.n)


def _clamp(value: float, name: str) -> float:
    if value < 0:
        warnings.warn(f"{name} estimate {value:.6g} is negative; clamped to 0", NegativeVarianceWarning, 3)
        return 0.0
    return value


def estimate_tau_hat_sq(
    smoothed: SpectralMatrixField, kernel: Kernel, p: int, q: int, plugin: str = "pooled"
) -> float:
    """Variance ``B_K int (1/q^2) sum (-1+q d_ab)(-1+q d_cd) |tr(F_ac conj(F_bd)^T)|^2``.

    ``plugin="pooled"`` replaces every diagonal block by the pooled estimate
    (the form that is consistent under the null); ``plugin="raw"`` uses the
    smoothed blocks as they are.  Negative values are clamped to zero with a
    :class:`NegativeVarianceWarning`.
    """
    _check_field(smoothed, p, q)
    if plugin not in ("pooled", "raw"):
        raise InputError(f"plugin must be 'pooled' or 'raw', got {plugin!r}")
    b = np.array(blocks(smoothed, p, q))
    if plugin == "pooled":
        idx = np.arange(q)
        b[:, idx, idx] = b[:, idx, idx].mean(axis=1, keepdims=True)
    g = np.abs(trace_tensor(b)) ** 2
    v = q * np.eye(q) - 1.0
    weight = v[:, :, None, None] * v[None, None, :, :]  # (a, b, c, d)
    val = np.einsum("kabcd,abcd->k", g, weight) / q**2
    return _clamp(kernel.B_K * _riemann(val, smoothed.n), "tau^2")


# --------------------------------------------------------------------------
# asymptotic test


def normal_quantile(prob: float) -> float:
    """Standard normal quantile (Wichura's AS241 rational approximation, via the stdlib)."""
    if not 0.0 < prob < 1.0:
        raise InputError(f"probability must lie in (0, 1), got {prob}")
    return statistics.NormalDist().inv_cdf(prob)


def standardize(t_n: float, mu: float, tau_sq: float, h: float) -> float:
    """``(T - h^{-1/2} mu) / tau``."""
    if not tau_sq > 0:
        raise DegenerateScaleError("variance estimate is zero; cannot studentize")
    return (t_n - mu / math.sqrt(h)) / math.sqrt(tau_sq)


def asymptotic_test(
    statistic: StatisticValue,
    centering: CenteringEstimates,
    alpha: float,
    metadata: dict | None = None,
) -> TestReport:
    """Reject when ``(T_n - h^{-1/2} mu_hat)/tau_hat`` exceeds ``u_{1-alpha}``."""
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    z = standardize(statistic.t_n, centering.mu_hat, centering.tau_hat_sq, statistic.h)
    u = normal_quantile(1.0 - alpha)
    return TestReport(statistic, centering, TestKind.ASYMPTOTIC, alpha, u, bool(z > u), z, dict(metadata or {}))


# --------------------------------------------------------------------------
# diagnostics


def exactness_condition(field_: SpectralMatrixField, p: int, q: int) -> tuple[np.ndarray, float]:
    """Pointwise value of the three-sum exactness expression and its L1 integral.

    The randomization tests are asymptotically exact precisely when the
    value vanishes at every frequency.  Returns ``(values, aggregate)`` with
    ``aggregate = (2 pi/n) sum_k |values[k]|``.
    """
    _check_field(field_, p, q)
    g = np.abs(trace_tensor(blocks(field_, p, q))) ** 2  # g[k, a, b, c, d]
    eye = np.eye(q, dtype=bool)
    ne = ~eye
    # sum_{a != c} |tr(F_ac F_ac^H)|^2
    s1 = np.einsum("kaacc->kac", g)[:, ne].sum(axis=1)
    # sum over distinct (a, c, d) of |tr(F_ac F_ad^H)|^2
    distinct3 = ne[:, :, None] & ne[:, None, :] & ne[None, :, :]
    s2 = np.einsum("kaacd->kacd", g)[:, distinct3].sum(axis=1)
    # a != c, b != d, a != b, c != d  with g indexed (a, b, c, d)
    mask4 = ne[:, None, :, None] & ne[None, :, None, :] & ne[:, :, None, None] & ne[None, None, :, :]
    s3 = g[:, mask4].sum(axis=1)
    values = ((q - 1) ** 3 - 1) * s1 - 2 * ((q - 1) ** 2 + 1) * s2 + (q - 2) * s3
    return values, _riemann(np.abs(values), field_.n)


def gamma_matrix(p: int, q: int) -> np.ndarray:
    """The ``d^2 x d^2`` local-power matrix, built literally from its case rule.

    Row ``i + j*d`` (0-based, column-stacking ``vec``) is nonzero only when
    ``(i, j)`` lies in a diagonal block.  It carries ``(q-1)/q`` on the
    diagonal and ``-1/q`` at columns ``k + l*d`` with
    ``|i-k| = |j-l|`` a positive multiple of ``p``.
    """
    if p < 1 or q < 2:
        raise InputError(f"need p >= 1 and q >= 2, got p={p}, q={q}")
    d = p * q
    i, j = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    i, j = i.ravel(order="F"), j.ravel(order="F")  # position r = i + j*d
    in_xi = (i // p) == (j // p)
    di = np.abs(i[:, None] - i[None, :])
    dj = np.abs(j[:, None] - j[None, :])
    gamma = np.zeros((d * d, d * d))
    gamma[np.diag_indices(d * d)] = (q - 1) / q
    coupled = (di == dj) & (di > 0) & (di % p == 0)
    gamma[coupled] = -1.0 / q
    gamma[~in_xi, :] = 0.0
    return gamma


def detection_shift(g, p: int, q: int, atol: float = 1e-10) -> float:
    """Quadratic form ``int vec(conj g)^T Gamma vec(g)`` for a Hermitian perturbation ``g``.

    ``g`` is a :class:`SpectralMatrixField` or an ``(n, d, d)`` array on the
    Fourier grid.  Returns the real part of the Riemann sum.
    """
    m = g.matrices if isinstance(g, SpectralMatrixField) else np.asarray(g, dtype=complex)
    if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[1] != p * q:
        raise InputError(f"g must have shape (n, {p * q}, {p * q}), got {m.shape}")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if np.max(np.abs(m - np.conj(np.swapaxes(m, 1, 2))), initial=0.0) > atol * scale:
        raise InputError("g is not Hermitian at every frequency")
    gamma = gamma_matrix(p, q)
    vec = np.swapaxes(m, 1, 2).reshape(m.shape[0], -1)  # column stacking
    form = np.einsum("kr,rs,ks->k", np.conj(vec), gamma, vec)
    return _riemann(form.real, m.shape[0])
