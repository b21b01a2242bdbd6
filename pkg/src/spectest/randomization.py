"""Frequency-wise group permutations and the randomization tests built on them.

A permutation family assigns an independent uniform permutation of the
``q`` group labels to each frequency index ``0..floor(n/2)``; negative and
out-of-range indices resolve through ``pi_{-k} = pi_k`` and
``pi_{k+sn} = pi_k``.  The randomization statistic replaces the diagonal
periodogram block of group ``r`` at ``w_k`` by the block of group
``pi_k(r)`` before smoothing.

Monte Carlo draws are seeded one child generator per draw index, and are
processed in fixed-size chunks, so the output does not depend on the
number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from .errors import DegenerateScaleError, InputError
from .kernels import Bandwidth, Kernel, check_bandwidth, cross_validate_bandwidth, get_kernel, smooth, smoothing_weights
from .series import FrequencyGrid, SpectralMatrixField, TimeSeriesPanel, blocks, demean, periodogram
from .statistic import (
    CenteringEstimates,
    StatisticValue,
    TestKind,
    TestReport,
    _clamp,
    _h,
    _riemann,
    estimate_mu_hat,
    estimate_tau_hat_sq,
    trace_tensor,
)

__all__ = [
    "FrequencyPermutationFamily",
    "RandomizationDraw",
    "RandomizationConfig",
    "RandomizationSample",
    "sample_family",
    "draw_generator",
    "compute_tn_star",
    "estimate_mu_hat_star",
    "estimate_tau_hat_star_sq",
    "star_weights",
    "conditional_mean_tn_star",
    "monte_carlo_pvalue",
    "randomization_sample",
    "prepare_bandwidth",
    "run_randomization_test",
]

CHUNK = 32


@dataclass(frozen=True)
class FrequencyPermutationFamily:
    """Permutations ``pi_0 .. pi_{floor(n/2)}`` of ``0..q-1`` with symmetric periodic extension."""

    base: np.ndarray
    n: int

    def __post_init__(self):
        base = np.array(self.base, dtype=np.intp)
        n = int(self.n)
        if base.ndim != 2:
            raise InputError(f"base must be a 2-D array of permutations, got shape {base.shape}")
        if base.shape[0] != n // 2 + 1:
            raise InputError(f"need {n // 2 + 1} permutations for n={n}, got {base.shape[0]}")
        q = base.shape[1]
        if not np.array_equal(np.sort(base, axis=1), np.broadcast_to(np.arange(q), base.shape)):
            bad = int(np.argmax(np.any(np.sort(base, axis=1) != np.arange(q), axis=1)))
            raise InputError(f"base entry {bad} is not a permutation of 0..{q - 1}")
        base.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "n", n)

    @property
    def q(self) -> int:
        return self.base.shape[1]

    @classmethod
    def identity(cls, q: int, n: int) -> "FrequencyPermutationFamily":
        return cls(np.tile(np.arange(q), (n // 2 + 1, 1)), n)

    def lookup(self, k) -> np.ndarray:
        """Permutation at any integer frequency index ``k``."""
        grid = FrequencyGrid(self.n)
        return self.base[np.abs(grid.reduce(k))]

    def full(self) -> np.ndarray:
        """``(n, q)`` array of permutations in grid order."""
        return self.lookup(FrequencyGrid(self.n).indices)


def _seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        raise InputError("a seed is required for reproducible draws")
    return np.random.SeedSequence(int(seed))


def draw_generator(seed, b: int) -> np.random.Generator:
    """Child generator for draw ``b``: spawn key ``(b,)`` appended to the master seed."""
    ss = _seed_sequence(seed)
    child = np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (int(b),))
    return np.random.Generator(np.random.PCG64(child))


def _shuffle_rows(rng: np.random.Generator, m: int, q: int) -> np.ndarray:
    """``m`` independent uniform permutations of ``0..q-1`` (Durstenfeld shuffle, vectorized over rows)."""
    out = np.tile(np.arange(q, dtype=np.intp), (m, 1))
    rows = np.arange(m)
    for i in range(q - 1, 0, -1):
        j = rng.integers(0, i + 1, size=m)
        tmp = out[rows, j].copy()
        out[rows, j] = out[:, i]
        out[:, i] = tmp
    return out


def sample_family(q: int, n: int, rng_seed) -> FrequencyPermutationFamily:
    """Draw ``floor(n/2)+1`` independent uniform permutations of ``q`` labels.

    ``rng_seed`` is an integer, a ``SeedSequence`` or a ``Generator``.
    """
    if q < 2:
        raise InputError(f"need q >= 2 groups, got {q}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(_seed_sequence(rng_seed))
    return FrequencyPermutationFamily(_shuffle_rows(rng, n // 2 + 1, q), n)


# --------------------------------------------------------------------------
# randomization statistic


def _diag_inputs(pfield: SpectralMatrixField, p: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    n = pfield.n
    b = blocks(pfield, p, q)
    diag = np.ascontiguousarray(b[:, np.arange(q), np.arange(q)].reshape(n, q, p * p))
    return diag, diag.mean(axis=1)


def _tn_scale(h: float) -> float:
    # n h^{1/2} times the Riemann weight 2 pi / n
    return 2.0 * np.pi * math.sqrt(h)


@dataclass(frozen=True)
class RandomizationDraw:
    family: FrequencyPermutationFamily
    t_star: float
    mu_star_ref: float = float("nan")
    studentized: float | None = None

    def __post_init__(self):
        if not self.t_star >= 0:
            raise InputError(f"randomization statistic must be nonnegative, got {self.t_star}")


def compute_tn_star(
    pfield: SpectralMatrixField,
    family: FrequencyPermutationFamily,
    kernel: Kernel,
    h,
    p: int,
    q: int,
) -> RandomizationDraw:
    """Randomization statistic for one permutation family."""
    h = _h(h)
    n = pfield.n
    if family.n != n or family.q != q:
        raise InputError(f"family built for n={family.n}, q={family.q}; field has n={n}, q={q}")
    diag, pooled = _diag_inputs(pfield, p, q)
    w = smoothing_weights(kernel, h, n)
    raw = _backend.tn_star_batch(w, diag, pooled, family.full()[None])
    return RandomizationDraw(family, float(_tn_scale(h) * raw[0]))


def star_weights(q: int) -> np.ndarray:
    """Weights ``-1 + q d_ac d_bd + q/(q-1) (1-d_ac)(1-d_bd)`` indexed ``[a, b, c, d]``."""
    if q < 2:
        raise InputError(f"need q >= 2, got {q}")
    e = np.eye(q)
    dac = e[:, None, :, None]
    dbd = e[None, :, None, :]
    return -1.0 + q * dac * dbd + q / (q - 1) * (1 - dac) * (1 - dbd)


def estimate_mu_hat_star(smoothed: SpectralMatrixField, kernel: Kernel, p: int, q: int) -> float:
    """Centering of the randomization statistic.

    ``A_K int (1/q) sum_{a,b} (-1 + q d_ab) {|tr F_ab|^2 + tr(F_aa conj(F_bb)^T)}``.
    """
    b = blocks(smoothed, p, q)
    tr = np.trace(b, axis1=3, axis2=4)
    idx = np.arange(q)
    dd = b[:, idx, idx]
    cross = np.einsum("kaxy,kbxy->kab", dd, np.conj(dd)).real
    v = q * np.eye(q) - 1.0
    val = np.einsum("kab,ab->k", np.abs(tr) ** 2 + cross, v) / q
    return kernel.A_K * _riemann(val, smoothed.n)


def estimate_tau_hat_star_sq(smoothed: SpectralMatrixField, kernel: Kernel, p: int, q: int) -> float:
    """Variance of the randomization statistic, smoothed blocks plugged in everywhere.

    ``B_K int (1/q^2) sum w_abcd {tr(F_aa F_bb^H) conj(tr(F_cc F_dd^H)) + |tr(F_ac F_bd^H)|^2}``
    with ``w`` from :func:`star_weights`.  Clamped at zero with a warning.
    """
    g = trace_tensor(blocks(smoothed, p, q))  # g[k,a,b,c,d] = tr(F_ac F_bd^H)
    s = np.einsum("kabab->kab", g)  # tr(F_aa F_bb^H)
    w = star_weights(q)
    term = s[:, :, :, None, None] * np.conj(s)[:, None, None, :, :] + np.abs(g) ** 2
    val = np.einsum("kabcd,abcd->k", term, w).real / q**2
    return _clamp(kernel.B_K * _riemann(val, smoothed.n), "tau*^2")


def conditional_mean_tn_star(
    pfield: SpectralMatrixField,
    kernel: Kernel,
    h,
    p: int,
    q: int,
    include_antipodal: bool = True,
) -> float:
    """Exact mean of the randomization statistic over uniform permutation families.

    Only frequency pairs sharing a permutation (``|k1| = |k2|``) contribute,
    with label weight ``E[(1 - q d_{a,pi(r)})(1 - q d_{b,pi(r)})] = -1 + q d_ab``.
    ``include_antipodal=False`` keeps only ``k1 = k2``, dropping the
    ``k1 = -k2`` terms that vanish asymptotically.
    """
    h = _h(h)
    n = pfield.n
    diag, _ = _diag_inputs(pfield, p, q)
    w = smoothing_weights(kernel, h, n)
    idx = np.arange(n)
    W = w[(idx[:, None] - idx[None, :]) % n]  # W[j, k]
    v = q * np.eye(q) - 1.0

    def pair_term(pos1, pos2):
        m = np.einsum("kax,kbx,ab->k", diag[pos1], np.conj(diag[pos2]), v) / q
        c = np.einsum("jk,jk->k", W[:, pos1], W[:, pos2])
        return np.sum(c * m)

    total = pair_term(idx, idx)
    if include_antipodal:
        mirror = FrequencyGrid(n).mirror_positions()
        other = mirror != idx
        total = total + pair_term(idx[other], mirror[other])
    return float(_tn_scale(h) * total.real)


# --------------------------------------------------------------------------
# Monte Carlo test


def monte_carlo_pvalue(observed: float, draws: Sequence[float]) -> float:
    """Add-one p-value ``(1 + #{draws >= observed}) / (B + 1)``; ties count against rejection."""
    draws = np.asarray(draws, dtype=float)
    return (1.0 + np.count_nonzero(draws >= observed)) / (draws.size + 1.0)


def _chunk_tn_star(w, diag, pooled, q, n, seed, start, stop) -> np.ndarray:
    m = n // 2 + 1
    grid = FrequencyGrid(n)
    to_base = np.abs(grid.indices)
    perms = np.empty((stop - start, n, q), dtype=np.intp)
    for i, b in enumerate(range(start, stop)):
        base = _shuffle_rows(draw_generator(seed, b), m, q)
        perms[i] = base[to_base]
    return _backend.tn_star_batch(w, diag, pooled, perms)


def _draw_raw(w, diag, pooled, q, n, B, seed, workers) -> np.ndarray:
    bounds = [(s, min(s + CHUNK, B)) for s in range(0, B, CHUNK)]
    job = lambda se: _chunk_tn_star(w, diag, pooled, q, n, seed, *se)  # noqa: E731
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, bounds))
    else:
        parts = [job(se) for se in bounds]
    return np.concatenate(parts) if parts else np.empty(0)


@dataclass(frozen=True)
class RandomizationSample:
    """Observed statistic, plug-in estimates and ``B`` randomization draws for one panel."""

    t_n: float
    t_star: np.ndarray = field(repr=False)
    centering: CenteringEstimates
    h: float
    n: int

    def observed(self, kind: TestKind | str) -> float:
        kind = TestKind(kind)
        if kind is TestKind.UNCENTERED:
            return self.t_n
        c = self.t_n - self.centering.mu_hat / math.sqrt(self.h)
        if kind is TestKind.CENTERED:
            return c
        if kind is TestKind.STUDENTIZED:
            if not self.centering.tau_hat_sq > 0:
                raise DegenerateScaleError("tau_hat^2 is zero; studentized test undefined")
            return c / math.sqrt(self.centering.tau_hat_sq)
        raise InputError(f"{kind.value} is not a randomization test")

    def reference(self, kind: TestKind | str) -> np.ndarray:
        kind = TestKind(kind)
        if kind is TestKind.UNCENTERED:
            return self.t_star
        c = self.t_star - self.centering.mu_hat_star / math.sqrt(self.h)
        if kind is TestKind.CENTERED:
            return c
        if kind is TestKind.STUDENTIZED:
            if not self.centering.tau_hat_star_sq > 0:
                raise DegenerateScaleError("tau_hat*^2 is zero; studentized test undefined")
            return c / math.sqrt(self.centering.tau_hat_star_sq)
        raise InputError(f"{kind.value} is not a randomization test")

    def decide(self, kind, alpha: float, literal_rule: bool = False) -> tuple[float, bool]:
        """``(p-value, reject)``; with ``literal_rule`` the value is the fraction of draws
        strictly below the observed statistic and rejection means that fraction exceeds ``alpha``."""
        if not 0.0 < alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {alpha}")
        obs, ref = self.observed(kind), self.reference(kind)
        if literal_rule:
            frac = float(np.mean(obs > ref))
            return frac, frac > alpha
        pval = monte_carlo_pvalue(obs, ref)
        return pval, pval <= alpha


def randomization_sample(
    pfield: SpectralMatrixField,
    kernel: Kernel,
    h,
    p: int,
    q: int,
    B: int,
    seed,
    workers: int = 1,
    tau_plugin: str = "pooled",
) -> RandomizationSample:
    """Compute the observed statistic, all plug-in estimates and ``B`` draws.

    The observed statistic goes through the same compiled routine as the
    draws (with identity permutations), so an identity draw reproduces it
    bit for bit.
    """
    if B < 1:
        raise InputError(f"B must be positive, got {B}")
    h = _h(h)
    n = pfield.n
    diag, pooled = _diag_inputs(pfield, p, q)
    w = smoothing_weights(kernel, h, n)
    ident = np.broadcast_to(np.arange(q, dtype=np.intp), (1, n, q)).copy()
    t_n = float(_tn_scale(h) * _backend.tn_star_batch(w, diag, pooled, ident)[0])
    smoothed = smooth(pfield, kernel, h)
    cent = CenteringEstimates(
        mu_hat=estimate_mu_hat(smoothed, kernel, p, q),
        tau_hat_sq=estimate_tau_hat_sq(smoothed, kernel, p, q, tau_plugin),
        mu_hat_star=estimate_mu_hat_star(smoothed, kernel, p, q),
        tau_hat_star_sq=estimate_tau_hat_star_sq(smoothed, kernel, p, q),
    )
    t_star = _tn_scale(h) * _draw_raw(w, diag, pooled, q, n, B, seed, workers)
    t_star.setflags(write=False)
    return RandomizationSample(t_n, t_star, cent, h, n)


@dataclass(frozen=True)
class RandomizationConfig:
    """Settings for :func:`run_randomization_test`.

    Give ``bandwidth`` for a fixed ``h``; otherwise ``h`` is chosen by
    cross-validation and multiplied by ``cv_mult``.
    """

    kind: str = "studentized"
    B: int = 199
    alpha: float = 0.05
    seed: int = 0
    kernel: str = "bartlett-priestley"
    bandwidth: float | None = None
    cv_mult: float = 1.0
    cv_candidates: tuple | None = None
    workers: int = 1
    demean: bool = True
    literal_rule: bool = False
    tau_plugin: str = "pooled"

    def __post_init__(self):
        kind = TestKind(self.kind)
        if kind is TestKind.ASYMPTOTIC:
            raise InputError("use asymptotic_test for the asymptotic test")
        if self.B < 19:
            raise InputError(f"B must be at least 19 to resolve alpha = 0.05, got {self.B}")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.workers < 1:
            raise InputError(f"workers must be positive, got {self.workers}")


def prepare_bandwidth(
    panel: TimeSeriesPanel,
    kernel: Kernel,
    bandwidth: float | None = None,
    cv_mult: float = 1.0,
    candidates=None,
) -> Bandwidth:
    """Fixed bandwidth if given, else the cross-validated one scaled by ``cv_mult``."""
    if bandwidth is not None:
        bw = Bandwidth(float(bandwidth))
    else:
        bw = cross_validate_bandwidth(panel, kernel, candidates).scaled(cv_mult)
    check_bandwidth(bw.h, panel.n)
    return bw


def run_randomization_test(panel: TimeSeriesPanel, config: RandomizationConfig) -> TestReport:
    """Monte Carlo randomization test of equal diagonal spectral blocks."""
    kernel = get_kernel(config.kernel)
    if config.demean:
        panel = demean(panel)
    bw = prepare_bandwidth(panel, kernel, config.bandwidth, config.cv_mult, config.cv_candidates)
    pfield = periodogram(panel)
    sample = randomization_sample(
        pfield, kernel, bw.h, panel.p, panel.q, config.B, config.seed, config.workers, config.tau_plugin
    )
    kind = TestKind(config.kind)
    value, reject = sample.decide(kind, config.alpha, config.literal_rule)
    meta = {
        "p": panel.p,
        "q": panel.q,
        "seed": config.seed,
        "B": config.B,
        "bandwidth": bw.describe(),
        "kernel": kernel.name,
        "rule": "literal" if config.literal_rule else "pvalue",
        "backend": _backend.NAME,
    }
    stat = StatisticValue(sample.t_n, panel.n, bw.h, panel.n)
    return TestReport(stat, sample.centering, kind, config.alpha, value, bool(reject), sample.observed(kind), meta)
