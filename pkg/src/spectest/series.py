"""Raw series handling: panels, Fourier grid, DFT, periodogram matrices and blocks.

Conventions
-----------
* A panel holds ``n`` observations of a ``d = p*q`` dimensional real series,
  rows are time points ``t = 1..n``.  Group ``k`` (0-based) occupies the
  columns ``k*p .. (k+1)*p - 1``.
* Fourier frequencies are stored in ascending index order
  ``k = -floor((n-1)/2) .. floor(n/2)``, ``omega_k = 2*pi*k/n``.  Any other
  integer index is reduced modulo ``n`` (2*pi periodic extension).
* Spectral fields are arrays of shape ``(n, d, d)`` aligned with that grid.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError

__all__ = [
    "TimeSeriesPanel",
    "FrequencyGrid",
    "FieldKind",
    "SpectralMatrixField",
    "demean",
    "fourier_frequencies",
    "dft",
    "periodogram",
    "block",
    "blocks",
    "pooled_diagonal",
    "read_csv",
    "write_csv",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeSeriesPanel:
    """``n`` observations of a ``p*q``-variate real series split into ``q`` groups."""

    data: np.ndarray
    p: int = 1
    q: int = 2

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise InputError(f"panel data must be 2-D (n, d), got shape {data.shape}")
        p, q = int(self.p), int(self.q)
        if p < 1:
            raise InputError(f"block dimension p must be positive, got {p}")
        if q < 1:
            raise InputError(f"number of groups q must be positive, got {q}")
        n, d = data.shape
        if d != p * q:
            raise InputError(f"panel has d={d} columns but p*q = {p}*{q} = {p * q}")
        if n < 4:
            raise InputError(f"need at least 4 observations, got n={n}")
        if not np.all(np.isfinite(data)):
            bad = np.argwhere(~np.isfinite(data))[0]
            raise InputError(f"non-finite value at row {bad[0]}, column {bad[1]}")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def group(self, k: int) -> np.ndarray:
        """Columns of group ``k`` (0-based) as an ``(n, p)`` array."""
        if not 0 <= k < self.q:
            raise InputError(f"group index {k} out of range 0..{self.q - 1}")
        return self.data[:, k * self.p:(k + 1) * self.p]

    def scaled(self, c: float) -> "TimeSeriesPanel":
        return TimeSeriesPanel(c * self.data, self.p, self.q)

    def permute_groups(self, order) -> "TimeSeriesPanel":
        """Panel with column blocks rearranged so new group ``i`` is old group ``order[i]``."""
        order = list(order)
        if sorted(order) != list(range(self.q)):
            raise InputError(f"{order} is not a permutation of 0..{self.q - 1}")
        cols = np.concatenate([np.arange(k * self.p, (k + 1) * self.p) for k in order])
        return TimeSeriesPanel(self.data[:, cols], self.p, self.q)


def demean(panel: TimeSeriesPanel) -> TimeSeriesPanel:
    """Subtract the sample mean of every column."""
    x = panel.data - panel.data.mean(axis=0)
    return TimeSeriesPanel(x, panel.p, panel.q)


@dataclass(frozen=True)
class FrequencyGrid:
    """Fourier frequencies ``2*pi*k/n`` for ``k = -floor((n-1)/2) .. floor(n/2)``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise InputError(f"Fourier grid needs integer n >= 4, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def kmin(self) -> int:
        return -((self.n - 1) // 2)

    @property
    def kmax(self) -> int:
        return self.n // 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.kmin, self.kmax + 1)

    @property
    def values(self) -> np.ndarray:
        return 2.0 * np.pi * self.indices / self.n

    def __len__(self) -> int:
        return self.n

    def position(self, k):
        """Array position of frequency index ``k`` after reduction modulo ``n``."""
        return np.mod(np.asarray(k) - self.kmin, self.n)

    def reduce(self, k):
        """Representative of ``k`` in ``kmin..kmax``."""
        return self.position(k) + self.kmin

    def mirror_positions(self) -> np.ndarray:
        """Position of ``-k`` for every grid position ``k``."""
        return self.position(-self.indices)


def fourier_frequencies(n: int) -> FrequencyGrid:
    return FrequencyGrid(n)


class FieldKind(enum.Enum):
    PERIODOGRAM = "periodogram"
    SMOOTHED = "smoothed"
    POOLED = "pooled"


@dataclass(frozen=True)
class SpectralMatrixField:
    """One complex Hermitian matrix per grid frequency."""

    grid: FrequencyGrid
    matrices: np.ndarray
    kind: FieldKind = FieldKind.SMOOTHED

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise InputError(f"matrices must have shape (n, d, d), got {m.shape}")
        if m.shape[0] != len(self.grid):
            raise InputError(f"{m.shape[0]} matrices for a grid of {len(self.grid)} frequencies")
        object.__setattr__(self, "matrices", _frozen(m))

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    @property
    def n(self) -> int:
        return self.grid.n

    def at(self, k) -> np.ndarray:
        """Matrix at frequency index ``k`` (any integer, periodic extension)."""
        return self.matrices[self.grid.position(k)]

    def diagonal(self) -> np.ndarray:
        """Real diagonal entries, shape ``(n, d)``."""
        return np.einsum("kii->ki", self.matrices).real

    def hermitian_error(self) -> float:
        m = self.matrices
        return float(np.max(np.abs(m - np.conj(np.swapaxes(m, 1, 2)))))

    def conjugate_symmetry_error(self) -> float:
        """Max deviation from ``M(-w) = conj(M(w))`` over grid pairs inside the grid."""
        g = self.grid
        inside = (-g.indices >= g.kmin) & (-g.indices <= g.kmax)
        pos = g.position(-g.indices[inside])
        return float(np.max(np.abs(self.matrices[pos] - np.conj(self.matrices[inside]))))

    def check(self, atol: float = 1e-10) -> None:
        """Raise ``InputError`` if Hermitian or conjugate-symmetry invariants fail."""
        scale = max(1.0, float(np.max(np.abs(self.matrices))))
        if self.hermitian_error() > atol * scale:
            raise InputError("field is not Hermitian")
        if self.conjugate_symmetry_error() > atol * scale:
            raise InputError("field violates M(-w) = conj(M(w))")


def dft(panel: TimeSeriesPanel, grid: FrequencyGrid | None = None) -> np.ndarray:
    r"""d-variate DFT ``J(w_k) = (2 pi n)^{-1/2} sum_{t=1}^n X_t exp(-i t w_k)``.

    Evaluated with an FFT; the extra factor ``exp(-i w_k)`` accounts for time
    starting at ``t = 1``.  Returns an ``(n, d)`` complex array in grid order.
    """
    n = panel.n
    if grid is None:
        grid = FrequencyGrid(n)
    if grid.n != n:
        raise InputError(f"grid built for n={grid.n} but panel has n={n}")
    raw = np.fft.fft(panel.data, axis=0)
    k = grid.indices
    phase = np.exp(-1j * grid.values)[:, None]
    return raw[np.mod(k, n)] * phase / np.sqrt(2.0 * np.pi * n)


def periodogram(panel: TimeSeriesPanel) -> SpectralMatrixField:
    """Periodogram matrices ``I(w_k) = J(w_k) J(w_k)^H`` on the Fourier grid.

    The field is understood as 2*pi periodic: ``field.at(k)`` reduces ``k``
    modulo ``n``.
    """
    grid = FrequencyGrid(panel.n)
    J = dft(panel, grid)
    mats = J[:, :, None] * np.conj(J[:, None, :])
    return SpectralMatrixField(grid, mats, FieldKind.PERIODOGRAM)


def _check_groups(field_: SpectralMatrixField, p: int, q: int) -> None:
    if p < 1 or q < 1 or p * q != field_.d:
        raise InputError(f"field dimension {field_.d} is not p*q = {p}*{q}")


def block(field_: SpectralMatrixField, m: int, n2: int, p: int) -> np.ndarray:
    """Block ``(m, n2)`` (0-based groups) as an ``(n, p, p)`` array."""
    q = field_.d // p
    _check_groups(field_, p, q)
    if not (0 <= m < q and 0 <= n2 < q):
        raise InputError(f"block index ({m}, {n2}) out of range for q={q}")
    return field_.matrices[:, m * p:(m + 1) * p, n2 * p:(n2 + 1) * p]


def blocks(field_: SpectralMatrixField, p: int, q: int) -> np.ndarray:
    """All blocks at once: ``out[k, a, b]`` is block ``(a, b)`` at grid position ``k``.

    Shape ``(n, q, q, p, p)``.
    """
    _check_groups(field_, p, q)
    n = field_.matrices.shape[0]
    return field_.matrices.reshape(n, q, p, q, p).transpose(0, 1, 3, 2, 4)


def pooled_diagonal(field_: SpectralMatrixField, p: int, q: int) -> SpectralMatrixField:
    """Average of the ``q`` diagonal ``p x p`` blocks at every frequency."""
    b = blocks(field_, p, q)
    diag = b[:, np.arange(q), np.arange(q)]
    return SpectralMatrixField(field_.grid, diag.mean(axis=1), FieldKind.POOLED)


def read_csv(path, p: int = 1, q: int | None = None) -> TimeSeriesPanel:
    """Read a panel from CSV: one row per time point, optional header line.

    ``q`` defaults to ``d // p``.  Parse errors name the 1-based line and column.
    """
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        width = None
        for lineno, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values = [float(c) for c in row]
            except ValueError:
                if not rows and width is None:
                    width = len(row)  # header line
                    continue
                for col, c in enumerate(row, start=1):
                    try:
                        float(c)
                    except ValueError:
                        raise InputError(
                            f"{path}: line {lineno}, column {col}: cannot parse {c!r} as a number"
                        ) from None
                raise
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise InputError(f"{path}: line {lineno}: expected {width} columns, got {len(values)}")
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows)
    if q is None:
        if data.shape[1] % p:
            raise InputError(f"{path}: {data.shape[1]} columns not divisible by p={p}")
        q = data.shape[1] // p
    return TimeSeriesPanel(data, p, q)


def write_csv(panel: TimeSeriesPanel, path, header: bool = True) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            if header:
                w.writerow([f"x{j + 1}" for j in range(panel.d)])
            for row in panel.data:
                w.writerow([repr(float(v)) for v in row])
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc
