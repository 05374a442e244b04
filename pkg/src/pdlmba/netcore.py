"""Frequency grids and n-port S-parameter networks sampled on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

Z0_DEFAULT = 50.0


class GridMismatchError(ValueError):
    """Raised when two objects are sampled on different frequency grids."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Ordered, strictly increasing set of analysis frequencies in Hz."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise ValueError("frequency grid must be non-empty")
        if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
            raise ValueError("frequency grid points must be finite and > 0")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        object.__setattr__(self, "points", _frozen(pts))

    @classmethod
    def linspace(cls, start: float, stop: float, n: int) -> FrequencyGrid:
        return cls(np.linspace(start, stop, n))

    def __len__(self) -> int:
        return self.points.size

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points))

    def __hash__(self) -> int:
        return hash(self.points.tobytes())

    @property
    def omega(self) -> np.ndarray:
        return 2 * np.pi * self.points

    @property
    def f_min(self) -> float:
        return float(self.points[0])

    @property
    def f_max(self) -> float:
        return float(self.points[-1])

    @property
    def f_mid(self) -> float:
        """Arithmetic centre of the band."""
        return 0.5 * (self.f_min + self.f_max)


def per_frequency(value, grid: FrequencyGrid) -> np.ndarray:
    """Broadcast a scalar or per-frequency sequence to a complex vector on ``grid``."""
    arr = np.asarray(value, dtype=complex)
    if arr.ndim == 0:
        return np.full(len(grid), complex(arr))
    arr = arr.ravel()
    if arr.size != len(grid):
        raise GridMismatchError(
            f"expected {len(grid)} per-frequency values, got {arr.size}")
    return arr


@dataclass(frozen=True, eq=False)
class NPortNetwork:
    """Complex S-matrix per grid point.

    ``s`` has shape ``(len(grid), n_ports, n_ports)``; ``s[k, i, j]`` is
    S_(i+1)(j+1) at ``grid.points[k]``. ``z_ref`` is broadcast to one value per
    port.
    """

    grid: FrequencyGrid
    s: np.ndarray
    z_ref: np.ndarray | float = Z0_DEFAULT
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        s = np.asarray(self.s, dtype=complex)
        if s.ndim == 2:
            s = np.broadcast_to(s, (len(self.grid),) + s.shape)
        if s.ndim != 3 or s.shape[1] != s.shape[2] or s.shape[1] < 1:
            raise ValueError(f"S array must have shape (F, n, n), got {s.shape}")
        if s.shape[0] != len(self.grid):
            raise GridMismatchError(
                f"S array has {s.shape[0]} frequency points, grid has {len(self.grid)}")
        z = np.broadcast_to(np.asarray(self.z_ref, dtype=float), (s.shape[1],))
        if np.any(z <= 0):
            raise ValueError("reference impedance must be > 0 for every port")
        object.__setattr__(self, "s", _frozen(s))
        object.__setattr__(self, "z_ref", _frozen(z))

    @property
    def n_ports(self) -> int:
        return self.s.shape[1]

    def sij(self, i: int, j: int) -> np.ndarray:
        """S-parameter using 1-based port numbers, e.g. ``sij(2, 1)`` is S21."""
        return self.s[:, i - 1, j - 1]

    @property
    def s21(self) -> np.ndarray:
        return self.sij(2, 1)

    def with_s(self, s: np.ndarray) -> NPortNetwork:
        return NPortNetwork(self.grid, s, self.z_ref, self.name)

    def with_name(self, name: str) -> NPortNetwork:
        return NPortNetwork(self.grid, self.s, self.z_ref, name)


def identity(grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
    """Matched, lossless, zero-length through connection."""
    s = np.zeros((len(grid), 2, 2), dtype=complex)
    s[:, 0, 1] = s[:, 1, 0] = 1.0
    return NPortNetwork(grid, s, z_ref, "identity")


def _require_two_port(net: NPortNetwork, what: str) -> None:
    if net.n_ports != 2:
        raise ValueError(f"{what} must be a 2-port, got {net.n_ports} ports")


def check_same_grid(*nets: NPortNetwork) -> FrequencyGrid:
    grid = nets[0].grid
    for n in nets[1:]:
        if n.grid != grid:
            raise GridMismatchError(
                f"network {n.name or '?'} is on a different frequency grid")
    return grid


def cascade(a: NPortNetwork, b: NPortNetwork) -> NPortNetwork:
    """Connect port 2 of ``a`` to port 1 of ``b``."""
    _require_two_port(a, "cascade operand a")
    _require_two_port(b, "cascade operand b")
    grid = check_same_grid(a, b)
    if not np.array_equal(a.z_ref, b.z_ref):
        raise ValueError("cascade requires equal reference impedances")

    a11, a12, a21, a22 = a.s[:, 0, 0], a.s[:, 0, 1], a.s[:, 1, 0], a.s[:, 1, 1]
    b11, b12, b21, b22 = b.s[:, 0, 0], b.s[:, 0, 1], b.s[:, 1, 0], b.s[:, 1, 1]
    # 1 / (1 - a22 b11) is the internal multiple-reflection sum
    den = 1.0 - a22 * b11
    s = np.empty_like(a.s)
    s[:, 0, 0] = a11 + a12 * b11 * a21 / den
    s[:, 0, 1] = a12 * b12 / den
    s[:, 1, 0] = a21 * b21 / den
    s[:, 1, 1] = b22 + b21 * a22 * b12 / den
    name = f"{a.name}*{b.name}" if a.name or b.name else ""
    return NPortNetwork(grid, s, a.z_ref, name)


def cascade_all(nets: Sequence[NPortNetwork]) -> NPortNetwork:
    if not nets:
        raise ValueError("nothing to cascade")
    out = nets[0]
    for n in nets[1:]:
        out = cascade(out, n)
    return out


def check_reciprocal(net: NPortNetwork, tol: float) -> bool:
    """True iff max over the grid of the infinity norm of S - S^T is <= tol."""
    diff = net.s - np.swapaxes(net.s, 1, 2)
    norms = np.abs(diff).sum(axis=2).max(axis=1)
    return bool(norms.max() <= tol)


def check_lossless(net: NPortNetwork, tol: float) -> bool:
    """True iff S^H S equals the identity within ``tol`` at every grid point."""
    gram = np.conj(np.swapaxes(net.s, 1, 2)) @ net.s
    return bool(np.abs(gram - np.eye(net.n_ports)).max() <= tol)


def abcd_to_s(abcd: np.ndarray, z0: float = Z0_DEFAULT) -> np.ndarray:
    """Convert a stack of ABCD matrices (F, 2, 2) to S-parameters."""
    a, b, c, d = abcd[:, 0, 0], abcd[:, 0, 1], abcd[:, 1, 0], abcd[:, 1, 1]
    den = a + b / z0 + c * z0 + d
    s = np.empty(abcd.shape, dtype=complex)
    s[:, 0, 0] = (a + b / z0 - c * z0 - d) / den
    s[:, 0, 1] = 2.0 * (a * d - b * c) / den
    s[:, 1, 0] = 2.0 / den
    s[:, 1, 1] = (-a + b / z0 - c * z0 + d) / den
    return s


def s_to_abcd(s: np.ndarray, z0: float = Z0_DEFAULT) -> np.ndarray:
    """Inverse of :func:`abcd_to_s`; undefined where S21 = 0."""
    s11, s12, s21, s22 = s[:, 0, 0], s[:, 0, 1], s[:, 1, 0], s[:, 1, 1]
    abcd = np.empty(s.shape, dtype=complex)
    abcd[:, 0, 0] = ((1 + s11) * (1 - s22) + s12 * s21) / (2 * s21)
    abcd[:, 0, 1] = z0 * ((1 + s11) * (1 + s22) - s12 * s21) / (2 * s21)
    abcd[:, 1, 0] = ((1 - s11) * (1 - s22) - s12 * s21) / (2 * s21 * z0)
    abcd[:, 1, 1] = ((1 - s11) * (1 + s22) + s12 * s21) / (2 * s21)
    return abcd
