"""Network models for the amplifier building blocks.

Couplers, transistors, matched two-ports, and lossless transmission-line
elements, each returned as an :class:`~pdlmba.netcore.NPortNetwork`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .netcore import (Z0_DEFAULT, FrequencyGrid, NPortNetwork, abcd_to_s,
                      cascade_all, per_frequency)

INV_SQRT2 = 1 / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class CouplerSpec:
    """Ideal 3-dB quadrature coupler with coupling ``m = exp(j theta) / sqrt(2)``."""

    theta: np.ndarray

    @property
    def m(self) -> np.ndarray:
        return INV_SQRT2 * np.exp(1j * np.asarray(self.theta, dtype=float))


def linear_phase_theta(grid: FrequencyGrid, phase_at_mid_deg: float = -90.0,
                       f_ref: float | None = None) -> np.ndarray:
    """``theta(w) = -w * tau`` with tau chosen so theta(f_ref) = ``phase_at_mid_deg``.

    ``f_ref`` defaults to the band centre. Only non-positive phases make sense
    for a causal delay, but the sign is not enforced.
    """
    f_ref = grid.f_mid if f_ref is None else f_ref
    tau = -np.deg2rad(phase_at_mid_deg) / (2 * np.pi * f_ref)
    return -grid.omega * tau


def make_coupler(spec: CouplerSpec, grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
    """Four-port coupler: port 1 input, 2 thru (jm), 3 isolated, 4 coupled (m)."""
    theta = np.asarray(spec.theta, dtype=float)
    if theta.ndim == 0:
        theta = np.full(len(grid), float(theta))
    if theta.shape != (len(grid),):
        raise ValueError(f"theta must have {len(grid)} samples, got {theta.shape}")
    m = INV_SQRT2 * np.exp(1j * theta)
    jm = 1j * m
    s = np.zeros((len(grid), 4, 4), dtype=complex)
    s[:, 0, 1] = s[:, 1, 0] = jm
    s[:, 0, 3] = s[:, 3, 0] = m
    s[:, 1, 2] = s[:, 2, 1] = m
    s[:, 2, 3] = s[:, 3, 2] = jm
    return NPortNetwork(grid, s, z_ref, "coupler")


def make_transistor(s21, grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
    """Unilateral device: matched input, S12 = 0, fully reflective output (S22 = 1)."""
    s = np.zeros((len(grid), 2, 2), dtype=complex)
    s[:, 1, 0] = per_frequency(s21, grid)
    s[:, 1, 1] = 1.0
    return NPortNetwork(grid, s, z_ref, "transistor")


def make_matched(s21, grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
    """Matched reciprocal two-port: S11 = S22 = 0, S12 = S21."""
    s = np.zeros((len(grid), 2, 2), dtype=complex)
    s[:, 0, 1] = s[:, 1, 0] = per_frequency(s21, grid)
    return NPortNetwork(grid, s, z_ref, "matched")


def linear_phase_gain(grid: FrequencyGrid, gain: float = 1.0, phase_deg_at_f0: float = 0.0,
                      f0: float | None = None) -> np.ndarray:
    """Flat magnitude with phase ``phase_deg_at_f0 * f / f0``."""
    f0 = grid.f_mid if f0 is None else f0
    return gain * np.exp(1j * np.deg2rad(phase_deg_at_f0) * grid.points / f0)


TWO_PORT_KINDS = ("transistor", "matching", "phase_shifter", "line")


@dataclass(frozen=True, eq=False)
class TwoPortSpec:
    kind: str
    s21: object

    def __post_init__(self) -> None:
        if self.kind not in TWO_PORT_KINDS:
            raise ValueError(f"unknown two-port kind {self.kind!r}; expected one of {TWO_PORT_KINDS}")

    def build(self, grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
        if self.kind == "transistor":
            return make_transistor(self.s21, grid, z_ref)
        return make_matched(self.s21, grid, z_ref).with_name(self.kind)


@dataclass(frozen=True)
class LineSpec:
    """Lossless line of impedance ``z_c`` and electrical length (degrees) at ``f0``."""

    z_c: float
    electrical_length_deg: float
    f0: float

    def __post_init__(self) -> None:
        if self.z_c <= 0:
            raise ValueError("line impedance must be > 0")
        if self.f0 <= 0:
            raise ValueError("line reference frequency must be > 0")

    def beta_l(self, grid: FrequencyGrid) -> np.ndarray:
        """Electrical length in radians at each grid point."""
        return np.deg2rad(self.electrical_length_deg) * grid.points / self.f0


def make_line(spec: LineSpec, grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
    bl = spec.beta_l(grid)
    if spec.z_c == z_ref:
        return make_matched(np.exp(-1j * bl), grid, z_ref).with_name("line")
    abcd = np.empty((len(grid), 2, 2), dtype=complex)
    abcd[:, 0, 0] = abcd[:, 1, 1] = np.cos(bl)
    abcd[:, 0, 1] = 1j * spec.z_c * np.sin(bl)
    abcd[:, 1, 0] = 1j * np.sin(bl) / spec.z_c
    return NPortNetwork(grid, abcd_to_s(abcd, z_ref), z_ref, "line")


def make_phase_shifter(spec: LineSpec, grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
    """Matched line used as a phase shifter; ``z_c`` must equal ``z_ref``."""
    if spec.z_c != z_ref:
        raise ValueError(f"phase shifter must be matched: z_c={spec.z_c} != z_ref={z_ref}")
    return make_line(spec, grid, z_ref).with_name("phase_shifter")


def make_open_stub(spec: LineSpec, grid: FrequencyGrid, z_ref: float = Z0_DEFAULT) -> NPortNetwork:
    """Shunt open-circuited stub as a two-port, admittance ``j tan(beta l) / z_c``."""
    y = 1j * np.tan(spec.beta_l(grid)) / spec.z_c * z_ref
    s = np.empty((len(grid), 2, 2), dtype=complex)
    s[:, 0, 0] = s[:, 1, 1] = -y / (2 + y)
    s[:, 0, 1] = s[:, 1, 0] = 2 / (2 + y)
    return NPortNetwork(grid, s, z_ref, "open_stub")


def synthesize_multisection_omn(sections: Sequence[LineSpec], shunt_stub: LineSpec | None,
                                grid: FrequencyGrid, z_ref: float = Z0_DEFAULT,
                                parasitic: tuple[LineSpec, LineSpec] | None = None) -> NPortNetwork:
    """Output matching network: [parasitic line + stub] -> [shunt stub] -> series lines.

    ``parasitic`` is an optional ``(series_line, shunt_stub)`` pre-section
    standing in for the device output parasitics.
    """
    if not sections:
        raise ValueError("at least one series section is required")
    parts = []
    if parasitic is not None:
        line, stub = parasitic
        parts += [make_line(line, grid, z_ref), make_open_stub(stub, grid, z_ref)]
    if shunt_stub is not None:
        parts.append(make_open_stub(shunt_stub, grid, z_ref))
    parts += [make_line(sec, grid, z_ref) for sec in sections]
    return cascade_all(parts).with_name("omn")
