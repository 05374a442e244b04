"""Pseudo-Doherty load-modulated balanced amplifier (PD-LMBA) analysis.

The balanced pair (BA) is the peaking device and the control amplifier (CA)
the carrier. Its output is injected into the isolated port of the BA output
coupler. This module wires the blocks into a flow graph, evaluates the
closed-form output waves, measures the BA/CA path phase offset, turns drive
profiles into BA load trajectories, and searches for the phase-shifter length
that best aligns the two paths over the band.
"""
from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import components as comp
from .netcore import Z0_DEFAULT, FrequencyGrid, NPortNetwork, check_same_grid
from .sfg import FlowGraph, MasonSolution, mason_transfer, network_graph

SQRT2 = np.sqrt(2.0)
BA_SOURCE = "a_BA"
CA_SOURCE = "a_CA"
OUTPUT = "b_out"


class SingularGraphError(ArithmeticError):
    """The amplifier graph has a zero determinant at some frequency."""

    def __init__(self, frequencies: np.ndarray):
        self.frequencies = np.asarray(frequencies)
        listed = ", ".join(f"{f:.6g}" for f in self.frequencies[:5])
        super().__init__(f"singular flow graph at {self.frequencies.size} frequencies ({listed} Hz)")


@dataclass(frozen=True, eq=False)
class LmbaTopology:
    """Block networks of a PD-LMBA.

    Both BA branches use ``ba_imn``, ``ba_transistor`` and ``ba_omn``; the
    balanced pair is identical by construction.
    """

    input_coupler: NPortNetwork
    output_coupler: NPortNetwork
    phase_shifter: NPortNetwork
    ba_imn: NPortNetwork
    ba_transistor: NPortNetwork
    ba_omn: NPortNetwork
    ca_imn: NPortNetwork
    ca_transistor: NPortNetwork
    ca_omn: NPortNetwork

    def __post_init__(self) -> None:
        nets = self.blocks()
        check_same_grid(*nets.values())
        for name, net in nets.items():
            want = 4 if name.endswith("coupler") else 2
            if net.n_ports != want:
                raise ValueError(f"{name} must have {want} ports, got {net.n_ports}")

    @property
    def grid(self) -> FrequencyGrid:
        return self.input_coupler.grid

    def blocks(self) -> dict[str, NPortNetwork]:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def replace(self, **changes: NPortNetwork) -> LmbaTopology:
        return dataclasses.replace(self, **changes)


def ideal_topology(grid: FrequencyGrid, theta=None, phs=1.0, bi=1.0, btr=1.0, bo=1.0,
                   ci=1.0, ctr=1.0, co=1.0, z_ref: float = Z0_DEFAULT) -> LmbaTopology:
    """Topology of matched blocks with the given S21 values.

    Each S21 may be a scalar or a per-frequency vector. ``theta`` is the
    coupler phase (both couplers identical); it defaults to 0.
    """
    theta = np.zeros(len(grid)) if theta is None else theta
    coupler = comp.make_coupler(comp.CouplerSpec(theta), grid, z_ref)
    return LmbaTopology(
        input_coupler=coupler, output_coupler=coupler,
        phase_shifter=comp.make_matched(phs, grid, z_ref),
        ba_imn=comp.make_matched(bi, grid, z_ref),
        ba_transistor=comp.make_transistor(btr, grid, z_ref),
        ba_omn=comp.make_matched(bo, grid, z_ref),
        ca_imn=comp.make_matched(ci, grid, z_ref),
        ca_transistor=comp.make_transistor(ctr, grid, z_ref),
        ca_omn=comp.make_matched(co, grid, z_ref),
    )


def wideband_fixture(grid: FrequencyGrid, f0: float | None = None,
                     phase_shifter_deg: float = 0.0, z_ref: float = Z0_DEFAULT) -> LmbaTopology:
    """Dispersive transmission-line realisation of a decade-band PD-LMBA.

    CA output match: a drain-side shunt open stub followed by a 40/45 ohm
    two-section transformer, behind a short line + stub standing in for
    device parasitics. BA output match: one short 50 ohm line. Both IMNs are
    two-section transformers of similar electrical length, the transistors
    have flat gain and linear phase, and the couplers carry a linear phase
    that sweeps well past 360 degrees across the band.
    """
    f0 = grid.f_mid if f0 is None else f0
    L = comp.LineSpec
    coupler = comp.make_coupler(
        comp.CouplerSpec(comp.linear_phase_theta(grid, -270.0, f0)), grid, z_ref)
    ca_omn = comp.synthesize_multisection_omn(
        [L(40.0, 40.0, f0), L(45.0, 40.0, f0)], L(60.0, 12.0, f0), grid, z_ref,
        parasitic=(L(50.0, 8.0, f0), L(80.0, 6.0, f0)))
    ba_omn = comp.synthesize_multisection_omn([L(50.0, 18.0, f0)], None, grid, z_ref)
    ba_imn = comp.synthesize_multisection_omn([L(35.0, 40.0, f0), L(42.0, 40.0, f0)], None, grid, z_ref)
    ca_imn = comp.synthesize_multisection_omn([L(33.0, 42.0, f0), L(41.0, 42.0, f0)], None, grid, z_ref)
    return LmbaTopology(
        input_coupler=coupler, output_coupler=coupler,
        phase_shifter=comp.make_phase_shifter(L(z_ref, phase_shifter_deg, f0), grid, z_ref),
        ba_imn=ba_imn,
        ba_transistor=comp.make_transistor(comp.linear_phase_gain(grid, 4.0, -70.0, f0), grid, z_ref),
        ba_omn=ba_omn,
        ca_imn=ca_imn,
        ca_transistor=comp.make_transistor(comp.linear_phase_gain(grid, 3.0, -65.0, f0), grid, z_ref),
        ca_omn=ca_omn,
    )


def _assembly(t: LmbaTopology):
    b = {
        "PHS": t.phase_shifter, "IN": t.input_coupler, "OUT": t.output_coupler,
        "CA_IMN": t.ca_imn, "CA_TR": t.ca_transistor, "CA_OMN": t.ca_omn,
    }
    wires = [(("PHS", 2), ("IN", 1)),
             (("CA_IMN", 2), ("CA_TR", 1)), (("CA_TR", 2), ("CA_OMN", 1)),
             (("CA_OMN", 2), ("OUT", 4))]
    # BA1 sits on the coupler thru arm, BA2 on the coupled arm
    for branch, in_port, out_port in (("BA1", 2, 3), ("BA2", 4, 1)):
        b[f"{branch}_IMN"], b[f"{branch}_TR"], b[f"{branch}_OMN"] = t.ba_imn, t.ba_transistor, t.ba_omn
        wires += [(("IN", in_port), (f"{branch}_IMN", 1)),
                  ((f"{branch}_IMN", 2), (f"{branch}_TR", 1)),
                  ((f"{branch}_TR", 2), (f"{branch}_OMN", 1)),
                  ((f"{branch}_OMN", 2), ("OUT", out_port))]
    inputs = {BA_SOURCE: ("PHS", 1), CA_SOURCE: ("CA_IMN", 1)}
    outputs = {OUTPUT: ("OUT", 2)}
    return b, wires, inputs, outputs


def build_graph(t: LmbaTopology) -> FlowGraph:
    """Flow graph of the full amplifier with sources ``a_BA``, ``a_CA`` and sink ``b_out``.

    Every non-zero S-parameter of every block becomes a branch, so
    mismatched blocks add reflection loops on top of the matched-case graph.
    """
    return network_graph(*_assembly(t))


def graph_transfers(t: LmbaTopology, g: FlowGraph | None = None) -> tuple[MasonSolution, MasonSolution]:
    """Mason solutions ``a_BA -> b_out`` and ``a_CA -> b_out``."""
    g = build_graph(t) if g is None else g
    return mason_transfer(g, BA_SOURCE, OUTPUT), mason_transfer(g, CA_SOURCE, OUTPUT)


def coupling_factor(coupler: NPortNetwork) -> np.ndarray:
    """``m`` of a quadrature coupler, read from S41."""
    return coupler.sij(4, 1)


@dataclass(frozen=True, eq=False)
class PathGains:
    """Output wave per unit BA and CA drive, from the closed-form expressions."""

    ba_path: np.ndarray
    ca_path: np.ndarray


def path_gains(t: LmbaTopology) -> PathGains:
    m_in = coupling_factor(t.input_coupler)
    m_out = coupling_factor(t.output_coupler)
    bo = t.ba_omn.s21
    ba = 2j * m_in * m_out * t.phase_shifter.s21 * t.ba_imn.s21 * t.ba_transistor.s21 * bo
    ca = 2j * m_out * m_out * t.ca_imn.s21 * t.ca_transistor.s21 * t.ca_omn.s21 * bo * bo
    return PathGains(ba, ca)


def output_waves(t: LmbaTopology, a_ba: complex, a_ca: complex) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(b_out_ba, b_out_ca, b_out)`` per frequency, in closed form.

    Exact for matched IMN/OMN/phase-shifter blocks; with mismatched blocks
    use :func:`graph_transfers` instead.
    """
    pg = path_gains(t)
    b_ba = a_ba * pg.ba_path
    b_ca = a_ca * pg.ca_path
    return b_ba, b_ca, b_ba + b_ca


def unwrap_fold(phase_deg: np.ndarray) -> np.ndarray:
    """Unwrap along the last axis, then shift by whole turns so the first sample is in (-180, 180]."""
    un = np.unwrap(np.asarray(phase_deg, dtype=float), period=360.0, axis=-1)
    first = un[..., :1]
    turns = np.ceil((first - 180.0) / 360.0)
    return un - 360.0 * turns


def phase_offset(t: LmbaTopology) -> np.ndarray:
    """BA minus CA path phase in degrees, continuous across the grid.

    BA path: phase shifter, IMN, transistor. CA path: IMN, transistor, CA
    OMN and BA OMN. Zero at every frequency means in-phase combining.
    """
    ba = t.phase_shifter.s21 * t.ba_imn.s21 * t.ba_transistor.s21
    ca = t.ca_imn.s21 * t.ca_transistor.s21 * t.ca_omn.s21 * t.ba_omn.s21
    return unwrap_fold(np.angle(ba * np.conj(ca), deg=True))


def load_reflection(i_b: float, i_c: float, theta: float, z0: float = Z0_DEFAULT) -> tuple[complex, complex]:
    """BA load impedance and reflection coefficient under CA injection.

    ``Z = z0 * (1 + sqrt(2) * i_c * exp(j theta) / i_b)``. Gamma is evaluated
    from the current ratio, so ``i_b = 0`` gives an open (Gamma = 1) and an
    infinite Z.
    """
    if i_b < 0 or i_c < 0:
        raise ValueError("current magnitudes must be non-negative")
    if i_b == 0 and i_c == 0:
        raise ValueError("load is undefined when both currents are zero")
    inj = SQRT2 * i_c * np.exp(1j * theta)
    gamma = complex(inj / (2 * i_b + inj))
    if i_b == 0:
        return 1 + 0j, complex(np.inf, 0.0)
    return gamma, complex(z0 * (1 + inj / i_b))


@dataclass(frozen=True, eq=False)
class DriveProfile:
    """Normalised BA/CA current magnitudes versus input drive ``r`` in [0, 1]."""

    obo_db: float
    levels: np.ndarray
    i_c: np.ndarray
    i_b: np.ndarray
    theta: float = 0.0

    @property
    def r_backoff(self) -> float:
        return 10 ** (-self.obo_db / 20)

    @property
    def ba_off(self) -> np.ndarray:
        return self.i_b == 0


def make_drive_profile(obo_db: float = 10.0, n_levels: int = 101, z_full_ratio: float = 2.0,
                       theta: float = 0.0) -> DriveProfile:
    """Piecewise-linear carrier/peaking profile.

    The CA current ramps to 1 at the back-off drive ``10**(-obo_db/20)`` and
    stays there; the BA current is zero up to that point, then ramps to the
    value that gives a full-drive BA load of ``z_full_ratio * z0``.
    """
    if obo_db <= 0:
        raise ValueError("back-off must be positive")
    if n_levels < 3:
        raise ValueError("need at least 3 drive levels")
    if z_full_ratio <= 1:
        raise ValueError("full-drive load ratio must exceed 1")
    r_bo = 10 ** (-obo_db / 20)
    r = np.linspace(0.0, 1.0, n_levels)
    i_c = np.minimum(r / r_bo, 1.0)
    i_b_full = SQRT2 / (z_full_ratio - 1.0)
    i_b = np.where(r <= r_bo, 0.0, i_b_full * (r - r_bo) / (1 - r_bo))
    return DriveProfile(obo_db, r, i_c, i_b, theta)


@dataclass(frozen=True, eq=False)
class LoadTrajectory:
    """BA load versus drive at every frequency.

    ``gamma`` and ``z`` have shape ``(n_freq, n_levels)``; ``z`` is infinite
    where the BA is off. ``theta_deg`` is the control phase used per
    frequency and ``offset_deg`` the path phase offset, reported side by side.
    """

    frequencies: np.ndarray
    levels: np.ndarray
    gamma: np.ndarray
    z: np.ndarray
    theta_deg: np.ndarray
    offset_deg: np.ndarray

    @property
    def ba_off(self) -> np.ndarray:
        return np.isinf(self.z[0].real)

    def max_deviation(self) -> float:
        """Largest |Gamma(f, r) - Gamma(f_first, r)| over all frequencies and drives."""
        return float(np.abs(self.gamma - self.gamma[:1]).max())


def _gamma_grid(i_b: np.ndarray, i_c: np.ndarray, theta: np.ndarray, z0: float):
    inj = SQRT2 * i_c[None, :] * np.exp(1j * theta[:, None])
    on = i_b > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(on, inj / (2 * i_b + inj), 1.0 + 0j)
        z = np.where(on, z0 * (1 + inj / np.where(on, i_b, 1.0)), complex(np.inf, 0.0))
    return gamma, z


def trajectory_sweep(t: LmbaTopology, p: DriveProfile, z0: float = Z0_DEFAULT,
                     source: str = "graph") -> LoadTrajectory:
    """BA load trajectories over the drive profile at every grid frequency.

    The control phase at each frequency is the BA/CA combining phase error
    plus the profile's static ``theta``. With ``source="graph"`` it is read
    from the Mason transfers of the full flow graph (couplers included);
    with ``source="offset"`` it is :func:`phase_offset`. For ideal couplers
    the two agree.
    """
    offset = phase_offset(t)
    if source == "graph":
        sol_ba, sol_ca = graph_transfers(t)
        bad = sol_ba.singular | sol_ca.singular
        if bad.any():
            raise SingularGraphError(t.grid.points[bad])
        theta_deg = unwrap_fold(np.angle(sol_ba.transfer * np.conj(sol_ca.transfer), deg=True))
    elif source == "offset":
        theta_deg = offset
    else:
        raise ValueError(f"unknown phase source {source!r}")
    theta = np.deg2rad(theta_deg) + p.theta
    gamma, z = _gamma_grid(p.i_b, p.i_c, theta, z0)
    return LoadTrajectory(t.grid.points.copy(), p.levels.copy(), gamma, z, theta_deg, offset)


def with_phase_shifter(t: LmbaTopology, length_deg: float, f0: float | None = None) -> LmbaTopology:
    """Replace the phase shifter by a matched line of ``length_deg`` at ``f0``."""
    f0 = t.grid.f_mid if f0 is None else f0
    z_ref = float(t.phase_shifter.z_ref[0])
    phs = comp.make_phase_shifter(comp.LineSpec(z_ref, length_deg, f0), t.grid, z_ref)
    return t.replace(phase_shifter=phs)


class Alignment(NamedTuple):
    best_length_deg: float
    max_offset_deg: float


def candidate_lengths(start: float = 0.0, stop: float = 360.0, step: float = 0.5) -> np.ndarray:
    """Inclusive grid of phase-shifter lengths in degrees."""
    if step <= 0 or stop < start:
        raise ValueError("need step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def minimax_objective(t: LmbaTopology, lengths: Sequence[float], f0: float | None = None) -> np.ndarray:
    """max |phase offset| over the band for each candidate phase-shifter length."""
    f0 = t.grid.f_mid if f0 is None else f0
    lengths = np.asarray(lengths, dtype=float)
    f = t.grid.points
    rest = t.ba_imn.s21 * t.ba_transistor.s21 * np.conj(
        t.ca_imn.s21 * t.ca_transistor.s21 * t.ca_omn.s21 * t.ba_omn.s21)
    phs = np.exp(-1j * np.deg2rad(lengths)[:, None] * f[None, :] / f0)
    offsets = unwrap_fold(np.angle(phs * rest[None, :], deg=True))
    return np.abs(offsets).max(axis=1)


def align_phase_shifter(t: LmbaTopology, candidates: Sequence[float] | None = None,
                        f0: float | None = None) -> Alignment:
    """Grid-search the phase-shifter length minimising the worst-case offset.

    Ties (within 1e-9 degrees) go to the shortest candidate.
    """
    lengths = candidate_lengths() if candidates is None else np.asarray(candidates, dtype=float)
    if lengths.size == 0:
        raise ValueError("no candidate lengths")
    order = np.argsort(lengths, kind="stable")
    lengths = lengths[order]
    obj = minimax_objective(t, lengths, f0)
    best = int(np.flatnonzero(obj <= obj.min() + 1e-9)[0])
    return Alignment(float(lengths[best]), float(obj[best]))


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def offset_csv(frequencies: np.ndarray, offset_deg: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "offset_deg"])
    for f, o in zip(frequencies, offset_deg):
        w.writerow([_fmt(f), _fmt(o)])
    return buf.getvalue()


def trajectory_csv(traj: LoadTrajectory) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "drive", "re_gamma", "im_gamma"])
    for i, f in enumerate(traj.frequencies):
        for j, r in enumerate(traj.levels):
            g = traj.gamma[i, j]
            w.writerow([_fmt(f), _fmt(r), _fmt(g.real), _fmt(g.imag)])
    return buf.getvalue()


__all__ = [
    "Alignment", "DriveProfile", "LmbaTopology", "LoadTrajectory", "PathGains",
    "SingularGraphError", "align_phase_shifter", "build_graph", "candidate_lengths",
    "graph_transfers", "ideal_topology", "load_reflection", "make_drive_profile",
    "minimax_objective", "offset_csv", "output_waves", "path_gains", "phase_offset",
    "trajectory_csv", "trajectory_sweep", "unwrap_fold", "wideband_fixture",
    "with_phase_shifter",
]
