"""Touchstone v1 (.sNp) reader and writer for S-parameter data."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .netcore import FrequencyGrid, NPortNetwork

UNITS = {"HZ": ("Hz", 1.0), "KHZ": ("kHz", 1e3), "MHZ": ("MHz", 1e6), "GHZ": ("GHz", 1e9)}
UNIT_SCALE = {name: scale for name, scale in UNITS.values()}
FORMATS = ("RI", "MA", "DB")
DB_FLOOR = -600.0  # dB written for an exact zero magnitude


class TouchstoneError(ValueError):
    """Malformed Touchstone input; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class TouchstoneDocument:
    """Parsed file contents. ``frequencies`` are in Hz, ``s`` is ``(F, n, n)``."""

    n_ports: int
    frequencies: np.ndarray
    s: np.ndarray
    freq_unit: str = "GHz"
    format: str = "MA"
    z_ref: float = 50.0
    comments: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.freq_unit not in UNIT_SCALE:
            raise ValueError(f"unknown frequency unit {self.freq_unit!r}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown data format {self.format!r}")
        f = np.asarray(self.frequencies, dtype=float)
        s = np.asarray(self.s, dtype=complex)
        if s.shape != (f.size, self.n_ports, self.n_ports):
            raise ValueError(f"S data shape {s.shape} does not match {f.size} points x {self.n_ports} ports")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "comments", tuple(self.comments))


def ports_from_suffix(path: str | Path) -> int:
    m = re.fullmatch(r"\.s(\d+)p", Path(path).suffix.lower())
    if not m:
        raise TouchstoneError(f"cannot infer port count from file name {str(path)!r}")
    return int(m.group(1))


def _parse_option_line(text: str, lineno: int) -> tuple[str, str, float]:
    unit, fmt, z = "GHz", "MA", 50.0
    tokens = text[1:].split()
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok in UNITS:
            unit = UNITS[tok][0]
        elif tok in FORMATS:
            fmt = tok
        elif tok == "S":
            pass
        elif tok in ("Y", "Z", "G", "H"):
            raise TouchstoneError(f"only S-parameter data is supported, got {tokens[i]!r}", lineno)
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise TouchstoneError("option 'R' needs a reference impedance", lineno)
            try:
                z = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneError(f"bad reference impedance {tokens[i + 1]!r}", lineno) from None
            if z <= 0:
                raise TouchstoneError("reference impedance must be > 0", lineno)
            i += 1
        else:
            raise TouchstoneError(f"unrecognised option {tokens[i]!r}", lineno)
        i += 1
    return unit, fmt, z


def _to_complex(a: np.ndarray, b: np.ndarray, fmt: str) -> np.ndarray:
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10 ** (a / 20)
    return mag * np.exp(1j * np.deg2rad(b))


def _from_complex(z: np.ndarray, fmt: str) -> tuple[np.ndarray, np.ndarray]:
    if fmt == "RI":
        return z.real, z.imag
    mag = np.abs(z)
    ang = np.angle(z, deg=True)
    if fmt == "MA":
        return mag, ang
    with np.errstate(divide="ignore"):
        db = np.where(mag > 0, 20 * np.log10(np.where(mag > 0, mag, 1.0)), DB_FLOOR)
    return db, ang


def parse(text: str, n_ports: int) -> TouchstoneDocument:
    """Parse Touchstone v1 text holding ``n_ports``-port S-parameters.

    Records may span several lines (the usual layout for 3 and 4 ports) but
    each must start on a new line. Two-port data is in S11 S21 S12 S22 order;
    all other port counts are row-major.
    """
    if not 1 <= n_ports <= 4:
        raise TouchstoneError(f"unsupported port count {n_ports}; expected 1-4")
    per_record = 1 + 2 * n_ports * n_ports
    option: tuple[str, str, float] | None = None
    comments: list[str] = []
    records: list[list[float]] = []
    record_lines: list[int] = []
    current: list[float] = []
    start_line = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line, bang, comment = raw.partition("!")
        if bang:
            comments.append(comment.strip())
        line = line.strip()
        if not line:
            continue
        if line.startswith("["):
            raise TouchstoneError("Touchstone v2 keyword found; only v1 files are supported", lineno)
        if line.startswith("#"):
            if option is None:
                if records or current:
                    raise TouchstoneError("option line must precede the data", lineno)
                option = _parse_option_line(line, lineno)
            continue
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError:
            raise TouchstoneError(f"non-numeric data in {line!r}", lineno) from None
        if not current:
            start_line = lineno
        current.extend(values)
        if len(current) > per_record:
            raise TouchstoneError(
                f"record starting on line {start_line} has {len(current)} values, "
                f"expected {per_record}", lineno)
        if len(current) == per_record:
            records.append(current)
            record_lines.append(start_line)
            current = []
    if current:
        raise TouchstoneError(
            f"incomplete record starting on line {start_line}: {len(current)} of {per_record} values",
            start_line)
    unit, fmt, z = option if option is not None else ("GHz", "MA", 50.0)
    data = np.array(records, dtype=float).reshape(len(records), per_record)
    freqs = data[:, 0] * UNIT_SCALE[unit]
    bad = np.flatnonzero(np.diff(freqs) <= 0)
    if bad.size:
        raise TouchstoneError("frequencies are not strictly increasing", record_lines[bad[0] + 1])
    pairs = data[:, 1:].reshape(len(records), n_ports * n_ports, 2)
    s = _to_complex(pairs[..., 0], pairs[..., 1], fmt).reshape(len(records), n_ports, n_ports)
    if n_ports == 2:
        s = np.swapaxes(s, 1, 2)
    return TouchstoneDocument(n_ports, freqs, s, unit, fmt, z, tuple(comments))


def serialize(doc: TouchstoneDocument) -> str:
    """Canonical v1 text: comments, option line, then one record per frequency."""
    out = [f"! {c}" if c else "!" for c in doc.comments]
    out.append(f"# {doc.freq_unit} S {doc.format} R {doc.z_ref:.12g}")
    n = doc.n_ports
    s = np.swapaxes(doc.s, 1, 2) if n == 2 else doc.s
    a, b = _from_complex(s.reshape(len(doc.frequencies), n * n), doc.format)
    scale = UNIT_SCALE[doc.freq_unit]
    per_line = n if n >= 3 else n * n
    for k, f in enumerate(doc.frequencies):
        cells = [f"{a[k, i]:.12g} {b[k, i]:.12g}" for i in range(n * n)]
        chunks = [cells[i:i + per_line] for i in range(0, len(cells), per_line)]
        out.append(f"{repr(float(f / scale))} " + "  ".join(chunks[0]))
        out.extend("  " + "  ".join(c) for c in chunks[1:])
    return "\n".join(out) + "\n"


def read(path: str | Path) -> TouchstoneDocument:
    path = Path(path)
    return parse(path.read_text(encoding="utf-8"), ports_from_suffix(path))


def write(path: str | Path, doc: TouchstoneDocument) -> None:
    Path(path).write_text(serialize(doc), encoding="utf-8")


def from_network(net: NPortNetwork, format: str = "RI", freq_unit: str = "GHz",
                 comments: tuple[str, ...] = ()) -> TouchstoneDocument:
    return TouchstoneDocument(net.n_ports, net.grid.points, net.s, freq_unit, format,
                              float(net.z_ref[0]), comments)


def to_network(doc: TouchstoneDocument, grid: FrequencyGrid, name: str = "") -> NPortNetwork:
    """Resample onto ``grid`` by linear interpolation of magnitude and unwrapped phase.

    Grid points that coincide with file frequencies get the file values
    unchanged. Extrapolation is refused.
    """
    f = doc.frequencies
    if grid.f_min < f[0] or grid.f_max > f[-1]:
        raise ValueError(
            f"grid [{grid.f_min:.6g}, {grid.f_max:.6g}] Hz lies outside the file span "
            f"[{f[0]:.6g}, {f[-1]:.6g}] Hz")
    n = doc.n_ports
    flat = doc.s.reshape(f.size, n * n)
    mag = np.abs(flat)
    phase = np.unwrap(np.angle(flat), axis=0)
    x = grid.points
    out = np.empty((x.size, n * n), dtype=complex)
    for i in range(n * n):
        out[:, i] = np.interp(x, f, mag[:, i]) * np.exp(1j * np.interp(x, f, phase[:, i]))
    idx = np.clip(np.searchsorted(f, x), 0, f.size - 1)
    exact = f[idx] == x
    out[exact] = flat[idx[exact]]
    return NPortNetwork(grid, out.reshape(x.size, n, n), doc.z_ref, name)
