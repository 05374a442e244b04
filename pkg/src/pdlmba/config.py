"""JSON topology configuration: schema, validation, and topology construction."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import components as comp
from . import touchstone
from .lmba import DriveProfile, LmbaTopology, candidate_lengths, make_drive_profile
from .netcore import Z0_DEFAULT, FrequencyGrid, NPortNetwork, identity


class ConfigError(ValueError):
    """Invalid configuration; the message carries a file/line anchor when known."""


_line = {
    "type": "object",
    "properties": {
        "z_c": {"type": "number", "exclusiveMinimum": 0},
        "length_deg": {"type": "number"},
        "f0_hz": {"type": "number", "exclusiveMinimum": 0},
    },
    "required": ["z_c", "length_deg"],
    "additionalProperties": False,
}

_twoport = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "identity"}}, "additionalProperties": False},
        {"properties": {"kind": {"enum": ["matched", "transistor"]},
                        "gain": {"type": "number", "minimum": 0},
                        "phase_deg_at_f0": {"type": "number"},
                        "f0_hz": {"type": "number", "exclusiveMinimum": 0}},
         "additionalProperties": False},
        {"properties": {"kind": {"enum": ["line", "phase_shifter"]},
                        "z_c": {"type": "number", "exclusiveMinimum": 0},
                        "length_deg": {"type": "number"},
                        "f0_hz": {"type": "number", "exclusiveMinimum": 0}},
         "required": ["length_deg"], "additionalProperties": False},
        {"properties": {"kind": {"const": "omn"},
                        "sections": {"type": "array", "items": _line, "minItems": 1},
                        "shunt_stub": {"oneOf": [_line, {"type": "null"}]},
                        "parasitic": {"type": "object",
                                      "properties": {"line": _line, "stub": _line},
                                      "required": ["line", "stub"],
                                      "additionalProperties": False}},
         "required": ["sections"], "additionalProperties": False},
        {"properties": {"kind": {"const": "touchstone"}, "path": {"type": "string"}},
         "required": ["path"], "additionalProperties": False},
    ],
}

_coupler = {
    "type": "object",
    "required": ["kind"],
    "oneOf": [
        {"properties": {"kind": {"const": "ideal"},
                        "phase_at_ref_deg": {"type": "number"},
                        "f_ref_hz": {"type": "number", "exclusiveMinimum": 0}},
         "additionalProperties": False},
        {"properties": {"kind": {"const": "touchstone"}, "path": {"type": "string"}},
         "required": ["path"], "additionalProperties": False},
    ],
}

BLOCK_NAMES = ("phase_shifter", "ba_imn", "ba_transistor", "ba_omn",
               "ca_imn", "ca_transistor", "ca_omn")

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "grid": {
            "type": "object",
            "properties": {
                "start_hz": {"type": "number", "exclusiveMinimum": 0},
                "stop_hz": {"type": "number", "exclusiveMinimum": 0},
                "points": {"type": "integer", "minimum": 1},
            },
            "required": ["start_hz", "stop_hz", "points"],
            "additionalProperties": False,
        },
        "z_ref": {"type": "number", "exclusiveMinimum": 0},
        "f0_hz": {"type": "number", "exclusiveMinimum": 0},
        "couplers": {
            "type": "object",
            "properties": {"input": _coupler, "output": _coupler},
            "additionalProperties": False,
        },
        "blocks": {
            "type": "object",
            "properties": {name: _twoport for name in BLOCK_NAMES},
            "additionalProperties": False,
        },
        "drive": {
            "type": "object",
            "properties": {
                "obo_db": {"type": "number", "exclusiveMinimum": 0},
                "levels": {"type": "integer", "minimum": 3},
                "z_full_ratio": {"type": "number", "exclusiveMinimum": 1},
                "theta_deg": {"type": "number"},
            },
            "additionalProperties": False,
        },
        "align": {
            "type": "object",
            "properties": {
                "start_deg": {"type": "number"},
                "stop_deg": {"type": "number"},
                "step_deg": {"type": "number", "exclusiveMinimum": 0},
                "f0_hz": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["grid"],
    "additionalProperties": False,
}


def _locate(text: str, path: list) -> int | None:
    """Best-effort line number of the JSON member at ``path``."""
    pos, found = 0, None
    for key in path:
        if not isinstance(key, str):
            continue
        hit = text.find(json.dumps(key), pos)
        if hit < 0:
            break
        pos = found = hit
    return None if found is None else text.count("\n", 0, found) + 1


def _anchor(source: str, line: int | None) -> str:
    return f"{source}:{line}" if line is not None else source


@dataclass
class TopologyConfig:
    """Validated configuration document plus the directory for relative paths."""

    data: dict
    base_dir: Path
    source: str = "<config>"

    @classmethod
    def from_text(cls, text: str, base_dir: Path | str = ".", source: str = "<config>") -> TopologyConfig:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{_anchor(source, exc.lineno)}: invalid JSON: {exc.msg}") from None
        validator = jsonschema.Draft202012Validator(SCHEMA)
        errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
        if errors:
            err = jsonschema.exceptions.best_match(errors)
            path = list(err.absolute_path)
            if err.validator == "additionalProperties" and isinstance(err.instance, dict):
                known = err.schema.get("properties", {})
                path += [k for k in err.instance if k not in known][:1]
            where = "/".join(str(p) for p in path) or "<root>"
            raise ConfigError(f"{_anchor(source, _locate(text, path))}: {where}: {err.message}")
        return cls(data, Path(base_dir), source)

    @classmethod
    def load(cls, path: str | Path) -> TopologyConfig:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text, path.parent, str(path))

    def with_grid_points(self, points: int) -> TopologyConfig:
        data = json.loads(json.dumps(self.data))
        data["grid"]["points"] = points
        return TopologyConfig(data, self.base_dir, self.source)

    @property
    def z_ref(self) -> float:
        return float(self.data.get("z_ref", Z0_DEFAULT))

    def grid(self) -> FrequencyGrid:
        g = self.data["grid"]
        try:
            return FrequencyGrid.linspace(g["start_hz"], g["stop_hz"], g["points"])
        except ValueError as exc:
            raise ConfigError(f"{self.source}: grid: {exc}") from None

    def f0(self, grid: FrequencyGrid) -> float:
        return float(self.data.get("f0_hz", grid.f_mid))

    def _touchstone(self, rel: str, grid: FrequencyGrid, ports: int, name: str) -> NPortNetwork:
        path = (self.base_dir / rel)
        if not path.is_file():
            raise ConfigError(f"{self.source}: {name}: touchstone file not found: {path}")
        try:
            doc = touchstone.read(path)
            net = touchstone.to_network(doc, grid, name)
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if net.n_ports != ports:
            raise ConfigError(f"{path}: {name} needs a {ports}-port file, got {net.n_ports}")
        return net

    def _line(self, d: dict, f0: float) -> comp.LineSpec:
        return comp.LineSpec(float(d["z_c"]), float(d["length_deg"]), float(d.get("f0_hz", f0)))

    def _two_port(self, name: str, d: dict, grid: FrequencyGrid, f0: float) -> NPortNetwork:
        kind, z = d["kind"], self.z_ref
        f0 = float(d.get("f0_hz", f0))
        if kind == "identity":
            net = identity(grid, z)
        elif kind in ("matched", "transistor"):
            s21 = comp.linear_phase_gain(grid, d.get("gain", 1.0), d.get("phase_deg_at_f0", 0.0), f0)
            net = comp.make_matched(s21, grid, z) if kind == "matched" else comp.make_transistor(s21, grid, z)
        elif kind == "line":
            net = comp.make_line(comp.LineSpec(float(d.get("z_c", z)), float(d["length_deg"]), f0), grid, z)
        elif kind == "phase_shifter":
            try:
                net = comp.make_phase_shifter(
                    comp.LineSpec(float(d.get("z_c", z)), float(d["length_deg"]), f0), grid, z)
            except ValueError as exc:
                raise ConfigError(f"{self.source}: blocks/{name}: {exc}") from None
        elif kind == "omn":
            stub = d.get("shunt_stub")
            para = d.get("parasitic")
            net = comp.synthesize_multisection_omn(
                [self._line(s, f0) for s in d["sections"]],
                None if stub is None else self._line(stub, f0), grid, z,
                None if para is None else (self._line(para["line"], f0), self._line(para["stub"], f0)))
        else:
            net = self._touchstone(d["path"], grid, 2, name)
        return net.with_name(name)

    def _coupler(self, name: str, d: dict, grid: FrequencyGrid) -> NPortNetwork:
        if d["kind"] == "touchstone":
            return self._touchstone(d["path"], grid, 4, name)
        theta = comp.linear_phase_theta(grid, d.get("phase_at_ref_deg", -90.0), d.get("f_ref_hz"))
        return comp.make_coupler(comp.CouplerSpec(theta), grid, self.z_ref).with_name(name)

    def topology(self) -> LmbaTopology:
        grid = self.grid()
        f0 = self.f0(grid)
        couplers = self.data.get("couplers", {})
        blocks = self.data.get("blocks", {})
        nets = {name: self._two_port(name, blocks.get(name, {"kind": "identity"}), grid, f0)
                for name in BLOCK_NAMES}
        return LmbaTopology(
            input_coupler=self._coupler("input_coupler", couplers.get("input", {"kind": "ideal"}), grid),
            output_coupler=self._coupler("output_coupler", couplers.get("output", {"kind": "ideal"}), grid),
            **nets)

    def drive_profile(self) -> DriveProfile:
        d = self.data.get("drive", {})
        return make_drive_profile(d.get("obo_db", 10.0), d.get("levels", 101),
                                  d.get("z_full_ratio", 2.0), np.deg2rad(d.get("theta_deg", 0.0)))

    def align_candidates(self) -> np.ndarray:
        a = self.data.get("align", {})
        try:
            return candidate_lengths(a.get("start_deg", 0.0), a.get("stop_deg", 360.0), a.get("step_deg", 0.5))
        except ValueError as exc:
            raise ConfigError(f"{self.source}: align: {exc}") from None

    def align_f0(self, grid: FrequencyGrid) -> float:
        return float(self.data.get("align", {}).get("f0_hz", self.f0(grid)))

    def with_phase_shifter(self, length_deg: float, f0: float) -> dict:
        """Copy of the document with the phase shifter set to a matched line."""
        data = json.loads(json.dumps(self.data))
        data.setdefault("blocks", {})["phase_shifter"] = {
            "kind": "phase_shifter", "length_deg": length_deg, "f0_hz": f0}
        return data
