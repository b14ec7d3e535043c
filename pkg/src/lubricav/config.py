"""Case configuration files: INI sections flattened to dotted keys.

Example::

    [case]
    name = sinusoidal_1d
    family = rt0

    [mesh]
    dim = 1
    x0 = -0.0625
    x1 = 0.0625
    n = 1000

Boundary parts listed under ``[boundary]`` get a prescribed pressure; a
tag that is absent there is an impermeable wall.  ``time.steps``, when
given, fixes ``tau = (end - t0) / steps`` and wins over ``time.tau``.
"""
from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

from .activeset import PdasConfig
from .fem import ElementFamily
from .laws import ConstantSpeed, law_params, thickness_from_params
from .mesh import SIDES, BoundaryTag
from .simulation import CaseConfig, MeshSpec

SCHEMA = {
    "case.name": str,
    "case.family": str,
    "case.units": str,
    "mesh.dim": int,
    "mesh.x0": float,
    "mesh.x1": float,
    "mesh.n": int,
    "mesh.y0": float,
    "mesh.y1": float,
    "mesh.nx": int,
    "mesh.ny": int,
    "mesh.left": str,
    "mesh.right": str,
    "mesh.bottom": str,
    "mesh.top": str,
    "fluid.viscosity": float,
    "fluid.speed": float,
    "thickness.law": str,
    "thickness.mean": float,
    "thickness.amplitude": float,
    "thickness.wavelength": float,
    "thickness.frequency": float,
    "thickness.value": float,
    "boundary.inlet": float,
    "boundary.outlet": float,
    "boundary.other": float,
    "time.t0": float,
    "time.end": float,
    "time.tau": float,
    "time.steps": int,
    "time.steady_tol": float,
    "time.max_steps": int,
    "initial.theta": float,
    "initial.theta_in": float,
    "pdas.c": float,
    "pdas.max_iter": int,
    "fem.quad_degree": int,
}

SECTION_ORDER = ("case", "mesh", "fluid", "thickness", "boundary", "time", "initial", "pdas", "fem")


class ConfigError(ValueError):
    """A configuration file or override is malformed; ``messages`` lists every problem."""

    def __init__(self, messages):
        self.messages = [messages] if isinstance(messages, str) else list(messages)
        super().__init__("\n".join(self.messages))


@dataclass
class RawConfig:
    values: Dict[str, str]
    lines: Dict[str, int]
    source: str = "<config>"

    def where(self, key):
        line = self.lines.get(key)
        if line is None:
            line = self.lines.get(key.split(".")[0])
        return f"{self.source}:{line}" if line is not None else self.source


def parse_text(text: str, source="<config>") -> RawConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, val in parser.items(section):
            values[f"{section}.{key}"] = val.strip()

    lines = {}
    section = None
    for no, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            lines.setdefault(section, no)
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section:
            lines[f"{section}.{m.group(1).strip()}"] = no

    unknown = sorted(k for k in values if k not in SCHEMA)
    if unknown:
        raise ConfigError([f"{source}:{lines.get(k, '?')}: unknown key {k!r}" for k in unknown])
    return RawConfig(values, lines, source)


def read_file(path) -> RawConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_text(text, str(path))


def resolve_key(key: str) -> str:
    """Full dotted key for ``key``; a unique suffix such as ``steps`` is accepted."""
    if key in SCHEMA:
        return key
    matches = [k for k in SCHEMA if k.split(".", 1)[1] == key or k.endswith("." + key)]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise ConfigError(f"unknown configuration key {key!r}")
    raise ConfigError(f"ambiguous configuration key {key!r}: matches {sorted(matches)}")


def apply_overrides(raw: RawConfig, overrides: List[str]) -> RawConfig:
    values = dict(raw.values)
    errors = []
    for item in overrides:
        if "=" not in item:
            errors.append(f"override {item!r}: expected key=value")
            continue
        key, val = (s.strip() for s in item.split("=", 1))
        try:
            values[resolve_key(key)] = val
        except ConfigError as exc:
            errors.extend(exc.messages)
    if errors:
        raise ConfigError(errors)
    return RawConfig(values, raw.lines, raw.source)


def _typed(raw: RawConfig, errors):
    out = {}
    for key, val in raw.values.items():
        kind = SCHEMA[key]
        try:
            out[key] = kind(val) if kind is not int else _to_int(val)
        except ValueError:
            errors.append(f"{raw.where(key)}: {key}: cannot read {val!r} as {kind.__name__}")
    return out


def _to_int(val):
    f = float(val)
    if f != int(f):
        raise ValueError(val)
    return int(f)


def build_case(raw: RawConfig) -> CaseConfig:
    """Turn a parsed file into a :class:`CaseConfig`; raises :class:`ConfigError`."""
    errors: List[str] = []
    v = _typed(raw, errors)
    if errors:
        raise ConfigError(errors)

    def need(key):
        if key not in v:
            errors.append(f"{raw.where(key)}: missing required key {key}")
            return None
        return v[key]

    dim = need("mesh.dim")
    mesh = None
    if dim == 1:
        x0, x1, n = need("mesh.x0"), need("mesh.x1"), need("mesh.n")
        extra = [k for k in ("mesh.y0", "mesh.y1", "mesh.nx", "mesh.ny") + tuple(f"mesh.{s}" for s in SIDES) if k in v]
        if extra:
            errors.append(f"{raw.where(extra[0])}: keys {extra} only apply to 2D meshes")
        if None not in (x0, x1, n):
            mesh = MeshSpec(1, (x0,), (x1,), (n,))
    elif dim == 2:
        vals = [need(k) for k in ("mesh.x0", "mesh.x1", "mesh.y0", "mesh.y1", "mesh.nx", "mesh.ny")]
        tags = []
        for side in SIDES:
            name = v.get(f"mesh.{side}")
            if name is None:
                errors.append(f"{raw.where('mesh')}: missing boundary tag mesh.{side}")
                continue
            try:
                tags.append((side, BoundaryTag(name.lower())))
            except ValueError:
                errors.append(f"{raw.where('mesh.' + side)}: mesh.{side}: unknown tag {name!r} (inlet, outlet, other)")
        if None not in vals and len(tags) == 4:
            x0, x1, y0, y1, nx, ny = vals
            mesh = MeshSpec(2, (x0, y0), (x1, y1), (nx, ny), tuple(tags))
    elif dim is not None:
        errors.append(f"{raw.where('mesh.dim')}: mesh.dim: must be 1 or 2, got {dim}")

    try:
        family = ElementFamily(v.get("case.family", "rt0").lower())
    except ValueError:
        errors.append(f"{raw.where('case.family')}: case.family: unknown family {v['case.family']!r} (rt0, th)")
        family = None

    law = None
    kind = need("thickness.law")
    if kind is not None:
        params = {k.split(".", 1)[1]: val for k, val in v.items() if k.startswith("thickness.") and k != "thickness.law"}
        try:
            law = thickness_from_params(kind, params)
        except ValueError as exc:
            errors.append(f"{raw.where('thickness.law')}: thickness: {exc}")

    pressure = {}
    for tag in BoundaryTag:
        key = f"boundary.{tag.value}"
        if key in v:
            pressure[tag] = v[key]

    t0 = v.get("time.t0", 0.0)
    t_end = need("time.end")
    tau = v.get("time.tau")
    steps = v.get("time.steps")
    if steps is not None:
        if steps < 1:
            errors.append(f"{raw.where('time.steps')}: time.steps: must be positive, got {steps}")
        elif t_end is not None:
            tau = (t_end - t0) / steps
    if tau is None and "time.steps" not in v:
        errors.append(f"{raw.where('time')}: need time.tau or time.steps")

    try:
        pdas = PdasConfig(c=v.get("pdas.c", 1.0), max_iter=v.get("pdas.max_iter", 200))
    except ValueError as exc:
        errors.append(f"{raw.where('pdas')}: pdas: {exc}")
        pdas = None

    viscosity = need("fluid.viscosity")
    if errors:
        raise ConfigError(errors)

    case = CaseConfig(
        name=v.get("case.name", Path(raw.source).stem),
        mesh=mesh,
        viscosity=viscosity,
        thickness=law,
        boundary_pressure=pressure,
        tau=tau,
        t_end=t_end,
        t0=t0,
        speed=ConstantSpeed(v.get("fluid.speed", 0.0)),
        family=family,
        theta0=v.get("initial.theta", 1.0),
        theta_in=v.get("initial.theta_in", 1.0),
        pdas=pdas,
        steady_tol=v.get("time.steady_tol", 1e-12),
        max_steps=v.get("time.max_steps", 100000),
        units=v.get("case.units", "SI"),
        quad_degree=v.get("fem.quad_degree"),
    )
    problems = case.validate()
    if problems:
        raise ConfigError([f"{raw.where(p.split(':', 1)[0].strip())}: {p}" for p in problems])
    return case


def _fmt(x):
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def case_to_flat(case: CaseConfig) -> Dict[str, str]:
    """Flat dotted-key view of a case (inverse of :func:`build_case`)."""
    if callable(case.theta0):
        raise ValueError("only constant initial saturation can be written to a config file")
    if not isinstance(case.speed, ConstantSpeed):
        raise ValueError("only constant sliding speed can be written to a config file")
    out = {
        "case.name": case.name,
        "case.family": case.family.value,
        "case.units": case.units,
        "mesh.dim": case.mesh.dim,
    }
    m = case.mesh
    if m.dim == 1:
        out.update({"mesh.x0": float(m.lower[0]), "mesh.x1": float(m.upper[0]), "mesh.n": int(m.cells[0])})
    else:
        out.update({
            "mesh.x0": float(m.lower[0]), "mesh.x1": float(m.upper[0]),
            "mesh.y0": float(m.lower[1]), "mesh.y1": float(m.upper[1]),
            "mesh.nx": int(m.cells[0]), "mesh.ny": int(m.cells[1]),
        })
        for side, tag in m.side_tags:
            out[f"mesh.{side}"] = BoundaryTag(tag).value
    out["fluid.viscosity"] = float(case.viscosity)
    out["fluid.speed"] = float(case.speed.value)
    kind, params = law_params(case.thickness)
    out["thickness.law"] = kind
    out.update({f"thickness.{k}": float(val) for k, val in params.items()})
    for tag in BoundaryTag:
        if tag in case.boundary_pressure:
            out[f"boundary.{tag.value}"] = float(case.boundary_pressure[tag])
    out.update({
        "time.t0": float(case.t0),
        "time.end": float(case.t_end),
        "time.tau": float(case.tau),
        "time.steady_tol": float(case.steady_tol),
        "time.max_steps": int(case.max_steps),
        "initial.theta": float(case.theta0),
        "initial.theta_in": float(case.theta_in),
        "pdas.c": float(case.pdas.c),
        "pdas.max_iter": int(case.pdas.max_iter),
    })
    if case.quad_degree is not None:
        out["fem.quad_degree"] = int(case.quad_degree)
    return {k: _fmt(val) for k, val in out.items()}


def flat_to_text(flat: Dict[str, str]) -> str:
    buf = io.StringIO()
    sections = sorted({k.split(".", 1)[0] for k in flat}, key=lambda s: (SECTION_ORDER.index(s) if s in SECTION_ORDER else 99, s))
    for i, sec in enumerate(sections):
        if i:
            buf.write("\n")
        buf.write(f"[{sec}]\n")
        for key in SCHEMA:
            if key.startswith(sec + ".") and key in flat:
                buf.write(f"{key.split('.', 1)[1]} = {flat[key]}\n")
    return buf.getvalue()


def case_to_text(case: CaseConfig) -> str:
    return flat_to_text(case_to_flat(case))


def case_from_text(text: str, source="<config>", overrides: Optional[List[str]] = None) -> CaseConfig:
    raw = parse_text(text, source)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return build_case(raw)


def load_case(path, overrides: Optional[List[str]] = None) -> CaseConfig:
    raw = read_file(path)
    if overrides:
        raw = apply_overrides(raw, overrides)
    return build_case(raw)


def shipped_config(name) -> Path:
    """Path of a bundled benchmark config file."""
    return Path(__file__).with_name("data") / f"{name}.cfg"
