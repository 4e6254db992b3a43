"""INI configuration files for parameter records and scenarios.

Sections ``[circuit]``, ``[control]``, ``[power_loop]`` and ``[scenario]``;
the per-unit bases ``omega1``, ``v_ll`` and ``s_base`` in ``[circuit]`` are
mandatory.  Events and tones are one per line::

    [scenario]
    duration = 2.0
    events =
        1.3 step_v_ref 0.1
        1.5 ramp_grid_freq -0.01 0.0
    tones =
        10 0.002 0.0
"""
from __future__ import annotations

import configparser
import io
import re
from dataclasses import fields

import numpy as np

from .errors import ConfigError
from .params import VsgParams
from .sim import ACTIONS, Event, Scenario, Tone

# config key -> VsgParams field, per section
PARAM_KEYS = {
    "circuit": {"omega1": "omega1", "x_s": "Xs", "x_g": "Xg", "r_g": "Rg", "b_c": "Bc",
                "x_f": "Xf", "b_f": "Bf", "v_g": "Vg"},
    "control": {"k_ip": "kip", "k_ii": "kii", "k_vp": "kvp", "k_vi": "kvi",
                "beta_v": "beta_v", "beta_k": "beta_k", "compensator": "compensator"},
    "power_loop": {"mode": "power_loop", "h": "H", "d": "D", "k_d": "kd", "k_q": "Kq", "omega_q": "omegaQ"},
}
EXTRA_KEYS = {"circuit": {"v_ll", "s_base"}, "control": {"kc_re", "kc_im"}, "power_loop": set()}
SCENARIO_KEYS = {"name", "duration", "p_ref", "q_ref", "v_ref", "v_grid", "dw_grid", "dt",
                 "sample_dt", "events", "tones", "tone_start"}
REQUIRED_BASE = ("omega1", "v_ll", "s_base")
SECTIONS = ("circuit", "control", "power_loop", "scenario")


def _key_lines(text: str) -> dict[tuple[str, str], int]:
    """Line number of every ``key =`` inside its section."""
    out, section = {}, None
    for no, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip().lower()
            continue
        m = re.match(r"([^\s=:#;][^=:]*?)\s*[=:]", line)
        if m and section is not None and not line[:1].isspace():
            out[(section, m.group(1).strip().lower())] = no
    return out


def _where(lines, section, key, source) -> str:
    no = lines.get((section, key))
    return f"{source}:{no}" if no else source


def _parse(text: str, source: str) -> tuple[configparser.ConfigParser, dict]:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    lines = _key_lines(text)
    for sec in cp.sections():
        if sec.lower() not in SECTIONS:
            raise ConfigError(f"{source}: unknown section [{sec}]; expected one of {SECTIONS}")
    return cp, lines


def _number(cp, lines, section, key, source, kind=float):
    raw = cp.get(section, key)
    try:
        if kind is bool:
            return cp.getboolean(section, key)
        val = kind(raw.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"{_where(lines, section, key, source)}: {key} = {raw!r} is not a valid "
                          f"{kind.__name__}") from None
    if kind in (float, complex) and not np.isfinite(val):
        raise ConfigError(f"{_where(lines, section, key, source)}: {key} must be finite")
    return val


def params_from_parser(cp: configparser.ConfigParser, lines: dict, source: str = "<config>") -> VsgParams:
    if not cp.has_section("circuit"):
        raise ConfigError(f"{source}: missing [circuit] section with the per-unit bases")
    for key in REQUIRED_BASE:
        if not cp.has_option("circuit", key):
            raise ConfigError(f"{source}: [circuit] must define {key}")
    values = {}
    kc = {}
    for section, mapping in PARAM_KEYS.items():
        if not cp.has_section(section):
            continue
        allowed = set(mapping) | EXTRA_KEYS[section]
        for key in cp.options(section):
            if key not in allowed:
                raise ConfigError(f"{_where(lines, section, key, source)}: unknown key {key!r} in "
                                  f"[{section}]; allowed: {sorted(allowed)}")
            if key in ("v_ll", "s_base"):
                if _number(cp, lines, section, key, source) <= 0:
                    raise ConfigError(f"{_where(lines, section, key, source)}: {key} must be positive")
                continue
            if key in ("kc_re", "kc_im"):
                kc[key] = _number(cp, lines, section, key, source)
                continue
            field = mapping[key]
            if field == "power_loop":
                values[field] = cp.get(section, key).strip().lower()
            elif field == "compensator":
                values[field] = _number(cp, lines, section, key, source, bool)
            elif field == "beta_v":
                values[field] = _number(cp, lines, section, key, source, complex)
            else:
                values[field] = _number(cp, lines, section, key, source)
    if kc and ("beta_v" in values or "beta_k" in values):
        key = "kc_re" if "kc_re" in kc else "kc_im"
        raise ConfigError(f"{_where(lines, 'control', key, source)}: give either kc_re/kc_im or "
                          "beta_v/beta_k, not both")
    try:
        p = VsgParams(**values)
        if kc:
            p = p.with_kc(complex(kc.get("kc_re", p.kc.real), kc.get("kc_im", p.kc.imag)))
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    return p


def _events(raw: str, where: str) -> tuple:
    out = []
    for k, line in enumerate(ln for ln in raw.splitlines() if ln.strip()):
        parts = line.split()
        if len(parts) < 2 or parts[1] not in ACTIONS:
            raise ConfigError(f"{where}: event line {k + 1} {line.strip()!r} must read "
                              f"'<time> <action> [value...]' with action in {ACTIONS}")
        try:
            t = float(parts[0])
            args = parts[2:]
            if parts[1] == "toggle_compensator":
                value = None
            elif parts[1] == "ramp_grid_freq":
                value = (float(args[0]), float(args[1]))
            elif parts[1] in ("set_kc", "set_beta_v"):
                value = complex(args[0])
            else:
                value = float(args[0])
        except (ValueError, IndexError):
            raise ConfigError(f"{where}: event line {k + 1} {line.strip()!r} has a malformed value") from None
        out.append(Event(t, parts[1], value))
    return tuple(out)


def _tones(raw: str, where: str) -> tuple:
    out = []
    for k, line in enumerate(ln for ln in raw.splitlines() if ln.strip()):
        try:
            vals = [float(v) for v in line.split()]
            out.append(Tone(*vals))
        except (ValueError, TypeError):
            raise ConfigError(f"{where}: tone line {k + 1} {line.strip()!r} must read "
                              "'<freq_hz> <amplitude> [phase]'") from None
    return tuple(out)


def scenario_from_parser(cp, lines, p: VsgParams, source: str = "<config>") -> Scenario:
    if not cp.has_section("scenario"):
        raise ConfigError(f"{source}: missing [scenario] section")
    kw = {}
    for key in cp.options("scenario"):
        where = _where(lines, "scenario", key, source)
        if key not in SCENARIO_KEYS:
            raise ConfigError(f"{where}: unknown key {key!r} in [scenario]; allowed: {sorted(SCENARIO_KEYS)}")
        if key == "name":
            kw["name"] = cp.get("scenario", key).strip()
        elif key == "events":
            kw["events"] = _events(cp.get("scenario", key), where)
        elif key == "tones":
            kw["tones"] = _tones(cp.get("scenario", key), where)
        else:
            field = {"p_ref": "P_ref", "q_ref": "Q_ref", "v_ref": "V_ref", "v_grid": "V_grid"}.get(key, key)
            kw[field] = _number(cp, lines, "scenario", key, source)
    if "duration" not in kw:
        raise ConfigError(f"{source}: [scenario] must define duration")
    try:
        return Scenario(p, **kw)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_params(path: str) -> VsgParams:
    text = _read(path)
    cp, lines = _parse(text, path)
    return params_from_parser(cp, lines, path)


def load_scenario(path: str) -> Scenario:
    text = _read(path)
    cp, lines = _parse(text, path)
    return scenario_from_parser(cp, lines, params_from_parser(cp, lines, path), path)


def loads(text: str, source: str = "<string>") -> tuple[VsgParams, Scenario | None]:
    cp, lines = _parse(text, source)
    p = params_from_parser(cp, lines, source)
    sc = scenario_from_parser(cp, lines, p, source) if cp.has_section("scenario") else None
    return p, sc


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


# --------------------------------------------------------------------------
# writing
# --------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return repr(v).strip("()")
    return repr(float(v))


def dumps(p: VsgParams, sc: Scenario | None = None, v_ll: float = 1.0, s_base: float = 1.0) -> str:
    """Serialize exactly: floats are written with ``repr`` so reloading is lossless."""
    cp = configparser.ConfigParser(interpolation=None)
    vals = {f.name: getattr(p, f.name) for f in fields(p)}
    for section, mapping in PARAM_KEYS.items():
        cp.add_section(section)
        for key, field in mapping.items():
            v = vals[field]
            cp.set(section, key, v if isinstance(v, str) else _fmt(v))
        if section == "circuit":
            cp.set(section, "v_ll", _fmt(v_ll))
            cp.set(section, "s_base", _fmt(s_base))
    if sc is not None:
        cp.add_section("scenario")
        if sc.name:
            cp.set("scenario", "name", sc.name)
        for key, field in (("duration", "duration"), ("p_ref", "P_ref"), ("q_ref", "Q_ref"),
                           ("v_ref", "V_ref"), ("v_grid", "V_grid"), ("dw_grid", "dw_grid"),
                           ("dt", "dt"), ("sample_dt", "sample_dt"), ("tone_start", "tone_start")):
            cp.set("scenario", key, _fmt(getattr(sc, field)))
        if sc.events:
            rows = []
            for ev in sc.events:
                if ev.action == "toggle_compensator":
                    val = ""
                elif ev.action == "ramp_grid_freq":
                    val = " ".join(_fmt(v) for v in ev.value)
                elif ev.action in ("set_kc", "set_beta_v"):
                    val = _fmt(complex(ev.value))
                else:
                    val = _fmt(ev.value)
                rows.append(f"{_fmt(ev.time)} {ev.action} {val}".rstrip())
            cp.set("scenario", "events", "\n" + "\n".join(rows))
        if sc.tones:
            cp.set("scenario", "tones", "\n" + "\n".join(
                f"{_fmt(t.freq_hz)} {_fmt(t.amplitude)} {_fmt(t.phase)}" for t in sc.tones))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
