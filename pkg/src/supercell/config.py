"""
Flat sectioned ``key = value`` configuration files.

Sections are ``[potential]``, ``[study]`` and ``[output]``; list values are
comma separated. Serialization is canonical, so parse/serialize round-trips
byte-identically.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from pathlib import Path

from .harness import StudyConfig


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(int(t) for t in items)


def _fmt_list(values) -> str:
    return ", ".join(str(v) for v in values)


def _int(text: str) -> int:
    return int(text.strip())


def _float(text: str) -> float:
    return float(text.strip())


def _str(text: str) -> str:
    value = text.strip()
    if not value:
        raise ValueError("empty value")
    return value


# (section, key) -> (StudyConfig field, parser, formatter)
FIELDS = {
    ("potential", "vper"): ("vper", _str, str),
    ("potential", "vper_scale"): ("vper_scale", _float, repr),
    ("potential", "defect"): ("defect", _str, str),
    ("potential", "defect_scale"): ("defect_scale", _float, repr),
    ("study", "L"): ("L_list", _int_list, _fmt_list),
    ("study", "N"): ("N_list", _int_list, _fmt_list),
    ("study", "quadrature_N"): ("quadrature_N_list", _int_list, _fmt_list),
    ("study", "M"): ("M_list", _int_list, _fmt_list),
    ("study", "reference"): ("reference", _int_list, _fmt_list),
    ("study", "target"): ("target", _float, repr),
    ("study", "margin"): ("margin", _float, repr),
    ("study", "defect_tol"): ("defect_tol", _float, repr),
    ("study", "grid_h"): ("grid_h", _float, repr),
    ("study", "unit_cell_modes"): ("unit_cell_modes", _int, str),
    ("study", "q_count"): ("q_count", _int, str),
    ("study", "n_bands"): ("n_bands", _int, str),
    ("study", "gap_index"): ("gap_index", _int, str),
    ("study", "baseline"): ("baseline", _str, str),
    ("study", "transform"): ("transform", _str, str),
    ("study", "workers"): ("workers", _int, str),
    ("output", "dir"): ("out_dir", _str, str),
}
SECTIONS = ("potential", "study", "output")

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _locate(text: str) -> dict:
    """Map (section, key) and (section, None) to 1-based line numbers."""
    where = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            where.setdefault((section, None), lineno)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            where.setdefault((section, m.group(1).strip()), lineno)
    return where


def parse_config(text: str, source: str = "<config>", base: StudyConfig | None = None,
                 extra_sections: tuple = ()) -> StudyConfig:
    """Parse config text over ``base`` (defaults when omitted).

    Sections listed in ``extra_sections`` are ignored (manifests carry extra ones).
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    where = _locate(text)
    values = {}
    for section in parser.sections():
        if section in extra_sections:
            continue
        if section not in SECTIONS:
            line = where.get((section, None), "?")
            raise ConfigError(f"{source}:{line}: unknown section [{section}]")
        for key, raw in parser.items(section):
            line = where.get((section, key), "?")
            spec = FIELDS.get((section, key))
            if spec is None:
                raise ConfigError(f"{source}:{line}: [{section}] unknown key {key!r}")
            name, parse, _ = spec
            try:
                values[name] = parse(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}:{line}: [{section}] {key}: invalid value {raw!r} ({exc})") from exc
    try:
        return dataclasses.replace(base or StudyConfig(), **values)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_config(path) -> StudyConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    return parse_config(text, source=str(path))


def config_to_text(cfg: StudyConfig) -> str:
    lines = []
    for section in SECTIONS:
        if lines:
            lines.append("")
        lines.append(f"[{section}]")
        for (sec, key), (name, _, fmt) in FIELDS.items():
            if sec == section:
                lines.append(f"{key} = {fmt(getattr(cfg, name))}")
    return "\n".join(lines) + "\n"
