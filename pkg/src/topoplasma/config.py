"""Flat INI-style run configuration with typed values and flag overrides.

Sections group keys per module ([plasma], [north], [south], [profile],
[disc], [flow], [dirac], [run]); values round-trip through text exactly
(bool/int/float/str inferred on parse).  CLI flags override file values.
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass

from .errors import InvalidParameter
from .params import PlasmaParams, RegularizationScheme

__all__ = ["RunConfig", "parse_config", "serialize_config", "plasma_from_section",
           "reg_from_string", "threads_from_env"]


def _parse_scalar(text: str):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        pass
    return t


def _render_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    command: str
    sections: dict

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str):
        try:
            return self.sections[section][key]
        except KeyError:
            raise InvalidParameter(f"missing config value [{section}] {key}")

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """overrides: {(section, key): value}; None values are ignored."""
        merged = {s: dict(kv) for s, kv in self.sections.items()}
        for (sec, key), val in overrides.items():
            if val is None:
                continue
            merged.setdefault(sec, {})[key] = val
        return RunConfig(command=self.command, sections=merged)

    def as_dict(self) -> dict:
        return {"command": self.command, "sections": self.sections}


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text)
    sections = {}
    command = ""
    for sec in cp.sections():
        kv = {k: _parse_scalar(v) for k, v in cp.items(sec)}
        if sec == "run" and "command" in kv:
            command = str(kv.pop("command"))
        sections[sec] = kv
    if "run" in sections and not sections["run"]:
        del sections["run"]
    return RunConfig(command=command, sections=sections)


def serialize_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    run_kv = dict(cfg.sections.get("run", {}))
    if cfg.command:
        run_kv = {"command": cfg.command, **run_kv}
    if run_kv:
        cp["run"] = {k: _render_scalar(v) for k, v in run_kv.items()}
    for sec, kv in cfg.sections.items():
        if sec == "run":
            continue
        cp[sec] = {k: _render_scalar(v) for k, v in kv.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def reg_from_string(spec: str | None, eta_default: float = 1e-2) -> RegularizationScheme:
    """Parse 'none', 'omega-decay:ETA' or 'plasma-decay:ETA'."""
    if not spec or spec == "none":
        return RegularizationScheme()
    if ":" in spec:
        kind, eta = spec.split(":", 1)
        return RegularizationScheme(kind=kind.strip(), eta=float(eta))
    return RegularizationScheme(kind=spec.strip(), eta=eta_default)


def plasma_from_section(cfg: RunConfig, section: str) -> PlasmaParams:
    kv = cfg.sections.get(section, {})
    for key in ("omega_c", "omega_p", "k_z"):
        if key not in kv:
            raise InvalidParameter(f"missing [{section}] {key}")
    reg = reg_from_string(str(kv.get("reg", "none")), float(kv.get("reg_eta", 1e-2)))
    return PlasmaParams(
        omega_c=float(kv["omega_c"]),
        omega_p=float(kv["omega_p"]),
        k_z=float(kv["k_z"]),
        reg=reg,
    )


def threads_from_env(cli_value: int | None) -> int:
    if cli_value is not None:
        return max(1, cli_value)
    env = os.environ.get("TOPOPLASMA_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidParameter("TOPOPLASMA_THREADS must be an integer")
    return 1
