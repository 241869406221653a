"""Flat TOML config files for simulations and Monte-Carlo designs.

Only top-level ``key = value`` pairs are accepted; unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import fields
from importlib import resources
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .dgp import DgpConfig
from .errors import ConfigError, ParseError
from .montecarlo import DEFAULT_KINDS, McCell, McDesign

DGP_KEYS = tuple(f.name for f in fields(DgpConfig))
# per-cell / per-method keys a design sets itself
_DESIGN_FIXED = {"T", "p1", "p2", "row_strengths", "col_strengths", "factor_kind", "seed"}
DESIGN_KEYS = (
    "cells", "replications", "methods", "base_seed", "K", "score_selected",
    "mpca_factor_kind", "mpanic_factor_kind",
) + tuple(k for k in DGP_KEYS if k not in _DESIGN_FIXED)


def _read(path) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"{path}: tables are not allowed (found {nested}); use flat keys")
    return data


def _check_keys(data: dict, allowed, path) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; allowed keys are {sorted(allowed)}")


def dgp_config_from_dict(data: dict, source="config") -> DgpConfig:
    _check_keys(data, DGP_KEYS, source)
    try:
        return DgpConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_dgp_config(path) -> DgpConfig:
    return dgp_config_from_dict(_read(path), path)


def load_design(path) -> McDesign:
    data = _read(path)
    _check_keys(data, DESIGN_KEYS, path)
    base = {k: data.pop(k) for k in list(data) if k in DGP_KEYS}
    kinds = dict(DEFAULT_KINDS)
    if "mpca_factor_kind" in data:
        kinds["mPCA"] = data.pop("mpca_factor_kind")
    if "mpanic_factor_kind" in data:
        kinds["mPANIC"] = data.pop("mpanic_factor_kind")
    cells = data.pop("cells", None)
    if cells is not None:
        if not isinstance(cells, list) or not all(isinstance(c, str) for c in cells):
            raise ConfigError(f"{path}: cells must be a list of strings like \"T=50,p=30,case=i\"")
        data["cells"] = tuple(McCell.parse(c) for c in cells)
    try:
        base_cfg = DgpConfig(**base) if base else DgpConfig()
        for kind in kinds.values():
            base_cfg.with_(factor_kind=kind)
        return McDesign(base=base_cfg, factor_kinds=tuple(kinds.items()), **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def bundled_design_path(name: str = "table1_desk.toml") -> Path:
    return Path(str(resources.files("matfactor") / "data" / name))


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {type(v).__name__} to TOML")


def dump_flat_toml(data: dict) -> str:
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in data.items())
