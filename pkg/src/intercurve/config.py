"""Run configuration: TOML files validated against a fixed schema.

Errors name the offending field as a dotted path, e.g.
``glue.lambda[2]: expected a positive number``.
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigError

COMMANDS = ("cone-check", "prop31", "curvature", "glue-scan", "corollary43", "holder", "double-sweep")


# -- field checkers: (value, path) -> normalized value -----------------------


def _int(lo=None):
    def check(v, path):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(path, f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            raise ConfigError(path, f"must be >= {lo}, got {v}")
        return v

    return check


def _real(positive=False, open_unit=False):
    def check(v, path):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(path, f"expected a number, got {v!r}")
        v = float(v)
        if positive and not v > 0:
            raise ConfigError(path, f"expected a positive number, got {v!r}")
        if open_unit and not 0 < v < 1:
            raise ConfigError(path, f"must lie strictly between 0 and 1, got {v!r}")
        return v

    return check


def _text(choices=None):
    def check(v, path):
        if not isinstance(v, str):
            raise ConfigError(path, f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise ConfigError(path, f"must be one of {', '.join(choices)}; got {v!r}")
        return v

    return check


def _list(item, nonempty=True, increasing=False):
    def check(v, path):
        if not isinstance(v, list):
            raise ConfigError(path, f"expected a list, got {v!r}")
        if nonempty and not v:
            raise ConfigError(path, "must not be empty")
        out = [item(x, f"{path}[{k}]") for k, x in enumerate(v)]
        if increasing and any(b <= a for a, b in zip(out, out[1:])):
            raise ConfigError(path, "must be strictly increasing")
        return out

    return check


def _matrix(v, path):
    rows = _list(_list(_any_scalar))(v, path)
    n = len(rows)
    for k, row in enumerate(rows):
        if len(row) != n:
            raise ConfigError(f"{path}[{k}]", f"expected {n} entries (square matrix), got {len(row)}")
    return rows


def _any_scalar(v, path):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ConfigError(path, f"expected a number or an expression string, got {v!r}")
    return v if isinstance(v, str) else float(v)


def _interval_list(v, path):
    out = _list(_list(_real()))(v, path)
    for k, iv in enumerate(out):
        if len(iv) != 2 or iv[0] > iv[1]:
            raise ConfigError(f"{path}[{k}]", "expected [lo, hi] with lo <= hi")
    return out


def _point_list(v, path):
    return _list(_list(_real()))(v, path)


CHART = {
    "dim": (_int(2), None),
    "variables": (_list(_text()), None),
    "domain": (_interval_list, None),
    "collar_axis": (_int(0), None),
    "g": (_matrix, None),
    "g_tilde": (_matrix, None),
    "collar_width": (_real(positive=True), None),
    "points": (_point_list, None),
}

SCHEMA = {
    "command": (_text(COMMANDS), None),
    "seed": (_int(0), 0),
    "output": (_text(), None),
    "geometry": {
        "preset": (_text(), None),
        "chart": CHART,
    },
    "cone": {
        "m": (_list(_int(1)), None),
        "method": (_text(("auto", "exact_m1", "exact_mn1", "sweep", "brute_force")), "auto"),
        "restarts": (_int(1), 8),
        "samples": (_int(1), None),
        "sweep_tol": (_real(positive=True), 1e-13),
    },
    "cutoffs": {
        "chi_c": (_real(), 0.0),
        "beta_order": (_int(5), 5),
    },
    "glue": {
        "lambda": (_list(_real(positive=True), increasing=True), [1.0, 2.0, 4.0, 8.0, 12.0]),
        "n_inner": (_int(2), 24),
        "n_outer": (_int(2), 8),
        "n_far": (_int(0), 3),
        "tangential_per_axis": (_int(1), 2),
        "epsilon": (_real(positive=True), 0.1),
        "alpha": (_real(open_unit=True), 0.5),
        "holder_lambda": (_list(_real(positive=True), increasing=True), [2.0, 4.0, 8.0, 16.0]),
        "holder_points": (_int(2), 160),
    },
    "double": {
        "epsilon": (_list(_real(positive=True)), [0.1, 0.05, 0.01]),
        "theta_count": (_int(2), 32),
        "collar_trim": (_real(), None),
        "boundary_h": (_list(_matrix), None),
        "ambient_kappa": (_real(), 0.0),
    },
    "prop31": {
        "trials": (_int(1), 500),
        "dims": (_list(_int(2)), [3, 4]),
        "exclusion": (_real(positive=True), 1e-6),
    },
    "tolerances": {
        "strict": (_real(positive=True), 1e-8),
        "curvature": (_real(positive=True), 1e-8),
    },
}


def _validate(data, schema, path):
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a table, got {data!r}")
    out = {}
    for key in data:
        if key not in schema:
            where = f"{path}.{key}" if path else key
            raise ConfigError(where, "unknown key")
    for key, rule in schema.items():
        where = f"{path}.{key}" if path else key
        if isinstance(rule, dict):
            if key in data:
                out[key] = _validate(data[key], rule, where)
            elif rule is not CHART:
                out[key] = _validate({}, rule, where)
            continue
        check, default = rule
        if key in data:
            out[key] = check(data[key], where)
        else:
            out[key] = copy.deepcopy(default)
    return out


@dataclass
class RunConfig:
    """Validated configuration; ``data`` mirrors the TOML layout with all
    defaults filled in."""

    data: dict
    source: str = "<defaults>"

    @classmethod
    def from_dict(cls, data, source="<dict>"):
        return cls(_validate(data, SCHEMA, ""), source)

    @classmethod
    def load(cls, path):
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError:
            raise ConfigError(str(path), "config file not found") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(path), f"not valid TOML ({exc})") from None
        return cls.from_dict(raw, str(path))

    def __getitem__(self, key):
        return self.data[key]

    def set(self, dotted, value):
        """Override one field, re-validating the whole configuration."""
        raw = copy.deepcopy(self.data)
        node = raw
        parts = dotted.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
        self.data = _validate(_strip_none(raw), SCHEMA, "")

    def digest(self) -> str:
        text = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _strip_none(d):
    if isinstance(d, dict):
        return {k: _strip_none(v) for k, v in d.items() if v is not None}
    return d
