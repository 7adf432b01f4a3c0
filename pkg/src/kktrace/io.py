"""Model, scenario and report files.

Models and scenarios are JSON objects carrying ``schema_version``.  Every
schema problem is reported as a :class:`SchemaError` whose message starts with
the line of the offending key.  Reports are flat CSV plus one JSON summary;
floats are written with ``repr`` so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import lie
from .errors import SchemaError
from .geometry import BaseGeometry, ConnectionSpec, Model, TrigSeries

SCHEMA_VERSION = 1
SUPPORTED_VERSIONS = (1,)

# documented ranges for scenario tolerances
TOLERANCE_RANGES = {
    "newton_tol": (1e-13, 1e-6),
    "tol": (1e-13, 1e-6),
    "target_rel_error": (1e-4, 0.5),
}


def data_dir() -> Path:
    return Path(str(resources.files("kktrace") / "data"))


def _line_of(text: str, key: Optional[str]) -> int:
    if key is None:
        return 1
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else 1


def _parse(text: str) -> dict:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(exc.msg, exc.lineno) from None
    if not isinstance(raw, dict):
        raise SchemaError("top level must be an object", 1)
    return raw


def _check_version(raw: dict, text: str):
    if "schema_version" not in raw:
        raise SchemaError("missing 'schema_version'", 1)
    v = raw["schema_version"]
    if v not in SUPPORTED_VERSIONS:
        raise SchemaError(f"unsupported schema_version {v!r} (supported: {list(SUPPORTED_VERSIONS)})",
                          _line_of(text, "schema_version"))


def _require(raw, key, text, kind=None):
    if key not in raw:
        raise SchemaError(f"missing {key!r}", 1)
    val = raw[key]
    if kind is not None and not isinstance(val, kind):
        raise SchemaError(f"{key!r} has the wrong type ({type(val).__name__})", _line_of(text, key))
    return val


# ------------------------------------------------------------------- models

def model_from_dict(raw: dict, text: str = "", base: Optional[Path] = None) -> Model:
    """Build a :class:`Model`; ``text`` is only used to locate errors."""
    try:
        grp = raw.get("group", "U(1)")
        if isinstance(grp, str):
            g = lie.builtin_group(grp)
        elif isinstance(grp, dict) and "file" in grp:
            path = Path(grp["file"])
            if not path.is_absolute():
                cand = (base or data_dir() / "roots") / path
                path = cand if cand.exists() else data_dir() / "roots" / path
            g = lie.load_group(path)
        elif isinstance(grp, dict):
            g = lie.group_from_dict(grp)
        else:
            raise SchemaError("'group' must be a name or an object")
    except SchemaError as exc:
        if exc.line is None:
            raise SchemaError(str(exc), _line_of(text, "group")) from None
        raise
    except Exception as exc:
        raise SchemaError(str(exc), _line_of(text, "group")) from None

    L = float(raw.get("circumference", 2 * math.pi))
    series = {}
    for key in ("lapse", "shift", "metric", "potential"):
        try:
            series[key] = TrigSeries.from_dict(raw.get(key, 0.0 if key in ("shift", "potential") else 1.0), L)
        except Exception as exc:
            raise SchemaError(f"{key}: {exc}", _line_of(text, key)) from None
    try:
        geom = BaseGeometry(L, series["lapse"], series["shift"], series["metric"],
                            series["potential"], int(raw.get("grid", 256)))
    except Exception as exc:
        raise SchemaError(str(exc), _line_of(text, "lapse")) from None
    try:
        comps = raw.get("connection")
        conn = ConnectionSpec.zero(g, L) if comps is None else \
            ConnectionSpec(tuple(TrigSeries.from_dict(c, L) for c in comps), g)
    except Exception as exc:
        raise SchemaError(f"connection: {exc}", _line_of(text, "connection")) from None
    lam = raw.get("lambda0")
    if lam is None:
        lam = [1.0] if g.abelian else lie.fundamental_weights(g)[0]
    try:
        return Model(geom, conn, lam, int(raw.get("charge_level", 1)), raw.get("name", "model"))
    except Exception as exc:
        raise SchemaError(str(exc), _line_of(text, "lambda0")) from None


def load_model(path) -> Model:
    path = Path(path)
    text = path.read_text()
    raw = _parse(text)
    _check_version(raw, text)
    return model_from_dict(raw, text, path.parent)


def model_to_json(model: Model) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **model.to_dict()}, indent=2)


# ---------------------------------------------------------------- scenarios

@dataclass
class Scenario:
    name: str
    model: Model
    E: float
    m_values: list
    seed: int
    test_function: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=dict)
    orbits: Optional[dict] = None
    volume: Optional[dict] = None
    factorization: Optional[dict] = None
    threshold: Optional[dict] = None
    checks: list = field(default_factory=list)
    output: str = "out"
    path: Optional[Path] = None
    raw: dict = field(default_factory=dict)


def _check_tolerances(section: dict, text: str):
    for key, (lo, hi) in TOLERANCE_RANGES.items():
        if key in section:
            v = section[key]
            if not isinstance(v, (int, float)) or not lo <= v <= hi:
                raise SchemaError(f"{key}={v!r} outside the documented range [{lo}, {hi}]",
                                  _line_of(text, key))


def scenario_from_text(text: str, path: Optional[Path] = None) -> Scenario:
    raw = _parse(text)
    _check_version(raw, text)
    known = {"schema_version", "name", "model", "E", "m_range", "m_values", "seed",
             "test_function", "spectrum", "orbits", "volume", "factorization", "threshold",
             "checks", "output", "description"}
    for key in raw:
        if key not in known:
            raise SchemaError(f"unknown key {key!r}", _line_of(text, key))
    if "seed" not in raw:
        raise SchemaError("missing 'seed' (an RNG seed is mandatory)", 1)
    seed = raw["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise SchemaError("'seed' must be a non-negative integer", _line_of(text, "seed"))

    mref = _require(raw, "model", text)
    base = path.parent if path is not None else data_dir() / "scenarios"
    if isinstance(mref, str):
        mpath = Path(mref)
        if not mpath.is_absolute():
            cand = base / mpath
            mpath = cand if cand.exists() else data_dir() / "models" / mpath
        if not mpath.exists():
            raise SchemaError(f"model file {mref!r} not found", _line_of(text, "model"))
        model = load_model(mpath)
    elif isinstance(mref, dict):
        model = model_from_dict(mref, text, base)
    else:
        raise SchemaError("'model' must be a file name or an object", _line_of(text, "model"))

    E = _require(raw, "E", text, (int, float))
    if not E > 0:
        raise SchemaError("'E' must be positive", _line_of(text, "E"))
    if "m_values" in raw:
        ms = raw["m_values"]
        if not isinstance(ms, list) or not all(isinstance(m, int) and m >= 1 for m in ms):
            raise SchemaError("'m_values' must be a list of positive integers", _line_of(text, "m_values"))
    else:
        mr = _require(raw, "m_range", text, list)
        if len(mr) != 2 or not all(isinstance(m, int) for m in mr) or not 1 <= mr[0] <= mr[1]:
            raise SchemaError("'m_range' must be [m_min, m_max] with 1 <= m_min <= m_max",
                              _line_of(text, "m_range"))
        ms = list(range(mr[0], mr[1] + 1))
    for sec in ("test_function", "spectrum", "orbits", "volume", "factorization", "threshold"):
        if sec in raw and not isinstance(raw[sec], dict):
            raise SchemaError(f"{sec!r} must be an object", _line_of(text, sec))
        if sec in raw:
            _check_tolerances(raw[sec], text)
    checks = raw.get("checks", [])
    if not isinstance(checks, list):
        raise SchemaError("'checks' must be a list", _line_of(text, "checks"))
    for c in checks:
        if not isinstance(c, dict) or "quantity" not in c or "criterion" not in c:
            raise SchemaError("each check needs 'quantity' and 'criterion'", _line_of(text, "checks"))
    return Scenario(
        name=raw.get("name", path.stem if path else "scenario"), model=model, E=float(E),
        m_values=ms, seed=seed, test_function=raw.get("test_function", {}),
        spectrum=raw.get("spectrum", {}), orbits=raw.get("orbits"), volume=raw.get("volume"),
        factorization=raw.get("factorization"), threshold=raw.get("threshold"),
        checks=checks, output=raw.get("output", "out"), path=path, raw=raw)


def load_scenario(path) -> Scenario:
    path = Path(path)
    return scenario_from_text(path.read_text(), path)


def bundled_scenarios() -> list:
    return sorted(p for p in (data_dir() / "scenarios").glob("*.json"))


def resolve_scenario(name_or_path) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    cand = data_dir() / "scenarios" / f"{name_or_path}.json"
    if cand.exists():
        return cand
    raise FileNotFoundError(f"no scenario file or bundled scenario named {name_or_path!r}")


# ------------------------------------------------------------------ reports

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    text = Path(path).read_text()
    return _parse(text)


# ------------------------------------------------------------------- golden

def flatten(obj: Any, prefix: str = "") -> dict:
    """Flatten nested dicts/lists into ``{"a.b.0": leaf}``."""
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            out.update(flatten(v, f"{prefix}{i}."))
    else:
        out[prefix[:-1]] = obj
    return out


def compare_golden(actual: dict, golden: dict, rtol: float = 1e-9, atol: float = 1e-9) -> list:
    """Return human-readable differences between two nested documents."""
    a, g = flatten(actual), flatten(golden)
    diffs = []
    for key in sorted(set(a) | set(g)):
        if key not in a:
            diffs.append(f"{key}: missing from output (golden {g[key]!r})")
        elif key not in g:
            diffs.append(f"{key}: not in golden file (output {a[key]!r})")
        else:
            x, y = a[key], g[key]
            if isinstance(x, bool) or isinstance(y, bool) or not (
                    isinstance(x, (int, float)) and isinstance(y, (int, float))):
                if x != y:
                    diffs.append(f"{key}: output {x!r} != golden {y!r}")
            elif not abs(x - y) <= atol + rtol * abs(y):
                diffs.append(f"{key}: output {x!r} differs from golden {y!r}")
    return diffs
