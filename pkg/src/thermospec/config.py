"""TOML analysis configurations.

A configuration names a system, a potential on it, the analyses to run and
their numeric parameters. Every semantic error is reported with the line of
the offending key, so ``validate`` output points straight at the problem.

Grammar (all tables optional except ``system`` and ``potential``)::

    [system]
    kind = "full" | "sft" | "map" | "glued"
    symbols = 2                      # full
    matrix = [[1, 1], [1, 0]]        # sft
    slopes = [2, 4]                  # map, increasing full branches
    branches = [{left = 0, right = 0.5, map = "2*x", factor = "2"}, ...]   # map
    parts = [{kind = "full", symbols = 2}, ...]                             # glued

    [potential]
    kind = "table" | "geometric" | "formula"
    table = [0, 1]                   # depth = number of nested levels; inf allowed
    formula = "log(1 + x)"           # interval maps only
    [potential.discontinuities]
    points = [0.5, "0(1)"]
    words = [[0, 1]]

    [analysis]
    run = ["pressure", "birkhoff", ...]

    [numeric]
    q_min, q_max, q_step, alpha, epsilon, n_list, n_bracket, kink_tol, h0

    [flags]
    entropy_usc = false
    equilibrium_available = true
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .expressions import Formula, FormulaError
from .potentials import Discontinuities, Geometric, LocallyConstant, Pointwise, exact_table
from .systems import Branch, GluedSystem, PiecewiseConformalMap, SymbolicSystem, validate

ANALYSES = ("pressure", "birkhoff", "entropy", "lyapunov", "dimension", "oracle-compare", "phase-report")
SYSTEM_KINDS = ("full", "sft", "map", "glued")
POTENTIAL_KINDS = ("table", "geometric", "formula")
_TABLES = {
    "": {"system", "potential", "analysis", "numeric", "flags", "label"},
    "system": {"kind", "symbols", "matrix", "slopes", "branches", "parts", "label"},
    "potential": {"kind", "table", "formula", "discontinuities", "label"},
    "potential.discontinuities": {"points", "words"},
    "analysis": {"run"},
    "numeric": {"q_min", "q_max", "q_step", "alpha", "epsilon", "n_list", "n_bracket", "kink_tol", "h0", "budget"},
    "flags": {"entropy_usc", "equilibrium_available"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is 1-based or ``None`` when unknown."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.message = message
        self.line = line
        self.path = path
        where = f"{path or '<config>'}:{line}" if line else (path or "<config>")
        super().__init__(f"{where}: {message}")


_HEADER = re.compile(r"^\s*(\[\[?)\s*([^\]]+?)\s*\]\]?\s*(#.*)?$")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-\.\"' ]+?)\s*=")


def key_lines(text: str) -> dict[str, int]:
    """Map dotted key paths to the line where they are defined.

    Keys inside inline tables or arrays map to the line of their parent key.
    Array-of-tables entries are indexed as ``name.0``, ``name.1``.
    """
    lines: dict[str, int] = {}
    counts: dict[str, int] = {}
    prefix = ""
    depth = 0
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0] if '"' not in raw and "'" not in raw else raw
        if depth == 0:
            m = _HEADER.match(line)
            if m:
                name = m.group(2).strip().replace('"', "").replace("'", "")
                if m.group(1) == "[[":
                    idx = counts.get(name, 0)
                    counts[name] = idx + 1
                    lines.setdefault(name, no)
                    name = f"{name}.{idx}"
                prefix = name
                lines.setdefault(prefix, no)
                continue
            m = _KEY.match(line)
            if m:
                key = m.group(1).strip().replace('"', "").replace("'", "")
                full = f"{prefix}.{key}" if prefix else key
                lines.setdefault(full, no)
        depth += line.count("[") + line.count("{") - line.count("]") - line.count("}")
        depth = max(depth, 0)
    return lines


@dataclass(frozen=True)
class NumericParams:
    q_min: float = -20.0
    q_max: float = 20.0
    #: ``None`` selects the adaptive default grid
    q_step: float | None = None
    alpha: tuple[float, ...] = ()
    epsilon: float = 0.05
    n_list: tuple[int, ...] = (10, 15, 20)
    n_bracket: int = 12
    kink_tol: float = 1e-3
    h0: float | None = None
    budget: int = 10**8

    def q_grid(self) -> np.ndarray | None:
        if self.q_step is None:
            return None
        count = int(round((self.q_max - self.q_min) / self.q_step)) + 1
        return np.linspace(self.q_min, self.q_max, count)


@dataclass(frozen=True)
class Flags:
    entropy_usc: bool = False
    equilibrium_available: bool = True


@dataclass(frozen=True, eq=False)
class AnalysisConfig:
    system: Any
    potential: Any
    analyses: tuple[str, ...]
    numeric: NumericParams = field(default_factory=NumericParams)
    flags: Flags = field(default_factory=Flags)
    label: str = ""
    source: str | None = None

    @property
    def cmap(self) -> PiecewiseConformalMap | None:
        return self.system if isinstance(self.system, PiecewiseConformalMap) else None

    @property
    def singular(self) -> bool:
        return isinstance(self.potential, LocallyConstant) and self.potential.has_infinite


class _Reader:
    def __init__(self, data: dict, lines: dict[str, int], path: str | None):
        self.data = data
        self.lines = lines
        self.path = path

    def line(self, key: str) -> int | None:
        while key:
            if key in self.lines:
                return self.lines[key]
            key = key.rpartition(".")[0]
        return None

    def fail(self, key: str, message: str):
        raise ConfigError(message, self.line(key), self.path)

    def get(self, key: str, default=None):
        node: Any = self.data
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def number(self, key: str, default=None, integer=False, positive=False):
        v = self.get(key, default)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(key, f"'{key}' must be a number, got {v!r}")
        if integer and (not isinstance(v, int)):
            self.fail(key, f"'{key}' must be an integer, got {v!r}")
        if math.isnan(v):
            self.fail(key, f"'{key}' must not be nan")
        if positive and not v > 0:
            self.fail(key, f"'{key}' must be positive, got {v!r}")
        return v

    def numbers(self, key: str, default=(), integer=False):
        v = self.get(key, default)
        if not isinstance(v, (list, tuple)):
            self.fail(key, f"'{key}' must be an array")
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or (integer and not isinstance(x, int)):
                self.fail(key, f"'{key}' must contain only {'integers' if integer else 'numbers'}, got {x!r}")
        return tuple(v)

    def choice(self, key: str, options, default=None):
        v = self.get(key, default)
        if v is None:
            self.fail(key, f"missing required key '{key}'")
        if v not in options:
            self.fail(key, f"'{key}' must be one of {', '.join(options)}; got {v!r}")
        return v

    def boolean(self, key: str, default: bool) -> bool:
        v = self.get(key, default)
        if not isinstance(v, bool):
            self.fail(key, f"'{key}' must be true or false")
        return v


def _check_unknown(r: _Reader) -> None:
    def walk(node, prefix):
        allowed = _TABLES.get(prefix)
        if allowed is None or not isinstance(node, dict):
            return
        for k, v in node.items():
            key = f"{prefix}.{k}" if prefix else k
            if k not in allowed:
                r.fail(key, f"unknown key '{key}'")
            walk(v, key)

    walk(r.data, "")


def _symbolic_from(r: _Reader, node: dict, key: str):
    kind = node.get("kind")
    if kind not in ("full", "sft"):
        r.fail(f"{key}.kind", f"'{key}.kind' must be 'full' or 'sft' for a glued part, got {kind!r}")
    if kind == "full":
        m = node.get("symbols")
        if isinstance(m, bool) or not isinstance(m, int) or m < 1:
            r.fail(f"{key}.symbols", f"'{key}.symbols' must be a positive integer")
        return SymbolicSystem.full(m)
    mat = node.get("matrix")
    return _matrix_system(r, mat, f"{key}.matrix")


def _matrix_system(r: _Reader, mat, key: str) -> SymbolicSystem:
    if not isinstance(mat, list) or not mat:
        r.fail(key, f"'{key}' must be a non-empty array of rows")
    try:
        return SymbolicSystem(np.asarray(mat))
    except (ValueError, TypeError) as exc:
        r.fail(key, f"'{key}': {exc}")


def _system(r: _Reader):
    if "system" not in r.data:
        raise ConfigError("missing [system] table", None, r.path)
    kind = r.choice("system.kind", SYSTEM_KINDS)
    label = r.get("system.label", "")
    if kind == "full":
        m = r.number("system.symbols", integer=True, positive=True)
        if m is None:
            r.fail("system", "'system.symbols' is required for a full shift")
        system = SymbolicSystem.full(m, label or None)
    elif kind == "sft":
        system = _matrix_system(r, r.get("system.matrix"), "system.matrix")
    elif kind == "glued":
        parts = r.get("system.parts")
        if not isinstance(parts, list) or not parts:
            r.fail("system.parts", "'system.parts' must be a non-empty array of tables")
        built = []
        for i, p in enumerate(parts):
            if not isinstance(p, dict):
                r.fail("system.parts", f"system.parts[{i}] must be a table")
            built.append(_symbolic_from(r, p, f"system.parts.{i}" if f"system.parts.{i}" in r.lines else "system.parts"))
        system = GluedSystem(tuple(built), label or "glued")
    else:
        slopes = r.get("system.slopes")
        branches = r.get("system.branches")
        if (slopes is None) == (branches is None):
            r.fail("system", "a map needs exactly one of 'system.slopes' or 'system.branches'")
        try:
            if slopes is not None:
                slopes = r.numbers("system.slopes")
                if not slopes or any(not s > 1 for s in slopes):
                    r.fail("system.slopes", "'system.slopes' must be non-empty with every slope > 1")
                system = PiecewiseConformalMap.full_branched(slopes, label or None)
            else:
                if not isinstance(branches, list) or not branches:
                    r.fail("system.branches", "'system.branches' must be a non-empty array of tables")
                br = []
                for i, b in enumerate(branches):
                    missing = {"left", "right", "map", "factor"} - set(b)
                    if missing:
                        r.fail("system.branches", f"branch {i} lacks {', '.join(sorted(missing))}")
                    br.append(Branch.from_strings(b["left"], b["right"], str(b["map"]), str(b["factor"])))
                system = PiecewiseConformalMap(tuple(br), label or "map")
        except FormulaError as exc:
            r.fail("system", f"bad formula: {exc}")
        except ValueError as exc:
            r.fail("system", str(exc))
    problems = validate(system)
    if problems:
        r.fail("system", "; ".join(problems))
    return system


def _discontinuities(r: _Reader) -> Discontinuities:
    pts = r.get("potential.discontinuities.points", [])
    words = r.get("potential.discontinuities.words", [])
    if not isinstance(pts, list):
        r.fail("potential.discontinuities.points", "'points' must be an array")
    for p in pts:
        if isinstance(p, str):
            if not re.fullmatch(r"[0-9]*\([0-9]+\)", p.replace(" ", "").replace(",", "")):
                r.fail("potential.discontinuities.points", f"sequence point {p!r} must look like 'prefix(period)'")
        elif isinstance(p, bool) or not isinstance(p, (int, float)):
            r.fail("potential.discontinuities.points", f"bad discontinuity point {p!r}")
    if not isinstance(words, list) or any(not isinstance(w, list) for w in words):
        r.fail("potential.discontinuities.words", "'words' must be an array of integer arrays")
    if words and len({len(w) for w in words}) != 1:
        r.fail("potential.discontinuities.words", "all words must have the same length")
    return Discontinuities(tuple(pts), tuple(tuple(int(x) for x in w) for w in words))


def _table_array(r: _Reader, value, key: str) -> np.ndarray:
    try:
        t = np.asarray(value, dtype=float)
    except (ValueError, TypeError):
        r.fail(key, f"'{key}' must be a rectangular numeric array")
    if t.ndim < 1 or t.size == 0:
        r.fail(key, f"'{key}' must be non-empty")
    if np.isneginf(t).any():
        r.fail(key, f"'{key}': -inf entries are not supported")
    return t


def _potential(r: _Reader, system):
    if "potential" not in r.data:
        raise ConfigError("missing [potential] table", None, r.path)
    kind = r.choice("potential.kind", POTENTIAL_KINDS)
    label = r.get("potential.label", "")
    disc = _discontinuities(r)
    cmap = system if isinstance(system, PiecewiseConformalMap) else None
    if kind == "geometric":
        if cmap is None:
            r.fail("potential.kind", "a geometric potential needs an interval map system")
        return Geometric(cmap)
    if kind == "formula":
        if cmap is None:
            r.fail("potential.kind", "a formula potential needs an interval map system")
        src = r.get("potential.formula")
        if not isinstance(src, str):
            r.fail("potential.formula", "'potential.formula' must be a string")
        try:
            return Pointwise(Formula(src), cmap, disc, label=label)
        except FormulaError as exc:
            r.fail("potential.formula", f"bad formula: {exc}")
    raw = r.get("potential.table")
    if raw is None:
        r.fail("potential", "'potential.table' is required for a table potential")
    t = _table_array(r, raw, "potential.table")
    m = system.alphabet_size
    if t.shape != (m,) * t.ndim:
        r.fail("potential.table", f"table shape {t.shape} does not match alphabet size {m}")
    tab = LocallyConstant(t, disc, label)
    problems = tab.check(system)
    if problems:
        r.fail("potential.table", "; ".join(problems))
    return tab


def _analyses(r: _Reader) -> tuple[str, ...]:
    run = r.get("analysis.run", ["pressure", "birkhoff", "phase-report"])
    if not isinstance(run, list) or not run:
        r.fail("analysis.run", "'analysis.run' must be a non-empty array")
    for a in run:
        if a not in ANALYSES:
            r.fail("analysis.run", f"unknown analysis {a!r}; choose from {', '.join(ANALYSES)}")
    if len(set(run)) != len(run):
        r.fail("analysis.run", "'analysis.run' lists an analysis twice")
    return tuple(run)


def _numeric(r: _Reader) -> NumericParams:
    d = NumericParams()
    q_min = r.number("numeric.q_min", d.q_min)
    q_max = r.number("numeric.q_max", d.q_max)
    if not (math.isfinite(q_min) and math.isfinite(q_max) and q_min < q_max):
        r.fail("numeric.q_max" if "numeric.q_max" in r.lines else "numeric", "need finite q_min < q_max")
    q_step = r.number("numeric.q_step", None, positive=True)
    if q_step is not None and (q_max - q_min) / q_step > 10**6:
        r.fail("numeric.q_step", "q grid would exceed 10^6 points")
    n_list = r.numbers("numeric.n_list", d.n_list, integer=True)
    if not n_list or any(n < 1 for n in n_list):
        r.fail("numeric.n_list", "'n_list' must be non-empty with positive entries")
    return NumericParams(
        q_min=float(q_min),
        q_max=float(q_max),
        q_step=None if q_step is None else float(q_step),
        alpha=tuple(float(a) for a in r.numbers("numeric.alpha", ())),
        epsilon=float(r.number("numeric.epsilon", d.epsilon, positive=True)),
        n_list=tuple(n_list),
        n_bracket=int(r.number("numeric.n_bracket", d.n_bracket, integer=True, positive=True)),
        kink_tol=float(r.number("numeric.kink_tol", d.kink_tol, positive=True)),
        h0=None if r.get("numeric.h0") is None else float(r.number("numeric.h0")),
        budget=int(r.number("numeric.budget", d.budget, integer=True, positive=True)),
    )


def _preconditions(r: _Reader, cfg: AnalysisConfig) -> None:
    cmap = cfg.cmap
    tab = cfg.potential if isinstance(cfg.potential, LocallyConstant) else None
    for a in cfg.analyses:
        if a in ("birkhoff", "entropy", "phase-report") and exact_table(cfg.potential) is None:
            r.fail("potential.kind", f"'{a}' needs a table potential or log a of a piecewise-linear map")
        if a in ("lyapunov", "dimension"):
            if cmap is None:
                r.fail("analysis.run", f"'{a}' needs an interval map with a conformal factor, not a bare shift")
            if not cmap.is_linear:
                r.fail("system", f"'{a}' needs a piecewise-linear map")
            if not cmap.min_factor > 1:
                r.fail("system", f"'{a}' needs a uniformly expanding map")
        if a in ("entropy", "dimension") and tab is None and not isinstance(cfg.potential, Geometric):
            r.fail("potential.kind", f"'{a}' needs a table potential")
        if a in ("entropy", "dimension", "lyapunov") and cfg.singular:
            r.fail("potential.table", f"'{a}' is not available for +inf-valued potentials")
    if cfg.singular:
        if cfg.numeric.q_max > 0:
            r.fail("numeric.q_max" if "numeric.q_max" in r.lines else "potential.table",
                   "potential takes the value +inf: q > 0 is rejected, set q_max <= 0")
        if isinstance(cfg.system, GluedSystem):
            r.fail("system", "+inf-valued potentials are supported on single systems only")
    if "oracle-compare" in cfg.analyses and not cfg.numeric.alpha:
        r.fail("numeric.alpha" if "numeric.alpha" in r.lines else "analysis.run",
               "'oracle-compare' needs 'numeric.alpha' points")
    if cfg.numeric.h0 is not None and "birkhoff" not in cfg.analyses:
        r.fail("numeric.h0", "'h0' only applies to the birkhoff analysis")


def loads(text: str, path: str | None = None) -> AnalysisConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None, path) from None
    r = _Reader(data, key_lines(text), path)
    _check_unknown(r)
    system = _system(r)
    potential = _potential(r, system)
    flags = Flags(r.boolean("flags.entropy_usc", False), r.boolean("flags.equilibrium_available", True))
    cfg = AnalysisConfig(system, potential, _analyses(r), _numeric(r), flags, str(data.get("label", "")), path)
    _preconditions(r, cfg)
    return cfg


def load(path: str | Path) -> AnalysisConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(p)) from None
    return loads(text, str(p))
