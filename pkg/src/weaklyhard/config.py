"""Study configuration files.

A configuration is a TOML document.  The grammar actually accepted is:

    include = ["tasks.toml", "plant.toml"]   # optional, resolved relative to this file

    [sweep]                 # all keys optional
    period_min = 55         # ms, integer
    period_max = 300        # ms, integer
    period_step = 1         # ms, integer >= 1
    K = 20                  # window length for (m, K) mining
    norm_bound = 35.0       # bound on the 2-norm of the feedback gain
    ratio_min = 1e-4        # state/input weight ratio search range
    ratio_max = 100.0
    output = "sweep.csv"    # default CSV path for the sweep

    [sim]                   # all keys optional
    horizon = 10.0          # s
    substep = 0.001         # s
    n_samples = 100
    seed = 0
    x0_low = [-0.3, -0.3, 0.0, 0.0]
    x0_high = [0.3, 0.3, 0.0, 0.0]

    [controller]            # required
    id = "ctrl"
    wcet = 15               # ms, on the microsecond grid (e.g. 15 or 2.5 or "7/4")

    [[task]]                # one table per regular task, at least one
    id = "t1"
    period = 60             # ms, integer
    wcet = 6.5              # ms
    deadline = 60           # ms, integer, optional (defaults to period)

    [plant]                 # required
    labels = ["theta_r", "theta_p", "dtheta_r", "dtheta_p"]   # optional
    weighted = ["theta_r", "theta_p"]     # labels or 0-based indices
    A = [[...], ...]        # n rows of n numbers
    B = [[...], ...]        # n rows of m numbers

Unknown tables or keys are rejected, as are duplicates (within a file, by the
TOML parser; across included files, by the loader).
"""

import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .control import DEFAULT_RATIO_RANGE, PlantCT
from .perfsim import SimConfig
from .taskmodel import CONTROLLER, Task

_SWEEP_KEYS = {
    "period_min", "period_max", "period_step", "K", "norm_bound",
    "ratio_min", "ratio_max", "output",
}
_SIM_KEYS = {"horizon", "substep", "n_samples", "seed", "x0_low", "x0_high"}
_TASK_KEYS = {"id", "period", "wcet", "deadline"}
_CTRL_KEYS = {"id", "wcet"}
_PLANT_KEYS = {"labels", "weighted", "A", "B"}
_TOP_KEYS = {"include", "sweep", "sim", "controller", "task", "plant"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerSpec:
    id: str
    wcet: Fraction

    def task(self, period):
        return Task(self.id, int(period), self.wcet, kind=CONTROLLER)


@dataclass(frozen=True, eq=False)
class SweepConfig:
    tasks: tuple
    controller: ControllerSpec
    plant: PlantCT
    period_min: int = 55
    period_max: int = 300
    period_step: int = 1
    K: int = 20
    norm_bound: float = 35.0
    ratio_range: tuple = DEFAULT_RATIO_RANGE
    sim: SimConfig = field(default_factory=SimConfig)
    output: str = None
    sources: tuple = ()

    def __post_init__(self):
        if self.period_min > self.period_max:
            raise ConfigError("sweep.period_min exceeds sweep.period_max")
        if self.period_step < 1:
            raise ConfigError("sweep.period_step must be at least 1 ms")
        if self.K < 1:
            raise ConfigError("sweep.K must be at least 1")

    @property
    def periods(self):
        return list(range(self.period_min, self.period_max + 1, self.period_step))

    def with_overrides(self, seed=None, **kw):
        """Copy with sweep fields replaced; ``seed`` goes to the simulation settings."""
        if seed is not None:
            kw["sim"] = replace(kw.get("sim", self.sim), rng_seed=seed)
        return replace(self, **kw)

    def __eq__(self, other):
        if not isinstance(other, SweepConfig):
            return NotImplemented
        return (
            self.tasks == other.tasks
            and self.controller == other.controller
            and _plant_eq(self.plant, other.plant)
            and (self.period_min, self.period_max, self.period_step, self.K)
            == (other.period_min, other.period_max, other.period_step, other.K)
            and self.norm_bound == other.norm_bound
            and tuple(self.ratio_range) == tuple(other.ratio_range)
            and self.sim == other.sim
            and self.output == other.output
        )


def _plant_eq(a, b):
    return (
        np.array_equal(a.A, b.A)
        and np.array_equal(a.B, b.B)
        and a.labels == b.labels
        and a.weighted == b.weighted
    )


def _read_toml(path):
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc


def _merge(path, seen=()):
    path = Path(path)
    if path.resolve() in seen:
        raise ConfigError(f"{path}: include cycle")
    doc = _read_toml(path)
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    includes = doc.pop("include", [])
    if not isinstance(includes, list) or not all(isinstance(s, str) for s in includes):
        raise ConfigError(f"{path}: include must be a list of file names")
    merged, sources = {}, [str(path)]
    parts = []
    for inc in includes:
        sub, sub_sources = _merge(path.parent / inc, seen + (path.resolve(),))
        sources += sub_sources
        parts.append((path.parent / inc, sub))
    parts.append((path, doc))
    for where, part in parts:
        for k, v in part.items():
            if k == "task":
                merged.setdefault("task", []).extend(v)
            elif k in merged:
                raise ConfigError(f"{where}: [{k}] defined more than once")
            else:
                merged[k] = v
    return merged, sources


def _check_keys(table, allowed, where):
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {sorted(unknown)}")


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where} must be an integer, got {v!r}")
    return v


def _num(v, where):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where} must be a number, got {v!r}")
    return float(v)


def _wcet(v, where):
    try:
        if isinstance(v, float):
            c = Fraction(repr(v))
        elif isinstance(v, (int, str)) and not isinstance(v, bool):
            c = Fraction(v)
        else:
            raise ValueError
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{where} must be a duration in ms, got {v!r}") from None
    if c <= 0 or (c * 1000).denominator != 1:
        raise ConfigError(f"{where} must be positive and on the microsecond grid, got {v!r}")
    return c


def _matrix(v, where, cols=None):
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ConfigError(f"{where} must be a list of rows")
    width = len(v[0]) if cols is None else cols
    for i, row in enumerate(v):
        if len(row) != width:
            raise ConfigError(f"{where} row {i} has {len(row)} entries, expected {width}")
        for j, x in enumerate(row):
            _num(x, f"{where}[{i}][{j}]")
    return np.array(v, dtype=float)


def _parse_plant(t):
    _check_keys(t, _PLANT_KEYS, "[plant]")
    for key in ("A", "B"):
        if key not in t:
            raise ConfigError(f"[plant] missing {key}")
    A = _matrix(t["A"], "plant.A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ConfigError(f"plant.A must be square, got {A.shape[0]}x{A.shape[1]}")
    B = _matrix(t["B"], "plant.B")
    if B.shape[0] != n:
        raise ConfigError(f"plant.B has {B.shape[0]} rows, plant.A has {n}")
    labels = t.get("labels", [f"x{i}" for i in range(n)])
    if not isinstance(labels, list) or len(labels) != n or not all(isinstance(s, str) for s in labels):
        raise ConfigError(f"plant.labels must list {n} names")
    weighted = []
    for i, w in enumerate(t.get("weighted", [])):
        if isinstance(w, str):
            if w not in labels:
                raise ConfigError(f"plant.weighted[{i}]: unknown state {w!r}")
            weighted.append(labels.index(w))
        else:
            w = _int(w, f"plant.weighted[{i}]")
            if not 0 <= w < n:
                raise ConfigError(f"plant.weighted[{i}] out of range")
            weighted.append(w)
    return PlantCT(A, B, tuple(labels), tuple(weighted))


def _parse_tasks(items):
    if not items:
        raise ConfigError("no [[task]] entries")
    tasks = []
    for i, t in enumerate(items):
        where = f"task[{i}]"
        _check_keys(t, _TASK_KEYS, where)
        for key in ("id", "period", "wcet"):
            if key not in t:
                raise ConfigError(f"{where} missing {key}")
        period = _int(t["period"], f"{where}.period")
        deadline = _int(t.get("deadline", period), f"{where}.deadline")
        try:
            tasks.append(Task(str(t["id"]), period, _wcet(t["wcet"], f"{where}.wcet"), deadline))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    ids = [t.id for t in tasks]
    dup = {x for x in ids if ids.count(x) > 1}
    if dup:
        raise ConfigError(f"duplicate task id(s) {sorted(dup)}")
    return tuple(tasks)


def load_config(path):
    merged, sources = _merge(path)
    if "controller" not in merged:
        raise ConfigError(f"{path}: missing [controller]")
    if "plant" not in merged:
        raise ConfigError(f"{path}: missing [plant]")

    ctrl_t = merged["controller"]
    _check_keys(ctrl_t, _CTRL_KEYS, "[controller]")
    if "wcet" not in ctrl_t:
        raise ConfigError("[controller] missing wcet")
    controller = ControllerSpec(str(ctrl_t.get("id", "ctrl")), _wcet(ctrl_t["wcet"], "controller.wcet"))
    tasks = _parse_tasks(merged.get("task", []))
    if controller.id in {t.id for t in tasks}:
        raise ConfigError(f"controller id {controller.id!r} clashes with a task id")
    plant = _parse_plant(merged["plant"])

    sw = merged.get("sweep", {})
    _check_keys(sw, _SWEEP_KEYS, "[sweep]")
    kw = {}
    for key in ("period_min", "period_max", "period_step", "K"):
        if key in sw:
            kw[key] = _int(sw[key], f"sweep.{key}")
    if "norm_bound" in sw:
        kw["norm_bound"] = _num(sw["norm_bound"], "sweep.norm_bound")
    lo = _num(sw.get("ratio_min", DEFAULT_RATIO_RANGE[0]), "sweep.ratio_min")
    hi = _num(sw.get("ratio_max", DEFAULT_RATIO_RANGE[1]), "sweep.ratio_max")
    if not 0 < lo <= hi:
        raise ConfigError("sweep.ratio_min/ratio_max must satisfy 0 < min <= max")
    if "output" in sw:
        if not isinstance(sw["output"], str):
            raise ConfigError("sweep.output must be a string")
        kw["output"] = sw["output"]

    si = merged.get("sim", {})
    _check_keys(si, _SIM_KEYS, "[sim]")
    sim_kw = {}
    for key in ("horizon", "substep"):
        if key in si:
            sim_kw[key] = _num(si[key], f"sim.{key}")
    if "n_samples" in si:
        sim_kw["n_samples"] = _int(si["n_samples"], "sim.n_samples")
    if "seed" in si:
        sim_kw["rng_seed"] = _int(si["seed"], "sim.seed")
    for key in ("x0_low", "x0_high"):
        if key in si:
            v = si[key]
            if not isinstance(v, list) or len(v) != plant.n:
                raise ConfigError(f"sim.{key} must list {plant.n} numbers")
            sim_kw[key] = tuple(_num(x, f"sim.{key}[{i}]") for i, x in enumerate(v))
        elif plant.n != 4:
            sim_kw[key] = (0.0,) * plant.n
    try:
        sim = SimConfig(**sim_kw)
        return SweepConfig(
            tasks=tasks,
            controller=controller,
            plant=plant,
            ratio_range=(lo, hi),
            sim=sim,
            sources=tuple(sources),
            **kw,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _wcet_out(c):
    return int(c) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def config_to_dict(cfg):
    d = {
        "sweep": {
            "period_min": cfg.period_min,
            "period_max": cfg.period_max,
            "period_step": cfg.period_step,
            "K": cfg.K,
            "norm_bound": float(cfg.norm_bound),
            "ratio_min": float(cfg.ratio_range[0]),
            "ratio_max": float(cfg.ratio_range[1]),
        },
        "sim": {
            "horizon": float(cfg.sim.horizon),
            "substep": float(cfg.sim.substep),
            "n_samples": cfg.sim.n_samples,
            "seed": cfg.sim.rng_seed,
            "x0_low": [float(x) for x in cfg.sim.x0_low],
            "x0_high": [float(x) for x in cfg.sim.x0_high],
        },
        "controller": {"id": cfg.controller.id, "wcet": _wcet_out(cfg.controller.wcet)},
        "task": [
            {"id": t.id, "period": t.period, "wcet": _wcet_out(t.wcet), "deadline": t.deadline}
            for t in cfg.tasks
        ],
        "plant": {
            "labels": list(cfg.plant.labels),
            "weighted": [cfg.plant.labels[i] for i in cfg.plant.weighted],
            "A": cfg.plant.A.tolist(),
            "B": cfg.plant.B.tolist(),
        },
    }
    if cfg.output is not None:
        d["sweep"]["output"] = cfg.output
    return d


def write_config(cfg, path):
    """Write a self-contained configuration that :func:`load_config` reads back."""
    with open(path, "wb") as fh:
        tomli_w.dump(config_to_dict(cfg), fh)


def reference_config_path():
    return os.path.join(os.path.dirname(__file__), "configs", "reference.toml")
