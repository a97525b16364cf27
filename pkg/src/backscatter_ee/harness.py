"""Monte Carlo sweeps, the built-in figure definitions, and CSV/JSON output.

Realization ``i`` of a sweep always sees the same small-scale fading for a
given K, whatever the sweep value, scheme or worker count: the draw is keyed
on ``(master_seed, i)``.  Averages are exact sums (``math.fsum``) taken in
realization order, so output bytes do not depend on parallelism.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import __version__
from .baselines import solve_fixed_power, solve_no_sleep, solve_oma
from .channel import PATHLOSS_MODELS, Geometry, SeedSpec, default_geometry, sample_realization
from .model import SystemParams, dbm_to_watts
from .optimizer import Mode, SolveResult, SolverConfig, dinkelbach_solve

VARIABLES = ("p_max_dbm", "bn_circuit_power_dbm", "pathloss_exponent")
SCHEME_SOLVERS = {
    "proposed": dinkelbach_solve,
    "fixed_power": solve_fixed_power,
    "no_sleep": solve_no_sleep,
    "oma": solve_oma,
}
SCHEMES = tuple(SCHEME_SOLVERS)
DESK_REALIZATIONS = 1000
FULL_REALIZATIONS = 100_000


class ConfigError(ValueError):
    """Bad sweep spec or config file; the message names the offending field."""


# -- config files ---------------------------------------------------------------

# key -> (kind, default); "list" keys take one value or a comma-separated list
CONFIG_KEYS = {
    "num_bns": ("int", 2),
    "p_max_dbm": ("float", 30.0),
    "noise_power_dbm": ("float", -100.0),
    "pa_efficiency": ("float", 0.9),
    "source_circuit_power_dbm": ("float", 20.0),
    "receiver_circuit_power_dbm": ("float", 10.0),
    "bn_circuit_power_dbm": ("list", 0.0),
    "harvest_efficiency": ("list", 0.6),
    "pathloss_exponent": ("float", 3.0),
    "source_bn_distance": ("list", None),
    "bn_receiver_distance": ("list", None),
    "source_receiver_distance": ("float", 40.0),
    "pathloss_model": ("str", "power"),
}


def _convert(key: str, raw):
    kind = CONFIG_KEYS[key][0]
    try:
        if kind == "int":
            value = int(raw)
            if value != float(raw):
                raise ValueError
            return value
        if kind == "float":
            return float(raw)
        if kind == "list":
            if isinstance(raw, str):
                items = [float(x) for x in raw.split(",") if x.strip()]
            elif isinstance(raw, (list, tuple, np.ndarray)):
                items = [float(x) for x in raw]
            else:
                items = [float(raw)]
            if not items:
                raise ValueError
            return items[0] if len(items) == 1 else items
        return str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Unknown keys are errors."""
    cfg = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        cfg[key] = _convert(key, raw)
    return cfg


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def resolve_config(overrides: Optional[Mapping] = None) -> dict:
    """Defaults merged with ``overrides`` (values validated and converted)."""
    cfg = {key: default for key, (_, default) in CONFIG_KEYS.items()}
    for key, raw in (overrides or {}).items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = _convert(key, raw)
    if cfg["pathloss_model"] not in PATHLOSS_MODELS:
        raise ConfigError(f"pathloss_model: expected one of {PATHLOSS_MODELS}, got {cfg['pathloss_model']!r}")
    return cfg


def params_from_config(cfg: Mapping, num_bns: Optional[int] = None) -> SystemParams:
    k = int(cfg["num_bns"] if num_bns is None else num_bns)
    try:
        return SystemParams(
            num_bns=k,
            p_max=dbm_to_watts(cfg["p_max_dbm"]),
            noise_power=dbm_to_watts(cfg["noise_power_dbm"]),
            pa_efficiency=cfg["pa_efficiency"],
            source_circuit_power=dbm_to_watts(cfg["source_circuit_power_dbm"]),
            receiver_circuit_power=dbm_to_watts(cfg["receiver_circuit_power_dbm"]),
            bn_circuit_power=dbm_to_watts(cfg["bn_circuit_power_dbm"]),
            harvest_efficiency=cfg["harvest_efficiency"],
            pathloss_exponent=cfg["pathloss_exponent"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def geometry_from_config(cfg: Mapping, num_bns: int) -> Geometry:
    d0, d = cfg.get("source_bn_distance"), cfg.get("bn_receiver_distance")
    if d0 is None and d is None:
        return default_geometry(num_bns, cfg["source_receiver_distance"])
    if d0 is None or d is None:
        raise ConfigError("source_bn_distance and bn_receiver_distance must be given together")
    try:
        geom = Geometry(np.atleast_1d(d0), np.atleast_1d(d), cfg["source_receiver_distance"])
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc
    if geom.num_bns != num_bns:
        raise ConfigError(f"geometry: {geom.num_bns} distances given but num_bns = {num_bns}")
    return geom


# -- sweep definitions ---------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    name: str
    variable: str
    values: tuple
    k_values: tuple = (2, 3, 4)
    schemes: tuple = ("proposed",)
    realizations: int = DESK_REALIZATIONS
    master_seed: int = 2025
    # fixed config keys (config-file units) applied before the swept variable
    base: Mapping = field(default_factory=dict)
    saturation: bool = True

    def validate(self) -> "SweepSpec":
        if not self.name or not str(self.name).replace("_", "").replace("-", "").isalnum():
            raise ConfigError(f"name: invalid identifier {self.name!r}")
        if self.variable not in VARIABLES:
            raise ConfigError(f"variable: expected one of {VARIABLES}, got {self.variable!r}")
        vals = [float(v) for v in self.values]
        if not vals:
            raise ConfigError("values: must be nonempty")
        diffs = np.diff(vals)
        if len(vals) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
            raise ConfigError("values: must be strictly monotone")
        if not self.k_values or any(int(k) != k or k < 1 for k in self.k_values):
            raise ConfigError("k_values: must be a nonempty list of positive integers")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ConfigError(f"schemes: expected a nonempty subset of {SCHEMES}, got {list(self.schemes)}")
        if int(self.realizations) != self.realizations or self.realizations < 1:
            raise ConfigError("realizations: must be a positive integer")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed: must be an unsigned 64-bit integer")
        if self.variable in self.base:
            raise ConfigError(f"base: must not fix the swept variable {self.variable!r}")
        if "num_bns" in self.base:
            raise ConfigError("base: num_bns comes from k_values")
        cfg = resolve_config(self.base)
        for k in self.k_values:
            geometry_from_config(cfg, int(k))
            for v in vals:
                params_from_config({**cfg, self.variable: v}, int(k))
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["values"] = [float(v) for v in self.values]
        d["k_values"] = [int(k) for k in self.k_values]
        d["schemes"] = list(self.schemes)
        d["base"] = dict(self.base)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "SweepSpec":
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown sweep spec field(s): {sorted(unknown)}")
        missing = {"name", "variable", "values"} - set(d)
        if missing:
            raise ConfigError(f"missing sweep spec field(s): {sorted(missing)}")
        kw = dict(d)
        for key in ("values", "k_values", "schemes"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw).validate()

    def with_(self, **changes) -> "SweepSpec":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return SweepSpec(**d)


def _frange(start, stop, step):
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 10) for i in range(n + 1))


def builtin_sweeps() -> dict:
    pmax = _frange(0, 50, 5)
    ptc = _frange(-10, 15, 2.5)
    specs = [
        SweepSpec("fig2a_ee_vs_pmax", "p_max_dbm", pmax),
        SweepSpec("fig2b_time_vs_pmax", "p_max_dbm", pmax),
        SweepSpec("fig2c_time_vs_pathloss", "pathloss_exponent", _frange(2, 4, 0.25),
                  base={"p_max_dbm": 30.0}),
        SweepSpec("fig2d_noma_vs_oma", "p_max_dbm", pmax, schemes=("proposed", "oma")),
        SweepSpec("fig3a_ee_vs_ptc", "bn_circuit_power_dbm", ptc, base={"p_max_dbm": 30.0}),
        SweepSpec("fig3b_time_vs_ptc", "bn_circuit_power_dbm", ptc, base={"p_max_dbm": 30.0}),
        SweepSpec("fig3c_baselines", "p_max_dbm", pmax, schemes=("proposed", "fixed_power", "no_sleep")),
    ]
    return {s.name: s for s in specs}


# -- running --------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    value: float
    num_bns: int
    scheme: str
    mean_ee: float
    mean_tau_s: float
    mean_tau_a: float
    mean_source_power: float
    frac_hot: float
    frac_htt: float
    frac_infeasible: float
    infeasible_fraction: float
    mean_iterations: float
    realizations: int


RECORD_FIELDS = tuple(f.name for f in fields(SweepRecord))
REALIZATION_FIELDS = ("value", "num_bns", "scheme", "realization", "ee", "tau_s", "tau_a",
                      "source_power", "mode", "feasible", "iterations", "converged")


def _row(result: SolveResult):
    a = result.allocation
    return (result.energy_efficiency, float(a.sleep_fraction), float(a.active_fraction),
            float(a.source_power), result.mode.value, bool(result.evaluation.feasible),
            result.iterations, result.converged)


def _solve_chunk(task):
    """Solve every (value, scheme) cell for a block of realizations of one K."""
    spec_dict, k, indices = task
    spec = SweepSpec.from_dict(spec_dict)
    cfg = resolve_config(spec.base)
    geometry = geometry_from_config(cfg, k)
    config = SolverConfig(saturation=spec.saturation)
    params_by_value = [params_from_config({**cfg, spec.variable: v}, k) for v in spec.values]
    out = []
    for i in indices:
        seed = SeedSpec(int(spec.master_seed), int(i))
        per_value = []
        for params in params_by_value:
            channels = sample_realization(params, geometry, seed, cfg["pathloss_model"])
            per_value.append([_row(SCHEME_SOLVERS[s](params, channels, config)) for s in spec.schemes])
        out.append(per_value)
    return out


def _chunks(n, size):
    return [range(start, min(start + size, n)) for start in range(0, n, size)]


def run_sweep(spec: SweepSpec, workers: int = 1, chunk_size: int = 50, keep_realizations: bool = False):
    """Run a sweep; returns the records, or ``(records, rows)`` with ``keep_realizations``.

    ``rows`` holds one tuple per (value, K, scheme, realization), see
    ``REALIZATION_FIELDS``.
    """
    spec = spec.validate()
    spec_dict = spec.to_dict()
    n = int(spec.realizations)
    records, rows = [], []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for k in spec.k_values:
            tasks = [(spec_dict, int(k), list(idx)) for idx in _chunks(n, chunk_size)]
            mapped = pool.map(_solve_chunk, tasks) if pool else map(_solve_chunk, tasks)
            # results[i][value_index][scheme_index], in realization order
            results = [r for chunk in mapped for r in chunk]
            for vi, value in enumerate(spec.values):
                for si, scheme in enumerate(spec.schemes):
                    cell = [results[i][vi][si] for i in range(n)]
                    records.append(_aggregate(float(value), int(k), scheme, cell))
                    if keep_realizations:
                        rows.extend((float(value), int(k), scheme, i) + r for i, r in enumerate(cell))
    finally:
        if pool:
            pool.shutdown()
    return (records, rows) if keep_realizations else records


def _aggregate(value, k, scheme, cell) -> SweepRecord:
    n = len(cell)

    def mean(idx):
        return math.fsum(r[idx] for r in cell) / n

    modes = [r[4] for r in cell]
    return SweepRecord(
        value=value, num_bns=k, scheme=scheme,
        mean_ee=mean(0), mean_tau_s=mean(1), mean_tau_a=mean(2), mean_source_power=mean(3),
        frac_hot=modes.count(Mode.HOT.value) / n,
        frac_htt=modes.count(Mode.HTT.value) / n,
        frac_infeasible=modes.count(Mode.INFEASIBLE.value) / n,
        infeasible_fraction=sum(1 for r in cell if not r[5]) / n,
        mean_iterations=mean(6),
        realizations=n,
    )


# -- output ---------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(records: Sequence[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_FIELDS)
    for r in records:
        writer.writerow([_fmt(getattr(r, f)) for f in RECORD_FIELDS])
    return buf.getvalue()


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REALIZATION_FIELDS)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_records_csv(path) -> list:
    types = {f.name: f.type for f in fields(SweepRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for name, raw in row.items():
                t = types[name]
                kw[name] = int(raw) if t in ("int", int) else raw if t in ("str", str) else float(raw)
            out.append(SweepRecord(**kw))
    return out


def emit(records: Sequence[SweepRecord], fmt: str, path, spec: Optional[SweepSpec] = None,
         wall_time: Optional[float] = None) -> Path:
    """Write records as ``csv`` or ``jsonl`` plus a ``<stem>.manifest.json`` next to them."""
    if not records:
        raise ConfigError("records: nothing to write")
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"format: expected 'csv' or 'jsonl', got {fmt!r}")
    path = Path(path)
    if fmt == "csv":
        text = records_to_csv(records)
    else:
        text = "".join(json.dumps(asdict(r)) + "\n" for r in records)
    manifest = {
        "library": "backscatter_ee",
        "version": __version__,
        "format": fmt,
        "records": len(records),
        "realizations": records[0].realizations,
        "wall_time_s": wall_time,
    }
    if spec is not None:
        manifest["master_seed"] = int(spec.master_seed)
        manifest["spec"] = spec.to_dict()
    manifest_path = path.with_name(path.name.split(".")[0] + ".manifest.json")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc
    return path


def run_and_emit(spec: SweepSpec, out_dir, workers: int = 1, fmt: str = "csv",
                 dump_realizations: bool = False) -> Path:
    start = time.perf_counter()
    result = run_sweep(spec, workers=workers, keep_realizations=dump_realizations)
    records, rows = result if dump_realizations else (result, None)
    elapsed = time.perf_counter() - start
    out_dir = Path(out_dir)
    path = emit(records, fmt, out_dir / f"{spec.name}.{fmt}", spec, elapsed)
    if rows is not None:
        (out_dir / f"{spec.name}.realizations.csv").write_text(rows_to_csv(rows))
    return path


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
