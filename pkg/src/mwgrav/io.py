"""Run configuration and trace serialization.

Files always carry natural units: lengths in ``1/k0``, times in ``m/(hbar k0^2)``
and Fisher information in ``k0^2 T_pi^4``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import fisher
from .grid import Grid, PhysicalParams
from .sequences import ALL_BASES, COLUMNS, Experiment, FisherTrace, SweepTable

AMU = 1.66053906660e-27
HBAR_SI = 1.054571817e-34
TRACE_HEADER = ("t_over_Tpi",) + COLUMNS
DEFAULT_DELTA_T = (1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.4)
DEFAULT_SIGMA_P = (0.0, 0.0025, 0.005, 0.01, 0.02, 0.035, 0.05, 0.07, 0.1, 0.2, 0.5, 1.0, 2.0)


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class PhysicalConfig(_Strict):
    hbar: float = Field(1.0, gt=0)
    mass: float = Field(1.0, gt=0)
    k0: float = Field(1.0, gt=0)
    g_offset: float = 0.0


class GridConfig(_Strict):
    n_points: int = Field(8192, ge=2)
    z_min: float = -512.0
    z_max: float = 768.0

    @model_validator(mode="after")
    def _check(self) -> GridConfig:
        if self.n_points & (self.n_points - 1):
            raise ValueError("n_points must be a power of two")
        if not self.z_max > self.z_min:
            raise ValueError("z_max must exceed z_min")
        return self


class StateConfig(_Strict):
    kind: Literal["gaussian", "chirped"] = "gaussian"
    sigma: float = Field(10.0, gt=0)


class TimingConfig(_Strict):
    t_pi: float = Field(100.0, gt=0)
    points: int = Field(200, ge=1)
    trap_points: int = Field(400, ge=1)
    times_over_tpi: Optional[List[float]] = None
    trap_omega: Optional[float] = Field(None, gt=0)

    @field_validator("times_over_tpi")
    @classmethod
    def _times(cls, v):
        if v is not None and (not v or min(v) < 0):
            raise ValueError("times_over_tpi must be a nonempty list of non-negative values")
        return v


class FisherConfig(_Strict):
    dg: Optional[float] = Field(None, gt=0)
    floor: float = Field(fisher.PROBABILITY_FLOOR, gt=0, lt=1)
    bases: List[Literal["qfi", "population", "position", "momentum"]] = list(ALL_BASES)


class ResolutionConfig(_Strict):
    sigma_p: List[float] = list(DEFAULT_SIGMA_P)

    @field_validator("sigma_p")
    @classmethod
    def _non_negative(cls, v):
        if not v or min(v) < 0:
            raise ValueError("sigma_p must be a nonempty list of non-negative widths")
        return v


class PulseConfig(_Strict):
    kind: Literal["instantaneous", "finite"] = "instantaneous"
    delta_t_over_tpi: List[float] = list(DEFAULT_DELTA_T)

    @field_validator("delta_t_over_tpi")
    @classmethod
    def _positive(cls, v):
        if not v or min(v) <= 0:
            raise ValueError("delta_t_over_tpi must be a nonempty list of positive values")
        return v


class OutputConfig(_Strict):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"


class SIConfig(_Strict):
    """Laboratory values used only for ``--si`` reporting."""

    k0: float = Field(1.6e7, gt=0)
    mass_amu: float = Field(86.909180527, gt=0)


class RunConfig(_Strict):
    preset: Literal["kc", "kc_chirped", "ramsey", "trap"] = "kc"
    physical: PhysicalConfig = PhysicalConfig()
    grid: GridConfig = GridConfig()
    state: StateConfig = StateConfig()
    timing: TimingConfig = TimingConfig()
    fisher: FisherConfig = FisherConfig()
    resolution: ResolutionConfig = ResolutionConfig()
    pulses: PulseConfig = PulseConfig()
    free_method: Literal["analytic", "split_step"] = "analytic"
    output: OutputConfig = OutputConfig()
    si: SIConfig = SIConfig()

    def params(self) -> PhysicalParams:
        return PhysicalParams(**self.physical.model_dump())

    def make_grid(self) -> Grid:
        return Grid(self.grid.n_points, self.grid.z_min, self.grid.z_max, self.physical.hbar)

    def experiment(self) -> Experiment:
        return Experiment(
            params=self.params(),
            grid=self.make_grid(),
            sigma=self.state.sigma,
            t_pi=self.timing.t_pi,
            state=self.state.kind,
            omega=self.timing.trap_omega,
            floor=self.fisher.floor,
            free_method=self.free_method,
        )


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Read a JSON config and apply dotted-key overrides such as ``{"timing.t_pi": 20}``."""
    data = json.loads(Path(path).read_text()) if path else {}
    for key, value in (overrides or {}).items():
        node = data
        *parents, leaf = key.split(".")
        for part in parents:
            node = node.setdefault(part, {})
        node[leaf] = value
    return RunConfig.model_validate(data)


def config_schema() -> dict:
    return RunConfig.model_json_schema()


# -- writing --------------------------------------------------------------------


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return "" if v is None or not math.isfinite(v) else "%.9g" % v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def trace_to_csv(trace: FisherTrace) -> str:
    t_pi = trace.metadata.get("t_pi", 1.0)
    rows = zip(trace.times / t_pi, *(trace.columns[c] for c in COLUMNS))
    return _csv_text(TRACE_HEADER, rows)


def trace_to_json(trace: FisherTrace) -> str:
    t_pi = trace.metadata.get("t_pi", 1.0)
    doc = {
        "columns": {"t_over_Tpi": trace.times / t_pi, **{c: trace.columns[c] for c in COLUMNS}},
        "times": trace.times,
        "metadata": trace.metadata,
        "diagnostics": trace.diagnostics,
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def write_trace(trace: FisherTrace, fmt: str, path) -> None:
    if fmt == "csv":
        atomic_write(path, trace_to_csv(trace))
    elif fmt == "json":
        atomic_write(path, trace_to_json(trace))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _column(values) -> np.ndarray:
    return np.array([np.nan if v is None else v for v in values], dtype=float)


def read_trace(path) -> FisherTrace:
    """Read a trace written by :func:`write_trace` (format chosen by extension)."""
    path = Path(path)
    if path.suffix == ".json":
        doc = json.loads(path.read_text())
        cols = {c: _column(doc["columns"][c]) for c in COLUMNS}
        return FisherTrace(_column(doc["times"]), cols, doc.get("metadata", {}), doc.get("diagnostics", []))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        rows = [[float(v) if v else np.nan for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(TRACE_HEADER))
    cols = {c: data[:, i + 1] for i, c in enumerate(COLUMNS)}
    return FisherTrace(data[:, 0], cols, {"t_pi": 1.0})


def write_table(table: SweepTable, fmt: str, path) -> None:
    names = list(table.columns)
    if fmt == "csv":
        atomic_write(path, _csv_text(names, zip(*(table.columns[n] for n in names))))
    elif fmt == "json":
        doc = {"columns": table.columns, "metadata": table.metadata}
        atomic_write(path, json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")
