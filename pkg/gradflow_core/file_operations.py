# MIT License

# Copyright (c) 2025 Abhishek Mishra (neolateral.in)

# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.

# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
File operations for gradflow runs.
Handles scenario configs and the CSV, JSON and profile artifacts.
"""

import csv
import json
import logging
import math
import os

import numpy as np
import pydantic
import yaml

from .constants import (
    CD_COLUMNS,
    FLOAT_FORMAT,
    LV_COLUMNS,
    MUTATION_COLUMNS,
    OPTIMIZE_COLUMNS,
    PETVIASHVILI_COLUMNS,
    REGCD_COLUMNS,
    SUMMARY_FILE,
)
from .errors import ParseError, SchemaError, ValidationError
from .schemas import Scenario

logger = logging.getLogger(__name__)

# diagnose needs these, everything else in a trace is optional
REQUIRED_TRACE_COLUMNS = ["energy", "grad_norm"]


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return FLOAT_FORMAT.format(float(value))


def _field_of(error):
    return ".".join(str(part) for part in error["loc"]) or None


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        # JSON has no inf/nan
        return value if math.isfinite(value) else None
    return value


class TraceFileManager:
    """
    Handles all file I/O of the harness.
    """

    @staticmethod
    def load_config(path):
        """
        Load and validate a scenario config.
        Returns the list of Scenario objects in file order.
        """
        if not os.path.exists(path):
            raise FileNotFoundError(f"Config file not found: {path}")
        with open(path, "r") as f:
            text = f.read()
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ParseError(f"Cannot parse {path}: {exc}", line=line) from exc

        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ParseError(f"{path} must hold a mapping with a 'scenarios' key")
        if "scenarios" not in raw:
            raise ParseError(f"{path} has no 'scenarios' key", key="scenarios")
        extra = sorted(set(raw) - {"scenarios"})
        if extra:
            raise ValidationError(f"Unknown top-level keys: {extra}", field=extra[0])
        entries = raw["scenarios"] or []
        if not isinstance(entries, list):
            raise ParseError("'scenarios' must be a list", key="scenarios")

        scenarios = []
        seen = set()
        for position, entry in enumerate(entries):
            sid = entry.get("id") if isinstance(entry, dict) else None
            label = sid if sid is not None else f"#{position}"
            try:
                scenario = Scenario.model_validate(entry)
            except pydantic.ValidationError as exc:
                first = exc.errors()[0]
                raise ValidationError(
                    f"Scenario {label}: {first['msg']}", scenario=sid, field=_field_of(first)
                ) from exc
            try:
                scenario.params
            except pydantic.ValidationError as exc:
                first = exc.errors()[0]
                field = "parameters." + (_field_of(first) or "")
                raise ValidationError(
                    f"Scenario {label}: {field}: {first['msg']}", scenario=sid, field=field
                ) from exc
            if scenario.id in seen:
                raise ValidationError(f"Duplicate scenario id: {scenario.id}", scenario=sid, field="id")
            seen.add(scenario.id)
            scenarios.append(scenario)
        logger.info("Loaded %d scenarios from %s", len(scenarios), path)
        return scenarios

    @staticmethod
    def scenario_dir(out_dir, scenario_id):
        """
        Directory holding one scenario's artifacts, created on demand.
        """
        path = os.path.join(out_dir, scenario_id)
        os.makedirs(path, exist_ok=True)
        return path

    @staticmethod
    def write_csv(path, columns, rows):
        """
        Write rows under a mandatory header, floats with 17 significant digits.
        """
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise ValueError(f"Row has {len(row)} values for {len(columns)} columns")
                writer.writerow([_fmt(v) for v in row])
        return path

    @staticmethod
    def optimize_rows(trace):
        # step_norm of row k is |u_k - u_k-1|, empty on the first row
        rows = []
        for k, (e, g) in enumerate(zip(trace.energies, trace.grad_norms)):
            step = trace.step_norms[k - 1] if k else None
            rows.append([k, e, g, step])
        return OPTIMIZE_COLUMNS, rows

    @staticmethod
    def lv_rows(trace):
        entropies = trace.entropies or [None] * len(trace.states)
        rows = [
            [k, t, e, F, m, r]
            for k, (t, e, F, m, r) in enumerate(
                zip(trace.times, trace.energies, entropies, trace.min_components, trace.ratios)
            )
        ]
        return LV_COLUMNS, rows

    @staticmethod
    def mutation_rows(trace):
        rows = [
            [k, t, h, m]
            for k, (t, h, m) in enumerate(zip(trace.times, trace.h_energies, trace.min_components))
        ]
        return MUTATION_COLUMNS, rows

    @staticmethod
    def cd_rows(trace, regularized=False):
        columns = REGCD_COLUMNS if regularized else CD_COLUMNS
        rows = [[getattr(r, name) for name in columns] for r in trace.records]
        return columns, rows

    @staticmethod
    def petviashvili_rows(result):
        rows = [
            [k + 1, M, change]
            for k, (M, change) in enumerate(zip(result.stabilizers, result.changes))
        ]
        return PETVIASHVILI_COLUMNS, rows

    @staticmethod
    def read_trace_csv(path):
        """
        Read a trace CSV into a dict of float arrays keyed by column.
        Empty cells read as nan.
        """
        if not os.path.exists(path):
            raise FileNotFoundError(f"Trace file not found: {path}")
        with open(path, "r", newline="") as f:
            reader = csv.reader(f)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError(f"{path} is empty") from None
            header = [h.strip() for h in header]
            missing = [c for c in REQUIRED_TRACE_COLUMNS if c not in header]
            if missing:
                raise SchemaError(f"{path} lacks columns {missing}")
            columns = {name: [] for name in header}
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise SchemaError(f"{path}:{lineno} has {len(row)} fields, header has {len(header)}")
                for name, cell in zip(header, row):
                    cell = cell.strip()
                    try:
                        columns[name].append(float(cell) if cell else math.nan)
                    except ValueError:
                        raise SchemaError(f"{path}:{lineno} column {name} is not a number: {cell!r}") from None
        return {name: np.asarray(values, dtype=float) for name, values in columns.items()}

    @staticmethod
    def write_json(path, data):
        with open(path, "w") as f:
            json.dump(_jsonable(data), f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    @staticmethod
    def write_profile(path, x, u):
        """
        Two whitespace separated columns x and u.
        """
        with open(path, "w") as f:
            f.write("# x u\n")
            for xi, ui in zip(x, u):
                f.write(f"{_fmt(xi)} {_fmt(ui)}\n")
        return path

    @staticmethod
    def read_profile(path):
        data = np.loadtxt(path, comments="#", ndmin=2)
        return data[:, 0], data[:, 1]

    @staticmethod
    def write_summary(out_dir, summary):
        """
        summary.json with every scenario in id order.
        """
        os.makedirs(out_dir, exist_ok=True)
        payload = summary.model_dump()
        payload["scenarios"] = sorted(payload["scenarios"], key=lambda r: r["id"])
        payload["passed"] = summary.passed
        return TraceFileManager.write_json(os.path.join(out_dir, SUMMARY_FILE), payload)
