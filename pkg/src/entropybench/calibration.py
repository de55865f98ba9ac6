"""Device calibration tables and their conversion to depolarising noise rates.

The CSV layout has two sections separated by a blank line, in either order:
a pair section whose header starts with ``Pair`` and a qubit section whose
header starts with ``Qubit``. Blank cells mean "not reported". Pair ids are
written ``100-101`` (``100--101`` is also accepted).
"""

from __future__ import annotations

import csv
import io
import re
import statistics
from dataclasses import dataclass, field, fields
from importlib import resources
from typing import Sequence

from .sim import NoiseModel

PAIR_COLUMNS = {
    "Pair": "pair",
    "fXY": "f_xy",
    "fXY std err": "f_xy_err",
    "fCZ": "f_cz",
    "fCZ std err": "f_cz_err",
    "Avg T1 (us)": "avg_t1",
    "Avg T2 (us)": "avg_t2",
    "Avg fActiveReset": "avg_f_active_reset",
    "Avg fRO": "avg_f_ro",
}
QUBIT_COLUMNS = {
    "Qubit": "qubit",
    "T1 (us)": "t1",
    "T2 (us)": "t2",
    "f1QRB": "f1q_rb",
    "f1QRB std err": "f1q_rb_err",
    "f1Q sim. RB": "f1q_sim_rb",
    "f1Q sim. RB std err": "f1q_sim_rb_err",
    "fActiveReset": "f_active_reset",
    "fRO": "f_ro",
}
REQUIRED = {"pair": ("Pair", "fCZ"), "qubit": ("Qubit", "f1Q sim. RB")}

EXAMPLE_TABLE = "aspen_m3_2023-12-09.csv"


class CalibrationError(ValueError):
    pass


@dataclass
class PairRow:
    pair: tuple[int, int]
    f_xy: float | None = None
    f_xy_err: float | None = None
    f_cz: float | None = None
    f_cz_err: float | None = None
    avg_t1: float | None = None
    avg_t2: float | None = None
    avg_f_active_reset: float | None = None
    avg_f_ro: float | None = None


@dataclass
class QubitRow:
    qubit: int
    t1: float | None = None
    t2: float | None = None
    f1q_rb: float | None = None
    f1q_rb_err: float | None = None
    f1q_sim_rb: float | None = None
    f1q_sim_rb_err: float | None = None
    f_active_reset: float | None = None
    f_ro: float | None = None


@dataclass
class CalibrationTable:
    pairs: list[PairRow] = field(default_factory=list)
    qubits: list[QubitRow] = field(default_factory=list)


def _normalise_header(name: str) -> str:
    return name.strip().replace("µs", "us").replace("μs", "us")


def _parse_pair(text: str) -> tuple[int, int]:
    parts = [p for p in re.split(r"[-\u2013\u2014]+", text.strip()) if p]
    if len(parts) != 2:
        raise CalibrationError(f"malformed pair id {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise CalibrationError(f"malformed pair id {text!r}") from None


def _parse_value(text: str, column: str, attr: str, line: int) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        raise CalibrationError(f"line {line}: non-numeric {column!r} cell {text!r}") from None
    is_fidelity = attr.startswith(("f_", "f1q", "avg_f")) and not attr.endswith("_err")
    if is_fidelity and not 0.0 <= value <= 1.0:
        raise CalibrationError(f"line {line}: fidelity {column!r}={value} outside [0, 1]")
    return value


def _split_sections(text: str) -> list[list[tuple[int, list[str]]]]:
    sections, current = [], []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not cell.strip() for cell in row):
            if current:
                sections.append(current)
                current = []
            continue
        current.append((lineno, row))
    if current:
        sections.append(current)
    return sections


def parse_calibration(text: str) -> CalibrationTable:
    sections = _split_sections(text)
    if not sections:
        raise CalibrationError("calibration file is empty")
    table = CalibrationTable()
    for section in sections:
        _, header = section[0]
        header = [_normalise_header(h) for h in header]
        kind = {"Pair": "pair", "Qubit": "qubit"}.get(header[0])
        if kind is None:
            raise CalibrationError(f"unrecognised section header starting with {header[0]!r}")
        missing = [c for c in REQUIRED[kind] if c not in header]
        if missing:
            raise CalibrationError(f"{kind} section missing columns {missing}")
        mapping = PAIR_COLUMNS if kind == "pair" else QUBIT_COLUMNS
        for lineno, row in section[1:]:
            row = row + [""] * (len(header) - len(row))
            values = {}
            for name, cell in zip(header, row):
                attr = mapping.get(name)
                if attr is None:
                    continue
                if attr == "pair":
                    values[attr] = _parse_pair(cell)
                elif attr == "qubit":
                    try:
                        values[attr] = int(cell)
                    except ValueError:
                        raise CalibrationError(f"line {lineno}: bad qubit id {cell!r}") from None
                else:
                    values[attr] = _parse_value(cell, name, attr, lineno)
            if kind == "pair":
                table.pairs.append(PairRow(**values))
            else:
                table.qubits.append(QubitRow(**values))
    if not any(q.f1q_sim_rb is not None for q in table.qubits):
        raise CalibrationError("no usable single-qubit fidelity")
    if not any(p.f_cz is not None for p in table.pairs):
        raise CalibrationError("no usable two-qubit fidelity")
    return table


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return f"{value[0]}-{value[1]}"
    return repr(value)


def serialize_calibration(table: CalibrationTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for rows, mapping, cls in (
        (table.pairs, PAIR_COLUMNS, PairRow),
        (table.qubits, QUBIT_COLUMNS, QubitRow),
    ):
        if buf.tell():
            buf.write("\n")
        writer.writerow(list(mapping))
        attrs = [f.name for f in fields(cls)]
        for row in rows:
            writer.writerow([_format(getattr(row, a)) for a in attrs])
    return buf.getvalue()


def load_example_table() -> CalibrationTable:
    """The bundled eight-qubit superconducting device snapshot."""
    text = resources.files("entropybench.data").joinpath(EXAMPLE_TABLE).read_text(encoding="utf-8")
    return parse_calibration(text)


def noise_from_fidelities(f1: float, f2: float) -> tuple[float, float]:
    """Depolarising probabilities ``(2 (1 - F1), 4/3 (1 - F2))`` clipped to [0, 1]."""
    p1 = 2.0 * (1.0 - f1)
    p2 = 4.0 / 3.0 * (1.0 - f2)
    return min(max(p1, 0.0), 1.0), min(max(p2, 0.0), 1.0)


def aggregate(table: CalibrationTable, policy: str | Sequence[int] = "median") -> tuple[float, float]:
    """Aggregate (F1, F2) over single-qubit sim-RB and CZ fidelities.

    ``policy`` is ``"median"``, ``"mean"`` or a list of qubit ids; with a list,
    F1 is the median over those qubits and F2 the median over pairs whose two
    qubits both belong to it.
    """
    if isinstance(policy, str):
        if policy not in ("median", "mean"):
            raise ValueError(f"unknown aggregation policy {policy!r}")
        reduce = statistics.median if policy == "median" else statistics.fmean
        ones = [q.f1q_sim_rb for q in table.qubits if q.f1q_sim_rb is not None]
        twos = [p.f_cz for p in table.pairs if p.f_cz is not None]
    else:
        subset = set(policy)
        reduce = statistics.median
        ones = [q.f1q_sim_rb for q in table.qubits if q.qubit in subset and q.f1q_sim_rb is not None]
        twos = [
            p.f_cz for p in table.pairs if set(p.pair) <= subset and p.f_cz is not None
        ]
    if not ones or not twos:
        raise CalibrationError("aggregation policy selects no usable fidelities")
    return float(reduce(ones)), float(reduce(twos))


def symmetric_readout(p01: float, p10: float) -> float:
    """Single readout error rate for the readout-augmented model."""
    return max(p01, p10)


def noise_model(
    table: CalibrationTable,
    policy: str | Sequence[int] = "median",
    readout: tuple[float, float] = (0.0, 0.0),
) -> NoiseModel:
    f1, f2 = aggregate(table, policy)
    p1, p2 = noise_from_fidelities(f1, f2)
    return NoiseModel(p1, p2, readout[0], readout[1])
