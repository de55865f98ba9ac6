"""CSV formats shared by the command-line tools.

Every file is UTF-8, comma separated, ``.`` decimal, LF line endings and has
a header row. Floats are written with ``repr`` so output is reproducible
byte for byte.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .heuristic import PurityCurve
from .shadows import SnapshotSet
from .sim import bits_to_str, str_to_bits
from .swaptest import SwapTestRecord

SWEEP_COLUMNS = ["n", "depth", "run_id", "estimator", "purity", "purity_valid", "renyi2_density"]
SNAPSHOT_COLUMNS = ["run_id", "setting_index", "basis_string", "outcome_bits"]
SWAP_COLUMNS = ["run_id", "x1", "x2", "parity"]
FIT_CURVE_COLUMNS = ["n", "depth", "model_purity", "model_renyi2_density"]
FRONTIER_COLUMNS = ["n", "depth_this_work", "depth_prior"]


def renyi2_from_purity(value: float, n: int) -> float | None:
    """Entropy density for an estimated purity; ``None`` when the estimate is non-positive."""
    if value <= 0:
        return None
    return -math.log2(value) / n


@dataclass(frozen=True)
class SweepRow:
    n: int
    depth: int
    run_id: int
    estimator: str
    purity: float

    @property
    def valid(self) -> bool:
        return self.purity > 0

    @property
    def renyi2_density(self) -> float | None:
        return renyi2_from_purity(self.purity, self.n)

    def cells(self) -> list[str]:
        density = self.renyi2_density
        return [
            str(self.n),
            str(self.depth),
            str(self.run_id),
            self.estimator,
            repr(float(self.purity)),
            "1" if self.valid else "0",
            "" if density is None else repr(density),
        ]


def _writer(buf):
    return csv.writer(buf, lineterminator="\n")


def _table(columns: list[str], rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def write_text(path: str | Path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read_rows(source: str | Path, columns: list[str]) -> list[dict[str, str]]:
    with open(source, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames)[: len(columns)] != columns:
            raise ValueError(f"{source}: expected columns {columns}, got {reader.fieldnames}")
        return list(reader)


def sweep_csv(rows: Iterable[SweepRow]) -> str:
    return _table(SWEEP_COLUMNS, (r.cells() for r in rows))


def read_sweep(source: str | Path) -> list[SweepRow]:
    return [
        SweepRow(int(r["n"]), int(r["depth"]), int(r["run_id"]), r["estimator"], float(r["purity"]))
        for r in _read_rows(source, SWEEP_COLUMNS)
    ]


def curves_from_sweep(rows: Iterable[SweepRow]) -> list[PurityCurve]:
    """Average repeated runs per (n, depth); the stderr is ``std / sqrt(R)`` when R > 1."""
    grouped: dict[int, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        grouped[row.n][row.depth].append(row.purity)
    curves = []
    for n in sorted(grouped):
        points = []
        for depth in sorted(grouped[n]):
            values = np.array(grouped[n][depth])
            stderr = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else None
            points.append((depth, float(values.mean()), stderr))
        curves.append(PurityCurve(n, points))
    return curves


def snapshots_csv(runs: Iterable[tuple[int, SnapshotSet]]) -> str:
    def rows():
        for run_id, snaps in runs:
            for index, (setting, block) in enumerate(zip(snaps.settings, snaps.outcomes)):
                for bits in block:
                    yield [str(run_id), str(index), setting, bits_to_str(bits)]

    return _table(SNAPSHOT_COLUMNS, rows())


def read_snapshots(source: str | Path) -> dict[int, SnapshotSet]:
    runs: dict[int, dict[int, tuple[str, list[np.ndarray]]]] = defaultdict(dict)
    for r in _read_rows(source, SNAPSHOT_COLUMNS):
        blocks = runs[int(r["run_id"])]
        index = int(r["setting_index"])
        setting, bits = blocks.setdefault(index, (r["basis_string"], []))
        if setting != r["basis_string"]:
            raise ValueError(f"setting index {index} has conflicting bases")
        bits.append(str_to_bits(r["outcome_bits"]))
    out = {}
    for run_id, blocks in sorted(runs.items()):
        order = sorted(blocks)
        out[run_id] = SnapshotSet(
            [blocks[i][0] for i in order], [np.array(blocks[i][1], dtype=np.uint8) for i in order]
        )
    return out


def swap_records_csv(runs: Iterable[tuple[int, Iterable[SwapTestRecord]]]) -> str:
    return _table(
        SWAP_COLUMNS,
        ([str(run_id), rec.x1, rec.x2, str(rec.parity)] for run_id, recs in runs for rec in recs),
    )


def read_swap_records(source: str | Path) -> dict[int, list[SwapTestRecord]]:
    out: dict[int, list[SwapTestRecord]] = defaultdict(list)
    for r in _read_rows(source, SWAP_COLUMNS):
        out[int(r["run_id"])].append(SwapTestRecord(r["x1"], r["x2"], int(r["parity"])))
    return dict(out)


def frontier_rows_csv(rows: Iterable[tuple[int | str, float, float]]) -> str:
    return _table(FRONTIER_COLUMNS, ([str(n), repr(a), repr(b)] for n, a, b in rows))


def read_frontier(source: str | Path) -> list[tuple[float, float, float]]:
    return [
        (float(r["n"]), float(r["depth_this_work"]), float(r["depth_prior"]))
        for r in _read_rows(source, FRONTIER_COLUMNS)
    ]


def fit_curve_csv(rows: Iterable[tuple[int, int, float]]) -> str:
    def cells():
        for n, depth, value in rows:
            density = renyi2_from_purity(value, n)
            yield [str(n), str(depth), repr(value), "" if density is None else repr(density)]

    return _table(FIT_CURVE_COLUMNS, cells())


def read_fit_curve(source: str | Path) -> list[tuple[int, int, float]]:
    return [
        (int(r["n"]), int(r["depth"]), float(r["model_purity"]))
        for r in _read_rows(source, FIT_CURVE_COLUMNS)
    ]
