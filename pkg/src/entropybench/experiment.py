"""Sweep configuration and execution.

Configuration files are INI-style::

    [experiment]
    widths = 2-6
    depths = 1-20
    estimator = exact          ; exact | shadows | swap
    seed = 837
    output = sweep.csv

    [noise]
    p1 = 0.008
    p2 = 0.054

    [estimator]
    settings = 50
    shots = 1000
    repetitions = 3

Integer lists accept ``a-b`` ranges and comma lists (``2,3,5-7``). Every key
is unique across sections so each can be overridden by a ``--key`` flag.
"""

from __future__ import annotations

import configparser
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import calibration
from .ansatz import build_circuit, evolve_noisy
from .records import SweepRow
from .shadows import (
    MAX_DERANDOMIZED_QUBITS,
    derandomized_settings,
    purity_estimate,
    resample_randomized,
    run_protocol,
    sample_settings,
)
from .sim import MAX_QUBITS, NoiseModel, bits_to_str, new_zero_state, purity
from .swaptest import SwapTestRecord, bell_distribution, parities, purity_estimate_swap, sample_bell_bits

log = logging.getLogger(__name__)

ESTIMATORS = ("exact", "shadows", "swap")
SWAP_MAX_QUBITS = MAX_QUBITS // 2

SECTIONS = {
    "experiment": ("widths", "depths", "estimator", "seed", "circuit_seed", "output", "workers"),
    "noise": ("p1", "p2", "p01", "p10", "calibration", "aggregation"),
    "estimator": (
        "settings",
        "shots",
        "repetitions",
        "derandomize",
        "resample_method",
        "swap_shots",
        "measurement_noise",
        "readout",
    ),
}


class ConfigError(ValueError):
    pass


def parse_int_list(text: str) -> list[int]:
    values = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    return values


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass
class ExperimentConfig:
    widths: list[int] = field(default_factory=lambda: [3])
    depths: list[int] = field(default_factory=lambda: list(range(1, 11)))
    estimator: str = "exact"
    seed: int = 837
    circuit_seed: int | None = None
    output: str | None = None
    workers: int = 1
    p1: float = 0.0
    p2: float = 0.0
    p01: float = 0.0
    p10: float = 0.0
    calibration: str | None = None
    aggregation: str = "median"
    settings: int = 50
    shots: int = 1000
    repetitions: int = 3
    derandomize: bool = False
    resample_method: int = 0
    swap_shots: int | None = None
    measurement_noise: bool = False
    readout: bool = False

    _CONVERTERS = {
        "widths": parse_int_list,
        "depths": parse_int_list,
        "seed": int,
        "circuit_seed": lambda v: None if str(v).strip() == "" else int(v),
        "workers": int,
        "p1": float,
        "p2": float,
        "p01": float,
        "p10": float,
        "settings": int,
        "shots": int,
        "repetitions": int,
        "derandomize": _parse_bool,
        "resample_method": int,
        "swap_shots": lambda v: None if str(v).strip() == "" else int(v),
        "measurement_noise": _parse_bool,
        "readout": _parse_bool,
    }

    def update(self, values: dict) -> ExperimentConfig:
        names = {f.name for f in fields(self)}
        for key, raw in values.items():
            if raw is None:
                continue
            if key not in names:
                raise ConfigError(f"unknown configuration key {key!r}")
            convert = self._CONVERTERS.get(key, str)
            try:
                setattr(self, key, convert(raw) if isinstance(raw, str) else raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
        return self

    @classmethod
    def from_file(cls, path: str | Path) -> ExperimentConfig:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        if not parser.read(path, encoding="utf-8"):
            raise ConfigError(f"cannot read configuration file {path}")
        values = {}
        for section in parser.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]")
            for key, value in parser.items(section):
                if key not in SECTIONS[section]:
                    raise ConfigError(f"key {key!r} does not belong in [{section}]")
                values[key] = value
        return cls().update(values)

    def noise(self) -> NoiseModel:
        if self.calibration:
            policy = self.aggregation
            if policy not in ("median", "mean"):
                policy = parse_int_list(policy)
            table = calibration.parse_calibration(Path(self.calibration).read_text(encoding="utf-8"))
            return calibration.noise_model(table, policy, (self.p01, self.p10))
        return NoiseModel(self.p1, self.p2, self.p01, self.p10)

    def validate(self) -> ExperimentConfig:
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if not self.widths or not self.depths:
            raise ConfigError("widths and depths must be non-empty")
        cap = SWAP_MAX_QUBITS if self.estimator == "swap" else MAX_QUBITS
        if self.estimator == "shadows" and self.derandomize:
            cap = MAX_DERANDOMIZED_QUBITS
        bad = [n for n in self.widths if not 1 <= n <= cap]
        if bad:
            raise ConfigError(f"widths {bad} outside 1..{cap} for estimator {self.estimator}")
        if min(self.depths) < 0:
            raise ConfigError("depths must be non-negative")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be at least 1")
        if self.estimator == "shadows":
            if self.settings < 2 and not self.derandomize:
                raise ConfigError("shadows needs settings >= 2")
            if self.shots < 1:
                raise ConfigError("shots must be at least 1")
            if self.resample_method not in (0, 1, 2):
                raise ConfigError("resample_method must be 0 (off), 1 or 2")
            if self.resample_method and not self.derandomize:
                raise ConfigError("resample_method requires derandomize = true")
        if self.estimator == "swap" and (self.swap_shots or self.settings * self.shots) < 1:
            raise ConfigError("swap needs at least one shot")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        try:
            self.noise()
        except (ValueError, OSError) as exc:
            raise ConfigError(f"invalid noise configuration: {exc}") from None
        return self


def cell_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent stream per sweep cell, stable under reordering."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _estimate_cell(cfg: ExperimentConfig, noise: NoiseModel, n: int, depth: int, state, raw=None) -> list[SweepRow]:
    """Rows for one (n, depth) cell; measured data goes into ``raw[(n, depth)]`` when given."""
    readout = noise.readout if cfg.readout else None
    if cfg.estimator == "exact":
        return [SweepRow(n, depth, 0, "exact", purity(state))]

    kept = [] if raw is not None else None
    if raw is not None:
        raw[(n, depth)] = kept

    rows = []
    if cfg.estimator == "swap":
        gate_noise = noise.without_readout() if cfg.measurement_noise else None
        probs = bell_distribution(state, gate_noise)
        measure = NoiseModel(
            *(gate_noise.p1, gate_noise.p2) if gate_noise else (0.0, 0.0),
            *(readout if readout else (0.0, 0.0)),
        )
        shots = cfg.swap_shots or cfg.settings * cfg.shots
        for run in range(cfg.repetitions):
            x1, x2 = sample_bell_bits(state, shots, cell_rng(cfg.seed, n, depth, run), measure, probs)
            bits = parities(x1, x2)
            rows.append(SweepRow(n, depth, run, "swap", purity_estimate_swap(bits)))
            if kept is not None:
                recs = [SwapTestRecord(bits_to_str(a), bits_to_str(b), int(i)) for a, b, i in zip(x1, x2, bits)]
                kept.append((run, recs))
        return rows

    if cfg.derandomize and cfg.resample_method:
        data_rng = cell_rng(cfg.seed, n, depth, cfg.repetitions)
        universe = derandomized_settings(n)
        datasets = [run_protocol(state, universe, cfg.shots, data_rng, readout) for _ in range(cfg.repetitions)]
        for run in range(cfg.repetitions):
            snaps = resample_randomized(
                datasets, cfg.settings, cell_rng(cfg.seed, n, depth, run), cfg.resample_method, run
            )
            rows.append(SweepRow(n, depth, run, "shadows", purity_estimate(snaps)))
            if kept is not None:
                kept.append((run, snaps))
        return rows

    for run in range(cfg.repetitions):
        rng = cell_rng(cfg.seed, n, depth, run)
        settings = derandomized_settings(n) if cfg.derandomize else sample_settings(n, cfg.settings, rng)
        snaps = run_protocol(state, settings, cfg.shots, rng, readout)
        rows.append(SweepRow(n, depth, run, "shadows", purity_estimate(snaps)))
        if kept is not None:
            kept.append((run, snaps))
    return rows


def run_sweep(cfg: ExperimentConfig, raw: dict | None = None) -> list[SweepRow]:
    """Evaluate every (width, depth, run) cell; rows come back sorted.

    Pass a dict as ``raw`` to also collect the measured snapshots or SWAP
    records, keyed by ``(n, depth)``.
    """
    cfg.validate()
    noise = cfg.noise()
    circuit_seed = cfg.seed if cfg.circuit_seed is None else cfg.circuit_seed
    depths = sorted(set(cfg.depths))

    jobs = []
    for n in sorted(set(cfg.widths)):
        circuit = build_circuit(n, max(depths), circuit_seed)
        states = evolve_noisy(circuit, noise.without_readout())
        for depth in depths:
            state = states[depth - 1] if depth > 0 else new_zero_state(n)
            jobs.append((n, depth, state))
    log.info("running %d sweep cells with %d worker(s)", len(jobs), cfg.workers)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = pool.map(lambda job: _estimate_cell(cfg, noise, *job, raw), jobs)
        rows = [row for cell in results for row in cell]
    return sorted(rows, key=lambda r: (r.n, r.depth, r.run_id))
