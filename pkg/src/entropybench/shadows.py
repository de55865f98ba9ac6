"""Purity estimation from randomized single-qubit Pauli measurements.

A measurement setting is a string over ``XYZ``, one basis per qubit. Before a
computational-basis readout the register is rotated per qubit by
``X -> H``, ``Y -> H S^dagger`` and ``Z -> I``.

The estimator averages ``Tr[rho_m rho_m']`` over pairs of distinct settings,
where ``rho_m`` is the averaged snapshot operator of setting ``m``. Per qubit
the trace of two snapshot operators is ``9 * gamma - 4``, with ``gamma`` the
basis/outcome overlap from :func:`gamma`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._numeric import round_up
from .sim import (
    HADAMARD,
    S_DAG,
    DensityMatrix,
    apply_unitary,
    measurement_probabilities,
    sample_distribution,
)

BASES = "XYZ"
MAX_DERANDOMIZED_QUBITS = 8

BASIS_CHANGE = {
    "X": HADAMARD,
    "Y": HADAMARD @ S_DAG,
    "Z": np.eye(2, dtype=complex),
}


@dataclass
class SnapshotSet:
    """Measurement settings and, per setting, a ``(K, n)`` array of outcome bits."""

    settings: list[str]
    outcomes: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if len(self.settings) != len(self.outcomes):
            raise ValueError("one outcome block is needed per setting")
        widths = {len(s) for s in self.settings}
        if len(widths) > 1:
            raise ValueError("settings have inconsistent widths")
        for setting, block in zip(self.settings, self.outcomes):
            if set(setting) - set(BASES):
                raise ValueError(f"invalid setting {setting!r}")
            if block.ndim != 2 or block.shape[1] != len(setting):
                raise ValueError(f"outcome block shape {block.shape} does not match {setting!r}")

    @property
    def n(self) -> int:
        return len(self.settings[0])

    def __len__(self):
        return len(self.settings)

    @property
    def shots(self) -> int:
        return sum(len(block) for block in self.outcomes)


def gamma(u: str, s: int, u2: str, s2: int) -> float:
    """``|<s| U_u U_u2^dagger |s2>|^2`` for single-qubit Pauli basis changes."""
    if u not in BASES or u2 not in BASES or s not in (0, 1) or s2 not in (0, 1):
        raise ValueError(f"invalid arguments {(u, s, u2, s2)}")
    if u == u2:
        return 1.0 if s == s2 else 0.0
    return 0.5


def sample_settings(n: int, count: int, rng: np.random.Generator) -> list[str]:
    """``count`` settings with every qubit basis drawn uniformly from X, Y, Z."""
    if count < 2:
        raise ValueError("purity estimation needs at least 2 settings")
    draws = rng.integers(0, 3, size=(count, n))
    return ["".join(BASES[b] for b in row) for row in draws]


def derandomized_settings(n: int) -> list[str]:
    """Every setting once, in lexicographic X < Y < Z order."""
    if not 1 <= n <= MAX_DERANDOMIZED_QUBITS:
        raise ValueError(f"exhaustive settings supported for 1..{MAX_DERANDOMIZED_QUBITS} qubits")
    return ["".join(p) for p in itertools.product(BASES, repeat=n)]


def rotate_to_setting(rho: DensityMatrix, setting: str) -> DensityMatrix:
    if len(setting) != rho.n:
        raise ValueError(f"setting {setting!r} does not match {rho.n} qubits")
    for q, basis in enumerate(setting):
        if basis != "Z":
            rho = apply_unitary(rho, BASIS_CHANGE[basis], (q,))
    return rho


def setting_probabilities(rho: DensityMatrix, setting: str) -> np.ndarray:
    return measurement_probabilities(rotate_to_setting(rho, setting))


def collect_snapshots(
    rho: DensityMatrix,
    setting: str,
    shots: int,
    rng: np.random.Generator,
    readout: tuple[float, float] | None = None,
) -> np.ndarray:
    return sample_distribution(setting_probabilities(rho, setting), rho.n, shots, rng, readout)


def run_protocol(
    rho: DensityMatrix,
    settings: Sequence[str],
    shots: int,
    rng: np.random.Generator,
    readout: tuple[float, float] | None = None,
) -> SnapshotSet:
    """Measure ``shots`` snapshots for each listed setting (repeats allowed)."""
    cache: dict[str, np.ndarray] = {}
    outcomes = []
    for setting in settings:
        if setting not in cache:
            cache[setting] = setting_probabilities(rho, setting)
        outcomes.append(sample_distribution(cache[setting], rho.n, shots, rng, readout))
    return SnapshotSet(list(settings), outcomes)


def _setting_vector(setting: str, block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Averaged snapshot operator of one setting in the normalised Pauli basis.

    Returns ``(indices, values)`` into a length-``4**n`` vector. Per qubit a
    snapshot operator is ``I/2 + (3/2) (-1)^bit P_basis``, whose coefficient
    vector is ``(1/sqrt2, 3 (-1)^bit / sqrt2)`` on ``(I, P_basis)``, so the
    Euclidean inner product of two such vectors is ``9 * gamma - 4``.
    """
    n = len(setting)
    rows, counts = np.unique(block, axis=0, return_counts=True)
    signs = 1.0 - 2.0 * rows
    weights = counts / len(block)
    idx = np.zeros(1, dtype=np.int64)
    vals = weights[:, None].astype(float)
    scale = 1.0 / math.sqrt(2.0)
    for q, basis in enumerate(setting):
        pauli = 1 + BASES.index(basis)
        idx = np.concatenate([4 * idx, 4 * idx + pauli])
        vals = np.concatenate([vals * scale, vals * (3.0 * scale) * signs[:, q : q + 1]], axis=1)
    return idx, vals.sum(axis=0)


def purity_estimate(snaps: SnapshotSet) -> float:
    """Unclipped pair-averaged purity estimate.

    Equals ``2/(M(M-1)) sum_{m'<m} 1/(K_m K_m') sum_{k,k'} prod_q (9 gamma - 4)``
    computed as ``(|sum_m v_m|^2 - sum_m |v_m|^2) / (M (M - 1))`` with ``v_m``
    the per-setting vectors above; identical outcomes are merged into counts.
    """
    m = len(snaps)
    if m < 2:
        raise ValueError("purity estimation needs at least 2 settings")
    n = snaps.n
    total = np.zeros(4**n)
    diagonal = 0.0
    for setting, block in zip(snaps.settings, snaps.outcomes):
        if len(block) == 0:
            raise ValueError(f"setting {setting!r} has no snapshots")
        idx, vals = _setting_vector(setting, block)
        np.add.at(total, idx, vals)
        diagonal += float(vals @ vals)
    return (float(total @ total) - diagonal) / (m * (m - 1))


def shadow_purity(
    rho: DensityMatrix,
    settings_count: int,
    shots: int,
    rng: np.random.Generator,
    readout: tuple[float, float] | None = None,
) -> float:
    """One run of the randomized protocol followed by the purity estimate."""
    settings = sample_settings(rho.n, settings_count, rng)
    return purity_estimate(run_protocol(rho, settings, shots, rng, readout))


def sample_bound(n: int, eps: float, delta: float) -> int:
    """Settings sufficient for an ``eps``-accurate estimate with probability ``1 - delta``."""
    if not (0 < eps <= 1 and 0 < delta < 1):
        raise ValueError("need eps in (0, 1] and delta in (0, 1)")
    return round_up(math.log(2.0 / delta) * 544.0 * 4.0**n / eps**2)


def resample_randomized(
    datasets: Sequence[SnapshotSet],
    count: int,
    rng: np.random.Generator,
    method: int,
    repetition: int = 0,
) -> SnapshotSet:
    """Emulate a randomized run from repeated exhaustive-setting data.

    ``datasets`` holds R repetitions, each covering all ``3**n`` settings.
    ``count`` settings are drawn uniformly with replacement. Method 1 reuses
    repetition ``repetition`` for every draw of a setting; method 2 walks
    through the repetitions on successive draws of the same setting,
    wrapping around after R.
    """
    if count < 2:
        raise ValueError("purity estimation needs at least 2 settings")
    if method not in (1, 2):
        raise ValueError(f"unknown resampling method {method}")
    if not datasets:
        raise ValueError("no data to resample")
    n = datasets[0].n
    universe = derandomized_settings(n)
    lookup = []
    for data in datasets:
        table = dict(zip(data.settings, data.outcomes))
        missing = [s for s in universe if s not in table]
        if missing:
            raise ValueError(f"dataset lacks settings {missing[:5]}")
        lookup.append(table)
    if method == 1 and not 0 <= repetition < len(lookup):
        raise ValueError(f"repetition {repetition} not in dataset")

    draws = [universe[i] for i in rng.integers(0, len(universe), size=count)]
    seen: dict[str, int] = {}
    outcomes = []
    for setting in draws:
        if method == 1:
            outcomes.append(lookup[repetition][setting])
        else:
            k = seen.get(setting, 0)
            outcomes.append(lookup[k % len(lookup)][setting])
            seen[setting] = k + 1
    return SnapshotSet(draws, outcomes)
