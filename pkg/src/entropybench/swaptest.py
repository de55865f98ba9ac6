"""Purity from Bell measurements between two copies of a state.

Copy 1 occupies qubits ``0..n-1`` and copy 2 qubits ``n..2n-1``. For each
``k`` a CNOT from copy-1 qubit ``k`` onto copy-2 qubit ``k`` followed by a
Hadamard on the control rotates the Bell basis onto the computational basis.
The parity of ``x1 AND x2`` reproduces the controlled-SWAP test outcome, so
``P(0) - P(1) = Tr[rho^2]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._numeric import round_up
from .sim import (
    MAX_QUBITS,
    CNOT,
    HADAMARD,
    DensityMatrix,
    NoiseModel,
    apply_depolarizing,
    apply_unitary,
    bits_to_str,
    measurement_probabilities,
    sample_distribution,
)


@dataclass(frozen=True)
class SwapTestRecord:
    x1: str
    x2: str
    parity: int

    def __post_init__(self):
        if len(self.x1) != len(self.x2):
            raise ValueError("copies must have equal width")
        if self.parity != and_parity(self.x1, self.x2):
            raise ValueError(f"parity {self.parity} inconsistent with {self.x1}, {self.x2}")

    @classmethod
    def from_bits(cls, x1: str, x2: str) -> SwapTestRecord:
        return cls(x1, x2, and_parity(x1, x2))


def and_parity(x1: str, x2: str) -> int:
    """Parity of the bitwise AND of two equal-length bitstrings."""
    return (int(x1, 2) & int(x2, 2)).bit_count() & 1


def bell_circuit_state(rho: DensityMatrix, noise: NoiseModel | None = None) -> DensityMatrix:
    """``rho (x) rho`` after the Bell-basis rotation, with optional gate noise."""
    n = rho.n
    if 2 * n > MAX_QUBITS:
        raise ValueError(f"two copies of {n} qubits exceed the {MAX_QUBITS}-qubit cap")
    state = rho.kron(rho)
    for k in range(n):
        state = apply_unitary(state, CNOT, (k, n + k))
        if noise is not None and noise.p2 > 0:
            state = apply_depolarizing(state, (k, n + k), noise.p2)
        state = apply_unitary(state, HADAMARD, (k,))
        if noise is not None and noise.p1 > 0:
            state = apply_depolarizing(state, (k,), noise.p1)
    return state


def bell_distribution(rho: DensityMatrix, noise: NoiseModel | None = None) -> np.ndarray:
    return measurement_probabilities(bell_circuit_state(rho, noise))


def sample_bell_bits(
    rho: DensityMatrix,
    shots: int,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
    probs: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """``shots`` outcomes as two ``(shots, n)`` bit arrays, one per copy.

    ``probs`` may carry a precomputed :func:`bell_distribution` for repeated runs.
    """
    if probs is None:
        probs = bell_distribution(rho, noise)
    readout = noise.readout if noise is not None else None
    bits = sample_distribution(probs, 2 * rho.n, shots, rng, readout)
    return bits[:, : rho.n], bits[:, rho.n :]


def parities(x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    return np.bitwise_xor.reduce(x1 & x2, axis=1).astype(np.uint8)


def bell_sample(
    rho: DensityMatrix,
    rng: np.random.Generator,
    measurement_noise: NoiseModel | None = None,
) -> SwapTestRecord:
    x1, x2 = sample_bell_bits(rho, 1, rng, measurement_noise)
    return SwapTestRecord.from_bits(bits_to_str(x1[0]), bits_to_str(x2[0]))


def bell_samples(
    rho: DensityMatrix,
    shots: int,
    rng: np.random.Generator,
    measurement_noise: NoiseModel | None = None,
) -> list[SwapTestRecord]:
    x1, x2 = sample_bell_bits(rho, shots, rng, measurement_noise)
    return [
        SwapTestRecord(bits_to_str(a), bits_to_str(b), int(i))
        for a, b, i in zip(x1, x2, parities(x1, x2))
    ]


def purity_estimate_swap(records: Sequence[SwapTestRecord] | np.ndarray) -> float:
    """``(M0 - M1) / M`` from records or from a plain array of parity bits."""
    if isinstance(records, np.ndarray):
        bits = records.astype(int)
    else:
        bits = np.array([r.parity for r in records], dtype=int)
    if bits.size == 0:
        raise ValueError("no SWAP test records")
    m1 = int(bits.sum())
    return (bits.size - 2 * m1) / bits.size


def swap_purity(
    rho: DensityMatrix,
    shots: int,
    rng: np.random.Generator,
    noise: NoiseModel | None = None,
    probs: np.ndarray | None = None,
) -> float:
    x1, x2 = sample_bell_bits(rho, shots, rng, noise, probs)
    return purity_estimate_swap(parities(x1, x2))


def sample_bound_swap(eps: float, delta: float) -> int:
    """Hoeffding sample count for an ``eps``-accurate estimate w.p. ``1 - delta``."""
    if not (0 < eps <= 1 and 0 < delta < 1):
        raise ValueError("need eps in (0, 1] and delta in (0, 1)")
    return round_up(2.0 * math.log(2.0 / delta) / eps**2)
