"""Hardware-efficient layered circuit: RX and RY on every qubit, then a CZ brickwork.

Angles come from ``numpy.random.default_rng(seed)`` (PCG64), drawn as
``2*pi*u`` with ``u`` uniform on [0, 1), in gate order: the n RX angles of
layer 1, the n RY angles of layer 1, then layer 2 and so on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .sim import (
    MAX_QUBITS,
    DensityMatrix,
    Gate,
    NoiseModel,
    apply_depolarizing,
    apply_gate,
    new_zero_state,
)


def cz_pairs(n: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Nearest-neighbour CZ pairs split into two non-overlapping sublayers."""
    first = [(q, q + 1) for q in range(0, n - 1, 2)]
    second = [(q, q + 1) for q in range(1, n - 1, 2)]
    return first, second


@dataclass
class Circuit:
    n: int
    layers: list[list[Gate]] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def gates(self):
        for layer in self.layers:
            yield from layer

    def angles(self) -> list[float]:
        return [g.angle for g in self.gates() if g.angle is not None]

    def count(self, arity: int) -> int:
        return sum(1 for g in self.gates() if len(g.qubits) == arity)

    def truncated(self, depth: int) -> Circuit:
        return Circuit(self.n, self.layers[:depth])

    def unitary(self) -> np.ndarray:
        """Full noiseless unitary, built from explicit Kronecker products."""
        dim = 2**self.n
        total = np.eye(dim, dtype=complex)
        for g in self.gates():
            total = _embed(g, self.n) @ total
        return total


def _embed(gate: Gate, n: int) -> np.ndarray:
    u = gate.matrix()
    if len(gate.qubits) == 1:
        (q,) = gate.qubits
        return np.kron(np.kron(np.eye(2**q), u), np.eye(2 ** (n - q - 1)))
    # two-qubit gates: permute basis so the targets are adjacent
    dim = 2**n
    full = np.zeros((dim, dim), dtype=complex)
    a, b = gate.qubits
    for col in range(dim):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = 2 * bits[a] + bits[b]
        for sub_out in range(4):
            amp = u[sub_out, sub_in]
            if amp == 0:
                continue
            out = list(bits)
            out[a], out[b] = sub_out >> 1, sub_out & 1
            row = sum(bit << (n - 1 - q) for q, bit in enumerate(out))
            full[row, col] += amp
    return full


def build_circuit(n: int, depth: int, seed: int) -> Circuit:
    if n < 1 or depth < 0:
        raise ValueError(f"need n >= 1 and depth >= 0, got n={n}, depth={depth}")
    rng = np.random.default_rng(seed)
    first, second = cz_pairs(n)
    layers = []
    for _ in range(depth):
        theta = 2 * np.pi * rng.random(2 * n)
        layer = [Gate("RX", (q,), float(theta[q])) for q in range(n)]
        layer += [Gate("RY", (q,), float(theta[n + q])) for q in range(n)]
        layer += [Gate("CZ", pair) for pair in first + second]
        layers.append(layer)
    return Circuit(n, layers)


def evolve_noisy(circuit: Circuit, noise: NoiseModel) -> list[DensityMatrix]:
    """States after each complete layer, with depolarising noise after every gate.

    Readout parameters of ``noise`` are ignored here; they apply at measurement.
    """
    if circuit.n > MAX_QUBITS:
        raise ValueError(f"width {circuit.n} exceeds simulator cap {MAX_QUBITS}")
    rho = new_zero_state(circuit.n)
    states = []
    for layer in circuit.layers:
        for gate in layer:
            rho = apply_gate(rho, gate)
            p = noise.p1 if len(gate.qubits) == 1 else noise.p2
            if p > 0:
                rho = apply_depolarizing(rho, gate.qubits, p)
        states.append(rho)
    return states
