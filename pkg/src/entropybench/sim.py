"""Dense density-matrix simulation of small noisy qubit registers.

Qubit 0 is the most significant bit of a basis index, so the bitstring
``"011"`` on three qubits is basis state ``|0>|1>|1>`` with index 3.
All operations return new objects; inputs are never modified in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

MAX_QUBITS = 10

_SQRT_HALF = 1.0 / np.sqrt(2.0)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = _SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex)
S_DAG = np.array([[1, 0], [0, -1j]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def rx(theta: float) -> np.ndarray:
    """exp(-i theta X / 2)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    """exp(-i theta Y / 2)."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


class Gate(NamedTuple):
    """A gate application: name, target qubit indices and optional angle.

    Supported names: ``RX``, ``RY`` (one qubit, angle required), ``H``,
    ``SDG`` (S dagger), ``CZ`` and ``CNOT`` (control first).
    """

    name: str
    qubits: tuple[int, ...]
    angle: float | None = None

    def matrix(self) -> np.ndarray:
        if self.name == "RX":
            return rx(self.angle)
        if self.name == "RY":
            return ry(self.angle)
        try:
            return _FIXED_GATES[self.name]
        except KeyError:
            raise ValueError(f"unknown gate {self.name!r}") from None


_FIXED_GATES = {"H": HADAMARD, "SDG": S_DAG, "CZ": CZ, "CNOT": CNOT}
_GATE_ARITY = {"RX": 1, "RY": 1, "H": 1, "SDG": 1, "CZ": 2, "CNOT": 2}


@dataclass(frozen=True)
class NoiseModel:
    """Local depolarising rates plus classical readout flip probabilities.

    ``p01`` is P(read 0 | state 1) and ``p10`` is P(read 1 | state 0).
    """

    p1: float = 0.0
    p2: float = 0.0
    p01: float = 0.0
    p10: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "p01", "p10"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} is not a probability")

    @property
    def readout(self) -> tuple[float, float] | None:
        if self.p01 == 0.0 and self.p10 == 0.0:
            return None
        return (self.p01, self.p10)

    def without_readout(self) -> NoiseModel:
        return NoiseModel(self.p1, self.p2)


class DensityMatrix:
    """Density matrix of an ``n``-qubit register."""

    __slots__ = ("n", "data")

    def __init__(self, data: np.ndarray, n: int | None = None):
        data = np.asarray(data, dtype=complex)
        dim = data.shape[0]
        if n is None:
            n = int(dim).bit_length() - 1
        if data.shape != (2**n, 2**n):
            raise ValueError(f"expected a {2**n}x{2**n} matrix, got {data.shape}")
        self.n = n
        self.data = data

    def __repr__(self):
        return f"DensityMatrix(n={self.n}, purity={purity(self):.6g})"

    @property
    def dim(self) -> int:
        return 2**self.n

    def tensor(self) -> np.ndarray:
        """View as a rank-2n tensor: n row axes followed by n column axes."""
        return self.data.reshape((2,) * (2 * self.n))

    @classmethod
    def from_tensor(cls, t: np.ndarray, n: int) -> DensityMatrix:
        return cls(t.reshape(2**n, 2**n), n)

    @classmethod
    def maximally_mixed(cls, n: int) -> DensityMatrix:
        _check_width(n)
        return cls(np.eye(2**n, dtype=complex) / 2**n, n)

    @classmethod
    def from_statevector(cls, psi: np.ndarray) -> DensityMatrix:
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    def kron(self, other: DensityMatrix) -> DensityMatrix:
        """Joint state ``self (x) other``; ``self`` occupies the low qubit indices."""
        return DensityMatrix(np.kron(self.data, other.data), self.n + other.n)

    def is_valid(self, atol: float = 1e-10) -> bool:
        herm = np.max(np.abs(self.data - self.data.conj().T)) <= atol
        unit = abs(np.trace(self.data) - 1) <= atol
        return bool(herm and unit)


def _check_width(n: int, cap: int = MAX_QUBITS):
    if not 1 <= n <= cap:
        raise ValueError(f"qubit count {n} outside supported range 1..{cap}")


def _check_qubits(qubits: Sequence[int], n: int):
    for q in qubits:
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate qubit indices {tuple(qubits)}")


def new_zero_state(n: int) -> DensityMatrix:
    """The all-zeros projector ``|0...0><0...0|``."""
    _check_width(n)
    data = np.zeros((2**n, 2**n), dtype=complex)
    data[0, 0] = 1.0
    return DensityMatrix(data, n)


def apply_unitary(rho: DensityMatrix, u: np.ndarray, qubits: Sequence[int]) -> DensityMatrix:
    """Conjugate ``rho`` by a ``k``-qubit unitary acting on ``qubits``."""
    qubits = tuple(qubits)
    n, k = rho.n, len(qubits)
    _check_qubits(qubits, n)
    ut = np.asarray(u, dtype=complex).reshape((2,) * (2 * k))
    rows = list(qubits)
    cols = [n + q for q in qubits]
    t = np.tensordot(ut, rho.tensor(), axes=(list(range(k, 2 * k)), rows))
    t = np.moveaxis(t, list(range(k)), rows)
    t = np.tensordot(t, ut.conj(), axes=(cols, list(range(k, 2 * k))))
    t = np.moveaxis(t, list(range(2 * n - k, 2 * n)), cols)
    return DensityMatrix.from_tensor(np.ascontiguousarray(t), n)


def apply_gate(rho: DensityMatrix, gate: Gate) -> DensityMatrix:
    arity = _GATE_ARITY.get(gate.name)
    if arity is None:
        raise ValueError(f"unknown gate {gate.name!r}")
    if len(gate.qubits) != arity:
        raise ValueError(f"{gate.name} acts on {arity} qubit(s), got {gate.qubits}")
    return apply_unitary(rho, gate.matrix(), gate.qubits)


def apply_depolarizing(rho: DensityMatrix, qubits: Sequence[int], p: float) -> DensityMatrix:
    """Replace the state of ``qubits`` by the maximally mixed state with weight ``p``.

    Implements ``(1 - p) rho + p Tr_q[rho] (x) I / 2^k`` directly via a
    partial trace, for one or two target qubits.
    """
    qubits = tuple(qubits)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarising probability {p} not in [0, 1]")
    if len(qubits) not in (1, 2):
        raise ValueError("depolarising channel acts on 1 or 2 qubits")
    n, k = rho.n, len(qubits)
    _check_qubits(qubits, n)
    if p == 0.0:
        return DensityMatrix(rho.data.copy(), n)

    targets = list(qubits) + [n + q for q in qubits]
    t = np.moveaxis(rho.tensor(), targets, list(range(2 * k)))
    rest_shape = t.shape[2 * k:]
    t = t.reshape(2**k, 2**k, -1)
    reduced = np.trace(t, axis1=0, axis2=1)
    mixed = np.einsum("ij,r->ijr", np.eye(2**k) / 2**k, reduced)
    out = (1.0 - p) * t + p * mixed
    out = out.reshape((2,) * (2 * k) + rest_shape)
    out = np.moveaxis(out, list(range(2 * k)), targets)
    return DensityMatrix.from_tensor(np.ascontiguousarray(out), n)


def purity(rho: DensityMatrix) -> float:
    # Tr[rho^2] = sum |rho_ij|^2 for Hermitian rho
    return float(np.vdot(rho.data, rho.data).real)


def renyi2_density(rho: DensityMatrix) -> float:
    """Second-order Renyi entropy per qubit, ``-log2(Tr rho^2) / n``."""
    return -np.log2(purity(rho)) / rho.n


def measurement_probabilities(rho: DensityMatrix) -> np.ndarray:
    """Computational-basis outcome distribution (clipped and renormalised)."""
    probs = np.clip(np.real(np.diag(rho.data)), 0.0, None)
    total = probs.sum()
    if not total > 0:
        raise ValueError("density matrix diagonal has no positive weight")
    return probs / total


def index_to_bits(indices: np.ndarray, n: int) -> np.ndarray:
    """Basis indices -> array of shape ``(len(indices), n)`` of 0/1, qubit 0 first."""
    shifts = np.arange(n - 1, -1, -1)
    return ((np.asarray(indices)[:, None] >> shifts) & 1).astype(np.uint8)


def bits_to_str(bits: np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def str_to_bits(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")


def apply_readout(bits: np.ndarray, readout: tuple[float, float] | None, rng: np.random.Generator) -> np.ndarray:
    """Flip 1 -> 0 with probability ``p01`` and 0 -> 1 with probability ``p10``."""
    if readout is None:
        return bits
    p01, p10 = readout
    u = rng.random(bits.shape)
    flip = np.where(bits == 1, u < p01, u < p10)
    return bits ^ flip.astype(np.uint8)


def sample_distribution(
    probs: np.ndarray,
    n: int,
    shots: int,
    rng: np.random.Generator,
    readout: tuple[float, float] | None = None,
) -> np.ndarray:
    """Draw ``shots`` bit rows from a basis-index distribution."""
    indices = rng.choice(len(probs), size=shots, p=probs)
    return apply_readout(index_to_bits(indices, n), readout, rng)


def sample_bits(
    rho: DensityMatrix,
    shots: int,
    rng: np.random.Generator,
    readout: tuple[float, float] | None = None,
) -> np.ndarray:
    """Vectorised computational-basis sampling, shape ``(shots, n)``."""
    return sample_distribution(measurement_probabilities(rho), rho.n, shots, rng, readout)


def sample_measurement(
    rho: DensityMatrix,
    rng: np.random.Generator,
    readout: tuple[float, float] | None = None,
) -> str:
    """One computational-basis measurement of ``rho`` as a bitstring."""
    return bits_to_str(sample_bits(rho, 1, rng, readout)[0])
