"""Dense state-vector simulation for circuits of Rz, Rx and XX gates.

Conventions
-----------
* ``Rz(a) = exp(-i a Z / 2)``, ``Rx(b) = exp(-i b X / 2)`` and
  ``XX(c) = exp(-i (c / 2) X (x) X)``.
* Qubit 0 is the most significant bit of a basis-state index, so the
  amplitude of ``|q0 q1 ... q(n-1)>`` lives at ``int("q0q1...", 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "InvalidGateError",
    "StateVector",
    "GateOp",
    "Counts",
    "zero_state",
    "apply_gate",
    "run_circuit",
    "probabilities",
    "sample",
    "sample_distribution",
    "apply_depolarizing",
]

GATE_KINDS = ("RZ", "RX", "XX")


class InvalidGateError(ValueError):
    """Raised when a gate references qubits the state does not have."""


@dataclass(frozen=True)
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.amplitudes.shape != (2 ** self.n_qubits,):
            raise ValueError(
                f"expected {2 ** self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class GateOp:
    """One gate: ``kind`` is RZ, RX or XX; ``targets`` holds one or two qubit indices."""

    kind: str
    targets: tuple
    angle: float

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InvalidGateError(f"unknown gate kind {self.kind!r}")
        expected = 2 if self.kind == "XX" else 1
        if len(self.targets) != expected:
            raise InvalidGateError(f"{self.kind} takes {expected} target(s), got {self.targets}")
        if expected == 2 and self.targets[0] == self.targets[1]:
            raise InvalidGateError(f"XX targets must be distinct, got {self.targets}")


@dataclass(frozen=True)
class Counts:
    """Measurement histogram. ``histogram`` maps n-bit strings to counts."""

    n_bits: int
    shots: int
    histogram: dict

    @classmethod
    def from_array(cls, counts: np.ndarray) -> "Counts":
        counts = np.asarray(counts, dtype=np.int64)
        n_bits = int(round(np.log2(counts.size)))
        hist = {
            format(i, f"0{n_bits}b"): int(c) for i, c in enumerate(counts) if c > 0
        }
        return cls(n_bits=n_bits, shots=int(counts.sum()), histogram=hist)

    def to_array(self) -> np.ndarray:
        out = np.zeros(2 ** self.n_bits, dtype=np.int64)
        for bits, c in self.histogram.items():
            out[int(bits, 2)] = c
        return out

    def frequencies(self) -> np.ndarray:
        return self.to_array() / self.shots


def zero_state(n_qubits: int) -> StateVector:
    amps = np.zeros(2 ** n_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(n_qubits, amps)


def _check_targets(gate: GateOp, n_qubits: int) -> None:
    for q in gate.targets:
        if not 0 <= q < n_qubits:
            raise InvalidGateError(
                f"{gate.kind} target {q} out of range for {n_qubits} qubits"
            )


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    """Return the state after applying ``gate``; the input is not modified."""
    n = state.n_qubits
    _check_targets(gate, n)
    psi = state.amplitudes.reshape((2,) * n)
    half = 0.5 * gate.angle
    c, s = np.cos(half), np.sin(half)

    if gate.kind == "RZ":
        (q,) = gate.targets
        phases = np.array([np.exp(-1j * half), np.exp(1j * half)])
        shape = [1] * n
        shape[q] = 2
        out = psi * phases.reshape(shape)
    elif gate.kind == "RX":
        (q,) = gate.targets
        out = c * psi - 1j * s * np.flip(psi, axis=q)
    else:
        a, b = gate.targets
        # exp(-i t XX) = cos t - i sin t XX, and XX flips both bits.
        out = c * psi - 1j * s * np.flip(psi, axis=(a, b))
    return StateVector(n, out.reshape(-1))


def run_circuit(n_qubits: int, gates: Iterable[GateOp]) -> StateVector:
    state = zero_state(n_qubits)
    for gate in gates:
        state = apply_gate(state, gate)
    return state


def probabilities(state: StateVector) -> np.ndarray:
    """Born-rule probabilities indexed by basis-state integer."""
    return np.abs(state.amplitudes) ** 2


def sample_distribution(probs: np.ndarray, shots: int, rng_seed) -> Counts:
    """Draw ``shots`` i.i.d. outcomes from ``probs``.

    ``rng_seed`` may be an integer, a sequence of integers, or a
    ``numpy.random.SeedSequence``.
    """
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    p = p / p.sum()
    rng = np.random.default_rng(rng_seed)
    return Counts.from_array(rng.multinomial(shots, p))


def sample(state: StateVector, shots: int, rng_seed) -> Counts:
    return sample_distribution(probabilities(state), shots, rng_seed)


def apply_depolarizing(dist, per_gate_error: float, gate_count: int) -> np.ndarray:
    """Mix a distribution with the uniform one.

    The mixing weight is ``1 - (1 - per_gate_error) ** gate_count``, a global
    depolarizing approximation of accumulated gate error. ``dist`` may be a
    probability vector or a :class:`StateVector`.
    """
    if not 0.0 <= per_gate_error <= 1.0:
        raise ValueError(f"per_gate_error must lie in [0, 1], got {per_gate_error}")
    p = probabilities(dist) if isinstance(dist, StateVector) else np.asarray(dist, dtype=float)
    lam = 1.0 - (1.0 - per_gate_error) ** gate_count
    return (1.0 - lam) * p + lam / p.size

