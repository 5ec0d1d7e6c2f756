"""Cost functions between distributions and the end-of-run metrics.

All logarithms are base 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .sim import Counts, StateVector

DEFAULT_EPSILON = 1e-4
COST_KINDS = ("kl", "clipped_nll", "clipped_sym_kl")


class DivergenceError(ValueError):
    """KL divergence is infinite: ``q`` is zero where ``p`` is not."""


@dataclass(frozen=True)
class CostConfig:
    kind: str = "clipped_nll"
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if self.kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.kind!r}; expected one of {COST_KINDS}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    def __call__(self, target, model) -> float:
        if self.kind == "kl":
            return kl_divergence(target, model)
        if self.kind == "clipped_nll":
            return clipped_nll(target, model, self.epsilon)
        return clipped_sym_kl(target, model, self.epsilon)


@dataclass(frozen=True)
class MetricsReport:
    d_kl: float
    qbas: float
    entanglement_entropy: float


def _pair(p, q):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    return p, q


def _kl_terms(p, q):
    """``sum p log2(p / q)`` over ``p > 0``; inputs need not be normalized."""
    mask = p > 0
    return float(np.sum(p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))))


def kl_divergence(p, q) -> float:
    p, q = _pair(p, q)
    if np.any((p > 0) & (q <= 0)):
        raise DivergenceError("q has zero probability on a state supported by p")
    return _kl_terms(p, q)


def clipped_nll(target, model, epsilon: float = DEFAULT_EPSILON) -> float:
    p, q = _pair(target, model)
    mask = p > 0
    return float(-np.sum(p[mask] * np.log2(np.maximum(epsilon, q[mask]))))


def clipped_sym_kl(p, q, epsilon: float = DEFAULT_EPSILON) -> float:
    """Symmetrized KL between elementwise-clipped (not renormalized) arguments."""
    p, q = _pair(p, q)
    pc = np.maximum(epsilon, p)
    qc = np.maximum(epsilon, q)
    d = pc - qc
    lr = np.log2(pc) - np.log2(qc)
    # KL(pc, qc) + KL(qc, pc) = sum (pc - qc) log2(pc / qc): exactly symmetric
    return float(np.sum(d * lr))


def clipped_kl(p, q, epsilon: float = DEFAULT_EPSILON) -> float:
    """KL with only the model side clipped at ``epsilon``; always finite."""
    p, q = _pair(p, q)
    return _kl_terms(p, np.maximum(epsilon, q))


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    mask = p > 0
    return float(-np.sum(p[mask] * np.log2(p[mask])))


def qbas_score(counts: Counts, bas_set) -> float:
    """F1 score of a sample histogram against a set of valid bitstrings.

    Precision is the fraction of shots that land on a valid pattern; recall
    is the fraction of valid patterns seen at least once.
    """
    if counts.shots < 1:
        raise ValueError("empty histogram")
    bas_set = set(bas_set)
    valid = sum(c for b, c in counts.histogram.items() if b in bas_set and c > 0)
    seen = sum(1 for b, c in counts.histogram.items() if b in bas_set and c > 0)
    precision = valid / counts.shots
    recall = seen / len(bas_set)
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def reduced_density_matrix(amplitudes, n_qubits: int, keep) -> np.ndarray:
    keep = list(keep)
    rest = [q for q in range(n_qubits) if q not in keep]
    psi = np.asarray(amplitudes).reshape((2,) * n_qubits)
    m = np.transpose(psi, keep + rest).reshape(2 ** len(keep), -1)
    return m @ m.conj().T


def von_neumann_entropy(rho, cutoff: float = 1e-12) -> float:
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > cutoff]
    return float(-np.sum(lam * np.log2(lam)))


def bipartitions(n_qubits: int) -> list[tuple]:
    """Half/half splits, each listed once by the half that holds qubit 0."""
    half = n_qubits // 2
    return [
        (0,) + rest for rest in combinations(range(1, n_qubits), half - 1)
    ]


def entanglement_entropy_avg(state: StateVector) -> float:
    """Mean entropy over the 2+2 bipartitions 01|23, 02|13 and 03|12."""
    if state.n_qubits != 4:
        raise ValueError(f"expected a 4-qubit state, got {state.n_qubits} qubits")
    values = [
        von_neumann_entropy(reduced_density_matrix(state.amplitudes, 4, keep))
        for keep in bipartitions(4)
    ]
    return float(np.mean(values))
