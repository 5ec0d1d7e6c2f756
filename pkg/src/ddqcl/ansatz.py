"""Layered Rz-Rx-Rz / XX circuits over a qubit connectivity graph.

A circuit alternates rotation and entangling layers, starting with a
rotation layer. Each rotation layer applies ``Rz(alpha) Rx(beta) Rz(gamma)``
to every qubit (``gamma`` acts first). Each entangling layer applies one
``XX(chi)`` per edge of the graph.

Parameter layout is layer-major. Within a rotation layer parameters run
qubit by qubit as ``(gamma, beta, alpha)``; within an entangling layer they
follow the edges in lexicographic order. With ``drop_first_z`` the
``gamma`` of the first layer is omitted since it only adds a global phase
to ``|0>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .sim import GateOp, StateVector, run_circuit

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ConnectivityGraph:
    n_qubits: int
    edges: tuple
    name: str = "custom"

    def __post_init__(self):
        norm = []
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise ValueError(f"edge ({a}, {b}) out of range for {self.n_qubits} qubits")
            norm.append((min(a, b), max(a, b)))
        if len(set(norm)) != len(norm):
            raise ValueError("duplicate edge")
        object.__setattr__(self, "edges", tuple(sorted(norm)))


def all_to_all(n_qubits: int = 4) -> ConnectivityGraph:
    return ConnectivityGraph(n_qubits, tuple(combinations(range(n_qubits), 2)), "all_to_all")


def star(n_qubits: int = 4, center: int = 0) -> ConnectivityGraph:
    if not 0 <= center < n_qubits:
        raise ValueError(f"star center {center} out of range")
    edges = tuple((center, q) for q in range(n_qubits) if q != center)
    return ConnectivityGraph(n_qubits, edges, "star")


@dataclass(frozen=True)
class AnsatzSpec:
    graph: ConnectivityGraph
    n_layers: int
    drop_first_z: bool = True
    pixel_map: tuple = field(default=())

    @property
    def n_qubits(self) -> int:
        return self.graph.n_qubits

    @property
    def n_rotation_layers(self) -> int:
        return self.n_layers // 2

    @property
    def n_entangling_layers(self) -> int:
        return self.n_layers // 2

    @property
    def parameter_count(self) -> int:
        n = self.n_qubits
        count = self.n_rotation_layers * 3 * n + self.n_entangling_layers * len(self.graph.edges)
        return count - (n if self.drop_first_z else 0)

    @property
    def label(self) -> str:
        return f"{self.graph.name}-{self.n_layers}L"


def build_ansatz(graph: ConnectivityGraph, n_layers: int, drop_first_z: bool = True,
                 pixel_map=None) -> AnsatzSpec:
    """Validate the layer count and pixel map and return an :class:`AnsatzSpec`.

    ``pixel_map[q]`` is the row-major pixel index read out by qubit ``q``;
    the default is the identity.
    """
    if n_layers < 2 or n_layers % 2:
        raise ValueError(f"n_layers must be an even integer >= 2, got {n_layers}")
    n = graph.n_qubits
    if pixel_map is None:
        pixel_map = tuple(range(n))
    pixel_map = tuple(int(p) for p in pixel_map)
    if sorted(pixel_map) != list(range(n)):
        raise ValueError(f"pixel_map must be a permutation of 0..{n - 1}, got {pixel_map}")
    return AnsatzSpec(graph, n_layers, bool(drop_first_z), pixel_map)


def principal(theta):
    """Reduce angles to ``[0, 2*pi)``."""
    out = np.mod(theta, TWO_PI)
    # mod can return exactly 2*pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)


def instantiate(spec: AnsatzSpec, params) -> list[GateOp]:
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.parameter_count,):
        raise ValueError(
            f"expected {spec.parameter_count} parameters, got shape {params.shape}"
        )
    params = principal(params)
    gates = []
    k = 0
    for layer in range(spec.n_layers):
        if layer % 2 == 0:
            skip_gamma = spec.drop_first_z and layer == 0
            for q in range(spec.n_qubits):
                if not skip_gamma:
                    gates.append(GateOp("RZ", (q,), params[k]))
                    k += 1
                gates.append(GateOp("RX", (q,), params[k]))
                gates.append(GateOp("RZ", (q,), params[k + 1]))
                k += 2
        else:
            for a, b in spec.graph.edges:
                gates.append(GateOp("XX", (a, b), params[k]))
                k += 1
    assert k == spec.parameter_count
    return gates


def prepare_state(spec: AnsatzSpec, params) -> StateVector:
    return run_circuit(spec.n_qubits, instantiate(spec, params))


def to_pixel_order(spec: AnsatzSpec, probs: np.ndarray) -> np.ndarray:
    """Reorder a qubit-indexed distribution into row-major pixel-indexed form."""
    n = spec.n_qubits
    if spec.pixel_map == tuple(range(n)):
        return probs
    # axis q of the qubit tensor becomes axis pixel_map[q] of the image tensor
    tensor = np.asarray(probs).reshape((2,) * n)
    order = np.argsort(spec.pixel_map)
    return np.transpose(tensor, order).reshape(-1)
