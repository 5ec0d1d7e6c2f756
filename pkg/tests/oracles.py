"""Independent reference computations used by the test suite.

Nothing here imports the code under test beyond plain data types.
"""

from functools import reduce

import numpy as np
from scipy.linalg import expm

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def embed(ops: dict, n: int) -> np.ndarray:
    """Kronecker product with ``ops[q]`` on qubit q (qubit 0 leftmost / MSB)."""
    return reduce(np.kron, [ops.get(q, I2) for q in range(n)])


def dense_unitary(kind: str, targets, angle: float, n: int) -> np.ndarray:
    if kind == "RZ":
        gen = embed({targets[0]: Z}, n)
    elif kind == "RX":
        gen = embed({targets[0]: X}, n)
    else:
        gen = embed({targets[0]: X, targets[1]: X}, n)
    return expm(-0.5j * angle * gen)


def dense_circuit_state(gates, n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1.0
    for g in gates:
        psi = dense_unitary(g.kind, g.targets, g.angle, n) @ psi
    return psi


def partial_trace_entropy(psi: np.ndarray, keep, n: int) -> float:
    """Entropy of the reduced state on ``keep`` via an explicit density-matrix trace."""
    rho = np.outer(psi, psi.conj())
    rest = [q for q in range(n) if q not in keep]
    dk = 2 ** len(keep)
    red = np.zeros((dk, dk), dtype=complex)
    for i in range(2 ** n):
        bi = format(i, f"0{n}b")
        for j in range(2 ** n):
            bj = format(j, f"0{n}b")
            if all(bi[q] == bj[q] for q in rest):
                a = int("".join(bi[q] for q in keep), 2)
                b = int("".join(bj[q] for q in keep), 2)
                red[a, b] += rho[i, j]
    w, _ = np.linalg.eigh(red)
    w = w[w > 1e-12]
    return float(-(w * np.log2(w)).sum())


def kl_scalar(p, q) -> float:
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0:
            total -= pi * np.log2(qi / pi)
    return total


def sym_kl_scalar(p, q, eps) -> float:
    pc = [max(eps, v) for v in p]
    qc = [max(eps, v) for v in q]
    return kl_scalar(pc, qc) + kl_scalar(qc, pc)


def nll_scalar(p, q, eps) -> float:
    total = 0.0
    for pi, qi in zip(p, q):
        total -= pi * np.log2(max(eps, qi))
    return total


def matern52_scalar(r, sv, ls):
    a = np.sqrt(5.0) * r / ls
    return sv * (1 + a + a * a / 3) * np.exp(-a)


def gp_reference(X, y, Xs, sv, ls, nv):
    """GP posterior by explicit kernel matrices and a dense solve."""
    def emb(t):
        t = np.atleast_2d(t)
        return np.concatenate([np.cos(t), np.sin(t)], axis=1)

    def kmat(A, B):
        A, B = emb(A), emb(B)
        K = np.empty((len(A), len(B)))
        for i in range(len(A)):
            for j in range(len(B)):
                K[i, j] = matern52_scalar(np.linalg.norm(A[i] - B[j]), sv, ls)
        return K

    m = np.mean(y)
    K = kmat(X, X) + nv * np.eye(len(X))
    Ks = kmat(Xs, X)
    mu = m + Ks @ np.linalg.solve(K, y - m)
    var = sv - np.einsum("ij,ji->i", Ks, np.linalg.solve(K, Ks.T))
    return mu, var
