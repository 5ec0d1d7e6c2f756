"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` (the verdict lines appear in the
"acceptance criteria" summary section) or ``python tests/test_acceptance.py``.
Criteria 5 and 7 train many circuits and take tens of minutes on one core.
"""

import json
import time

import numpy as np
import pytest

import conftest
from oracles import dense_circuit_state, nll_scalar, sym_kl_scalar

from ddqcl import cli
from ddqcl.ansatz import all_to_all, build_ansatz, star
from ddqcl.objective import clipped_nll, clipped_sym_kl, entanglement_entropy_avg, kl_divergence
from ddqcl.sim import GateOp, StateVector, run_circuit
from ddqcl.trainer import ExperimentConfig, evaluate_candidate, run_ddqcl

NON_BAS = (0b0110, 0b1001)


def record(number, title, passed, detail):
    conftest.ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
    print(f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} | {detail}")
    assert passed, detail


def test_c1_parameter_counts():
    counts = (
        build_ansatz(all_to_all(4), 2).parameter_count,
        build_ansatz(star(4), 2).parameter_count,
        build_ansatz(star(4), 4).parameter_count,
    )
    record(1, "parameter counts 14/11/26", counts == (14, 11, 26), f"got {counts}")


def test_c2_simulator_matches_dense_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        gates = []
        for _ in range(int(rng.integers(1, 21))):
            kind = str(rng.choice(["RZ", "RX", "XX"]))
            if kind == "XX":
                targets = tuple(int(q) for q in rng.choice(n, 2, replace=False))
            else:
                targets = (int(rng.integers(n)),)
            gates.append(GateOp(kind, targets, float(rng.uniform(0, 2 * np.pi))))
        got = run_circuit(n, gates).amplitudes
        worst = max(worst, float(np.max(np.abs(got - dense_circuit_state(gates, n)))))
    record(2, "100 random circuits vs dense unitary product", worst <= 1e-9,
           f"max amplitude error {worst:.2e} (tol 1e-9)")


def test_c3_ghz_entropy():
    v = np.zeros(16, dtype=complex)
    v[0] = v[15] = 1 / np.sqrt(2)
    s = entanglement_entropy_avg(StateVector(4, v))
    record(3, "GHZ averaged entanglement entropy = 1", abs(s - 1) <= 1e-9, f"S = {s:.12f}")


def test_c4_cost_identities():
    rng = np.random.default_rng(4)
    eps = 1e-4
    worst_self, worst_sym, worst_ref = 0.0, 0.0, 0.0
    finite = True
    for _ in range(10_000):
        p = rng.dirichlet(np.full(16, 0.5))
        q = rng.dirichlet(np.full(16, 0.5))
        if rng.random() < 0.3:
            q[rng.integers(16, size=3)] = 0.0
            q /= q.sum()
        worst_self = max(worst_self, abs(kl_divergence(p, p)))
        worst_sym = max(worst_sym, abs(clipped_sym_kl(p, q, eps) - clipped_sym_kl(q, p, eps)))
        worst_ref = max(worst_ref, abs(clipped_sym_kl(p, q, eps) - sym_kl_scalar(p, q, eps)),
                        abs(clipped_nll(p, q, eps) - nll_scalar(p, q, eps)))
        if q.min() == 0:
            finite &= bool(np.isfinite(clipped_nll(p, q, eps)))
    ok = worst_self <= 1e-12 and worst_sym == 0.0 and finite and worst_ref <= 1e-9
    record(4, "D_KL(p,p)=0, exact sym-KL symmetry, finite clipped NLL", ok,
           f"max|D(p,p)|={worst_self:.1e} max asym={worst_sym:.1e} "
           f"oracle gap={worst_ref:.1e} finite={finite} over 1e4 pairs")


@pytest.mark.slow
def test_c5_all_to_all_bo_convergence():
    rows, good = [], 0
    for seed in range(5):
        t0 = time.time()
        rec = run_ddqcl(ExperimentConfig(circuit="all_to_all", layers=2, optimizer="bo", shots=5000,
                                         budget=500, optimizer_seed=seed, sampling_seed=seed))
        sym = rec.extra_metrics["clipped_sym_kl"]
        q = rec.metrics.qbas
        good += q >= 0.85 and sym <= 0.15
        rows.append(f"s{seed}: qBAS={q:.3f} symKL={sym:.4f} ({time.time() - t0:.0f}s)")
    record(5, "all-to-all 2L + BO, 5000 shots, 500 evals: qBAS>=0.85 and symKL<=0.15 in >=4/5",
           good >= 4, f"{good}/5; " + "; ".join(rows))


def _best_of(circuit, seeds=range(10)):
    best = None
    for seed in seeds:
        rec = run_ddqcl(ExperimentConfig(circuit=circuit, layers=2, optimizer="pso", cost="clipped_sym_kl",
                                         exact=True, budget=2000, optimizer_seed=seed, sampling_seed=seed))
        if best is None or rec.best_cost < best.best_cost:
            best = rec
    return best


@pytest.mark.slow
def test_c6_star_cannot_exclude_non_bas_states():
    # Thresholds checked against a 40-restart Powell minimization of the exact
    # cost: star 2L bottoms out at symKL 2.587 with P(0110)+P(1001) = 0.212.
    s = _best_of("star")
    a = _best_of("all_to_all")
    leak = float(s.final_distribution[list(NON_BAS)].sum())
    ok = leak > 0.02 and s.best_cost > 0.05 and a.best_cost < 0.01
    record(6, "star 2L leaks onto 0110/1001 while all-to-all 2L fits", ok,
           f"star: P6+P9={leak:.4f} symKL={s.best_cost:.4f}; all-to-all symKL={a.best_cost:.2e}")


@pytest.mark.slow
def test_c7_star_4_layer_bo_vs_pso():
    bo_ok, bo_cost, pso_cost, notes = 0, [], [], []
    for seed in range(5):
        common = dict(circuit="star", layers=4, exact=True, budget=1000,
                      optimizer_seed=seed, sampling_seed=seed)
        t0 = time.time()
        b = run_ddqcl(ExperimentConfig(optimizer="bo", **common))
        p = run_ddqcl(ExperimentConfig(optimizer="pso", **common))
        bo_ok += b.metrics.qbas >= 0.85
        # each optimizer trains its own default cost, so compare on one metric
        bo_cost.append(b.extra_metrics["clipped_sym_kl"])
        pso_cost.append(p.extra_metrics["clipped_sym_kl"])
        notes.append(f"s{seed}: bo qBAS={b.metrics.qbas:.3f} symKL bo={bo_cost[-1]:.3f} "
                     f"pso={pso_cost[-1]:.3f} ({time.time() - t0:.0f}s)")
    med_bo, med_pso = float(np.median(bo_cost)), float(np.median(pso_cost))
    ok = bo_ok >= 3 and med_pso > med_bo
    record(7, "star 4L: BO qBAS>=0.85 in >=3/5, PSO median final cost worse", ok,
           f"BO {bo_ok}/5, median symKL bo={med_bo:.4f} pso={med_pso:.4f}; " + "; ".join(notes))


def test_c8_noise_raises_converged_cost():
    t0 = time.time()
    raised, deltas = 0, []
    for seed in range(10):
        cfg = ExperimentConfig(circuit="all_to_all", optimizer="pso", exact=True, budget=1000,
                               optimizer_seed=seed, sampling_seed=seed)
        rec = run_ddqcl(cfg)
        noisy = ExperimentConfig.from_dict({**cfg.to_dict(), "noise": 0.01})
        clean_cost, _ = evaluate_candidate(cfg, rec.best_params)
        noisy_cost, _ = evaluate_candidate(noisy, rec.best_params)
        raised += noisy_cost > clean_cost
        deltas.append(noisy_cost - clean_cost)
    elapsed = time.time() - t0
    record(8, "per-gate error 0.01 strictly raises the converged cost", raised == 10 and elapsed < 60,
           f"{raised}/10 raised, min increase {min(deltas):.4f}, {elapsed:.1f}s")


def test_c9_manifest_rerun_is_byte_identical(tmp_path):
    t0 = time.time()
    cfg = tmp_path / "run.cfg"
    cfg.write_text("circuit = all_to_all\nlayers = 2\noptimizer = bo\nbudget = 40\n"
                   "exact = true\noptimizer_seed = 11\nsampling_seed = 12\n")
    seed_run = tmp_path / "seed"
    codes = [cli.main(["train", "--config", str(cfg), "--out", str(seed_run)])]
    manifest = seed_run / "manifest.json"
    for name in ("a", "b"):
        codes.append(cli.main(["train", "--config", str(manifest), "--out", str(tmp_path / name)]))
    a = (tmp_path / "a" / "history.jsonl").read_bytes()
    b = (tmp_path / "b" / "history.jsonl").read_bytes()
    n_rows = len(a.splitlines())
    ok = codes == [0, 0, 0] and a == b and n_rows == json.loads(manifest.read_text())["config"]["budget"]
    record(9, "two exact runs from one manifest give identical history bytes", ok,
           f"exit codes {codes}, {n_rows} rows, identical={a == b}, {time.time() - t0:.1f}s")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-v", "-s"]))
