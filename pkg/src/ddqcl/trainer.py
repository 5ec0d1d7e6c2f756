"""The data-driven circuit learning loop.

Each evaluation instantiates the ansatz, simulates it, optionally mixes in
depolarizing noise, samples (or takes exact probabilities) and scores the
result against the Bars-and-Stripes target. PSO or BO consume a fixed
evaluation budget; every evaluation is recorded.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from . import bo
from .ansatz import AnsatzSpec, all_to_all, build_ansatz, instantiate, prepare_state, star, to_pixel_order
from .bas import bas_patterns, bas_target
from .objective import COST_KINDS, CostConfig, MetricsReport, clipped_kl, clipped_nll, clipped_sym_kl, entanglement_entropy_avg, qbas_score
from .pso import pso_init, pso_step
from .sim import apply_depolarizing, probabilities, sample_distribution

log = logging.getLogger(__name__)

DEFAULT_COST = {"pso": "clipped_nll", "bo": "clipped_sym_kl"}


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: str = "all_to_all"
    layers: int = 2
    star_center: int = 0
    drop_first_z: bool = True
    pixel_map: tuple | None = None
    bas_rows: int = 2
    bas_cols: int = 2

    optimizer: str = "bo"
    cost: str | None = None
    epsilon: float = 1e-4

    shots: int = 5000
    budget: int = 500
    optimizer_seed: int = 0
    sampling_seed: int = 0
    noise: float = 0.0
    exact: bool = False

    pso_c1: float = 1.0
    pso_c2: float = 1.0
    pso_w: float = 0.5
    pso_particles: int | None = None

    bo_batch_size: int = 5
    bo_initial: int = 10
    bo_restarts: int = 8
    bo_random_starts: int = 32
    bo_incumbent_starts: int = 32
    bo_refit_until: int = 200
    bo_refit_every: int = 5
    bo_length_scale_min: float = 0.05
    bo_length_scale_max: float = 10.0
    bo_signal_variance_min: float = 1e-3
    bo_signal_variance_max: float = 1e3
    bo_noise_min: float = 1e-6
    bo_noise_max: float = 1.0

    def __post_init__(self):
        if self.circuit not in ("all_to_all", "star"):
            raise ValueError(f"circuit: expected all_to_all or star, got {self.circuit!r}")
        if self.optimizer not in ("pso", "bo"):
            raise ValueError(f"optimizer: expected pso or bo, got {self.optimizer!r}")
        if self.layers < 2 or self.layers % 2:
            raise ValueError(f"layers: must be an even integer >= 2, got {self.layers}")
        if self.shots < 1:
            raise ValueError(f"shots: must be >= 1, got {self.shots}")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError(f"noise: must lie in [0, 1], got {self.noise}")
        if self.cost is not None and self.cost not in COST_KINDS:
            raise ValueError(f"cost: expected one of {COST_KINDS}, got {self.cost!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon: must lie in (0, 1), got {self.epsilon}")
        if not 0 <= self.star_center < self.n_qubits:
            raise ValueError(f"star_center: must index one of {self.n_qubits} qubits")
        if self.pixel_map is not None:
            object.__setattr__(self, "pixel_map", tuple(int(v) for v in self.pixel_map))
            if sorted(self.pixel_map) != list(range(self.n_qubits)):
                raise ValueError(f"pixel_map: must be a permutation of 0..{self.n_qubits - 1}")
        if self.bo_batch_size < 1 or self.bo_initial < 1:
            raise ValueError("bo_batch_size: batch and initial design sizes must be >= 1")
        if self.budget < self.evaluations_per_iteration:
            raise ValueError(
                f"budget: {self.budget} is below the {self.evaluations_per_iteration} "
                f"evaluations of one {self.optimizer} iteration"
            )

    @property
    def cost_kind(self) -> str:
        return self.cost or DEFAULT_COST[self.optimizer]

    @property
    def n_qubits(self) -> int:
        return self.bas_rows * self.bas_cols

    @property
    def evaluations_per_iteration(self) -> int:
        if self.optimizer == "bo":
            return self.bo_batch_size
        return self.pso_particles or 2 * self.ansatz().parameter_count

    def ansatz(self) -> AnsatzSpec:
        if self.circuit == "all_to_all":
            graph = all_to_all(self.n_qubits)
        else:
            graph = star(self.n_qubits, self.star_center)
        return build_ansatz(graph, self.layers, self.drop_first_z, self.pixel_map)

    def cost_config(self) -> CostConfig:
        return CostConfig(self.cost_kind, self.epsilon)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["pixel_map"] is not None:
            d["pixel_map"] = list(d["pixel_map"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if d.get("pixel_map") is not None:
            d["pixel_map"] = tuple(d["pixel_map"])
        return cls(**d)


@dataclass
class TrainingRecord:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    best_params: np.ndarray | None = None
    best_cost: float = np.inf
    final_distribution: np.ndarray | None = None
    metrics: MetricsReport | None = None
    extra_metrics: dict = field(default_factory=dict)
    status: str = "complete"
    error: str | None = None

    def best_so_far(self) -> np.ndarray:
        return np.array([r["best_so_far"] for r in self.rows])

    def costs(self) -> np.ndarray:
        return np.array([r["cost"] for r in self.rows])


def evaluation_seed(sampling_seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(sampling_seed), 0, int(index)])


def final_sample_seed(sampling_seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(sampling_seed), 1])


def model_distribution(config: ExperimentConfig, params, spec: AnsatzSpec | None = None) -> np.ndarray:
    """Exact pixel-ordered output distribution, with the noise mixture if configured."""
    spec = spec or config.ansatz()
    gates = instantiate(spec, params)
    state = prepare_state(spec, params)
    probs = probabilities(state)
    if config.noise > 0:
        probs = apply_depolarizing(probs, config.noise, len(gates))
    return to_pixel_order(spec, probs)


def evaluate_candidate(config: ExperimentConfig, params, index: int = 0,
                       spec: AnsatzSpec | None = None, target=None):
    """Cost of one parameter vector.

    Returns ``(cost, counts)``; ``counts`` is ``None`` in exact mode.
    """
    if target is None:
        target = bas_target(config.bas_rows, config.bas_cols)
    probs = model_distribution(config, params, spec)
    if config.exact:
        return config.cost_config()(target, probs), None
    counts = sample_distribution(probs, config.shots, evaluation_seed(config.sampling_seed, index))
    return config.cost_config()(target, counts.frequencies()), counts


def final_metrics(config: ExperimentConfig, params, spec: AnsatzSpec | None = None):
    """Metrics for trained parameters.

    qBAS always comes from a fresh sample of ``config.shots`` shots. The
    final distribution is that sample's frequencies, or the exact
    distribution in exact mode. The entropy uses the noiseless state.
    """
    spec = spec or config.ansatz()
    target = bas_target(config.bas_rows, config.bas_cols)
    probs = model_distribution(config, params, spec)
    counts = sample_distribution(probs, config.shots, final_sample_seed(config.sampling_seed))
    dist = probs if config.exact else counts.frequencies()
    eps = config.epsilon
    report = MetricsReport(
        d_kl=clipped_kl(target, dist, eps),
        qbas=qbas_score(counts, bas_patterns(config.bas_rows, config.bas_cols)),
        entanglement_entropy=entanglement_entropy_avg(prepare_state(spec, params)),
    )
    extra = {
        "clipped_sym_kl": clipped_sym_kl(target, dist, eps),
        "clipped_nll": clipped_nll(target, dist, eps),
        "qbas_shots": config.shots,
    }
    return dist, report, extra


class _Recorder:
    def __init__(self, config, on_row):
        self.config = config
        self.spec = config.ansatz()
        self.target = bas_target(config.bas_rows, config.bas_cols)
        self.record = TrainingRecord(config)
        self.on_row = on_row

    @property
    def remaining(self) -> int:
        return self.config.budget - len(self.record.rows)

    def __call__(self, params) -> float:
        if self.remaining <= 0:
            raise RuntimeError("evaluation budget exhausted")
        rec = self.record
        idx = len(rec.rows)
        params = np.array(params, dtype=float)
        cost, _ = evaluate_candidate(self.config, params, idx, self.spec, self.target)
        if cost < rec.best_cost:
            rec.best_cost, rec.best_params = cost, params
        row = {
            "evaluation_index": idx,
            "cost": float(cost),
            "best_so_far": float(rec.best_cost),
            "parameters": [float(v) for v in params],
        }
        rec.rows.append(row)
        if self.on_row is not None:
            self.on_row(row)
        return cost


def _run_pso(config, evaluate):
    dim = evaluate.spec.parameter_count
    state = pso_init(dim, config.optimizer_seed, config.pso_c1, config.pso_c2, config.pso_w,
                     config.pso_particles)
    while evaluate.remaining > 0:
        state, _ = pso_step(state, evaluate, limit=evaluate.remaining)


def _run_bo(config, evaluate):
    dim = evaluate.spec.parameter_count
    rng = np.random.default_rng(config.optimizer_seed)
    X, y = [], []
    for x in rng.uniform(0.0, 2 * np.pi, size=(min(config.bo_initial, config.budget), dim)):
        X.append(x)
        y.append(evaluate(x))

    bounds = bo.HyperBounds(
        (config.bo_length_scale_min, config.bo_length_scale_max),
        (config.bo_signal_variance_min, config.bo_signal_variance_max),
        (config.bo_noise_min, config.bo_noise_max),
    )
    acq = bo.AcquisitionConfig(
        batch_size=config.bo_batch_size,
        random_starts=config.bo_random_starts,
        incumbent_starts=config.bo_incumbent_starts,
    )
    kernel = None
    iteration = 0
    while evaluate.remaining > 0:
        seed = [config.optimizer_seed, iteration]
        refit = (kernel is None or len(y) <= config.bo_refit_until
                 or iteration % config.bo_refit_every == 0)
        if refit:
            kernel = bo.fit_hyperparameters(X, y, bounds, config.bo_restarts, seed, init=kernel)
        surrogate = bo.gp_fit(X, y, kernel)
        batch = bo.propose_batch(surrogate, acq, seed)
        for x in batch[: evaluate.remaining]:
            X.append(x)
            y.append(evaluate(x))
        iteration += 1


def run_ddqcl(config: ExperimentConfig, on_row: Callable[[dict], None] | None = None) -> TrainingRecord:
    """Train until the evaluation budget is spent and compute final metrics.

    ``on_row`` is called with each history row as soon as it exists, which
    lets callers stream the history to disk.
    """
    evaluate = _Recorder(config, on_row)
    record = evaluate.record
    try:
        if config.optimizer == "pso":
            _run_pso(config, evaluate)
        else:
            _run_bo(config, evaluate)
    except (bo.NumericalFailure, np.linalg.LinAlgError) as exc:
        log.warning("optimizer failed after %d evaluations: %s", len(record.rows), exc)
        record.status = "partial"
        record.error = str(exc)
    if record.best_params is not None:
        dist, report, extra = final_metrics(config, record.best_params, evaluate.spec)
        record.final_distribution = dist
        record.metrics = report
        record.extra_metrics = extra
    return record


@dataclass
class ScanSummary:
    seeds: list
    curves: np.ndarray        # (n_seeds, budget) best-so-far
    final_costs: np.ndarray
    records: list = field(default_factory=list, repr=False)

    def percentiles(self, q=(5, 50, 95)) -> np.ndarray:
        return np.percentile(self.curves, q, axis=0)


def _scan_one(args):
    config, offset = args
    cfg = ExperimentConfig.from_dict({**config.to_dict(),
                                      "optimizer_seed": config.optimizer_seed + offset,
                                      "sampling_seed": config.sampling_seed + offset})
    return run_ddqcl(cfg)


def seed_scan(config: ExperimentConfig, n_seeds: int, workers: int = 1,
              on_record: Callable[[int, TrainingRecord], None] | None = None) -> ScanSummary:
    """Run ``n_seeds`` trainings with optimizer seeds ``config.optimizer_seed + i``.

    Sampling seeds are offset by the same amount.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be >= 1")
    seeds = [config.optimizer_seed + i for i in range(n_seeds)]
    jobs = [(config, i) for i in range(n_seeds)]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_scan_one, jobs))
    else:
        records = [_scan_one(j) for j in jobs]
    if on_record is not None:
        for s, r in zip(seeds, records):
            on_record(s, r)
    curves = np.array([r.best_so_far() for r in records])
    return ScanSummary(seeds, curves, curves[:, -1], records)
