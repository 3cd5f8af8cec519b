"""CVaR-driven training of the ansatz with a derivative-free optimiser."""

from __future__ import annotations

import enum
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Container, Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .energy import BatchScorer, EnergyParams
from .lattice import Lattice, index_to_bitstring, qubit_count
from .sim import AnsatzSpec, Backend, probabilities, sample_indices, simulate

log = logging.getLogger(__name__)


class OptimizationError(RuntimeError):
    pass


class CvarMode(str, enum.Enum):
    SHOTS = "shots"
    EXACT = "exact"


class Method(str, enum.Enum):
    COBYLA = "COBYLA"
    NELDER_MEAD = "Nelder-Mead"

    @classmethod
    def parse(cls, value: "Method | str") -> "Method":
        if isinstance(value, Method):
            return value
        key = str(value).upper().replace("-", "_")
        return cls.NELDER_MEAD if key in ("NELDER_MEAD", "NELDERMEAD") else cls(key)


@dataclass(frozen=True)
class CvarConfig:
    alpha: float = 0.1
    shots: int = 1000
    mode: CvarMode = CvarMode.SHOTS

    def __post_init__(self) -> None:
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if self.mode is CvarMode.SHOTS and (self.shots < 1 or _tail_size(self.alpha, self.shots) < 1):
            raise ValueError("alpha * shots must cover at least one sample")


@dataclass(frozen=True)
class OptimizerConfig:
    method: Method = Method.COBYLA
    max_iter: int = 5000
    rhobeg: float = 1.0
    tol: float = 1e-6
    restarts: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class Problem:
    sequence: str
    lattice: Lattice
    params: EnergyParams

    @property
    def n_qubits(self) -> int:
        return qubit_count(self.lattice, len(self.sequence))


@dataclass
class RunRecord:
    best_params: np.ndarray
    final_cvar: float
    cvar_trace: list[float]
    lowest_trace: list[float]
    ledger: dict[str, tuple[float, int]]
    e_lowest: float
    termination: str
    seed: int
    final_samples: dict[str, int] = field(default_factory=dict)

    @property
    def n_evals(self) -> int:
        return len(self.cvar_trace)


@dataclass(frozen=True)
class RestartSummary:
    final_cvars: tuple[float, ...]
    mean_cvar: float
    stderr_cvar: float
    min_cvar: float
    best_restart: int
    e_lowest: float
    seeds: tuple[int, ...]

    def to_json(self) -> dict:
        return {"final_cvars": list(self.final_cvars), "mean_cvar": self.mean_cvar,
                "stderr_cvar": self.stderr_cvar, "min_cvar": self.min_cvar,
                "best_restart": self.best_restart, "e_lowest": self.e_lowest, "seeds": list(self.seeds)}


def _tail_size(alpha: float, n: int) -> int:
    # round first so alpha * n like 0.3 * 10 does not ceil to 4
    return max(1, math.ceil(round(alpha * n, 9)))


def cvar_cost(energies: Iterable[float], alpha: float) -> float:
    """Mean of the ceil(alpha * S) lowest values of a per-shot energy multiset."""
    e = np.sort(np.asarray(list(energies) if not isinstance(energies, np.ndarray) else energies, dtype=float))
    if e.size == 0:
        raise ValueError("CVaR of an empty sample")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    tail = e[:_tail_size(alpha, e.size)]
    # correctly rounded sum, clamped so rounding can never leave [min, max] of the tail
    return float(min(max(math.fsum(tail.tolist()) / tail.size, tail[0]), tail[-1]))


def cvar_distribution(energies: np.ndarray, probs: np.ndarray, alpha: float) -> float:
    """CVaR over a discrete distribution: probability-weighted tail of mass alpha."""
    order = np.argsort(energies, kind="stable")
    e, p = np.asarray(energies)[order], np.asarray(probs)[order]
    p = p / p.sum()
    before = np.concatenate([[0.0], np.cumsum(p)[:-1]])
    w = np.clip(alpha - before, 0.0, p)
    return float(np.dot(w, e) / alpha)


class EnergyCache:
    """Bitstring energies for one instance, keyed by integer code.

    Small instances (``width <= table_limit``) are scored once in full.
    """

    def __init__(self, problem: Problem, table_limit: int = 16):
        self.problem = problem
        self.width = problem.n_qubits
        self._scorer = BatchScorer(problem.sequence, problem.lattice, problem.params)
        self._energy: dict[int, float] = {}
        self._table: np.ndarray | None = None
        if self.width <= table_limit:
            self.full_table()

    def full_table(self) -> np.ndarray:
        if self._table is None:
            self._table = self._scorer(np.arange(1 << self.width, dtype=np.int64))
        return self._table

    def energies(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        if self._table is not None:
            return self._table[codes]
        missing = sorted({int(c) for c in codes} - self._energy.keys())
        if missing:
            self._energy.update(zip(missing, self._scorer(np.array(missing, dtype=np.int64)).tolist()))
        return np.array([self._energy[int(c)] for c in codes])


def evaluate_params(theta, spec: AnsatzSpec, problem: Problem, cvar_config: CvarConfig,
                    rng: np.random.Generator, cache: EnergyCache | None = None,
                    backend: Backend | str = Backend.DENSE, bond_cap: int = 16,
                    seen: Container[str] = frozenset()) -> tuple[float, dict[str, float], dict[str, int]]:
    """One cost evaluation.

    Returns the CVaR cost, the observed bitstrings not in ``seen`` with their
    energies, and the measurement counts (empty in exact mode).  In exact
    mode the "observed" states are those carrying the alpha tail.
    """
    cache = cache or EnergyCache(problem)
    state = simulate(spec, theta, backend, bond_cap)
    width = spec.m_qubits
    if cvar_config.mode is CvarMode.EXACT:
        p = probabilities(state)
        e = cache.full_table()
        cost = cvar_distribution(e, p, cvar_config.alpha)
        order = np.argsort(e, kind="stable")
        before = np.concatenate([[0.0], np.cumsum(p[order])[:-1]])
        uniq = np.sort(order[(before < cvar_config.alpha) & (p[order] > 0)])
        counts: dict[str, int] = {}
        e_u = e[uniq]
    else:
        codes = sample_indices(state, cvar_config.shots, rng)
        uniq, inverse, freq = np.unique(codes, return_inverse=True, return_counts=True)
        e_u = cache.energies(uniq)
        cost = cvar_cost(e_u[inverse], cvar_config.alpha)
        counts = {index_to_bitstring(c, width): int(k) for c, k in zip(uniq, freq)}
    new = {}
    for c, en in zip(uniq.tolist(), e_u.tolist()):
        b = index_to_bitstring(c, width)
        if b not in seen:
            new[b] = en
    return cost, new, counts


def optimize(problem: Problem, spec: AnsatzSpec, cvar_config: CvarConfig, opt_config: OptimizerConfig,
             seed: int | None = None, backend: Backend | str = Backend.DENSE, bond_cap: int = 16,
             cache: EnergyCache | None = None) -> RunRecord:
    seed = opt_config.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-np.pi, np.pi, spec.parameter_count)
    cache = cache or EnergyCache(problem)
    trace: list[float] = []
    lowest: list[float] = []
    ledger: dict[str, tuple[float, int]] = {}
    last_counts: dict[str, int] = {}
    best = math.inf

    def fun(theta: np.ndarray) -> float:
        nonlocal best, last_counts
        it = len(trace)
        if it >= opt_config.max_iter:
            # Nelder-Mead may overshoot maxfev by a few calls; reuse the last cost
            return trace[-1]
        cost, new, counts = evaluate_params(theta, spec, problem, cvar_config, rng, cache, backend, bond_cap,
                                            seen=ledger)
        if not math.isfinite(cost):
            raise OptimizationError(f"non-finite CVaR {cost!r} at evaluation {it}")
        for b, e in new.items():
            ledger[b] = (e, it)
            best = min(best, e)
        trace.append(cost)
        lowest.append(best)
        last_counts = counts
        return cost

    method = Method.parse(opt_config.method)
    if method is Method.COBYLA:
        options = {"maxiter": opt_config.max_iter, "rhobeg": opt_config.rhobeg, "tol": opt_config.tol}
        res = minimize(fun, x0, method="COBYLA", options=options)
    else:
        simplex = x0 + opt_config.rhobeg * np.vstack([np.zeros(len(x0)), np.eye(len(x0))])
        options = {"maxfev": opt_config.max_iter, "maxiter": opt_config.max_iter,
                   "initial_simplex": simplex, "xatol": opt_config.tol, "fatol": opt_config.tol}
        res = minimize(fun, x0, method="Nelder-Mead", options=options)
    termination = "MAX_ITER" if len(trace) >= opt_config.max_iter else "CONVERGED"
    log.debug("restart seed=%s finished: %s after %d evaluations, cvar=%.6g", seed, termination,
              len(trace), res.fun)
    return RunRecord(
        best_params=np.asarray(res.x, dtype=float),
        final_cvar=float(res.fun),
        cvar_trace=trace,
        lowest_trace=lowest,
        ledger=ledger,
        e_lowest=best,
        termination=termination,
        seed=int(seed),
        final_samples=last_counts,
    )


def restart_seeds(master_seed: int, restarts: int) -> list[int]:
    children = np.random.SeedSequence(master_seed).spawn(restarts)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def summarize(records: Sequence[RunRecord]) -> RestartSummary:
    finals = [r.final_cvar for r in records]
    stderr = statistics.stdev(finals) / math.sqrt(len(finals)) if len(finals) > 1 else 0.0
    best = min(range(len(records)), key=lambda i: (finals[i], i))
    return RestartSummary(
        final_cvars=tuple(finals),
        mean_cvar=statistics.fmean(finals),
        stderr_cvar=stderr,
        min_cvar=min(finals),
        best_restart=best,
        e_lowest=min(r.e_lowest for r in records),
        seeds=tuple(r.seed for r in records),
    )


def _run_one(args) -> RunRecord:
    problem, spec, cvar_config, opt_config, seed, backend, bond_cap = args
    return optimize(problem, spec, cvar_config, opt_config, seed, backend, bond_cap)


def multi_restart(problem: Problem, spec: AnsatzSpec, cvar_config: CvarConfig, opt_config: OptimizerConfig,
                  backend: Backend | str = Backend.DENSE, bond_cap: int = 16, seeds: Sequence[int] | None = None,
                  workers: int = 1) -> tuple[list[RunRecord], RestartSummary]:
    """Independent seeded restarts; seeds default to a spawn of ``opt_config.seed``."""
    seeds = list(seeds) if seeds is not None else restart_seeds(opt_config.seed, opt_config.restarts)
    if not seeds:
        raise ValueError("at least one restart is required")
    jobs = [(problem, spec, cvar_config, opt_config, s, backend, bond_cap) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_one, jobs))
    else:
        cache = EnergyCache(problem)
        records = [optimize(problem, spec, cvar_config, opt_config, s, backend, bond_cap, cache) for s in seeds]
    return records, summarize(records)
