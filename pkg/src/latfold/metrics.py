"""Relative-error metrics, energy histograms and the uniform random baseline."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from ._io import write_csv
from .cvar import cvar_cost
from .energy import BatchScorer, EnergyParams
from .lattice import Lattice, LatticeSpec, get_spec, qubit_count
from .sim import SampleSet, counts_from_indices

DEFAULT_BIN_WIDTH = 0.05
_EDGE_EPS = 1e-9


class MetricsError(ValueError):
    pass


def _check_gs(e_gs: float) -> None:
    if e_gs == 0:
        raise MetricsError("relative errors are undefined for a zero ground-state energy")


def average_relative_error(c_cvar: float, e_gs: float) -> float:
    _check_gs(e_gs)
    return abs((c_cvar - e_gs) / e_gs)


def best_case_relative_error(e_lowest: float, e_gs: float) -> float:
    _check_gs(e_gs)
    return abs((e_lowest - e_gs) / e_gs)


@dataclass(frozen=True)
class MetricsReport:
    are: float
    bcre: float
    e_gs: float
    c_cvar: float
    e_lowest: float
    n_valid_fraction: float

    def to_json(self) -> dict:
        return asdict(self)


def shot_energies(samples: SampleSet, energies: Mapping[str, float]) -> tuple[np.ndarray, np.ndarray]:
    keys = sorted(samples.counts)
    return (np.array([energies[k] for k in keys], dtype=float),
            np.array([samples.counts[k] for k in keys], dtype=np.int64))


def metrics_report(samples: SampleSet, energies: Mapping[str, float], e_gs: float, e_lowest: float,
                   alpha: float = 0.1) -> MetricsReport:
    e, w = shot_energies(samples, energies)
    c_cvar = cvar_cost(np.repeat(e, w), alpha)
    valid = float(w[e < 0].sum() / w.sum())
    return MetricsReport(average_relative_error(c_cvar, e_gs), best_case_relative_error(e_lowest, e_gs),
                         e_gs, c_cvar, e_lowest, valid)


def near_ground_probability(samples: SampleSet, energies: Mapping[str, float], e_gs: float,
                            within: float = 0.2) -> float:
    """Share of shots whose energy lies within ``within`` * |E_gs| of E_gs."""
    e, w = shot_energies(samples, energies)
    return float(w[e <= e_gs + within * abs(e_gs) + _EDGE_EPS].sum() / w.sum())


@dataclass(frozen=True)
class EnergyHistogram:
    bin_left: np.ndarray
    bin_right: np.ndarray
    probability: np.ndarray
    valid_only: bool
    bin_width: float

    @property
    def included_fraction(self) -> float:
        return float(self.probability.sum())

    def rows(self) -> list[tuple[float, float, float]]:
        return list(zip(self.bin_left.tolist(), self.bin_right.tolist(), self.probability.tolist()))


def bin_index(normalized: np.ndarray, bin_width: float) -> np.ndarray:
    """Bins are anchored at -1: bin k covers [-1 + k w, -1 + (k+1) w)."""
    return np.floor((np.asarray(normalized) + 1.0) / bin_width + _EDGE_EPS).astype(np.int64)


def energy_histogram(samples: SampleSet, energies: Mapping[str, float], e_gs: float,
                     bin_width: float = DEFAULT_BIN_WIDTH, valid_only: bool = True) -> EnergyHistogram:
    """Per-shot histogram of E/|E_gs|.

    In valid-only mode shots with E >= 0 are dropped but probabilities stay
    fractions of all shots; the bins then span [-1, 0).
    """
    _check_gs(e_gs)
    if bin_width <= 0:
        raise MetricsError("bin width must be positive")
    e, w = shot_energies(samples, energies)
    total = w.sum()
    if valid_only:
        keep = e < 0
        e, w = e[keep], w[keep]
    k = bin_index(e / abs(e_gs), bin_width)
    top = math.ceil(round(1.0 / bin_width, 9)) - 1
    lo = min(0, int(k.min())) if k.size else 0
    hi = top if valid_only else max(top, int(k.max()) if k.size else top)
    if valid_only and k.size:
        hi = max(hi, int(k.max()))
    prob = np.zeros(hi - lo + 1)
    np.add.at(prob, k - lo, w / total)
    ks = np.arange(lo, hi + 1)
    left = np.round(-1.0 + ks * bin_width, 12)
    right = np.round(-1.0 + (ks + 1) * bin_width, 12)
    return EnergyHistogram(left, right, prob, valid_only, bin_width)


def merge_samples(sets: list[SampleSet]) -> SampleSet:
    counts: dict[str, int] = {}
    for s in sets:
        for b, c in s.counts.items():
            counts[b] = counts.get(b, 0) + c
    return SampleSet(counts, sum(s.shots for s in sets), None)


def random_baseline(sequence: str, lattice: Lattice | LatticeSpec | str, params: EnergyParams,
                    shots: int, seed: int | None, e_gs: float, bin_width: float = DEFAULT_BIN_WIDTH
                    ) -> tuple[SampleSet, dict[str, float], EnergyHistogram]:
    """Uniform random bitstrings scored and binned like circuit samples."""
    if shots < 1:
        raise MetricsError("shots must be >= 1")
    spec = get_spec(lattice)
    m = qubit_count(spec, len(sequence))
    rng = np.random.default_rng(seed)
    codes = rng.integers(0, 1 << m, size=shots, dtype=np.int64)
    samples = SampleSet(counts_from_indices(codes, m), shots, seed)
    energies = score_samples(samples, sequence, spec, params)
    return samples, energies, energy_histogram(samples, energies, e_gs, bin_width)


def score_samples(samples: SampleSet, sequence: str, lattice: Lattice | LatticeSpec | str,
                  params: EnergyParams) -> dict[str, float]:
    keys = sorted(samples.counts)
    codes = np.array([int(k, 2) for k in keys], dtype=np.int64)
    return dict(zip(keys, BatchScorer(sequence, lattice, params)(codes).tolist()))


def write_histogram_csv(hist: EnergyHistogram, path: str | Path) -> None:
    write_csv(path, ["bin_left", "bin_right", "probability"], hist.rows())
