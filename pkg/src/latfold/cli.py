"""Command-line front end: ``latfold {instances,ground-state,train,evaluate,baseline}``.

Settings come from built-in defaults, then an optional INI file (``--config``),
then explicit flags; later sources win.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__, rundir
from .cvar import (
    CvarConfig,
    CvarMode,
    EnergyCache,
    Method,
    OptimizationError,
    OptimizerConfig,
    Problem,
    multi_restart,
    restart_seeds,
)
from .energy import EnergyParams, ParameterError, load_contact_matrix, mj_matrix
from .lattice import CodecError, Lattice, get_spec, qubit_count, write_turn_table_csv
from .metrics import (
    DEFAULT_BIN_WIDTH,
    MetricsError,
    energy_histogram,
    merge_samples,
    metrics_report,
    near_ground_probability,
    random_baseline,
    write_histogram_csv,
)
from .oracle import DEFAULT_MAX_QUBITS, OracleBudgetError, OracleError, ground_state
from .registry import INSTANCES, get_instance
from .sim import (
    Backend,
    SampleSet,
    SimulationError,
    build_ansatz,
    counts_from_indices,
    sample_indices,
    simulate,
    write_samples_csv,
)

log = logging.getLogger("latfold")

EXIT_OK, EXIT_ARGS, EXIT_BUDGET, EXIT_RUNTIME = 0, 2, 3, 4
AUTO_DENSE_MAX = 20


class UsageError(Exception):
    """Bad or inconsistent user input (exit code 2)."""


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# name -> (type, default).  Every entry is both a flag and a config key.
OPTIONS: dict[str, tuple[Callable[[str], Any], Any]] = {
    "seq": (str, None),
    "pdb_id": (str, None),
    "lattice": (str, None),
    "knn": (int, 1),
    "exclude_bonded": (_bool, False),
    "lambda_olap": (float, None),
    "lambda_redun": (float, None),
    "matrix": (str, None),
    "reps": (int, 1),
    "alpha": (float, 0.1),
    "shots": (int, 100_000),
    "train_shots": (int, 1000),
    "cvar_mode": (str, "shots"),
    "method": (str, "COBYLA"),
    "restarts": (int, 10),
    "max_iter": (int, 5000),
    "rhobeg": (float, 1.0),
    "tol": (float, 1e-6),
    "seed": (int, 0),
    "backend": (str, None),
    "bond_cap": (int, 16),
    "workers": (int, 1),
    "max_qubits": (int, DEFAULT_MAX_QUBITS),
    "bin_width": (float, DEFAULT_BIN_WIDTH),
    "no_plots": (_bool, False),
    "out": (str, None),
}

_HELP = {
    "seq": "raw one-letter residue sequence",
    "pdb_id": "instance from the built-in registry",
    "lattice": "tetra, bcc or fcc",
    "knn": "interaction order K (1-3)",
    "exclude_bonded": "drop bonded neighbours from the interaction sum",
    "matrix": "contact-energy CSV (default: Miyazawa-Jernigan)",
    "shots": "shots for evaluate and baseline",
    "train_shots": "shots per cost evaluation during training",
    "cvar_mode": "shots or exact",
    "method": "COBYLA or Nelder-Mead",
    "backend": "dense or mps (default: dense up to 20 qubits)",
    "workers": "parallel restart processes",
    "max_qubits": "enumeration budget for ground-state",
    "out": "run directory",
}


def read_config(path: str | Path) -> dict[str, Any]:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise UsageError(f"cannot read config file {path}")
    out: dict[str, Any] = {}
    for section in [parser.defaults(), *(parser[s] for s in parser.sections())]:
        for key, raw in section.items():
            name = key.replace("-", "_")
            if name not in OPTIONS:
                raise UsageError(f"unknown config key {key!r}")
            try:
                out[name] = OPTIONS[name][0](raw)
            except ValueError as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
    return out


def resolve_settings(args: argparse.Namespace) -> dict[str, Any]:
    settings = {k: d for k, (_, d) in OPTIONS.items()}
    if getattr(args, "config", None):
        settings.update(read_config(args.config))
    for k in OPTIONS:
        v = getattr(args, k, None)
        if v is not None:
            settings[k] = v
    return settings


@dataclass(frozen=True)
class RunConfig:
    label: str
    sequence: str
    lattice: Lattice
    params: EnergyParams
    matrix_source: str
    reps: int
    cvar: CvarConfig
    optimizer: OptimizerConfig
    backend: Backend
    bond_cap: int
    workers: int
    out: Path

    @property
    def problem(self) -> Problem:
        return Problem(self.sequence, self.lattice, self.params)

    @property
    def m_qubits(self) -> int:
        return qubit_count(self.lattice, len(self.sequence))


def build_config(s: dict[str, Any]) -> RunConfig:
    if not s["seq"] and not s["pdb_id"]:
        raise UsageError("give --seq or --pdb-id")
    lattice = Lattice.parse(s["lattice"]) if s["lattice"] else None
    if s["pdb_id"]:
        try:
            inst = get_instance(s["pdb_id"])
        except KeyError:
            raise UsageError(f"unknown instance {s['pdb_id']!r}; see 'latfold instances'") from None
        if s["seq"] and s["seq"].upper() != inst.sequence:
            raise UsageError(f"--seq does not match the sequence of {inst.pdb_id}")
        if lattice is None:
            if len(inst.supported_lattices) != 1:
                raise UsageError(f"{inst.pdb_id} runs on several lattices; pick one with --lattice")
            lattice = inst.supported_lattices[0]
        if lattice not in inst.supported_lattices:
            names = ", ".join(l.value for l in inst.supported_lattices)
            raise UsageError(f"{inst.pdb_id} is not registered on {lattice.value} (supported: {names})")
        label, sequence = inst.pdb_id, inst.sequence
    else:
        sequence = s["seq"].upper()
        label = sequence
        if lattice is None:
            raise UsageError("--lattice is required with --seq")
    if len(sequence) < get_spec(lattice).min_residues:
        raise UsageError(f"{lattice.value} needs at least {get_spec(lattice).min_residues} residues")

    contact = load_contact_matrix(s["matrix"]) if s["matrix"] else mj_matrix()
    contact.index(sequence)
    params = EnergyParams.default(contact, len(sequence), s["knn"], s["exclude_bonded"],
                                  s["lambda_olap"], s["lambda_redun"])
    m = qubit_count(lattice, len(sequence))
    backend = Backend.parse(s["backend"]) if s["backend"] else (
        Backend.DENSE if m <= AUTO_DENSE_MAX else Backend.MPS)
    cvar = CvarConfig(s["alpha"], s["train_shots"], CvarMode(s["cvar_mode"].lower()))
    opt = OptimizerConfig(Method.parse(s["method"]), s["max_iter"], s["rhobeg"], s["tol"],
                          s["restarts"], s["seed"])
    if s["workers"] < 1:
        raise UsageError("--workers must be >= 1")
    out = Path(s["out"]) if s["out"] else Path("runs") / f"{label}_{lattice.value}_k{s['knn']}"
    return RunConfig(label, sequence, lattice, params, s["matrix"] or "mj1996", s["reps"], cvar, opt,
                     backend, s["bond_cap"], s["workers"], out)


def oracle_payload(cfg: RunConfig, result) -> dict:
    p = cfg.params
    return {
        "key": rundir.oracle_key(cfg.sequence, cfg.lattice.value, p),
        "sequence": cfg.sequence,
        "lattice": cfg.lattice.value,
        "max_k": p.max_k,
        "exclude_bonded": p.exclude_bonded,
        "matrix_sha256": p.contact.digest(),
        "lambda_olap": p.lambda_olap,
        "lambda_redun": p.lambda_redun,
        **result.to_json(),
    }


def load_oracle(run_dir: Path, key: str) -> dict:
    path = run_dir / rundir.ORACLE
    if not path.exists():
        raise UsageError(f"no ground-state result in {run_dir}; run 'latfold ground-state --out {run_dir}' first")
    data = rundir.read_json(path)
    if data.get("key") != key:
        raise UsageError(f"{path} was computed for a different instance or energy setting "
                         "(hash mismatch); rerun 'latfold ground-state'")
    return data


# -- commands ----------------------------------------------------------------

def cmd_instances(args, settings) -> int:
    print("pdb_id,sequence,n,tetra,bcc,fcc")
    for inst in INSTANCES:
        cells = [str(inst.qubits.get(l, "-")) for l in Lattice]
        print(",".join([inst.pdb_id, inst.sequence, str(inst.n), *cells]))
    return EXIT_OK


def cmd_ground_state(args, settings) -> int:
    cfg = build_config(settings)
    key = rundir.oracle_key(cfg.sequence, cfg.lattice.value, cfg.params)
    path = cfg.out / rundir.ORACLE
    if path.exists():
        cached = rundir.read_json(path)
        if cached.get("key") == key:
            log.info("oracle cache hit: %s", path)
            print(f"e_gs={cached['e_gs']!r} argmin={len(cached['argmin_bitstrings'])} (cached)")
            return EXIT_OK
        log.info("oracle cache at %s is stale; recomputing", path)
    result = ground_state(cfg.sequence, cfg.lattice, cfg.params, max_qubits=settings["max_qubits"])
    rundir.write_json(path, oracle_payload(cfg, result))
    log.info("wrote %s", path)
    print(f"e_gs={result.e_gs!r} argmin={len(result.argmin_bitstrings)} "
          f"enumerated={result.states_enumerated} pruned={result.states_pruned}")
    return EXIT_OK


def manifest(cfg: RunConfig, seeds: list[int]) -> dict:
    spec = get_spec(cfg.lattice)
    p = cfg.params
    return {
        "tool": "latfold",
        "version": __version__,
        "label": cfg.label,
        "sequence": cfg.sequence,
        "lattice": cfg.lattice.value,
        "n_residues": len(cfg.sequence),
        "m_qubits": cfg.m_qubits,
        "fixed_prefix": spec.fixed_prefix,
        "bit_order": "character 0 is qubit 0 and the most significant bit of the integer code",
        "energy": {
            "max_k": p.max_k,
            "exclude_bonded": p.exclude_bonded,
            "lambda_olap": p.lambda_olap,
            "lambda_redun": p.lambda_redun,
            "matrix_source": cfg.matrix_source,
            "matrix_file": rundir.MATRIX,
            "matrix_sha256": p.contact.digest(),
        },
        "oracle_key": rundir.oracle_key(cfg.sequence, cfg.lattice.value, p),
        "ansatz": build_ansatz(cfg.m_qubits, cfg.reps).describe(),
        "cvar": {"alpha": cfg.cvar.alpha, "shots": cfg.cvar.shots, "mode": cfg.cvar.mode.value},
        "optimizer": {"method": cfg.optimizer.method.value, "max_iter": cfg.optimizer.max_iter,
                      "rhobeg": cfg.optimizer.rhobeg, "tol": cfg.optimizer.tol,
                      "restarts": cfg.optimizer.restarts, "initial_theta": "uniform[-pi, pi)"},
        "backend": cfg.backend.value,
        "bond_cap": cfg.bond_cap,
        "seed": cfg.optimizer.seed,
        "restart_seeds": seeds,
    }


def config_from_manifest(run_dir: Path) -> RunConfig:
    try:
        man = rundir.read_json(run_dir / rundir.MANIFEST)
    except FileNotFoundError:
        raise UsageError(f"{run_dir} is not a run directory (no {rundir.MANIFEST})") from None
    contact = load_contact_matrix(run_dir / man["energy"]["matrix_file"])
    if contact.digest() != man["energy"]["matrix_sha256"]:
        raise UsageError(f"{run_dir / rundir.MATRIX} does not match the manifest digest")
    en = man["energy"]
    params = EnergyParams(contact, en["lambda_olap"], en["lambda_redun"], en["max_k"], en["exclude_bonded"])
    opt = man["optimizer"]
    return RunConfig(
        man["label"], man["sequence"], Lattice.parse(man["lattice"]), params, en["matrix_source"],
        man["ansatz"]["reps"], CvarConfig(man["cvar"]["alpha"], man["cvar"]["shots"], CvarMode(man["cvar"]["mode"])),
        OptimizerConfig(Method.parse(opt["method"]), opt["max_iter"], opt["rhobeg"], opt["tol"],
                        opt["restarts"], man["seed"]),
        Backend.parse(man["backend"]), man["bond_cap"], 1, run_dir)


def cmd_train(args, settings) -> int:
    cfg = build_config(settings)
    if cfg.backend is Backend.DENSE and cfg.m_qubits > 28:
        raise UsageError(f"{cfg.m_qubits} qubits is too many for the dense backend; use --backend mps")
    if cfg.cvar.mode is CvarMode.EXACT and cfg.m_qubits > 28:
        raise UsageError("exact CVaR needs the full distribution; limited to 28 qubits")
    seeds = restart_seeds(cfg.optimizer.seed, cfg.optimizer.restarts)
    out = cfg.out
    rundir.write_json(out / rundir.MANIFEST, manifest(cfg, seeds))
    rundir.atomic_write_text(out / rundir.MATRIX, rundir.matrix_csv(cfg.params.contact))
    write_turn_table_csv(out / "turn_table.csv")
    log.info("training %s on %s: %d qubits, %d restarts, backend %s", cfg.label, cfg.lattice.value,
             cfg.m_qubits, len(seeds), cfg.backend.value)
    spec = build_ansatz(cfg.m_qubits, cfg.reps)
    records, summary = multi_restart(cfg.problem, spec, cfg.cvar, cfg.optimizer, cfg.backend, cfg.bond_cap,
                                     seeds=seeds, workers=cfg.workers)
    for i, rec in enumerate(records):
        rundir.write_record(out, i, rec)
    rundir.write_json(out / "summary.json", summary.to_json())
    if not settings["no_plots"]:
        from . import plotting
        plotting.cvar_traces(out / "figures" / "cvar_traces.png", [r.cvar_trace for r in records],
                             title=f"{cfg.label} {cfg.lattice.value}")
    print(f"restarts={len(records)} mean_cvar={summary.mean_cvar!r} min_cvar={summary.min_cvar!r} "
          f"e_lowest={summary.e_lowest!r} out={out}")
    return EXIT_OK


def _stats(values: list[float]) -> dict:
    stderr = statistics.stdev(values) / math.sqrt(len(values)) if len(values) > 1 else 0.0
    return {"mean": statistics.fmean(values), "stderr": stderr, "min": min(values)}


def _run_dir(args, settings) -> Path:
    target = getattr(args, "run_dir", None) or settings["out"]
    if not target:
        raise UsageError("give a run directory")
    return Path(target)


def cmd_evaluate(args, settings) -> int:
    run_dir = _run_dir(args, settings)
    cfg = config_from_manifest(run_dir)
    man = rundir.read_json(run_dir / rundir.MANIFEST)
    oracle = load_oracle(run_dir, man["oracle_key"])
    e_gs = float(oracle["e_gs"])
    shots = settings["shots"]
    seed = args.seed if args.seed is not None else man["seed"]
    bin_width = settings["bin_width"]
    alpha = cfg.cvar.alpha
    spec = build_ansatz(cfg.m_qubits, cfg.reps)
    cache = EnergyCache(cfg.problem)

    per_restart, all_samples, hists, traces = [], [], [], []
    for i in range(len(man["restart_seeds"])):
        params = rundir.read_params(run_dir, i)
        state = simulate(spec, rundir.theta_of(params), cfg.backend, cfg.bond_cap)
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        codes = sample_indices(state, shots, rng)
        samples = SampleSet(counts_from_indices(codes, cfg.m_qubits), shots, seed)
        keys = sorted(samples.counts)
        energies = dict(zip(keys, cache.energies(np.array([int(k, 2) for k in keys], dtype=np.int64)).tolist()))
        report = metrics_report(samples, energies, e_gs, float(params["e_lowest"]), alpha)
        hist = energy_histogram(samples, energies, e_gs, bin_width)
        d = rundir.restart_dir(run_dir, i)
        write_samples_csv(samples, d / "samples.csv")
        write_histogram_csv(hist, d / "hist.csv")
        near = near_ground_probability(samples, energies, e_gs)
        rundir.write_json(d / "metrics.json", {**report.to_json(), "shots": shots, "seed": [seed, i],
                                               "near_ground_probability": near})
        per_restart.append({"restart": i, **report.to_json(), "near_ground_probability": near})
        all_samples.append((samples, energies))
        hists.append(hist)
        traces.append([float(r["cvar"]) for r in rundir.read_csv(d / "trace.csv")])

    pooled_samples = merge_samples([s for s, _ in all_samples])
    pooled_energies: dict[str, float] = {}
    for _, en in all_samples:
        pooled_energies.update(en)
    e_lowest = min(r["e_lowest"] for r in per_restart)
    pooled = metrics_report(pooled_samples, pooled_energies, e_gs, e_lowest, alpha)
    pooled_hist = energy_histogram(pooled_samples, pooled_energies, e_gs, bin_width)
    write_histogram_csv(pooled_hist, run_dir / "hist.csv")
    best = min(range(len(per_restart)), key=lambda i: (per_restart[i]["c_cvar"], i))
    summary = {
        **pooled.to_json(),
        "are_stats": _stats([r["are"] for r in per_restart]),
        "bcre_stats": _stats([r["bcre"] for r in per_restart]),
        "best_restart": best,
        "shots_per_restart": shots,
        "seed": seed,
        "bin_width": bin_width,
        "per_restart": per_restart,
    }
    rundir.write_json(run_dir / "metrics.json", summary)
    if not settings["no_plots"]:
        from . import plotting
        figs = run_dir / "figures"
        base = run_dir / "baseline" / "hist.csv"
        baseline_hist = _read_hist(base, bin_width) if base.exists() else None
        title = f"{cfg.label} {cfg.lattice.value}"
        plotting.energy_distribution(figs / "energy_distribution.png", hists[best], baseline_hist, title)
        plotting.relative_errors(figs / "relative_errors.png", [r["are"] for r in per_restart],
                                 [r["bcre"] for r in per_restart], title)
        plotting.cvar_traces(figs / "cvar_traces.png", traces, e_gs, title)
    st = summary["are_stats"]
    print(f"e_gs={e_gs!r} are_mean={st['mean']:.6g} are_min={st['min']:.6g} "
          f"bcre_pooled={pooled.bcre:.6g} best_restart={best}")
    return EXIT_OK


def _read_hist(path: Path, bin_width: float):
    from .metrics import EnergyHistogram
    rows = rundir.read_csv(path)
    return EnergyHistogram(np.array([float(r["bin_left"]) for r in rows]),
                           np.array([float(r["bin_right"]) for r in rows]),
                           np.array([float(r["probability"]) for r in rows]), True, bin_width)


def cmd_baseline(args, settings) -> int:
    run_dir = getattr(args, "run_dir", None)
    if run_dir or (settings["out"] and not settings["seq"] and not settings["pdb_id"]):
        cfg = config_from_manifest(_run_dir(args, settings))
    else:
        cfg = build_config(settings)
    out = cfg.out
    oracle = load_oracle(out, rundir.oracle_key(cfg.sequence, cfg.lattice.value, cfg.params))
    e_gs = float(oracle["e_gs"])
    shots, seed, bin_width = settings["shots"], settings["seed"], settings["bin_width"]
    samples, energies, hist = random_baseline(cfg.sequence, cfg.lattice, cfg.params, shots, seed, e_gs, bin_width)
    e_lowest = min(energies.values())
    report = metrics_report(samples, energies, e_gs, e_lowest, cfg.cvar.alpha)
    d = out / "baseline"
    d.mkdir(parents=True, exist_ok=True)
    write_samples_csv(samples, d / "samples.csv")
    write_histogram_csv(hist, d / "hist.csv")
    rundir.write_json(d / "metrics.json", {**report.to_json(), "shots": shots, "seed": seed,
                                           "near_ground_probability": near_ground_probability(samples, energies, e_gs)})
    if not settings["no_plots"]:
        from . import plotting
        plotting.energy_distribution(out / "figures" / "baseline_distribution.png", None, hist,
                                     f"{cfg.label} {cfg.lattice.value} random")
    print(f"e_gs={e_gs!r} c_cvar={report.c_cvar!r} e_lowest={e_lowest!r} valid={report.n_valid_fraction:.4f}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="FILE", help="INI file of default settings")
    p.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    for name, (typ, default) in OPTIONS.items():
        flag = "--" + name.replace("_", "-")
        help_text = _HELP.get(name, "")
        if default is not None and name not in ("exclude_bonded", "no_plots"):
            help_text = f"{help_text} (default {default})".strip()
        if typ is _bool:
            p.add_argument(flag, dest=name, action="store_const", const=True, default=None, help=help_text)
        elif name == "lattice":
            p.add_argument(flag, dest=name, choices=[l.value for l in Lattice], default=None, help=help_text)
        elif name == "backend":
            p.add_argument(flag, dest=name, choices=[b.value for b in Backend], default=None, help=help_text)
        else:
            p.add_argument(flag, dest=name, type=typ, default=None, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latfold", description="Variational lattice protein folding.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "instances": (cmd_instances, "list the built-in benchmark instances"),
        "ground-state": (cmd_ground_state, "exact ground state by enumeration"),
        "train": (cmd_train, "CVaR training with seeded restarts"),
        "evaluate": (cmd_evaluate, "resample trained circuits and compute metrics"),
        "baseline": (cmd_baseline, "uniform random sampling baseline"),
    }
    for name, (func, help_text) in commands.items():
        sp = sub.add_parser(name, help=help_text)
        if name in ("evaluate", "baseline"):
            sp.add_argument("run_dir", nargs="?", help="run directory (default: --out)")
        _add_options(sp)
        sp.set_defaults(func=func)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr, force=True)
    try:
        settings = resolve_settings(args)
        return args.func(args, settings)
    except (UsageError, CodecError, ParameterError, MetricsError, ValueError) as exc:
        print(f"latfold: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (OracleBudgetError, MemoryError) as exc:
        print(f"latfold: budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (OracleError, OptimizationError, SimulationError, OSError) as exc:
        print(f"latfold: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
