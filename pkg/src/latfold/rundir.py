"""Run-directory persistence: manifests, traces, ledgers and oracle caches.

Every file is written atomically (temp file in the same directory, then
rename).  Floats go through ``repr`` so CSVs round-trip exactly.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Any

import numpy as np

from ._io import atomic_write_text, write_csv  # noqa: F401  re-exported
from .cvar import RunRecord
from .energy import ContactMatrix, EnergyParams

MANIFEST = "manifest.json"
ORACLE = "oracle.json"
MATRIX = "contact_matrix.csv"


def write_json(path: str | Path, obj: Any) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_json(path: str | Path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def matrix_csv(contact: ContactMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(contact.residues))
    for r, row in zip(contact.residues, contact.eps):
        w.writerow([r] + [repr(float(x)) for x in row])
    return buf.getvalue()


def oracle_key(sequence: str, lattice: str, params: EnergyParams) -> str:
    blob = json.dumps({"sequence": sequence, "lattice": lattice, "max_k": params.max_k,
                       "exclude_bonded": params.exclude_bonded, "matrix": params.contact.digest()},
                      sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def restart_dir(run_dir: str | Path, i: int) -> Path:
    return Path(run_dir) / f"restart_{i:02d}"


def write_record(run_dir: str | Path, i: int, record: RunRecord) -> None:
    d = restart_dir(run_dir, i)
    write_csv(d / "trace.csv", ["iter", "cvar"], enumerate(record.cvar_trace))
    ledger = sorted(record.ledger.items())
    write_csv(d / "ledger.csv", ["bitstring", "energy", "first_seen_iter"],
              ((b, e, it) for b, (e, it) in ledger))
    write_json(d / "params.json", {
        "restart": i,
        "seed": record.seed,
        "theta": [float(x) for x in record.best_params],
        "final_cvar": record.final_cvar,
        "e_lowest": record.e_lowest,
        "termination": record.termination,
        "n_evals": record.n_evals,
    })


def read_params(run_dir: str | Path, i: int) -> dict:
    return read_json(restart_dir(run_dir, i) / "params.json")


def read_ledger(run_dir: str | Path, i: int) -> dict[str, tuple[float, int]]:
    return {r["bitstring"]: (float(r["energy"]), int(r["first_seen_iter"]))
            for r in read_csv(restart_dir(run_dir, i) / "ledger.csv")}


def theta_of(params_json: dict) -> np.ndarray:
    return np.array(params_json["theta"], dtype=float)
