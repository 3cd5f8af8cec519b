import math

import numpy as np

from latfold.energy import EnergyParams
from latfold.lattice import decode_conformation, get_spec


def naive_energy(bits, sequence, lattice, params):
    """Independent double loop over bead pairs; no vectorisation, no shared helpers."""
    conf = decode_conformation(bits, lattice, len(sequence))
    xyz = [tuple(int(v) for v in row) for row in conf.coords]
    spec = get_spec(lattice)
    d1 = math.sqrt(spec.knn_squared[0])
    eps = params.contact
    lookup = {r: i for i, r in enumerate(eps.residues)}
    olap = 0
    inter = 0.0
    n = len(sequence)
    for i in range(n):
        for j in range(i + 1, n):
            d2 = sum((a - b) ** 2 for a, b in zip(xyz[i], xyz[j]))
            if d2 == 0:
                olap += 1
            if params.exclude_bonded and j == i + 1:
                continue
            for k in range(params.max_k):
                if d2 == spec.knn_squared[k]:
                    inter += eps.eps[lookup[sequence[i]], lookup[sequence[j]]] * d1 / math.sqrt(d2)
    return params.lambda_olap * olap + inter + params.lambda_redun * conf.redundant_count


def all_bitstrings(m):
    return [format(i, f"0{m}b") for i in range(1 << m)]


def params_for(mj, seq, **kw):
    return EnergyParams.default(mj, len(seq), **kw)


def tv_distance(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
