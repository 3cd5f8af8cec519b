import itertools

import numpy as np
import pytest

from latfold.energy import BatchScorer, ContactMatrix, EnergyParams
from latfold.lattice import decode_conformation, decode_indices, qubit_count
from latfold.oracle import (
    OracleBudgetError,
    ground_state,
    low_energy_spectrum,
    naive_enumerate,
)
from latfold.registry import get_instance

# frozen reference values (MJ contact energies, default penalties)
FROZEN = [
    ("4QXX", "fcc", 1, -26.720000000000002, 4),
    ("2OL9", "fcc", 1, -29.310000000000002, 8),
    ("ABCP", "bcc", 1, -40.8, 8),
    ("ABCP", "bcc", 2, -59.42820643540327, 2),
    ("5AWL", "tetra", 1, -30.749999999999996, 2),
    ("2M6C", "bcc", 1, -58.38, 2),
    ("1IXU", "tetra", 1, -35.38, 2),
    ("2N5R", "tetra", 1, -52.25, 18),
]


@pytest.mark.parametrize("pdb_id,lattice,k,e_gs,n_argmin", FROZEN)
def test_frozen_ground_states(mj, pdb_id, lattice, k, e_gs, n_argmin):
    seq = get_instance(pdb_id).sequence
    res = ground_state(seq, lattice, EnergyParams.default(mj, len(seq), k))
    assert res.e_gs == pytest.approx(e_gs, abs=1e-9)
    assert len(res.argmin_bitstrings) == n_argmin


@pytest.mark.parametrize("pdb_id,lattice,k", [("4QXX", "fcc", 1), ("ABCP", "bcc", 2), ("5AWL", "tetra", 3),
                                             ("2OL9", "fcc", 2)])
def test_pruned_matches_naive(mj, pdb_id, lattice, k):
    seq = get_instance(pdb_id).sequence
    p = EnergyParams.default(mj, len(seq), k)
    a = ground_state(seq, lattice, p)
    b = naive_enumerate(seq, lattice, p)
    assert a.e_gs == pytest.approx(b.e_gs, abs=1e-9)
    assert a.argmin_bitstrings == b.argmin_bitstrings
    assert a.states_enumerated < b.states_enumerated


def test_argmin_states_are_self_avoiding(mj):
    seq = get_instance("2OL9").sequence
    res = ground_state(seq, "fcc", EnergyParams.default(mj, len(seq)))
    for bits in res.argmin_bitstrings:
        conf = decode_conformation(bits, "fcc", len(seq))
        assert len({tuple(c) for c in conf.coords.tolist()}) == len(seq)
        assert conf.redundant_count == 0


def _symmetry_images(coords):
    """All 48 signed axis permutations applied to a walk."""
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            yield coords[:, perm] * np.array(signs)


def test_degenerate_ground_states_close_under_symmetry(mj):
    # every point-group image of a ground state that still honours the fixed
    # prefix must itself be in the argmin set
    seq = get_instance("ABCP").sequence
    res = naive_enumerate(seq, "bcc", EnergyParams.default(mj, len(seq)))
    m = qubit_count("bcc", len(seq))
    coords, _ = decode_indices(np.arange(1 << m), "bcc", len(seq))
    by_walk = {c.tobytes(): i for i, c in enumerate(coords)}
    argmin = set(res.argmin_bitstrings)
    images = 0
    for bits in res.argmin_bitstrings:
        c = decode_conformation(bits, "bcc", len(seq)).coords
        for img in _symmetry_images(c):
            code = by_walk.get(np.ascontiguousarray(img, dtype=np.int64).tobytes())
            if code is not None:
                images += 1
                assert format(code, f"0{m}b") in argmin
    assert images > len(argmin)


def test_low_energy_spectrum(mj):
    seq = get_instance("4QXX").sequence
    p = EnergyParams.default(mj, len(seq))
    spec = low_energy_spectrum(seq, "fcc", p, 10)
    assert len(spec) == 10
    assert [e for e, _ in spec] == sorted(e for e, _ in spec)
    all_e = np.sort(BatchScorer(seq, "fcc", p)(np.arange(1 << 10)))
    assert [e for e, _ in spec] == pytest.approx(all_e[:10].tolist(), abs=1e-12)


def test_budget_refusals(mj):
    seq = get_instance("1K43").sequence
    with pytest.raises(OracleBudgetError):
        ground_state(seq, "fcc", EnergyParams.default(mj, len(seq)))
    seq = get_instance("2M6C").sequence
    with pytest.raises(OracleBudgetError):
        ground_state(seq, "bcc", EnergyParams.default(mj, len(seq)), max_nodes=100)
    with pytest.raises(OracleBudgetError):
        naive_enumerate(get_instance("2M6C").sequence, "fcc", EnergyParams.default(mj, 8))


def test_raw_sequence_and_uniform_matrix():
    # with a uniform attraction every maximally compact walk ties
    p = EnergyParams.default(ContactMatrix.uniform(-1.0), 5)
    a = ground_state("QQQQQ", "fcc", p)
    b = naive_enumerate("QQQQQ", "fcc", p)
    assert a.argmin_bitstrings == b.argmin_bitstrings
    assert len(a.argmin_bitstrings) > 1
