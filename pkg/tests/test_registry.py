import pytest

from latfold.energy import AMINO_ACIDS
from latfold.lattice import Lattice, qubit_count
from latfold.registry import BY_ID, INSTANCES, get_instance


def test_twenty_instances():
    assert len(INSTANCES) == 20
    assert len(BY_ID) == 20


@pytest.mark.parametrize("inst", INSTANCES, ids=lambda i: i.pdb_id)
def test_qubit_cells_match_codec(inst):
    assert inst.supported_lattices
    assert set(inst.sequence) <= set(AMINO_ACIDS)
    for lattice, m in inst.qubits.items():
        assert qubit_count(lattice, inst.n) == m


def test_selected_rows():
    k43 = get_instance("1K43")
    assert (k43.sequence, k43.n, k43.qubits[Lattice.FCC]) == ("RGKWTYNGITYEGR", 14, 46)
    abcp = get_instance("abcp")
    assert (abcp.sequence, abcp.qubits) == ("APRLRFY", {Lattice.BCC: 14})
    assert get_instance("4QXX").supported_lattices == (Lattice.FCC,)
    with pytest.raises(KeyError):
        get_instance("XXXX")
