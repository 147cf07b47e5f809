import pytest
from hypothesis import given, strategies as st

from hcowf2.bits import Bitvec, array_to_bitvec, packed_size


def test_lsb_first_packing():
    v = Bitvec(12, 0b1000_0000_0011)
    assert v.to_bytes() == bytes([0b0000_0011, 0b0000_1000])
    assert v[0] == 1 and v[1] == 1 and v[11] == 1 and v[10] == 0


def test_value_must_fit():
    with pytest.raises(ValueError):
        Bitvec(3, 8)
    with pytest.raises(ValueError):
        Bitvec(0, 0)


@given(st.integers(1, 300).flatmap(lambda w: st.tuples(st.just(w), st.integers(0, 2**w - 1))))
def test_round_trips(wv):
    width, value = wv
    v = Bitvec(width, value)
    assert len(v.to_bytes()) == packed_size(width)
    assert Bitvec.from_bytes(v.to_bytes(), width) == v
    assert Bitvec.from_hex(v.hex(), width) == v
    assert array_to_bitvec(v.to_array()) == v
    assert Bitvec.from_bits(v.bits()) == v
