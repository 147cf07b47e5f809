import hashlib
import random

import numpy as np
import pytest

from hcowf2 import Bitvec, EvalTrace, Evaluator, FunctionDescription, MacTag, derive_input, evaluate, generate_fd
from hcowf2 import _kernel
from hcowf2.errors import DescriptionInvalid, WidthMismatch
from hcowf2.oneway import TraceStep, check_uniqueness, generate_q_set, max_q_multiplicity
from oracles import walk_chain


def q_ints(fd):
    return [q.value for q in fd.q_set]


def test_evaluate_is_deterministic(fd4):
    p = Bitvec(4, 0b1001)
    assert evaluate(fd4, p)[0] == evaluate(fd4, p)[0]


def test_fixture_tag_pinned_by_chain_interpreter(fd4):
    assert walk_chain(fd4.h.formulas, q_ints(fd4), 0b1010) == 8
    assert evaluate(fd4, Bitvec(4, 0b1010))[0] == MacTag(Bitvec(4, 8))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_evaluate_matches_chain_interpreter(n):
    fd = generate_fd(9, n, 3)
    ev = Evaluator(fd)
    for p in range(2**n):
        assert ev.tag(Bitvec(n, p)).value.value == walk_chain(fd.h.formulas, q_ints(fd), p)


def test_compiled_and_numpy_kernels_agree(fd16):
    ev = Evaluator(fd16)
    rnd = random.Random(0)
    for _ in range(20):
        p = Bitvec(16, rnd.getrandbits(16))
        states = np.zeros((0, 16), dtype=np.uint8)
        out, steps = _kernel._chain_numpy(ev._occ, ev._q_bits, p.to_array(), states)
        assert steps == 256
        assert out.tolist() == ev.tag(p).value.to_array().tolist()


def test_duplicated_q_entry_is_invalid(fd4):
    q = fd4.q_values.copy()
    q[5] = q[2]
    bad = FunctionDescription(fd4.h, q)
    with pytest.raises(DescriptionInvalid):
        evaluate(bad, Bitvec(4, 0))


def test_width_mismatch(fd4):
    with pytest.raises(WidthMismatch):
        evaluate(fd4, Bitvec(5, 0))


def test_exactly_n_squared_computations(fd16):
    ev = Evaluator(fd16)
    ev.tag(Bitvec(16, 1))
    assert ev.computations == 256
    ev.tag(Bitvec(16, 2))
    assert ev.computations == 512


# -- traces -----------------------------------------------------------------

def test_trace_chain_integrity(fd16):
    tag, trace = evaluate(fd16, Bitvec(16, 0xBEEF), with_trace=True)
    steps = trace.steps
    assert len(steps) == 256
    assert steps[0].input_state == Bitvec(16, 0xBEEF)
    for prev, cur in zip(steps, steps[1:]):
        assert cur.input_state == prev.output
    assert steps[-1].output == tag.value
    assert [s.q for s in steps] == list(fd16.q_set)


@pytest.mark.parametrize("n", [2, 4, 8, 16])
def test_traces_have_no_repeated_inputs(n):
    fd = generate_fd(3, n)
    rnd = random.Random(n)
    for _ in range(5):
        _, trace = evaluate(fd, Bitvec(n, rnd.getrandbits(n)), with_trace=True)
        assert check_uniqueness(trace).input_repeats == 0


def test_hand_built_collision():
    a, b = Bitvec(4, 1), Bitvec(4, 2)
    trace = EvalTrace.from_steps([TraceStep(a, Bitvec(4, 3), b), TraceStep(b, Bitvec(4, 4), b)])
    stats = check_uniqueness(trace)
    assert stats.output_collisions == 1
    assert stats.input_repeats == 0
    assert stats.estimated_c == 16.0


def test_estimated_c_is_finite():
    fd = generate_fd(0, 8, 4)
    _, trace = evaluate(fd, Bitvec(8, 0x5A), with_trace=True)
    c = check_uniqueness(trace).estimated_c
    assert c >= 0 and np.isfinite(c)


def test_avalanche_at_16(fd16):
    ev = Evaluator(fd16)
    rnd = random.Random(2)
    total = 0
    trials = 1000
    for _ in range(trials):
        p = Bitvec(16, rnd.getrandbits(16))
        total += ev.tag(p).value.hamming(ev.tag(p.flip(rnd.randrange(16))).value)
    assert total / trials >= 4


# -- derive_input -----------------------------------------------------------

def test_derive_input_deterministic():
    assert derive_input(b"abc", 64) == derive_input(b"abc", 64)


def test_derive_input_empty_message():
    assert hashlib.sha256(b"").digest()[0] == 0xE3
    assert derive_input(b"", 8) == Bitvec(8, 0xE3)


def test_derive_input_counter_mode():
    expected = bytes.fromhex(
        "ca978112ca1bbdcafac231b39a23dc4da786eff8147c4e72b9807785afee48bb"
        "e12dbc28182b5f0f51fef84b21b23b8de5c5d9d6567799bc9101009e173e677f"
    )
    assert derive_input(b"a", 512).to_bytes() == expected


def test_derive_input_masks_partial_byte():
    assert derive_input(b"", 4) == Bitvec(4, 0xE3 & 0xF)


# -- Q ----------------------------------------------------------------------

@pytest.mark.parametrize("n", [2, 4, 5, 8, 16, 64])
def test_q_entries_distinct(n):
    q = generate_q_set(1, n)
    assert len({row.tobytes() for row in q}) == n * n


def test_q_at_n3_is_as_spread_as_possible():
    assert max_q_multiplicity(3) == 2
    q = generate_q_set(0, 3)
    counts = np.bincount(q[:, 0], minlength=8)
    assert counts.sum() == 9 and counts.max() == 2 and counts.min() == 1


def test_fd_equality_ignores_seed(fd4):
    twin = FunctionDescription(fd4.h, fd4.q_values)
    assert twin == fd4
