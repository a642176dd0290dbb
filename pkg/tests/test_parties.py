import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mmqss.parties import (
    LabelBlock,
    PartyId,
    PartySecret,
    alice,
    announce,
    bits_to_str,
    bob,
    compose_labels,
    encode_block,
    encode_qubit,
    generate_secret,
    initial_prepare,
    initial_states,
    label_shift,
    pipeline,
    shift_labels,
    str_to_bits,
    unshift_labels,
)
from mmqss.qubit import ALL_LABELS, QubitState, StateLabel, equal_up_to_phase, prepare

from oracles import HADAMARD, KETS, SIGMA, identify, oracle_chain, oracle_encode, three_sigma

S = 1 / np.sqrt(2)
ZERO, ONE, PLUS, MINUS = (prepare(StateLabel(a, b)) for b in (0, 1) for a in (0, 1))


def test_party_id_roundtrip():
    assert str(alice(3)) == "A3"
    assert PartyId.parse("B12") == bob(12)
    with pytest.raises(ValueError):
        PartyId.parse("C1")
    with pytest.raises(ValueError):
        alice(0)


def test_pipeline_order():
    assert [str(p) for p in pipeline(3, 2)] == ["A1", "A2", "A3", "B1", "B2"]


def test_generate_secret_shapes(rng):
    s1 = generate_secret(alice(1), 4, rng)
    assert len(s1.op_string) == 4 and set(s1.op_string) <= {0, 1}
    assert len(s1.had_string) == 4 and set(s1.had_string) <= {0, 1}
    s2 = generate_secret(alice(2), 4, rng)
    assert len(s2.op_string) == 4 and set(s2.op_string) <= {0, 1, 2, 3}


def test_generate_secret_rejects_empty_block(rng):
    with pytest.raises(ValueError):
        generate_secret(alice(2), 0, rng)


def test_generate_secret_uniform():
    secret = generate_secret(bob(1), 100_000, np.random.default_rng(11))
    n = len(secret)
    for symbol in range(4):
        freq = np.mean(secret.op_string == symbol)
        assert abs(freq - 0.25) <= three_sigma(0.25, n)
    assert abs(np.mean(secret.had_string) - 0.5) <= three_sigma(0.5, n)


def test_generate_secret_deterministic():
    a = generate_secret(alice(2), 64, np.random.default_rng(5))
    b = generate_secret(alice(2), 64, np.random.default_rng(5))
    assert a == b


def test_secret_alphabet_validation():
    with pytest.raises(ValueError):
        PartySecret(alice(1), [2], [0])
    with pytest.raises(ValueError):
        PartySecret(alice(2), [4], [0])
    with pytest.raises(ValueError):
        PartySecret(bob(1), [0, 1], [0])
    assert PartySecret(bob(1), [3], [1]).op_string.flags.writeable is False


@pytest.mark.parametrize(
    "ops, had, expected",
    [
        ([0], [0], [StateLabel(0, 0)]),
        ([1], [1], [StateLabel(1, 1)]),
        ([0, 1], [1, 0], [StateLabel(0, 1), StateLabel(1, 0)]),
    ],
)
def test_initial_prepare(ops, had, expected):
    assert initial_prepare(PartySecret(alice(1), ops, had)) == expected


def test_initial_prepare_rejects_other_parties():
    with pytest.raises(ValueError):
        initial_prepare(PartySecret(alice(2), [0], [0]))


def test_initial_states_are_alphabet_states():
    states = initial_states(PartySecret(alice(1), [0, 1, 0, 1], [0, 0, 1, 1]))
    for state, ket in zip(states, [KETS[(0, 0)], KETS[(1, 0)], KETS[(0, 1)], KETS[(1, 1)]]):
        np.testing.assert_allclose(state.vector, ket, atol=1e-15)


def test_encode_qubit_examples():
    assert equal_up_to_phase(encode_qubit(ZERO, 3, 0), ONE)
    assert equal_up_to_phase(encode_qubit(ZERO, 0, 1), PLUS)
    assert equal_up_to_phase(encode_qubit(PLUS, 2, 1), ONE)


@pytest.mark.parametrize("label", ALL_LABELS)
@pytest.mark.parametrize("op", range(4))
@pytest.mark.parametrize("had", range(2))
def test_encode_qubit_matches_oracle_product(label, op, had):
    ket = KETS[(label.value_bit, label.basis_bit)]
    ref = SIGMA[op] @ ket
    if had:
        ref = HADAMARD @ ref
    np.testing.assert_allclose(encode_qubit(prepare(label), op, had).vector, ref, atol=1e-14)


def test_encode_block_examples():
    assert encode_block([ZERO], PartySecret(bob(1), [0], [0]))[0] == ZERO
    out = encode_block([ZERO, ONE], PartySecret(bob(1), [3, 3], [0, 0]))
    assert equal_up_to_phase(out[0], ONE) and equal_up_to_phase(out[1], ZERO)
    (minus,) = encode_block([ZERO], PartySecret(alice(2), [1], [1]))
    assert equal_up_to_phase(minus, MINUS)
    # exact value: H (i sigma_y |0>) = H(-|1>) = -|->
    np.testing.assert_allclose(minus.vector, [-S, S], atol=1e-15)


def test_encode_block_length_mismatch():
    with pytest.raises(ValueError):
        encode_block([ZERO, ONE], PartySecret(bob(1), [0], [0]))


@pytest.mark.parametrize(
    "label, op, had, expected",
    [
        (StateLabel(0, 0), 0, 0, StateLabel(0, 0)),
        (StateLabel(0, 0), 1, 0, StateLabel(1, 0)),
        (StateLabel(1, 1), 2, 1, StateLabel(0, 0)),
    ],
)
def test_label_shift_examples(label, op, had, expected):
    assert label_shift(label, op, had) == expected


@pytest.mark.parametrize("label", ALL_LABELS)
@pytest.mark.parametrize("op", range(4))
@pytest.mark.parametrize("had", range(2))
def test_label_shift_matches_oracle(label, op, had):
    got = label_shift(label, op, had)
    assert (got.value_bit, got.basis_bit) == oracle_encode((label.value_bit, label.basis_bit), op, had)
    block = shift_labels(LabelBlock([label.value_bit], [label.basis_bit]), [op], [had])
    assert block.labels() == [got]
    assert unshift_labels(block, [op], [had]).labels() == [label]


def test_pipeline_equivalence_randomized():
    # >= 10^4 qubit instances: matrix encoding vs label tracking
    rng = np.random.default_rng(99)
    n, parties = 2500, 4
    a1 = generate_secret(alice(1), n, rng)
    secrets = [a1] + [generate_secret(alice(i), n, rng) for i in range(2, parties + 1)]
    states = initial_states(a1)
    for s in secrets[1:]:
        states = encode_block(states, s)
    labels = compose_labels(secrets).labels()
    assert all(equal_up_to_phase(st_, prepare(lab)) for st_, lab in zip(states, labels))
    assert n * parties >= 10_000


def test_array_and_list_paths_agree(rng):
    a1 = generate_secret(alice(1), 32, rng)
    s2 = generate_secret(alice(2), 32, rng)
    as_list = encode_block(initial_states(a1), s2)
    amps = np.array([s.vector for s in initial_states(a1)]).reshape(-1, 2, 1)
    as_array = encode_block(amps, s2)
    for state, row in zip(as_list, as_array):
        np.testing.assert_allclose(state.vector, row[:, 0])


@pytest.mark.parametrize("m, n", [(2, 2), (2, 3), (3, 2)])
def test_basis_bit_is_xor_of_hadamard_bits_exhaustive(m, n):
    k = m + (n - 1)
    for had_bits in itertools.product(range(2), repeat=k):
        for symbols in itertools.product(range(2), *([range(4)] * (k - 1))):
            steps = list(zip(symbols[1:], had_bits[1:]))
            value, basis = oracle_chain(symbols[0], had_bits[0], steps)
            assert basis == np.bitwise_xor.reduce(had_bits)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_basis_bit_xor_randomized(m, n, seed):
    rng = np.random.default_rng(seed)
    parties = pipeline(m, n)[:-1]
    secrets = [generate_secret(p, 16, rng) for p in parties]
    labels = compose_labels(secrets)
    xor = np.bitwise_xor.reduce([s.had_string for s in secrets], axis=0)
    np.testing.assert_array_equal(labels.bases, xor)


def test_encoded_blocks_deterministic():
    def run(seed):
        rng = np.random.default_rng(seed)
        a1 = generate_secret(alice(1), 16, rng)
        s2 = generate_secret(alice(2), 16, rng)
        return [s.vector for s in encode_block(initial_states(a1), s2)]

    np.testing.assert_array_equal(run(4), run(4))


def test_announce_reveals_exact_symbols(rng):
    secret = generate_secret(bob(1), 20, rng)
    ann = announce(secret, [3, 7, 19])
    np.testing.assert_array_equal(ann.revealed_ops, secret.op_string[[3, 7, 19]])
    np.testing.assert_array_equal(ann.revealed_had, secret.had_string[[3, 7, 19]])
    with pytest.raises(IndexError):
        announce(secret, [20])


def test_bit_string_codec_roundtrip(rng):
    bits = rng.integers(0, 4, 100).astype(np.int8)
    np.testing.assert_array_equal(str_to_bits(bits_to_str(bits)), bits)


def test_identify_rejects_non_alphabet_state():
    assert identify(np.array([np.cos(0.3), np.sin(0.3)])) is None
    assert QubitState(1, 0) == ZERO
