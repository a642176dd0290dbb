import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mmqss.channel import (
    AttackKind,
    AttackStrategy,
    ChannelSegment,
    PhotonSignal,
    PnsResult,
    SignalBlock,
    attacked_positions,
    eavesdrop_entangling,
    eavesdrop_intercept_resend,
    filter_in_band,
    pns_check,
    pns_detect,
    probe_outcome_probabilities,
    transmit,
)
from mmqss.parties import alice, bob
from mmqss.qubit import ALL_LABELS, Basis, QubitState, StateLabel, equal_up_to_phase, measure, prepare

from oracles import three_sigma

ZERO = QubitState(1, 0)
PLUS = prepare(StateLabel(0, 1))


def segment(kind, coverage=1.0):
    return ChannelSegment(alice(2), bob(1), AttackStrategy(kind, coverage))


def random_block(rng, n):
    values = rng.integers(0, 2, n, dtype=np.int8)
    bases = rng.integers(0, 2, n, dtype=np.int8)
    return SignalBlock.from_labels(values, bases), values, bases


def test_coverage_validated():
    with pytest.raises(ValueError):
        AttackStrategy(AttackKind.INTERCEPT_RESEND_Z, 1.5)


def test_no_attack_is_identity_and_consumes_no_randomness(rng):
    block, _, _ = random_block(rng, 64)
    before = rng.bit_generator.state
    out = transmit(block, segment(AttackKind.NONE), rng)
    assert out == block and out is not block
    assert rng.bit_generator.state == before


def test_block_sequence_view_roundtrip(rng):
    block, _, _ = random_block(rng, 8)
    rebuilt = SignalBlock.from_signals(list(block))
    assert rebuilt == block
    assert all(sig.photon_count == 1 and sig.in_band == (True,) for sig in block)


def test_attacked_positions_exact_fraction(rng):
    pos = attacked_positions(200, 0.3, rng)
    assert len(pos) == 60 and len(set(pos.tolist())) == 60
    assert attacked_positions(10, 0.0, rng).size == 0
    np.testing.assert_array_equal(attacked_positions(10, 1.0, rng), np.arange(10))


def test_intercept_resend_random_output_distribution():
    rng = np.random.default_rng(21)
    n = 10_000
    block = SignalBlock.from_labels(np.zeros(n, np.int8), np.zeros(n, np.int8))
    out = transmit(block, segment(AttackKind.INTERCEPT_RESEND_RANDOM), rng)
    counts = {lab: 0 for lab in ALL_LABELS}
    for sig in out:
        hits = [lab for lab in ALL_LABELS if equal_up_to_phase(sig.qubit, prepare(lab))]
        assert len(hits) == 1
        counts[hits[0]] += 1
    # Z guess resends |0>; X guess resends |+> or |-> with 1/2 each
    expected = {StateLabel(0, 0): 0.5, StateLabel(1, 0): 0.0, StateLabel(0, 1): 0.25, StateLabel(1, 1): 0.25}
    for lab, p in expected.items():
        assert abs(counts[lab] / n - p) <= three_sigma(p, n)


def test_invisible_rider_tags_metadata(rng):
    block, _, _ = random_block(rng, 32)
    out = transmit(block, segment(AttackKind.INVISIBLE_PHOTON_RIDER), rng)
    np.testing.assert_array_equal(out.photon_count, block.photon_count + 1)
    assert all(sig.in_band == (True, False) for sig in out)
    np.testing.assert_array_equal(out.amps, block.amps)


def test_trojan_adds_in_band_photon(rng):
    block, _, _ = random_block(rng, 32)
    out = transmit(block, segment(AttackKind.MULTI_PHOTON_TROJAN), rng)
    np.testing.assert_array_equal(out.in_band, 2)
    assert filter_in_band(out) == out


def test_filter_semantics():
    honest = PhotonSignal.honest(ZERO, 0)
    rider = PhotonSignal(honest.joint, (True, False), 1)
    ghost = PhotonSignal(honest.joint, (False,), 2)
    out = filter_in_band([honest, rider, ghost])
    assert out[0].in_band == (True,)
    assert out[1].in_band == (True,) and out[1].photon_count == 1
    assert out.lost.tolist() == [False, False, True] and out[2].lost


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=50))
def test_filter_soundness(counts):
    block = SignalBlock(
        np.tile(np.array([[1, 0], [0, 0]], dtype=complex), (len(counts), 1, 1)),
        [c[0] for c in counts],
        [c[1] for c in counts],
        np.arange(len(counts)),
    )
    out = filter_in_band(block)
    assert all(False not in sig.in_band for sig in out)
    np.testing.assert_array_equal(out.in_band, block.in_band)


def test_pns_examples(rng):
    sig = PhotonSignal.honest(ZERO, 0)
    assert pns_check(sig, rng) is PnsResult.OK
    two = PhotonSignal(sig.joint, (True, True), 0)
    three = PhotonSignal(sig.joint, (True, True, True), 0)
    assert pns_check(two, rng) is PnsResult.MULTI_PHOTON_DETECTED
    assert pns_check(three, rng) is PnsResult.MULTI_PHOTON_DETECTED
    # literal "more than two" reading
    assert pns_check(two, rng, mode="gt2") is PnsResult.OK
    assert pns_check(three, rng, mode="gt2") is PnsResult.MULTI_PHOTON_DETECTED


@pytest.mark.parametrize("photons", [2, 3, 4])
def test_probabilistic_splitter_matches_enumeration(photons):
    # oracle: enumerate every routing of the photons to two click detectors
    routings = list(itertools.product((0, 1), repeat=photons))
    p_both = sum(1 for r in routings if len(set(r)) == 2) / len(routings)
    rng = np.random.default_rng(photons)
    trials = 20_000
    freq = pns_detect(np.full(trials, photons), rng, "ge2", idealized=False).mean()
    assert abs(freq - p_both) <= three_sigma(p_both, trials)
    assert not pns_detect(np.full(100, photons), rng, "gt2", idealized=False).any()


@given(st.sampled_from(["ge2", "gt2"]), st.booleans(), st.integers(0, 2**32 - 1))
def test_pns_soundness_single_photon(mode, idealized, seed):
    rng = np.random.default_rng(seed)
    assert not pns_detect(np.ones(64, dtype=int), rng, mode, idealized).any()


def test_intercept_resend_examples(rng):
    resent, rec = eavesdrop_intercept_resend(ZERO, Basis.Z, rng)
    assert equal_up_to_phase(resent, ZERO) and (rec.bit, rec.basis) == (0, Basis.Z)

    trials = 10_000
    ones = sum(eavesdrop_intercept_resend(PLUS, Basis.Z, rng)[1].bit for _ in range(trials))
    assert abs(ones / trials - 0.5) <= three_sigma(0.5, trials)


def test_intercept_resend_random_induces_quarter_error():
    rng = np.random.default_rng(8)
    trials = 10_000
    errors = sum(measure(eavesdrop_intercept_resend(ZERO, "random", rng)[0], Basis.Z, rng) for _ in range(trials))
    assert abs(errors / trials - 0.25) <= three_sigma(0.25, trials)


def test_block_intercept_resend_disturbance():
    rng = np.random.default_rng(9)
    block, values, bases = random_block(rng, 10_000)
    out = transmit(block, segment(AttackKind.INTERCEPT_RESEND_RANDOM), rng)
    rate = np.mean(out.measure(bases, rng) != values)
    assert abs(rate - 0.25) <= three_sigma(0.25, 10_000)


@pytest.mark.parametrize("kind", [AttackKind.INTERCEPT_RESEND_Z, AttackKind.INTERCEPT_RESEND_X])
def test_fixed_basis_intercept_only_disturbs_other_basis(kind):
    rng = np.random.default_rng(10)
    block, values, bases = random_block(rng, 4000)
    out = transmit(block, segment(kind), rng)
    errs = out.measure(bases, rng) != values
    eve_basis = 0 if kind is AttackKind.INTERCEPT_RESEND_Z else 1
    assert not errs[bases == eve_basis].any()
    other = errs[bases != eve_basis]
    assert abs(other.mean() - 0.5) <= three_sigma(0.5, other.size)


def test_measure_all_substitution_error_half():
    rng = np.random.default_rng(12)
    block, values, bases = random_block(rng, 10_000)
    out = transmit(block, segment(AttackKind.MEASURE_ALL), rng)
    rate = np.mean(out.measure(bases, rng) != values)
    assert abs(rate - 0.5) <= three_sigma(0.5, 10_000)


def test_partial_coverage_leaves_rest_untouched(rng):
    block, values, bases = random_block(rng, 400)
    out = transmit(block, segment(AttackKind.INTERCEPT_RESEND_RANDOM, 0.25), rng)
    changed = ~np.all(np.isclose(out.amps, block.amps), axis=(1, 2))
    assert changed.sum() <= 100


def test_entangling_examples():
    sig = eavesdrop_entangling(ZERO)
    assert sig.outcome_probabilities(Basis.Z) == (1.0, 0.0)
    sig = eavesdrop_entangling(PLUS)
    assert sig.outcome_probabilities(Basis.X)[0] == pytest.approx(0.5, abs=1e-12)
    # the probe is perfectly correlated with the signal in Z
    assert probe_outcome_probabilities(eavesdrop_entangling(prepare(StateLabel(1, 0))), Basis.Z) == (0.0, 1.0)
    with pytest.raises(ValueError):
        _ = sig.qubit


def test_entangling_analytic_error_per_label():
    # Z states pass untouched, X states become maximally mixed
    for lab in ALL_LABELS:
        p_err = eavesdrop_entangling(prepare(lab)).outcome_probabilities(lab.basis)[1 - lab.value_bit]
        assert p_err == pytest.approx(0.0 if lab.basis_bit == 0 else 0.5, abs=1e-12)


def test_entangling_block_error_rate():
    rng = np.random.default_rng(13)
    n = 256
    values = rng.integers(0, 2, n, dtype=np.int8)
    bases = np.repeat(np.array([0, 1], dtype=np.int8), n // 2)
    block = SignalBlock.from_labels(values, bases)
    out = transmit(block, segment(AttackKind.ENTANGLING_PROBE), rng)
    assert out.entangled.all()
    rate = np.mean(out.measure(bases, rng) != values)
    assert abs(rate - 0.25) <= three_sigma(0.25, n)


def test_block_take_and_drop(rng):
    block, _, _ = random_block(rng, 10)
    kept = block.drop([1, 4])
    assert kept.origin.tolist() == [0, 2, 3, 5, 6, 7, 8, 9]
    assert block.take([4]).origin.tolist() == [4]
