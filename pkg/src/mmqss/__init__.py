"""Simulator for multiparty-to-multiparty quantum secret sharing with single photons."""

from .channel import (
    AttackKind,
    AttackStrategy,
    ChannelSegment,
    PhotonSignal,
    PnsResult,
    SignalBlock,
    eavesdrop_entangling,
    eavesdrop_intercept_resend,
    filter_in_band,
    pns_check,
    transmit,
)
from .parties import (
    Announcement,
    LabelBlock,
    PartyId,
    PartySecret,
    alice,
    bob,
    encode_block,
    encode_qubit,
    generate_secret,
    initial_prepare,
    label_shift,
)
from .protocol import (
    ConfigError,
    ProtocolConfig,
    ProtocolOutcome,
    Verdict,
    VerdictKind,
    final_sample_check,
    hop_receive_check,
    reconcile_and_measure,
    reconstruct_alice_key,
    reconstruct_bob_key,
    replay_transcript,
    run_protocol,
)
from .qubit import Basis, Gate, QubitState, StateLabel, apply_gate, apply_label, measure, prepare
from .secrecy import secrecy_check
from .transcript import Transcript

__version__ = "0.1.0"
