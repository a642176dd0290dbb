"""Photon signals on the quantum channel, receive-side defenses and attackers.

A block of signals is held as a ``SignalBlock``: arrays over positions with
the joint amplitude of (signal qubit, probe qubit), the number of in-band and
out-of-band photons riding along, and the original block index of each
position. Extra photons are tracked as counts only; their optical state
never influences the honest parties' measurements.

Attackers:

* intercept-resend in Z, X, or a random basis per photon;
* ``MEASURE_ALL``: the photon is captured and measured in a random basis and an
  independent, uniformly random BB84 photon is forwarded in its place;
* ``ENTANGLING_PROBE``: a CNOT from the signal onto a |0> probe that the
  attacker keeps for later;
* ``INVISIBLE_PHOTON_RIDER``: an extra out-of-band photon per signal;
* ``MULTI_PHOTON_TROJAN``: an extra in-band photon per signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .parties import PartyId, bits_to_str
from .qubit import Basis, QubitState, measure_array, prepare_array, prob_one

PNS_THRESHOLDS = {"ge2": 2, "gt2": 3}


class AttackKind(Enum):
    NONE = "none"
    INTERCEPT_RESEND_Z = "intercept_resend_z"
    INTERCEPT_RESEND_X = "intercept_resend_x"
    INTERCEPT_RESEND_RANDOM = "intercept_resend_random"
    MEASURE_ALL = "measure_all"
    ENTANGLING_PROBE = "entangling_probe"
    INVISIBLE_PHOTON_RIDER = "invisible_photon_rider"
    MULTI_PHOTON_TROJAN = "multi_photon_trojan"


# riders and Trojans only add photons; these kinds change the signal itself
STATE_DISTURBING = frozenset(
    {
        AttackKind.INTERCEPT_RESEND_Z,
        AttackKind.INTERCEPT_RESEND_X,
        AttackKind.INTERCEPT_RESEND_RANDOM,
        AttackKind.MEASURE_ALL,
        AttackKind.ENTANGLING_PROBE,
    }
)


@dataclass(frozen=True)
class AttackStrategy:
    kind: AttackKind = AttackKind.NONE
    coverage: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AttackKind(self.kind))
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"attack coverage must lie in [0, 1], got {self.coverage}")

    @property
    def disturbs_qubit(self) -> bool:
        """True if some attacked signal can reach the receiver in a different state."""
        return self.coverage > 0 and self.kind in STATE_DISTURBING

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "coverage": self.coverage}

    @classmethod
    def from_dict(cls, data: dict) -> AttackStrategy:
        return cls(AttackKind(data["kind"]), float(data.get("coverage", 1.0)))


NO_ATTACK = AttackStrategy()


@dataclass(frozen=True)
class ChannelSegment:
    sender: PartyId
    receiver: PartyId
    attack: AttackStrategy = NO_ATTACK

    @property
    def name(self) -> str:
        return f"{self.sender}->{self.receiver}"


def _with_probe(amps: np.ndarray) -> np.ndarray:
    if amps.shape[2] == 2:
        return amps
    out = np.zeros((amps.shape[0], 2, 2), dtype=complex)
    out[:, :, 0] = amps[:, :, 0]
    return out


@dataclass(frozen=True, eq=False)
class PhotonSignal:
    """One position of a block.

    ``joint`` is the 2x2 amplitude table of (signal, probe); for honest
    signals the probe column 1 is zero and ``qubit`` gives the plain state.
    ``in_band`` has one flag per photon, the protocol photon first.
    """

    joint: np.ndarray
    in_band: tuple[bool, ...]
    origin_index: int
    entangled: bool = False

    @classmethod
    def honest(cls, state: QubitState, origin_index: int) -> PhotonSignal:
        joint = np.zeros((2, 2), dtype=complex)
        joint[:, 0] = state.vector
        return cls(joint, (True,), origin_index)

    @property
    def photon_count(self) -> int:
        return len(self.in_band)

    @property
    def lost(self) -> bool:
        return not any(self.in_band)

    @property
    def qubit(self) -> QubitState:
        if self.entangled or np.any(np.abs(self.joint[:, 1]) > 1e-12):
            raise ValueError("signal is entangled with a probe and has no pure state of its own")
        return QubitState.from_vector(self.joint[:, 0])

    def outcome_probabilities(self, basis: Basis) -> tuple[float, float]:
        p1 = float(prob_one(self.joint.reshape(1, 2, 2), np.array([int(basis)]))[0])
        return 1.0 - p1, p1


class SignalBlock:
    """A sequence of photon signals stored column-wise."""

    def __init__(self, amps, in_band, out_of_band, origin, entangled=None):
        self.amps = _with_probe(np.asarray(amps, dtype=complex))
        self.in_band = np.asarray(in_band, dtype=np.int64)
        self.out_of_band = np.asarray(out_of_band, dtype=np.int64)
        self.origin = np.asarray(origin, dtype=np.int64)
        n = self.amps.shape[0]
        self.entangled = np.zeros(n, dtype=bool) if entangled is None else np.asarray(entangled, dtype=bool)
        for arr in (self.in_band, self.out_of_band, self.origin, self.entangled):
            if arr.shape != (n,):
                raise ValueError("signal block columns must all have one entry per position")

    @classmethod
    def from_amplitudes(cls, amps, origin=None) -> SignalBlock:
        n = amps.shape[0]
        origin = np.arange(n) if origin is None else origin
        return cls(amps, np.ones(n, dtype=np.int64), np.zeros(n, dtype=np.int64), origin)

    @classmethod
    def from_labels(cls, values, bases, origin=None) -> SignalBlock:
        return cls.from_amplitudes(prepare_array(values, bases), origin)

    @classmethod
    def from_states(cls, states: Sequence[QubitState]) -> SignalBlock:
        amps = np.array([s.vector for s in states], dtype=complex).reshape(-1, 2, 1)
        return cls.from_amplitudes(amps)

    @classmethod
    def from_signals(cls, signals: Sequence[PhotonSignal]) -> SignalBlock:
        return cls(
            np.array([s.joint for s in signals], dtype=complex).reshape(-1, 2, 2),
            [sum(s.in_band) for s in signals],
            [len(s.in_band) - sum(s.in_band) for s in signals],
            [s.origin_index for s in signals],
            [s.entangled for s in signals],
        )

    def __len__(self):
        return self.amps.shape[0]

    def __getitem__(self, k: int) -> PhotonSignal:
        flags = (True,) * int(self.in_band[k]) + (False,) * int(self.out_of_band[k])
        return PhotonSignal(self.amps[k].copy(), flags, int(self.origin[k]), bool(self.entangled[k]))

    def __iter__(self):
        return (self[k] for k in range(len(self)))

    def __eq__(self, other):
        if not isinstance(other, SignalBlock):
            return NotImplemented
        return all(
            np.array_equal(a, b)
            for a, b in (
                (self.amps, other.amps),
                (self.in_band, other.in_band),
                (self.out_of_band, other.out_of_band),
                (self.origin, other.origin),
                (self.entangled, other.entangled),
            )
        )

    @property
    def photon_count(self) -> np.ndarray:
        return self.in_band + self.out_of_band

    @property
    def lost(self) -> np.ndarray:
        return self.in_band == 0

    def copy(self, **changes) -> SignalBlock:
        cols = {
            "amps": self.amps,
            "in_band": self.in_band,
            "out_of_band": self.out_of_band,
            "origin": self.origin,
            "entangled": self.entangled,
        }
        cols.update(changes)
        return SignalBlock(**{k: np.array(v, copy=True) for k, v in cols.items()})

    def take(self, idx) -> SignalBlock:
        idx = np.asarray(idx, dtype=np.int64)
        return SignalBlock(
            self.amps[idx], self.in_band[idx], self.out_of_band[idx], self.origin[idx], self.entangled[idx]
        )

    def drop(self, idx) -> SignalBlock:
        keep = np.ones(len(self), dtype=bool)
        keep[np.asarray(idx, dtype=np.int64)] = False
        return self.take(np.flatnonzero(keep))

    def states(self) -> list[QubitState]:
        return [sig.qubit for sig in self]

    def measure(self, bases, rng: np.random.Generator) -> np.ndarray:
        return measure_array(self.amps, bases, rng)


def as_block(signals) -> SignalBlock:
    if isinstance(signals, SignalBlock):
        return signals
    return SignalBlock.from_signals(list(signals))


# --- attack kernels (array form) -------------------------------------------


def _intercept_resend(amps, bases, rng):
    outcomes = measure_array(amps, bases, rng)
    return _with_probe(prepare_array(outcomes, bases)), outcomes


def _entangle(amps):
    out = amps.copy()
    out[:, 1, :] = amps[:, 1, ::-1]
    return out


def attacked_positions(n: int, coverage: float, rng: np.random.Generator) -> np.ndarray:
    """Exactly round(coverage * n) distinct positions, sorted."""
    k = int(round(coverage * n))
    if k >= n:
        return np.arange(n)
    if k == 0:
        return np.arange(0)
    return np.sort(rng.choice(n, size=k, replace=False))


def transmit(block, segment: ChannelSegment, rng: np.random.Generator, transcript=None) -> SignalBlock:
    """Carry a block over one channel segment, applying its attack.

    With no attack the returned block equals the input and no randomness is
    consumed.
    """
    block = as_block(block)
    attack = segment.attack
    if attack.kind is AttackKind.NONE or len(block) == 0:
        if transcript is not None:
            transcript.record("transmit", party=segment.sender, to=str(segment.receiver), attack="none")
        return block.copy()

    hit = attacked_positions(len(block), attack.coverage, rng)
    amps = block.amps.copy()
    in_band = block.in_band.copy()
    out_of_band = block.out_of_band.copy()
    entangled = block.entangled.copy()
    record = {}
    kind = attack.kind

    if kind in (AttackKind.INTERCEPT_RESEND_Z, AttackKind.INTERCEPT_RESEND_X, AttackKind.INTERCEPT_RESEND_RANDOM):
        if kind is AttackKind.INTERCEPT_RESEND_Z:
            bases = np.zeros(hit.size, dtype=np.int8)
        elif kind is AttackKind.INTERCEPT_RESEND_X:
            bases = np.ones(hit.size, dtype=np.int8)
        else:
            bases = rng.integers(0, 2, size=hit.size, dtype=np.int8)
        amps[hit], outcomes = _intercept_resend(amps[hit], bases, rng)
        entangled[hit] = False
        record = {"eve_bases": bits_to_str(bases), "eve_outcomes": bits_to_str(outcomes)}
    elif kind is AttackKind.MEASURE_ALL:
        bases = rng.integers(0, 2, size=hit.size, dtype=np.int8)
        outcomes = measure_array(amps[hit], bases, rng)
        fake_values = rng.integers(0, 2, size=hit.size, dtype=np.int8)
        fake_bases = rng.integers(0, 2, size=hit.size, dtype=np.int8)
        amps[hit] = _with_probe(prepare_array(fake_values, fake_bases))
        entangled[hit] = False
        record = {
            "eve_bases": bits_to_str(bases),
            "eve_outcomes": bits_to_str(outcomes),
            "fake_values": bits_to_str(fake_values),
            "fake_bases": bits_to_str(fake_bases),
        }
    elif kind is AttackKind.ENTANGLING_PROBE:
        amps[hit] = _entangle(amps[hit])
        entangled[hit] = True
    elif kind is AttackKind.INVISIBLE_PHOTON_RIDER:
        out_of_band[hit] += 1
    elif kind is AttackKind.MULTI_PHOTON_TROJAN:
        in_band[hit] += 1
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unhandled attack kind {kind}")

    if transcript is not None:
        transcript.record(
            "transmit",
            party=segment.sender,
            positions=block.origin[hit],
            to=str(segment.receiver),
            attack=kind.value,
            coverage=attack.coverage,
            **record,
        )
    return SignalBlock(amps, in_band, out_of_band, block.origin.copy(), entangled)


def filter_in_band(block) -> SignalBlock:
    """Strip every out-of-band photon. Signals left with no photon have
    ``in_band == 0`` and show up in ``SignalBlock.lost``."""
    block = as_block(block)
    return block.copy(out_of_band=np.zeros(len(block), dtype=np.int64))


class PnsResult(Enum):
    OK = "ok"
    MULTI_PHOTON_DETECTED = "multi_photon_detected"


def pns_detect(photon_counts, rng: np.random.Generator, mode: str = "ge2", idealized: bool = True) -> np.ndarray:
    """Photon-number check over many samples; True where multiple photons show.

    Idealized detectors observe the photon count itself. Otherwise each photon
    is routed to one of two click detectors with probability 1/2 and the
    observed count is the number of detectors that fire, so a two-photon
    signal is caught half the time and ``mode="gt2"`` can never trigger.
    """
    if mode not in PNS_THRESHOLDS:
        raise ValueError(f"pns mode must be one of {sorted(PNS_THRESHOLDS)}, got {mode!r}")
    counts = np.asarray(photon_counts, dtype=np.int64)
    if idealized or counts.size == 0:
        observed = counts
    else:
        width = max(int(counts.max()), 1)
        routes = rng.integers(0, 2, size=(counts.size, width))
        present = np.arange(width)[None, :] < counts[:, None]
        observed = np.any(present & (routes == 0), axis=1).astype(np.int64) + np.any(
            present & (routes == 1), axis=1
        ).astype(np.int64)
    return observed >= PNS_THRESHOLDS[mode]


def pns_check(sample: PhotonSignal, rng: np.random.Generator, mode: str = "ge2", idealized: bool = True) -> PnsResult:
    hit = pns_detect([sample.photon_count], rng, mode, idealized)[0]
    return PnsResult.MULTI_PHOTON_DETECTED if hit else PnsResult.OK


@dataclass(frozen=True)
class EveRecord:
    bit: int
    basis: Basis


def eavesdrop_intercept_resend(state: QubitState, basis_choice, rng: np.random.Generator):
    """Measure ``state`` in Z, X or a random basis and resend the eigenstate.

    ``basis_choice`` is a ``Basis`` or the string ``"random"``.
    Returns ``(resent_state, EveRecord)``.
    """
    if isinstance(basis_choice, str) and basis_choice == "random":
        basis = Basis(int(rng.integers(0, 2)))
    else:
        basis = Basis(basis_choice)
    resent, outcomes = _intercept_resend(state.vector.reshape(1, 2, 1), np.array([int(basis)]), rng)
    return QubitState.from_vector(resent[0, :, 0]), EveRecord(int(outcomes[0]), basis)


def eavesdrop_entangling(state: QubitState, origin_index: int = 0) -> PhotonSignal:
    """CNOT the signal onto a fresh |0> probe.

    The returned signal carries the joint two-qubit amplitude; the probe half
    stays with the attacker, unmeasured, inside ``joint``.
    """
    joint = _entangle(_with_probe(state.vector.reshape(1, 2, 1)))[0]
    return PhotonSignal(joint, (True,), origin_index, entangled=True)


def probe_outcome_probabilities(signal: PhotonSignal, basis: Basis) -> tuple[float, float]:
    """Attacker's outcome distribution when she finally measures her probe."""
    swapped = signal.joint.T.reshape(1, 2, 2)
    p1 = float(prob_one(swapped, np.array([int(basis)]))[0])
    return 1.0 - p1, p1
