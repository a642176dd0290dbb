"""Party identities, private strings, and the per-party encoding step.

Alice 1 holds two binary strings (values and bases of the states she
prepares). Every later Alice, and Bob 1 .. Bob n-1, holds a quaternary
operation string selecting sigma_0..sigma_3 and a binary string selecting
I or H. Bob n holds nothing; he only measures.

Within a party the sigma operation is applied first and the Hadamard choice
second. The same order is used by the symbolic ``label_shift`` so encoding and
reconstruction agree.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .qubit import (
    ENCODE_MATRICES,
    Gate,
    QubitState,
    StateLabel,
    apply_label,
    apply_matrices,
    flips_value,
    prepare,
)


class Group(Enum):
    ALICES = "A"
    BOBS = "B"


_PARTY_RE = re.compile(r"^\s*([AB])\s*(\d+)\s*$")


@dataclass(frozen=True)
class PartyId:
    group: Group
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValueError(f"party index must be >= 1, got {self.index}")

    def __str__(self):
        return f"{self.group.value}{self.index}"

    @classmethod
    def parse(cls, text: str) -> PartyId:
        match = _PARTY_RE.match(text)
        if not match:
            raise ValueError(f"cannot parse party id {text!r} (expected e.g. 'A1' or 'B2')")
        return cls(Group(match.group(1)), int(match.group(2)))

    @property
    def is_alice_one(self) -> bool:
        return self.group is Group.ALICES and self.index == 1


def alice(i: int) -> PartyId:
    return PartyId(Group.ALICES, i)


def bob(j: int) -> PartyId:
    return PartyId(Group.BOBS, j)


def pipeline(m: int, n: int) -> list[PartyId]:
    """Photon path order: Alice 1 .. Alice m, Bob 1 .. Bob n."""
    return [alice(i) for i in range(1, m + 1)] + [bob(j) for j in range(1, n + 1)]


def _frozen(arr) -> np.ndarray:
    out = np.array(arr, dtype=np.int8)
    out.setflags(write=False)
    return out


class LabelBlock:
    """Per-position (value_bit, basis_bit) pairs stored as two int8 arrays."""

    __slots__ = ("values", "bases")

    def __init__(self, values, bases):
        self.values = _frozen(values)
        self.bases = _frozen(bases)
        if self.values.shape != self.bases.shape or self.values.ndim != 1:
            raise ValueError("values and bases must be 1-d arrays of equal length")

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if not isinstance(other, LabelBlock):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.bases, other.bases)

    def __repr__(self):
        return f"LabelBlock(values={bits_to_str(self.values)!r}, bases={bits_to_str(self.bases)!r})"

    def take(self, positions) -> LabelBlock:
        return LabelBlock(self.values[positions], self.bases[positions])

    def labels(self) -> list[StateLabel]:
        return [StateLabel(int(a), int(b)) for a, b in zip(self.values, self.bases)]

    @classmethod
    def from_labels(cls, labels: Sequence[StateLabel]) -> LabelBlock:
        return cls([lab.value_bit for lab in labels], [lab.basis_bit for lab in labels])


@dataclass(frozen=True, eq=False)
class PartySecret:
    party: PartyId
    op_string: np.ndarray
    had_string: np.ndarray

    def __post_init__(self):
        ops = _frozen(self.op_string)
        had = _frozen(self.had_string)
        object.__setattr__(self, "op_string", ops)
        object.__setattr__(self, "had_string", had)
        if ops.ndim != 1 or ops.shape != had.shape:
            raise ValueError("op_string and had_string must be 1-d and the same length")
        if ops.size == 0:
            raise ValueError("secret strings must be non-empty")
        op_alphabet = 2 if self.party.is_alice_one else 4
        if ops.min() < 0 or ops.max() >= op_alphabet:
            raise ValueError(f"{self.party} op_string symbols must lie in [0, {op_alphabet})")
        if had.min() < 0 or had.max() > 1:
            raise ValueError(f"{self.party} had_string must be binary")

    def __eq__(self, other):
        if not isinstance(other, PartySecret):
            return NotImplemented
        return (
            self.party == other.party
            and np.array_equal(self.op_string, other.op_string)
            and np.array_equal(self.had_string, other.had_string)
        )

    def __len__(self):
        return self.op_string.shape[0]


@dataclass(frozen=True, eq=False)
class Announcement:
    """Symbols a party reveals publicly for a set of positions."""

    party: PartyId
    positions: np.ndarray
    revealed_ops: np.ndarray | None
    revealed_had: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Announcement):
            return NotImplemented
        ops_equal = (self.revealed_ops is None and other.revealed_ops is None) or (
            self.revealed_ops is not None
            and other.revealed_ops is not None
            and np.array_equal(self.revealed_ops, other.revealed_ops)
        )
        return (
            self.party == other.party
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.revealed_had, other.revealed_had)
            and ops_equal
        )


def announce(secret: PartySecret, positions, include_ops: bool = True) -> Announcement:
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size and (positions.min() < 0 or positions.max() >= len(secret)):
        raise IndexError("announced positions fall outside the block")
    ops = _frozen(secret.op_string[positions]) if include_ops else None
    return Announcement(secret.party, positions, ops, _frozen(secret.had_string[positions]))


def generate_secret(party: PartyId, block_size: int, rng: np.random.Generator) -> PartySecret:
    if block_size < 1:
        raise ValueError(f"block size must be >= 1, got {block_size}")
    op_alphabet = 2 if party.is_alice_one else 4
    ops = rng.integers(0, op_alphabet, size=block_size, dtype=np.int8)
    had = rng.integers(0, 2, size=block_size, dtype=np.int8)
    return PartySecret(party, ops, had)


def initial_labels(secret: PartySecret, positions=None) -> LabelBlock:
    if not secret.party.is_alice_one:
        raise ValueError(f"only Alice 1 prepares states, got a secret for {secret.party}")
    if positions is None:
        return LabelBlock(secret.op_string, secret.had_string)
    return LabelBlock(secret.op_string[positions], secret.had_string[positions])


def initial_prepare(secret: PartySecret) -> list[StateLabel]:
    """Alice 1's prepared block as labels; position k is (a_k, b_k)."""
    return initial_labels(secret).labels()


def initial_states(secret: PartySecret) -> list[QubitState]:
    return [prepare(label) for label in initial_prepare(secret)]


def encode_qubit(state: QubitState, op_symbol: int, had_bit: int) -> QubitState:
    return QubitState.from_vector(ENCODE_MATRICES[op_symbol, had_bit] @ state.vector)


def encode_block(states, secret: PartySecret, positions=None):
    """Apply the party's gates position-wise.

    ``states`` is either a sequence of ``QubitState`` (a list is returned) or
    an amplitude array of shape (N, 2, P) (an array is returned). ``positions``
    selects which of the secret's symbols go with each state; by default the
    block must be the full length of the secret.
    """
    if positions is None:
        ops, had = secret.op_string, secret.had_string
    else:
        ops, had = secret.op_string[positions], secret.had_string[positions]
    if isinstance(states, np.ndarray):
        if states.shape[0] != ops.shape[0]:
            raise ValueError(f"block has {states.shape[0]} states but {ops.shape[0]} symbols")
        return apply_matrices(states, ENCODE_MATRICES[ops, had])
    states = list(states)
    if len(states) != ops.shape[0]:
        raise ValueError(f"block has {len(states)} states but {ops.shape[0]} symbols")
    amps = np.array([s.vector for s in states], dtype=complex).reshape(-1, 2, 1)
    out = apply_matrices(amps, ENCODE_MATRICES[ops, had])
    return [QubitState.from_vector(v[:, 0]) for v in out]


def label_shift(label_in: StateLabel, op_symbol: int, had_bit: int) -> StateLabel:
    label = apply_label(label_in, Gate(op_symbol))
    return apply_label(label, Gate.HADAMARD if had_bit else Gate.IDENTITY)


def shift_labels(labels: LabelBlock, ops, had) -> LabelBlock:
    flip = flips_value(ops, labels.bases).astype(np.int8)
    return LabelBlock(labels.values ^ flip, labels.bases ^ np.asarray(had, dtype=np.int8))


def unshift_labels(labels: LabelBlock, ops, had) -> LabelBlock:
    """Inverse of ``shift_labels``: undo H first, then the sigma flip."""
    before = labels.bases ^ np.asarray(had, dtype=np.int8)
    flip = flips_value(ops, before).astype(np.int8)
    return LabelBlock(labels.values ^ flip, before)


def compose_labels(secrets: Sequence[PartySecret], positions=None) -> LabelBlock:
    """Labels after Alice 1's preparation followed by each later party's encoding.

    ``secrets`` must start with Alice 1 and follow pipeline order.
    """
    if not secrets:
        raise ValueError("need at least Alice 1's secret")
    labels = initial_labels(secrets[0], positions)
    for secret in secrets[1:]:
        if positions is None:
            labels = shift_labels(labels, secret.op_string, secret.had_string)
        else:
            labels = shift_labels(labels, secret.op_string[positions], secret.had_string[positions])
    return labels


def bits_to_str(bits) -> str:
    arr = np.asarray(bits, dtype=np.uint8)
    return (arr + 48).tobytes().decode("ascii")


def str_to_bits(text: str) -> np.ndarray:
    return (np.frombuffer(text.encode("ascii"), dtype=np.uint8) - 48).astype(np.int8)
