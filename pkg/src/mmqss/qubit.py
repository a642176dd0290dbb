"""Single-qubit state vectors, the encoding gate set and Z/X measurement.

Two layers live here. The scalar layer (``QubitState``, ``apply_gate``,
``measure``) is the readable ground truth. The array layer works on stacks of
amplitudes with shape ``(N, 2, P)``: axis 1 is the signal qubit, axis 2 an
optional ancilla (an eavesdropper probe, ``P = 2``) that gates never touch.
The protocol engine runs on the array layer; tests pin it to the scalar one.

``StateLabel`` is the phase-free symbolic name of the four BB84 states and
``apply_label`` is its transition table under the gate set.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

NORM_TOL = 1e-12
# Probabilities this close to 0 or 1 are snapped so eigenstates measure
# deterministically despite rounding in the amplitudes.
SNAP_TOL = 1e-12

INV_SQRT2 = 1.0 / np.sqrt(2.0)


class Gate(IntEnum):
    SIGMA0 = 0
    SIGMA1 = 1
    SIGMA2 = 2
    SIGMA3 = 3
    HADAMARD = 4
    IDENTITY = 5


class Basis(IntEnum):
    Z = 0
    X = 1


GATE_MATRICES: dict[Gate, np.ndarray] = {
    Gate.SIGMA0: np.array([[1, 0], [0, 1]], dtype=complex),
    # i*sigma_y = -|1><0| + |0><1|
    Gate.SIGMA1: np.array([[0, 1], [-1, 0]], dtype=complex),
    Gate.SIGMA2: np.array([[1, 0], [0, -1]], dtype=complex),
    Gate.SIGMA3: np.array([[0, 1], [1, 0]], dtype=complex),
    Gate.HADAMARD: np.array([[1, 1], [1, -1]], dtype=complex) * INV_SQRT2,
    Gate.IDENTITY: np.eye(2, dtype=complex),
}
for _m in GATE_MATRICES.values():
    _m.setflags(write=False)

# ENCODE_MATRICES[op, had] = (H if had else I) @ sigma_op
ENCODE_MATRICES = np.empty((4, 2, 2, 2), dtype=complex)
for _op in range(4):
    _sigma = GATE_MATRICES[Gate(_op)]
    ENCODE_MATRICES[_op, 0] = _sigma
    ENCODE_MATRICES[_op, 1] = GATE_MATRICES[Gate.HADAMARD] @ _sigma
ENCODE_MATRICES.setflags(write=False)


@dataclass(frozen=True)
class QubitState:
    amp0: complex
    amp1: complex

    def __post_init__(self):
        norm = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"qubit state is not normalized (|a0|^2+|a1|^2 = {norm!r})")

    @classmethod
    def from_vector(cls, vec) -> QubitState:
        return cls(complex(vec[0]), complex(vec[1]))

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)


@dataclass(frozen=True, order=True)
class StateLabel:
    """Which of |0>, |1>, |+>, |-> a qubit is in, up to global phase.

    ``value_bit`` is the encoded bit, ``basis_bit`` is 0 for Z and 1 for X.
    """

    value_bit: int
    basis_bit: int

    def __post_init__(self):
        if self.value_bit not in (0, 1) or self.basis_bit not in (0, 1):
            raise ValueError(f"invalid state label ({self.value_bit}, {self.basis_bit})")

    @property
    def basis(self) -> Basis:
        return Basis(self.basis_bit)


ALL_LABELS = tuple(StateLabel(a, b) for b in (0, 1) for a in (0, 1))


def prepare(label: StateLabel) -> QubitState:
    if label.basis_bit == 0:
        return QubitState(1.0, 0.0) if label.value_bit == 0 else QubitState(0.0, 1.0)
    sign = 1.0 if label.value_bit == 0 else -1.0
    return QubitState(INV_SQRT2, sign * INV_SQRT2)


def apply_gate(state: QubitState, gate: Gate) -> QubitState:
    return QubitState.from_vector(GATE_MATRICES[Gate(gate)] @ state.vector)


def flips_value(op, basis_bit):
    """Whether sigma_op flips the value bit of a state in the given basis.

    Works elementwise on arrays. sigma_1 always flips, sigma_2 (phase flip)
    flips X-basis states, sigma_3 (bit flip) flips Z-basis states.
    """
    op = np.asarray(op)
    basis_bit = np.asarray(basis_bit)
    return (op == 1) | ((op == 2) & (basis_bit == 1)) | ((op == 3) & (basis_bit == 0))


def apply_label(label: StateLabel, gate: Gate) -> StateLabel:
    gate = Gate(gate)
    if gate in (Gate.SIGMA0, Gate.IDENTITY):
        return label
    if gate is Gate.HADAMARD:
        return StateLabel(label.value_bit, label.basis_bit ^ 1)
    flip = int(flips_value(int(gate), label.basis_bit))
    return StateLabel(label.value_bit ^ flip, label.basis_bit)


def equal_up_to_phase(a: QubitState, b: QubitState, tol: float = NORM_TOL) -> bool:
    """True if ``a = exp(i phi) b`` for some phase, i.e. |<a|b>| = 1."""
    overlap = np.vdot(a.vector, b.vector)
    return abs(abs(overlap) - 1.0) <= tol


def outcome_probabilities(state: QubitState, basis: Basis) -> tuple[float, float]:
    p1 = float(prob_one(state.vector.reshape(1, 2, 1), np.array([int(basis)]))[0])
    return 1.0 - p1, p1


def measure(state: QubitState, basis: Basis, rng: np.random.Generator) -> int:
    """Projective measurement; returns the outcome bit (0 = |0> or |+>)."""
    _, p1 = outcome_probabilities(state, basis)
    return int(rng.random() < p1)


# --- array layer -----------------------------------------------------------


def prepare_array(values, bases) -> np.ndarray:
    """Amplitudes of shape (N, 2, 1) for the labels (values[k], bases[k])."""
    values = np.asarray(values)
    bases = np.asarray(bases)
    amps = np.zeros((values.shape[0], 2, 1), dtype=complex)
    z = bases == 0
    amps[z & (values == 0), 0, 0] = 1.0
    amps[z & (values == 1), 1, 0] = 1.0
    x = ~z
    amps[x, 0, 0] = INV_SQRT2
    amps[x, 1, 0] = np.where(values[x] == 0, INV_SQRT2, -INV_SQRT2)
    return amps


def apply_matrices(amps: np.ndarray, matrices: np.ndarray) -> np.ndarray:
    """Apply one 2x2 matrix per position to the signal axis of ``amps``."""
    if matrices.ndim == 2:
        return np.einsum("ij,njp->nip", matrices, amps)
    return np.einsum("nij,njp->nip", matrices, amps)


def rotate_to_basis(amps: np.ndarray, bases) -> np.ndarray:
    """Express X-basis positions in the {|+>, |->} frame (H is its own inverse)."""
    bases = np.asarray(bases)
    out = amps.copy()
    x = bases == 1
    if x.any():
        out[x] = apply_matrices(amps[x], GATE_MATRICES[Gate.HADAMARD])
    return out


def prob_one(amps: np.ndarray, bases) -> np.ndarray:
    """Marginal probability of outcome 1 on the signal qubit, per position."""
    rotated = rotate_to_basis(amps, bases)
    p1 = np.sum(np.abs(rotated[:, 1, :]) ** 2, axis=1)
    p1 = np.where(p1 < SNAP_TOL, 0.0, p1)
    return np.where(p1 > 1.0 - SNAP_TOL, 1.0, p1)


def measure_array(amps: np.ndarray, bases, rng: np.random.Generator) -> np.ndarray:
    """Measure every position's signal qubit in its basis; returns int8 outcomes."""
    p1 = prob_one(amps, bases)
    return (rng.random(p1.shape[0]) < p1).astype(np.int8)


def norms(amps: np.ndarray) -> np.ndarray:
    return np.sum(np.abs(amps) ** 2, axis=(1, 2))
