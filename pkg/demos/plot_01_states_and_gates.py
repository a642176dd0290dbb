"""
States, gates and labels
========================

Every qubit in the simulator is one of four states, named by a
(value bit, basis bit) label. Gates map labels to labels, so most of the
protocol can be tracked symbolically; the matrices are there to check it.
"""

import numpy as np

from mmqss.qubit import ALL_LABELS, Basis, Gate, apply_gate, apply_label, equal_up_to_phase, measure, prepare

for label in ALL_LABELS:
    state = prepare(label)
    print(label, np.round(state.vector.real, 4))

# The label table next to the matrix result, up to global phase
print()
print("label  " + "  ".join(f"{g.name:>8}" for g in Gate))
for label in ALL_LABELS:
    row = []
    for gate in Gate:
        out = apply_label(label, gate)
        assert equal_up_to_phase(apply_gate(prepare(label), gate), prepare(out))
        row.append(f"{out.value_bit}{out.basis_bit}")
    print(f"{label.value_bit}{label.basis_bit}    " + "  ".join(f"{r:>8}" for r in row))

# Measuring in the matching basis is deterministic, the other basis is a coin flip
rng = np.random.default_rng(0)
plus = prepare(ALL_LABELS[2])
same = [measure(plus, Basis.X, rng) for _ in range(1000)]
other = [measure(plus, Basis.Z, rng) for _ in range(1000)]
print("\n|+> in X:", np.mean(same), "  |+> in Z:", np.mean(other))
