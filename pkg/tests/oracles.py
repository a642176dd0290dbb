"""Independent reference computations used to freeze expected values.

Nothing here imports the package's gate tables or label algebra: kets and
operators are rebuilt from outer products, and label transitions are found by
searching for the matching state.
"""

import itertools

import numpy as np

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
PLUS = (KET0 + KET1) / np.sqrt(2)
MINUS = (KET0 - KET1) / np.sqrt(2)

# (value, basis) -> ket, as listed for the four-state alphabet
KETS = {(0, 0): KET0, (1, 0): KET1, (0, 1): PLUS, (1, 1): MINUS}


def outer(a, b):
    return np.outer(a, b.conj())


SIGMA = {
    0: outer(KET0, KET0) + outer(KET1, KET1),
    1: -outer(KET1, KET0) + outer(KET0, KET1),
    2: outer(KET0, KET0) - outer(KET1, KET1),
    3: outer(KET0, KET1) + outer(KET1, KET0),
}
HADAMARD = outer(PLUS, KET0) + outer(MINUS, KET1)
IDENTITY = SIGMA[0]

# gate name -> oracle matrix; names mirror mmqss.qubit.Gate
ORACLE_GATES = {
    "SIGMA0": SIGMA[0],
    "SIGMA1": SIGMA[1],
    "SIGMA2": SIGMA[2],
    "SIGMA3": SIGMA[3],
    "HADAMARD": HADAMARD,
    "IDENTITY": IDENTITY,
}


def same_ray(u, v, tol=1e-12):
    return abs(abs(np.vdot(u, v)) - 1.0) <= tol


def identify(vec):
    """(value, basis) of the alphabet state equal to ``vec`` up to phase, or None."""
    hits = [lab for lab, ket in KETS.items() if same_ray(ket, vec)]
    return hits[0] if len(hits) == 1 else None


def oracle_transition(label, matrix):
    return identify(matrix @ KETS[label])


def oracle_encode(label, op, had):
    """Label after sigma_op then (H if had); found by state search."""
    vec = SIGMA[op] @ KETS[label]
    if had:
        vec = HADAMARD @ vec
    return identify(vec)


def oracle_chain(a1, b1, steps):
    """Label after Alice 1 prepares (a1, b1) and each (op, had) in ``steps``."""
    label = (a1, b1)
    for op, had in steps:
        label = oracle_encode(label, op, had)
    return label


def born_p1(vec, basis):
    """Probability of outcome 1 (|1> or |->) by projector."""
    proj = outer(KET1, KET1) if basis == 0 else outer(MINUS, MINUS)
    return float(np.real(np.vdot(vec, proj @ vec)))


def three_sigma(p, n):
    return 3.0 * np.sqrt(p * (1 - p) / n)


def all_symbol_patterns(m, n):
    """Every joint choice of Alice 1's value bit and the later parties' ops."""
    alphabets = [range(2)] + [range(4)] * (m - 1 + n - 1)
    return list(itertools.product(*alphabets))


def joint_key_oracle(m, n, secrets, positions, bob_outcomes, coalition):
    """P(key value bit = 1) at each position given a coalition's knowledge.

    ``secrets`` maps party names ("A1", ..., "B{n-1}") to (ops, had) sequences.
    Missing parties' op strings are enumerated jointly over every position;
    had strings are public. "B{n}" in the coalition means Bob n's outcomes
    (``bob_outcomes[k]`` for ``positions[k]``) are known and filter the guesses.
    """
    relays = [f"A{i}" for i in range(1, m + 1)] + [f"B{j}" for j in range(1, n)]
    missing = [p for p in relays if p not in coalition]
    alphabets = [range(2) if p == "A1" else range(4) for p in missing]
    table = {}
    for label in KETS:
        for op in range(4):
            for had in range(2):
                table[label, op, had] = oracle_encode(label, op, had)

    size = len(positions)
    ones = np.zeros(size)
    kept = 0
    for choice in itertools.product(*[itertools.product(a, repeat=size) for a in alphabets]):
        guess = dict(zip(missing, choice))

        def op(p, k):
            return guess[p][k] if p in guess else int(secrets[p][0][positions[k]])

        keys = []
        for k in range(size):
            label = (op("A1", k), int(secrets["A1"][1][positions[k]]))
            for p in relays[1:]:
                if p == relays[m]:
                    keys.append(label[0])
                label = table[label, op(p, k), int(secrets[p][1][positions[k]])]
            if f"B{n}" in coalition and label[0] != bob_outcomes[k]:
                break
        else:
            ones += keys
            kept += 1
    return ones / kept
