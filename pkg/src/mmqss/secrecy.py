"""Brute-force conditional key distribution for a coalition of parties.

A coalition is a set of party names. ``"A<i>"`` and ``"B<j>"`` for j < n stand
for that party's private strings; ``"B<n>"`` stands for Bob n's measurement
outcomes. Everything announced publicly (all Hadamard strings, hence Bob n's
bases) is known to everyone.

For each key position the missing parties' operation symbols are enumerated
over their full alphabets. An assignment is kept if it reproduces what the
coalition saw (Bob n's outcome, when Bob n is in the coalition); the key bit
distribution over kept assignments gives the min-entropy. Secrets are
independent and uniform per position, so enumerating position by position is
exactly the same as enumerating whole strings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .parties import LabelBlock, PartyId, alice, bob, shift_labels
from .protocol import ProtocolOutcome


def _as_party(item) -> PartyId:
    return item if isinstance(item, PartyId) else PartyId.parse(str(item))


def knowledge_items(m: int, n: int) -> list[PartyId]:
    return [alice(i) for i in range(1, m + 1)] + [bob(j) for j in range(1, n + 1)]


def contains_full_group(subset: Iterable, m: int, n: int) -> bool:
    members = {_as_party(x) for x in subset}
    alices = {alice(i) for i in range(1, m + 1)}
    bobs = {bob(j) for j in range(1, n + 1)}
    return alices <= members or bobs <= members


def proper_coalitions(m: int, n: int) -> list[frozenset[PartyId]]:
    """Every subset of party knowledge that holds neither full group."""
    items = knowledge_items(m, n)
    out = []
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            if not contains_full_group(combo, m, n):
                out.append(frozenset(combo))
    return out


def min_entropy(prob_one) -> np.ndarray:
    p = np.asarray(prob_one, dtype=float)
    return 0.0 - np.log2(np.maximum(p, 1.0 - p))


@dataclass(frozen=True, eq=False)
class SecrecyReport:
    coalition: tuple[str, ...]
    positions: np.ndarray
    prob_one: np.ndarray
    consistent: np.ndarray
    entropy: np.ndarray

    @property
    def min_entropy(self) -> float:
        return float(self.entropy.min()) if self.entropy.size else float("nan")

    @property
    def mean_entropy(self) -> float:
        return float(self.entropy.mean()) if self.entropy.size else float("nan")


def conditional_key_distribution(outcome: ProtocolOutcome, subset: Iterable, limit: int | None = None) -> SecrecyReport:
    """Key-bit distribution given the coalition's knowledge; no subset check."""
    if not outcome.accepted:
        raise ValueError("secrecy is only defined for accepted runs")
    m, n = outcome.config.m, outcome.config.n
    members = {_as_party(x) for x in subset}
    valid = set(knowledge_items(m, n))
    if not members <= valid:
        raise ValueError(f"unknown parties in coalition: {sorted(map(str, members - valid))}")

    relays = knowledge_items(m, n)[:-1]
    missing = [p for p in relays if p not in members]
    bob_n_known = bob(n) in members
    alphabets = [range(2) if p.is_alice_one else range(4) for p in missing]
    combos = np.array(list(itertools.product(*alphabets)), dtype=np.int8).reshape(-1, len(missing))
    c = combos.shape[0]
    column = {p: combos[:, i] for i, p in enumerate(missing)}

    positions = outcome.key_positions if limit is None else outcome.key_positions[:limit]
    prob_one = np.empty(len(positions))
    consistent_counts = np.empty(len(positions), dtype=np.int64)
    for k, pos in enumerate(positions):
        secrets = outcome.secrets

        def ops(p):
            return column[p] if p in column else np.full(c, secrets[p].op_string[pos], dtype=np.int8)

        def had(p):
            return np.full(c, secrets[p].had_string[pos], dtype=np.int8)

        labels = LabelBlock(ops(alice(1)), had(alice(1)))
        for p in relays[1:m]:
            labels = shift_labels(labels, ops(p), had(p))
        key = labels.values
        keep = np.ones(c, dtype=bool)
        if bob_n_known:
            arrived = labels
            for p in relays[m:]:
                arrived = shift_labels(arrived, ops(p), had(p))
            keep = arrived.values == outcome.bob_outcomes[k]
        consistent_counts[k] = int(keep.sum())
        prob_one[k] = key[keep].mean()
    return SecrecyReport(
        tuple(sorted(str(p) for p in members)),
        np.asarray(positions),
        prob_one,
        consistent_counts,
        min_entropy(prob_one),
    )


def secrecy_check(outcome: ProtocolOutcome, subset: Iterable, limit: int | None = None) -> SecrecyReport:
    """Per-position key min-entropy for a coalition that lacks both full groups.

    Raises ``ValueError`` if the coalition contains every Alice or every Bob,
    since either group is supposed to recover the key.
    """
    subset = list(subset)
    if contains_full_group(subset, outcome.config.m, outcome.config.n):
        raise ValueError("coalition contains a full group; the key is meant to be known to it")
    return conditional_key_distribution(outcome, subset, limit)
