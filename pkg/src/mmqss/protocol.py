"""One complete run of the m-Alice / n-Bob secret sharing protocol.

Flow of a run:

1. Alice 1 draws her strings and prepares the block.
2. Each later Alice, then Bob 1 .. Bob n-1, receives the block, filters
   out-of-band photons, sacrifices a random sample (photon-number check plus a
   random-basis measurement compared with what upstream parties reveal),
   and, if the sample error rate is within threshold, encodes the rest.
3. Bob n filters, runs his own sample check measuring in the XOR of every
   revealed Hadamard bit, measures all remaining positions the same way, and
   both groups compare a last sample of reconstructed key bits.
4. On acceptance the key is the value bits of the states Alice m sent,
   reconstructed once from the Alices' strings and once from Bob n's results
   plus the other Bobs' strings.

All randomness comes from one ``numpy`` generator seeded by
``ProtocolConfig.rng_seed``, so a run is replayable from its configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .channel import (
    AttackStrategy,
    ChannelSegment,
    NO_ATTACK,
    PNS_THRESHOLDS,
    SignalBlock,
    filter_in_band,
    pns_detect,
    transmit,
)
from .parties import (
    Announcement,
    Group,
    LabelBlock,
    PartyId,
    PartySecret,
    alice,
    announce,
    bits_to_str,
    bob,
    compose_labels,
    encode_block,
    generate_secret,
    pipeline,
    shift_labels,
    unshift_labels,
)
from .transcript import Transcript

MAX_SEED = 2**64


class ConfigError(ValueError):
    """Invalid protocol or experiment configuration; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def sample_count(available: int, fraction: float) -> int:
    # the epsilon keeps e.g. 0.1 * 30 from rounding up to 4
    return min(available, math.ceil(fraction * available - 1e-9))


def _parse_segment_key(key, m: int, n: int) -> str:
    text = str(key).replace(" ", "")
    parts = text.split("->")
    if len(parts) != 2:
        raise ConfigError("attack_plan", f"segment key {key!r} must look like 'A1->A2'")
    try:
        sender, receiver = PartyId.parse(parts[0]), PartyId.parse(parts[1])
    except ValueError as exc:
        raise ConfigError("attack_plan", str(exc)) from None
    order = pipeline(m, n)
    if sender not in order or receiver not in order or order.index(receiver) != order.index(sender) + 1:
        raise ConfigError("attack_plan", f"{key!r} is not a channel segment of the A1..A{m} -> B1..B{n} pipeline")
    return f"{sender}->{receiver}"


@dataclass(frozen=True)
class ProtocolConfig:
    m: int = 2
    n: int = 2
    block_size: int = 64
    sample_fraction: float = 0.25
    error_threshold: float = 0.11
    attack_plan: Mapping[str, AttackStrategy] = field(default_factory=dict)
    rng_seed: int = 0
    pns_mode: str = "ge2"
    pns_idealized: bool = True

    def __post_init__(self):
        for name in ("m", "n", "block_size", "rng_seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(name, f"must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.m < 2:
            raise ConfigError("m", f"need m >= 2 Alices, got {self.m}")
        if self.n < 2:
            raise ConfigError("n", f"need n >= 2 Bobs, got {self.n}")
        if self.block_size < 1:
            raise ConfigError("block_size", f"must be >= 1, got {self.block_size}")
        if not 0 <= self.rng_seed < MAX_SEED:
            raise ConfigError("rng_seed", "must be a 64-bit unsigned integer")
        if not 0.0 < float(self.sample_fraction) < 1.0:
            raise ConfigError("sample_fraction", f"must lie in (0, 1), got {self.sample_fraction}")
        if not 0.0 <= float(self.error_threshold) < 1.0:
            raise ConfigError("error_threshold", f"must lie in [0, 1), got {self.error_threshold}")
        object.__setattr__(self, "sample_fraction", float(self.sample_fraction))
        object.__setattr__(self, "error_threshold", float(self.error_threshold))
        if self.pns_mode not in PNS_THRESHOLDS:
            raise ConfigError("pns_mode", f"must be one of {sorted(PNS_THRESHOLDS)}, got {self.pns_mode!r}")
        if not isinstance(self.pns_idealized, bool):
            raise ConfigError("pns_idealized", f"must be a boolean, got {self.pns_idealized!r}")

        plan = {}
        for key, strategy in dict(self.attack_plan).items():
            name = _parse_segment_key(key, self.m, self.n)
            if not isinstance(strategy, AttackStrategy):
                try:
                    strategy = AttackStrategy.from_dict(strategy)
                except (KeyError, ValueError, TypeError) as exc:
                    raise ConfigError(f"attack_plan.{name}", str(exc)) from None
            plan[name] = strategy
        order = [seg.name for seg in self._segments_for(plan)]
        object.__setattr__(self, "attack_plan", {k: plan[k] for k in order if k in plan})

        if self.key_capacity() < 1:
            raise ConfigError(
                "block_size",
                f"N={self.block_size} leaves no key after {self.num_checks} checks at "
                f"sample_fraction={self.sample_fraction}",
            )

    @property
    def pipeline(self) -> list[PartyId]:
        return pipeline(self.m, self.n)

    def _segments_for(self, plan) -> list[ChannelSegment]:
        order = pipeline(self.m, self.n)
        segments = []
        for sender, receiver in zip(order, order[1:]):
            seg = ChannelSegment(sender, receiver)
            segments.append(ChannelSegment(sender, receiver, plan.get(seg.name, NO_ATTACK)))
        return segments

    @property
    def segments(self) -> list[ChannelSegment]:
        return self._segments_for(self.attack_plan)

    @property
    def channel_disturbed(self) -> bool:
        """Whether any segment carries an attack that can change qubit states."""
        return any(a.disturbs_qubit for a in self.attack_plan.values())

    @property
    def num_checks(self) -> int:
        # one per receiving relay, Bob n's sample check, and the key comparison
        return (self.m - 1) + (self.n - 1) + 2

    def key_capacity(self) -> int:
        """Key length left after every check consumes its sample (no losses)."""
        remaining = self.block_size
        for _ in range(self.num_checks):
            remaining -= sample_count(remaining, self.sample_fraction)
        return remaining

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "block_size": self.block_size,
            "sample_fraction": self.sample_fraction,
            "error_threshold": self.error_threshold,
            "attack_plan": {k: v.to_dict() for k, v in self.attack_plan.items()},
            "rng_seed": self.rng_seed,
            "pns_mode": self.pns_mode,
            "pns_idealized": self.pns_idealized,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> ProtocolConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], f"unknown protocol setting (allowed: {sorted(known)})")
        return cls(**dict(data))


class VerdictKind(Enum):
    ACCEPT = "accept"
    ABORT_AT_HOP = "abort_at_hop"
    ABORT_FINAL_CHECK = "abort_final_check"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    party: PartyId | None = None
    stage: str | None = None
    reason: str | None = None

    def __str__(self):
        if self.kind is VerdictKind.ACCEPT:
            return "accept"
        if self.kind is VerdictKind.ABORT_AT_HOP:
            return f"abort_at_hop:{self.party}"
        return f"abort_final_check:{self.stage}"


@dataclass(frozen=True, eq=False)
class CheckResult:
    """Outcome of one sample check.

    ``usable`` counts samples whose measurement basis matched the state's
    basis; ``error_rate`` is errors / usable (0.0 when nothing was usable).
    """

    party: PartyId
    stage: str
    proceed: bool
    error_rate: float
    samples: int
    usable: int
    errors: int
    multi_photon: int = 0
    lost: int = 0
    reason: str | None = None
    positions: np.ndarray = field(default_factory=lambda: np.arange(0))


def _check_verdict(result: CheckResult, threshold: float) -> tuple[bool, str | None]:
    if result.lost:
        return False, f"{result.lost} signal(s) lost to the in-band filter"
    if result.multi_photon:
        return False, f"{result.multi_photon} multi-photon signal(s) at the splitter"
    if result.error_rate > threshold:
        return False, f"sample error rate {result.error_rate:.4f} exceeds threshold {threshold}"
    return True, None


def labels_from_announcements(announcements: Sequence[Announcement]) -> LabelBlock:
    """Compose revealed symbols in pipeline order, starting from Alice 1's."""
    first = announcements[0]
    if not first.party.is_alice_one:
        raise ValueError("announcements must start with Alice 1")
    labels = LabelBlock(first.revealed_ops, first.revealed_had)
    for ann in announcements[1:]:
        labels = shift_labels(labels, ann.revealed_ops, ann.revealed_had)
    return labels


def _record_announcements(transcript, announcements, order=None):
    if transcript is None:
        return
    for ann in announcements:
        transcript.record(
            "announce",
            party=ann.party,
            positions=ann.positions,
            ops=bits_to_str(ann.revealed_ops),
            had=bits_to_str(ann.revealed_had),
        )


def _finish_check(result: CheckResult, threshold: float, transcript) -> CheckResult:
    proceed, reason = _check_verdict(result, threshold)
    result = CheckResult(**{**result.__dict__, "proceed": proceed, "reason": reason})
    if transcript is not None:
        transcript.record(
            f"{result.stage}_check",
            party=result.party,
            error_rate=result.error_rate,
            samples=result.samples,
            usable=result.usable,
            errors=result.errors,
            multi_photon=result.multi_photon,
            lost=result.lost,
            proceed=proceed,
            reason=reason,
        )
    return result


def _filter_and_sample(block: SignalBlock, receiver, config, rng, transcript):
    filtered = filter_in_band(block)
    stripped = int(block.out_of_band.sum())
    lost = int(filtered.lost.sum())
    k = sample_count(len(filtered), config.sample_fraction)
    idx = np.sort(rng.choice(len(filtered), size=k, replace=False)) if k else np.arange(0)
    samples = filtered.take(idx)
    multi = pns_detect(samples.in_band, rng, config.pns_mode, config.pns_idealized)
    if transcript is not None:
        transcript.record("filter", party=receiver, stripped=stripped, lost=lost)
        transcript.record("sample_select", party=receiver, positions=samples.origin)
        transcript.record("pns", party=receiver, positions=samples.origin[multi], detected=int(multi.sum()))
    return filtered, idx, samples, int(multi.sum()), lost


def hop_receive_check(
    block: SignalBlock,
    receiver: PartyId,
    config: ProtocolConfig,
    upstream: Sequence[PartySecret],
    rng: np.random.Generator,
    transcript: Transcript | None = None,
) -> tuple[CheckResult, SignalBlock]:
    """Receive-side check of a relaying party (Alice 2..m or Bob 1..n-1).

    Returns the check result and the block with the sampled positions removed.
    ``upstream`` holds the secrets of every earlier party, Alice 1 first; only
    their symbols at the sampled positions are revealed.
    """
    if receiver.is_alice_one or (receiver.group is Group.BOBS and receiver.index >= config.n):
        raise ValueError(f"{receiver} does not run a relay receive check")
    filtered, idx, samples, multi, lost = _filter_and_sample(block, receiver, config, rng, transcript)

    bases = rng.integers(0, 2, size=len(samples), dtype=np.int8)
    outcomes = samples.measure(bases, rng)
    if transcript is not None:
        transcript.record(
            "sample_measure", party=receiver, positions=samples.origin,
            bases=bits_to_str(bases), outcomes=bits_to_str(outcomes),
        )
    announcements = [announce(s, samples.origin) for s in upstream]
    _record_announcements(transcript, announcements)

    if len(samples):
        expected = labels_from_announcements(announcements)
        usable = bases == expected.bases
        errors = int(np.sum((outcomes != expected.values) & usable))
        n_usable = int(usable.sum())
    else:
        errors = n_usable = 0
    rate = errors / n_usable if n_usable else 0.0
    result = CheckResult(
        receiver, "hop", True, rate, len(samples), n_usable, errors, multi, lost, None, samples.origin
    )
    return _finish_check(result, config.error_threshold, transcript), filtered.drop(idx)


def final_sample_check(
    block: SignalBlock,
    config: ProtocolConfig,
    announcers: Sequence[PartySecret],
    rng: np.random.Generator,
    transcript: Transcript | None = None,
) -> tuple[CheckResult, SignalBlock]:
    """Bob n's check: every other party reveals its symbols for the samples in
    a random order, Bob n measures each sample in the XOR of the revealed
    Hadamard bits and compares with the predicted value."""
    last_bob = bob(config.n)
    filtered, idx, samples, multi, lost = _filter_and_sample(block, last_bob, config, rng, transcript)

    k = len(samples)
    order = rng.permuted(np.tile(np.arange(len(announcers)), (k, 1)), axis=1)
    announcements = [announce(s, samples.origin) for s in announcers]
    if transcript is not None:
        names = [str(s.party) for s in announcers]
        transcript.record(
            "announce_order", party=last_bob, positions=samples.origin,
            order=[",".join(names[j] for j in row) for row in order],
        )
    _record_announcements(transcript, announcements)

    bases = np.zeros(k, dtype=np.int8)
    for ann in announcements:
        bases ^= ann.revealed_had
    outcomes = samples.measure(bases, rng)
    if transcript is not None:
        transcript.record(
            "sample_measure", party=last_bob, positions=samples.origin,
            bases=bits_to_str(bases), outcomes=bits_to_str(outcomes),
        )
    if k:
        expected = labels_from_announcements(announcements)
        errors = int(np.sum(outcomes != expected.values))
    else:
        errors = 0
    rate = errors / k if k else 0.0
    result = CheckResult(last_bob, "sample", True, rate, k, k, errors, multi, lost, None, samples.origin)
    return _finish_check(result, config.error_threshold, transcript), filtered.drop(idx)


def reconciled_bases(had_strings: Sequence[np.ndarray], positions) -> np.ndarray:
    bases = np.zeros(len(positions), dtype=np.int8)
    for had in had_strings:
        bases ^= np.asarray(had, dtype=np.int8)[positions]
    return bases


def reconcile_and_measure(
    block: SignalBlock, had_strings: Sequence[np.ndarray], rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Measure every position in Z or X per the XOR of all announced Hadamard bits.

    Returns ``(outcomes, bases)``.
    """
    bases = reconciled_bases(had_strings, block.origin)
    return block.measure(bases, rng), bases


def _check_group(secrets: Sequence[PartySecret], group: Group, expected: int | None, what: str):
    indices = [s.party.index for s in secrets]
    if any(s.party.group is not group for s in secrets):
        raise ValueError(f"{what} reconstruction got a secret from the wrong group")
    want = list(range(1, (expected if expected is not None else len(indices)) + 1))
    if indices != want:
        missing = sorted(set(want) - set(indices))
        if missing:
            raise ValueError(f"{what} reconstruction is missing the secret of party index {missing}")
        raise ValueError(f"{what} secrets must be given in order {want}, got {indices}")


def reconstruct_alice_key(
    alice_secrets: Sequence[PartySecret], positions=None, m: int | None = None
) -> LabelBlock:
    """Labels of the states Alice m sent, from all Alices' strings."""
    _check_group(alice_secrets, Group.ALICES, m, "Alice-side")
    if len(alice_secrets) < 2:
        raise ValueError("Alice-side reconstruction needs at least two Alices")
    return compose_labels(alice_secrets, positions)


def reconstruct_bob_key(
    outcomes, bases, bob_secrets: Sequence[PartySecret], positions=None, n: int | None = None
) -> LabelBlock:
    """Walk Bob n's measured labels back through Bob n-1 .. Bob 1.

    Each encoding step is undone on labels: the Hadamard first, then the
    sigma flip (which is its own inverse on labels).
    """
    if outcomes is None or bases is None:
        raise ValueError("Bob-side reconstruction needs Bob n's outcomes and bases")
    _check_group(bob_secrets, Group.BOBS, None if n is None else n - 1, "Bob-side")
    labels = LabelBlock(outcomes, bases)
    for secret in reversed(bob_secrets):
        ops, had = secret.op_string, secret.had_string
        if positions is not None:
            ops, had = ops[positions], had[positions]
        labels = unshift_labels(labels, ops, had)
    return labels


@dataclass(eq=False)
class ProtocolOutcome:
    config: ProtocolConfig
    verdict: Verdict
    checks: list[CheckResult]
    transcript: Transcript
    secrets: dict[PartyId, PartySecret]
    key_positions: np.ndarray | None = None
    alice_side_key: LabelBlock | None = None
    bob_side_key: LabelBlock | None = None
    bob_outcomes: np.ndarray | None = None
    bob_bases: np.ndarray | None = None

    @property
    def accepted(self) -> bool:
        return self.verdict.kind is VerdictKind.ACCEPT

    @property
    def hop_error_rates(self) -> dict[str, float]:
        return {str(c.party): c.error_rate for c in self.checks if c.stage == "hop"}

    @property
    def final_key(self) -> LabelBlock | None:
        """(value, basis) of each state Alice m sent at the key positions."""
        return self.alice_side_key if self.accepted else None

    @property
    def key_bits(self) -> np.ndarray | None:
        return None if self.final_key is None else self.final_key.values

    @property
    def keys_agree(self) -> bool | None:
        if self.alice_side_key is None or self.bob_side_key is None:
            return None
        return self.alice_side_key == self.bob_side_key


def _abort(config, verdict, checks, transcript, secrets) -> ProtocolOutcome:
    transcript.record("verdict", party=verdict.party, verdict=str(verdict), reason=verdict.reason)
    return ProtocolOutcome(config, verdict, checks, transcript, secrets)


def run_protocol(config: ProtocolConfig) -> ProtocolOutcome:
    rng = np.random.default_rng(config.rng_seed)
    transcript = Transcript()
    transcript.record("config", **config.to_dict())
    order = config.pipeline
    segments = config.segments
    N = config.block_size
    secrets: dict[PartyId, PartySecret] = {}
    checks: list[CheckResult] = []

    a1 = generate_secret(alice(1), N, rng)
    secrets[a1.party] = a1
    block = SignalBlock.from_labels(a1.op_string, a1.had_string)
    transcript.record("prepare", party=a1.party, values=bits_to_str(a1.op_string), bases=bits_to_str(a1.had_string))

    for hop, receiver in enumerate(order[1:-1], start=1):
        block = transmit(block, segments[hop - 1], rng, transcript)
        upstream = [secrets[p] for p in order[:hop]]
        result, block = hop_receive_check(block, receiver, config, upstream, rng, transcript)
        checks.append(result)
        if not result.proceed:
            verdict = Verdict(VerdictKind.ABORT_AT_HOP, receiver, "hop", result.reason)
            return _abort(config, verdict, checks, transcript, secrets)
        secret = generate_secret(receiver, N, rng)
        secrets[receiver] = secret
        block = SignalBlock(
            encode_block(block.amps, secret, block.origin), block.in_band, block.out_of_band, block.origin, block.entangled
        )
        transcript.record(
            "encode", party=receiver, positions=block.origin,
            ops=bits_to_str(secret.op_string[block.origin]), had=bits_to_str(secret.had_string[block.origin]),
        )

    last_bob = order[-1]
    block = transmit(block, segments[-1], rng, transcript)
    announcers = [secrets[p] for p in order[:-1]]
    result, block = final_sample_check(block, config, announcers, rng, transcript)
    checks.append(result)
    if not result.proceed:
        verdict = Verdict(VerdictKind.ABORT_FINAL_CHECK, last_bob, "sample", result.reason)
        return _abort(config, verdict, checks, transcript, secrets)

    had_strings = [s.had_string for s in announcers]
    transcript.record("reconcile", party=last_bob, positions=block.origin,
                      bases=bits_to_str(reconciled_bases(had_strings, block.origin)))
    outcomes, bases = reconcile_and_measure(block, had_strings, rng)
    transcript.record("measure", party=last_bob, positions=block.origin, outcomes=bits_to_str(outcomes))

    positions = block.origin
    alice_secrets = [secrets[alice(i)] for i in range(1, config.m + 1)]
    bob_secrets = [secrets[bob(j)] for j in range(1, config.n)]
    alice_key = reconstruct_alice_key(alice_secrets, positions, config.m)
    bob_key = reconstruct_bob_key(outcomes, bases, bob_secrets, positions, config.n)

    # both groups reveal a sample of reconstructed key bits and compare
    k = sample_count(len(positions), config.sample_fraction)
    idx = np.sort(rng.choice(len(positions), size=k, replace=False)) if k else np.arange(0)
    errors = int(np.sum(alice_key.values[idx] != bob_key.values[idx]))
    rate = errors / k if k else 0.0
    transcript.record(
        "key_sample", party=last_bob, positions=positions[idx],
        alice_values=bits_to_str(alice_key.values[idx]), bob_values=bits_to_str(bob_key.values[idx]),
    )
    key_check = _finish_check(
        CheckResult(last_bob, "key", True, rate, k, k, errors, positions=positions[idx]),
        config.error_threshold,
        transcript,
    )
    checks.append(key_check)
    if not key_check.proceed:
        verdict = Verdict(VerdictKind.ABORT_FINAL_CHECK, last_bob, "key", key_check.reason)
        return _abort(config, verdict, checks, transcript, secrets)

    keep = np.ones(len(positions), dtype=bool)
    keep[idx] = False
    outcome = ProtocolOutcome(
        config,
        Verdict(VerdictKind.ACCEPT),
        checks,
        transcript,
        secrets,
        key_positions=positions[keep],
        alice_side_key=alice_key.take(keep),
        bob_side_key=bob_key.take(keep),
        bob_outcomes=outcomes[keep],
        bob_bases=bases[keep],
    )
    transcript.record(
        "verdict", party=None, positions=outcome.key_positions, verdict="accept",
        key_agreement=bool(outcome.keys_agree), key_length=int(keep.sum()),
    )
    return outcome


def replay_transcript(transcript: Transcript) -> tuple[bool, int | None, Transcript]:
    """Re-run the logged configuration; returns (identical, first differing event, new log)."""
    if not transcript.events or transcript.events[0]["kind"] != "config":
        raise ValueError("transcript does not start with a config event")
    config = ProtocolConfig.from_dict(transcript.events[0]["payload"])
    fresh = run_protocol(config).transcript
    diff = transcript.first_difference(fresh)
    return diff is None, diff, fresh
