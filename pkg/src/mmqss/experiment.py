"""Batch Monte-Carlo experiments over protocol configurations.

An experiment file is YAML::

    protocol:            # any ProtocolConfig field except rng_seed
      m: 2
      n: 2
      block_size: 256
      error_threshold: 0.1
      attack_plan:
        A2->B1: {kind: intercept_resend_random, coverage: 1.0}
    runs: 100
    seed_base: 7
    sweep:               # optional; entries are expanded as a cartesian product
      - param: error_threshold
        values: [0.05, 0.11, 0.2]
    report_path: report.json
    secrecy_positions: 0 # >0 brute-forces coalition secrecy on that many key bits

Run ``r`` of configuration ``c`` is seeded with ``derive_seed(seed_base, c, r)``:
the first 64-bit word of ``numpy.random.SeedSequence([seed_base, c, r])``.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .protocol import ConfigError, ProtocolConfig, run_protocol
from .secrecy import conditional_key_distribution, proper_coalitions

REPORT_PATH_ENV = "MMQSS_REPORT_PATH"
SPEC_KEYS = ("protocol", "runs", "seed_base", "sweep", "report_path", "jobs", "secrecy_positions")
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class ExperimentSpec:
    base: ProtocolConfig
    num_runs: int = 1
    seed_base: int = 0
    sweep: tuple[tuple[str, tuple], ...] = ()
    report_path: str | None = None
    jobs: int = 1
    secrecy_positions: int = 0

    def __post_init__(self):
        if isinstance(self.num_runs, bool) or not isinstance(self.num_runs, int) or self.num_runs < 1:
            raise ConfigError("runs", f"must be an integer >= 1, got {self.num_runs!r}")
        if isinstance(self.seed_base, bool) or not isinstance(self.seed_base, int) or not 0 <= self.seed_base < 2**64:
            raise ConfigError("seed_base", "must be a 64-bit unsigned integer")
        if isinstance(self.jobs, bool) or not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("jobs", f"must be an integer >= 1, got {self.jobs!r}")
        if not isinstance(self.secrecy_positions, int) or self.secrecy_positions < 0:
            raise ConfigError("secrecy_positions", "must be an integer >= 0")
        sweep = []
        for i, entry in enumerate(self.sweep):
            path, values = entry
            root = str(path).split(".")[0]
            if root not in ProtocolConfig.__dataclass_fields__ or root == "rng_seed":
                raise ConfigError(f"sweep[{i}].param", f"{path!r} does not name a protocol setting")
            values = tuple(values)
            if not values:
                raise ConfigError(f"sweep[{i}].values", "must list at least one value")
            sweep.append((str(path), values))
        object.__setattr__(self, "sweep", tuple(sweep))
        self.configurations()  # validates every expanded configuration

    def configurations(self) -> list[tuple[dict[str, Any], ProtocolConfig]]:
        base = self.base.to_dict()
        base.pop("rng_seed")
        paths = [p for p, _ in self.sweep]
        out = []
        for combo in itertools.product(*(vals for _, vals in self.sweep)):
            data = json.loads(json.dumps(base))
            for path, value in zip(paths, combo):
                _set_path(data, path, value)
            try:
                config = ProtocolConfig.from_dict(data)
            except ConfigError as exc:
                where = ", ".join(f"{p}={v!r}" for p, v in zip(paths, combo))
                suffix = f" (sweep point {where})" if where else ""
                raise ConfigError(f"protocol.{exc.field}", str(exc).split(": ", 1)[-1] + suffix) from None
            out.append((dict(zip(paths, combo)), config))
        return out

    def to_dict(self) -> dict:
        protocol = self.base.to_dict()
        protocol.pop("rng_seed")
        data = {
            "protocol": protocol,
            "runs": self.num_runs,
            "seed_base": self.seed_base,
            "sweep": [{"param": p, "values": list(v)} for p, v in self.sweep],
            "jobs": self.jobs,
            "secrecy_positions": self.secrecy_positions,
        }
        if self.report_path is not None:
            data["report_path"] = self.report_path
        return data


def _set_path(data: dict, path: str, value) -> None:
    keys = path.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
    node[keys[-1]] = value


def spec_from_dict(data) -> ExperimentSpec:
    if not isinstance(data, dict):
        raise ConfigError("<root>", "experiment file must be a mapping")
    unknown = sorted(set(data) - set(SPEC_KEYS))
    if unknown:
        raise ConfigError(unknown[0], f"unknown key (allowed: {list(SPEC_KEYS)})")
    protocol = data.get("protocol")
    if not isinstance(protocol, dict):
        raise ConfigError("protocol", "missing or not a mapping")
    if "rng_seed" in protocol:
        raise ConfigError("protocol.rng_seed", "per-run seeds derive from seed_base; remove rng_seed")
    try:
        base = ProtocolConfig.from_dict(protocol)
    except ConfigError as exc:
        raise ConfigError(f"protocol.{exc.field}", str(exc).split(": ", 1)[-1]) from None
    except TypeError as exc:
        raise ConfigError("protocol", str(exc)) from None
    sweep = []
    for i, entry in enumerate(data.get("sweep") or []):
        if not isinstance(entry, dict) or set(entry) != {"param", "values"}:
            raise ConfigError(f"sweep[{i}]", "each sweep entry needs exactly 'param' and 'values'")
        if not isinstance(entry["values"], list):
            raise ConfigError(f"sweep[{i}].values", "must be a list")
        sweep.append((entry["param"], tuple(entry["values"])))
    return ExperimentSpec(
        base=base,
        num_runs=data.get("runs", 1),
        seed_base=data.get("seed_base", 0),
        sweep=tuple(sweep),
        report_path=data.get("report_path"),
        jobs=data.get("jobs", 1),
        secrecy_positions=data.get("secrecy_positions", 0),
    )


def loads_spec(text: str) -> ExperimentSpec:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark is not None else "unknown position"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(where, f"YAML parse error: {problem}") from None
    return spec_from_dict(data)


def load_spec(path) -> ExperimentSpec:
    return loads_spec(Path(path).read_text(encoding="utf-8"))


def dumps_spec(spec: ExperimentSpec) -> str:
    return yaml.safe_dump(spec.to_dict(), sort_keys=False)


def derive_seed(seed_base: int, config_index: int, run_index: int) -> int:
    state = np.random.SeedSequence([seed_base, config_index, run_index]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _mean_ci(values: list[float]) -> dict | None:
    if not values:
        return None
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    half = Z_95 * float(arr.std(ddof=1)) / math.sqrt(arr.size) if arr.size > 1 else 0.0
    return {"mean": mean, "ci_low": mean - half, "ci_high": mean + half, "count": int(arr.size)}


@dataclass
class RunRecord:
    run_index: int
    seed: int
    verdict: str
    hop_error_rates: dict[str, float] = field(default_factory=dict)
    final_error_rate: float | None = None
    key_length: int | None = None
    key_agreement: bool | None = None
    secrecy_min_entropy: float | None = None
    error: str | None = None


def _run_one(task) -> RunRecord:
    config, run_index, secrecy_positions, transcript_path = task
    try:
        outcome = run_protocol(config)
        if transcript_path is not None:
            outcome.transcript.dump(transcript_path)
        final = [c.error_rate for c in outcome.checks if c.stage == "sample"]
        record = RunRecord(
            run_index,
            config.rng_seed,
            str(outcome.verdict),
            outcome.hop_error_rates,
            final[0] if final else None,
        )
        if outcome.accepted:
            record.key_length = int(len(outcome.key_positions))
            record.key_agreement = bool(outcome.keys_agree)
            if secrecy_positions:
                record.secrecy_min_entropy = min(
                    conditional_key_distribution(outcome, coalition, secrecy_positions).min_entropy
                    for coalition in proper_coalitions(config.m, config.n)
                )
        return record
    except Exception as exc:  # surfaced in the report, never swallowed
        return RunRecord(run_index, config.rng_seed, "error", error=f"{type(exc).__name__}: {exc}")


@dataclass
class ConfigSummary:
    index: int
    swept: dict[str, Any]
    runs: int
    accepted: int
    accept_rate: float
    accept_ci: list[float]
    hop_error_rates: dict[str, dict | None]
    final_error_rate: dict | None
    mean_key_length: float | None
    key_agreement_violations: int
    undetected_mismatches: int
    failed_runs: int
    secrecy_min_entropy: dict | None
    verdict_counts: dict[str, int]
    verdicts: list[str]
    errors: list[str]


@dataclass
class ExperimentReport:
    spec: dict
    configs: list[ConfigSummary]

    @property
    def key_agreement_violations(self) -> int:
        return sum(c.key_agreement_violations for c in self.configs)

    @property
    def failed_runs(self) -> int:
        return sum(c.failed_runs for c in self.configs)

    @property
    def correctness_failure(self) -> bool:
        return self.key_agreement_violations > 0 or self.failed_runs > 0

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "correctness_failure": self.correctness_failure,
            "configs": [asdict(c) for c in self.configs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentReport:
        return cls(data["spec"], [ConfigSummary(**c) for c in data["configs"]])


def summarize(index: int, swept: dict, config: ProtocolConfig, records: list[RunRecord]) -> ConfigSummary:
    records = sorted(records, key=lambda r: r.run_index)
    accepted = [r for r in records if r.verdict == "accept"]
    hop_parties = [str(p) for p in config.pipeline[1:-1]]
    hop_rates = {
        p: _mean_ci([r.hop_error_rates[p] for r in records if p in r.hop_error_rates]) for p in hop_parties
    }
    finals = [r.final_error_rate for r in records if r.final_error_rate is not None]
    secrecy = [r.secrecy_min_entropy for r in accepted if r.secrecy_min_entropy is not None]
    counts: dict[str, int] = {}
    for r in records:
        counts[r.verdict] = counts.get(r.verdict, 0) + 1
    lo, hi = wilson_interval(len(accepted), len(records))
    # a mismatch is an implementation fault only when nothing on the channel could cause it
    mismatched = sum(1 for r in accepted if r.key_agreement is False)
    return ConfigSummary(
        index=index,
        swept=swept,
        runs=len(records),
        accepted=len(accepted),
        accept_rate=len(accepted) / len(records),
        accept_ci=[lo, hi],
        hop_error_rates=hop_rates,
        final_error_rate=_mean_ci(finals),
        mean_key_length=float(np.mean([r.key_length for r in accepted])) if accepted else None,
        key_agreement_violations=0 if config.channel_disturbed else mismatched,
        undetected_mismatches=mismatched if config.channel_disturbed else 0,
        failed_runs=sum(1 for r in records if r.error is not None),
        secrecy_min_entropy={"min": min(secrecy), "mean": float(np.mean(secrecy))} if secrecy else None,
        verdict_counts=dict(sorted(counts.items())),
        verdicts=[r.verdict for r in records],
        errors=[f"run {r.run_index}: {r.error}" for r in records if r.error is not None],
    )


def run_experiment(
    spec: ExperimentSpec, jobs: int | None = None, transcript_dir=None
) -> tuple[ExperimentReport, list[list[RunRecord]]]:
    """Execute every run of every configuration; returns the report and raw records."""
    configs = spec.configurations()
    tasks = []
    for ci, (_, config) in enumerate(configs):
        for ri in range(spec.num_runs):
            seeded = replace(config, rng_seed=derive_seed(spec.seed_base, ci, ri))
            path = None
            if transcript_dir is not None:
                path = str(Path(transcript_dir) / f"config{ci:03d}_run{ri:05d}.jsonl")
            tasks.append((seeded, ri, spec.secrecy_positions, path))
    if transcript_dir is not None:
        Path(transcript_dir).mkdir(parents=True, exist_ok=True)

    workers = jobs or spec.jobs
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_run_one(t) for t in tasks]

    per_config: list[list[RunRecord]] = []
    summaries = []
    for ci, (swept, config) in enumerate(configs):
        records = results[ci * spec.num_runs : (ci + 1) * spec.num_runs]
        per_config.append(records)
        summaries.append(summarize(ci, swept, config, records))
    return ExperimentReport(spec.to_dict(), summaries), per_config


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def report_from_json(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


def _fmt(x, digits=4):
    return "-" if x is None else f"{x:.{digits}f}"


def report_to_table(report: ExperimentReport) -> str:
    header = ["cfg", "swept", "runs", "accept", "accept 95% CI", "hop eps_s", "final eps_s", "key len", "violations", "undetected", "failed"]
    rows = []
    for c in report.configs:
        swept = ", ".join(f"{k}={v}" for k, v in c.swept.items()) or "-"
        hops = [v["mean"] for v in c.hop_error_rates.values() if v is not None]
        rows.append([
            str(c.index),
            swept,
            str(c.runs),
            _fmt(c.accept_rate, 3),
            f"[{c.accept_ci[0]:.3f}, {c.accept_ci[1]:.3f}]",
            _fmt(float(np.mean(hops)) if hops else None),
            _fmt(c.final_error_rate["mean"] if c.final_error_rate else None),
            _fmt(c.mean_key_length, 1),
            str(c.key_agreement_violations),
            str(c.undetected_mismatches),
            str(c.failed_runs),
        ])
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() for row in rows]
    if report.correctness_failure:
        lines.append("")
        lines.append(
            f"CORRECTNESS FAILURE: {report.key_agreement_violations} key-agreement violation(s), "
            f"{report.failed_runs} failed run(s)"
        )
        for c in report.configs:
            lines += [f"  cfg {c.index}: {e}" for e in c.errors]
    return "\n".join(lines) + "\n"


def render_report(report: ExperimentReport, fmt: str = "json") -> str:
    if fmt == "json":
        return report_to_json(report)
    if fmt == "table":
        return report_to_table(report)
    raise ValueError(f"unknown report format {fmt!r} (use 'json' or 'table')")


def resolve_report_path(spec: ExperimentSpec) -> str | None:
    return os.environ.get(REPORT_PATH_ENV) or spec.report_path


def emit_report(report: ExperimentReport, path, fmt: str = "json") -> Path:
    path = Path(path)
    text = render_report(report, fmt)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc.strerror}") from exc
    return path
