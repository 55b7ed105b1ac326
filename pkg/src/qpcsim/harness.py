"""
Seeded Monte-Carlo batches over protocol runs.

Trial t runs with seed ``spec.seed + t``; every random stream inside the
trial is spawned from that seed, so distinct trials never share a stream and
a batch is reproducible from its spec alone. Metrics that do not apply to an
experiment (attack accuracy without an attacker, detection rate without an
adversary) are reported as None and written as ``NA``.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import attack, ecc
from .errors import ConfigError, SizeError
from .protocol import (
    AnnouncementModel,
    OutcomeKind,
    PermutationMode,
    ProtocolConfig,
    Variant,
    decoy_error_rate,
    run,
)

CSV_COLUMNS = (
    "experiment_id",
    "variant",
    "code",
    "adversary",
    "knowledge",
    "trials",
    "correctness",
    "accuracy_mean",
    "accuracy_sd",
    "detection_rate",
    "mean_decoy_error",
    "seed",
)
NA = "NA"


class AdversaryKind(str, enum.Enum):
    NONE = "none"
    TWICE_H_CNOT = "thcnot"
    MEASURE_RESEND = "mr"


@dataclass(frozen=True)
class ExperimentSpec:
    variant: str = "original"
    code: str = "identity"
    n: int = 4
    r: int = 0
    noise: float = 0.0
    threshold: float | None = None
    perm_mode: str = "shared"
    announce: str = "public"
    adversary: str = "none"
    knowledge: str = "faithful"
    trials: int = 1
    inputs: str = "random"
    seed: int = 0

    def validate(self) -> None:
        for name, enum_cls in (
            ("variant", Variant),
            ("perm_mode", PermutationMode),
            ("announce", AnnouncementModel),
            ("adversary", AdversaryKind),
            ("knowledge", attack.KnowledgeModel),
        ):
            try:
                enum_cls(getattr(self, name))
            except ValueError:
                choices = ", ".join(e.value for e in enum_cls)
                raise ConfigError(name, f"{getattr(self, name)!r} is not one of {choices}") from None
        if self.trials < 1:
            raise ConfigError("trials", f"must be >= 1, got {self.trials}")
        if self.n < 1:
            raise ConfigError("n", f"must be >= 1, got {self.n}")
        if self.inputs == "exhaustive" and self.n > 6:
            raise ConfigError("inputs", f"exhaustive inputs need n <= 6, got n = {self.n}")
        if self.inputs not in ("exhaustive", "random") and not self.inputs.startswith("fixed:"):
            raise ConfigError("inputs", f"expected exhaustive, random or fixed:X,Y; got {self.inputs!r}")
        if self.inputs.startswith("fixed:"):
            self.fixed_pair()
        self.protocol_config()

    def fixed_pair(self) -> tuple[np.ndarray, np.ndarray]:
        try:
            x, y = self.inputs[len("fixed:"):].split(",")
            return ecc.as_bits(x, self.n), ecc.as_bits(y, self.n)
        except (ValueError, SizeError) as exc:
            raise ConfigError("inputs", f"bad fixed pair {self.inputs!r}: {exc}") from None

    def build_code(self) -> ecc.Code:
        try:
            return ecc.code_for_word_length(self.code, self.n)
        except (ValueError, SizeError) as exc:
            raise ConfigError("code", str(exc)) from None

    def protocol_config(self, seed: int | None = None) -> ProtocolConfig:
        return ProtocolConfig(
            code=self.build_code(),
            variant=Variant(self.variant),
            r_decoy=self.r,
            noise_p=self.noise,
            decoy_error_threshold=self.threshold,
            permutation_mode=PermutationMode(self.perm_mode),
            announcement_model=AnnouncementModel(self.announce),
            seed=self.seed if seed is None else seed,
        )

    def make_adversary(self):
        kind = AdversaryKind(self.adversary)
        if kind is AdversaryKind.TWICE_H_CNOT:
            return attack.TwiceHCnotAttack(self.knowledge)
        if kind is AdversaryKind.MEASURE_RESEND:
            return attack.MeasureResendAttack()
        return None

    @property
    def experiment_id(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def input_pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        if self.inputs == "exhaustive":
            words = [ecc.int_to_bits(v, self.n) for v in range(1 << self.n)]
            return list(itertools.product(words, words))
        if self.inputs.startswith("fixed:"):
            return [self.fixed_pair()] * self.trials
        pairs = []
        for t in range(self.trials):
            # inputs come from their own entropy so they do not depend on the protocol streams
            rng = np.random.default_rng([self.seed + t, 0x1F])
            x = rng.integers(0, 2, self.n, dtype=np.uint8)
            y = x.copy() if rng.random() < 0.5 else rng.integers(0, 2, self.n, dtype=np.uint8)
            pairs.append((x, y))
        return pairs


@dataclass
class TrialRecord:
    outcome: str
    correct: bool | None
    accuracy: float | None
    word_recovered: bool | None
    decoy_error: float
    transcript_sha: str


def run_trial(spec: ExperimentSpec, t: int, x: np.ndarray, y: np.ndarray) -> TrialRecord:
    cfg = spec.protocol_config(seed=spec.seed + t)
    outcome, transcript, report = run(cfg, x, y, spec.make_adversary())
    correct = None
    if not outcome.aborted:
        correct = (outcome.kind is OutcomeKind.EQUAL) == bool(np.array_equal(x, y))
    accuracy = recovered = None
    if report is not None and report.per_bit_accuracy is not None:
        accuracy = report.per_bit_accuracy
        recovered = report.word_estimate is not None and bool(np.array_equal(report.word_estimate, x))
    return TrialRecord(
        outcome=outcome.kind.value,
        correct=correct,
        accuracy=accuracy,
        word_recovered=recovered,
        decoy_error=decoy_error_rate(transcript),
        transcript_sha=hashlib.sha256(transcript.dumps().encode()).hexdigest(),
    )


def _run_chunk(args) -> list[TrialRecord]:
    spec, jobs = args
    return [run_trial(spec, t, x, y) for t, x, y in jobs]


@dataclass
class StatsReport:
    experiment_id: str
    variant: str
    code: str
    adversary: str
    knowledge: str
    seed: int
    trials: int = 0
    outcomes: dict[str, int] = field(default_factory=dict)
    correctness: float | None = None
    accuracy_mean: float | None = None
    accuracy_sd: float | None = None
    word_recovery_rate: float | None = None
    detection_rate: float | None = None
    mean_decoy_error: float | None = None
    decoy_error_histogram: dict[str, int] = field(default_factory=dict)
    transcript_digest: str = ""
    wall_clock: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StatsReport:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in known})

    def comparable(self) -> dict[str, Any]:
        """Everything except wall-clock time."""
        d = self.to_dict()
        d.pop("wall_clock")
        return d


def _mean(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def aggregate(spec: ExperimentSpec, records: list[TrialRecord], wall_clock: float = 0.0) -> StatsReport:
    rep = StatsReport(
        experiment_id=spec.experiment_id,
        variant=spec.variant,
        code=spec.build_code().name,
        adversary=spec.adversary,
        knowledge=spec.knowledge if spec.adversary == AdversaryKind.TWICE_H_CNOT.value else NA,
        seed=spec.seed,
        trials=len(records),
        wall_clock=wall_clock,
    )
    for kind in OutcomeKind:
        rep.outcomes[kind.value] = sum(r.outcome == kind.value for r in records)
    verdicts = [r.correct for r in records if r.correct is not None]
    rep.correctness = _mean([float(c) for c in verdicts])
    acc = [r.accuracy for r in records if r.accuracy is not None]
    rep.accuracy_mean = _mean(acc)
    rep.accuracy_sd = float(np.std(acc, ddof=1)) if len(acc) > 1 else (0.0 if acc else None)
    rec = [float(r.word_recovered) for r in records if r.word_recovered is not None]
    rep.word_recovery_rate = _mean(rec)
    if spec.adversary != AdversaryKind.NONE.value and records:
        rep.detection_rate = rep.outcomes[OutcomeKind.ABORT_EAVESDROP.value] / len(records)
    rep.mean_decoy_error = _mean([r.decoy_error for r in records])
    for r in records:
        key = f"{r.decoy_error:.6g}"
        rep.decoy_error_histogram[key] = rep.decoy_error_histogram.get(key, 0) + 1
    rep.decoy_error_histogram = dict(sorted(rep.decoy_error_histogram.items(), key=lambda kv: float(kv[0])))
    digest = hashlib.sha256()
    for r in records:
        digest.update(r.transcript_sha.encode())
    rep.transcript_digest = digest.hexdigest()
    return rep


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> StatsReport:
    spec.validate()
    start = time.perf_counter()
    jobs = [(t, x, y) for t, (x, y) in enumerate(spec.input_pairs())]
    if workers > 1 and len(jobs) > 1:
        size = math.ceil(len(jobs) / workers)
        chunks = [(spec, jobs[i:i + size]) for i in range(0, len(jobs), size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [rec for chunk in pool.map(_run_chunk, chunks) for rec in chunk]
    else:
        records = _run_chunk((spec, jobs))
    return aggregate(spec, records, time.perf_counter() - start)


def _csv_cell(value: Any) -> Any:
    if value is None:
        return NA
    if isinstance(value, float):
        return repr(value)
    return value


def emit(report: StatsReport, fmt: str, path: str | Path) -> None:
    """Write a report as CSV (one row) or JSON; a zero-trial report gives a header-only CSV."""
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
        return
    if fmt != "csv":
        raise ConfigError("format", f"expected csv or json, got {fmt!r}")
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        if report.trials:
            row = report.to_dict()
            writer.writerow([_csv_cell(row[c]) for c in CSV_COLUMNS])


def load_report(path: str | Path) -> StatsReport:
    return StatsReport.from_dict(json.loads(Path(path).read_text()))
