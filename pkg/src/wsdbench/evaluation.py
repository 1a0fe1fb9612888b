"""Scoring runs into per-lemma and macro/micro accuracies, and report rendering."""
from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import IO, Callable, Iterable, Sequence

from .data import MACRO_BY_LEMMA, Dataset, Instance
from .disambiguators.base import FAILURE_KINDS, Abstention, Disambiguator, Prediction
from .senses import SenseId


@dataclass(frozen=True)
class Outcome:
    instance_id: str
    lemma: str
    predicted: SenseId | None
    gold: SenseId
    failure_kind: str | None = None

    @property
    def correct(self) -> bool:
        return self.predicted is not None and self.predicted == self.gold

    def to_record(self) -> dict:
        return {
            "id": self.instance_id,
            "lemma": self.lemma,
            "predicted": None if self.predicted is None else str(self.predicted),
            "gold": str(self.gold),
            "correct": self.correct,
            "failure": self.failure_kind,
        }

    @classmethod
    def from_record(cls, rec) -> "Outcome":
        pred = rec.get("predicted")
        return cls(
            rec["id"], rec["lemma"], None if pred is None else SenseId.parse(pred),
            SenseId.parse(rec["gold"]), rec.get("failure"),
        )


@dataclass
class EvalReport:
    system: str
    dataset: str
    outcomes: list[Outcome]
    averaging: str = MACRO_BY_LEMMA
    per_lemma: dict[str, tuple[int, float]] = field(init=False)
    macro_accuracy: float = field(init=False)
    micro_accuracy: float = field(init=False)
    failures: dict[str, int] = field(init=False)

    def __post_init__(self):
        counts: dict[str, list[int]] = {}
        for o in self.outcomes:
            c = counts.setdefault(o.lemma, [0, 0])
            c[0] += 1
            c[1] += o.correct
        self.per_lemma = {lemma: (n, k / n) for lemma, (n, k) in sorted(counts.items())}
        n_total = len(self.outcomes)
        self.micro_accuracy = sum(o.correct for o in self.outcomes) / n_total if n_total else 0.0
        accs = [acc for _, acc in self.per_lemma.values()]
        self.macro_accuracy = sum(accs) / len(accs) if accs else 0.0
        kinds = Counter(o.failure_kind for o in self.outcomes if o.failure_kind)
        self.failures = {k: kinds.get(k, 0) for k in FAILURE_KINDS}

    @property
    def accuracy(self) -> float:
        """The headline figure for the dataset's averaging convention."""
        return self.macro_accuracy if self.averaging == MACRO_BY_LEMMA else self.micro_accuracy

    @property
    def instance_ids(self) -> frozenset[str]:
        return frozenset(o.instance_id for o in self.outcomes)


class EvaluationAborted(RuntimeError):
    """An unrecoverable error stopped the run; ``outcomes`` holds what finished."""

    def __init__(self, cause: BaseException, outcomes: list[Outcome]):
        super().__init__(f"evaluation aborted after {len(outcomes)} outcomes: {cause}")
        self.cause = cause
        self.outcomes = outcomes


def score(instance: Instance, result) -> Outcome:
    if isinstance(result, Prediction):
        if result.chosen not in instance.candidates:
            raise ValueError(f"{instance.instance_id}: prediction {result.chosen} is not a candidate")
        return Outcome(instance.instance_id, instance.lemma, result.chosen, instance.gold)
    if isinstance(result, Abstention):
        return Outcome(instance.instance_id, instance.lemma, None, instance.gold, result.kind)
    raise TypeError(f"unexpected disambiguator result {result!r}")


def run_evaluation(
    disambiguator: Disambiguator,
    dataset: Dataset,
    system: str | None = None,
    workers: int = 1,
    on_outcome: Callable[[Outcome], None] | None = None,
) -> EvalReport:
    """Run ``disambiguator`` over the test split.

    With ``workers > 1`` instances are processed on a thread pool; the report
    lists outcomes in dataset order regardless.
    """
    name = system or getattr(disambiguator, "name", None) or getattr(disambiguator, "__name__", "system")
    instances = dataset.test
    slots: list[Outcome | None] = [None] * len(instances)

    def one(i: int) -> None:
        outcome = score(instances[i], disambiguator(instances[i]))
        slots[i] = outcome
        if on_outcome is not None:
            on_outcome(outcome)

    try:
        if workers <= 1:
            for i in range(len(instances)):
                one(i)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                for fut in [pool.submit(one, i) for i in range(len(instances))]:
                    fut.result()
    except Exception as exc:
        raise EvaluationAborted(exc, [o for o in slots if o is not None]) from exc
    return EvalReport(name, dataset.name, slots, dataset.averaging)


def write_outcomes(outcomes: Iterable[Outcome], sink: IO[str]) -> None:
    for o in outcomes:
        sink.write(json.dumps(o.to_record(), ensure_ascii=False) + "\n")


def read_outcomes(source: Iterable[str]) -> list[Outcome]:
    return [Outcome.from_record(json.loads(line)) for line in source if line.strip()]


def report_to_json(report: EvalReport) -> dict:
    return {
        "system": report.system,
        "dataset": report.dataset,
        "averaging": report.averaging,
        "n": len(report.outcomes),
        "macro_accuracy": report.macro_accuracy,
        "micro_accuracy": report.micro_accuracy,
        "failures": report.failures,
        "per_lemma": {k: {"n": n, "accuracy": a} for k, (n, a) in report.per_lemma.items()},
    }


def emit_report(reports: EvalReport | Sequence[EvalReport], fmt: str = "tsv") -> str:
    """Per-lemma accuracy table (4 decimals) followed by macro/micro rows (3 decimals).

    Passing several reports over the same dataset gives one accuracy column
    per system.
    """
    if isinstance(reports, EvalReport):
        reports = [reports]
    if not reports:
        raise ValueError("no reports to render")
    if len({r.dataset for r in reports}) > 1:
        raise ValueError("reports cover different datasets")
    header = ["Lemma", "N"] + [r.system for r in reports]
    rows: list[list[str]] = []
    lemmas = sorted(set().union(*(r.per_lemma for r in reports)))
    for lemma in lemmas:
        n = next(r.per_lemma[lemma][0] for r in reports if lemma in r.per_lemma)
        rows.append([lemma, str(n)] + [
            f"{r.per_lemma[lemma][1]:.4f}" if lemma in r.per_lemma else "" for r in reports
        ])
    if lemmas:
        total = str(len(reports[0].outcomes))
        rows.append(["(macro)", total] + [f"{r.macro_accuracy:.3f}" for r in reports])
        rows.append(["(micro)", total] + [f"{r.micro_accuracy:.3f}" for r in reports])

    if fmt == "tsv":
        return "".join("\t".join(line) + "\n" for line in [header] + rows)
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] + ["---:"] * (len(header) - 1)) + "|"]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


@dataclass(frozen=True)
class DeltaTable:
    system_a: str
    system_b: str
    rows: dict[str, tuple[int, float, float, float]]  # lemma -> (n, acc_a, acc_b, a - b)
    macro_delta: float
    micro_delta: float

    def to_tsv(self) -> str:
        out = [f"Lemma\tN\t{self.system_a}\t{self.system_b}\tdelta\n"]
        for lemma, (n, a, b, d) in self.rows.items():
            out.append(f"{lemma}\t{n}\t{a:.4f}\t{b:.4f}\t{d:+.4f}\n")
        out.append(f"(macro)\t\t\t\t{self.macro_delta:+.3f}\n")
        out.append(f"(micro)\t\t\t\t{self.micro_delta:+.3f}\n")
        return "".join(out)


def compare_reports(a: EvalReport, b: EvalReport) -> DeltaTable:
    if a.dataset != b.dataset or a.instance_ids != b.instance_ids:
        raise ValueError(f"cannot compare runs over different datasets ({a.dataset!r} vs {b.dataset!r})")
    rows = {}
    for lemma, (n, acc_a) in a.per_lemma.items():
        acc_b = b.per_lemma[lemma][1]
        rows[lemma] = (n, acc_a, acc_b, acc_a - acc_b)
    return DeltaTable(a.system, b.system, rows, a.macro_accuracy - b.macro_accuracy, a.micro_accuracy - b.micro_accuracy)
