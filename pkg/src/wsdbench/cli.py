"""Command-line front end: ``wsdbench <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from urllib.parse import quote

from . import data as ds
from .data import Dataset, SenseDefinition, filter_for_evaluation, read_definitions, read_instances
from .disambiguators import (
    PersonalizedPageRank,
    PprParams,
    TrainingConfig,
    WordExperts,
    expected_random_accuracy,
    first_sense,
    oracle_upper_bound,
    random_choice,
)
from .evaluation import (
    EvalReport,
    EvaluationAborted,
    compare_reports,
    emit_report,
    read_outcomes,
    report_to_json,
    run_evaluation,
    write_outcomes,
)
from .llm import (
    CostLedger,
    DiskCache,
    Gateway,
    MockProvider,
    ModelRef,
    OpenAICompatibleProvider,
    PriceTable,
    ProviderError,
    estimate_tokens,
    load_config,
)
from .llm_wsd import LLMDisambiguator, oracle_script
from .prompts import (
    DefinitionParseError,
    MissingDefinition,
    PromptMode,
    PromptTemplates,
    build_definition_writing_prompt,
    build_prompt,
    parse_written_definitions,
)
from .senses import SenseGraph, SenseId, UnknownSense, load_lexicon, neighborhood

log = logging.getLogger("wsdbench")

SYSTEMS = ("random", "first-sense", "upper-bound", "ppr", "word-expert", "llm")
LLM_MODES = [m.value for m in PromptMode if m is not PromptMode.WRITE_DEFINITIONS]


class UsageError(Exception):
    """Bad invocation or configuration; reported before any work is done."""


def read_lexicon(path, strict: bool = False) -> SenseGraph:
    with open(path, encoding="utf-8") as f:
        return load_lexicon(f, strict=strict)


def _require_file(path, what: str) -> Path:
    if not path:
        raise UsageError(f"{what} is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} not found: {p}")
    return p


def _find_instance(instances, instance_id: str):
    for inst in instances:
        if inst.instance_id == instance_id:
            return inst
    raise UsageError(f"no instance with id {instance_id!r}")


def _make_gateway(args, extra_providers=None) -> Gateway:
    config = load_config(args.config) if getattr(args, "config", None) else {}
    prices = PriceTable.load(args.prices) if getattr(args, "prices", None) else PriceTable.default()
    cache = DiskCache(args.cache_dir) if getattr(args, "cache_dir", None) else None
    providers = {"mock": MockProvider(default_reply=_mock_reply(args))}
    providers.update(extra_providers or {})
    return Gateway.from_config(config, prices=prices, cache=cache, extra_providers=providers, seed=args.seed)


def _mock_reply(args) -> str:
    if getattr(args, "mock_reply_file", None):
        return Path(args.mock_reply_file).read_text(encoding="utf-8")
    return getattr(args, "mock_reply", None) or "1"


def _check_credentials(gateway: Gateway, model: ModelRef) -> None:
    provider = gateway.provider_for(model)
    if isinstance(provider, OpenAICompatibleProvider):
        provider.api_key  # raises AuthError when missing


# -- commands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    instances = read_instances(_require_file(args.input, "--input"))
    kept = filter_for_evaluation(instances)
    unambiguous = sum(len(i.candidates) == 1 for i in instances)
    flagged = sum(bool(i.exclusion_flags) and len(i.candidates) > 1 for i in instances)
    gold_missing = sum(i.gold not in i.candidates for i in kept)
    print(f"instances\t{len(instances)}")
    print(f"unambiguous_removed\t{unambiguous}")
    print(f"flagged_removed\t{flagged}")
    print(f"kept\t{len(kept)}")
    print(f"gold_not_in_candidates\t{gold_missing}")
    print(f"lemmas\t{len({i.lemma for i in kept})}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as f:
            ds.save_instances(kept, f)
    return 0


def cmd_neighbors(args) -> int:
    graph = read_lexicon(_require_file(args.lexicon, "--lexicon"), args.strict)
    try:
        sense = SenseId.parse(args.sense)
        words = neighborhood(graph, sense, args.max, args.child_order)
    except (ValueError, UnknownSense) as exc:
        print(f"error: unknown sense {args.sense!r} ({exc})", file=sys.stderr)
        return 2
    for w in words:
        print(w)
    return 0


def cmd_prompt(args) -> int:
    instances = read_instances(_require_file(args.instances, "--instances"))
    inst = _find_instance(instances, args.id)
    graph = read_lexicon(args.lexicon) if args.lexicon else None
    templates = PromptTemplates(args.templates)
    mode = PromptMode(args.mode)
    if mode is PromptMode.WRITE_DEFINITIONS:
        if graph is None:
            raise UsageError("--lexicon is required for write_definitions prompts")
        group = sorted(c for c in inst.candidates if c.lemma == inst.lemma) or sorted(inst.candidates)
        bundle = build_definition_writing_prompt(group[0].lemma, group, graph, templates)
    else:
        defs = read_definitions(args.definitions) if args.definitions else None
        bundle = build_prompt(mode, inst, graph, defs, templates)
    if args.part in ("system", "both"):
        sys.stdout.write(bundle.system_text)
        sys.stdout.write("\n" if args.part == "system" else "\n\n")
    if args.part in ("user", "both"):
        sys.stdout.write(bundle.user_text + "\n")
    return 0


def _definition_groups(instances) -> list[tuple[str, tuple[SenseId, ...]]]:
    groups = {}
    for inst in instances:
        by_lemma: dict[str, set[SenseId]] = {}
        for c in inst.candidates:
            by_lemma.setdefault(c.lemma, set()).add(c)
        for lemma, senses in by_lemma.items():
            groups.setdefault((lemma, tuple(sorted(senses))), None)
    return sorted(groups)


def cmd_define(args) -> int:
    graph = read_lexicon(_require_file(args.lexicon, "--lexicon"))
    instances = read_instances(_require_file(args.instances, "--instances"))
    if not args.all_instances:
        instances = filter_for_evaluation(instances)
    model = ModelRef.parse(args.model, temperature=args.temperature)
    templates = PromptTemplates(args.templates)
    out = Path(args.out)
    existing = read_definitions(out) if out.is_file() else {}

    todo = [(lemma, group) for lemma, group in _definition_groups(instances)
            if not all(s in existing for s in group)]
    bundles = [(lemma, group, build_definition_writing_prompt(lemma, group, graph, templates)) for lemma, group in todo]
    gateway = _make_gateway(args)
    if args.dry_run:
        _print_projection(gateway, model, [b for _, _, b in bundles], args.assumed_output_tokens)
        return 0
    _check_credentials(gateway, model)

    out.parent.mkdir(parents=True, exist_ok=True)
    errors_path = out.with_name(out.name + ".errors.jsonl")
    n_errors = 0
    with open(out, "a", encoding="utf-8") as sink, open(errors_path, "a", encoding="utf-8") as errs:
        for lemma, group, bundle in bundles:
            completion = gateway.complete(model, bundle.system_text, bundle.user_text)
            try:
                parsed = parse_written_definitions(completion.text, set(bundle.sense_index))
                new = {}
                for n, (definition, example) in parsed.items():
                    sense = bundle.sense_index[n]
                    if sense not in existing:
                        new[sense] = SenseDefinition(sense, definition, example, f"model:{model.model_name}")
            except (DefinitionParseError, ValueError) as exc:
                n_errors += 1
                errs.write(json.dumps({
                    "lemma": lemma, "senses": [str(s) for s in group],
                    "error": str(exc), "reply": completion.text,
                }, ensure_ascii=False) + "\n")
                continue
            ds.save_definitions(new, sink)
            sink.flush()
            existing.update(new)
    if n_errors == 0 and errors_path.stat().st_size == 0:
        errors_path.unlink()
    print(f"requests\t{len(bundles)}")
    print(f"parse_errors\t{n_errors}")
    print(f"dollars\t{gateway.ledger.total_dollars:.6f}")
    return 1 if n_errors else 0


def _print_projection(gateway: Gateway, model: ModelRef, bundles, output_tokens: int) -> None:
    prompt_tokens = sum(estimate_tokens(b.system_text) + estimate_tokens(b.user_text) for b in bundles)
    price = gateway.ledger.prices.get(model.model_name)
    print(f"prompts\t{len(bundles)}")
    print(f"estimated_prompt_tokens\t{prompt_tokens}")
    print(f"assumed_completion_tokens\t{output_tokens * len(bundles)}")
    if price is None:
        print(f"projected_dollars\tunknown (no price for {model.model_name})")
    else:
        print(f"projected_dollars\t{price.cost(prompt_tokens, output_tokens * len(bundles)):.4f}")


def _load_dataset(args) -> Dataset:
    test = read_instances(_require_file(args.test, "--test"))
    train = read_instances(_require_file(args.train, "--train")) if args.train else None
    if not args.no_filter:
        test = filter_for_evaluation(test)
    averaging = ds.MACRO_BY_LEMMA if args.averaging == "macro" else ds.MICRO
    return Dataset(args.name or Path(args.test).stem, test, averaging, train)


def _build_system(args, dataset: Dataset):
    """Returns (disambiguator, gateway or None); raises UsageError on bad config."""
    system = args.system
    if system == "random":
        seed = args.seed
        return (lambda inst: random_choice(inst, seed)), None
    if system == "first-sense":
        return first_sense, None
    if system == "upper-bound":
        return oracle_upper_bound, None
    if system == "ppr":
        graph = read_lexicon(_require_file(args.lexicon, "--lexicon"))
        params = PprParams(args.damping, args.tolerance, args.max_iterations, args.include_target_candidates)
        ppr = PersonalizedPageRank(graph, params)
        missing = [str(c) for i in dataset.test for c in i.candidates if c not in graph]
        if missing:
            raise UsageError(f"{len(missing)} candidate senses missing from lexicon, e.g. {missing[0]}")
        return ppr, None
    if system == "word-expert":
        if dataset.train is None:
            raise UsageError(
                "word-expert needs a training split (--train); supervised word experts are "
                "only meaningful for lexical-sample datasets with a train/test split"
            )
        cfg = TrainingConfig(args.epochs, args.learning_rate, args.regularization, args.seed)
        experts = WordExperts.train(filter_for_evaluation(dataset.train) if not args.no_filter else dataset.train, cfg)
        if args.out:
            models_dir = Path(args.out) / "models"
            models_dir.mkdir(parents=True, exist_ok=True)
            for lemma, model in experts.models.items():
                with open(models_dir / f"{quote(lemma, safe='')}.json", "w", encoding="utf-8") as f:
                    model.dump(f)
        return experts, None

    # llm
    if not args.model:
        raise UsageError("--model is required for --system llm")
    mode = PromptMode(args.mode)
    graph = read_lexicon(_require_file(args.lexicon, "--lexicon")) if args.lexicon else None
    definitions = None
    if mode in (PromptMode.DEFINITION, PromptMode.AUTO_DEFINITION):
        definitions = read_definitions(_require_file(args.definitions, "--definitions"))
        wanted = "human" if mode is PromptMode.DEFINITION else "model"
        if any((d.source == "human") != (wanted == "human") for d in definitions.values()):
            log.warning("definitions file mixes sources; %s mode expects %s-written definitions", mode.value, wanted)
    elif graph is None:
        raise UsageError(f"--lexicon is required for {mode.value} prompts")
    model = ModelRef.parse(args.model, temperature=args.temperature, max_output_tokens=args.max_output_tokens)
    templates = PromptTemplates(args.templates)

    probe = LLMDisambiguator(None, model, mode, graph, definitions, templates, args.fallback_to_neighborhood)
    try:
        bundles = [probe.prompt(i) for i in dataset.test]
    except MissingDefinition as exc:
        raise UsageError(f"no definition for sense {exc.sense_id}; use --fallback-to-neighborhood to mix modes") from None
    except UnknownSense as exc:
        raise UsageError(f"sense {exc} missing from lexicon") from None

    extra = {}
    if model.provider == "mock" and model.model_name == "oracle":
        extra["mock"] = MockProvider(oracle_script(dataset.test, probe.prompt), default_reply="0")
    gateway = _make_gateway(args, extra)
    gateway.provider_for(model)
    if args.dry_run:
        _print_projection(gateway, model, bundles, args.assumed_output_tokens)
        return None, gateway
    _check_credentials(gateway, model)
    probe.gateway = gateway
    return probe, gateway


def cmd_eval(args) -> int:
    dataset = _load_dataset(args)
    disambiguator, gateway = _build_system(args, dataset)
    if disambiguator is None:  # dry run
        return 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = args.system_name or getattr(disambiguator, "name", None) or args.system
    workers = args.workers if args.system == "llm" else 1
    if gateway is not None and args.system == "llm":
        workers = min(workers, max(gateway.concurrency.values(), default=1))

    outcomes_path = out / "outcomes.jsonl"
    try:
        report = run_evaluation(disambiguator, dataset, name, workers)
    except EvaluationAborted as exc:
        with open(outcomes_path, "w", encoding="utf-8") as f:
            write_outcomes(exc.outcomes, f)
        _write_ledger(out, gateway)
        print(f"error: {exc.cause}; {len(exc.outcomes)} outcomes kept in {outcomes_path}", file=sys.stderr)
        return 3
    with open(outcomes_path, "w", encoding="utf-8") as f:
        write_outcomes(report.outcomes, f)
    summary = report_to_json(report)
    if args.system == "random":
        summary["expected_random_accuracy"] = expected_random_accuracy(dataset.test, dataset.averaging)
    (out / "summary.json").write_text(json.dumps(summary, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
    (out / "report.tsv").write_text(emit_report(report, "tsv"), encoding="utf-8")
    (out / "report.md").write_text(emit_report(report, "markdown"), encoding="utf-8")
    _write_ledger(out, gateway)
    print(f"system\t{report.system}")
    print(f"instances\t{len(report.outcomes)}")
    print(f"macro_accuracy\t{report.macro_accuracy:.3f}")
    print(f"micro_accuracy\t{report.micro_accuracy:.3f}")
    for kind, n in report.failures.items():
        if n:
            print(f"failures_{kind}\t{n}")
    if gateway is not None:
        print(f"dollars\t{gateway.ledger.total_dollars:.6f}")
    return 0


def _write_ledger(out: Path, gateway: Gateway | None) -> None:
    if gateway is None:
        return
    with open(out / "ledger.jsonl", "w", encoding="utf-8") as f:
        gateway.ledger.dump(f)
    (out / "costs.json").write_text(json.dumps(gateway.ledger.summary(), indent=2) + "\n", encoding="utf-8")


def _load_run(run_dir) -> EvalReport:
    run = Path(run_dir)
    outcomes_file = run / "outcomes.jsonl" if run.is_dir() else run
    if not outcomes_file.is_file():
        raise UsageError(f"no outcomes file at {outcomes_file}")
    summary_file = outcomes_file.with_name("summary.json")
    meta = json.loads(summary_file.read_text(encoding="utf-8")) if summary_file.is_file() else {}
    with open(outcomes_file, encoding="utf-8") as f:
        outcomes = read_outcomes(f)
    return EvalReport(
        meta.get("system", outcomes_file.parent.name),
        meta.get("dataset", "dataset"),
        outcomes,
        meta.get("averaging", ds.MACRO_BY_LEMMA),
    )


def cmd_report(args) -> int:
    reports = [_load_run(r) for r in args.runs]
    sys.stdout.write(emit_report(reports, args.format))
    return 0


def cmd_compare(args) -> int:
    a, b = _load_run(args.run_a), _load_run(args.run_b)
    try:
        table = compare_reports(a, b)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(table.to_tsv())
    return 0


def cmd_costs(args) -> int:
    prices = PriceTable.load(args.prices) if args.prices else PriceTable.default()
    path = Path(args.ledger)
    if path.is_dir():
        path = path / "ledger.jsonl"
    with open(_require_file(path, "ledger"), encoding="utf-8") as f:
        ledger = CostLedger.load(f, prices)
    print("model\tcalls\tprompt_tokens\tcompletion_tokens\tdollars\tdollars_per_call")
    for model, s in sorted(ledger.summary().items()):
        print(f"{model}\t{s['calls']}\t{s['prompt_tokens']}\t{s['completion_tokens']}"
              f"\t{s['dollars']:.6f}\t{s['dollars_per_call']:.6f}")
    print(f"total\t{len(ledger)}\t\t\t{ledger.total_dollars:.6f}\t")
    return 0


# -- argument parsing -------------------------------------------------------

def _add_gateway_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", help="provider:model, e.g. openai:gpt-4o or mock:oracle")
    p.add_argument("--config", help="gateway config JSON (providers, retry, defaults)")
    p.add_argument("--prices", help="price table JSON (USD per million tokens)")
    p.add_argument("--cache-dir", help="on-disk completion cache directory")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-output-tokens", type=int, default=1024)
    p.add_argument("--templates", help="directory overriding packaged prompt templates")
    p.add_argument("--mock-reply", help="default reply of the mock provider")
    p.add_argument("--mock-reply-file", help="read the mock provider's default reply from a file")
    p.add_argument("--dry-run", action="store_true", help="print prompt count and projected cost, then stop")
    p.add_argument("--assumed-output-tokens", type=int, default=150)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsdbench", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate an instance file and apply evaluation filters")
    p.add_argument("--input", required=True)
    p.add_argument("--out", help="write the filtered instances here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("neighbors", help="print the neighbor lemmas used in prompts")
    p.add_argument("--lexicon", required=True)
    p.add_argument("sense")
    p.add_argument("--max", type=int, default=4)
    p.add_argument("--child-order", choices=("lexicon", "sorted"), default="lexicon")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("prompt", help="render the prompt for one instance")
    p.add_argument("--instances", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--mode", choices=[m.value for m in PromptMode], default="neighborhood")
    p.add_argument("--lexicon")
    p.add_argument("--definitions")
    p.add_argument("--templates")
    p.add_argument("--part", choices=("system", "user", "both"), default="both")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("define", help="have a model write sense definitions from neighborhoods")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--instances", required=True)
    p.add_argument("--out", required=True, help="definitions JSONL (appended to; existing senses are skipped)")
    p.add_argument("--all-instances", action="store_true", help="do not apply evaluation filters first")
    p.add_argument("--seed", type=int, default=0)
    _add_gateway_args(p)
    p.set_defaults(func=cmd_define, model="openai:gpt-4o")

    p = sub.add_parser("eval", help="run one system over a dataset")
    p.add_argument("--system", choices=SYSTEMS, required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--train")
    p.add_argument("--name", help="dataset name (defaults to the test file stem)")
    p.add_argument("--system-name")
    p.add_argument("--averaging", choices=("macro", "micro"), default="micro")
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--lexicon")
    p.add_argument("--mode", choices=LLM_MODES, default="neighborhood")
    p.add_argument("--definitions")
    p.add_argument("--fallback-to-neighborhood", action="store_true")
    p.add_argument("--out", default="runs/latest")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--damping", type=float, default=0.85)
    p.add_argument("--tolerance", type=float, default=1e-8)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--include-target-candidates", action="store_true")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--regularization", type=float, default=1e-4)
    _add_gateway_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="per-lemma table for one or more runs")
    p.add_argument("runs", nargs="+", help="run directories or outcomes files")
    p.add_argument("--format", choices=("tsv", "markdown"), default="tsv")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="per-lemma accuracy differences between two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("costs", help="summarize a cost ledger")
    p.add_argument("ledger", help="ledger.jsonl or a run directory")
    p.add_argument("--prices")
    p.set_defaults(func=cmd_costs)
    return parser


def _apply_config_defaults(parser: argparse.ArgumentParser, argv) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    defaults = (load_config(known.config).get("defaults") or {})
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            dests = {a.dest for a in sp._actions}
            sp.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items() if k.replace("-", "_") in dests})


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        _apply_config_defaults(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ds.DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProviderError as exc:
        print(f"error: provider failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
