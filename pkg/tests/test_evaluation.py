import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import S, golden, make_instance, random_dataset
from wsdbench.data import MACRO_BY_LEMMA, Dataset
from wsdbench.disambiguators import (
    PARSE_FAILURE,
    PROVIDER_ERROR,
    ZERO_ANSWER,
    Abstention,
    Prediction,
    first_sense,
    oracle_upper_bound,
    random_choice,
)
from wsdbench.evaluation import (
    EvalReport,
    EvaluationAborted,
    Outcome,
    compare_reports,
    emit_report,
    read_outcomes,
    run_evaluation,
    write_outcomes,
)
from wsdbench.llm import CostLedger, Gateway, MockProvider, ModelRef, PermanentProviderError, RetriesExhausted
from wsdbench.llm_wsd import LLMDisambiguator, oracle_script
from wsdbench.prompts import PromptMode
from wsdbench.senses import SenseEntry, SenseGraph


def two_lemma_dataset():
    # lemma A: 1 of 2 correct under "gold-if-odd"; lemma B: 3 of 3
    insts = [
        make_instance("a1", "A", ["A..1", "A..2"], "A..1"),
        make_instance("a2", "A", ["A..1", "A..2"], "A..2"),
        make_instance("b1", "B", ["B..1", "B..2"], "B..2"),
        make_instance("b2", "B", ["B..1", "B..2"], "B..2"),
        make_instance("b3", "B", ["B..1", "B..2", "B..3"], "B..2"),
    ]
    return Dataset("two", insts, MACRO_BY_LEMMA)


def picker(choice):
    return lambda inst: Prediction(S(choice[inst.instance_id]), "sys")


FIXED = {"a1": "A..1", "a2": "A..1", "b1": "B..2", "b2": "B..2", "b3": "B..2"}


def test_macro_and_micro_by_hand():
    r = run_evaluation(picker(FIXED), two_lemma_dataset(), "sys")
    assert r.per_lemma == {"A": (2, 0.5), "B": (3, 1.0)}
    assert r.macro_accuracy == 0.75
    assert r.micro_accuracy == 0.8
    assert r.accuracy == 0.75


def test_oracle_reaches_upper_bound():
    ds = random_dataset(random.Random(1), 300, p_missing=0.1)
    r = run_evaluation(oracle_upper_bound, ds)
    ub_micro = sum(i.gold in i.candidates for i in ds.test) / len(ds.test)
    assert r.micro_accuracy == ub_micro
    per = {}
    for i in ds.test:
        per.setdefault(i.lemma, []).append(i.gold in i.candidates)
    assert r.macro_accuracy == pytest.approx(sum(sum(v) / len(v) for v in per.values()) / len(per))
    assert r.failures["not_present"] == sum(i.gold not in i.candidates for i in ds.test)


def test_all_failures():
    ds = two_lemma_dataset()
    r = run_evaluation(lambda i: Abstention(PARSE_FAILURE, "x"), ds)
    assert r.micro_accuracy == 0 and r.macro_accuracy == 0
    assert r.failures[PARSE_FAILURE] == 5


def test_prediction_outside_candidates_rejected():
    with pytest.raises(EvaluationAborted):
        run_evaluation(lambda i: Prediction(S("Z..1"), "bad"), two_lemma_dataset())


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 8))
def test_macro_equals_micro_for_balanced_lemmas(seed, n_lemmas, per_lemma):
    rng = random.Random(seed)
    insts = []
    for l in range(n_lemmas):
        for j in range(per_lemma):
            insts.append(make_instance(f"{l}-{j}", f"l{l}", [f"l{l}..1", f"l{l}..2"], f"l{l}..{rng.randint(1, 2)}"))
    r = run_evaluation(lambda i: random_choice(i, seed), Dataset("bal", insts))
    assert r.macro_accuracy == pytest.approx(r.micro_accuracy, abs=1e-12)
    assert sum(n for n, _ in r.per_lemma.values()) == len(insts)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_no_system_beats_the_oracle(seed):
    ds = random_dataset(random.Random(seed), 60, p_missing=0.2)
    ub = run_evaluation(oracle_upper_bound, ds)
    for system in (first_sense, lambda i: random_choice(i, seed)):
        r = run_evaluation(system, ds)
        assert r.micro_accuracy <= ub.micro_accuracy
        for lemma, (_, acc) in r.per_lemma.items():
            assert acc <= ub.per_lemma[lemma][1]


def test_parallel_run_matches_serial():
    ds = random_dataset(random.Random(2), 200)
    a = run_evaluation(lambda i: random_choice(i, 3), ds, "r")
    b = run_evaluation(lambda i: random_choice(i, 3), ds, "r", workers=8)
    assert a.outcomes == b.outcomes
    assert emit_report(a) == emit_report(b)


def test_outcome_invariant_and_round_trip():
    r = run_evaluation(oracle_upper_bound, random_dataset(random.Random(4), 50, p_missing=0.3))
    for o in r.outcomes:
        assert o.correct == (o.predicted == o.gold)
    buf = io.StringIO()
    write_outcomes(r.outcomes, buf)
    assert read_outcomes(buf.getvalue().splitlines()) == r.outcomes


def test_emit_empty_report():
    r = EvalReport("sys", "d", [])
    assert emit_report(r, "tsv") == "Lemma\tN\tsys\n"
    assert emit_report(r, "markdown") == "| Lemma | N | sys |\n|---|---:|---:|\n"


def test_emit_report_golden():
    r = run_evaluation(picker(FIXED), two_lemma_dataset(), "sys")
    assert emit_report(r, "tsv") == golden("report.tsv")


def test_emit_comparison_golden():
    ds = two_lemma_dataset()
    a = run_evaluation(picker(FIXED), ds, "sys")
    b = run_evaluation(first_sense, ds, "first-sense")
    assert emit_report([a, b], "markdown") == golden("report_compare.md")


def test_emit_is_order_independent():
    r = run_evaluation(picker(FIXED), two_lemma_dataset(), "sys")
    shuffled = EvalReport("sys", "two", list(reversed(r.outcomes)))
    assert emit_report(shuffled) == emit_report(r)


def test_compare_reports():
    ds = random_dataset(random.Random(5), 100)
    oracle = run_evaluation(oracle_upper_bound, ds, "oracle")
    rnd = run_evaluation(lambda i: random_choice(i, 0), ds, "random")
    same = compare_reports(oracle, oracle)
    assert all(d == 0 for *_, d in same.rows.values()) and same.macro_delta == 0
    delta = compare_reports(oracle, rnd)
    assert delta.micro_delta > 0 and delta.macro_delta > 0
    assert "(macro)" in delta.to_tsv()
    other = run_evaluation(oracle_upper_bound, random_dataset(random.Random(6), 10), "x")
    with pytest.raises(ValueError):
        compare_reports(oracle, other)


# -- LLM pipeline through the mock provider ---------------------------------

def synthetic_graph(ds):
    entries = {}
    for inst in ds.test:
        for s in list(inst.candidates) + [inst.gold]:
            entries[s] = SenseEntry(s)
    return SenseGraph.from_entries(entries.values())


def llm_system(ds, provider, mode=PromptMode.NEIGHBORHOOD):
    gw = Gateway({"mock": provider}, sleep=lambda s: None)
    return LLMDisambiguator(gw, ModelRef("mock", "m"), mode, synthetic_graph(ds))


def test_oracle_script_reaches_upper_bound():
    ds = random_dataset(random.Random(7), 120, p_missing=0.1)
    system = llm_system(ds, MockProvider())
    system.gateway.providers["mock"].script = oracle_script(ds.test, system.prompt)
    r = run_evaluation(system, ds)
    ub = run_evaluation(oracle_upper_bound, ds)
    assert r.micro_accuracy == ub.micro_accuracy and r.macro_accuracy == ub.macro_accuracy
    assert r.failures[ZERO_ANSWER] == ub.failures["not_present"]


def test_prose_replies_are_parse_failures():
    ds = random_dataset(random.Random(8), 20)
    r = run_evaluation(llm_system(ds, MockProvider(default_reply="Sense 2 is correct.")), ds)
    assert r.micro_accuracy == 0 and r.failures[PARSE_FAILURE] == 20


class Rejecting:
    def send(self, model, system, user):
        raise PermanentProviderError("context too long", 400)


class Down:
    def __init__(self, ok):
        self.ok = ok
        self.calls = 0

    def send(self, model, system, user):
        from wsdbench.llm import ProviderReply, TransientProviderError

        self.calls += 1
        if self.calls > self.ok:
            raise TransientProviderError("HTTP 503", 503)
        return ProviderReply("1")


def test_rejected_request_becomes_provider_error_outcome():
    ds = random_dataset(random.Random(9), 5)
    r = run_evaluation(llm_system(ds, Rejecting()), ds)
    assert r.failures[PROVIDER_ERROR] == 5


def test_exhausted_retries_abort_with_partial_outcomes():
    ds = random_dataset(random.Random(10), 10)
    with pytest.raises(EvaluationAborted) as info:
        run_evaluation(llm_system(ds, Down(ok=4)), ds)
    assert isinstance(info.value.cause, RetriesExhausted)
    assert len(info.value.outcomes) == 4


def test_oracle_script_rejects_conflicting_prompts():
    a = make_instance("a", "A", ["A..1", "A..2"], "A..1")
    b = make_instance("b", "A", ["A..1", "A..2"], "A..2")
    ds = Dataset("d", [a, b])
    system = llm_system(ds, MockProvider())
    with pytest.raises(ValueError):
        oracle_script(ds.test, system.prompt)
