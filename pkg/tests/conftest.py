import random
import sys
from pathlib import Path

import pytest

from wsdbench.data import Dataset, Instance, read_definitions, read_instances
from wsdbench.senses import SenseEntry, SenseGraph, SenseId, load_lexicon

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
GOLDEN = Path(__file__).resolve().parent / "fixtures" / "golden"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def S(text: str) -> SenseId:
    return SenseId.parse(text)


def make_instance(iid, lemma, candidates, gold, tokens=None, target=None, flags=()):
    tokens = tokens or ["x", lemma, "y"]
    target = target or (0, tokens.index(lemma) if lemma in tokens else 0)
    return Instance(
        instance_id=iid,
        lemma=lemma,
        sentences=[tokens],
        target=target,
        candidates=[S(c) if isinstance(c, str) else c for c in candidates],
        gold=S(gold) if isinstance(gold, str) else gold,
        exclusion_flags=flags,
    )


def random_dataset(rng: random.Random, n: int, n_lemmas: int = 5, max_k: int = 5, p_missing: float = 0.05):
    instances = []
    for i in range(n):
        lemma = f"lem{rng.randrange(n_lemmas)}"
        k = rng.randint(2, max_k)
        cands = [SenseId(lemma, j) for j in range(1, k + 1)]
        gold = SenseId(lemma, k + 1) if rng.random() < p_missing else rng.choice(cands)
        rng.shuffle(cands)
        instances.append(make_instance(f"i{i}", lemma, cands, gold, tokens=["x", lemma, f"y{i}"]))
    return Dataset("synthetic", instances)


def random_graph(rng: random.Random, n: int) -> tuple[SenseGraph, list[SenseId]]:
    ids = [SenseId(f"w{i}", rng.randint(1, 3)) for i in range(n)]
    entries = []
    for s in ids:
        others = [x for x in ids if x != s]
        pd = rng.choice(others) if others and rng.random() < 0.8 else None
        rest = [x for x in others if x != pd]
        sds = rng.sample(rest, min(len(rest), rng.randint(0, 2))) if rng.random() < 0.4 else []
        entries.append(SenseEntry(s, pd, tuple(sds)))
    return SenseGraph.from_entries(entries), ids


@pytest.fixture(scope="session")
def lexicon():
    with open(FIXTURES / "lexicon.tsv", encoding="utf-8") as f:
        return load_lexicon(f, strict=True)


@pytest.fixture(scope="session")
def oppna():
    return read_instances(FIXTURES / "instances.jsonl")[0]


@pytest.fixture(scope="session")
def oppna_definitions():
    return read_definitions(FIXTURES / "definitions.jsonl")


def golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
