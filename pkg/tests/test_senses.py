import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import S, random_graph
from wsdbench.senses import LexiconError, SenseEntry, SenseGraph, SenseId, UnknownSense, load_lexicon, neighborhood

AMNE_FIXTURE = (
    "# sense\tpd\tsds\n"
    "PRIM..1\t\t\n"
    "vad..1\tPRIM..1\t\n"
    "ämne..1\tvad..1\t\n"
    "metall..1\tämne..1\t\n"
    "gift..1\tämne..1\t\n"
    "ämnesnamn..1\tämne..1\t\n"
)


def load(text, strict=False):
    return load_lexicon(io.StringIO(text), strict=strict)


lemmas = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=12).filter(
    lambda s: ".." not in s and s == s.strip() and not s.endswith(".")
)


@given(lemmas, st.integers(min_value=1, max_value=10**6))
def test_sense_id_round_trip(lemma, n):
    s = SenseId(lemma, n)
    assert SenseId.parse(str(s)) == s


@pytest.mark.parametrize("bad", ["ämne", "ämne..0", "..1", "a..b..1", "ämne..x", ""])
def test_sense_id_rejects(bad):
    with pytest.raises(ValueError):
        SenseId.parse(bad)


def test_sense_order_is_lemma_then_number():
    assert sorted([S("öppna..2"), S("öppna..10"), S("öppna..1"), S("bryta..3")]) == [
        S("bryta..3"), S("öppna..1"), S("öppna..2"), S("öppna..10")]


def test_entry_invariants():
    a, b = S("a..1"), S("b..1")
    with pytest.raises(ValueError):
        SenseEntry(a, a)
    with pytest.raises(ValueError):
        SenseEntry(a, None, (a,))
    with pytest.raises(ValueError):
        SenseEntry(a, b, (b,))
    with pytest.raises(ValueError):
        SenseEntry(a, None, (b, b))


def test_load_amne_fixture():
    g = load(AMNE_FIXTURE, strict=True)
    assert len(g) == 6
    assert g.inverse_pd_index[S("ämne..1")] == (S("metall..1"), S("gift..1"), S("ämnesnamn..1"))
    assert g[S("ämne..1")].primary_descriptor == S("vad..1")


def test_neighborhood_amne():
    g = load(AMNE_FIXTURE)
    assert neighborhood(g, S("ämne..1")) == ["vad", "metall", "gift", "ämnesnamn"]


def test_empty_stream():
    g = load("")
    assert len(g) == 0 and dict(g.inverse_pd_index) == {}


def test_dangling_reference_strict_vs_lenient():
    text = "a..1\tghost..1\t\nb..1\ta..1\tghost..2\n"
    g = load(text)
    assert S("a..1") in g and S("ghost..1") not in g
    assert neighborhood(g, S("a..1")) == ["b"]
    assert neighborhood(g, S("b..1")) == ["a"]
    with pytest.raises(LexiconError):
        load(text, strict=True)


def test_duplicate_and_malformed_lines_report_line_numbers():
    with pytest.raises(LexiconError, match="line 3"):
        load("a..1\t\t\n# c\na..1\t\t\n")
    with pytest.raises(LexiconError, match="line 2"):
        load("a..1\t\t\nnot-a-sense\t\t\n")
    with pytest.raises(LexiconError, match="line 1"):
        load("a..1\t\t\t\textra\n")


def test_multiword_lemmas_in_descriptor_lists():
    g = load("a..1\t\tbryta upp..1 b..2\nbryta upp..1\t\t\nb..2\t\t\n", strict=True)
    assert g[S("a..1")].secondary_descriptors == (S("bryta upp..1"), S("b..2"))
    assert neighborhood(g, S("a..1")) == ["bryta upp", "b"]


def test_isolated_sense_has_no_neighbors():
    g = load("lone..1\t\t\n")
    assert neighborhood(g, S("lone..1")) == []


def test_unknown_sense():
    with pytest.raises(UnknownSense):
        neighborhood(load(AMNE_FIXTURE), S("nope..1"))


def _pd_with_children(order):
    lines = ["p..1\t\t", "s..1\tp..1\tz..1"] + [f"{c}\ts..1\t" for c in order] + ["z..1\t\t"]
    return load("\n".join(lines) + "\n")


def test_pd_plus_five_children():
    # children listed out of (lemma, sense_no) order in the file
    order = ["e..1", "b..2", "d..1", "a..1", "b..1"]
    g = _pd_with_children(order)
    assert neighborhood(g, S("s..1")) == ["p", "e", "b", "d"]
    assert neighborhood(g, S("s..1"), child_order="sorted") == ["p", "a", "b", "b"]
    assert len(neighborhood(g, S("s..1"), max_neighbors=10)) == 7
    # secondary descriptor is appended last
    assert neighborhood(g, S("s..1"), max_neighbors=10)[-1] == "z"


def test_secondary_descriptors_fill_remaining_slots():
    g = load("a..1\tb..1\tc..1 d..1 e..1 f..1\nb..1\t\t\nc..1\t\t\nd..1\t\t\ne..1\t\t\nf..1\t\t\n")
    assert neighborhood(g, S("a..1")) == ["b", "c", "d", "e"]
    assert neighborhood(g, S("a..1"), max_neighbors=2) == ["b", "c"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 15), st.integers(1, 6))
def test_graph_properties(seed, n, max_n):
    g, ids = random_graph(random.Random(seed), n)
    # transpose consistency
    for y in ids:
        for x in g.inverse_pd_index.get(y, ()):
            assert g[x].primary_descriptor == y
    for x in ids:
        pd = g[x].primary_descriptor
        if pd is not None:
            assert x in g.inverse_pd_index[pd]
    for s in ids:
        nb = neighborhood(g, s, max_n)
        assert len(nb) <= max_n
        if g[s].primary_descriptor is not None:
            assert nb[0] == g[s].primary_descriptor.lemma


def test_loading_is_deterministic():
    text = AMNE_FIXTURE + "ämne..2\tvad..1\tmetall..1\n"
    a, b = load(text), load(text)
    assert a == b
    assert list(a.entries) == list(b.entries)
    assert list(a.inverse_pd_index.items()) == list(b.inverse_pd_index.items())


def test_shipped_lexicon_loads_strictly(lexicon):
    assert neighborhood(lexicon, S("öppna..1")) == ["öppen", "bryta", "bryta upp", "dekantera"]
    assert neighborhood(lexicon, S("öppna..2")) == ["starta", "öppnande", "verksamhet"]
