import random

from hypothesis import given, settings
from hypothesis import strategies as st

from contextreact.tools import (
    TRUNCATION_MARKER,
    MockCorpus,
    ToolCall,
    ToolRegistry,
    execute,
    http_registry,
    mock_registry,
    tokenize,
    truncate_bytes,
)

DOCS = [
    {"id": "a", "title": "Alpha report", "text": "alpha numbers for the year."},
    {"id": "b", "title": "Beta notes", "text": "nothing relevant here."},
    {"id": "c", "title": "Gamma", "text": "gamma rays and more gamma."},
]


def corpus(**kw):
    kw.setdefault("padding_tokens", 0)
    return MockCorpus(DOCS, **kw)


def test_final_answer_terminates():
    r = execute(ToolCall("final_answer", {"answer": "42"}), ToolRegistry())
    assert r.ok and r.final and r.answer == "42"


def test_unknown_tool_names_valid_ones():
    reg = mock_registry(corpus())
    r = execute(ToolCall("searchh", {"query": "x"}), reg)
    assert not r.ok
    for name in ("fetch", "final_answer", "search"):
        assert name in r.text


def test_bad_arguments_and_failures_are_observations():
    reg = mock_registry(corpus())
    r = execute(ToolCall("search", {}), reg)
    assert not r.ok and "bad arguments" in r.text
    r = execute(ToolCall("fetch", {"id": "nope"}), reg)
    assert not r.ok and "nope" in r.text
    r = execute(ToolCall("final_answer", {}), reg)
    assert not r.ok and not r.final


def brute_rank(docs, query):
    terms = tokenize(query)
    scored = []
    for i, d in enumerate(docs):
        words = tokenize(d["title"] + " " + d["text"])
        score = sum(words.count(t) for t in terms)
        if score:
            scored.append((-score, i, d["id"]))
    return [doc_id for _, _, doc_id in sorted(scored)]


def test_search_single_match_first():
    c = corpus()
    assert c.rank("alpha") == ["a"]
    text = execute(ToolCall("search", {"query": "alpha"}), mock_registry(c)).text
    assert text.splitlines()[1].startswith("1. [a] Alpha report")


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_rank_matches_brute_force(seed):
    rng = random.Random(seed)
    vocab = ["alpha", "beta", "gamma", "delta", "eps"]
    docs = [
        {"id": f"d{i}", "title": rng.choice(vocab), "text": " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 8)))}
        for i in range(rng.randint(1, 8))
    ]
    query = " ".join(rng.choice(vocab + ["zzz"]) for _ in range(rng.randint(1, 3)))
    assert MockCorpus(docs, padding_tokens=0).rank(query) == brute_rank(docs, query)


def test_no_results():
    assert execute(ToolCall("search", {"query": "zzz"}), mock_registry(corpus())).text == 'No results for "zzz".'


def test_padding_deterministic_and_sized():
    a = mock_registry(corpus(padding_tokens=2000, seed=3))
    b = mock_registry(corpus(padding_tokens=2000, seed=3))
    c = mock_registry(corpus(padding_tokens=2000, seed=4))
    call = ToolCall("fetch", {"id": "a"})
    ra, rb, rc = execute(call, a), execute(call, b), execute(call, c)
    assert ra.text == rb.text and ra.text != rc.text
    assert 1990 <= ra.token_estimate <= 2010
    assert ra.text.startswith("Document a: Alpha report\nalpha numbers")


def test_default_padding_is_about_2000_tokens():
    r = execute(ToolCall("fetch", {"id": "b"}), mock_registry(MockCorpus(DOCS)))
    assert 1990 <= r.token_estimate <= 2010


def test_fetch_truncation():
    r = execute(ToolCall("fetch", {"id": "a"}), mock_registry(corpus(padding_tokens=2000), fetch_cap=100))
    assert r.text.endswith(TRUNCATION_MARKER)
    assert len(r.text.encode()) <= 100 + len(TRUNCATION_MARKER.encode())


@settings(max_examples=300, deadline=None)
@given(st.text(), st.integers(0, 64))
def test_truncate_bytes_bound(text, cap):
    out = truncate_bytes(text, cap)
    data = out.encode("utf-8")
    if len(text.encode("utf-8")) <= cap:
        assert out == text
    else:
        assert out.endswith(TRUNCATION_MARKER)
        body = out[: -len(TRUNCATION_MARKER)]
        assert text.startswith(body)
        assert len(data) <= cap + len(TRUNCATION_MARKER.encode())


def test_load_corpus(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id":"x","title":"T","text":"body text"}\n\n', encoding="utf-8")
    c = MockCorpus.load(p, padding_tokens=0)
    assert c.fetch("x") == "Document x: T\nbody text"


def test_http_tools(stub):
    stub.routes["/search"] = [(200, {"results": [{"title": "T1", "url": f"{stub.url}/page", "snippet": "s1"}]})]
    stub.routes["/page"] = [(200, "p" * 50)]
    stub.routes["/gone"] = [(500, "boom")]
    reg = http_registry(f"{stub.url}/search", fetch_cap=10)
    r = execute(ToolCall("search", {"query": "who"}), reg)
    assert r.ok and r.text == f'Search results for "who":\n1. [{stub.url}/page] T1 | s1'
    assert stub.requests[-1][1] == "/search?q=who"
    r = execute(ToolCall("fetch", {"url": f"{stub.url}/page"}), reg)
    assert r.text == "p" * 10 + TRUNCATION_MARKER
    r = execute(ToolCall("fetch", {"url": f"{stub.url}/gone"}), reg)
    assert not r.ok and "500" in r.text
    r = execute(ToolCall("fetch", {"url": "http://127.0.0.1:9/"}), reg)
    assert not r.ok
