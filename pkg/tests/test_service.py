import pytest
from fastapi.testclient import TestClient

from spansteer.annotation import FixtureProvider, annotate
from spansteer.classifier import ClassifierHead, HashedFrozenEncoder, predict_top_k
from spansteer.config import RunConfig
from spansteer.generation import DecodeConfig, EchoAdapter, GenerationCheckpoint
from spansteer.qa import LexicalStubAnswerer, TemplateStubGenerator
from spansteer.service import ServiceComponents, components_from_config, create_app

TEXT = ("Orla met Finn in Oslo. the Summit Hall hosted Oslo in March. "
        "the reporters followed Orla afterwards.")


def stub_components(generator="echo", max_chars=20000):
    encoder = HashedFrozenEncoder(dim=8, seed=13)
    checkpoint = (GenerationCheckpoint(adapter=EchoAdapter(),
                                       decode_defaults=DecodeConfig(beam=1))
                  if generator == "echo" else None)
    return ServiceComponents(
        provider=FixtureProvider(), encoder=encoder,
        head=ClassifierHead.init(8, seed=13), generator=checkpoint,
        qg=TemplateStubGenerator(), qa=LexicalStubAnswerer(),
        max_chars=max_chars, versions={"generator": "echo-stub"})


@pytest.fixture
def client():
    return TestClient(create_app(stub_components()))


def test_health_ok(client):
    response = client.get("/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "ok"
    assert body["adapters"]["provider"] == "FixtureProvider"


def test_health_degraded_without_generator():
    client = TestClient(create_app(stub_components(generator=None)))
    body = client.get("/health").json()
    assert body["status"] == "degraded"


def test_analyze_payload_matches_library_ranking(client):
    response = client.post("/analyze", json={"text": TEXT})
    assert response.status_code == 200
    payload = response.json()

    components = stub_components()
    doc = annotate(TEXT, components.provider, doc_id="x")
    candidates = [p.span for p in doc.phrases_of_type("np")]
    ranked = predict_top_k(doc, candidates, len(candidates),
                           components.encoder, components.head)
    assert [(s["start"], s["end"]) for s in payload["spans"]] == \
        [(r.span.start, r.span.end) for r in ranked]
    assert [s["score"] for s in payload["spans"]] == pytest.approx(
        [r.score for r in ranked])
    assert [s["probability"] for s in payload["spans"]] == pytest.approx(
        [r.probability for r in ranked])
    scores = [s["score"] for s in payload["spans"]]
    assert scores == sorted(scores, reverse=True)
    assert payload["tokens"] == list(doc.tokens)


def test_analyze_repeat_identical(client):
    first = client.post("/analyze", json={"text": TEXT})
    second = client.post("/analyze", json={"text": TEXT})
    assert first.json() == second.json()


def test_analyze_empty_text_400(client):
    assert client.post("/analyze", json={"text": ""}).status_code == 400
    assert client.post("/analyze", json={"text": "  \n "}).status_code == 400


def test_analyze_over_limit_413():
    client = TestClient(create_app(stub_components(max_chars=50)))
    assert client.post("/analyze", json={"text": "x " * 40}).status_code == 413


def test_generate_idempotent(client):
    session = client.post("/analyze", json={"text": TEXT}).json()["session_id"]
    body = {"session_id": session, "span_ids": [0, 1, 2]}
    first = client.post("/generate", json=body)
    second = client.post("/generate", json=body)
    assert first.status_code == 200
    assert first.json() == second.json()


def test_generate_unknown_session_404(client):
    response = client.post("/generate",
                           json={"session_id": "missing", "span_ids": []})
    assert response.status_code == 404


def test_generate_invalid_span_id_422(client):
    session = client.post("/analyze", json={"text": TEXT}).json()["session_id"]
    response = client.post("/generate",
                           json={"session_id": session, "span_ids": [10000]})
    assert response.status_code == 422


def test_generate_backend_down_503():
    client = TestClient(create_app(stub_components(generator=None)))
    session = client.post("/analyze", json={"text": TEXT}).json()["session_id"]
    response = client.post("/generate",
                           json={"session_id": session, "span_ids": []})
    assert response.status_code == 503


def test_generate_zero_spans_unmarked_document(client):
    session = client.post("/analyze", json={"text": TEXT}).json()["session_id"]
    body = client.post("/generate",
                       json={"session_id": session, "span_ids": []}).json()
    assert body["summary_tokens"]
    assert "question_recall" not in body
    assert "k_length_ratio" not in body
    assert body["per_question"] == []


def test_generate_reports_dropped_overlaps(client):
    payload = client.post("/analyze", json={"text": TEXT}).json()
    # find two overlapping candidates (same start or shared tokens)
    spans = payload["spans"]
    overlapping = None
    for i, a in enumerate(spans):
        for j, b in enumerate(spans):
            if i < j and a["start"] <= b["end"] and b["start"] <= a["end"]:
                overlapping = (i, j)
                break
        if overlapping:
            break
    assert overlapping, "fixture text should produce overlapping candidates"
    i, j = overlapping
    body = client.post("/generate", json={
        "session_id": payload["session_id"],
        "span_ids": [spans[i]["id"], spans[j]["id"]]}).json()
    assert len(body["dropped_span_ids"]) == 1
    assert len(body["per_question"]) == 1


def test_generate_echo_marked_sentences_full_recall(client):
    payload = client.post("/analyze", json={"text": TEXT}).json()
    chosen = [s["id"] for s in payload["spans"]][:3]
    body = client.post("/generate", json={
        "session_id": payload["session_id"], "span_ids": chosen}).json()
    kept = len(chosen) - len(body["dropped_span_ids"])
    assert body["question_recall"] == pytest.approx(1.0)
    assert body["k_length_ratio"] == pytest.approx(
        kept / len(body["summary_tokens"]))
    assert len(body["per_question"]) == kept
    assert all(q["answered"] for q in body["per_question"])


def test_session_store_ttl_eviction():
    import time

    from spansteer.corpus import Document, TokenSpan
    from spansteer.service.state import Session, SessionStore

    store = SessionStore(ttl_seconds=0.05)
    doc = Document(id="d", text="a", tokens=("a",),
                   sentences=(TokenSpan(0, 0),))
    store.put(Session(session_id="s1", document=doc, spans=[]))
    assert store.get("s1") is not None
    time.sleep(0.08)
    assert store.get("s1") is None
    assert len(store) == 0


def test_analyze_provider_crash_is_503():
    class CrashingProvider:
        capabilities = frozenset({"sentences"})
        exclusive = False

        def analyze(self, text):
            raise RuntimeError("segfault adjacent")

    components = stub_components()
    components.provider = CrashingProvider()
    client = TestClient(create_app(components))
    response = client.post("/analyze", json={"text": "hello there."})
    assert response.status_code == 503
    assert "CrashingProvider" in response.json()["detail"]


def test_workbench_fixture_contract():
    """The frontend test fixtures were captured from this service; pin the
    payload shape/values they rely on so drift is caught on this side."""
    client = TestClient(create_app(components_from_config(RunConfig(seq2seq="echo"))))
    text = ("Orla met Finn in Oslo. the Summit Hall hosted Oslo in March. "
            "the reporters followed Orla afterwards.")
    payload = client.post("/analyze", json={"text": text}).json()
    assert payload["session_id"] == "653bd95a491b4fd3"
    assert [(s["id"], s["start"], s["end"], s["text"])
            for s in payload["spans"]] == [
        (0, 0, 0, "Orla"), (1, 17, 17, "Orla"), (2, 6, 8, "the Summit Hall"),
        (3, 14, 15, "the reporters"), (4, 12, 12, "March"),
        (5, 7, 8, "Summit Hall"), (6, 2, 2, "Finn"), (7, 4, 4, "Oslo"),
        (8, 10, 10, "Oslo")]
    body = client.post("/generate", json={"session_id": payload["session_id"],
                                          "span_ids": [0, 1, 2]}).json()
    assert body["question_recall"] == 1.0
    assert [q["question"] for q in body["per_question"]] == [
        "Q[Orla|met]?", "Q[Orla|reporters]?", "Q[the Summit Hall|hosted]?"]


def test_components_from_config_echo_default():
    components = components_from_config(RunConfig(seq2seq="echo"))
    app = create_app(components)
    client = TestClient(app)
    assert client.get("/health").json()["status"] == "ok"


def test_components_from_config_missing_generator_dir_degraded(tmp_path):
    config = RunConfig(generator_dir=str(tmp_path / "missing"))
    client = TestClient(create_app(components_from_config(config)))
    body = client.get("/health").json()
    assert body["status"] == "degraded"
    assert body["adapters"]["generator"] == "missing"
