import json

import httpx
import pytest

from funlib import (
    Locale,
    RemoteScorer,
    ResponseInvariantError,
    ResponseSchemaError,
    TransportError,
    remote_scorer,
)

GOOD = {
    "/v1/mask_scores": {
        "candidates": [
            {"word": "cat", "log_prob": -0.7},
            {"word": "dog", "log_prob": -1.2},
        ]
    },
    "/v1/humor": {"p_funny": 0.62},
    "/v1/embed": {"tokens": ["a", "cat"], "vectors": [[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]]},
    "/v1/health": {"status": "ok", "locales": ["IN", "US"], "layer": "second_to_last"},
}


def stub(responses=GOOD, status=200, raw=None):
    requests = []

    def handler(request: httpx.Request) -> httpx.Response:
        requests.append(request)
        if raw is not None:
            return httpx.Response(status, content=raw)
        return httpx.Response(status, json=responses[request.url.path])

    scorer = remote_scorer(
        "http://service.test", locale=Locale.US, transport=httpx.MockTransport(handler)
    )
    return scorer, requests


def test_mask_distribution_roundtrip():
    scorer, requests = stub()
    out = scorer.mask_distribution("a [MASK].", 0, 5)
    assert [(m.word, m.log_probability) for m in out] == [("cat", -0.7), ("dog", -1.2)]
    sent = json.loads(requests[0].content)
    assert sent == {"text": "a [MASK].", "mask_index": 0, "top_k": 5, "locale": "US"}


def test_humor_and_embed_roundtrip():
    scorer, requests = stub()
    assert scorer.humor_probability("a [MASK].", "a cat.") == 0.62
    arr = scorer.token_embeddings("a cat")
    assert arr.shape == (2, 3)
    assert scorer.health()["status"] == "ok"


def test_embed_layer_forwarded():
    responses = dict(GOOD)
    scorer, requests = stub(responses)
    scorer.layer = "sum_last_4"
    scorer.token_embeddings("a cat")
    assert json.loads(requests[0].content)["layer"] == "sum_last_4"


def test_transport_failure():
    def handler(request):
        raise httpx.ConnectError("refused")

    scorer = RemoteScorer("http://down.test", transport=httpx.MockTransport(handler))
    with pytest.raises(TransportError, match="refused"):
        scorer.mask_distribution("a [MASK].", 0, 3)


def test_http_error_status():
    scorer, _ = stub(status=503)
    with pytest.raises(TransportError, match="503"):
        scorer.humor_probability("a [MASK].", "a cat.")


def test_non_json_body():
    scorer, _ = stub(raw=b"not json")
    with pytest.raises(ResponseSchemaError, match="not JSON"):
        scorer.humor_probability("a [MASK].", "a cat.")


@pytest.mark.parametrize(
    "body",
    [
        {"candidates": [{"word": "cat"}]},  # missing log_prob
        {"candidates": [{"word": "cat", "log_prob": 0.5}]},  # positive log prob
        {"candidates": [{"word": "", "log_prob": -1.0}]},  # empty word
        {"wrong": []},
    ],
)
def test_mask_scores_schema_violations(body):
    scorer, _ = stub({"/v1/mask_scores": body})
    with pytest.raises(ResponseSchemaError):
        scorer.mask_distribution("a [MASK].", 0, 3)


def test_mask_scores_invariant_violations():
    unsorted = {
        "/v1/mask_scores": {
            "candidates": [{"word": "a", "log_prob": -2.0}, {"word": "b", "log_prob": -1.0}]
        }
    }
    scorer, _ = stub(unsorted)
    with pytest.raises(ResponseInvariantError, match="sorted"):
        scorer.mask_distribution("a [MASK].", 0, 3)

    dupes = {
        "/v1/mask_scores": {
            "candidates": [{"word": "a", "log_prob": -1.0}, {"word": "a", "log_prob": -2.0}]
        }
    }
    scorer, _ = stub(dupes)
    with pytest.raises(ResponseInvariantError, match="duplicate"):
        scorer.mask_distribution("a [MASK].", 0, 3)

    scorer, _ = stub()  # two candidates but top_k=1
    with pytest.raises(ResponseInvariantError, match="top_k"):
        scorer.mask_distribution("a [MASK].", 0, 1)


def test_humor_out_of_range_rejected():
    scorer, _ = stub({"/v1/humor": {"p_funny": 1.5}})
    with pytest.raises(ResponseSchemaError):
        scorer.humor_probability("a [MASK].", "a cat.")


def test_embed_invariants():
    ragged = {"/v1/embed": {"tokens": ["a", "b"], "vectors": [[0.1, 0.2], [0.3, 0.4, 0.5]]}}
    scorer, _ = stub(ragged)
    with pytest.raises(ResponseInvariantError, match="dimensions"):
        scorer.token_embeddings("a b")

    mismatch = {"/v1/embed": {"tokens": ["a"], "vectors": [[0.1, 0.2], [0.3, 0.4]]}}
    scorer, _ = stub(mismatch)
    with pytest.raises(ResponseInvariantError, match="tokens but"):
        scorer.token_embeddings("a b")

    # python's json parser accepts bare NaN literals; the client must not
    raw = b'{"tokens": ["a"], "vectors": [[NaN, 0.0]]}'
    scorer, _ = stub(raw=raw)
    with pytest.raises(ResponseInvariantError, match="non-finite"):
        scorer.token_embeddings("a")
