"""The engine's remote client consuming this service over real HTTP."""
import socket
import threading
import time

import pytest
import uvicorn

funlib = pytest.importorskip("funlib")

from funlib import Locale, remote_scorer
from funlib.remote import TransportError


@pytest.fixture(scope="module")
def server_url(app):
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


@pytest.fixture()
def scorer(server_url):
    s = remote_scorer(server_url, locale=Locale.US)
    yield s
    s.close()


def test_client_mask_distribution(scorer):
    out = scorer.mask_distribution("the [MASK] drank tea .", 0, 5)
    assert 1 <= len(out) <= 5
    assert all(m.log_probability <= 0 for m in out)
    probs = [m.log_probability for m in out]
    assert probs == sorted(probs, reverse=True)


def test_client_humor(scorer):
    p = scorer.humor_probability("the [MASK] drank tea .", "the walrus drank tea .")
    assert 0.0 <= p <= 1.0


def test_client_embeddings(scorer):
    arr = scorer.token_embeddings("naughty walrus")
    assert arr.shape[0] == 2
    assert arr.shape[1] >= 2


def test_client_health(scorer):
    body = scorer.health()
    assert body["status"] == "ok"


def test_client_surfaces_missing_humor_model(server_url):
    scorer = remote_scorer(server_url, locale=Locale.IN)
    with pytest.raises(TransportError, match="503"):
        scorer.humor_probability("a [MASK] .", "a cat .")
    scorer.close()
