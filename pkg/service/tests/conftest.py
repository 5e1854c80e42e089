import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from model_service import ServiceConfig, create_app

FIXTURES = Path(__file__).parent / "fixtures"
# protocol schemas are owned by the engine repo and shared verbatim
SCHEMA_DIR = Path(__file__).resolve().parents[2] / "src" / "funlib" / "schemas"


@pytest.fixture(scope="session")
def app():
    return create_app(ServiceConfig.from_json(FIXTURES / "service.json"))


@pytest.fixture(scope="session")
def client(app):
    return TestClient(app)


def load_schema(name: str) -> dict:
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text(encoding="utf-8"))
