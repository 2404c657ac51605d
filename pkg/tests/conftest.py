import json
from pathlib import Path

import pytest

from clipline.gateway import BackendConfig, ModelGateway

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def make_mock_gateway(tmp_path):
    """Factory for gateways backed by a scripted mock transport."""
    counter = {"n": 0}

    def make(rules=None, default=None, model_name="mock-model", cache_dir=None, **backend_kw):
        counter["n"] += 1
        script = {"rules": rules or []}
        if default is not None:
            script["default"] = default
        script_path = tmp_path / f"mock_script_{counter['n']}.json"
        script_path.write_text(json.dumps(script), encoding="utf-8")
        backend = BackendConfig(
            base_url=f"mock://{script_path}", model_name=model_name, **backend_kw
        )
        return ModelGateway(backend, cache_dir=cache_dir)

    return make


@pytest.fixture
def prompt_fixture():
    def load(name: str) -> str:
        return (FIXTURES / "prompts" / name).read_text(encoding="utf-8")

    return load
