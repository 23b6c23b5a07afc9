"""
Tests for concept banks, the hashing embedder and the remote concept client

Run with: python -m pytest tests/test_concepts.py -v
"""

import json
from pathlib import Path

import httpx
import numpy as np
import pytest

from mmgpl.concepts import (
    ConceptBank, EndpointConfig, embed_bank, embed_text, fetch_concepts, load_bank, parse_bank,
    parse_items, save_bank,
)
from shared.errors import BankValidationError, ConfigError, DataError, DomainError, FetchError

EXAMPLE_BANK = Path(__file__).parent.parent / "data" / "banks" / "adni_3cls_example.json"


def bank_dict(k=2):
    return {"classes": [
        {"name": "normal", "concepts": [f"normal finding {i}" for i in range(k)]},
        {"name": "disease", "concepts": [f"disease finding {i}" for i in range(k)]},
    ]}


class TestConceptBank:
    """Bank schema and file handling."""

    def test_example_bank(self):
        """The shipped three-class bank has C=3, K=4."""
        bank = load_bank(EXAMPLE_BANK)
        assert bank.n_classes == 3
        assert bank.k == 4
        assert len(bank.texts()) == 12

    def test_ragged_k_rejected(self):
        data = bank_dict(4)
        data["classes"][1]["concepts"] = data["classes"][1]["concepts"][:3]
        with pytest.raises(BankValidationError) as exc:
            parse_bank(data)
        assert exc.value.details["location"] == ["classes", 1, "concepts"]

    def test_empty_text_rejected(self):
        data = bank_dict()
        data["classes"][0]["concepts"][1] = "   "
        with pytest.raises(BankValidationError):
            parse_bank(data)

    def test_duplicate_names_rejected(self):
        data = bank_dict()
        data["classes"][1]["name"] = "normal"
        with pytest.raises(BankValidationError):
            parse_bank(data)

    def test_single_class_rejected(self):
        data = bank_dict()
        data["classes"] = data["classes"][:1]
        with pytest.raises(BankValidationError):
            parse_bank(data)

    def test_unknown_field_rejected(self):
        data = bank_dict()
        data["extra"] = 1
        with pytest.raises(BankValidationError):
            parse_bank(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_bank(tmp_path / "nope.json")

    def test_save_load_textual_round_trip(self, tmp_path):
        first = save_bank(parse_bank(bank_dict(3)), tmp_path / "bank.json")
        text = Path(first).read_text(encoding="utf-8")
        second = save_bank(load_bank(first), tmp_path / "again.json")
        assert Path(second).read_text(encoding="utf-8") == text
        assert json.loads(text) == bank_dict(3)


class TestEmbedder:
    """Feature-hashing text embeddings."""

    def test_deterministic(self):
        a = embed_text("hippocampal atrophy present")
        b = embed_text("hippocampal atrophy present")
        assert a.tobytes() == b.tobytes()

    def test_unit_norm(self):
        for text in ("a", "reduced brain metabolism", "Enlarged lateral ventricles!"):
            assert np.linalg.norm(embed_text(text)) == pytest.approx(1.0, abs=1e-5)

    def test_shared_words_score_higher(self):
        base = embed_text("hippocampal atrophy present")
        near = embed_text("hippocampal atrophy observed")
        far = embed_text("normal glucose metabolism")
        assert float(base @ near) > float(base @ far)

    def test_seed_changes_embedding(self):
        assert not np.array_equal(embed_text("atrophy", seed=1), embed_text("atrophy", seed=2))

    def test_empty_text(self):
        with pytest.raises(DomainError):
            embed_text(" ,; ")

    def test_embed_bank_layout(self):
        bank = parse_bank(bank_dict(3))
        emb = embed_bank(bank, dim=32)
        assert emb.Z.shape == (6, 32)
        assert emb.rows_for(1) == slice(3, 6)
        assert emb.index(1, 2) == 5
        assert emb.category_of(4) == 1
        np.testing.assert_allclose(emb.Z.data[0], embed_text("normal finding 0 normal", dim=32))


def stub_transport(items_per_class, calls=None, status=200):
    def handler(request: httpx.Request) -> httpx.Response:
        if calls is not None:
            calls.append(request)
        return httpx.Response(status, json={"items": items_per_class})
    return httpx.MockTransport(handler)


class TestConceptClient:
    """fetch_concepts against a stubbed endpoint."""

    ENDPOINT = EndpointConfig(url="https://concepts.test/v1/generate", token="secret")

    def test_stub_round_trip(self):
        """A fixed four-item reply per class yields a bank with K=4."""
        calls = []
        items = ["1. reduced metabolism", "2) hippocampal atrophy", "- ventricle enlargement",
                 "4. cortical thinning"]
        bank = fetch_concepts(self.ENDPOINT, ["CN", "AD"], 4, transport=stub_transport(items, calls))
        assert isinstance(bank, ConceptBank)
        assert bank.k == 4 and bank.class_names == ["CN", "AD"]
        assert bank.classes[0].concepts[1] == "hippocampal atrophy"
        assert calls[0].headers["Authorization"] == "Bearer secret"
        body = json.loads(calls[1].content)
        assert body["max_items"] == 4 and "AD" in body["prompt"]

    def test_extra_items_truncated(self):
        items = [f"concept {i}" for i in range(6)]
        bank = fetch_concepts(self.ENDPOINT, ["a", "b"], 3, transport=stub_transport(items))
        assert bank.classes[1].concepts == ["concept 0", "concept 1", "concept 2"]

    def test_too_few_items(self):
        with pytest.raises(FetchError):
            fetch_concepts(self.ENDPOINT, ["a", "b"], 4, transport=stub_transport(["x", "y"]))

    def test_http_error_status(self):
        with pytest.raises(FetchError):
            fetch_concepts(self.ENDPOINT, ["a", "b"], 1, transport=stub_transport(["x"], status=503))

    def test_transport_failure(self):
        def handler(request):
            raise httpx.ConnectError("unreachable", request=request)

        with pytest.raises(FetchError):
            fetch_concepts(self.ENDPOINT, ["a", "b"], 1, transport=httpx.MockTransport(handler))

    def test_malformed_payload(self):
        def handler(request):
            return httpx.Response(200, json={"text": "no list here"})

        with pytest.raises(FetchError):
            fetch_concepts(self.ENDPOINT, ["a", "b"], 1, transport=httpx.MockTransport(handler))

    def test_offline_config_fails_fast(self):
        """No endpoint configured: configuration error before any request."""
        calls = []
        with pytest.raises(ConfigError):
            fetch_concepts(EndpointConfig(), ["a", "b"], 2, transport=stub_transport(["x", "y"], calls))
        assert calls == []

    def test_parse_items_splits_lines(self):
        assert parse_items({"items": ["1. first\n2. second", "  "]}) == ["first", "second"]
        with pytest.raises(ValueError):
            parse_items({"items": "not a list"})
