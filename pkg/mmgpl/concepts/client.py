"""
Remote concept generation client.

Sends one templated request per category to a text-generation endpoint and
parses the returned list into a concept bank. Only the CLI calls this; the
result is written to a bank file for human review before use.

Request:  POST {"prompt": "...", "max_items": K}
Response: {"items": ["1. ...", "2. ...", ...]}
"""

import logging
from typing import List, Optional, Sequence

import httpx
from pydantic import BaseModel, Field

from shared.config import CONCEPT_HTTP_TIMEOUT
from shared.errors import ConfigError, FetchError
from shared.utils import clean_text, strip_numbering

from .bank import ConceptBank, ConceptClass

logger = logging.getLogger(__name__)

PROMPT_TEMPLATE = (
    "List {k} radiological or biomarker concepts characteristic of {class_name} "
    "in multimodal brain imaging. Answer with a numbered list, one short phrase per line."
)


class EndpointConfig(BaseModel):
    """Where and how to reach the text-generation service."""
    url: Optional[str] = Field(default=None, description="concept_endpoint")
    token: Optional[str] = Field(default=None, description="concept_token (Bearer)")
    timeout: float = Field(default=CONCEPT_HTTP_TIMEOUT, gt=0)


def parse_items(payload) -> List[str]:
    """Extract non-empty list entries, stripping numbering; multi-line entries are split."""
    if not isinstance(payload, dict) or not isinstance(payload.get("items"), list):
        raise ValueError("response has no 'items' list")
    items: List[str] = []
    for raw in payload["items"]:
        if not isinstance(raw, str):
            raise ValueError(f"non-text item {raw!r}")
        for line in raw.splitlines():
            text = clean_text(strip_numbering(line))
            if text:
                items.append(text)
    return items


def fetch_concepts(
    endpoint: EndpointConfig,
    class_names: Sequence[str],
    k: int,
    transport: Optional[httpx.BaseTransport] = None
) -> ConceptBank:
    """
    Ask the endpoint for K concepts per class and build a bank.

    Args:
        endpoint: URL, token and timeout
        class_names: categories in label order
        k: concepts per category
        transport: optional httpx transport (tests pass a MockTransport)

    Raises:
        ConfigError: no endpoint configured
        FetchError: transport failure, malformed response, fewer than K items
    """
    if not endpoint.url:
        raise ConfigError("concept_endpoint is not configured", key="concept_endpoint")
    headers = {"Content-Type": "application/json"}
    if endpoint.token:
        headers["Authorization"] = f"Bearer {endpoint.token}"

    classes = []
    with httpx.Client(timeout=endpoint.timeout, headers=headers, transport=transport) as client:
        for name in class_names:
            prompt = PROMPT_TEMPLATE.format(k=k, class_name=name)
            logger.info(f"Requesting {k} concepts for '{name}' from {endpoint.url}")
            try:
                response = client.post(endpoint.url, json={"prompt": prompt, "max_items": k})
                response.raise_for_status()
                items = parse_items(response.json())
            except httpx.HTTPError as exc:
                raise FetchError(f"request for '{name}' failed: {exc}", endpoint=endpoint.url) from None
            except ValueError as exc:
                raise FetchError(f"malformed response for '{name}': {exc}", endpoint=endpoint.url) from None
            if len(items) < k:
                raise FetchError(
                    f"endpoint returned {len(items)} concepts for '{name}', need {k}",
                    endpoint=endpoint.url
                )
            classes.append(ConceptClass(name=name, concepts=items[:k]))
    return ConceptBank(classes=classes)
