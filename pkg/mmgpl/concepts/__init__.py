"""
concepts: concept banks, their embeddings and the remote concept client.
"""

from .bank import ConceptBank, ConceptClass, load_bank, parse_bank, save_bank
from .embedder import ConceptEmbeddings, embed_bank, embed_text
from .client import PROMPT_TEMPLATE, EndpointConfig, fetch_concepts, parse_items

__all__ = [
    "ConceptBank", "ConceptClass", "load_bank", "parse_bank", "save_bank",
    "ConceptEmbeddings", "embed_bank", "embed_text",
    "PROMPT_TEMPLATE", "EndpointConfig", "fetch_concepts", "parse_items",
]
