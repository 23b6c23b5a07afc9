"""
Concept bank: C categories, each with exactly K concept texts.

File format:
    {"classes": [{"name": "...", "concepts": ["...", ...]}, ...]}
"""

import json
from pathlib import Path
from typing import List, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from shared.errors import BankValidationError, DataError


class ConceptClass(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., description="Category (class) name")
    concepts: List[str] = Field(..., description="K concept texts for this category")


class ConceptBank(BaseModel):
    """Ordered categories with their concept texts; immutable once validated."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    classes: List[ConceptClass] = Field(..., description="Categories in label order")

    @model_validator(mode="after")
    def _check_invariants(self) -> "ConceptBank":
        if len(self.classes) < 2:
            raise BankValidationError(
                f"a bank needs at least 2 classes, got {len(self.classes)}", location=["classes"])
        seen = {}
        k = len(self.classes[0].concepts)
        for i, entry in enumerate(self.classes):
            if not entry.name.strip():
                raise BankValidationError("empty class name", location=["classes", i, "name"])
            if entry.name in seen:
                raise BankValidationError(
                    f"duplicate class name {entry.name!r} (first at index {seen[entry.name]})",
                    location=["classes", i, "name"])
            seen[entry.name] = i
            if len(entry.concepts) != k:
                raise BankValidationError(
                    f"class {entry.name!r} has {len(entry.concepts)} concepts, expected {k}",
                    location=["classes", i, "concepts"])
            for j, text in enumerate(entry.concepts):
                if not text.strip():
                    raise BankValidationError(
                        f"empty concept text in class {entry.name!r}",
                        location=["classes", i, "concepts", j])
        if k < 1:
            raise BankValidationError("every class needs at least one concept",
                                      location=["classes", 0, "concepts"])
        return self

    @property
    def class_names(self) -> List[str]:
        return [c.name for c in self.classes]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def k(self) -> int:
        return len(self.classes[0].concepts)

    def texts(self) -> List[str]:
        """All concept texts in row order (category-major)."""
        return [t for c in self.classes for t in c.concepts]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), ensure_ascii=False, indent=2) + "\n"


def parse_bank(data: dict) -> ConceptBank:
    """Validate a decoded bank document."""
    try:
        return ConceptBank.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise BankValidationError(first["msg"], location=list(first["loc"])) from None


def load_bank(path: Union[str, Path]) -> ConceptBank:
    """
    Load and validate a concept bank file.

    Raises:
        DataError: file missing or not JSON
        BankValidationError: ragged K, empty text, duplicate class names
    """
    filepath = Path(path)
    try:
        with open(filepath, "r", encoding="utf-8") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise DataError(f"concept bank not found: {filepath}", details={"path": str(filepath)}) from None
    except json.JSONDecodeError as exc:
        raise BankValidationError(f"not valid JSON: {exc.msg}", location=[exc.lineno, exc.colno]) from None
    return parse_bank(data)


def save_bank(bank: ConceptBank, path: Union[str, Path]) -> str:
    filepath = Path(path)
    filepath.parent.mkdir(exist_ok=True, parents=True)
    filepath.write_text(bank.to_json(), encoding="utf-8")
    return str(filepath)
