"""
Shared Utilities for MMGPL

Text helpers used by the concept embedder and the remote concept client.
"""

import re
from typing import List, Optional

_NUMBERING = re.compile(r"^\s*(?:\d+[.)\]:]|[-*•])\s*")
_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def clean_text(text: Optional[str]) -> Optional[str]:
    """
    Collapse newlines and repeated spaces into single spaces.

    Args:
        text: The input text to clean, or None

    Returns:
        Cleaned text with normalized whitespace, or None/empty if input was None/empty

    Examples:
        >>> clean_text("Hello\\nWorld")
        'Hello World'
        >>> clean_text("Multiple   spaces")
        'Multiple spaces'
    """
    if not text:
        return text
    text = re.sub(r'[\r\n]+', ' ', text)
    text = re.sub(r' +', ' ', text)
    return text.strip()


def strip_numbering(line: str) -> str:
    """Remove a leading list marker such as '1.', '2)', '-' or a bullet."""
    return _NUMBERING.sub("", line, count=1).strip()


def split_words(text: str) -> List[str]:
    """
    Lowercase and split on runs of non-alphanumeric characters.

    Examples:
        >>> split_words("Hippocampal atrophy, present!")
        ['hippocampal', 'atrophy', 'present']
    """
    return [w for w in _NON_ALNUM.split(text.lower()) if w]
