"""Token counting used for every context-length budget"""
from typing import Callable

TokenCounter = Callable[[str], int]


def count_tokens(text: str) -> int:
    """Whitespace-delimited token count"""
    return len(text.split())
