"""Language tags shared across the toolkit.

Ten languages are supported; every report and corpus uses the same canonical
ordering so that outputs are deterministic and rows line up across runs.
"""

from __future__ import annotations

LANGUAGES: tuple[str, ...] = ("en", "de", "fr", "es", "ru", "zh", "ja", "th", "sw", "bn")

LANGUAGE_NAMES: dict[str, str] = {
    "en": "English",
    "de": "German",
    "fr": "French",
    "es": "Spanish",
    "ru": "Russian",
    "zh": "Chinese",
    "ja": "Japanese",
    "th": "Thai",
    "sw": "Swahili",
    "bn": "Bengali",
}

# Distinguished comment tag for solutions whose comments have been removed.
# Not a question language: parse_lang rejects it.
NO_COMMENT = "nc"

_RANK = {lang: i for i, lang in enumerate(LANGUAGES)}


class LanguageError(ValueError):
    """Raised for language tags outside the supported set."""


def parse_lang(tag: str) -> str:
    """Validate a language tag, returning it unchanged."""
    if tag not in _RANK:
        raise LanguageError(f"unknown language tag {tag!r}; expected one of {', '.join(LANGUAGES)}")
    return tag


def parse_comment_lang(tag: str) -> str:
    """Validate a comment-language tag: any supported language or 'nc'."""
    if tag == NO_COMMENT:
        return tag
    return parse_lang(tag)


def canonical_order(tags) -> list[str]:
    """Sort language tags into the canonical reporting order.

    Unknown tags are rejected; duplicates collapse.
    """
    seen = {parse_lang(t) for t in tags}
    return sorted(seen, key=_RANK.__getitem__)
