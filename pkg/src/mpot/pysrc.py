"""Lexical scanner for generated Python programs.

The corpus transformations only need to know where comments are, so this is
a comment/string scanner rather than a full grammar: strings must be
recognized exactly (a '#' inside a string literal is not a comment), and
everything else can stay opaque code. The scan works on the UTF-8 byte
representation; spans are byte offsets, and every token boundary falls on an
ASCII delimiter, so multilingual comment text splices safely.

Guarantees:
  - tokenize() is lossless: concatenating token texts reproduces the input.
  - strip/extract/replace never touch code or string tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

CODE = "code"
STRING = "string"
COMMENT = "comment"
NEWLINE = "newline"

# Legal string-literal prefixes (lowercased, one or two letters).
_STRING_PREFIXES = {
    "r", "b", "f", "u",
    "br", "rb", "fr", "rf",
}

_QUOTES = (0x27, 0x22)  # ' "
_HASH = 0x23
_BACKSLASH = 0x5C
_LF = 0x0A
_CR = 0x0D
_SPACE_TAB = (0x20, 0x09)


class TokenizeError(ValueError):
    """Raised when the scanner cannot finish, e.g. an unterminated string."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str
    start: int
    end: int
    text: str


@dataclass(frozen=True)
class CommentSpan:
    """One '#' comment: byte span, full text, and whether it owns its line."""

    start: int
    end: int
    text: str
    own_line: bool

    @property
    def body(self) -> str:
        """The comment text after the '#' marker."""
        return self.text[1:]


def _is_ident_byte(b: int) -> bool:
    # ASCII identifier characters; non-ASCII identifiers before a quote are
    # treated as plain code, which never misclassifies a comment.
    return (0x30 <= b <= 0x39) or (0x41 <= b <= 0x5A) or (0x61 <= b <= 0x7A) or b == 0x5F


def _string_prefix_start(data: bytes, quote_pos: int, code_start: int) -> int:
    """Return the start of a string prefix directly before a quote, or quote_pos."""
    i = quote_pos
    while i > code_start and _is_ident_byte(data[i - 1]):
        i -= 1
    prefix = data[i:quote_pos]
    if 1 <= len(prefix) <= 2 and prefix.decode("ascii").lower() in _STRING_PREFIXES:
        return i
    return quote_pos


def _scan_string(data: bytes, start: int, quote_pos: int) -> int:
    """Scan a string literal starting at its quote; return the end offset.

    Backslash always skips the next byte, which matches how the interpreter
    finds the end of raw strings too (the backslash stays in the value but
    still prevents the quote from closing). Skipping one byte is safe:
    continuation bytes of multibyte characters can never be quotes.
    """
    quote = data[quote_pos]
    triple = data[quote_pos : quote_pos + 3] == bytes([quote] * 3)
    i = quote_pos + (3 if triple else 1)
    n = len(data)
    while i < n:
        b = data[i]
        if b == _BACKSLASH:
            i += 2
            continue
        if triple:
            if b == quote and data[i : i + 3] == bytes([quote] * 3):
                return i + 3
            i += 1
        else:
            if b == quote:
                return i + 1
            if b in (_LF, _CR):
                raise TokenizeError("unterminated string literal", start)
            i += 1
    raise TokenizeError("unterminated string literal", start)


def tokenize(source: str) -> list[Token]:
    """Split source into code/string/comment/newline tokens, losslessly."""
    data = source.encode("utf-8")
    n = len(data)
    tokens: list[Token] = []
    code_start = 0
    i = 0

    def emit(kind: str, start: int, end: int) -> None:
        tokens.append(Token(kind, start, end, data[start:end].decode("utf-8")))

    def flush_code(upto: int) -> None:
        if upto > code_start:
            emit(CODE, code_start, upto)

    while i < n:
        b = data[i]
        if b == _LF:
            flush_code(i)
            emit(NEWLINE, i, i + 1)
            i += 1
            code_start = i
        elif b == _CR:
            flush_code(i)
            end = i + 2 if i + 1 < n and data[i + 1] == _LF else i + 1
            emit(NEWLINE, i, end)
            i = end
            code_start = i
        elif b == _HASH:
            start = i
            while i < n and data[i] not in (_LF, _CR):
                i += 1
            flush_code(start)
            emit(COMMENT, start, i)
            code_start = i
        elif b in _QUOTES:
            start = _string_prefix_start(data, i, code_start)
            end = _scan_string(data, start, i)
            flush_code(start)
            emit(STRING, start, end)
            i = end
            code_start = i
        else:
            i += 1
    flush_code(n)
    return tokens


def _line_start(data: bytes, offset: int) -> int:
    i = offset
    while i > 0 and data[i - 1] not in (_LF, _CR):
        i -= 1
    return i


def extract_comments(source: str) -> list[CommentSpan]:
    """All comments in order of appearance, with own-line detection."""
    data = source.encode("utf-8")
    spans = []
    for tok in tokenize(source):
        if tok.kind != COMMENT:
            continue
        head = data[_line_start(data, tok.start) : tok.start]
        own_line = all(b in _SPACE_TAB for b in head)
        spans.append(CommentSpan(tok.start, tok.end, tok.text, own_line))
    return spans


def strip_comments(source: str) -> str:
    """Remove every comment.

    A comment that owns its line takes the whole line with it, including the
    trailing newline; a comment after code also removes the run of spaces or
    tabs directly before the '#'. Nothing else changes, so stripping is
    idempotent and the remaining program is byte-identical code.
    """
    tokens = tokenize(source)
    data = source.encode("utf-8")
    out = bytearray()
    skip_next_newline = False
    for tok in tokens:
        if tok.kind == COMMENT:
            head = data[_line_start(data, tok.start) : tok.start]
            own_line = all(b in _SPACE_TAB for b in head)
            while out and out[-1] in _SPACE_TAB:
                out.pop()
            if own_line:
                skip_next_newline = True
            continue
        if tok.kind == NEWLINE and skip_next_newline:
            skip_next_newline = False
            continue
        skip_next_newline = False
        out += data[tok.start : tok.end]
    return out.decode("utf-8")


def replace_comments(source: str, replacements: Sequence[str], keep_marker: bool = True) -> str:
    """Swap the text after each '#' for the given replacement, in order.

    With keep_marker (the default) the i-th comment becomes '#' followed by
    the i-th replacement verbatim; callers that want a space after the marker
    include it in the replacement. With keep_marker=False the replacement is
    the entire comment and must itself start with '#'. Replacements may not
    contain newlines, so the output tokenizes to the same kind sequence and
    all code and string tokens stay byte-identical.
    """
    spans = extract_comments(source)
    if len(replacements) != len(spans):
        raise ValueError(
            f"expected {len(spans)} replacement(s) for {len(spans)} comment(s), got {len(replacements)}"
        )
    for idx, rep in enumerate(replacements):
        if "\n" in rep or "\r" in rep:
            raise ValueError(f"replacement {idx} contains a newline")
        if not keep_marker and not rep.startswith("#"):
            raise ValueError(f"replacement {idx} must start with '#' when keep_marker is false")
    data = source.encode("utf-8")
    out = bytearray()
    pos = 0
    for span, rep in zip(spans, replacements):
        out += data[pos : span.start]
        out += ("#" + rep if keep_marker else rep).encode("utf-8")
        pos = span.end
    out += data[pos:]
    return out.decode("utf-8")
