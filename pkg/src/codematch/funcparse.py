"""Lexical segmentation of Python function source into header, docstring, and body.

The segmentation is line/character based, not a grammar parse: the corpus
functions are known to be syntactically valid, and a lexical splitter keeps
this module dependency-free.  Segments are exact, contiguous spans of the
original text, so ``header + docstring + body == raw_text`` always holds.

Conventions:
  * decorator lines (and any blank/comment lines before ``def``) belong to
    the header,
  * the header ends at the colon that closes the signature (end of that
    line, unless the function body starts on the same line),
  * a docstring is recognized only when the first statement line after the
    header opens with a string literal; its segment includes the leading
    blank lines and indentation,
  * everything else is body.
"""

from __future__ import annotations

import re
from dataclasses import dataclass


class ParseError(ValueError):
    """Source text cannot be segmented as a single Python function."""


@dataclass(frozen=True)
class CodeFunction:
    """A parsed Python function, split into exact source segments."""

    code_id: str
    raw_text: str
    header: str
    docstring: str
    body: str


@dataclass(frozen=True)
class ComponentMask:
    """Which function segments to keep when rendering code text."""

    keep_header: bool = True
    keep_docstring: bool = True
    keep_body: bool = True

    def label(self) -> str:
        if self.keep_header and self.keep_docstring and self.keep_body:
            return "complete"
        dropped = []
        if not self.keep_header:
            dropped.append("header")
        if not self.keep_docstring:
            dropped.append("documentation")
        if not self.keep_body:
            dropped.append("body")
        return "w/o " + " & ".join(dropped)


KEEP_ALL = ComponentMask(True, True, True)

_STRING_PREFIX_RE = re.compile(r"^[rRbBuU]{0,2}('''|\"\"\"|'|\")")
_DEF_RE = re.compile(r"^(async[ \t]+)?def\b")


def _scan_brackets(line: str, depth: int) -> int:
    """Advance bracket depth across one line, skipping string literals."""
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]
        if ch in "\"'":
            quote = ch
            i += 1
            while i < n:
                if line[i] == "\\":
                    i += 2
                    continue
                if line[i] == quote:
                    break
                i += 1
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
        elif ch == "#":
            break
        i += 1
    return depth


def _find_def_line(lines: list[str]) -> int:
    """Index of the line starting the ``def`` statement.

    Blank lines, comments, and decorator lines (including bracketed
    continuations) are allowed before it and stay in the header.
    """
    depth = 0
    for i, line in enumerate(lines):
        stripped = line.strip()
        if depth > 0:
            depth = _scan_brackets(line, depth)
            continue
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("@"):
            depth = _scan_brackets(line, depth)
            continue
        if _DEF_RE.match(stripped):
            return i
        raise ParseError("function must start with 'def' (or decorators before it)")
    raise ParseError("no 'def' keyword found")


def _signature_end(text: str, def_offset: int) -> int:
    """Offset just past the colon that closes the signature.

    Scans from the ``def`` keyword, tracking bracket depth and skipping
    string literals (default values may contain brackets or colons).
    """
    i = def_offset
    n = len(text)
    depth = 0
    while i < n:
        ch = text[i]
        if ch in "\"'":
            if text[i : i + 3] in ('"""', "'''"):
                quote = text[i : i + 3]
                j = text.find(quote, i + 3)
                while j != -1 and text[j - 1] == "\\":
                    j = text.find(quote, j + 1)
                if j == -1:
                    raise ParseError("unterminated string in signature")
                i = j + 3
                continue
            quote = ch
            i += 1
            while i < n:
                if text[i] == "\\":
                    i += 2
                    continue
                if text[i] == quote:
                    break
                i += 1
            if i >= n:
                raise ParseError("unterminated string in signature")
        elif ch in "([{":
            depth += 1
        elif ch in ")]}":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced parentheses in signature")
        elif ch == ":" and depth == 0:
            return i + 1
        elif ch == "#" and depth == 0:
            # comment before the signature colon only happens mid-signature
            nl = text.find("\n", i)
            if nl == -1:
                break
            i = nl
        i += 1
    raise ParseError("unbalanced parentheses in signature")


def _docstring_end(text: str, start: int) -> int | None:
    """Offset just past a docstring beginning at ``start``, or None.

    ``start`` points at the first statement line after the header.  Leading
    blank lines are consumed into the docstring span.  A docstring must be a
    plain (optionally r/b/u-prefixed) string literal; comment lines before
    the first statement defeat recognition, which matches the lexical scope
    of this parser.
    """
    i = start
    n = len(text)
    # consume fully blank lines
    while i < n:
        nl = text.find("\n", i)
        line = text[i:] if nl == -1 else text[i : nl + 1]
        if line.strip():
            break
        if nl == -1:
            return None
        i = nl + 1
    if i >= n:
        return None
    line_indent = len(text[i:]) - len(text[i:].lstrip(" \t"))
    stmt = i + line_indent
    m = _STRING_PREFIX_RE.match(text[stmt:])
    if not m:
        return None
    quote = m.group(1)
    content_start = stmt + m.end()
    if len(quote) == 3:
        j = content_start
        while True:
            j = text.find(quote, j)
            if j == -1:
                return None
            if text[j - 1] == "\\":
                j += 1
                continue
            break
        end = j + 3
    else:
        j = content_start
        end = None
        while j < n and text[j] != "\n":
            if text[j] == "\\":
                j += 2
                continue
            if text[j] == quote:
                end = j + 1
                break
            j += 1
        if end is None:
            return None
    # absorb the rest of the closing line when it is only whitespace/comment
    nl = text.find("\n", end)
    tail = text[end:] if nl == -1 else text[end:nl]
    if not tail.strip() or tail.lstrip().startswith("#"):
        return n if nl == -1 else nl + 1
    return end


def parse_function(raw_text: str, code_id: str = "") -> CodeFunction:
    """Split one function's source into exact header/docstring/body spans."""
    if not raw_text:
        raise ParseError("empty source text")
    lines = raw_text.splitlines(keepends=True)
    def_line = _find_def_line(lines)
    def_offset = sum(len(ln) for ln in lines[:def_line])
    def_offset += len(lines[def_line]) - len(lines[def_line].lstrip())
    sig_end = _signature_end(raw_text, def_offset)

    nl = raw_text.find("\n", sig_end)
    same_line_rest = raw_text[sig_end:] if nl == -1 else raw_text[sig_end:nl]
    if same_line_rest.strip() and not same_line_rest.lstrip().startswith("#"):
        header_end = sig_end  # one-liner: body shares the def line
    else:
        header_end = len(raw_text) if nl == -1 else nl + 1

    header = raw_text[:header_end]
    doc_end = _docstring_end(raw_text, header_end)
    if doc_end is None:
        docstring = ""
        body = raw_text[header_end:]
    else:
        docstring = raw_text[header_end:doc_end]
        body = raw_text[doc_end:]
    return CodeFunction(
        code_id=code_id,
        raw_text=raw_text,
        header=header,
        docstring=docstring,
        body=body,
    )


def docstring_text(func: CodeFunction) -> str:
    """Inner text of the docstring (delimiters and indentation removed)."""
    seg = func.docstring.strip()
    if not seg:
        return ""
    m = _STRING_PREFIX_RE.match(seg)
    if not m:
        return seg
    quote = m.group(1)
    inner = seg[m.end() :]
    if inner.endswith(quote):
        inner = inner[: -len(quote)]
    return inner


_SPECIAL_PATTERNS = ("<img", "http://", "https://")
NON_ASCII_RATIO_LIMIT = 0.5


def clean_filter(func: CodeFunction) -> bool:
    """True when the function's documentation looks usable.

    False when the docstring embeds markup/URL artifacts or when more than
    half of its characters are non-ASCII (non-English heuristic).
    """
    text = docstring_text(func)
    if not text:
        return True
    lowered = text.lower()
    if any(pat in lowered for pat in _SPECIAL_PATTERNS):
        return False
    non_ascii = sum(1 for ch in text if ord(ch) > 127)
    return (non_ascii / len(text)) <= NON_ASCII_RATIO_LIMIT


def strip_components(func: CodeFunction, mask: ComponentMask) -> str:
    """Concatenate only the kept segments, in header -> docstring -> body order."""
    if not (mask.keep_header or mask.keep_docstring or mask.keep_body):
        raise ValueError("component mask must keep at least one segment")
    parts = []
    if mask.keep_header:
        parts.append(func.header)
    if mask.keep_docstring:
        parts.append(func.docstring)
    if mask.keep_body:
        parts.append(func.body)
    return "".join(parts)
