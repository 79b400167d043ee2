"""Prompt construction and model-output parsing for the post-editing task.

Prompts live as plain-text template files under templates/<version>/, keyed
by mode, so a run can always be traced back to the exact wording it used;
every result records the prompt_version that produced it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources

from .corpus import Segment
from .errors import ParseError

DEFAULT_PROMPT_VERSION = "v1"


class Mode(str, Enum):
    COT = "cot"
    DIRECT = "direct"
    ZEROSHOT = "zeroshot"


LANGUAGE_NAMES = {
    "ar": "Arabic",
    "bn": "Bengali",
    "cs": "Czech",
    "da": "Danish",
    "de": "German",
    "el": "Greek",
    "en": "English",
    "es": "Spanish",
    "et": "Estonian",
    "fi": "Finnish",
    "fr": "French",
    "gu": "Gujarati",
    "ha": "Hausa",
    "he": "Hebrew",
    "hi": "Hindi",
    "hu": "Hungarian",
    "is": "Icelandic",
    "it": "Italian",
    "iu": "Inuktitut",
    "ja": "Japanese",
    "kk": "Kazakh",
    "km": "Khmer",
    "ko": "Korean",
    "lt": "Lithuanian",
    "lv": "Latvian",
    "nl": "Dutch",
    "pl": "Polish",
    "ps": "Pashto",
    "pt": "Portuguese",
    "ro": "Romanian",
    "ru": "Russian",
    "sv": "Swedish",
    "sw": "Swahili",
    "ta": "Tamil",
    "te": "Telugu",
    "th": "Thai",
    "tr": "Turkish",
    "uk": "Ukrainian",
    "zh": "Chinese",
}


def language_name(code: str) -> str:
    return LANGUAGE_NAMES.get(code, code)


@dataclass(frozen=True)
class PromptMessages:
    system_text: str
    user_text: str
    mode: Mode


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    top_p: float = 1.0
    max_tokens: int = 1024

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not (0 < self.top_p <= 1):
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    def to_record(self) -> dict:
        return {
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
        }

    @classmethod
    def from_record(cls, record: dict) -> "DecodingParams":
        return cls(
            temperature=record.get("temperature", 0.0),
            top_p=record.get("top_p", 1.0),
            max_tokens=record.get("max_tokens", 1024),
        )


@dataclass(frozen=True)
class PostEditResult:
    """One post-editing outcome: the raw model text plus the parsed pieces.

    A failed parse keeps the raw output and carries an error message; its
    edits and improved translation stay empty.
    """

    segment_id: str
    mode: Mode
    raw_output: str
    edits: tuple[str, ...]
    improved: str
    model: str
    params: DecodingParams = field(default_factory=DecodingParams)
    prompt_version: str = DEFAULT_PROMPT_VERSION
    created_at: str = ""
    error: str | None = None

    def __post_init__(self):
        if self.mode is Mode.DIRECT and self.edits:
            raise ValueError("direct-mode results cannot carry edits")

    def to_record(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "mode": self.mode.value,
            "raw_output": self.raw_output,
            "edits": list(self.edits),
            "improved": self.improved,
            "model": self.model,
            "params": self.params.to_record(),
            "prompt_version": self.prompt_version,
            "created_at": self.created_at,
            "error": self.error,
        }

    @classmethod
    def from_record(cls, record: dict) -> "PostEditResult":
        return cls(
            segment_id=record["segment_id"],
            mode=Mode(record["mode"]),
            raw_output=record.get("raw_output", ""),
            edits=tuple(record.get("edits", ())),
            improved=record.get("improved", ""),
            model=record.get("model", ""),
            params=DecodingParams.from_record(record.get("params", {})),
            prompt_version=record.get("prompt_version", DEFAULT_PROMPT_VERSION),
            created_at=record.get("created_at", ""),
            error=record.get("error"),
        )


@dataclass(frozen=True)
class ZeroShotTranslation:
    segment_id: str
    text: str
    model: str

    def to_record(self) -> dict:
        return {"segment_id": self.segment_id, "text": self.text, "model": self.model}

    @classmethod
    def from_record(cls, record: dict) -> "ZeroShotTranslation":
        return cls(record["segment_id"], record.get("text", ""), record.get("model", ""))


@lru_cache(maxsize=None)
def load_template(version: str, mode_value: str, role: str) -> str:
    ref = resources.files("pelab") / "templates" / version / f"{mode_value}.{role}.txt"
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValueError(f"no prompt template {version}/{mode_value}.{role}.txt") from None
    return text.rstrip("\n")


def _fill(version: str, mode: Mode, role: str, segment: Segment) -> str:
    template = load_template(version, mode.value, role)
    return template.format(
        source_lang=language_name(segment.lang.src),
        target_lang=language_name(segment.lang.tgt),
        source=segment.source,
        translation=segment.initial_translation,
    )


def build_postedit_prompt(
    segment: Segment, mode: Mode, prompt_version: str = DEFAULT_PROMPT_VERSION
) -> PromptMessages:
    """Render the post-editing prompt for a segment.

    cot asks for a numbered "Proposed Improvements:" list followed by
    "Improved Translation:"; direct asks for only the improved translation.
    """
    if mode not in (Mode.COT, Mode.DIRECT):
        raise ValueError(f"post-editing mode must be cot or direct, got {mode!r}")
    return PromptMessages(
        system_text=_fill(prompt_version, mode, "system", segment),
        user_text=_fill(prompt_version, mode, "user", segment),
        mode=mode,
    )


def build_zeroshot_prompt(
    segment: Segment, prompt_version: str = DEFAULT_PROMPT_VERSION
) -> PromptMessages:
    """Render the from-scratch translation prompt; it never sees the
    initial translation."""
    return PromptMessages(
        system_text=_fill(prompt_version, Mode.ZEROSHOT, "system", segment),
        user_text=_fill(prompt_version, Mode.ZEROSHOT, "user", segment),
        mode=Mode.ZEROSHOT,
    )


# headers must sit at a line start so list items merely mentioning them
# cannot split the output
_IMPROVED_HEADER = re.compile(
    r"^[ \t]*(?:\*\*)?\s*improved\s+translation\s*(?::\s*)?(?:\*\*)?\s*:?",
    re.IGNORECASE | re.MULTILINE,
)
_IMPROVEMENTS_HEADER = re.compile(
    r"^[ \t]*(?:\*\*)?\s*proposed\s+improvements\s*(?::\s*)?(?:\*\*)?\s*:?",
    re.IGNORECASE | re.MULTILINE,
)
_ITEM_START = re.compile(r"^\s*(?:\d+[.)]|-)\s+(.*)$")

_QUOTE_PAIRS = {
    ('"', '"'),
    ("'", "'"),
    ("“", "”"),
    ("„", "“"),
    ("«", "»"),
}


def _strip_wrapping_quotes(text: str) -> str:
    if len(text) >= 2 and (text[0], text[-1]) in _QUOTE_PAIRS:
        return text[1:-1].strip()
    return text


def _parse_items(block: str) -> list[str]:
    items: list[str] = []
    for line in block.splitlines():
        if not line.strip():
            continue
        started = _ITEM_START.match(line)
        if started:
            items.append(started.group(1).strip())
        elif items:
            # continuation of a wrapped list item
            items[-1] = f"{items[-1]} {line.strip()}"
    return items


def parse_postedit_output(raw: str, mode: Mode) -> tuple[list[str], str]:
    """Split raw model output into (edits, improved translation).

    direct mode returns ([], trimmed raw). cot mode finds the improvements
    and translation headers (case-insensitive, tolerant of ** emphasis and
    trailing colons); if the model restated the translation header, the last
    one wins, and wrapping quotes around the translation are dropped.
    """
    if not raw.strip():
        raise ParseError("empty model output", raw=raw)
    if mode is Mode.DIRECT:
        return [], raw.strip()
    if mode is not Mode.COT:
        raise ValueError(f"cannot parse output for mode {mode!r}")
    headers = list(_IMPROVED_HEADER.finditer(raw))
    if not headers:
        raise ParseError("output lacks an 'Improved Translation' header", raw=raw)
    improved = _strip_wrapping_quotes(raw[headers[-1].end() :].strip())
    if not improved:
        raise ParseError("empty improved translation after header", raw=raw)
    edits_block = raw[: headers[0].start()]
    improvements = _IMPROVEMENTS_HEADER.search(edits_block)
    if improvements:
        edits_block = edits_block[improvements.end() :]
    return _parse_items(edits_block), improved


def render_postedit_output(edits: list[str], improved: str) -> str:
    """Canonical layout for a post-editing answer; parse_postedit_output
    inverts it."""
    lines = ["Proposed Improvements:"]
    lines.extend(f"{index}. {edit}" for index, edit in enumerate(edits, start=1))
    lines.append("Improved Translation:")
    lines.append(improved)
    return "\n".join(lines)
