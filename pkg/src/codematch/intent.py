"""Keyword-rule engine that removes queries without code-search intent.

A rule set is an ordered list of categories, each holding an ordered list
of keyword patterns.  Matching is case-insensitive and purely lexical:

  * alphabetic keywords match as whole words (``"why"`` does not hit
    ``"whyme"``), multiword keywords as whole phrases,
  * symbol keywords (``"()"``, ``"@"``, ``"-"``) match as literal
    substrings,
  * ``...`` inside a keyword is a gap: the parts must appear in order,
    anything in between (``"try ... except"``),
  * ``/`` inside a word is an alternative (``"turn ... on/off"``).

The first matching keyword decides; categories are checked in file order.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

DEFAULT_CATEGORY_NAMES = (
    "Debugging",
    "Conceptual",
    "Programming Knowledge",
    "Tools Usage",
    "Others",
)

_PYTHON_RE = re.compile(r"\bpython\b")
_WORD_CHAR = re.compile(r"\w")


def _bounded(literal: str) -> str:
    pattern = re.escape(literal)
    if _WORD_CHAR.match(literal[0]):
        pattern = r"\b" + pattern
    if _WORD_CHAR.match(literal[-1]):
        pattern = pattern + r"\b"
    return pattern


def compile_keyword(keyword: str) -> re.Pattern:
    parts = [p.strip() for p in keyword.split("...")]
    if not all(parts):
        raise ValueError(f"bad keyword pattern: {keyword!r}")
    rx_parts = []
    for part in parts:
        alts = part.split("/") if "/" in part else [part]
        rx_parts.append("(?:" + "|".join(_bounded(a) for a in alts) + ")")
    return re.compile(".*?".join(rx_parts))


@dataclass(frozen=True)
class FilterVerdict:
    has_intent: bool
    matched_category: str | None = None
    matched_keyword: str | None = None


class RuleSet:
    """Ordered category -> keyword-pattern table."""

    def __init__(self, categories: list[tuple[str, list[str]]]):
        self.categories = [(name, list(kws)) for name, kws in categories]
        self._compiled = [
            (name, [(kw, compile_keyword(kw)) for kw in kws])
            for name, kws in self.categories
        ]

    @property
    def total_keywords(self) -> int:
        return sum(len(kws) for _, kws in self.categories)

    def category_names(self) -> list[str]:
        return [name for name, _ in self.categories]

    def without_category(self, name: str) -> "RuleSet":
        return RuleSet([(n, kws) for n, kws in self.categories if n != name])

    @classmethod
    def from_dict(cls, data: dict) -> "RuleSet":
        return cls([(c["name"], c["keywords"]) for c in data["categories"]])

    def to_dict(self) -> dict:
        return {
            "categories": [
                {"name": name, "keywords": kws} for name, kws in self.categories
            ]
        }

    @classmethod
    def load(cls, path) -> "RuleSet":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def default_rules() -> RuleSet:
    """Bundled rule set; validated against its documented shape."""
    text = resources.files("codematch.resources").joinpath("intent_rules.json").read_text(
        encoding="utf-8"
    )
    rules = RuleSet.from_dict(json.loads(text))
    names = rules.category_names()
    missing = [n for n in DEFAULT_CATEGORY_NAMES if n not in names]
    if missing:
        raise ValueError(f"bundled rules missing categories: {missing}")
    if rules.total_keywords < 100:
        raise ValueError(
            f"bundled rules carry {rules.total_keywords} keywords, expected >= 100"
        )
    return rules


def prefilter_python(text: str) -> bool:
    """True iff the lowercased text contains the whole word 'python'."""
    return _PYTHON_RE.search(text.lower()) is not None


def classify(text: str, rules: RuleSet) -> FilterVerdict:
    """First matching keyword wins; no match means the query has intent."""
    lowered = text.lower()
    for name, compiled in rules._compiled:
        for keyword, rx in compiled:
            if rx.search(lowered):
                return FilterVerdict(False, name, keyword)
    return FilterVerdict(True)


@dataclass(frozen=True)
class FilterMetrics:
    precision: float
    recall: float
    f1: float
    accuracy: float


def evaluate_filter(verdicts, gold_labels) -> FilterMetrics:
    """Binary metrics (percent) with has_intent=True as the positive class.

    ``verdicts`` may be FilterVerdict objects or plain booleans; gold labels
    are booleans.
    """
    preds = [v.has_intent if isinstance(v, FilterVerdict) else bool(v) for v in verdicts]
    gold = [bool(g) for g in gold_labels]
    if len(preds) != len(gold):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(gold)} labels")
    tp = sum(1 for p, g in zip(preds, gold) if p and g)
    fp = sum(1 for p, g in zip(preds, gold) if p and not g)
    fn = sum(1 for p, g in zip(preds, gold) if not p and g)
    tn = sum(1 for p, g in zip(preds, gold) if not p and not g)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / len(gold) if gold else 0.0
    return FilterMetrics(
        precision=100.0 * precision,
        recall=100.0 * recall,
        f1=100.0 * f1,
        accuracy=100.0 * accuracy,
    )


def load_eval_fixture() -> list[tuple[str, bool]]:
    """Bundled 50-query fixture with frozen human intent labels."""
    text = resources.files("codematch.resources").joinpath("intent_eval_fixture.jsonl").read_text(
        encoding="utf-8"
    )
    out = []
    for line in text.splitlines():
        if line.strip():
            record = json.loads(line)
            out.append((record["query"], bool(record["gold_intent"])))
    return out
