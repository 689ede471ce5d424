"""Inter-annotator agreement for nominal binary votes.

Krippendorff's alpha is computed through the coincidence-matrix
formulation: within every item, each ordered pair of votes contributes
1/(m_u - 1) to the coincidence count of its value pair (m_u = number of
votes on that item).  With nominal disagreement delta(c, k) = [c != k],

    D_o = sum_{c != k} o_ck / n
    D_e = sum_{c != k} n_c * n_k / (n * (n - 1))
    alpha = 1 - D_o / D_e

where n is the number of pairable votes and n_c the per-value totals.
Items with fewer than two votes are unpairable and ignored (the standard
missing-data convention).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class DegenerateAgreementError(ValueError):
    """Alpha is undefined: every pairable vote carries the same value."""


@dataclass
class AgreementTable:
    """items x annotators vote matrix with missing cells allowed."""

    votes: dict[str, dict[str, int]] = field(default_factory=dict)

    def add_vote(self, item_id: str, annotator_id: str, value: int) -> None:
        if value not in (0, 1):
            raise ValueError(f"vote value must be 0 or 1, got {value!r}")
        self.votes.setdefault(item_id, {})[annotator_id] = value

    def item_ids(self) -> list[str]:
        return list(self.votes)

    def values_of(self, item_id: str) -> list[int]:
        return list(self.votes[item_id].values())

    def value_lists(self) -> list[list[int]]:
        return [self.values_of(i) for i in self.votes]

    @classmethod
    def from_votes(cls, records: Iterable[tuple[str, str, int]]) -> "AgreementTable":
        table = cls()
        for item_id, annotator_id, value in records:
            table.add_vote(item_id, annotator_id, value)
        return table


def _as_value_lists(table) -> list[list[int]]:
    if isinstance(table, AgreementTable):
        return table.value_lists()
    if isinstance(table, Mapping):
        return [list(v) for v in table.values()]
    return [list(v) for v in table]


def krippendorff_alpha(table) -> float:
    """Nominal-data alpha; accepts an AgreementTable, a mapping of
    item -> votes, or an iterable of per-item vote sequences."""
    value_lists = [vs for vs in _as_value_lists(table) if len(vs) >= 2]
    if len(value_lists) < 2:
        raise ValueError("alpha needs at least 2 items with 2+ votes each")
    coincidence: Counter[tuple[int, int]] = Counter()
    totals: Counter[int] = Counter()
    n = 0
    for values in value_lists:
        m = len(values)
        counts = Counter(values)
        n += m
        for c, cc in counts.items():
            totals[c] += cc
            for k, ck in counts.items():
                pairs = cc * (ck - 1) if c == k else cc * ck
                if pairs:
                    coincidence[(c, k)] += pairs / (m - 1)
    if len(totals) < 2:
        raise DegenerateAgreementError(
            "all pairable votes share one value; expected disagreement is zero"
        )
    d_obs = sum(v for (c, k), v in coincidence.items() if c != k) / n
    d_exp = sum(
        totals[c] * totals[k] for c in totals for k in totals if c != k
    ) / (n * (n - 1))
    return 1.0 - d_obs / d_exp


def majority_label(votes: Sequence[int]) -> int | None:
    """Strict-majority vote; None when the top counts tie (unresolved)."""
    if not votes:
        raise ValueError("votes must be nonempty")
    counts = Counter(votes)
    ranked = counts.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None
    return ranked[0][0]


def agreement_share(votes: Sequence[int]) -> float:
    """Share of votes carried by the most common value."""
    if not votes:
        raise ValueError("votes must be nonempty")
    return Counter(votes).most_common(1)[0][1] / len(votes)


@dataclass(frozen=True)
class AgreementPolicy:
    min_share: float = 2.0 / 3.0
    min_votes: int = 1


@dataclass
class AgreementReport:
    alpha: float | None
    degenerate: bool
    per_item_share: dict[str, float]
    retained: list[str]
    removed: list[str]


def filter_by_agreement(
    items: Mapping[str, Sequence[int]], policy: AgreementPolicy | None = None
) -> list[str]:
    """Item ids whose votes are decisive enough to keep.

    An item is retained when its modal-vote share reaches the policy
    threshold, it has at least ``min_votes`` votes, and a strict majority
    label exists.
    """
    policy = policy or AgreementPolicy()
    retained = []
    for item_id, votes in items.items():
        if len(votes) < policy.min_votes:
            continue
        if majority_label(votes) is None:
            continue
        if agreement_share(votes) >= policy.min_share:
            retained.append(item_id)
    return retained


def build_report(
    items: Mapping[str, Sequence[int]], policy: AgreementPolicy | None = None
) -> AgreementReport:
    """Corpus-level alpha plus the per-item retention decision."""
    policy = policy or AgreementPolicy()
    retained = filter_by_agreement(items, policy)
    retained_set = set(retained)
    removed = [i for i in items if i not in retained_set]
    shares = {i: agreement_share(v) for i, v in items.items() if v}
    alpha: float | None
    degenerate = False
    try:
        alpha = krippendorff_alpha(items)
    except DegenerateAgreementError:
        alpha = None
        degenerate = True
    except ValueError:
        alpha = None
    return AgreementReport(
        alpha=alpha,
        degenerate=degenerate,
        per_item_share=shares,
        retained=retained,
        removed=removed,
    )
