"""Topic taxonomy and multi-label sets.

The taxonomy is a fixed panel of 20 economically motivated topics for firm
disclosures. Labels on a text are an arbitrary subset of those topics
(including the empty set), represented as a 20-bit mask.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

NUM_TOPICS = 20


class TaxonomyError(ValueError):
    """Raised when a taxonomy configuration violates its invariants."""


@dataclass(frozen=True)
class Topic:
    id: int
    name: str
    description: str
    keywords: tuple[str, ...]


@dataclass(frozen=True, order=True)
class LabelSet:
    """Subset of the 20 topics, stored as a bitmask. Empty sets are legal."""

    mask: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.mask < (1 << NUM_TOPICS):
            raise ValueError(f"label mask out of range: {self.mask}")

    @classmethod
    def from_ids(cls, ids) -> "LabelSet":
        mask = 0
        for i in ids:
            if not 0 <= i < NUM_TOPICS:
                raise ValueError(f"topic id out of range: {i}")
            mask |= 1 << i
        return cls(mask)

    def ids(self) -> tuple[int, ...]:
        return tuple(i for i in range(NUM_TOPICS) if self.mask >> i & 1)

    def __contains__(self, topic_id: int) -> bool:
        return bool(self.mask >> topic_id & 1)

    def __iter__(self):
        return iter(self.ids())

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __bool__(self) -> bool:
        return self.mask != 0

    def __or__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.mask | other.mask)

    def __and__(self, other: "LabelSet") -> "LabelSet":
        return LabelSet(self.mask & other.mask)


EMPTY_LABELS = LabelSet(0)

# name, description, keyword query used for preliminary retrieval labels
_DEFAULT_TAXONOMY: list[tuple[str, str, tuple[str, ...]]] = [
    (
        "Earnings",
        "Earnings announcement, regular reporting on quarterly or annual results",
        ("earnings", "EBT", "EBIT", "EBITDA", "growth", "profit", "loss", "sales",
         "quarter", "figures", "announce", "comparison", "previous year", "half-year"),
    ),
    (
        "SEO",
        "Capital increase/reduction by issuing additional shares",
        ("capital increase", "capital decrease", "subscription right", "shares",
         "subscribed", "placed", "issue price", "investors", "volume"),
    ),
    (
        "Management",
        "Changes in management (board of directors, supervisory board, etc.)",
        ("chairman of the board", "CEO", "appointed", "office", "member",
         "supervisory board", "resign", "depart", "successor"),
    ),
    (
        "Guidance",
        "A company's forecast of its own profit or loss in the near future",
        ("forecast", "expectation", "result", "profit", "loss", "EBIT", "assume",
         "expect"),
    ),
    (
        "Profit Warning",
        "Surprising deterioration in earnings or the earnings forecast",
        ("profit warning", "negative", "reduce", "impairment", "deterioration"),
    ),
    (
        "M&A",
        "New or expanded investment in a company, including acquisitions",
        ("takeover", "acquires", "purchase price", "acquisition", "synergy",
         "merger"),
    ),
    (
        "Dividend",
        "Announcement of a dividend or the dividend amount",
        ("dividend", "distribution", "entitled to profit", "euros per share"),
    ),
    (
        "Restructuring",
        "Restructuring of processes, organization, or capital structure",
        ("restructuring", "restructure", "reorganization", "debt relief",
         "divestment", "secure financing", "bridge financing"),
    ),
    (
        "Debt",
        "Company issues or returns a loan or bond",
        ("bond", "convertible", "debenture", "loan", "repayment", "interest rate",
         "coupon", "maturity", "liabilities"),
    ),
    (
        "Law",
        "Company involved in litigation, court case, or investigation",
        ("court", "convicted", "dismissed", "prosecution", "proceedings", "appeal",
         "judgment", "complaint", "damages", "lawsuit", "litigation"),
    ),
    (
        "Large Scale Project",
        "Completion of a major project or order for the company",
        ("major order", "contract", "large-scale project"),
    ),
    (
        "Squeeze Out",
        "Majority shareholder applies for transfer of minority shares",
        ("squeeze-out", "squeeze", "cash compensation", "transfer of shares",
         "remaining shareholders", "majority shareholder", "minority shareholder"),
    ),
    (
        "Bankruptcy Filing",
        "Company or third party has filed or will file for bankruptcy",
        ("bankruptcy application", "bankruptcy", "insolvency", "local court",
         "filed"),
    ),
    (
        "Bankruptcy Proceedings",
        "Concrete progress of bankruptcy proceedings is published",
        ("bankruptcy plan", "bankruptcy administrator", "bankruptcy proceedings",
         "self-administration", "insolvency plan"),
    ),
    (
        "Delay",
        "Mandatory report is postponed or not published at all",
        ("delay", "postpone", "cancel", "annual financial statements", "IFRS"),
    ),
    (
        "Split",
        "Company carries out a stock split",
        ("share split", "split", "ratio", "bonus share", "additional share"),
    ),
    (
        "Pharma Good",
        "Drug approval, announcement, or study success",
        ("approval", "FDA", "study", "treatment", "drug", "therapy",
         "active ingredient", "clinical", "trial"),
    ),
    (
        "Buyback",
        "Repurchase of own shares",
        ("buyback", "share buyback program", "redeem", "reduction of share capital"),
    ),
    (
        "Real Invest",
        "Buying or selling assets such as land, factories, machinery",
        ("factory", "land parcel", "construction", "production area", "usable area",
         "office building", "sells", "build", "location"),
    ),
    (
        "Delisting",
        "Permanent removal of a stock from a stock exchange",
        ("delisting", "revocation", "offer to purchase", "termination of listing",
         "stock exchange", "terminate"),
    ),
]


def default_taxonomy() -> list[Topic]:
    """The built-in 20-topic taxonomy with retrieval keyword queries."""
    return [
        Topic(id=i, name=name, description=desc, keywords=kw)
        for i, (name, desc, kw) in enumerate(_DEFAULT_TAXONOMY)
    ]


def validate_taxonomy(topics: list[Topic]) -> list[Topic]:
    if len(topics) != NUM_TOPICS:
        raise TaxonomyError(f"expected {NUM_TOPICS} topics, got {len(topics)}")
    ids = sorted(t.id for t in topics)
    if ids != list(range(NUM_TOPICS)):
        raise TaxonomyError(f"topic ids must be dense 0..{NUM_TOPICS - 1}, got {ids}")
    if len({t.name for t in topics}) != NUM_TOPICS:
        raise TaxonomyError("topic names must be unique")
    for t in topics:
        if not t.keywords:
            raise TaxonomyError(f"topic {t.name!r} has an empty keyword list")
    return sorted(topics, key=lambda t: t.id)


def load_taxonomy(path) -> list[Topic]:
    """Load a taxonomy from a YAML file of `{topics: [{id, name, description, keywords}]}`."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict) or "topics" not in raw:
        raise TaxonomyError(f"{path}: expected a mapping with a 'topics' list")
    topics = []
    for entry in raw["topics"]:
        try:
            topics.append(
                Topic(
                    id=int(entry["id"]),
                    name=str(entry["name"]),
                    description=str(entry.get("description", "")),
                    keywords=tuple(str(k) for k in entry["keywords"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise TaxonomyError(f"{path}: malformed topic entry {entry!r}") from exc
    return validate_taxonomy(topics)


def dump_taxonomy(topics: list[Topic], path) -> None:
    data = {
        "topics": [
            {
                "id": t.id,
                "name": t.name,
                "description": t.description,
                "keywords": list(t.keywords),
            }
            for t in sorted(topics, key=lambda t: t.id)
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(data, fh, sort_keys=False, allow_unicode=True)


def topic_names(topics: list[Topic]) -> list[str]:
    return [t.name for t in sorted(topics, key=lambda t: t.id)]
