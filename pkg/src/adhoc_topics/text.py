"""Word tokenization and frequency-capped vocabulary.

The tokenizer is shared by the retrieval pre-labeler and the classifier so
that both operate on identical term streams; only the classifier applies the
vocabulary cap.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

_WORD = re.compile(r"\w+", re.UNICODE)

DEFAULT_VOCAB_SIZE = 20_000


def tokenize(text: str) -> list[str]:
    """Split on whitespace and punctuation, preserving case."""
    return _WORD.findall(text)


@dataclass(frozen=True)
class Vocabulary:
    """Token -> id map over the most frequent training tokens.

    Out-of-vocabulary tokens are dropped at encode time, as if they were not
    present in the text. Built from the training split only.
    """

    token_to_id: dict[str, int]

    def __len__(self) -> int:
        return len(self.token_to_id)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: list[str]) -> list[int]:
        t2i = self.token_to_id
        return [t2i[t] for t in tokens if t in t2i]

    def encode_text(self, text: str) -> list[int]:
        return self.encode(tokenize(text))


def build_vocabulary(texts, max_size: int = DEFAULT_VOCAB_SIZE) -> Vocabulary:
    """Keep the `max_size` most frequent tokens; ties break lexicographically."""
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(tokenize(text))
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary({tok: i for i, (tok, _) in enumerate(ranked[:max_size])})
