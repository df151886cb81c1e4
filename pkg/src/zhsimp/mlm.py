"""Masked language model interface, character tokenization and backends.

Chinese text is tokenized one token per CJK character. Punctuation marks are
single tokens too, any other non-whitespace run is one token, and whitespace
is dropped.

The mock backend is table driven. Each table line is
``context_key<TAB>token:prob,token:prob,...`` and the query is resolved by
trying, in order:

1. the full key: every token of the queried segment concatenated, the
   queried position written as ``[Q]`` and other masks as ``[MASK]``;
2. the local key: the same rendering restricted to the left neighbour, the
   queried position and the right neighbour;
3. the fallback row keyed ``*``.

Only the segment holding the queried position takes part in the key, so a
sentence pair and its second segment on its own resolve identically.
"""

from __future__ import annotations

import abc
import math
import threading
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

MASK = "[MASK]"
QUERY = "[Q]"
DEFAULT_CEILING_LOSS = 20.0


class MaskContractError(ValueError):
    """A query addressed a position that is not a mask sentinel."""


def is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x4E00 <= cp <= 0x9FFF
        or 0x3400 <= cp <= 0x4DBF
        or 0x20000 <= cp <= 0x2EBEF
        or 0x30000 <= cp <= 0x3134F
        or 0xF900 <= cp <= 0xFAFF
        or 0x2F800 <= cp <= 0x2FA1F
    )


def tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    run: list[str] = []
    for ch in text:
        if is_cjk(ch) or ch.isspace() or unicodedata.category(ch).startswith("P"):
            if run:
                tokens.append("".join(run))
                run = []
            if not ch.isspace():
                tokens.append(ch)
        else:
            run.append(ch)
    if run:
        tokens.append("".join(run))
    return tokens


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]
    pair_boundary: int | None = None

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("token sequence is empty")
        if self.pair_boundary is not None and not 0 < self.pair_boundary < len(self.tokens):
            raise ValueError("pair boundary must fall strictly inside the sequence")

    @classmethod
    def single(cls, tokens: Iterable[str]) -> "TokenSequence":
        return cls(tuple(tokens))

    @classmethod
    def pair(cls, first: Iterable[str], second: Iterable[str]) -> "TokenSequence":
        first = tuple(first)
        return cls(first + tuple(second), len(first))

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i: int) -> str:
        return self.tokens[i]

    def replace(self, position: int, token: str) -> "TokenSequence":
        tokens = list(self.tokens)
        tokens[position] = token
        return TokenSequence(tuple(tokens), self.pair_boundary)

    def segment_of(self, position: int) -> tuple[int, int]:
        """Half-open token span of the segment containing ``position``."""
        b = self.pair_boundary
        if b is None:
            return 0, len(self.tokens)
        return (0, b) if position < b else (b, len(self.tokens))


# list of (token, probability), probability descending then codepoint ascending
MaskDistribution = list[tuple[str, float]]


def sort_distribution(entries: Iterable[tuple[str, float]]) -> MaskDistribution:
    return sorted(entries, key=lambda tp: (-tp[1], tp[0]))


class MlmBackend(abc.ABC):
    """Two queries against a masked LM: top-n fills and per-token loss."""

    ceiling_loss: float = DEFAULT_CEILING_LOSS

    @abc.abstractmethod
    def distribution(self, seq: TokenSequence, position: int) -> MaskDistribution:
        """Every token with non-zero probability at ``position``, best first."""

    def probability(self, seq: TokenSequence, position: int, token: str) -> float:
        for tok, p in self.distribution(seq, position):
            if tok == token:
                return p
        return 0.0

    def predict_masked(self, seq: TokenSequence, position: int, top_n: int) -> MaskDistribution:
        _check_mask(seq, position)
        if top_n < 1:
            raise ValueError("top_n must be >= 1")
        return self.distribution(seq, position)[:top_n]

    def predict_all(self, seq: TokenSequence, position: int) -> MaskDistribution:
        _check_mask(seq, position)
        return self.distribution(seq, position)

    def token_loss(self, seq: TokenSequence, position: int, true_token: str) -> float:
        _check_mask(seq, position)
        p = self.probability(seq, position, true_token)
        if p <= 0.0:
            return self.ceiling_loss
        return -math.log(p)


def _check_mask(seq: TokenSequence, position: int) -> None:
    if not 0 <= position < len(seq):
        raise MaskContractError(f"position {position} outside sequence of length {len(seq)}")
    if seq[position] != MASK:
        raise MaskContractError(f"position {position} holds {seq[position]!r}, not {MASK}")


def predict_masked(backend: MlmBackend, seq: TokenSequence, position: int, top_n: int) -> MaskDistribution:
    return backend.predict_masked(seq, position, top_n)


def token_loss(backend: MlmBackend, seq: TokenSequence, position: int, true_token: str) -> float:
    return backend.token_loss(seq, position, true_token)


def render_key(seq: TokenSequence, position: int, local: bool = False) -> str:
    start, end = seq.segment_of(position)
    if local:
        start, end = max(start, position - 1), min(end, position + 2)
    return "".join(QUERY if i == position else seq[i] for i in range(start, end))


class MockBackend(MlmBackend):
    """Deterministic lookup-table stand-in for a masked LM."""

    def __init__(
        self,
        table: dict[str, Sequence[tuple[str, float]]],
        ceiling_loss: float = DEFAULT_CEILING_LOSS,
    ):
        self.table: dict[str, MaskDistribution] = {}
        for key, row in table.items():
            self.table[key] = _validated_row(key, row)
        self.ceiling_loss = ceiling_loss

    @classmethod
    def parse(cls, lines: Iterable[str], ceiling_loss: float = DEFAULT_CEILING_LOSS, source: str = "<mock table>") -> "MockBackend":
        table: dict[str, list[tuple[str, float]]] = {}
        for line_no, line in enumerate(lines, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            key, sep, body = line.partition("\t")
            if not sep or not key:
                raise ValueError(f"{source}:{line_no}: expected context_key<TAB>rows")
            if key in table:
                raise ValueError(f"{source}:{line_no}: duplicate key {key!r}")
            row = []
            for item in body.split(","):
                token, colon, prob = item.strip().rpartition(":")
                if not colon or not token:
                    raise ValueError(f"{source}:{line_no}: bad entry {item!r}")
                try:
                    row.append((token, float(prob)))
                except ValueError:
                    raise ValueError(f"{source}:{line_no}: bad probability {prob!r}") from None
            try:
                table[key] = _validated_row(key, row)
            except ValueError as exc:
                raise ValueError(f"{source}:{line_no}: {exc}") from None
        return cls(table, ceiling_loss)

    @classmethod
    def load(cls, path: str, ceiling_loss: float = DEFAULT_CEILING_LOSS) -> "MockBackend":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh, ceiling_loss, source=str(path))

    def dumps(self) -> str:
        return "".join(
            f"{key}\t" + ",".join(f"{tok}:{p!r}" for tok, p in row) + "\n"
            for key, row in self.table.items()
        )

    def row_for(self, seq: TokenSequence, position: int) -> MaskDistribution:
        for key in (render_key(seq, position), render_key(seq, position, local=True), "*"):
            if key in self.table:
                return self.table[key]
        return []

    def distribution(self, seq: TokenSequence, position: int) -> MaskDistribution:
        return list(self.row_for(seq, position))


def _validated_row(key: str, row: Iterable[tuple[str, float]]) -> MaskDistribution:
    row = list(row)
    tokens = [tok for tok, _ in row]
    if len(set(tokens)) != len(tokens):
        raise ValueError(f"duplicate token in row {key!r}")
    for tok, p in row:
        if not (0.0 < p <= 1.0):
            raise ValueError(f"probability {p} for {tok!r} outside (0, 1]")
    if math.fsum(p for _, p in row) > 1.0 + 1e-6:
        raise ValueError(f"row {key!r} sums above 1")
    return sort_distribution(row)


class TransformersBackend(MlmBackend):
    """Adapter for a Hugging Face masked LM such as ``bert-base-chinese``.

    Only single-CJK-character vocabulary entries are offered as fills; losses
    use the full vocabulary. Queries are serialized with a lock, so one
    instance may be shared across threads.
    """

    def __init__(self, model_name: str = "bert-base-chinese", device: str = "cpu",
                 ceiling_loss: float = DEFAULT_CEILING_LOSS):
        try:
            import torch
            from transformers import AutoModelForMaskedLM, AutoTokenizer
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise RuntimeError("the transformers backend needs torch and transformers installed") from exc
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModelForMaskedLM.from_pretrained(model_name).to(device).eval()
        self.device = device
        self.ceiling_loss = ceiling_loss
        vocab = self.tokenizer.get_vocab()
        self._char_ids = sorted(i for tok, i in vocab.items() if len(tok) == 1 and is_cjk(tok))
        self._char_tokens = self.tokenizer.convert_ids_to_tokens(self._char_ids)
        self._lock = threading.Lock()

    def _encode(self, seq: TokenSequence):
        tok = self.tokenizer
        ids = [tok.mask_token_id if t == MASK else tok.convert_tokens_to_ids(t) for t in seq.tokens]
        unk = tok.unk_token_id
        ids = [unk if i is None else i for i in ids]
        b = seq.pair_boundary
        if b is None:
            input_ids = [tok.cls_token_id] + ids + [tok.sep_token_id]
            types = [0] * len(input_ids)
        else:
            first = [tok.cls_token_id] + ids[:b] + [tok.sep_token_id]
            second = ids[b:] + [tok.sep_token_id]
            input_ids = first + second
            types = [0] * len(first) + [1] * len(second)
        t = self._torch
        return (t.tensor([input_ids], device=self.device), t.tensor([types], device=self.device))

    def _probs(self, seq: TokenSequence, position: int):
        input_ids, types = self._encode(seq)
        offset = 1 if seq.pair_boundary is None or position < seq.pair_boundary else 2
        with self._lock, self._torch.no_grad():
            logits = self.model(input_ids=input_ids, token_type_ids=types).logits[0, position + offset]
        return self._torch.softmax(logits.double(), dim=-1)

    def distribution(self, seq: TokenSequence, position: int) -> MaskDistribution:
        probs = self._probs(seq, position)[self._char_ids].tolist()
        return sort_distribution((tok, p) for tok, p in zip(self._char_tokens, probs) if p > 0.0)

    def probability(self, seq: TokenSequence, position: int, token: str) -> float:
        token_id = self.tokenizer.convert_tokens_to_ids(token)
        if token_id is None or token_id == self.tokenizer.unk_token_id:
            return 0.0
        return float(self._probs(seq, position)[token_id])
