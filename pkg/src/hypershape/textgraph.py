"""Captions to syntax graphs: tokenizer, rule parser, CoNLL-U I/O, and the
tree-to-graph adjacency construction.

The rule parser covers exactly the closed caption grammar emitted by the
dataset generator (category noun as root, modifiers attached to the nearest
following noun, "with" phrases hanging off the root, conjuncts off the
first conjunct). Anything else should arrive as CoNLL-U.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolationError, FormatError, ParseError

_TOKEN_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)*|[^\sa-z0-9]")

# Closed caption lexicon (Universal POS tags). Shared with datagen.
CATEGORIES = ("chair", "table", "stool")
STYLES = (
    "wooden",
    "metal",
    "plastic",
    "soft",
    "modern",
    "simple",
    "rustic",
    "sturdy",
    "small",
    "large",
)
LEG_SHAPES = ("round", "square")
NUMERALS = ("three", "four")
PART_NOUNS = ("legs", "backrest", "armrests", "top", "seat")
PART_ADJS = ("tall", "low", "wide", "narrow", "thick", "thin", "padded")

POS_LEXICON: dict[str, str] = {}
POS_LEXICON.update({w: "NOUN" for w in CATEGORIES + PART_NOUNS})
POS_LEXICON.update({w: "ADJ" for w in STYLES + LEG_SHAPES + PART_ADJS})
POS_LEXICON.update({w: "NUM" for w in NUMERALS})
POS_LEXICON["a"] = "DET"
POS_LEXICON["with"] = "ADP"
POS_LEXICON["and"] = "CCONJ"
POS_LEXICON["."] = "PUNCT"


@dataclass(frozen=True)
class SyntaxToken:
    form: str
    pos: str
    head: int  # token index; the root points at itself


@dataclass(frozen=True)
class SyntaxTree:
    tokens: tuple[SyntaxToken, ...]

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise ContractViolationError("a syntax tree needs at least one token")
        roots = [i for i, t in enumerate(self.tokens) if t.head == i]
        if len(roots) != 1:
            raise ContractViolationError(f"expected exactly one root, got {len(roots)}")
        for i, t in enumerate(self.tokens):
            if not 0 <= t.head < n:
                raise ContractViolationError(f"head index {t.head} out of range")
        # every node must reach the root (no cycles off the root)
        root = roots[0]
        for i in range(n):
            seen = set()
            j = i
            while j != root:
                if j in seen:
                    raise ContractViolationError("head links contain a cycle")
                seen.add(j)
                j = self.tokens[j].head

    @property
    def root(self) -> int:
        return next(i for i, t in enumerate(self.tokens) if t.head == i)

    def children(self, i: int) -> list[int]:
        return [j for j, t in enumerate(self.tokens) if t.head == i and j != i]


@dataclass(frozen=True)
class SyntaxGraph:
    tokens: tuple[SyntaxToken, ...]
    adjacency: np.ndarray = field(compare=False)

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.shape != (len(self.tokens), len(self.tokens)):
            raise ContractViolationError("adjacency order must match token count")
        if not np.array_equal(a, a.T) or not np.all(np.diag(a) == 1):
            raise ContractViolationError("adjacency must be symmetric with unit diag")
        if not np.all((a == 0) | (a == 1)):
            raise ContractViolationError("adjacency entries must be 0/1")


def tokenize(text: str) -> list[str]:
    """Lowercase, split punctuation off; hyphenated compounds stay whole."""
    if not text or not text.strip():
        raise ContractViolationError("cannot tokenize empty input")
    return _TOKEN_RE.findall(text.lower())


def parse_synthetic(tokens: list[str]) -> SyntaxTree:
    """Deterministic dependency parse of a closed-grammar caption."""
    if not tokens:
        raise ParseError("no tokens to parse")
    pos = []
    for tok in tokens:
        if tok not in POS_LEXICON:
            raise ParseError(f"token {tok!r} is outside the caption grammar")
        pos.append(POS_LEXICON[tok])

    n = len(tokens)
    heads = [-1] * n
    noun_idx = [i for i, p in enumerate(pos) if p == "NOUN"]
    root_candidates = [i for i in noun_idx if tokens[i] in CATEGORIES]
    if not root_candidates:
        raise ParseError("caption has no category noun to serve as root")
    root = root_candidates[0]
    heads[root] = root

    def next_noun(i: int) -> int:
        for j in noun_idx:
            if j > i:
                return j
        raise ParseError(f"modifier {tokens[i]!r} has no following noun")

    with_idx = None
    first_conjunct = None
    for i, p in enumerate(pos):
        if i == root:
            continue
        if p in ("DET", "ADJ", "NUM"):
            heads[i] = next_noun(i)
        elif p == "ADP":
            heads[i] = root
            with_idx = i
        elif p == "CCONJ":
            heads[i] = next_noun(i)
        elif p == "PUNCT":
            heads[i] = root
        elif p == "NOUN":
            if with_idx is None or i < with_idx:
                raise ParseError(f"unexpected bare noun {tokens[i]!r}")
            if first_conjunct is None:
                heads[i] = with_idx
                first_conjunct = i
            else:
                heads[i] = first_conjunct
    return SyntaxTree(tuple(SyntaxToken(t, p, h) for t, p, h in zip(tokens, pos, heads)))


def tree_to_graph(tree: SyntaxTree, mode: str = "corrected") -> SyntaxGraph:
    """Adjacency matrix of the text graph.

    `faithful` reproduces the published traversal including its guard that
    skips edges to the final token (child index j only when j < n-1);
    `corrected` (default) keeps every head-child edge.
    """
    if mode not in ("faithful", "corrected"):
        raise ContractViolationError(f"unknown mode {mode!r}")
    n = len(tree.tokens)
    m = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        m[i, i] = 1
        for j in tree.children(i):
            if mode == "faithful" and not j < n - 1:
                continue
            m[i, j] = 1
            m[j, i] = 1
    return SyntaxGraph(tree.tokens, m)


# ---------------------------------------------------------------------------
# CoNLL-U ingestion
# ---------------------------------------------------------------------------


def read_conllu(path) -> list[SyntaxTree]:
    """Read CoNLL-U sentences; HEAD=0 becomes a self-headed root."""
    path = Path(path)
    trees: list[SyntaxTree] = []
    current: list[tuple[str, str, int]] = []

    def flush(line_no: int):
        if not current:
            return
        toks = []
        for idx, (form, upos, head) in enumerate(current):
            h = idx if head == 0 else head - 1
            if not 0 <= h < len(current):
                raise FormatError(f"{path}:{line_no}: HEAD {head} out of range")
            toks.append(SyntaxToken(form, upos, h))
        try:
            trees.append(SyntaxTree(tuple(toks)))
        except ContractViolationError as e:
            raise ContractViolationError(f"{path}: invalid sentence: {e}") from e
        current.clear()

    line_no = 0
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                flush(line_no)
                continue
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise FormatError(
                    f"{path}:{line_no}: expected 10 tab-separated columns, "
                    f"got {len(cols)}"
                )
            token_id = cols[0]
            if "-" in token_id or "." in token_id:
                continue  # multiword ranges / empty nodes carry no HEAD
            try:
                idx = int(token_id)
                head = int(cols[6])
            except ValueError as e:
                raise FormatError(f"{path}:{line_no}: non-integer ID/HEAD") from e
            if idx != len(current) + 1:
                raise FormatError(f"{path}:{line_no}: IDs must be 1..n in order")
            current.append((cols[1], cols[3], head))
        flush(line_no + 1)
    return trees


def write_conllu(trees: list[SyntaxTree], path):
    """Write trees as CoNLL-U, preserving ID, FORM, UPOS, and HEAD."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for tree in trees:
            for i, tok in enumerate(tree.tokens):
                head = 0 if tok.head == i else tok.head + 1
                cols = [
                    str(i + 1),
                    tok.form,
                    "_",
                    tok.pos,
                    "_",
                    "_",
                    str(head),
                    "_",
                    "_",
                    "_",
                ]
                f.write("\t".join(cols) + "\n")
            f.write("\n")
