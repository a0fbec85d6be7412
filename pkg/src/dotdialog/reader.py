"""Convert utterance text into a meaning program.

Two backends share the same four-step decomposition (classify the dialogue
act, resolve which turn is being referenced, extract constraints, compose):

* grammar: a deterministic parser that exactly inverts the writer's templates
  and absorbs common human variation through a synonym table. Needs no
  network and is total on the writer's output language.
* external-model: each of the first three steps is one chat-completion call;
  composition never touches the model. Requests are cached content-addressed
  so replays are byte-identical.

History entries are duck-typed: a turn exposes `interpretations` (an
InterpretationDist or None) and a `confirmed` flag.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Sequence

from .meaning import (
    Constraint, MeaningProgram, ProgramAct, ProgramValidationError, validate_program,
)
from .perception import PredicateId
from .writer import SELECT_MARKER


class DialogueAct(str, Enum):
    NEW = "new"
    FOLLOW_UP = "followup"
    END = "end"


class UnparseableUtteranceError(ValueError):
    """The utterance could not be mapped to a meaning program."""


@dataclass(frozen=True)
class ReaderBackend:
    """Which reading implementation to use, plus external-model settings."""

    kind: str = "grammar"
    base_url: str | None = None
    model: str | None = None
    prompt_bundle: str = "v1"
    cache_dir: str | None = None
    full_prompt: bool = False
    transport: Any = None  # test hook: injected httpx transport

    def __post_init__(self):
        if self.kind not in ("grammar", "external"):
            raise ValueError(f"unknown backend kind {self.kind!r}")


GRAMMAR_BACKEND = ReaderBackend()


# --- vocabulary ----------------------------------------------------------------

SIZE_SYNONYMS = {
    "small": "small", "tiny": "small", "little": "small", "smaller": "small",
    "smallest": "small",
    "medium": "medium", "med": "medium", "mid": "medium",
    "large": "large", "big": "large", "bigger": "large", "biggest": "large",
    "largest": "large", "huge": "large",
}
COLOR_SYNONYMS = {
    "dark": "dark", "black": "dark", "darker": "dark", "darkest": "dark",
    "grey": "grey", "gray": "grey", "greyish": "grey", "grayish": "grey",
    "light": "light", "lighter": "light", "lightest": "light", "white": "light",
    "pale": "light",
}
DIRECTION_SYNONYMS = {
    "left": "left", "right": "right",
    "above": "above", "over": "above", "top": "above", "up": "above",
    "below": "below", "under": "below", "underneath": "below", "beneath": "below",
    "bottom": "below",
    "near": "near", "close": "near", "beside": "near", "next": "near",
}
_YES_WORDS = {"yes", "yeah", "yep", "yup", "sure"}
_NO_WORDS = {"no", "nope", "nah"}
_NOUN_WORDS = {"dot", "dots", "one", "ones"}
_REF_PRONOUNS = {"those", "them", "it", "these"}
_PAIR_WORDS = {"pair", "two", "couple"}
_CONNECTORS = {"and", "or", "the", "of", "to", "slightly", "a", "bit", "just"}

_SIZE_PRED = {"small": PredicateId.IS_SMALL, "medium": PredicateId.IS_MEDIUM,
              "large": PredicateId.IS_LARGE}
_COLOR_PRED = {"dark": PredicateId.IS_DARK, "grey": PredicateId.IS_GREY,
               "light": PredicateId.IS_LIGHT}
_DIRECTION_PRED = {"left": PredicateId.IS_LEFT_OF, "right": PredicateId.IS_RIGHT_OF,
                   "above": PredicateId.IS_ABOVE, "below": PredicateId.IS_BELOW,
                   "near": PredicateId.IS_NEAR}
_DIRECTION_ORDER = ("left", "right", "above", "below", "near")

_WRITER_PAIR_RE = re.compile(
    r"pair of dots,? where the (?P<pos_a>left|right|top|bottom) dot is "
    r"(?P<size_a>[a-z]+)-sized and (?P<color_a>[a-z]+) and the "
    r"(?P<pos_b>left|right|top|bottom) dot is (?P<size_b>[a-z]+)-sized and "
    r"(?P<color_b>[a-z]+)",
    re.IGNORECASE,
)


def _tokens(text: str) -> list[str]:
    return re.findall(r"[a-z]+", text.lower())


def _sentences(text: str) -> list[str]:
    return [s for s in re.split(r"(?<=[.?!])\s+", text.strip()) if s]


def extract_confirmation(text: str) -> tuple[bool | None, str]:
    """Leading Yes./No. polarity plus the remaining content text."""
    confirm: bool | None = None
    remaining: list[str] = []
    for sentence in _sentences(text):
        words = _tokens(sentence)
        if words and confirm is None and not remaining:
            if words[0] in _YES_WORDS:
                confirm = True
                sentence = re.sub(r"^\W*\w+[\s.,!]*", "", sentence, count=1)
            elif words[0] in _NO_WORDS:
                confirm = False
                sentence = re.sub(r"^\W*\w+[\s.,!]*", "", sentence, count=1)
        if sentence.strip():
            remaining.append(sentence.strip())
    return confirm, " ".join(remaining)


def _is_contentful(turn) -> bool:
    dist = getattr(turn, "interpretations", None)
    return dist is not None and not dist.is_empty


def _has_content(text: str) -> bool:
    words = set(_tokens(text))
    return bool(words & (_NOUN_WORDS | _PAIR_WORDS | {"select"})) or SELECT_MARKER in text


def classify_act(utterance: str, history: Sequence = ()) -> DialogueAct:
    """One of three dialogue acts; confirmation polarity is extracted separately."""
    _, content = extract_confirmation(utterance)
    if SELECT_MARKER in utterance or re.search(r"\bselect\b", content, re.IGNORECASE):
        return DialogueAct.END
    words = _tokens(content)
    wordset = set(words)
    if wordset & _PAIR_WORDS or "lone" in wordset or "single" in wordset:
        return DialogueAct.NEW
    has_history = any(_is_contentful(t) for t in history)
    if has_history and wordset & _REF_PRONOUNS:
        return DialogueAct.FOLLOW_UP
    if has_history and _relational_mention(words):
        return DialogueAct.FOLLOW_UP
    return DialogueAct.NEW


def _relational_mention(words: list[str]) -> bool:
    """Two dot mentions with a direction between them, e.g.
    'a small grey dot above the small light dot'."""
    nouns = [i for i, w in enumerate(words) if w in _NOUN_WORDS]
    if len(nouns) < 2:
        return False
    return any(w in DIRECTION_SYNONYMS for w in words[nouns[0] + 1:nouns[-1]])


def resolve_reference(utterance: str, history: Sequence = ()) -> int | None:
    """Index of the turn this utterance builds on: the most recent confirmed
    contentful turn, counting the turn a leading 'Yes' is confirming."""
    confirm, _ = extract_confirmation(utterance)
    latest_contentful = None
    for idx in range(len(history) - 1, -1, -1):
        turn = history[idx]
        if not _is_contentful(turn):
            continue
        if latest_contentful is None:
            latest_contentful = idx
            if confirm is True:
                return idx
        if getattr(turn, "confirmed", False):
            return idx
    return latest_contentful


@dataclass
class _Description:
    size: str | None = None
    color: str | None = None
    position: str | None = None

    def absorb(self, word: str) -> bool:
        if word in SIZE_SYNONYMS:
            self.size = SIZE_SYNONYMS[word]
            return True
        if word in COLOR_SYNONYMS:
            self.color = COLOR_SYNONYMS[word]
            return True
        return False


def _scan_description(words: list[str], with_position: bool = False) -> _Description:
    desc = _Description()
    for w in words:
        if not desc.absorb(w) and with_position and w in ("left", "right", "top", "bottom"):
            desc.position = w
    return desc


def _unary_constraints(var: str, desc: _Description) -> list[Constraint]:
    out = []
    if desc.size:
        out.append(Constraint(_SIZE_PRED[desc.size], (var,)))
    if desc.color:
        out.append(Constraint(_COLOR_PRED[desc.color], (var,)))
    return out


def _parse_followup(content: str) -> tuple[int, tuple[Constraint, ...]]:
    words = _tokens(content)
    first_dir = next((i for i, w in enumerate(words) if w in DIRECTION_SYNONYMS), None)
    subject = words if first_dir is None else words[:first_dir]
    directions: list[str] = []
    if first_dir is not None:
        directions.append(DIRECTION_SYNONYMS[words[first_dir]])
        for w in words[first_dir + 1:]:
            if w in DIRECTION_SYNONYMS:
                d = DIRECTION_SYNONYMS[w]
                if d not in directions:
                    directions.append(d)
            elif w not in _CONNECTORS:
                break
    desc = _scan_description(subject)
    constraints = _unary_constraints("a", desc)
    for d in sorted(directions, key=_DIRECTION_ORDER.index):
        constraints.append(Constraint(_DIRECTION_PRED[d], ("a", "ref")))
    return 1, tuple(constraints)


def _pair_relation(pos_a: str | None, pos_b: str | None) -> Constraint | None:
    pos = pos_a or ({"left": "right", "right": "left", "top": "bottom",
                     "bottom": "top"}.get(pos_b or "") or None)
    if pos == "left":
        return Constraint(PredicateId.IS_LEFT_OF, ("a", "b"))
    if pos == "right":
        return Constraint(PredicateId.IS_RIGHT_OF, ("a", "b"))
    if pos == "top":
        return Constraint(PredicateId.IS_ABOVE, ("a", "b"))
    if pos == "bottom":
        return Constraint(PredicateId.IS_BELOW, ("a", "b"))
    return None


def _parse_new(content: str) -> tuple[int, tuple[Constraint, ...]]:
    match = _WRITER_PAIR_RE.search(content)
    if match:
        g = {k: v.lower() for k, v in match.groupdict().items()}
        if g["size_a"] not in SIZE_SYNONYMS or g["size_b"] not in SIZE_SYNONYMS \
                or g["color_a"] not in COLOR_SYNONYMS or g["color_b"] not in COLOR_SYNONYMS:
            raise UnparseableUtteranceError(f"unknown attribute words in {content!r}")
        constraints = [
            Constraint(_SIZE_PRED[SIZE_SYNONYMS[g["size_a"]]], ("a",)),
            Constraint(_COLOR_PRED[COLOR_SYNONYMS[g["color_a"]]], ("a",)),
            Constraint(_SIZE_PRED[SIZE_SYNONYMS[g["size_b"]]], ("b",)),
            Constraint(_COLOR_PRED[COLOR_SYNONYMS[g["color_b"]]], ("b",)),
        ]
        relation = _pair_relation(g["pos_a"], None)
        if relation:
            constraints.append(relation)
        return 2, tuple(constraints)
    words = _tokens(content)
    wordset = set(words)
    if not wordset & _PAIR_WORDS:
        # single new dot, adjectives taken from the whole clause
        desc = _scan_description(words)
        return 1, tuple(_unary_constraints("a", desc))
    # loose pair: a global clause then up to two per-dot clauses
    clauses = re.split(r"\bwhere the\b|\bthe other\b|\band the\b|,", content.lower())
    global_desc = _scan_description(_tokens(clauses[0])) if clauses else _Description()
    dot_descs: list[_Description] = []
    for clause in clauses[1:]:
        desc = _scan_description(_tokens(clause), with_position=True)
        if desc.size or desc.color or desc.position:
            dot_descs.append(desc)
        if len(dot_descs) == 2:
            break
    while len(dot_descs) < 2:
        dot_descs.append(_Description())
    for desc in dot_descs:
        desc.size = desc.size or global_desc.size
        desc.color = desc.color or global_desc.color
    constraints = _unary_constraints("a", dot_descs[0]) + _unary_constraints("b", dot_descs[1])
    relation = _pair_relation(dot_descs[0].position, dot_descs[1].position)
    if relation:
        constraints.append(relation)
    if "close together" in content.lower():
        constraints.append(Constraint(PredicateId.IS_NEAR, ("a", "b")))
    return 2, tuple(constraints)


def _parse_select(content: str) -> tuple[int, tuple[Constraint, ...]]:
    words = _tokens(content)
    try:
        start = words.index("select")
    except ValueError:
        start = 0
    desc = _scan_description(words[start:])
    return 1, tuple(_unary_constraints("a", desc))


def generate_constraints(utterance: str, history: Sequence = ()) -> tuple[Constraint, ...]:
    """The constraint list the utterance expresses (act-dependent parse)."""
    act = classify_act(utterance, history)
    _, content = extract_confirmation(utterance)
    if act is DialogueAct.END:
        return _parse_select(content)[1]
    if act is DialogueAct.FOLLOW_UP:
        return _parse_followup(content)[1]
    return _parse_new(content)[1]


def compose(act: DialogueAct, ref_turn: int | None,
            constraints: Sequence[Constraint], new_dot_count: int,
            confirm: bool | None = None, select: bool = False) -> MeaningProgram:
    """Assemble and validate the final program. Deterministic and model-free."""
    if act is DialogueAct.END:
        prog_act = ProgramAct.SELECT if select else ProgramAct.END
    elif act is DialogueAct.FOLLOW_UP:
        prog_act = ProgramAct.FOLLOW_UP
    else:
        prog_act = ProgramAct.NEW
    prog = MeaningProgram(
        act=prog_act,
        ref_turn=ref_turn if prog_act is not ProgramAct.NEW else None,
        new_dot_count=new_dot_count if prog_act is not ProgramAct.END else 0,
        constraints=tuple(constraints) if prog_act is not ProgramAct.END else (),
        confirm=confirm,
    )
    return validate_program(prog)


def _grammar_read(utterance: str, history: Sequence) -> MeaningProgram:
    confirm, content = extract_confirmation(utterance)
    marker_only = utterance.strip() == SELECT_MARKER or content.strip() == SELECT_MARKER
    if marker_only:
        return MeaningProgram(ProgramAct.END, confirm=confirm)
    if not content:
        if confirm is None:
            raise UnparseableUtteranceError(f"no recognizable content in {utterance!r}")
        act = ProgramAct.CONFIRM_YES if confirm else ProgramAct.CONFIRM_NO
        return MeaningProgram(act, confirm=confirm)
    if not _has_content(content):
        if confirm is not None:
            act = ProgramAct.CONFIRM_YES if confirm else ProgramAct.CONFIRM_NO
            return MeaningProgram(act, confirm=confirm)
        raise UnparseableUtteranceError(f"no recognizable content in {utterance!r}")
    act = classify_act(utterance, history)
    try:
        if act is DialogueAct.END:
            new_count, constraints = _parse_select(content)
            ref = resolve_reference(utterance, history)
            return compose(act, ref, constraints, new_count, confirm, select=True)
        if act is DialogueAct.FOLLOW_UP:
            ref = resolve_reference(utterance, history)
            if ref is None:
                raise UnparseableUtteranceError("follow-up with no referable turn")
            new_count, constraints = _parse_followup(content)
            return compose(act, ref, constraints, new_count, confirm)
        new_count, constraints = _parse_new(content)
        return compose(act, None, constraints, new_count, confirm)
    except ProgramValidationError as e:
        raise UnparseableUtteranceError(f"{utterance!r}: {e}") from e


def read(utterance: str, history: Sequence = (),
         backend: ReaderBackend = GRAMMAR_BACKEND) -> MeaningProgram:
    """Utterance text -> validated MeaningProgram."""
    if backend.kind == "grammar":
        return _grammar_read(utterance, history)
    from . import llm
    return llm.read_external(utterance, history, backend)
