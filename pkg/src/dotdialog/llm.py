"""External-model reading backend: chat-completion calls for the first three
reading steps (act, reference, constraints), composed locally.

The endpoint is configured by environment (DOTDIALOG_MODEL_BASE_URL,
DOTDIALOG_MODEL_API_KEY, DOTDIALOG_MODEL_ID) or explicitly on the backend.
Requests run at temperature 0 and responses are cached content-addressed, so
a test replay against a warm cache never touches the network. Invalid model
output gets exactly one retry before the utterance is declared unparseable.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from importlib import resources
from pathlib import Path
from typing import Sequence

import httpx

from .meaning import Constraint, MeaningProgram, parse_program, ProgramValidationError, DslSyntaxError
from .perception import PredicateId

ENV_BASE_URL = "DOTDIALOG_MODEL_BASE_URL"
ENV_API_KEY = "DOTDIALOG_MODEL_API_KEY"
ENV_MODEL_ID = "DOTDIALOG_MODEL_ID"
ENV_CACHE_DIR = "DOTDIALOG_MODEL_CACHE"

REQUEST_TIMEOUT = 30.0

_PRED_NAMES = {p.value for p in PredicateId}
_CONSTRAINT_RE = re.compile(r"([a-z_]+)\(([a-z, ]+)\)")


class ExternalBackendError(RuntimeError):
    """Transport-level failure; `retryable` hints whether a retry could help."""

    def __init__(self, message: str, retryable: bool = True, attempts: int = 1):
        super().__init__(message)
        self.retryable = retryable
        self.attempts = attempts


def from_env(prompt_bundle: str = "v1", full_prompt: bool = False):
    from .reader import ReaderBackend
    base_url = os.environ.get(ENV_BASE_URL)
    model = os.environ.get(ENV_MODEL_ID)
    if not base_url or not model:
        raise ExternalBackendError(
            f"set {ENV_BASE_URL} and {ENV_MODEL_ID} to use the external backend",
            retryable=False)
    return ReaderBackend(kind="external", base_url=base_url, model=model,
                         prompt_bundle=prompt_bundle,
                         cache_dir=os.environ.get(ENV_CACHE_DIR),
                         full_prompt=full_prompt)


def load_prompt(bundle: str, step: str) -> str:
    name = f"{bundle}_{step}.txt"
    path = resources.files("dotdialog").joinpath("prompts", name)
    return path.read_text()


def _render_history(history: Sequence) -> str:
    lines = []
    for i, turn in enumerate(history):
        speaker = getattr(turn, "speaker", "speaker")
        text = getattr(turn, "text", "")
        lines.append(f"turn {i} [{speaker}]: {text}")
    return "\n".join(lines) if lines else "(dialogue start)"


def _cache_key(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _complete(backend, system_prompt: str, user_content: str, use_cache: bool = True) -> str:
    payload = {
        "model": backend.model,
        "messages": [
            {"role": "system", "content": system_prompt},
            {"role": "user", "content": user_content},
        ],
        "temperature": 0,
    }
    cache_file: Path | None = None
    if backend.cache_dir:
        cache_file = Path(backend.cache_dir) / f"{_cache_key(payload)}.json"
        if use_cache and cache_file.exists():
            return json.loads(cache_file.read_text())["content"]
    headers = {}
    api_key = os.environ.get(ENV_API_KEY)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    try:
        with httpx.Client(base_url=backend.base_url, headers=headers,
                          timeout=REQUEST_TIMEOUT, transport=backend.transport) as client:
            response = client.post("/chat/completions", json=payload)
            response.raise_for_status()
            content = response.json()["choices"][0]["message"]["content"]
    except httpx.HTTPStatusError as e:
        retryable = e.response.status_code >= 500 or e.response.status_code == 429
        raise ExternalBackendError(f"model endpoint returned {e.response.status_code}",
                                   retryable=retryable) from e
    except httpx.HTTPError as e:
        raise ExternalBackendError(f"transport failure: {e}", retryable=True) from e
    except (KeyError, IndexError, json.JSONDecodeError) as e:
        raise ExternalBackendError(f"malformed completion payload: {e}", retryable=False) from e
    if cache_file is not None:
        cache_file.parent.mkdir(parents=True, exist_ok=True)
        cache_file.write_text(json.dumps({"content": content}, sort_keys=True))
    return content


def _parse_act(content: str):
    from .reader import DialogueAct
    lowered = content.lower()
    for act, cues in ((DialogueAct.FOLLOW_UP, ("follow-up", "follow up", "followup")),
                      (DialogueAct.END, ("end",)),
                      (DialogueAct.NEW, ("new",))):
        if any(c in lowered for c in cues):
            return act
    return None


def _parse_reference(content: str) -> int | None:
    m = re.search(r"-?\d+", content)
    if m is None:
        return None
    value = int(m.group(0))
    return value if value >= 0 else None


def _parse_constraints(content: str) -> tuple[int, tuple[Constraint, ...]] | None:
    count_match = re.search(r"(\d+)\s+new\s+dot", content.lower())
    if count_match is None:
        return None
    new_count = int(count_match.group(1))
    constraints = []
    for name, args in _CONSTRAINT_RE.findall(content.lower()):
        if name not in _PRED_NAMES:
            return None
        arg_list = tuple(a.strip() for a in args.split(","))
        norm = tuple("ref" if a in ("ref", "prev_dots", "prev_config") else a for a in arg_list)
        constraints.append(Constraint(PredicateId(name), norm))
    return new_count, tuple(constraints)


def _step(backend, step: str, utterance: str, history: Sequence, parser):
    """One model call; invalid output gets a single uncached retry."""
    system_prompt = load_prompt(backend.prompt_bundle, step)
    user = f"Dialogue so far:\n{_render_history(history)}\n\nPartner utterance: {utterance}"
    content = _complete(backend, system_prompt, user)
    parsed = parser(content)
    if parsed is None:
        content = _complete(backend, system_prompt, user, use_cache=False)
        parsed = parser(content)
    return parsed


def read_external(utterance: str, history: Sequence, backend) -> MeaningProgram:
    from .reader import (DialogueAct, UnparseableUtteranceError, compose,
                         extract_confirmation)

    confirm, content = extract_confirmation(utterance)
    if not content:
        if confirm is None:
            raise UnparseableUtteranceError(f"no recognizable content in {utterance!r}")
        from .meaning import ProgramAct
        act = ProgramAct.CONFIRM_YES if confirm else ProgramAct.CONFIRM_NO
        return MeaningProgram(act, confirm=confirm)

    if backend.full_prompt:
        # ablation variant: one call generates the entire program text
        system_prompt = load_prompt(backend.prompt_bundle, "full")
        user = f"Dialogue so far:\n{_render_history(history)}\n\nPartner utterance: {utterance}"
        for attempt in range(2):
            text = _complete(backend, system_prompt, user, use_cache=attempt == 0)
            try:
                return parse_program(text.strip())
            except (DslSyntaxError, ProgramValidationError):
                continue
        raise UnparseableUtteranceError(f"model produced no valid program for {utterance!r}")

    act = _step(backend, "act", utterance, history, _parse_act)
    if act is None:
        raise UnparseableUtteranceError(f"model could not classify {utterance!r}")
    ref_turn = None
    if act in (DialogueAct.FOLLOW_UP, DialogueAct.END):
        ref_turn = _step(backend, "reference", utterance, history, _parse_reference)
        if ref_turn is not None and not 0 <= ref_turn < len(history):
            ref_turn = None
        if act is DialogueAct.FOLLOW_UP and ref_turn is None:
            raise UnparseableUtteranceError(f"model found no referenced turn for {utterance!r}")
    parsed = _step(backend, "constraints", utterance, history, _parse_constraints)
    if parsed is None:
        raise UnparseableUtteranceError(f"model produced no valid constraints for {utterance!r}")
    new_count, constraints = parsed
    is_select = re.search(r"\bselect\b", utterance, re.IGNORECASE) is not None
    try:
        return compose(act, ref_turn, constraints, new_count, confirm, select=is_select)
    except ProgramValidationError as e:
        from .reader import UnparseableUtteranceError as U
        raise U(f"{utterance!r}: {e}") from e
