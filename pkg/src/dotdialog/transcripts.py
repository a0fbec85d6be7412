"""Game records: structured transcripts, one JSON document per game.

Every field is deterministic under fixed seeds (the turn clock is logical,
never wall time), so a repeated batch writes byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

from .context import GameContext
from .meaning import config_key, print_program


def interpretations_record(dist) -> list | None:
    if dist is None:
        return None
    return [[list(config_key(e.config)), e.probability] for e in dist.entries]


def plan_record(plan) -> dict | None:
    if plan is None:
        return None
    return {
        "act": plan.act.value,
        "config": list(config_key(plan.config)),
        "ref_turn": plan.ref_turn,
        "ref_config": list(config_key(plan.ref_config)) if plan.ref_config else None,
        "eig": plan.eig,
    }


def turn_record(turn: Turn) -> dict:
    return {
        "index": turn.index,
        "timestamp": turn.timestamp,
        "speaker": turn.speaker,
        "text": turn.text,
        "program": print_program(turn.program) if turn.program is not None else None,
        "interpretations": interpretations_record(turn.interpretations),
        "confirmed": turn.confirmed,
        "fallback": turn.fallback,
        "plan": plan_record(turn.plan),
        "eig_trace": [[act, list(ids), eig] for act, ids, eig in turn.eig_trace],
        "belief": turn.belief,
    }


def result_record(result: GameResult) -> dict:
    return {
        "success": result.success,
        "agent_selection": result.agent_selection,
        "partner_selection": result.partner_selection,
        "turn_count": result.turn_count,
        "word_counts": {speaker: list(counts) for speaker, counts in result.word_counts},
    }


def result_from_record(record: dict) -> "GameResult":
    from .engine import GameResult
    return GameResult(
        success=record["success"],
        agent_selection=record["agent_selection"],
        partner_selection=record["partner_selection"],
        turn_count=record["turn_count"],
        word_counts=tuple(sorted(
            (speaker, tuple(counts)) for speaker, counts in record["word_counts"].items())),
    )


def bare_turn_record(index: int, speaker: str, text: str) -> dict:
    return {"index": index, "timestamp": index, "speaker": speaker, "text": text,
            "program": None, "interpretations": None, "confirmed": False,
            "fallback": False, "plan": None, "eig_trace": [], "belief": None}


def game_record(ctx: GameContext, opener: str, log: list[tuple[str, str]],
                result: GameResult, policy_a=None, policy_b=None) -> dict:
    """Merge the message log with each speaker's own session records.

    The i-th message by a speaker pairs with that speaker's i-th own turn in
    its session history (when the texts agree), so the record carries the
    speaker's program, plan, EIG trace, and belief snapshot for every turn it
    has them."""
    own_turns: dict[str, list[Turn]] = {}
    for label, policy in (("a", policy_a), ("b", policy_b)):
        session: GameSession | None = getattr(policy, "session", None)
        if session is not None:
            own_turns[label] = [t for t in session.history if t.speaker == session.name]
    cursors = {"a": 0, "b": 0}
    turns = []
    for i, (speaker, text) in enumerate(log):
        rich: Turn | None = None
        pool = own_turns.get(speaker)
        if pool is not None and cursors[speaker] < len(pool) \
                and pool[cursors[speaker]].text == text:
            rich = pool[cursors[speaker]]
            cursors[speaker] += 1
        if rich is not None:
            record = turn_record(rich)
            record["index"] = record["timestamp"] = i
            record["speaker"] = speaker
        else:
            record = bare_turn_record(i, speaker, text)
        turns.append(record)
    return {
        "context": {"seed": ctx.seed, "k": ctx.k},
        "opener": opener,
        "turns": turns,
        "result": result_record(result),
    }


def dumps_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


def write_batch(records: list[dict], path: str | Path) -> None:
    with open(path, "w") as fh:
        for record in records:
            fh.write(dumps_record(record) + "\n")


def append_record(record: dict, path: str | Path) -> None:
    with open(path, "a") as fh:
        fh.write(dumps_record(record) + "\n")


def read_batch(path: str | Path) -> list[dict]:
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def scripted_lines(record: dict) -> dict[str, list[str]]:
    lines: dict[str, list[str]] = {"a": [], "b": []}
    for turn in record["turns"]:
        lines[turn["speaker"]].append(turn["text"])
    return lines
