"""Collaborative dot-finding reference game: two players with overlapping
circular views talk until they can each select one dot both of them see.

The package provides the full stack: board generation (`context`), grounded
predicates (`perception`), the constraint-program meaning layer (`meaning`),
reading and writing between text and programs (`reader`, `writer`, `llm`),
exact Bayesian belief tracking (`belief`), information-gain planning
(`planner`), the game engine and self-play harness (`engine`), transcript
persistence (`transcripts`), an HTTP session service (`service`), and a CLI
(`cli`).
"""

from .belief import BeliefState, PartnerModel, build_prior, entropy, marginal, update
from .context import Dot, GameContext, Scene, generate_context, load_context, save_context
from .engine import EngineConfig, GameResult, GameSession, play_game, run_selfplay
from .meaning import (
    InterpretationDist, MeaningProgram, ProgramAct, evaluate, most_likely,
    parse_program, print_program,
)
from .planner import Plan, PlannerConfig, candidate_plans, expected_information_gain, plan
from .reader import GRAMMAR_BACKEND, DialogueAct, ReaderBackend, read
from .writer import write

__version__ = "0.1.0"
