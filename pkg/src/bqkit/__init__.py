"""bqkit: action theories with rewards, solved two independent ways.

Pipeline: parse a ".bq" theory, ground it, and either evaluate it directly
(episode enumeration, discounted-tail value tables, greedy policies) or
translate it into a ground normal logic program and enumerate its answer
sets, naively or through a SAT encoding.  The two routes are cross-checked
against each other at every level.
"""

from .errors import (
    BqkitError,
    BqParseError,
    CapExceededError,
    CorrectnessError,
    GroundingError,
    MalformedTraceError,
    NonTightProgramError,
    StateError,
    TransitionError,
)
from .parser import parse_theory
from .program import NormalProgram, ProgramRule, emit_program_text, parse_program_text
from .qvalues import (
    Policy,
    QKey,
    QTable,
    classic_oracle,
    extract_policy,
    q_direct,
    q_online_fold,
    q_reconstruct,
    q_update_once,
)
from .semantics import (
    Episode,
    Transition,
    WorldState,
    closure,
    enumerate_episodes,
    enumerate_states,
    executable_actions,
    initial_world_states,
    transition,
)
from .solver import (
    AnswerSet,
    enumerate_answer_sets,
    evaluate_q_layer,
    extract_episode,
    is_answer_set,
    loop_formulas,
    reduct,
    tightness_check,
)
from .sat import CnfFormula, clark_completion, emit_dimacs, sat_solve
from .theory import (
    ActionTheory,
    Atom,
    CausalLaw,
    Comparison,
    ConjunctiveFormula,
    ExecutabilityLaw,
    Literal,
    StaticLaw,
    ground_theory,
    pretty_print,
    validate_theory,
)
from .translate import TranslateOptions, translate, translation_report

__all__ = [name for name in dir() if not name.startswith("_")]
