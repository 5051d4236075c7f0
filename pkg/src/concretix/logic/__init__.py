"""Embedded answer-set-style logic engine: parse, ground, solve."""

from .cdcl import SolveTimeout
from .engine import (
    Model,
    ObjectiveVector,
    SolveLimits,
    SolveResult,
    StableModelEngine,
    UnsatCore,
    compare_objectives,
    enumerate_models,
    is_stable_model,
    solve,
)
from .ground import (
    GroundError,
    GroundProgram,
    GroundingBudgetExceeded,
    ground,
)
from .syntax import (
    Atom,
    Comparison,
    Literal,
    ParseError,
    Program,
    Rule,
    SafetyError,
    Sym,
    Var,
    parse_program,
)

__all__ = [
    "Atom",
    "Comparison",
    "GroundError",
    "GroundProgram",
    "GroundingBudgetExceeded",
    "Literal",
    "Model",
    "ObjectiveVector",
    "ParseError",
    "Program",
    "Rule",
    "SafetyError",
    "SolveLimits",
    "SolveResult",
    "SolveTimeout",
    "StableModelEngine",
    "Sym",
    "UnsatCore",
    "Var",
    "compare_objectives",
    "enumerate_models",
    "ground",
    "is_stable_model",
    "parse_program",
    "solve",
]
