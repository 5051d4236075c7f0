"""Human-readable failure explanations from assumption cores.

An unsatisfiable solve returns a core of error atoms.  Deletion-based
minimization shrinks it to a subset-minimal set by re-solving without one
element (or, in the batched strategy, without a shrinking block of
elements) at a time.  Each surviving atom carries its message as its
argument, so the final diagnostic is just the sorted message list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .logic import SolveTimeout, UnsatCore
from .logic.syntax import Atom


@dataclass
class MinimizationStats:
    initial_size: int
    final_size: int
    extra_solves: int
    minimal: bool = True


@dataclass
class Diagnostic:
    messages: list
    core: UnsatCore
    stats: MinimizationStats


def _core_key(atom: Atom) -> str:
    return str(atom)


def _is_unsat(problem, atoms) -> bool:
    result = problem.solve_assuming(atoms)
    return not result.satisfiable


def minimize_core(problem, core: UnsatCore, strategy: str = "linear") -> tuple:
    """Shrink a core to a subset-minimal one.

    `problem` must expose solve_assuming(iterable of atoms) -> SolveResult.
    Returns (UnsatCore, MinimizationStats).  The linear strategy re-solves
    once per original element; the batched strategy first drops halves and
    falls back to single elements, which can cost far fewer solves when
    most of the core is irrelevant.
    """
    if strategy not in ("linear", "batched"):
        raise ValueError(f"unknown strategy {strategy!r}")
    elements = sorted(core.atoms, key=_core_key)
    solves = 0

    try:
        if strategy == "linear":
            working = list(elements)
            for atom in elements:
                working.remove(atom)
                solves += 1
                if not _is_unsat(problem, working):
                    working.append(atom)
            final = working
        else:
            working = list(elements)
            chunk = max(len(working) // 2, 1)
            while True:
                i = 0
                while i < len(working):
                    candidate = working[:i] + working[i + chunk:]
                    solves += 1
                    if _is_unsat(problem, candidate):
                        working = candidate
                    else:
                        i += chunk
                if chunk == 1:
                    break
                chunk //= 2
            final = working
    except SolveTimeout:
        stats = MinimizationStats(len(elements), len(elements), solves, minimal=False)
        return UnsatCore(frozenset(elements)), stats

    stats = MinimizationStats(len(elements), len(final), solves)
    return UnsatCore(frozenset(final)), stats


def explain(problem, result, strategy: str = "linear") -> Diagnostic:
    """Turn an unsatisfiable SolveResult into a minimal set of messages."""
    if result.core is None:
        raise ValueError("explain requires an unsatisfiable result")
    core, stats = minimize_core(problem, result.core, strategy)
    messages = sorted(
        {
            str(atom.args[0]) if atom.args else str(atom)
            for atom in core.atoms
        }
    )
    return Diagnostic(messages, core, stats)


def core_stats(diagnostic: Diagnostic) -> str:
    stats = diagnostic.stats
    suffix = "" if stats.minimal else " (timeout: not fully minimized)"
    return (
        f"core: {stats.initial_size} -> {stats.final_size} assumptions, "
        f"{stats.extra_solves} extra solves{suffix}"
    )
