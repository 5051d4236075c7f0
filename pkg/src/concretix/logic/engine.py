"""Stable-model search over ground programs.

The ground program is translated into clauses via Clark completion:
a body auxiliary variable per distinct rule body, support clauses for
every derived atom, head implications for normal rules, cardinality
clauses for choice bounds, and one clause per integrity constraint.
Positive recursion is handled lazily: whenever the SAT core reaches a
total assignment, an unfounded-set check either accepts the model or
adds the violated loop clauses and continues the search.

Optimization is iterative model improvement: levels are minimized from
the highest priority down, bounding each level with a retractable
pseudo-Boolean constraint until no better model exists, then freezing it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations
from math import comb

from .cdcl import CdclSolver, SolveTimeout
from .ground import GroundProgram
from .syntax import Atom

_BINOMIAL_LIMIT = 4000


@dataclass(frozen=True)
class ObjectiveVector:
    """Objective totals per minimize level, highest level first."""

    entries: tuple = ()

    def value(self, level: int) -> int:
        for lvl, weight in self.entries:
            if lvl == level:
                return weight
        return 0

    def __str__(self):
        return "[" + ", ".join(f"{w}@{l}" for l, w in self.entries) + "]"


def compare_objectives(a: ObjectiveVector, b: ObjectiveVector) -> int:
    """Lexicographic comparison; higher levels dominate, missing levels are 0."""
    levels = sorted({l for l, _ in a.entries} | {l for l, _ in b.entries}, reverse=True)
    for level in levels:
        av, bv = a.value(level), b.value(level)
        if av != bv:
            return -1 if av < bv else 1
    return 0


@dataclass(frozen=True)
class Model:
    true_ids: frozenset
    atoms: frozenset
    objective: ObjectiveVector

    def __contains__(self, atom: Atom) -> bool:
        return atom in self.atoms


@dataclass(frozen=True)
class UnsatCore:
    atoms: frozenset


@dataclass(frozen=True)
class SolveResult:
    model: Model | None = None
    core: UnsatCore | None = None

    @property
    def satisfiable(self) -> bool:
        return self.model is not None


@dataclass(frozen=True)
class SolveLimits:
    seed: int = 0
    budget: float | None = None


class _Compiled:
    """Clause-level image of a ground program, shared across solver instances."""

    def __init__(self, gp: GroundProgram):
        self.gp = gp
        self.natoms = len(gp.atoms)
        self.nvars = self.natoms
        self.clauses = []
        self.trivially_unsat = False
        self.rule_blit = [None] * len(gp.rules)
        self.choice_blit = [None] * len(gp.choices)
        # defs[aid] lists ("r", rule index) and ("c", choice index) entries
        self.defs = [[] for _ in range(self.natoms)]
        # occ_pos[aid] lists the rules and choices with aid in their positive body
        self.occ_pos = [[] for _ in range(self.natoms)]
        self._body_cache = {}
        self._build()
        for ridx, rule in enumerate(gp.rules):
            for aid in set(rule.pos):
                self.occ_pos[aid].append(("r", ridx))
        for cidx, choice in enumerate(gp.choices):
            for aid in set(choice.pos):
                self.occ_pos[aid].append(("c", cidx))

    def _new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def _body_literal(self, pos, neg):
        """A literal equivalent to the conjunction of the body literals."""
        lits = [a + 1 for a in pos] + [-(a + 1) for a in neg]
        if not lits:
            return None
        if len(lits) == 1:
            return lits[0]
        key = (tuple(sorted(lits)), )
        cached = self._body_cache.get(key)
        if cached is not None:
            return cached
        b = self._new_var()
        for lit in lits:
            self.clauses.append([-b, lit])
        self.clauses.append([b] + [-lit for lit in lits])
        self._body_cache[key] = b
        return b

    def _build(self):
        gp = self.gp
        supports = [[] for _ in range(self.natoms)]
        facts = set()
        for ridx, rule in enumerate(gp.rules):
            if not rule.pos and not rule.neg:
                facts.add(rule.head)
                continue
            blit = self._body_literal(rule.pos, rule.neg)
            self.rule_blit[ridx] = blit
            self.defs[rule.head].append(("r", ridx))
            supports[rule.head].append(blit)
            self.clauses.append([rule.head + 1, -blit])
        for cidx, choice in enumerate(gp.choices):
            blit = self._body_literal(choice.pos, choice.neg)
            self.choice_blit[cidx] = blit
            for aid in choice.elements:
                self.defs[aid].append(("c", cidx))
                supports[aid].append(blit)
            self._choice_bounds(choice, blit)
        for constraint in gp.constraints:
            clause = [-(a + 1) for a in constraint.pos] + [a + 1 for a in constraint.neg]
            if clause:
                self.clauses.append(clause)
            else:
                self.trivially_unsat = True
        for aid in range(self.natoms):
            if aid in facts:
                self.clauses.append([aid + 1])
            elif None in supports[aid]:
                continue  # unconditionally supported via an open choice
            else:
                self.clauses.append([-(aid + 1)] + sorted(set(supports[aid])))
        self.fact_ids = facts

    def _choice_bounds(self, choice, blit):
        cond = [] if blit is None else [-blit]
        elems = [a + 1 for a in choice.elements]
        n = len(elems)
        if choice.upper is not None and choice.upper < n:
            self._at_most([e for e in elems], choice.upper, cond)
        if choice.lower is not None and choice.lower > 0:
            self._at_most([-e for e in elems], n - choice.lower, cond)

    def _at_most(self, lits, k, cond):
        n = len(lits)
        if k < 0:
            self.clauses.append(list(cond))
            return
        if k >= n:
            return
        if comb(n, k + 1) <= _BINOMIAL_LIMIT:
            for combo in combinations(lits, k + 1):
                self.clauses.append([-l for l in combo] + cond)
            return
        # sequential counter: s[i][j] is true when >= j of the first i+1 lits hold
        s = [[self._new_var() for _ in range(k)] for _ in range(n)]
        self.clauses.append([-lits[0], s[0][0]])
        for j in range(1, k):
            self.clauses.append([-s[0][j]])
        for i in range(1, n):
            self.clauses.append([-lits[i], s[i][0]])
            self.clauses.append([-s[i - 1][0], s[i][0]])
            for j in range(1, k):
                self.clauses.append([-lits[i], -s[i - 1][j - 1], s[i][j]])
                self.clauses.append([-s[i - 1][j], s[i][j]])
            self.clauses.append([-lits[i], -s[i - 1][k - 1]] + cond)

    def instantiate(self) -> CdclSolver:
        solver = CdclSolver(self.nvars)
        if self.trivially_unsat:
            solver.unsat = True
            return solver
        for clause in self.clauses:
            if not solver.add_clause(clause):
                break
        return solver


class StableModelEngine:
    """Reusable stable-model solver for one ground program."""

    def __init__(self, gp: GroundProgram):
        self.gp = gp
        self.compiled = _Compiled(gp)
        self.solver = self.compiled.instantiate()
        self._obj_levels = gp.levels()

    # ---- stability ----

    def _founded_closure(self, true_ids: set) -> set:
        """Worklist closure: linear in total body size."""
        gp = self.gp
        rule_pending = [len(set(r.pos)) for r in gp.rules]
        choice_pending = [len(set(c.pos)) for c in gp.choices]
        founded = set()
        queue = []

        def found(aid: int):
            if aid in true_ids and aid not in founded:
                founded.add(aid)
                queue.append(aid)

        def fire(kind: str, idx: int):
            if kind == "r":
                rule = gp.rules[idx]
                if not any(a in true_ids for a in rule.neg):
                    found(rule.head)
            else:
                choice = gp.choices[idx]
                if not any(a in true_ids for a in choice.neg):
                    for aid in choice.elements:
                        found(aid)

        for ridx, pending in enumerate(rule_pending):
            if pending == 0:
                fire("r", ridx)
        for cidx, pending in enumerate(choice_pending):
            if pending == 0:
                fire("c", cidx)
        while queue:
            aid = queue.pop()
            for kind, idx in self.compiled.occ_pos[aid]:
                if kind == "r":
                    rule_pending[idx] -= 1
                    if rule_pending[idx] == 0:
                        fire("r", idx)
                else:
                    choice_pending[idx] -= 1
                    if choice_pending[idx] == 0:
                        fire("c", idx)
        return founded

    def _loop_clauses(self, solver: CdclSolver):
        """Runs at total assignments: None accepts, else clauses to add."""
        true_ids = {
            aid for aid in range(self.compiled.natoms) if solver.assign[aid + 1] > 0
        }
        founded = self._founded_closure(true_ids)
        unfounded = true_ids - founded
        if not unfounded:
            return None
        external = []
        for aid in unfounded:
            for kind, idx in self.compiled.defs[aid]:
                if kind == "r":
                    rule = self.gp.rules[idx]
                    if not (set(rule.pos) & unfounded):
                        external.append(self.compiled.rule_blit[idx])
                else:
                    choice = self.gp.choices[idx]
                    if not (set(choice.pos) & unfounded):
                        external.append(self.compiled.choice_blit[idx])
        ext = sorted({e for e in external if e is not None})
        return [[-(aid + 1)] + ext for aid in sorted(unfounded)]

    # ---- models and objectives ----

    def _objective_of(self, true_ids) -> ObjectiveVector:
        totals = {}
        for entry in self.gp.minimize:
            totals.setdefault(entry.level, 0)
            if entry.atom is None or entry.atom in true_ids:
                totals[entry.level] += entry.weight
        entries = tuple(sorted(totals.items(), key=lambda t: -t[0]))
        return ObjectiveVector(entries)

    def _model_from(self, assign) -> Model:
        true_ids = frozenset(
            aid for aid in range(self.compiled.natoms) if assign[aid + 1] > 0
        )
        atoms = frozenset(
            self.gp.atoms[aid] for aid in true_ids if self.gp.atoms[aid].pred != "__obj"
        )
        return Model(true_ids, atoms, self._objective_of(true_ids))

    # ---- solving ----

    def _raw_solve(self, solver, assumption_lits, deadline):
        return solver.solve(
            assumption_lits,
            total_check=lambda: self._loop_clauses(solver),
            deadline=deadline,
        )

    def _assumption_lits(self, assumptions):
        lits = []
        unknown = []
        for atom in assumptions:
            aid = self.gp.atom_id(atom)
            if aid is None:
                unknown.append(atom)
            else:
                lits.append(aid + 1)
        return lits, unknown

    def solve(self, assumptions=(), limits: SolveLimits | None = None, optimize=True) -> SolveResult:
        limits = limits or SolveLimits()
        deadline = time.monotonic() + limits.budget if limits.budget else None
        assumptions = list(assumptions)
        lits, unknown = self._assumption_lits(assumptions)
        if unknown:
            first = min(unknown, key=str)
            return SolveResult(core=UnsatCore(frozenset([first])))
        solver = self.solver
        status, payload = self._raw_solve(solver, lits, deadline)
        if status == "UNSAT":
            return SolveResult(core=self._core_from(payload, assumptions))
        if not optimize or not self.gp.minimize:
            return SolveResult(model=self._model_from(payload))
        return SolveResult(model=self._optimize(solver, lits, payload, deadline))

    def _core_from(self, core_lits, assumptions) -> UnsatCore:
        atom_by_var = {}
        for atom in assumptions:
            aid = self.gp.atom_id(atom)
            if aid is not None:
                atom_by_var[aid + 1] = atom
        atoms = frozenset(
            atom_by_var[abs(lit)] for lit in core_lits if abs(lit) in atom_by_var
        )
        return UnsatCore(atoms)

    def _level_terms(self, level):
        terms = []
        fixed = 0
        for entry in self.gp.minimize:
            if entry.level != level:
                continue
            if entry.atom is None:
                fixed += entry.weight
            else:
                terms.append((entry.atom + 1, entry.weight))
        return terms, fixed

    def _optimize(self, solver, assumption_lits, first_assign, deadline) -> Model:
        best = self._model_from(first_assign)
        guards = []
        for level in self._obj_levels:
            terms, fixed = self._level_terms(level)
            if not terms:
                continue
            while best.objective.value(level) - fixed > 0:
                guard = solver.new_var()
                solver.add_pb_le(terms, best.objective.value(level) - fixed - 1, guard)
                status, payload = self._raw_solve(
                    solver, assumption_lits + guards + [guard], deadline
                )
                if status == "SAT":
                    candidate = self._model_from(payload)
                    if compare_objectives(candidate.objective, best.objective) < 0:
                        best = candidate
                    else:
                        break
                else:
                    break
            guard = solver.new_var()
            solver.add_pb_le(terms, best.objective.value(level) - fixed, guard)
            guards.append(guard)
        return best

    # ---- enumeration ----

    def enumerate_models(self, limit: int, assumptions=(), limits: SolveLimits | None = None):
        if limit < 1:
            raise ValueError("limit must be >= 1")
        limits = limits or SolveLimits()
        deadline = time.monotonic() + limits.budget if limits.budget else None
        lits, unknown = self._assumption_lits(assumptions)
        if unknown:
            return []
        solver = self.compiled.instantiate()
        models = []
        while len(models) < limit:
            status, payload = self._raw_solve(solver, lits, deadline)
            if status == "UNSAT":
                break
            model = self._model_from(payload)
            models.append(model)
            blocking = [
                -(aid + 1) if payload[aid + 1] > 0 else (aid + 1)
                for aid in range(self.compiled.natoms)
            ]
            if not blocking:
                break
            solver.add_clause(blocking)
        return models


def solve(gp: GroundProgram, assumptions=(), options: SolveLimits | None = None) -> SolveResult:
    """One-shot optimal stable-model search."""
    return StableModelEngine(gp).solve(assumptions, options)


def enumerate_models(gp: GroundProgram, limit: int, assumptions=()) -> list:
    """Up to `limit` stable models, ignoring optimization, no duplicates."""
    return StableModelEngine(gp).enumerate_models(limit, assumptions)


def is_stable_model(gp: GroundProgram, candidate) -> bool:
    """Definition-level stable-model check, independent of the CDCL search.

    `candidate` is a set of Atom or of atom ids.  Raises ValueError for
    atoms outside the program's universe.
    """
    true_ids = set()
    for item in candidate:
        if isinstance(item, Atom):
            aid = gp.atom_id(item)
            if aid is None:
                raise ValueError(f"atom {item} is not in the program universe")
            true_ids.add(aid)
        else:
            if not 0 <= item < len(gp.atoms):
                raise ValueError(f"atom id {item} is not in the program universe")
            true_ids.add(item)

    # every rule satisfied
    for rule in gp.rules:
        body_holds = all(a in true_ids for a in rule.pos) and not any(
            a in true_ids for a in rule.neg
        )
        if body_holds and rule.head not in true_ids:
            return False
    for choice in gp.choices:
        body_holds = all(a in true_ids for a in choice.pos) and not any(
            a in true_ids for a in choice.neg
        )
        if not body_holds:
            continue
        count = sum(1 for a in choice.elements if a in true_ids)
        if choice.lower is not None and count < choice.lower:
            return False
        if choice.upper is not None and count > choice.upper:
            return False
    for constraint in gp.constraints:
        if all(a in true_ids for a in constraint.pos) and not any(
            a in true_ids for a in constraint.neg
        ):
            return False

    # every true atom founded in the reduct
    founded = set()
    for rule in gp.rules:
        if not rule.pos and not rule.neg and rule.head in true_ids:
            founded.add(rule.head)
    changed = True
    while changed:
        changed = False
        for rule in gp.rules:
            h = rule.head
            if h in true_ids and h not in founded:
                if all(a in founded for a in rule.pos) and not any(
                    a in true_ids for a in rule.neg
                ):
                    founded.add(h)
                    changed = True
        for choice in gp.choices:
            if any(a in true_ids for a in choice.neg):
                continue
            if not all(a in founded for a in choice.pos):
                continue
            for aid in choice.elements:
                if aid in true_ids and aid not in founded:
                    founded.add(aid)
                    changed = True
    return founded == true_ids
