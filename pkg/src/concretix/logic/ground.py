"""Bottom-up grounding of first-order rules into propositional form.

Grounding runs in two passes.  A semi-naive fixpoint first computes the
universe of derivable atoms, treating negative literals as true and choice
elements as derivable.  A second pass then instantiates every rule against
the final universe, simplifying as it goes: positive literals over input
facts are dropped, negative literals over underivable atoms are dropped,
and instances whose body is certainly false are discarded entirely.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from itertools import count

from .syntax import (
    Atom,
    Comparison,
    Literal,
    Program,
    Rule,
    Sym,
    Var,
    evaluate_comparison,
    is_ground,
)


DEFAULT_RULE_BUDGET = 2_000_000


class GroundError(Exception):
    """Raised for programs outside the supported grounding subset."""


class GroundingBudgetExceeded(Exception):
    def __init__(self, budget: int):
        super().__init__(f"ground rule budget of {budget} exceeded")
        self.budget = budget


@dataclass(frozen=True, slots=True)
class GroundRule:
    head: int
    pos: tuple = ()
    neg: tuple = ()


@dataclass(frozen=True, slots=True)
class GroundChoice:
    elements: tuple
    lower: int | None
    upper: int | None
    pos: tuple = ()
    neg: tuple = ()


@dataclass(frozen=True, slots=True)
class GroundConstraint:
    pos: tuple = ()
    neg: tuple = ()


@dataclass(frozen=True, slots=True)
class GroundMinimize:
    weight: int
    level: int
    key: tuple
    atom: int | None  # None means the entry is unconditionally active


@dataclass
class GroundProgram:
    atoms: list = field(default_factory=list)
    index: dict = field(default_factory=dict)
    rules: list = field(default_factory=list)
    choices: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    minimize: list = field(default_factory=list)

    def atom_id(self, atom: Atom):
        return self.index.get(atom)

    def add_atom(self, atom: Atom) -> int:
        existing = self.index.get(atom)
        if existing is not None:
            return existing
        aid = len(self.atoms)
        self.atoms.append(atom)
        self.index[atom] = aid
        return aid

    @property
    def fact_ids(self) -> set:
        return {r.head for r in self.rules if not r.pos and not r.neg}

    def levels(self) -> list:
        return sorted({entry.level for entry in self.minimize}, reverse=True)


def _substitute(atom: Atom, subst: dict) -> Atom:
    if not atom.args:
        return atom
    return Atom(atom.pred, tuple(subst.get(a.name, a) if isinstance(a, Var) else a for a in atom.args))


def _subst_term(term, subst: dict):
    if isinstance(term, Var):
        return subst.get(term.name, term)
    return term


class _Universe:
    """Derivable atoms indexed by predicate name and argument position."""

    def __init__(self):
        self.by_pred: dict = {}
        self._arg_index: dict = {}

    def add(self, atom: Atom) -> bool:
        table = self.by_pred.setdefault(atom.pred, {})
        if atom.args in table:
            return False
        table[atom.args] = None
        for pos, val in enumerate(atom.args):
            self._arg_index.setdefault((atom.pred, pos, val), []).append(atom.args)
        return True

    def __contains__(self, atom: Atom) -> bool:
        table = self.by_pred.get(atom.pred)
        return table is not None and atom.args in table

    def candidates(self, pred: str, pattern: tuple):
        """Tuples possibly matching a pattern of ground terms and None holes."""
        for pos, val in enumerate(pattern):
            if val is not None:
                return self._arg_index.get((pred, pos, val), ())
        return list(self.by_pred.get(pred, ()))


def _match_literal(atom: Atom, subst: dict, universe: _Universe):
    pattern = tuple(
        subst.get(a.name) if isinstance(a, Var) else a for a in atom.args
    )
    for args in universe.candidates(atom.pred, pattern):
        if len(args) != len(atom.args):
            continue
        new = None
        ok = True
        for term, val in zip(atom.args, args):
            if isinstance(term, Var):
                bound = subst.get(term.name) if new is None else new.get(term.name, subst.get(term.name))
                if bound is None:
                    if new is None:
                        new = dict(subst)
                    new[term.name] = val
                elif bound != val:
                    ok = False
                    break
            elif term != val:
                ok = False
                break
        if ok:
            yield new if new is not None else subst


def _join(
    literals: list,
    comparisons: list,
    universe: _Universe,
    seed: dict,
    delta_choice=None,
):
    """Enumerate substitutions matching all positive literals.

    delta_choice, when given, is (index, delta_universe): the literal at
    that index is matched against the delta instead of the full universe.
    """

    def holds_so_far(subst: dict) -> bool:
        for cmp in comparisons:
            lt, rt = _subst_term(cmp.left, subst), _subst_term(cmp.right, subst)
            if is_ground(lt) and is_ground(rt) and not evaluate_comparison(cmp.op, lt, rt):
                return False
        return True

    def recurse(idx: int, subst: dict):
        if not holds_so_far(subst):
            return
        if idx == len(literals):
            yield subst
            return
        source = universe
        if delta_choice is not None and idx == delta_choice[0]:
            source = delta_choice[1]
        for new in _match_literal(literals[idx], subst, source):
            yield from recurse(idx + 1, new)

    yield from recurse(0, seed)


def _split_body(body) -> tuple:
    pos, neg, cmps = [], [], []
    for item in body:
        if isinstance(item, Comparison):
            cmps.append(item)
        elif item.positive:
            pos.append(item.atom)
        else:
            neg.append(item.atom)
    return pos, neg, cmps


class _Grounder:
    def __init__(self, program: Program, max_rules: int):
        self.program = program
        self.max_rules = max_rules
        self.gp = GroundProgram()
        self.universe = _Universe()
        self.certain: set = set()
        self.emitted = 0
        self.seen_rules: set = set()
        self.aux_counter = count()
        self.idb_preds = self._collect_idb_preds()

    def _collect_idb_preds(self) -> set:
        preds = set()
        for rule in self.program.rules:
            if rule.kind == "normal":
                preds.add(rule.head.pred)
            elif rule.kind == "choice":
                for element in rule.head.elements:
                    preds.add(element.atom.pred)
        return preds

    def run(self) -> GroundProgram:
        self._check_choice_conditions()
        self._load_facts()
        self._fixpoint()
        self._instantiate()
        return self.gp

    def _check_choice_conditions(self):
        for rule in self.program.rules:
            if rule.kind != "choice":
                continue
            for element in rule.head.elements:
                for lit in element.condition:
                    if lit.atom.pred in self.idb_preds:
                        raise GroundError(
                            f"choice condition over derived predicate "
                            f"{lit.atom.pred!r} is not supported (rule at "
                            f"{rule.line}:{rule.col})"
                        )

    def _load_facts(self):
        for rule in self.program.rules:
            if rule.kind == "fact":
                if not rule.head.is_ground():
                    raise GroundError(f"fact with variables at {rule.line}:{rule.col}")
                self.universe.add(rule.head)
                self.certain.add(rule.head)

    def _fixpoint(self):
        delta = _Universe()
        for pred, table in self.universe.by_pred.items():
            for args in table:
                delta.add(Atom(pred, args))
        first = True
        while True:
            new_delta = _Universe()
            derived_any = False
            for rule in self.program.rules:
                if rule.kind == "normal":
                    derived_any |= self._derive_normal(rule, delta, new_delta, first)
                elif rule.kind == "choice":
                    derived_any |= self._derive_choice(rule, delta, new_delta, first)
            first = False
            if not derived_any:
                break
            delta = new_delta

    def _derive_normal(self, rule: Rule, delta, new_delta, first: bool) -> bool:
        pos, _, cmps = _split_body(rule.body)
        derived = False
        if not pos:
            if first:
                for subst in _join([], cmps, self.universe, {}):
                    derived |= self._add_derived(_substitute(rule.head, subst), new_delta)
            return derived
        positions = range(len(pos)) if not first else [0]
        for idx in positions:
            choice = (idx, delta) if not first else None
            for subst in _join(pos, cmps, self.universe, {}, delta_choice=choice):
                derived |= self._add_derived(_substitute(rule.head, subst), new_delta)
        return derived

    def _derive_choice(self, rule: Rule, delta, new_delta, first: bool) -> bool:
        pos, _, cmps = _split_body(rule.body)
        derived = False

        def derive_elements(subst: dict) -> bool:
            found = False
            for element in rule.head.elements:
                cond_pos = [l.atom for l in element.condition if l.positive]
                for esub in _join(cond_pos, [], self.universe, dict(subst)):
                    found |= self._add_derived(_substitute(element.atom, esub), new_delta)
            return found

        if not pos:
            if first:
                for subst in _join([], cmps, self.universe, {}):
                    derived |= derive_elements(subst)
            return derived
        positions = [0] if first else range(len(pos))
        for idx in positions:
            choice = None if first else (idx, delta)
            for subst in _join(pos, cmps, self.universe, {}, delta_choice=choice):
                derived |= derive_elements(subst)
        return derived

    def _add_derived(self, atom: Atom, new_delta) -> bool:
        if not atom.is_ground():
            raise GroundError(f"derived atom {atom} is not ground")
        if self.universe.add(atom):
            new_delta.add(atom)
            return True
        return False

    # second pass: emission with simplification

    def _budget(self):
        self.emitted += 1
        if self.emitted > self.max_rules:
            raise GroundingBudgetExceeded(self.max_rules)

    def _simplify(self, pos: list, neg: list):
        """Returns (pos_ids, neg_ids) or None when the body is certainly false."""
        pos_ids = []
        for atom in pos:
            if atom in self.certain:
                continue
            if atom not in self.universe:
                return None
            pos_ids.append(self.gp.add_atom(atom))
        neg_ids = []
        for atom in neg:
            if atom in self.certain:
                return None
            if atom not in self.universe:
                continue
            neg_ids.append(self.gp.add_atom(atom))
        return tuple(pos_ids), tuple(neg_ids)

    def _instantiate(self):
        for rule in self.program.rules:
            if rule.kind == "fact":
                self._budget()
                self.gp.rules.append(GroundRule(self.gp.add_atom(rule.head)))
            elif rule.kind == "normal":
                self._emit_normal(rule)
            elif rule.kind == "integrity":
                self._emit_integrity(rule)
            elif rule.kind == "choice":
                self._emit_choice(rule)
            elif rule.kind == "minimize":
                self._emit_minimize(rule)
        self._dedupe_minimize()

    def _ground_bodies(self, rule: Rule):
        pos, neg, cmps = _split_body(rule.body)
        for subst in _join(pos, cmps, self.universe, {}):
            gpos = [_substitute(a, subst) for a in pos]
            gneg = [_substitute(a, subst) for a in neg]
            if any(not a.is_ground() for a in gneg):
                raise GroundError(f"unsafe negative literal in rule at {rule.line}:{rule.col}")
            simplified = self._simplify(gpos, gneg)
            if simplified is not None:
                yield subst, simplified

    def _emit_normal(self, rule: Rule):
        for subst, (pos_ids, neg_ids) in self._ground_bodies(rule):
            head = _substitute(rule.head, subst)
            key = ("r", head, pos_ids, neg_ids)
            if key in self.seen_rules:
                continue
            self.seen_rules.add(key)
            self._budget()
            self.gp.rules.append(GroundRule(self.gp.add_atom(head), pos_ids, neg_ids))

    def _emit_integrity(self, rule: Rule):
        for _, (pos_ids, neg_ids) in self._ground_bodies(rule):
            key = ("c", pos_ids, neg_ids)
            if key in self.seen_rules:
                continue
            self.seen_rules.add(key)
            self._budget()
            self.gp.constraints.append(GroundConstraint(pos_ids, neg_ids))

    def _emit_choice(self, rule: Rule):
        for subst, (pos_ids, neg_ids) in self._ground_bodies(rule):
            element_ids = []
            for element in rule.head.elements:
                cond_pos = [l.atom for l in element.condition if l.positive]
                cond_neg = [l.atom for l in element.condition if not l.positive]
                for esub in _join(cond_pos, [], self.universe, dict(subst)):
                    ok = all(_substitute(a, esub) in self.certain for a in cond_pos)
                    if ok and not any(_substitute(a, esub) in self.certain for a in cond_neg):
                        atom = _substitute(element.atom, esub)
                        aid = self.gp.add_atom(atom)
                        if aid not in element_ids:
                            element_ids.append(aid)
            lower, upper = rule.head.lower, rule.head.upper
            if lower is not None and lower > len(element_ids):
                # bounds can never be met, so the body must not hold
                key = ("c", pos_ids, neg_ids)
                if key not in self.seen_rules:
                    self.seen_rules.add(key)
                    self._budget()
                    self.gp.constraints.append(GroundConstraint(pos_ids, neg_ids))
                continue
            key = ("ch", tuple(element_ids), lower, upper, pos_ids, neg_ids)
            if key in self.seen_rules:
                continue
            self.seen_rules.add(key)
            self._budget()
            self.gp.choices.append(
                GroundChoice(tuple(element_ids), lower, upper, pos_ids, neg_ids)
            )

    def _emit_minimize(self, rule: Rule):
        spec = rule.head
        for subst, (pos_ids, neg_ids) in self._ground_bodies(rule):
            weight = _subst_term(spec.weight, subst)
            if not isinstance(weight, int):
                raise GroundError(
                    f"minimize weight {weight!r} is not an integer (rule at {rule.line}:{rule.col})"
                )
            if weight < 0:
                raise GroundError("negative minimize weights are not supported")
            key = tuple(_subst_term(k, subst) for k in spec.keys)
            if not pos_ids and not neg_ids:
                cond = None
            elif len(pos_ids) == 1 and not neg_ids:
                cond = pos_ids[0]
            else:
                aux = Atom("__obj", (next(self.aux_counter),))
                cond = self.gp.add_atom(aux)
                self._budget()
                self.gp.rules.append(GroundRule(cond, pos_ids, neg_ids))
            self._budget()
            self.gp.minimize.append(GroundMinimize(weight, spec.level, key, cond))

    def _dedupe_minimize(self):
        """Set semantics: one entry per distinct (weight, level, key) tuple.

        Duplicate tuples whose conditions differ become a single entry
        activated by the disjunction of the conditions.
        """
        grouped: dict = {}
        order = []
        for entry in self.gp.minimize:
            bucket = (entry.weight, entry.level, entry.key)
            if bucket not in grouped:
                grouped[bucket] = []
                order.append(bucket)
            grouped[bucket].append(entry.atom)
        result = []
        for bucket in order:
            weight, level, key = bucket
            conds = grouped[bucket]
            if None in conds:
                result.append(GroundMinimize(weight, level, key, None))
            elif len(set(conds)) == 1:
                result.append(GroundMinimize(weight, level, key, conds[0]))
            else:
                aux = Atom("__obj", (next(self.aux_counter),))
                aux_id = self.gp.add_atom(aux)
                for cond in dict.fromkeys(conds):
                    self.gp.rules.append(GroundRule(aux_id, (cond,), ()))
                result.append(GroundMinimize(weight, level, key, aux_id))
        self.gp.minimize = result


def ground(program: Program, max_rules: int = DEFAULT_RULE_BUDGET) -> GroundProgram:
    """Ground a safe program into a variable-free GroundProgram."""
    return _Grounder(program, max_rules).run()
