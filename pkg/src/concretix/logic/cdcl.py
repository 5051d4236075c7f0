"""Conflict-driven clause-learning SAT core.

This is the propositional engine underneath the stable-model solver:
two-watched-literal propagation, 1UIP clause learning, deterministic
VSIDS branching with phase saving, Luby restarts, MiniSat-style
assumptions with final-conflict core extraction, and counter-based
pseudo-Boolean "at most" constraints used for optimization bounds.

Literals are nonzero ints (+v true, -v false).  Everything is
deterministic: ties in the branching heap break on variable index, so
identical inputs always produce identical runs.
"""

from __future__ import annotations

import time
from heapq import heappop, heappush
from itertools import combinations


class SolveTimeout(Exception):
    """Raised when a solve exceeds its time budget."""

    def __init__(self, budget: float):
        super().__init__(f"solve exceeded time budget of {budget:.3f}s")
        self.budget = budget


class _Clause:
    __slots__ = ("lits", "learned")

    def __init__(self, lits, learned=False):
        self.lits = lits
        self.learned = learned


class _PbLe:
    """sum(weight for true term) <= bound, enforced only while guard is true."""

    __slots__ = ("terms", "bound", "guard", "cursum")

    def __init__(self, terms, bound, guard):
        self.terms = terms  # list[(lit, weight)]
        self.bound = bound
        self.guard = guard
        self.cursum = 0


def _lit_index(lit: int) -> int:
    return 2 * lit if lit > 0 else -2 * lit + 1


class CdclSolver:
    def __init__(self, nvars: int = 0):
        self.nvars = 0
        self.assign = [0]
        self.level = [0]
        self.reason = [None]
        self.activity = [0.0]
        self.saved_phase = [False]
        self.watches = [[], []]
        self.pb_occ = [[], []]
        self.pb_guard_occ = [[], []]
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.heap = []
        self.var_inc = 1.0
        self.unsat = False
        self.pbs = []
        for _ in range(nvars):
            self.new_var()

    # ---- variables and values ----

    def new_var(self) -> int:
        self.nvars += 1
        self.assign.append(0)
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.saved_phase.append(False)
        self.watches.extend(([], []))
        self.pb_occ.extend(([], []))
        self.pb_guard_occ.extend(([], []))
        heappush(self.heap, (0.0, self.nvars))
        return self.nvars

    def _lit_value(self, lit: int):
        v = self.assign[abs(lit)]
        if v == 0:
            return None
        return (v > 0) == (lit > 0)

    def decision_level(self) -> int:
        return len(self.trail_lim)

    # ---- clause and constraint insertion ----

    def add_clause(self, lits) -> bool:
        """Add a clause at decision level 0.  Returns False on direct conflict."""
        if self.unsat:
            return False
        if self.decision_level() != 0:
            self._backtrack(0)
        out = []
        for lit in lits:
            val = self._lit_value(lit)
            if val is True:
                return True
            if val is None and lit not in out:
                if -lit in out:
                    return True
                out.append(lit)
        if not out:
            self.unsat = True
            return False
        if len(out) == 1:
            if not self._enqueue(out[0], None):
                self.unsat = True
                return False
            if self._propagate() is not None:
                self.unsat = True
                return False
            return True
        self._attach(_Clause(out))
        return True

    def _attach(self, clause: _Clause):
        self.watches[_lit_index(clause.lits[0])].append(clause)
        self.watches[_lit_index(clause.lits[1])].append(clause)

    def add_clause_during_search(self, lits) -> None:
        """Insert a clause that may be falsified by the current assignment.

        The caller is expected to backtrack afterwards; the clause is
        attached watching its two highest-level literals so propagation
        stays sound after the backjump.
        """
        out = list(dict.fromkeys(lits))
        if not out:
            self.unsat = True
            return
        if len(out) == 1:
            self._backtrack(0)
            if self._lit_value(out[0]) is False:
                self.unsat = True
            elif self._lit_value(out[0]) is None:
                if not self._enqueue(out[0], None) or self._propagate() is not None:
                    self.unsat = True
            return
        out.sort(key=lambda l: -(self.level[abs(l)] if self.assign[abs(l)] != 0 else 1 << 60))
        top = out[0]
        if self._lit_value(top) is False and self.level[abs(top)] == 0:
            self.unsat = True
            return
        self._attach(_Clause(out))

    def add_pb_le(self, terms, bound: int, guard: int | None = None) -> None:
        """Require sum(weight for satisfied term literal) <= bound.

        With a guard literal the constraint is enforced only while the guard
        is true, which makes optimization bounds retractable via assumptions.
        """
        if self.decision_level() != 0:
            self._backtrack(0)
        terms = [(lit, w) for (lit, w) in terms if w > 0]
        if bound < 0:
            if guard is None:
                self.unsat = True
            else:
                self.add_clause([-guard])
            return
        if sum(w for _, w in terms) <= bound:
            return
        pb = _PbLe(terms, bound, guard)
        self.pbs.append(pb)
        for lit, w in terms:
            self.pb_occ[_lit_index(lit)].append((pb, w))
            if self._lit_value(lit) is True:
                pb.cursum += w
        if guard is not None:
            self.pb_guard_occ[_lit_index(guard)].append(pb)
        if guard is None or self._lit_value(guard) is True:
            confl = self._pb_check(pb)
            if confl is not None or self._propagate() is not None:
                self.unsat = True

    # ---- assignment bookkeeping ----

    def _enqueue(self, lit: int, reason) -> bool:
        val = self._lit_value(lit)
        if val is not None:
            return val
        v = abs(lit)
        self.assign[v] = 1 if lit > 0 else -1
        self.level[v] = self.decision_level()
        self.reason[v] = reason
        self.saved_phase[v] = lit > 0
        self.trail.append(lit)
        for pb, w in self.pb_occ[_lit_index(lit)]:
            pb.cursum += w
        return True

    def _backtrack(self, target: int) -> None:
        if self.decision_level() <= target:
            return
        limit = self.trail_lim[target]
        for i in range(len(self.trail) - 1, limit - 1, -1):
            lit = self.trail[i]
            v = abs(lit)
            for pb, w in self.pb_occ[_lit_index(lit)]:
                pb.cursum -= w
            self.assign[v] = 0
            self.reason[v] = None
            heappush(self.heap, (-self.activity[v], v))
        del self.trail[limit:]
        del self.trail_lim[target:]
        self.qhead = min(self.qhead, len(self.trail))

    # ---- propagation ----

    def _propagate(self):
        while self.qhead < len(self.trail):
            lit = self.trail[self.qhead]
            self.qhead += 1
            confl = self._propagate_clauses(-lit)
            if confl is not None:
                return confl
            confl = self._propagate_pbs(lit)
            if confl is not None:
                return confl
        return None

    def _propagate_clauses(self, false_lit: int):
        idx = _lit_index(false_lit)
        ws = self.watches[idx]
        i = 0
        while i < len(ws):
            clause = ws[i]
            lits = clause.lits
            if lits[0] == false_lit:
                lits[0], lits[1] = lits[1], lits[0]
            first = lits[0]
            if self._lit_value(first) is True:
                i += 1
                continue
            moved = False
            for k in range(2, len(lits)):
                if self._lit_value(lits[k]) is not False:
                    lits[1], lits[k] = lits[k], lits[1]
                    self.watches[_lit_index(lits[1])].append(clause)
                    ws[i] = ws[-1]
                    ws.pop()
                    moved = True
                    break
            if moved:
                continue
            if self._lit_value(first) is False:
                self.qhead = len(self.trail)
                return clause
            self._enqueue(first, clause)
            i += 1
        return None

    def _propagate_pbs(self, true_lit: int):
        idx = _lit_index(true_lit)
        for pb, _ in self.pb_occ[idx]:
            confl = self._pb_check(pb)
            if confl is not None:
                return confl
        for pb in self.pb_guard_occ[idx]:
            confl = self._pb_check(pb)
            if confl is not None:
                return confl
        return None

    def _pb_active(self, pb: _PbLe) -> bool:
        return pb.guard is None or self._lit_value(pb.guard) is True

    def _pb_reason_lits(self, pb: _PbLe, overshoot: int | None = None):
        """Negations of enough true terms to justify a conflict or implication."""
        trues = sorted(
            ((w, lit) for lit, w in pb.terms if self._lit_value(lit) is True),
            key=lambda t: (-t[0], t[1]),
        )
        out = []
        total = 0
        target = pb.bound if overshoot is None else overshoot
        for w, lit in trues:
            out.append(-lit)
            total += w
            if total > target:
                break
        if overshoot is not None and total <= target:
            out = [-lit for _, lit in trues]
        if pb.guard is not None:
            out.append(-pb.guard)
        return out

    def _pb_check(self, pb: _PbLe):
        if not self._pb_active(pb):
            return None
        if pb.cursum > pb.bound:
            return _Clause(self._pb_reason_lits(pb), learned=True)
        slack = pb.bound - pb.cursum
        for lit, w in pb.terms:
            if w > slack and self._lit_value(lit) is None:
                reason = [-lit] + self._pb_reason_lits(pb, overshoot=pb.bound - w)
                self._enqueue(-lit, _Clause(reason, learned=True))
        return None

    # ---- conflict analysis ----

    def _bump(self, v: int):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.nvars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.nvars + 1) if self.assign[u] == 0]
            self.heap.sort()
        if self.assign[v] == 0:
            heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl: _Clause):
        learnt = [0]
        seen = [False] * (self.nvars + 1)
        counter = 0
        lit = None
        index = len(self.trail) - 1
        while True:
            start = 0 if lit is None else 1
            for q in confl.lits[start:]:
                v = abs(q)
                if not seen[v] and self.level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if self.level[v] >= self.decision_level():
                        counter += 1
                    else:
                        learnt.append(q)
            while not seen[abs(self.trail[index])]:
                index -= 1
            lit = self.trail[index]
            v = abs(lit)
            confl = self.reason[v]
            seen[v] = False
            counter -= 1
            if counter == 0:
                break
        learnt[0] = -lit
        if len(learnt) == 1:
            return learnt, 0
        bt_pos = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
        learnt[1], learnt[bt_pos] = learnt[bt_pos], learnt[1]
        return learnt, self.level[abs(learnt[1])]

    def _analyze_final(self, lit: int) -> set:
        """Assumptions implicated in forcing `lit` false (lit included)."""
        core = {lit}
        seen = [False] * (self.nvars + 1)
        seen[abs(lit)] = True
        for i in range(len(self.trail) - 1, -1, -1):
            tl = self.trail[i]
            v = abs(tl)
            if not seen[v]:
                continue
            r = self.reason[v]
            if r is None:
                core.add(tl)
            else:
                for q in r.lits[1:]:
                    if self.level[abs(q)] > 0:
                        seen[abs(q)] = True
            seen[v] = False
        return core

    # ---- search ----

    def _pick_branch(self) -> int:
        while self.heap:
            _, v = heappop(self.heap)
            if self.assign[v] == 0:
                return v if self.saved_phase[v] else -v
        return 0

    @staticmethod
    def _luby(i: int) -> int:
        """Luby sequence, 1-indexed: 1 1 2 1 1 2 4 1 1 2 1 1 2 4 8 ..."""
        while True:
            k = i + 1
            if k & (k - 1) == 0:
                return k // 2
            i -= (1 << (k.bit_length() - 1)) - 1

    def solve(self, assumptions=(), total_check=None, deadline=None):
        """Search for a satisfying assignment.

        Returns ("SAT", assign-snapshot) or ("UNSAT", core-literal-set).
        total_check, when given, runs on every total assignment and returns
        a list of clauses to add (restarting the search) or None to accept.
        """
        if self.unsat:
            return ("UNSAT", set())
        self._backtrack(0)
        self.qhead = 0
        if self._propagate() is not None:
            self.unsat = True
            return ("UNSAT", set())
        assumptions = list(assumptions)
        conflicts = 0
        restart_count = 0
        restart_limit = 128 * self._luby(restart_count + 1)
        while True:
            confl = self._propagate()
            if confl is not None:
                conflicts += 1
                if deadline is not None and conflicts % 256 == 0 and time.monotonic() > deadline:
                    raise SolveTimeout(0.0)
                if self.decision_level() == 0:
                    self.unsat = True
                    return ("UNSAT", set())
                learnt, bt = self._analyze(confl)
                self._backtrack(bt)
                if len(learnt) == 1:
                    if not self._enqueue(learnt[0], None):
                        self.unsat = True
                        return ("UNSAT", set())
                else:
                    clause = _Clause(learnt, learned=True)
                    self._attach(clause)
                    self._enqueue(learnt[0], clause)
                self.var_inc /= 0.95
                if conflicts >= restart_limit:
                    conflicts = 0
                    restart_count += 1
                    restart_limit = 128 * self._luby(restart_count + 1)
                    self._backtrack(0)
                continue
            if self.decision_level() < len(assumptions):
                p = assumptions[self.decision_level()]
                val = self._lit_value(p)
                if val is True:
                    self.trail_lim.append(len(self.trail))
                elif val is False:
                    return ("UNSAT", self._analyze_final(p))
                else:
                    self.trail_lim.append(len(self.trail))
                    self._enqueue(p, None)
            elif len(self.trail) == self.nvars:
                if total_check is not None:
                    extra = total_check()
                    if extra:
                        for clause in extra:
                            self.add_clause_during_search(clause)
                        self._backtrack(0)
                        if self.unsat:
                            return ("UNSAT", set())
                        continue
                return ("SAT", list(self.assign))
            else:
                branch = self._pick_branch()
                if branch == 0:
                    # heap exhausted by stale entries; rebuild
                    self.heap = [
                        (-self.activity[v], v)
                        for v in range(1, self.nvars + 1)
                        if self.assign[v] == 0
                    ]
                    self.heap.sort()
                    if not self.heap:
                        continue
                    branch = self._pick_branch()
                self.trail_lim.append(len(self.trail))
                self._enqueue(branch, None)
