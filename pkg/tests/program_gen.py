"""Seeded random ground-program generation and brute-force oracles.

These helpers back the solver property tests and the acceptance suite.
Programs use 0-ary atoms (already ground) mixing facts, normal rules with
negation, integrity constraints, bounded choice rules, and optionally
#minimize statements.  The brute-force side enumerates every subset of the
ground universe and filters with the definition-level is_stable_model.
"""

from __future__ import annotations

import random
from itertools import combinations

from concretix.logic import ground, is_stable_model, parse_program


def random_program_text(rng: random.Random, natoms=8, nrules=12, with_minimize=False):
    names = [f"a{i}" for i in range(natoms)]
    lines = []

    def sample_atoms(k):
        return rng.sample(names, min(k, len(names)))

    nfacts = rng.randint(0, max(1, natoms // 4))
    for name in sample_atoms(nfacts):
        lines.append(f"{name}.")

    nchoices = rng.randint(1, 2)
    for _ in range(nchoices):
        elems = sample_atoms(rng.randint(1, min(4, natoms)))
        lower = rng.choice([None, 0, 1, rng.randint(0, len(elems))])
        upper = rng.choice([None, len(elems), rng.randint(0, len(elems))])
        if lower is not None and upper is not None and lower > upper:
            lower, upper = upper, lower
        text = "{ " + "; ".join(elems) + " }"
        if lower is not None:
            text = f"{lower} {text}"
        if upper is not None:
            text = f"{text} {upper}"
        body = ""
        if rng.random() < 0.3:
            body = f" :- {rng.choice(names)}"
        lines.append(f"{text}{body}.")

    for _ in range(nrules):
        kind = rng.random()
        if kind < 0.7:
            head = rng.choice(names)
            npos = rng.randint(0, 2)
            nneg = rng.randint(0, 2)
            pos = sample_atoms(npos)
            neg = [n for n in sample_atoms(nneg) if n not in pos]
            body = pos + [f"not {n}" for n in neg]
            if body:
                lines.append(f"{head} :- {', '.join(body)}.")
            else:
                lines.append(f"{head}.")
        else:
            npos = rng.randint(1, 2)
            nneg = rng.randint(0, 1)
            pos = sample_atoms(npos)
            neg = [n for n in sample_atoms(nneg) if n not in pos]
            body = pos + [f"not {n}" for n in neg]
            lines.append(f":- {', '.join(body)}.")

    if with_minimize:
        nlevels = rng.randint(2, 4)
        levels = rng.sample(range(1, 8), nlevels)
        key = 0
        for level in levels:
            for name in sample_atoms(rng.randint(1, min(3, natoms))):
                key += 1
                weight = rng.randint(1, 4)
                lines.append(f"#minimize {{ {weight}@{level},{key} : {name} }}.")

    return "\n".join(lines) + "\n"


def brute_force_models(gp):
    """All stable models as frozensets of atom ids, via subset enumeration."""
    n = len(gp.atoms)
    out = []
    for size in range(n + 1):
        for subset in combinations(range(n), size):
            if is_stable_model(gp, set(subset)):
                out.append(frozenset(subset))
    return out


def grounded(text):
    return ground(parse_program(text))
