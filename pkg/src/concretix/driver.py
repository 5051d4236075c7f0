"""Pipeline orchestration: encode, ground, solve, decode, explain, render.

The solve runs in four timed phases.  Setup generates the problem facts,
load parses the fixed rule text, ground instantiates the combined
program, and solve covers the stable-model search, optimization, decoding,
and (on failure) core minimization.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from . import diagnostics
from .diagnostics import Diagnostic
from .encode import (
    ConcreteDAG,
    ConcreteNode,
    EncodedProblem,
    ObjectiveLevelPlan,
    decode_model,
    encode_problem,
    validity_errors,
)
from .logic import Program, SolveLimits, StableModelEngine, ground
from .repo import InstalledDatabase, Repo
from .specs import AbstractSpec, parse_spec


@dataclass
class PhaseTimings:
    setup_ms: float = 0.0
    load_ms: float = 0.0
    ground_ms: float = 0.0
    solve_ms: float = 0.0

    @property
    def total_ms(self) -> float:
        return self.setup_ms + self.load_ms + self.ground_ms + self.solve_ms

    def render(self) -> str:
        return (
            f"setup {self.setup_ms:.1f} ms, load {self.load_ms:.1f} ms, "
            f"ground {self.ground_ms:.1f} ms, solve {self.solve_ms:.1f} ms, "
            f"total {self.total_ms:.1f} ms"
        )


@dataclass
class SolveOptions:
    reuse: bool = False
    seed: int = 0
    budget: float | None = None
    core_strategy: str = "linear"
    output_format: str = "tree"
    plan: ObjectiveLevelPlan | None = None

    def __post_init__(self):
        if self.budget is not None and self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.core_strategy not in ("linear", "batched"):
            raise ValueError(f"unknown core strategy {self.core_strategy!r}")


class SolveHandle:
    """Re-solve hook handed to core minimization."""

    def __init__(self, engine: StableModelEngine, limits: SolveLimits):
        self.engine = engine
        self.limits = limits

    def solve_assuming(self, atoms):
        return self.engine.solve(atoms, limits=self.limits, optimize=False)


@dataclass
class ConcretizationResult:
    dag: ConcreteDAG | None
    diagnostic: Diagnostic | None
    timings: PhaseTimings
    problem: EncodedProblem
    objective=None

    @property
    def satisfiable(self) -> bool:
        return self.dag is not None


def concretize(
    repo: Repo,
    specs,
    installed: InstalledDatabase | None = None,
    options: SolveOptions | None = None,
) -> ConcretizationResult:
    """Solve abstract specs against a repository.

    `specs` may contain AbstractSpec values or spec strings.
    """
    options = options or SolveOptions()
    roots = [s if isinstance(s, AbstractSpec) else parse_spec(s) for s in specs]
    timings = PhaseTimings()

    start = time.monotonic()
    problem = encode_problem(
        repo, roots, installed, reuse=options.reuse, plan=options.plan
    )
    timings.setup_ms = (time.monotonic() - start) * 1000

    start = time.monotonic()
    from .logic import parse_program

    fixed = parse_program(problem.logic_program)
    program = Program(problem.facts.rules + fixed.rules + problem.objectives.rules)
    timings.load_ms = (time.monotonic() - start) * 1000

    start = time.monotonic()
    gp = ground(program)
    timings.ground_ms = (time.monotonic() - start) * 1000

    start = time.monotonic()
    limits = SolveLimits(seed=options.seed, budget=options.budget)
    engine = StableModelEngine(gp)
    result = engine.solve(problem.assumption_atoms, limits=limits)
    if result.satisfiable:
        dag = decode_model(result.model, problem)
        timings.solve_ms = (time.monotonic() - start) * 1000
        out = ConcretizationResult(dag, None, timings, problem)
        out.objective = result.model.objective
        return out
    handle = SolveHandle(engine, limits)
    diagnostic = diagnostics.explain(handle, result, options.core_strategy)
    timings.solve_ms = (time.monotonic() - start) * 1000
    return ConcretizationResult(None, diagnostic, timings, problem)


def check_validity(result: ConcretizationResult) -> list:
    if result.dag is None:
        return []
    return validity_errors(result.dag, result.problem)


# ---- output formats ----


def render_tree(dag: ConcreteDAG, problem: EncodedProblem | None = None) -> str:
    """Root-first indented tree, one line per package.

    Only non-default variant values and values named in the input are
    annotated; reused nodes carry a short hash and an `[installed]` mark.
    """
    repo = problem.repo if problem is not None else None
    roots = [s.name for s in problem.roots] if problem is not None else []
    named = _input_named_variants(problem) if problem is not None else set()

    def annotate(node: ConcreteNode) -> str:
        text = f"{node.name}@{node.version}"
        shown = []
        for var in sorted(node.variants):
            value = node.variants[var]
            default = None
            if repo is not None and node.name in repo.recipes:
                decl = repo.recipes[node.name].variant(var)
                default = decl.default if decl else None
            if value != default or (node.name, var) in named:
                shown.append((var, value))
        for var, value in shown:
            if value == "true":
                text += f"+{var}"
            elif value == "false":
                text += f"~{var}"
            else:
                text += f" {var}={value}"
        if node.hash is not None:
            text += f" [installed] {node.hash[:7]}"
        return text

    ordered = []
    seen = set()
    for root in roots:
        if root in seen:
            continue
        ordered.append((0, root))
        seen.add(root)
        for name in sorted(n.name for n in dag.nodes if n.name != root):
            if name not in seen:
                ordered.append((1, name))
                seen.add(name)
    if not ordered:
        ordered = [(0, n.name) for n in dag.nodes]
    lines = []
    for depth, name in ordered:
        prefix = "  ^" if depth else ""
        lines.append(prefix + annotate(dag.node(name)))
    return "\n".join(lines)


def _input_named_variants(problem: EncodedProblem) -> set:
    named = set()
    for spec in problem.roots:
        for node in [spec.root] + list(spec.deps):
            if node.name:
                for var in node.variants:
                    named.add((node.name, var))
    return named


def render_json(dag: ConcreteDAG) -> str:
    doc = {
        "nodes": [
            {
                "id": n.id,
                "name": n.name,
                "version": n.version,
                "variants": dict(sorted(n.variants.items())),
                "compiler": {"name": n.compiler[0], "version": n.compiler[1]}
                if n.compiler
                else None,
                "os": n.os,
                "target": n.target,
                "hash": n.hash,
                "build": n.build,
            }
            for n in sorted(dag.nodes, key=lambda n: n.name)
        ],
        "edges": [{"from": s, "to": d} for s, d in sorted(dag.edges)],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def dag_from_json(text: str) -> ConcreteDAG:
    doc = json.loads(text)
    nodes = [
        ConcreteNode(
            id=n["id"],
            name=n["name"],
            version=n["version"],
            variants=dict(n.get("variants") or {}),
            compiler=(n["compiler"]["name"], n["compiler"]["version"])
            if n.get("compiler")
            else None,
            os=n["os"],
            target=n["target"],
            hash=n.get("hash"),
        )
        for n in doc["nodes"]
    ]
    edges = [(e["from"], e["to"]) for e in doc["edges"]]
    return ConcreteDAG(sorted(nodes, key=lambda n: n.name), sorted(edges))


def render_facts(problem: EncodedProblem) -> str:
    """The generated facts followed by the fixed program and objectives."""
    return (
        problem.facts.render()
        + "\n"
        + problem.logic_program
        + "\n"
        + problem.objectives.render()
    )
