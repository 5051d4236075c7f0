"""Translation between the package domain and the logic engine.

The encoder turns (repo, root specs, installed database) into facts plus
per-directive condition trigger rules, pairs them with the fixed
concretizer program below, and decodes stable models back into concrete
dependency graphs.

Every recipe directive becomes a numbered condition: requirement facts
describe when it applies, imposed-constraint facts describe what it
demands, and a generated trigger rule derives `condition_holds(ID)` from
the conjunction of the requirements.  Installed packages reuse the same
imposition machinery with the opaque hash string as the condition id.

Every integrity constraint in the fixed program carries an `error(...)`
term.  Those atoms are declared as free choices, passed to the solver as
true assumptions, and returned in unsatisfiable cores, which is what
makes diagnostics possible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .logic import Atom, Literal, Program, Rule, parse_program
from .logic.syntax import ChoiceElement, ChoiceSpec
from .repo import InstalledDatabase, Repo, UnknownPackage, possible_dependencies
from .specs import AbstractSpec, SpecNode
from .versions import Version, VersionConstraint


class EncodeError(Exception):
    pass


class UnsatisfiableInput(EncodeError):
    """A root constraint is impossible before any solving happens."""


class UnsupportedSpec(EncodeError):
    pass


class MalformedModel(Exception):
    """The solver returned a model the decoder cannot interpret; a bug."""


FIXED_PROGRAM = """\
% ===== graph membership =====
attr("root", P) :- root(P).
attr("node", P) :- node(P).
attr("node", D) :- attr("depends_on", P, D).
attr("node", Q) :- provider(Q, V).

% dependency conditions activate edges; virtual targets go through providers
attr("depends_on", P, D) :- dependency_condition(ID, P, D), condition_holds(ID), pkg(D).
attr("virtual_node", V) :- dependency_condition(ID, P, V), condition_holds(ID), virtual(V).
attr("depends_on", P, Q) :- dependency_condition(ID, P, V), condition_holds(ID), virtual(V), provider(Q, V).

% transitive paths; cycles are banned
path(A, B) :- attr("depends_on", A, B).
path(A, C) :- path(A, B), attr("depends_on", B, C).
attr("path", A, B) :- path(A, B).
:- path(A, B), path(B, A), error("two packages in the graph depend on each other").

% only known packages may be in the graph, and each must be reachable
:- attr("node", P), not pkg(P), error("a package in the graph is not a known package").
depended_on(D) :- attr("depends_on", P, D).
:- attr("node", P), not root(P), not depended_on(P), error("a requested package cannot be reached from any root").

% a demanded virtual must appear in the graph
:- virtual_required(V), not attr("virtual_node", V), error("a requested virtual package is not in the graph").

% ===== generalized conditions =====
impose(ID) :- condition_holds(ID).
attr(N, A1) :- impose(ID), imposed_constraint(ID, N, A1).
attr(N, A1, A2) :- impose(ID), imposed_constraint(ID, N, A1, A2).
attr(N, A1, A2, A3) :- impose(ID), imposed_constraint(ID, N, A1, A2, A3).

% demands recorded against a virtual apply to its chosen provider
attr("version_satisfies", Q, R) :- attr("version_satisfies", V, R), virtual(V), provider(Q, V).
attr("variant_value", Q, Var, Val) :- attr("variant_value", V, Var, Val), virtual(V), provider(Q, V).
attr("node_compiler_name", Q, C) :- attr("node_compiler_name", V, C), virtual(V), provider(Q, V).
attr("compiler_version_satisfies", Q, C, R) :- attr("compiler_version_satisfies", V, C, R), virtual(V), provider(Q, V).
attr("node_os", Q, O) :- attr("node_os", V, O), virtual(V), provider(Q, V).
attr("node_target", Q, T) :- attr("node_target", V, T), virtual(V), provider(Q, V).

% user demands arrive as plain facts
attr("version_satisfies", P, R) :- version_satisfies(P, R).
attr("variant_value", P, Var, Val) :- variant_set(P, Var, Val).
attr("node_compiler_name", P, C) :- node_compiler_set(P, C).
attr("compiler_version_satisfies", P, C, R) :- compiler_version_satisfies(P, C, R).
attr("node_os", P, O) :- node_os_set(P, O).
attr("node_target", P, T) :- node_target_set(P, T).

% ===== version assignment =====
1 { attr("version", P, V) : version_declared(P, V, W) } 1 :- attr("node", P), pkg(P).
attr("version_satisfies", P, R) :- attr("version", P, V), version_range_member(P, R, V).
:- attr("version_satisfies", P, R), attr("version", P, V), not version_range_member(P, R, V), error("a package version does not satisfy a version constraint").

% ===== compiler assignment =====
1 { attr("node_compiler", P, C, V) : compiler_declared(C, V) } 1 :- attr("node", P), pkg(P).
attr("node_compiler_name", P, C) :- attr("node_compiler", P, C, V).
:- attr("node_compiler_name", P, C), attr("node_compiler", P, C2, V), C != C2, error("a package must use a compiler other than the one chosen for it").
attr("compiler_version_satisfies", P, C, R) :- attr("node_compiler", P, C, V), compiler_version_range_member(C, R, V).
:- attr("compiler_version_satisfies", P, C, R), attr("node_compiler", P, C, V), not compiler_version_range_member(C, R, V), error("a compiler version does not satisfy a compiler version constraint").

% ===== variants =====
1 { attr("variant_value", P, Var, Val) : variant_allowed(P, Var, Val) } 1 :- attr("node", P), variant(P, Var).
:- attr("variant_value", P, Var, Val), pkg(P), not variant(P, Var), error("a variant is set on a package that does not define it").
:- attr("variant_value", P, Var, Val), pkg(P), not variant_allowed(P, Var, Val), error("a variant is set to a value outside its allowed values").

% ===== os and target =====
1 { attr("node_os", P, O) : os_declared(O) } 1 :- attr("node", P), pkg(P).
1 { attr("node_target", P, T) : target_declared(T) } 1 :- attr("node", P), pkg(P).
:- attr("node_os", P, O), pkg(P), not os_declared(O), error("a package is assigned an unknown operating system").
:- attr("node_target", P, T), pkg(P), not target_declared(T), error("a package is assigned an unknown target").
:- attr("node_target", P, T), attr("node_compiler", P, C, V), not compiler_supports_target(C, V, T), error("the chosen compiler cannot generate code for the chosen target").

% ===== virtuals and providers =====
provides_virtual(P, V) :- provides_condition(ID, P, V), condition_holds(ID).
1 { provider(Q, V) : possible_provider(Q, V) } 1 :- attr("virtual_node", V).
:- provider(Q, V), not provides_virtual(Q, V), error("the chosen provider does not provide the virtual package").

% ===== reuse =====
{ attr("hash", P, H) : installed_hash(P, H) } 1 :- attr("node", P), pkg(P).
impose(H) :- attr("hash", P, H).
:- attr("hash", P, H), not installed_hash(P, H), error("a reused hash does not correspond to an installed package").
has_hash(P) :- attr("hash", P, H).
build(P) :- attr("node", P), pkg(P), not has_hash(P).
installed_node(P) :- attr("node", P), has_hash(P).

% ===== conflicts =====
:- conflict_condition(ID, Msg), condition_holds(ID), error(Msg).

% ===== objective helpers =====
deprecated(P) :- attr("version", P, V), deprecated_version(P, V).
version_weight(P, W) :- attr("version", P, V), version_declared(P, V, W).
compiler_weight_used(P, W) :- attr("node_compiler", P, C, V), compiler_weight(C, V, W).
os_weight_used(P, W) :- attr("node_os", P, O), pkg(P), os_weight(O, W).
target_weight_used(P, W) :- attr("node_target", P, T), pkg(P), target_weight(T, W).
compiler_match(P, D) :- attr("depends_on", P, D), attr("node_compiler", P, C, V), attr("node_compiler", D, C, V).
compiler_mismatch(P, D) :- attr("depends_on", P, D), not compiler_match(P, D).
os_match(P, D) :- attr("depends_on", P, D), attr("node_os", P, O), attr("node_os", D, O).
os_mismatch(P, D) :- attr("depends_on", P, D), not os_match(P, D).
target_match(P, D) :- attr("depends_on", P, D), attr("node_target", P, T), attr("node_target", D, T).
target_mismatch(P, D) :- attr("depends_on", P, D), not target_match(P, D).
variant_not_default(P, Var) :- attr("variant_value", P, Var, Val), variant_default(P, Var, D), Val != D.
variant_forced(P, Var) :- variant_set(P, Var, Val).
variant_forced(P, Var) :- impose(ID), imposed_constraint(ID, "variant_value", P, Var, Val).
unused_default(P, Var) :- variant_not_default(P, Var), not variant_forced(P, Var).
provider_use(V, Q, W) :- provider(Q, V), provider_weight(V, Q, W).
provider_root_demand(V) :- dependency_condition(ID, P, V), condition_holds(ID), virtual(V), root(P).
provider_nonroot_demand(V) :- dependency_condition(ID, P, V), condition_holds(ID), virtual(V), not root(P).

% ===== error terms are assumable =====
{ error("two packages in the graph depend on each other") }.
{ error("a package in the graph is not a known package") }.
{ error("a requested package cannot be reached from any root") }.
{ error("a requested virtual package is not in the graph") }.
{ error("a package version does not satisfy a version constraint") }.
{ error("a package must use a compiler other than the one chosen for it") }.
{ error("a compiler version does not satisfy a compiler version constraint") }.
{ error("a variant is set on a package that does not define it") }.
{ error("a variant is set to a value outside its allowed values") }.
{ error("a package is assigned an unknown operating system") }.
{ error("a package is assigned an unknown target") }.
{ error("the chosen compiler cannot generate code for the chosen target") }.
{ error("the chosen provider does not provide the virtual package") }.
{ error("a reused hash does not correspond to an installed package") }.
"""

BUILD_BUCKET_OFFSET = 200
BUILD_COUNT_LEVEL = 100

# (rank, label, weight expr, key terms, body) with {L} for the level and
# {B} for the bucket literal; the bucket subject variable is named in refs
_CRITERIA = (
    (1, "deprecated versions used", "1@{L},P : deprecated(P){B}", "P"),
    (2, "version oldness (roots)", "W@{L},P : version_weight(P, W), root(P){B}", "P"),
    (3, "non-default variant values (roots)", "1@{L},P,Var : variant_not_default(P, Var), root(P){B}", "P"),
    (4, "non-preferred providers (roots)", "W@{L},V,Q : provider_use(V, Q, W), provider_root_demand(V){B}", "Q"),
    (5, "unused default variant values (roots)", "1@{L},P,Var : unused_default(P, Var), root(P){B}", "P"),
    (6, "non-default variant values (non-roots)", "1@{L},P,Var : variant_not_default(P, Var), not root(P){B}", "P"),
    (7, "non-preferred providers (non-roots)", "W@{L},V,Q : provider_use(V, Q, W), provider_nonroot_demand(V){B}", "Q"),
    (8, "compiler mismatches", "1@{L},P,D : compiler_mismatch(P, D){B}", "P"),
    (9, "OS mismatches", "1@{L},P,D : os_mismatch(P, D){B}", "P"),
    (10, "non-preferred OS's", "W@{L},P : os_weight_used(P, W){B}", "P"),
    (11, "version oldness (non-roots)", "W@{L},P : version_weight(P, W), not root(P){B}", "P"),
    (12, "unused default variant values (non-roots)", "1@{L},P,Var : unused_default(P, Var), not root(P){B}", "P"),
    (13, "non-preferred compilers", "W@{L},P : compiler_weight_used(P, W){B}", "P"),
    (14, "target mismatches", "1@{L},P,D : target_mismatch(P, D){B}", "P"),
    (15, "non-preferred targets", "W@{L},P : target_weight_used(P, W){B}", "P"),
)


@dataclass(frozen=True)
class ObjectiveLevelPlan:
    """Ordered optimization criteria; rank 1 is minimized first."""

    criteria: tuple = tuple((rank, label) for rank, label, _, _ in _CRITERIA)

    @classmethod
    def default(cls) -> "ObjectiveLevelPlan":
        return cls()

    @classmethod
    def first(cls, n: int) -> "ObjectiveLevelPlan":
        return cls(tuple((rank, label) for rank, label, _, _ in _CRITERIA[:n]))

    def base_level(self, rank: int) -> int:
        return len(self.criteria) + 1 - rank


def fixed_logic_program() -> str:
    """The embedded concretizer rule text shared by every solve."""
    return FIXED_PROGRAM


def build_objectives(plan: ObjectiveLevelPlan, reuse: bool):
    """Minimize statements for the plan; returns (Program, criterion table).

    Without reuse each criterion sits at its base level.  With reuse every
    criterion is split into a built bucket (base + 200) and an installed
    bucket (base), with the build count between them at level 100.
    """
    by_rank = {rank: (label, template, subject) for rank, label, template, subject in _CRITERIA}
    lines = []
    table = []
    for rank, label in plan.criteria:
        _, template, subject = by_rank[rank]
        base = plan.base_level(rank)
        if reuse:
            built = template.format(L=base + BUILD_BUCKET_OFFSET, B=f", build({subject})")
            kept = template.format(L=base, B=f", installed_node({subject})")
            lines.append(f"#minimize {{ {built} }}.")
            lines.append(f"#minimize {{ {kept} }}.")
            table.append((base + BUILD_BUCKET_OFFSET, f"{label} [build]"))
            table.append((base, f"{label} [installed]"))
        else:
            lines.append(f"#minimize {{ {template.format(L=base, B='')} }}.")
            table.append((base, label))
    if reuse:
        lines.append(f"#minimize {{ 1@{BUILD_COUNT_LEVEL},P : build(P) }}.")
        table.append((BUILD_COUNT_LEVEL, "number of builds"))
    program = parse_program("\n".join(lines) + ("\n" if lines else ""))
    table.sort(key=lambda t: -t[0])
    return program, table


@dataclass
class ConcreteNode:
    id: str
    name: str
    version: str
    variants: dict
    compiler: tuple | None
    os: str
    target: str
    hash: str | None = None

    @property
    def build(self) -> bool:
        return self.hash is None


@dataclass
class ConcreteDAG:
    nodes: list
    edges: list  # list[(from name, to name)]

    def node(self, name: str) -> ConcreteNode:
        for n in self.nodes:
            if n.name == name:
                return n
        raise KeyError(name)

    def children(self, name: str):
        return sorted(d for s, d in self.edges if s == name)


@dataclass
class EncodedProblem:
    facts: Program
    logic_program: str
    objectives: Program
    assumption_atoms: list
    criterion_table: list
    provenance: dict
    plan: ObjectiveLevelPlan
    reuse: bool
    repo: Repo
    roots: list

    def full_program(self) -> Program:
        fixed = parse_program(self.logic_program)
        return Program(self.facts.rules + fixed.rules + self.objectives.rules)

    def facts_text(self) -> str:
        return self.facts.render()


def _fixed_error_atoms() -> list:
    """Ground error atoms of the fixed program, in constraint order."""
    atoms = []
    seen = set()
    for rule in parse_program(FIXED_PROGRAM).rules:
        if rule.kind != "integrity":
            continue
        for item in rule.body:
            if (
                isinstance(item, Literal)
                and item.positive
                and item.atom.pred == "error"
                and item.atom.is_ground()
            ):
                if item.atom not in seen:
                    seen.add(item.atom)
                    atoms.append(item.atom)
    return atoms


class _Encoder:
    def __init__(self, repo: Repo, roots, installed, reuse: bool, plan: ObjectiveLevelPlan):
        self.repo = repo
        self.roots = list(roots)
        self.installed = installed if (reuse and installed is not None) else InstalledDatabase.empty()
        self.reuse = reuse
        self.plan = plan
        self.facts = []
        self.triggers = []
        self.error_choices = []
        self.provenance = {}
        self.next_condition = 0
        self.conflict_messages = []
        self.ranges = {}  # (subject name, canonical range) -> VersionConstraint
        self.compiler_ranges = {}  # (compiler name, canonical range) -> constraint
        self.extra_versions = {}  # package -> ordered installed-only versions
        self.variant_values_in_play = {}  # (package, variant) -> set of values

    # -- small emission helpers --

    def fact(self, pred: str, *args):
        self.facts.append(Rule("fact", Atom(pred, tuple(args))))

    def _register_range(self, subject: str, constraint: VersionConstraint):
        if constraint.is_any():
            return None
        text = constraint.render()
        if self.repo.is_virtual(subject):
            for provider in self.repo.virtuals[subject]:
                self.ranges[(provider, text)] = constraint
        self.ranges[(subject, text)] = constraint
        return text

    def _register_compiler_range(self, compiler: str, constraint: VersionConstraint):
        if constraint.is_any():
            return None
        text = constraint.render()
        self.compiler_ranges[(compiler, text)] = constraint
        return text

    def _note_variant_value(self, package: str, variant: str, value: str):
        self.variant_values_in_play.setdefault((package, variant), set()).add(value)
        if self.repo.is_virtual(package):
            for provider in self.repo.virtuals[package]:
                self.variant_values_in_play.setdefault((provider, variant), set()).add(value)

    # -- requirements and impositions from spec nodes --

    def _constraint_attrs(self, node: SpecNode, subject: str) -> list:
        """attr payloads demanded or observed for `subject`."""
        out = []
        text = self._register_range(subject, node.versions)
        if text is not None:
            out.append(("version_satisfies", subject, text))
        for var in sorted(node.variants):
            value = node.variants[var]
            self._note_variant_value(subject, var, value)
            out.append(("variant_value", subject, var, value))
        if node.compiler:
            out.append(("node_compiler_name", subject, node.compiler))
            ctext = self._register_compiler_range(node.compiler, node.compiler_versions)
            if ctext is not None:
                out.append(("compiler_version_satisfies", subject, node.compiler, ctext))
        if node.os:
            out.append(("node_os", subject, node.os))
        if node.target:
            out.append(("node_target", subject, node.target))
        return out

    def _when_requirements(self, owner: str, when: AbstractSpec | None) -> list:
        reqs = [("node", owner)]
        if when is None:
            return reqs
        if when.root.name not in (None, owner):
            raise EncodeError(
                f"condition on {owner!r} names a different package {when.root.name!r}"
            )
        reqs.extend(self._constraint_attrs(when.root, owner))
        for dep in when.deps:
            if self.repo.is_virtual(dep.name):
                if not dep.is_unconstrained():
                    raise UnsupportedSpec(
                        f"constrained virtual dependency {dep.name!r} in a condition"
                    )
                reqs.append(("virtual_node", dep.name))
            else:
                reqs.append(("path", owner, dep.name))
                reqs.extend(self._constraint_attrs(dep, dep.name))
        return reqs

    # -- conditions --

    def _new_condition(self, package: str, directive: str, description: str) -> int:
        self.next_condition += 1
        cid = self.next_condition
        self.fact("condition", cid)
        self.provenance[cid] = (package, directive, description)
        return cid

    def _emit_requirements(self, cid: int, requirements):
        body = [Literal(Atom("condition", (cid,)))]
        for payload in requirements:
            self.fact("condition_requirement", cid, *payload)
            body.append(Literal(Atom("attr", tuple(payload))))
        self.triggers.append(
            Rule("normal", Atom("condition_holds", (cid,)), tuple(body))
        )

    def _emit_impositions(self, cid, impositions):
        for payload in impositions:
            self.fact("imposed_constraint", cid, *payload)

    def encode_dependency(self, package: str, decl) -> int:
        cid = self._new_condition(package, "depends_on", decl.target.render())
        self._emit_requirements(cid, self._when_requirements(package, decl.when))
        self.fact("dependency_condition", cid, package, decl.target.name)
        self._emit_impositions(cid, self._constraint_attrs(decl.target.root, decl.target.name))
        return cid

    def encode_provides(self, package: str, decl) -> int:
        cid = self._new_condition(package, "provides", decl.virtual)
        self._emit_requirements(cid, self._when_requirements(package, decl.when))
        self.fact("provides_condition", cid, package, decl.virtual)
        self.fact("possible_provider", package, decl.virtual)
        return cid

    def encode_conflict(self, package: str, decl) -> int:
        cid = self._new_condition(package, "conflicts", decl.message)
        requirements = self._when_requirements(package, decl.when)
        if decl.matcher.root.name not in (None, package):
            raise EncodeError(
                f"conflict matcher on {package!r} names {decl.matcher.root.name!r}"
            )
        requirements.extend(self._constraint_attrs(decl.matcher.root, package))
        for dep in decl.matcher.deps:
            requirements.append(("path", package, dep.name))
            requirements.extend(self._constraint_attrs(dep, dep.name))
        self._emit_requirements(cid, requirements)
        self.fact("conflict_condition", cid, decl.message)
        if decl.message not in self.conflict_messages:
            self.conflict_messages.append(decl.message)
        return cid

    # -- root specs --

    def encode_root(self, spec: AbstractSpec):
        name = spec.name
        self.fact("root", name)
        self.fact("node", name)
        self._emit_demand_facts(spec.root, name)
        for dep in spec.deps:
            if self.repo.is_virtual(dep.name):
                self.fact("virtual_required", dep.name)
                self._emit_demand_facts(dep, dep.name)
            else:
                self.fact("node", dep.name)
                self._emit_demand_facts(dep, dep.name)

    def _emit_demand_facts(self, node: SpecNode, subject: str):
        text = self._register_range(subject, node.versions)
        if text is not None:
            self.fact("version_satisfies", subject, text)
        for var in sorted(node.variants):
            value = node.variants[var]
            self._note_variant_value(subject, var, value)
            self.fact("variant_set", subject, var, value)
        if node.compiler:
            self.fact("node_compiler_set", subject, node.compiler)
            ctext = self._register_compiler_range(node.compiler, node.compiler_versions)
            if ctext is not None:
                self.fact("compiler_version_satisfies", subject, node.compiler, ctext)
        if node.os:
            self.fact("node_os_set", subject, node.os)
        if node.target:
            self.fact("node_target_set", subject, node.target)

    # -- installed database --

    def encode_installed(self, packages):
        for hash_id in sorted(self.installed.entries):
            entry = self.installed.entries[hash_id]
            if entry.name not in packages:
                continue
            self.fact("installed_hash", entry.name, hash_id)
            self.provenance[hash_id] = (entry.name, "installed", hash_id)
            impositions = [
                ("node", entry.name),
                ("version", entry.name, entry.version),
                ("node_os", entry.name, entry.os),
                ("node_target", entry.name, entry.target),
            ]
            if entry.compiler is not None:
                impositions.append(
                    ("node_compiler", entry.name, entry.compiler[0], entry.compiler[1])
                )
            for var, value in entry.variants:
                self._note_variant_value(entry.name, var, value)
                impositions.append(("variant_value", entry.name, var, value))
            for dep_name, dep_hash in entry.dependencies:
                impositions.append(("depends_on", entry.name, dep_name))
                impositions.append(("hash", dep_name, dep_hash))
            self._emit_impositions(hash_id, impositions)
            recipe = self.repo.recipes.get(entry.name)
            if recipe is not None:
                declared = set(recipe.declared_version_strings())
                if entry.version not in declared:
                    extras = self.extra_versions.setdefault(entry.name, [])
                    if entry.version not in extras:
                        extras.append(entry.version)

    # -- per-package facts --

    def encode_package(self, name: str):
        recipe = self.repo.recipes[name]
        self.fact("pkg", name)
        declared = recipe.declared_version_strings()
        for weight, dv in enumerate(recipe.versions):
            self.fact("version_declared", name, str(dv.version), weight)
            if dv.deprecated:
                self.fact("deprecated_version", name, str(dv.version))
        extras = sorted(self.extra_versions.get(name, ()), key=Version, reverse=True)
        for offset, vtext in enumerate(extras):
            self.fact("version_declared", name, vtext, len(declared) + offset)
        for variant in recipe.variants:
            self.fact("variant", name, variant.name)
            self.fact("variant_default", name, variant.name, variant.default)
            values = set(variant.values or ())
            values.add(variant.default)
            values |= self.variant_values_in_play.get((name, variant.name), set())
            for value in sorted(values):
                self.fact("variant_allowed", name, variant.name, value)
        for decl in recipe.depends:
            self.encode_dependency(name, decl)
        for decl in recipe.conflicts:
            self.encode_conflict(name, decl)
        for decl in recipe.provides:
            self.encode_provides(name, decl)

    # -- config facts --

    def encode_config(self, packages):
        config = self.repo.config
        for tname, weight in config.targets:
            self.fact("target_declared", tname)
            self.fact("target_weight", tname, weight)
        for oname, weight in config.oses:
            self.fact("os_declared", oname)
            self.fact("os_weight", oname, weight)

        def compiler_key(c):
            try:
                pref = config.preferred_compilers.index(c.name)
            except ValueError:
                pref = len(config.preferred_compilers)
            return (pref, c.name, _Descending(c.version))

        for weight, comp in enumerate(sorted(config.compilers, key=compiler_key)):
            self.fact("compiler_declared", comp.name, str(comp.version))
            self.fact("compiler_weight", comp.name, str(comp.version), weight)
            for tname in sorted(comp.targets):
                self.fact("compiler_supports_target", comp.name, str(comp.version), tname)

        for virtual in sorted(self.repo.virtuals):
            providers = [p for p in self.repo.virtuals[virtual] if p in packages]
            preferred = config.preferred_providers.get(virtual, [])

            def provider_key(p):
                try:
                    return (preferred.index(p), p)
                except ValueError:
                    return (len(preferred), p)

            for weight, provider in enumerate(sorted(providers, key=provider_key)):
                self.fact("provider_weight", virtual, provider, weight)

    def emit_membership_facts(self):
        for (subject, text), constraint in sorted(self.ranges.items()):
            recipe = self.repo.recipes.get(subject)
            if recipe is None:
                continue
            versions = recipe.declared_version_strings() + list(
                self.extra_versions.get(subject, ())
            )
            for vtext in versions:
                if constraint.satisfies(Version(vtext)):
                    self.fact("version_range_member", subject, text, vtext)
        for (cname, text), constraint in sorted(self.compiler_ranges.items()):
            for comp in self.repo.config.compilers:
                if comp.name == cname and constraint.satisfies(comp.version):
                    self.fact("compiler_version_range_member", cname, text, str(comp.version))

    # -- assembly --

    def run(self) -> EncodedProblem:
        seeds = []
        for spec in self.roots:
            if spec.name is None or spec.name not in self.repo.recipes:
                raise UnknownPackage(spec.name or "(anonymous)")
            seeds.append(spec.name)
            for dep in spec.deps:
                if dep.name in self.repo.recipes or self.repo.is_virtual(dep.name):
                    seeds.append(dep.name)
                else:
                    raise UnknownPackage(dep.name)
        packages = possible_dependencies(self.repo, seeds)
        self.encode_installed(packages)
        self._check_declared_versions()

        virtuals = set()
        for name in packages:
            for decl in self.repo.recipes[name].depends:
                if self.repo.is_virtual(decl.target.name):
                    virtuals.add(decl.target.name)
        for spec in self.roots:
            for dep in spec.deps:
                if self.repo.is_virtual(dep.name):
                    virtuals.add(dep.name)
        for virtual in sorted(virtuals):
            self.fact("virtual", virtual)

        for spec in self.roots:
            self.encode_root(spec)
        for name in sorted(packages):
            self.encode_package(name)
        self.encode_config(packages)
        self.emit_membership_facts()

        objectives, table = build_objectives(self.plan, self.reuse)
        assumption_atoms = list(_fixed_error_atoms())
        for message in sorted(self.conflict_messages):
            atom = Atom("error", (message,))
            assumption_atoms.append(atom)
            self.error_choices.append(
                Rule("choice", ChoiceSpec((ChoiceElement(atom),)))
            )

        fact_rules = sorted(self.facts, key=lambda r: (r.head.pred, r.render()))
        program = Program(fact_rules + self.error_choices + self.triggers)
        return EncodedProblem(
            facts=program,
            logic_program=FIXED_PROGRAM,
            objectives=objectives,
            assumption_atoms=assumption_atoms,
            criterion_table=table,
            provenance=self.provenance,
            plan=self.plan,
            reuse=self.reuse,
            repo=self.repo,
            roots=self.roots,
        )

    def _check_declared_versions(self):
        for spec in self.roots:
            nodes = [spec.root] + list(spec.deps)
            for node in nodes:
                if node.name is None or node.name not in self.repo.recipes:
                    continue
                if node.versions.is_any():
                    continue
                recipe = self.repo.recipes[node.name]
                versions = recipe.declared_version_strings() + list(
                    self.extra_versions.get(node.name, ())
                )
                if not any(node.versions.satisfies(Version(v)) for v in versions):
                    raise UnsatisfiableInput(
                        f"no declared version of {node.name!r} satisfies "
                        f"@{node.versions.render()}"
                    )


class _Descending:
    """Sort adapter inverting the order of its wrapped value."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __lt__(self, other):
        return other.value < self.value

    def __eq__(self, other):
        return self.value == other.value


def encode_problem(
    repo: Repo,
    roots,
    installed: InstalledDatabase | None = None,
    *,
    reuse: bool = False,
    plan: ObjectiveLevelPlan | None = None,
) -> EncodedProblem:
    """Encode a concretization problem into facts plus the fixed program."""
    return _Encoder(repo, roots, installed, reuse, plan or ObjectiveLevelPlan.default()).run()


def encode_conflict(repo: Repo, package: str, decl):
    """Condition facts for one conflict directive (exposed for tests)."""
    enc = _Encoder(repo, [], None, False, ObjectiveLevelPlan.default())
    enc.encode_conflict(package, decl)
    return Program(sorted(enc.facts, key=lambda r: r.render()) + enc.triggers)


# ---- decoding ----


def _model_attr_index(model):
    index = {}
    for atom in model.atoms:
        if atom.pred == "attr" and atom.args:
            index.setdefault(atom.args[0], []).append(atom.args[1:])
    return index


def decode_model(model, problem: EncodedProblem) -> ConcreteDAG:
    """Read a stable model back into a concrete dependency DAG."""
    attrs = _model_attr_index(model)
    package_names = {
        args[0] for args in attrs.get("node", []) if args[0] in problem.repo.recipes
    }

    def one(kind: str, name: str, arity: int):
        found = [a for a in attrs.get(kind, []) if a[0] == name and len(a) == arity]
        if len(found) != 1:
            raise MalformedModel(
                f"expected exactly one {kind} for {name}, found {len(found)}"
            )
        return found[0]

    nodes = []
    for name in sorted(package_names):
        recipe = problem.repo.recipes[name]
        version = one("version", name, 2)[1]
        variants = {}
        for args in attrs.get("variant_value", []):
            if len(args) == 3 and args[0] == name:
                if args[1] in variants and variants[args[1]] != args[2]:
                    raise MalformedModel(f"variant {args[1]} of {name} has two values")
                variants[args[1]] = args[2]
        for decl in recipe.variants:
            if decl.name not in variants:
                raise MalformedModel(f"variant {decl.name} of {name} is unassigned")
        compiler_args = one("node_compiler", name, 3)
        os_name = one("node_os", name, 2)[1]
        target = one("node_target", name, 2)[1]
        hashes = [a[1] for a in attrs.get("hash", []) if a[0] == name]
        if len(hashes) > 1:
            raise MalformedModel(f"{name} carries {len(hashes)} hashes")
        nodes.append(
            ConcreteNode(
                id=name,
                name=name,
                version=version,
                variants={k: variants[k] for k in sorted(variants) if k in {v.name for v in recipe.variants}},
                compiler=(compiler_args[1], compiler_args[2]),
                os=os_name,
                target=target,
                hash=hashes[0] if hashes else None,
            )
        )

    edges = sorted(
        {
            (args[0], args[1])
            for args in attrs.get("depends_on", [])
            if args[0] in package_names and args[1] in package_names
        }
    )
    return ConcreteDAG(nodes, edges)


# ---- validity ----


def _reachable(dag: ConcreteDAG, start: str) -> set:
    out = {start}
    frontier = [start]
    children = {}
    for s, d in dag.edges:
        children.setdefault(s, []).append(d)
    while frontier:
        for nxt in children.get(frontier.pop(), ()):
            if nxt not in out:
                out.add(nxt)
                frontier.append(nxt)
    return out


def _node_meets(node: ConcreteNode, constraint: SpecNode) -> bool:
    if constraint.name is not None and constraint.name != node.name:
        return False
    if not constraint.versions.is_any() and not constraint.versions.satisfies(
        Version(node.version)
    ):
        return False
    for var, value in constraint.variants.items():
        if node.variants.get(var) != value:
            return False
    if constraint.compiler is not None:
        if node.compiler is None or node.compiler[0] != constraint.compiler:
            return False
        if not constraint.compiler_versions.is_any() and not constraint.compiler_versions.satisfies(Version(node.compiler[1])):
            return False
    if constraint.os is not None and node.os != constraint.os:
        return False
    if constraint.target is not None and node.target != constraint.target:
        return False
    return True


def _when_holds(dag: ConcreteDAG, node: ConcreteNode, when: AbstractSpec | None, repo: Repo) -> bool:
    if when is None:
        return True
    if not _node_meets(node, when.root):
        return False
    reach = _reachable(dag, node.name)
    for dep in when.deps:
        if repo.is_virtual(dep.name):
            if not any(
                p in reach and p != node.name for p in repo.virtuals[dep.name]
            ):
                return False
        else:
            if dep.name not in reach or dep.name == node.name:
                return False
            if not _node_meets(dag.node(dep.name), dep):
                return False
    return True


def validity_errors(dag: ConcreteDAG, problem: EncodedProblem) -> list:
    """The four validity clauses plus acyclicity; empty list means valid."""
    repo = problem.repo
    errors = []

    # acyclic
    indegree = {n.name: 0 for n in dag.nodes}
    for _, d in dag.edges:
        indegree[d] += 1
    queue = [n for n, deg in sorted(indegree.items()) if deg == 0]
    seen = 0
    while queue:
        name = queue.pop()
        seen += 1
        for s, d in dag.edges:
            if s == name:
                indegree[d] -= 1
                if indegree[d] == 0:
                    queue.append(d)
    if seen != len(dag.nodes):
        errors.append("dependency graph contains a cycle")

    # all virtuals replaced
    for node in dag.nodes:
        if repo.is_virtual(node.name) and node.name not in repo.recipes:
            errors.append(f"virtual {node.name} appears as a node")

    # all dependencies resolved
    for node in dag.nodes:
        recipe = repo.recipes.get(node.name)
        if recipe is None:
            errors.append(f"{node.name} is not a known package")
            continue
        children = set(dag.children(node.name))
        for decl in recipe.depends:
            if not _when_holds(dag, node, decl.when, repo):
                continue
            target = decl.target.name
            if repo.is_virtual(target):
                providers = set(repo.virtuals[target]) & children
                anonymous = replace(decl.target.root, name=None)
                if not providers:
                    errors.append(f"{node.name} is missing a provider for {target}")
                elif not any(_node_meets(dag.node(p), anonymous) for p in providers):
                    errors.append(
                        f"{node.name} provider for {target} violates {decl.target.render()}"
                    )
            elif target not in children:
                errors.append(f"{node.name} is missing dependency {target}")
            elif not _node_meets(dag.node(target), decl.target.root):
                errors.append(
                    f"{node.name} dependency {target} violates {decl.target.render()}"
                )

    # all node parameters assigned
    for node in dag.nodes:
        recipe = repo.recipes.get(node.name)
        if recipe is None:
            continue
        if not node.version or node.compiler is None or not node.os or not node.target:
            errors.append(f"{node.name} has unassigned parameters")
        for decl in recipe.variants:
            if decl.name not in node.variants:
                errors.append(f"{node.name} variant {decl.name} unassigned")

    # all input constraints satisfied
    for spec in problem.roots:
        try:
            root_node = dag.node(spec.name)
        except KeyError:
            errors.append(f"root {spec.name} missing from solution")
            continue
        if not _node_meets(root_node, spec.root):
            errors.append(f"root {spec.name} violates {spec.root.render()}")
        reach = _reachable(dag, spec.name)
        for dep in spec.deps:
            if repo.is_virtual(dep.name):
                if not any(p in reach for p in repo.virtuals[dep.name]):
                    errors.append(f"requested virtual {dep.name} not in solution")
            elif dep.name not in reach:
                errors.append(f"requested dependency {dep.name} not in solution")
            elif not _node_meets(dag.node(dep.name), dep):
                errors.append(f"requested dependency {dep.name} violates {dep.render()}")
    return errors
