"""Declarative package repository, platform config, and installed database.

A repository directory holds one `<name>.pkg` YAML document per package
plus a `config` YAML document.  Recipe keys:

    name: example
    versions:                 # newest first; strings or {version, deprecated}
      - 1.1.0
      - {version: 1.0.0, deprecated: true}
    variants:
      - {name: bzip, default: true}
      - {name: threads, default: none, values: [none, openmp]}
    depends:
      - {spec: "bzip2@1.0.7:", when: "+bzip"}
      - {spec: zlib}
    conflicts:
      - {matcher: "target=aarch64", when: "@1.0.0", message: "known failure"}
    provides:
      - {virtual: mpi, when: "@2:"}

The config document carries `compilers`, `targets`, `os`, and
`preferences` (preferred providers per virtual and a preferred compiler
order).  The installed database is a JSON document mapping opaque hash
ids to fully concrete node records whose dependency hashes must resolve
within the same database.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .specs import AbstractSpec, parse_spec
from .versions import Version


class RepoError(Exception):
    pass


class RepoParseError(RepoError):
    def __init__(self, path, detail):
        super().__init__(f"{path}: {detail}")
        self.path = str(path)
        self.detail = detail


class EmptyRepo(RepoError):
    def __init__(self, path):
        super().__init__(f"no package recipes found in {path}")


class UnknownDependency(RepoError):
    def __init__(self, package, target):
        super().__init__(f"package {package!r} depends on unknown {target!r}")
        self.package = package
        self.target = target


class NoProviderForVirtual(RepoError):
    def __init__(self, virtual):
        super().__init__(f"virtual package {virtual!r} has no providers")
        self.virtual = virtual


class UnknownPackage(RepoError):
    def __init__(self, name):
        super().__init__(f"unknown package {name!r}")
        self.name = name


class DanglingHash(RepoError):
    def __init__(self, hash_id, dep_hash):
        super().__init__(f"installed entry {hash_id!r} references missing hash {dep_hash!r}")
        self.hash_id = hash_id
        self.dep_hash = dep_hash


@dataclass(frozen=True)
class DeclaredVersion:
    version: Version
    deprecated: bool = False


@dataclass(frozen=True)
class VariantDecl:
    name: str
    default: str
    values: tuple | None = None  # None means any value seen in constraints


@dataclass(frozen=True)
class DependencyDecl:
    target: AbstractSpec
    when: AbstractSpec | None = None


@dataclass(frozen=True)
class ConflictDecl:
    matcher: AbstractSpec
    when: AbstractSpec | None
    message: str


@dataclass(frozen=True)
class ProvidesDecl:
    virtual: str
    when: AbstractSpec | None = None


@dataclass
class PackageRecipe:
    name: str
    versions: list  # list[DeclaredVersion], strictly descending
    variants: list = field(default_factory=list)
    depends: list = field(default_factory=list)
    conflicts: list = field(default_factory=list)
    provides: list = field(default_factory=list)

    def variant(self, name: str):
        for v in self.variants:
            if v.name == name:
                return v
        return None

    def declared_version_strings(self):
        return [str(v.version) for v in self.versions]


@dataclass(frozen=True)
class CompilerDecl:
    name: str
    version: Version
    targets: tuple  # supported target names


@dataclass
class RepoConfig:
    compilers: list = field(default_factory=list)
    targets: list = field(default_factory=list)  # list[(name, weight)]
    oses: list = field(default_factory=list)  # list[(name, weight)]
    preferred_providers: dict = field(default_factory=dict)
    preferred_compilers: list = field(default_factory=list)

    def target_names(self):
        return [name for name, _ in self.targets]

    def os_names(self):
        return [name for name, _ in self.oses]


@dataclass(frozen=True)
class InstalledEntry:
    hash_id: str
    name: str
    version: str
    variants: tuple  # tuple[(variant, value)]
    compiler: tuple | None  # (name, version)
    os: str
    target: str
    dependencies: tuple  # tuple[(dep name, dep hash)]


@dataclass
class InstalledDatabase:
    entries: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def empty(cls):
        return cls({})


@dataclass
class Repo:
    path: str
    recipes: dict  # name -> PackageRecipe
    virtuals: dict  # virtual name -> sorted provider names
    config: RepoConfig

    def recipe(self, name: str) -> PackageRecipe:
        try:
            return self.recipes[name]
        except KeyError:
            raise UnknownPackage(name) from None

    def is_virtual(self, name: str) -> bool:
        return name in self.virtuals


def _parse_when(raw, path) -> AbstractSpec | None:
    if raw is None:
        return None
    try:
        return parse_spec(str(raw))
    except Exception as exc:
        raise RepoParseError(path, f"bad when spec {raw!r}: {exc}") from None


def _parse_target_spec(raw, path) -> AbstractSpec:
    try:
        return parse_spec(str(raw))
    except Exception as exc:
        raise RepoParseError(path, f"bad spec {raw!r}: {exc}") from None


def _as_value_string(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _load_recipe(path: Path) -> PackageRecipe:
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise RepoParseError(path, f"invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise RepoParseError(path, "recipe document must be a mapping")
    name = doc.get("name")
    if not name:
        raise RepoParseError(path, "missing 'name'")
    if name != path.stem:
        raise RepoParseError(path, f"recipe name {name!r} does not match filename")

    raw_versions = doc.get("versions") or []
    if not raw_versions:
        raise RepoParseError(path, "recipe must declare at least one version")
    versions = []
    for item in raw_versions:
        if isinstance(item, dict):
            versions.append(
                DeclaredVersion(
                    Version(_as_value_string(item.get("version"))),
                    bool(item.get("deprecated", False)),
                )
            )
        else:
            versions.append(DeclaredVersion(Version(_as_value_string(item))))
    for earlier, later in zip(versions, versions[1:]):
        if not later.version < earlier.version:
            raise RepoParseError(
                path, f"versions must be strictly descending near {later.version}"
            )

    variants = []
    seen_variants = set()
    for item in doc.get("variants") or []:
        if not isinstance(item, dict) or "name" not in item:
            raise RepoParseError(path, f"bad variant entry {item!r}")
        vname = str(item["name"])
        if vname in seen_variants:
            raise RepoParseError(path, f"duplicate variant {vname!r}")
        seen_variants.add(vname)
        default = _as_value_string(item.get("default", "false"))
        values = item.get("values")
        if values is not None:
            values = tuple(_as_value_string(v) for v in values)
            if default not in values:
                raise RepoParseError(
                    path, f"default {default!r} of variant {vname!r} not in values"
                )
        elif default in ("true", "false"):
            values = ("true", "false")
        variants.append(VariantDecl(vname, default, values))

    depends = []
    for item in doc.get("depends") or []:
        if isinstance(item, str):
            item = {"spec": item}
        if "spec" not in item:
            raise RepoParseError(path, f"dependency entry missing 'spec': {item!r}")
        target = _parse_target_spec(item["spec"], path)
        if target.deps:
            raise RepoParseError(
                path, f"dependency spec {item['spec']!r} may not itself use '^'"
            )
        if target.name == name:
            raise RepoParseError(path, "package cannot depend on itself")
        depends.append(DependencyDecl(target, _parse_when(item.get("when"), path)))

    conflicts = []
    for item in doc.get("conflicts") or []:
        if isinstance(item, str):
            item = {"matcher": item}
        if "matcher" not in item:
            raise RepoParseError(path, f"conflict entry missing 'matcher': {item!r}")
        matcher = _parse_target_spec(item["matcher"], path)
        message = str(
            item.get("message") or f"{name}: conflicts with {item['matcher']}"
        )
        conflicts.append(
            ConflictDecl(matcher, _parse_when(item.get("when"), path), message)
        )

    provides = []
    for item in doc.get("provides") or []:
        if isinstance(item, str):
            item = {"virtual": item}
        if "virtual" not in item:
            raise RepoParseError(path, f"provides entry missing 'virtual': {item!r}")
        provides.append(
            ProvidesDecl(str(item["virtual"]), _parse_when(item.get("when"), path))
        )

    return PackageRecipe(name, versions, variants, depends, conflicts, provides)


def _load_config(path: Path) -> RepoConfig:
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise RepoParseError(path, f"invalid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise RepoParseError(path, "config document must be a mapping")

    targets = []
    for item in doc.get("targets") or []:
        targets.append((str(item["name"]), int(item.get("weight", len(targets)))))
    if not targets:
        targets = [("generic", 0)]
    target_names = {name for name, _ in targets}
    if len(target_names) != len(targets):
        raise RepoParseError(path, "duplicate target names")

    oses = []
    for item in doc.get("os") or []:
        oses.append((str(item["name"]), int(item.get("weight", len(oses)))))
    if not oses:
        oses = [("anyos", 0)]

    compilers = []
    for item in doc.get("compilers") or []:
        supported = tuple(str(t) for t in item.get("targets") or target_names)
        for t in supported:
            if t not in target_names:
                raise RepoParseError(
                    path, f"compiler {item.get('name')}: unknown target {t!r}"
                )
        compilers.append(
            CompilerDecl(str(item["name"]), Version(_as_value_string(item["version"])), supported)
        )
    if not compilers:
        compilers = [CompilerDecl("cc", Version("1.0"), tuple(sorted(target_names)))]

    prefs = doc.get("preferences") or {}
    preferred_providers = {
        str(v): [str(p) for p in providers]
        for v, providers in (prefs.get("providers") or {}).items()
    }
    preferred_compilers = [str(c) for c in prefs.get("compilers") or []]
    return RepoConfig(compilers, targets, oses, preferred_providers, preferred_compilers)


def load_repo(path) -> Repo:
    """Load and validate a repository directory."""
    root = Path(path)
    if not root.is_dir():
        raise RepoParseError(root, "not a directory")
    recipe_paths = sorted(root.glob("*.pkg"))
    if not recipe_paths:
        raise EmptyRepo(root)
    recipes = {}
    for rp in recipe_paths:
        recipe = _load_recipe(rp)
        recipes[recipe.name] = recipe

    config_path = root / "config"
    config = _load_config(config_path) if config_path.exists() else RepoConfig(
        [CompilerDecl("cc", Version("1.0"), ("generic",))],
        [("generic", 0)],
        [("anyos", 0)],
        {},
        [],
    )

    virtuals: dict = {}
    for recipe in recipes.values():
        for prov in recipe.provides:
            virtuals.setdefault(prov.virtual, set()).add(recipe.name)
    virtuals = {v: sorted(ps) for v, ps in virtuals.items()}

    for virtual, providers in virtuals.items():
        if not providers:
            raise NoProviderForVirtual(virtual)
    for recipe in recipes.values():
        for dep in recipe.depends:
            target = dep.target.name
            if target in recipes or target in virtuals:
                continue
            if target in config.preferred_providers:
                raise NoProviderForVirtual(target)
            raise UnknownDependency(recipe.name, target)

    return Repo(str(root), recipes, virtuals, config)


def load_installed(path) -> InstalledDatabase:
    """Load the installed-package database and validate hash closure."""
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise RepoParseError(p, f"invalid JSON: {exc}") from None
    raw_entries = doc.get("entries", doc) if isinstance(doc, dict) else None
    if raw_entries is None:
        raise RepoParseError(p, "database document must be a mapping")
    entries = {}
    for hash_id, rec in raw_entries.items():
        compiler = rec.get("compiler")
        if compiler is not None:
            compiler = (str(compiler[0]), str(compiler[1]))
        entries[str(hash_id)] = InstalledEntry(
            hash_id=str(hash_id),
            name=str(rec["name"]),
            version=str(rec["version"]),
            variants=tuple(sorted((str(k), _as_value_string(v)) for k, v in (rec.get("variants") or {}).items())),
            compiler=compiler,
            os=str(rec.get("os", "anyos")),
            target=str(rec.get("target", "generic")),
            dependencies=tuple(sorted((str(k), str(v)) for k, v in (rec.get("dependencies") or {}).items())),
        )
    for entry in entries.values():
        for _, dep_hash in entry.dependencies:
            if dep_hash not in entries:
                raise DanglingHash(entry.hash_id, dep_hash)
    return InstalledDatabase(entries)


def possible_dependencies(repo: Repo, roots) -> set:
    """Transitive over-approximation of packages a solve may involve.

    Conditions on dependencies are ignored and every provider of a virtual
    is included.  Roots may be package or virtual names.
    """
    queue = []
    for root in roots:
        if repo.is_virtual(root):
            queue.extend(repo.virtuals[root])
        elif root in repo.recipes:
            queue.append(root)
        else:
            raise UnknownPackage(root)
    seen = set()
    while queue:
        name = queue.pop()
        if name in seen:
            continue
        seen.add(name)
        for dep in repo.recipes[name].depends:
            target = dep.target.name
            if repo.is_virtual(target):
                queue.extend(repo.virtuals[target])
            elif target in repo.recipes:
                queue.append(target)
    return seen


def validate_repo(repo: Repo) -> list:
    """Non-fatal consistency warnings."""
    warnings = []
    for name in sorted(repo.recipes):
        recipe = repo.recipes[name]
        if recipe.versions and all(v.deprecated for v in recipe.versions):
            warnings.append(f"{name}: every declared version is deprecated")
        declared = {v.name for v in recipe.variants}
        for conflict in recipe.conflicts:
            for spec in filter(None, (conflict.matcher, conflict.when)):
                for variant in spec.root.variants:
                    if variant not in declared:
                        warnings.append(
                            f"{name}: conflict references unknown variant {variant!r}"
                        )
        for dep in recipe.depends:
            if dep.when is not None:
                for variant in dep.when.root.variants:
                    if variant not in declared:
                        warnings.append(
                            f"{name}: dependency condition references unknown variant {variant!r}"
                        )
            target = dep.target.name
            if target in repo.recipes:
                target_variants = {v.name for v in repo.recipes[target].variants}
                for variant in dep.target.root.variants:
                    if variant not in target_variants:
                        warnings.append(
                            f"{name}: dependency on {target} sets unknown variant {variant!r}"
                        )
    return warnings
