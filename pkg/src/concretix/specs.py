"""The abstract-spec constraint language.

A spec names a package and constrains any subset of its build parameters:

    hdf5@1.10.2 +mpi~shared api=v112 %gcc@10.3.1 os=ubuntu22 target=skylake ^zlib@1.2.8:

Sigils: @ version constraint, % compiler (with optional @ version), + / ~
boolean variant toggles, key=value variants (the keys `os` and `target`
address those node fields), and ^ which opens a constraint on a dependency.
Later sigils always attach to the most recently named node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .versions import VersionConstraint


class SpecSyntaxError(Exception):
    def __init__(self, message: str, pos: int):
        super().__init__(f"at column {pos + 1}: {message}")
        self.pos = pos


class DuplicateVariant(Exception):
    def __init__(self, node: str, variant: str):
        super().__init__(f"variant {variant!r} set twice on {node or '(anonymous)'}")
        self.node = node
        self.variant = variant


class Conflict(Exception):
    """Two constraints cannot hold at once."""

    def __init__(self, detail: str, left=None, right=None):
        super().__init__(detail)
        self.left = left
        self.right = right


@dataclass
class SpecNode:
    """Constraints on a single package node."""

    name: str | None = None
    versions: VersionConstraint = field(default_factory=VersionConstraint.any)
    compiler: str | None = None
    compiler_versions: VersionConstraint = field(default_factory=VersionConstraint.any)
    variants: dict = field(default_factory=dict)
    os: str | None = None
    target: str | None = None

    def is_unconstrained(self) -> bool:
        return (
            self.versions.is_any()
            and self.compiler is None
            and not self.variants
            and self.os is None
            and self.target is None
        )

    def render(self) -> str:
        out = self.name or ""
        if not self.versions.is_any():
            out += f"@{self.versions.render()}"
        if self.compiler:
            out += f"%{self.compiler}"
            if not self.compiler_versions.is_any():
                out += f"@{self.compiler_versions.render()}"
        bools = sorted((k, v) for k, v in self.variants.items() if v in ("true", "false"))
        for name, value in bools:
            out += ("+" if value == "true" else "~") + name
        strings = sorted((k, v) for k, v in self.variants.items() if v not in ("true", "false"))
        for name, value in strings:
            out += f" {name}={value}"
        if self.os:
            out += f" os={self.os}"
        if self.target:
            out += f" target={self.target}"
        return out


@dataclass
class AbstractSpec:
    root: SpecNode
    deps: list = field(default_factory=list)

    @property
    def name(self):
        return self.root.name

    def render(self) -> str:
        out = self.root.render()
        for dep in sorted(self.deps, key=lambda d: d.name or ""):
            out += f" ^{dep.render()}"
        return out

    def dep_named(self, name: str):
        for dep in self.deps:
            if dep.name == name:
                return dep
        return None


_NAME_RE = re.compile(r"[A-Za-z0-9_][A-Za-z0-9_.-]*")
_VERSION_CHARS_RE = re.compile(r"[A-Za-z0-9_.:,]+")
_VALUE_RE = re.compile(r"[A-Za-z0-9_.:*+-]+")


class _SpecScanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def eof(self) -> bool:
        self._skip_ws()
        return self.pos >= len(self.text)

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take_regex(self, pattern, what: str) -> str:
        self._skip_ws()
        match = pattern.match(self.text, self.pos)
        if match is None:
            raise SpecSyntaxError(f"expected {what}", self.pos)
        self.pos = match.end()
        return match.group()

    def take_char(self) -> str:
        ch = self.peek()
        self.pos += 1
        return ch


def _parse_versions(scanner: _SpecScanner) -> VersionConstraint:
    start = scanner.pos
    text = scanner.take_regex(_VERSION_CHARS_RE, "version constraint")
    try:
        return VersionConstraint.parse(text)
    except ValueError as exc:
        raise SpecSyntaxError(str(exc), start) from None


def parse_spec(text: str) -> AbstractSpec:
    """Parse a spec string into an AbstractSpec."""
    if not text or not text.strip():
        raise SpecSyntaxError("empty spec", 0)
    scanner = _SpecScanner(text)
    root = SpecNode()
    spec = AbstractSpec(root)
    current = root
    if scanner.peek() not in "@%+~^" and scanner.peek() != "":
        current.name = scanner.take_regex(_NAME_RE, "package name")
    while not scanner.eof():
        ch = scanner.peek()
        if ch == "^":
            scanner.take_char()
            node = SpecNode(name=scanner.take_regex(_NAME_RE, "dependency name"))
            spec.deps.append(node)
            current = node
        elif ch == "@":
            scanner.take_char()
            versions = _parse_versions(scanner)
            merged = current.versions.intersect(versions)
            if merged is None:
                raise SpecSyntaxError(
                    f"conflicting version constraints on {current.name or '(anonymous)'}",
                    scanner.pos,
                )
            current.versions = merged
        elif ch == "%":
            scanner.take_char()
            if current.compiler is not None:
                raise SpecSyntaxError("compiler set twice", scanner.pos)
            current.compiler = scanner.take_regex(_NAME_RE, "compiler name")
            if scanner.peek() == "@":
                scanner.take_char()
                current.compiler_versions = _parse_versions(scanner)
        elif ch in "+~":
            scanner.take_char()
            name = scanner.take_regex(_NAME_RE, "variant name")
            _set_variant(current, name, "true" if ch == "+" else "false")
        else:
            key = scanner.take_regex(_NAME_RE, "variant or field name")
            if scanner.peek() != "=":
                raise SpecSyntaxError(f"expected '=' after {key!r}", scanner.pos)
            scanner.take_char()
            value = scanner.take_regex(_VALUE_RE, "value")
            if key == "os":
                current.os = value
            elif key == "target":
                current.target = value
            else:
                _set_variant(current, key, value)
    return spec


def _set_variant(node: SpecNode, name: str, value: str):
    if name in node.variants:
        raise DuplicateVariant(node.name, name)
    node.variants[name] = value


def render_spec(spec: AbstractSpec) -> str:
    """Canonical text form; parse_spec(render_spec(s)) is structurally s."""
    return spec.render()


def _merge_nodes(a: SpecNode, b: SpecNode) -> SpecNode:
    if a.name and b.name and a.name != b.name:
        raise Conflict(f"package names differ: {a.name} vs {b.name}", a.render(), b.render())
    versions = a.versions.intersect(b.versions)
    if versions is None:
        raise Conflict(
            f"empty version intersection on {a.name or b.name}: "
            f"{a.versions.render()!r} vs {b.versions.render()!r}",
            a.render(),
            b.render(),
        )
    if a.compiler and b.compiler and a.compiler != b.compiler:
        raise Conflict(f"compilers differ: {a.compiler} vs {b.compiler}", a.render(), b.render())
    compiler_versions = a.compiler_versions.intersect(b.compiler_versions)
    if compiler_versions is None:
        raise Conflict(
            f"empty compiler version intersection on {a.name or b.name}",
            a.render(),
            b.render(),
        )
    variants = dict(a.variants)
    for key, value in b.variants.items():
        if key in variants and variants[key] != value:
            raise Conflict(
                f"variant {key!r} set to both {variants[key]!r} and {value!r} on {a.name or b.name}",
                a.render(),
                b.render(),
            )
        variants[key] = value
    for field_name in ("os", "target"):
        av, bv = getattr(a, field_name), getattr(b, field_name)
        if av and bv and av != bv:
            raise Conflict(f"{field_name} differs: {av} vs {bv}", a.render(), b.render())
    return SpecNode(
        name=a.name or b.name,
        versions=versions,
        compiler=a.compiler or b.compiler,
        compiler_versions=compiler_versions,
        variants=variants,
        os=a.os or b.os,
        target=a.target or b.target,
    )


def merge_constraints(a: AbstractSpec, b: AbstractSpec) -> AbstractSpec:
    """Combine two specs for the same root; raises Conflict when impossible."""
    root = _merge_nodes(a.root, b.root)
    deps: dict = {}
    for dep in list(a.deps) + list(b.deps):
        if dep.name in deps:
            deps[dep.name] = _merge_nodes(deps[dep.name], dep)
        else:
            deps[dep.name] = replace(dep, variants=dict(dep.variants))
    return AbstractSpec(root, [deps[k] for k in sorted(deps)])
