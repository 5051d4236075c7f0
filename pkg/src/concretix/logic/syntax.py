"""Front end for the embedded logic language.

The accepted dialect is small on purpose:

    fact(a).
    head(X) :- body(X, Y), not excluded(X), X != Y.
    :- forbidden(X), error("why it is forbidden").
    { pick(X) : candidate(X) }.
    1 { version(P, V) : declared(P, V) } 1 :- node(P).
    #minimize { W@3,P : weight(P, W) }.
    % line comment

Statements end with a period.  Variables are capitalized words, `_` is an
anonymous variable, and constants are lowercase names, quoted strings, or
integers.  Rule bodies may contain ground-evaluable comparisons
(=, !=, <, <=, >, >=).  Choice rules take optional integer cardinality
bounds.  Disjunctive heads and aggregates other than the bounded choice
and #minimize are not part of the language.
"""

from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from typing import Iterator, Union


class ParseError(Exception):
    """Raised for malformed logic-language text."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class SafetyError(Exception):
    """Raised when a rule variable is not bound by a positive body literal."""

    def __init__(self, message: str, line: int, col: int, variable: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.variable = variable


@dataclass(frozen=True, slots=True)
class Sym:
    """A bare lowercase constant, distinct from a quoted string constant."""

    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return self.name


# Ground terms are plain Python values: int, str (quoted string constant)
# or Sym (bare constant).  Var only appears before grounding.
GroundTerm = Union[int, str, Sym]
Term = Union[int, str, Sym, Var]

COMPARISON_OPS = ("=", "!=", "<", "<=", ">", ">=")


def is_ground(term: Term) -> bool:
    return not isinstance(term, Var)


def term_order_key(term: GroundTerm):
    """Total order over ground terms: integers, then strings, then symbols."""
    if isinstance(term, int):
        return (0, term)
    if isinstance(term, str):
        return (1, term)
    return (2, term.name)


def render_term(term: Term) -> str:
    if isinstance(term, int):
        return str(term)
    if isinstance(term, str):
        escaped = term.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    return str(term)


@dataclass(frozen=True, slots=True)
class Atom:
    pred: str
    args: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    def is_ground(self) -> bool:
        return all(is_ground(a) for a in self.args)

    def __str__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({', '.join(render_term(a) for a in self.args)})"


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"


@dataclass(frozen=True, slots=True)
class Comparison:
    op: str
    left: Term
    right: Term

    def __str__(self):
        return f"{render_term(self.left)} {self.op} {render_term(self.right)}"


BodyItem = Union[Literal, Comparison]


@dataclass(frozen=True, slots=True)
class ChoiceElement:
    atom: Atom
    condition: tuple = ()  # tuple[Literal, ...]

    def __str__(self):
        if not self.condition:
            return str(self.atom)
        cond = ", ".join(str(c) for c in self.condition)
        return f"{self.atom} : {cond}"


@dataclass(frozen=True, slots=True)
class ChoiceSpec:
    elements: tuple  # tuple[ChoiceElement, ...]
    lower: int | None = None
    upper: int | None = None

    def __str__(self):
        inner = "; ".join(str(e) for e in self.elements)
        text = f"{{ {inner} }}"
        if self.lower is not None:
            text = f"{self.lower} {text}"
        if self.upper is not None:
            text = f"{text} {self.upper}"
        return text


@dataclass(frozen=True, slots=True)
class MinimizeSpec:
    weight: Term
    level: int
    keys: tuple = ()  # tuple[Term, ...]
    body: tuple = ()  # tuple[BodyItem, ...]

    def __str__(self):
        head = f"{render_term(self.weight)}@{self.level}"
        for key in self.keys:
            head += f",{render_term(key)}"
        if self.body:
            head += " : " + ", ".join(str(b) for b in self.body)
        return f"#minimize {{ {head} }}"


@dataclass(frozen=True, slots=True)
class Rule:
    kind: str  # fact | normal | choice | integrity | minimize
    head: Union[Atom, ChoiceSpec, MinimizeSpec, None]
    body: tuple = ()  # tuple[BodyItem, ...]
    line: int = 0
    col: int = 0

    def render(self) -> str:
        body = ", ".join(str(b) for b in self.body)
        if self.kind == "fact":
            return f"{self.head}."
        if self.kind == "normal":
            return f"{self.head} :- {body}."
        if self.kind == "integrity":
            return f":- {body}."
        if self.kind == "choice":
            return f"{self.head} :- {body}." if self.body else f"{self.head}."
        if self.kind == "minimize":
            return f"{self.head}."
        raise ValueError(f"unknown rule kind {self.kind!r}")


@dataclass
class Program:
    rules: list = field(default_factory=list)

    def render(self) -> str:
        return "\n".join(rule.render() for rule in self.rules) + ("\n" if self.rules else "")

    def extend(self, other: "Program") -> "Program":
        return Program(self.rules + other.rules)

    def __len__(self):
        return len(self.rules)


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>%[^\n]*)
    | (?P<minimize>\#minimize\b)
    | (?P<str>"(?:[^"\\]|\\.)*")
    | (?P<int>-?\d+)
    | (?P<name>[a-z][A-Za-z0-9_]*)
    | (?P<var>[A-Z][A-Za-z0-9_]*|_)
    | (?P<punct>:-|!=|<=|>=|[.,;:(){}@<>=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class _Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> Iterator[_Token]:
    line_starts = [0]
    for i, ch in enumerate(text):
        if ch == "\n":
            line_starts.append(i + 1)

    def locate(pos: int) -> tuple[int, int]:
        lo, hi = 0, len(line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if line_starts[mid] <= pos:
                lo = mid
            else:
                hi = mid - 1
        return lo + 1, pos - line_starts[lo] + 1

    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            line, col = locate(pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = match.lastgroup
        if kind not in ("ws", "comment"):
            line, col = locate(match.start())
            yield _Token(kind, match.group(), line, col)
        pos = match.end()


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(_tokenize(text))
        self.pos = 0
        self.anon_counter = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else _Token("", "", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col)
        self.pos += 1
        return tok

    def expect(self, value: str) -> _Token:
        tok = self.next()
        if tok.value != value:
            raise ParseError(f"expected {value!r}, found {tok.value!r}", tok.line, tok.col)
        return tok

    def at(self, value: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.value == value

    def parse_program(self) -> Program:
        rules = []
        while self.peek() is not None:
            rules.append(self.parse_statement())
        return Program(rules)

    def parse_statement(self) -> Rule:
        tok = self.peek()
        assert tok is not None
        if tok.kind == "minimize":
            return self._parse_minimize()
        if tok.value == ":-":
            self.next()
            body = self._parse_body()
            self.expect(".")
            rule = Rule("integrity", None, body, tok.line, tok.col)
        elif tok.kind == "int" or tok.value == "{":
            rule = self._parse_choice(tok)
        elif tok.kind == "name":
            head = self._parse_atom()
            if self.at("."):
                self.next()
                rule = Rule("fact", head, (), tok.line, tok.col)
            else:
                self.expect(":-")
                body = self._parse_body()
                self.expect(".")
                rule = Rule("normal", head, body, tok.line, tok.col)
        else:
            raise ParseError(f"unexpected token {tok.value!r}", tok.line, tok.col)
        check_safety(rule)
        return rule

    def _parse_choice(self, start: _Token) -> Rule:
        lower = None
        if self.peek().kind == "int":
            lower = int(self.next().value)
        self.expect("{")
        elements = [self._parse_choice_element()]
        while self.at(";"):
            self.next()
            elements.append(self._parse_choice_element())
        self.expect("}")
        upper = None
        if self.peek() is not None and self.peek().kind == "int":
            upper = int(self.next().value)
        if lower is not None and upper is not None and not 0 <= lower <= upper:
            raise ParseError(f"invalid choice bounds {lower}..{upper}", start.line, start.col)
        body: tuple = ()
        if self.at(":-"):
            self.next()
            body = self._parse_body()
        self.expect(".")
        head = ChoiceSpec(tuple(elements), lower, upper)
        rule = Rule("choice", head, body, start.line, start.col)
        return rule

    def _parse_choice_element(self) -> ChoiceElement:
        atom = self._parse_atom()
        condition = []
        if self.at(":"):
            self.next()
            condition.append(self._parse_condition_literal())
            while self.at(","):
                self.next()
                condition.append(self._parse_condition_literal())
        return ChoiceElement(atom, tuple(condition))

    def _parse_condition_literal(self) -> Literal:
        if self.at("not"):
            self.next()
            return Literal(self._parse_atom(), positive=False)
        return Literal(self._parse_atom(), positive=True)

    def _parse_minimize(self) -> Rule:
        start = self.next()  # #minimize
        self.expect("{")
        weight = self._parse_term()
        self.expect("@")
        level_tok = self.next()
        if level_tok.kind != "int":
            raise ParseError("minimize level must be an integer", level_tok.line, level_tok.col)
        keys = []
        while self.at(","):
            self.next()
            keys.append(self._parse_term())
        body: tuple = ()
        if self.at(":"):
            self.next()
            body = self._parse_body(stop_values=("}",))
        self.expect("}")
        self.expect(".")
        head = MinimizeSpec(weight, int(level_tok.value), tuple(keys), body)
        rule = Rule("minimize", head, head.body, start.line, start.col)
        check_safety(rule)
        return rule

    def _parse_body(self, stop_values=()) -> tuple:
        items = [self._parse_body_item()]
        while self.at(","):
            self.next()
            items.append(self._parse_body_item())
        tok = self.peek()
        if tok is not None and stop_values and tok.value not in stop_values and tok.value != ".":
            pass
        return tuple(items)

    def _parse_body_item(self) -> BodyItem:
        tok = self.peek()
        assert tok is not None
        if tok.value == "not" and tok.kind == "name":
            self.next()
            return Literal(self._parse_atom(), positive=False)
        if tok.kind in ("var", "int", "str"):
            left = self._parse_term()
            return self._parse_comparison_tail(left)
        if tok.kind == "name":
            atom = self._parse_atom()
            nxt = self.peek()
            if atom.arity == 0 and nxt is not None and nxt.value in COMPARISON_OPS:
                return self._parse_comparison_tail(Sym(sys.intern(atom.pred)))
            return Literal(atom, positive=True)
        raise ParseError(f"unexpected token {tok.value!r} in body", tok.line, tok.col)

    def _parse_comparison_tail(self, left: Term) -> Comparison:
        tok = self.next()
        if tok.value not in COMPARISON_OPS:
            raise ParseError(f"expected comparison operator, found {tok.value!r}", tok.line, tok.col)
        right = self._parse_term()
        return Comparison(tok.value, left, right)

    def _parse_atom(self) -> Atom:
        tok = self.next()
        if tok.kind != "name":
            raise ParseError(f"expected predicate name, found {tok.value!r}", tok.line, tok.col)
        args = []
        if self.at("("):
            self.next()
            args.append(self._parse_term())
            while self.at(","):
                self.next()
                args.append(self._parse_term())
            self.expect(")")
        return Atom(sys.intern(tok.value), tuple(args))

    def _parse_term(self) -> Term:
        tok = self.next()
        if tok.kind == "int":
            return int(tok.value)
        if tok.kind == "str":
            raw = tok.value[1:-1]
            return sys.intern(raw.replace('\\"', '"').replace("\\\\", "\\"))
        if tok.kind == "name":
            return Sym(sys.intern(tok.value))
        if tok.kind == "var":
            if tok.value == "_":
                self.anon_counter += 1
                return Var(f"_Anon{self.anon_counter}")
            return Var(tok.value)
        raise ParseError(f"expected term, found {tok.value!r}", tok.line, tok.col)


def _atom_vars(atom: Atom):
    for arg in atom.args:
        if isinstance(arg, Var):
            yield arg.name


def _term_vars(term: Term):
    if isinstance(term, Var):
        yield term.name


def check_safety(rule: Rule) -> None:
    """Every variable must occur in a positive, non-builtin body literal.

    Choice-element conditions bind variables locally for their element.
    Anonymous variables are fresh per occurrence, so one in a negative
    literal or a head can never be bound and is rejected here.
    """
    bound = set()
    for item in rule.body:
        if isinstance(item, Literal) and item.positive:
            bound.update(_atom_vars(item.atom))

    def fail(name: str):
        raise SafetyError(
            f"unsafe variable {name!r} does not occur in a positive body literal",
            rule.line,
            rule.col,
            name,
        )

    def require(names, extra=frozenset()):
        for name in names:
            if name not in bound and name not in extra:
                fail(name)

    for item in rule.body:
        if isinstance(item, Literal) and not item.positive:
            require(_atom_vars(item.atom))
        elif isinstance(item, Comparison):
            require(_term_vars(item.left))
            require(_term_vars(item.right))

    head = rule.head
    if rule.kind in ("fact", "normal"):
        require(_atom_vars(head))
    elif rule.kind == "choice":
        for element in head.elements:
            local = set()
            for lit in element.condition:
                if lit.positive:
                    local.update(_atom_vars(lit.atom))
            require(_atom_vars(element.atom), extra=local)
            for lit in element.condition:
                if not lit.positive:
                    require(_atom_vars(lit.atom), extra=local)
    elif rule.kind == "minimize":
        require(_term_vars(head.weight))
        for key in head.keys:
            require(_term_vars(key))


def parse_program(text: str) -> Program:
    """Parse logic-language text into a Program with source locations."""
    return _Parser(text).parse_program()


def evaluate_comparison(op: str, left: GroundTerm, right: GroundTerm) -> bool:
    lk, rk = term_order_key(left), term_order_key(right)
    if op == "=":
        return lk == rk
    if op == "!=":
        return lk != rk
    if op == "<":
        return lk < rk
    if op == "<=":
        return lk <= rk
    if op == ">":
        return lk > rk
    if op == ">=":
        return lk >= rk
    raise ValueError(f"unknown comparison operator {op!r}")
