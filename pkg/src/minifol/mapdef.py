"""Expression language and validated containers for m-map definitions.

A map phi: R^n -> R^m is given by m scalar expressions in the variables
x1..xn together with an axis-aligned domain box. The grammar:

    expr   := term (('+'|'-') term)*
    term   := unary (('*'|'/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := number | 'pi' | 'e' | name '(' expr (',' expr)* ')'
            | variable | '(' expr ')'

so '^' binds tighter than unary minus ('-x1^2' is '-(x1^2)') and all other
binary operators associate to the left. atan2 is the only two-argument
function.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass

from .errors import (
    ArityError,
    DimensionError,
    DomainError,
    EvaluationError,
    ExpressionSyntaxError,
    SchemaError,
    UnknownIdentifierError,
)

UNARY_FUNCTIONS = ("sin", "cos", "sinh", "cosh", "tanh", "exp", "log", "sqrt")
BINARY_FUNCTIONS = ("atan2",)
CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class ExprNode:
    """Base class; nodes compare structurally and are immutable."""

    __slots__ = ()


@dataclass(frozen=True)
class Constant(ExprNode):
    __slots__ = ("value",)
    value: float


@dataclass(frozen=True)
class Variable(ExprNode):
    """1-based coordinate index, i.e. Variable(3) is x3."""

    __slots__ = ("index",)
    index: int


@dataclass(frozen=True)
class Unary(ExprNode):
    __slots__ = ("op", "child")
    op: str  # neg | sin | cos | sinh | cosh | tanh | exp | log | sqrt
    child: ExprNode


@dataclass(frozen=True)
class Binary(ExprNode):
    __slots__ = ("op", "left", "right")
    op: str  # + - * / ^ atan2
    left: ExprNode
    right: ExprNode


# ---------------------------------------------------------------------------
# Tokenizer / parser

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None or match.end() == pos:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            at = len(source) - len(stripped)
            raise ExpressionSyntaxError(
                f"unexpected character {stripped[0]!r} at offset {at}",
                position=at,
                expected="token",
            )
        kind = match.lastgroup
        tokens.append((kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, n):
        self.source = source
        self.n = n
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, text, pos = self.peek()
        shown = "end of input" if kind == "end" else repr(text)
        raise ExpressionSyntaxError(
            f"expected {expected} but found {shown} at offset {pos}",
            position=pos,
            expected=expected,
        )

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("end of input")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[1] == "^":
            self.advance()
            node = Binary("^", node, self.unary())  # right associative
        return node

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.advance()
            return Constant(float(text))
        if kind == "name":
            self.advance()
            return self.name(text, pos)
        if text == "(":
            self.advance()
            node = self.expr()
            if self.peek()[1] != ")":
                self.fail("')'")
            self.advance()
            return node
        self.fail("an operand")

    def name(self, text, pos):
        if text in CONSTANTS:
            return Constant(CONSTANTS[text])
        if text in UNARY_FUNCTIONS or text in BINARY_FUNCTIONS:
            args = self.call_args(text)
            want = 2 if text in BINARY_FUNCTIONS else 1
            if len(args) != want:
                raise ArityError(
                    f"{text} takes {want} argument{'s' if want > 1 else ''}, "
                    f"got {len(args)}"
                )
            if want == 1:
                return Unary(text, args[0])
            return Binary(text, args[0], args[1])
        var = re.fullmatch(r"x([1-9]\d*)", text)
        if var:
            index = int(var.group(1))
            if index > self.n:
                raise UnknownIdentifierError(
                    f"variable {text} out of range for n={self.n}",
                    name=text,
                    position=pos,
                )
            return Variable(index)
        raise UnknownIdentifierError(
            f"unknown identifier {text!r}", name=text, position=pos
        )

    def call_args(self, fname):
        if self.peek()[1] != "(":
            self.fail(f"'(' after {fname}")
        self.advance()
        args = [self.expr()]
        while self.peek()[1] == ",":
            self.advance()
            args.append(self.expr())
        if self.peek()[1] != ")":
            self.fail("')'")
        self.advance()
        return args


def parse(source: str, n: int) -> ExprNode:
    """Parse an expression over variables x1..xn.

    Raises ExpressionSyntaxError, UnknownIdentifierError or ArityError on
    malformed input.
    """
    if not isinstance(source, str) or not source.strip():
        raise ExpressionSyntaxError("empty expression", position=0)
    if n < 1:
        raise ValueError("n must be >= 1")
    return _Parser(source, n).parse()


# ---------------------------------------------------------------------------
# Printing

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _print(node, parent_prec, is_right):
    if isinstance(node, Constant):
        text = repr(node.value)
        return f"({text})" if node.value < 0 and parent_prec > 1 else text
    if isinstance(node, Variable):
        return f"x{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = _print(node.child, _PRECEDENCE["neg"], False)
            text = f"-{inner}"
            # '-a' may not stand as a right operand or under * / ^ without parens
            if parent_prec > 2 or (parent_prec == 1 and is_right):
                return f"({text})"
            return text
        return f"{node.op}({_print(node.child, 0, False)})"
    if node.op == "atan2":
        return f"atan2({_print(node.left, 0, False)}, {_print(node.right, 0, False)})"
    prec = _PRECEDENCE[node.op]
    # left-assoc ops need parens around an equal-precedence right child;
    # '^' is the mirror case
    lp = _print(node.left, prec if node.op != "^" else prec + 1, False)
    rp = _print(node.right, prec + (0 if node.op == "^" else 1), True)
    text = f"{lp} {node.op} {rp}" if node.op != "^" else f"{lp}{node.op}{rp}"
    if prec < parent_prec or (prec == parent_prec and is_right and node.op != "^"):
        return f"({text})"
    return text


def pretty_print(node: ExprNode) -> str:
    """Render a tree back to source that reparses to an identical tree."""
    return _print(node, 0, False)


# ---------------------------------------------------------------------------
# Reference evaluator (plain tree walk; the independent check against the
# kernel paths, and the evaluator behind the finite-difference oracles)

_UNARY_IMPL = {
    "neg": lambda v: -v,
    "sin": math.sin,
    "cos": math.cos,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
}


def eval_expr(node: ExprNode, point) -> float:
    """Evaluate by direct recursion, raising EvaluationError at singular points."""

    def rec(nd):
        if isinstance(nd, Constant):
            return nd.value
        if isinstance(nd, Variable):
            return float(point[nd.index - 1])
        try:
            if isinstance(nd, Unary):
                result = _UNARY_IMPL[nd.op](rec(nd.child))
            elif nd.op == "+":
                result = rec(nd.left) + rec(nd.right)
            elif nd.op == "-":
                result = rec(nd.left) - rec(nd.right)
            elif nd.op == "*":
                result = rec(nd.left) * rec(nd.right)
            elif nd.op == "/":
                result = rec(nd.left) / rec(nd.right)
            elif nd.op == "^":
                result = math.pow(rec(nd.left), rec(nd.right))
            elif nd.op == "atan2":
                y, x = rec(nd.left), rec(nd.right)
                if y == 0.0 and x == 0.0:
                    raise ValueError("atan2(0, 0)")
                result = math.atan2(y, x)
            else:
                raise AssertionError(f"unhandled op {nd.op}")
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise EvaluationError(
                f"singular evaluation of {pretty_print(nd)}: {exc}",
                point=point,
                subexpr=pretty_print(nd),
            ) from None
        if not math.isfinite(result):
            raise EvaluationError(
                f"nonfinite value from {pretty_print(nd)}",
                point=point,
                subexpr=pretty_print(nd),
            )
        return result

    return rec(node)


def variables_used(node: ExprNode) -> set[int]:
    if isinstance(node, Variable):
        return {node.index}
    if isinstance(node, Unary):
        return variables_used(node.child)
    if isinstance(node, Binary):
        return variables_used(node.left) | variables_used(node.right)
    return set()


# ---------------------------------------------------------------------------
# Map definitions


@dataclass(frozen=True)
class MapDefinition:
    """A validated m-map: m component expressions over an n-dimensional box."""

    name: str
    n: int
    m: int
    components: tuple  # of ExprNode
    component_sources: tuple  # of str
    domain_min: tuple  # of float, length n
    domain_max: tuple  # of float, length n

    def contains(self, point) -> bool:
        return all(
            self.domain_min[i] <= point[i] <= self.domain_max[i]
            for i in range(self.n)
        )

    def box_diagonal(self) -> float:
        return math.sqrt(
            sum((hi - lo) ** 2 for lo, hi in zip(self.domain_min, self.domain_max))
        )

    def to_document(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "m": self.m,
            "components": list(self.component_sources),
            "domain": {
                "min": list(self.domain_min),
                "max": list(self.domain_max),
            },
        }


def _require(document, key, types, what):
    if key not in document:
        raise SchemaError(f"missing key {key!r} in {what}")
    value = document[key]
    if not isinstance(value, types):
        raise SchemaError(f"key {key!r} in {what} has wrong type {type(value).__name__}")
    return value


def load_map(document: dict) -> MapDefinition:
    """Validate a config document (see README for the schema) into a MapDefinition.

    Unknown extra keys are ignored so that run configs can embed a map
    document alongside run parameters.
    """
    if not isinstance(document, dict):
        raise SchemaError("map document must be a JSON object")
    name = _require(document, "name", str, "map document")
    n = _require(document, "n", int, "map document")
    m = _require(document, "m", int, "map document")
    if isinstance(n, bool) or isinstance(m, bool):
        raise SchemaError("n and m must be integers")
    if n < 1 or m < 1:
        raise SchemaError(f"n and m must be positive, got n={n} m={m}")
    if not m < n:
        raise DimensionError(f"need 1 <= m < n, got m={m}, n={n}")
    sources = _require(document, "components", list, "map document")
    if len(sources) != m:
        raise SchemaError(f"expected {m} components, got {len(sources)}")
    domain = _require(document, "domain", dict, "map document")
    lo = _require(domain, "min", list, "domain")
    hi = _require(domain, "max", list, "domain")
    if len(lo) != n or len(hi) != n:
        raise SchemaError(f"domain min/max must each have {n} entries")
    try:
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
    except (TypeError, ValueError):
        raise SchemaError("domain bounds must be numbers") from None
    for i, (a, b) in enumerate(zip(lo, hi)):
        if not (math.isfinite(a) and math.isfinite(b)):
            raise DomainError(f"domain bounds on axis {i + 1} must be finite")
        if not a < b:
            raise DomainError(f"degenerate box on axis {i + 1}: min {a} >= max {b}")
    components = []
    for k, src in enumerate(sources):
        if not isinstance(src, str):
            raise SchemaError(f"component {k + 1} is not a string")
        components.append(parse(src, n))
    return MapDefinition(
        name=name,
        n=n,
        m=m,
        components=tuple(components),
        component_sources=tuple(sources),
        domain_min=lo,
        domain_max=hi,
    )


def load_map_json(text: str) -> MapDefinition:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return load_map(document)


def load_map_file(path) -> MapDefinition:
    with open(path, "r", encoding="utf-8") as fh:
        return load_map_json(fh.read())
