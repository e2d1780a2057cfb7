"""Expression language for scalar fields over t1..tn.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := unary ("^" factor)?
    unary  := "-" unary | atom
    atom   := NUMBER | VAR | FUNC "(" [expr ("," expr)*] ")" | "(" expr ")"
    VAR    := "t" [1-9][0-9]*
    FUNC   := sqrt | exp | log | abs | min | max | norm2 | norm

Unary minus binds tighter than "^": ``-t1^2`` is ``(-t1)^2``.
``norm2()`` with no arguments is t1^2 + ... + tn^2.
"""
from __future__ import annotations

import functools
import logging
import re
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Sequence, Tuple

import numpy as np

from . import dual
from .errors import DimensionError, ExpressionSyntaxError, NonDifferentiable

logger = logging.getLogger("equimid.dsl")

UNICODE_MINUS = "−"
NON_SMOOTH_FUNCTIONS = frozenset({"abs", "min", "max"})
UNARY_FUNCTIONS = frozenset({"sqrt", "exp", "log", "abs"})
VARIADIC_FUNCTIONS = frozenset({"min", "max", "norm2", "norm"})
FUNCTIONS = UNARY_FUNCTIONS | VARIADIC_FUNCTIONS

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<var>t[1-9][0-9]*)(?![A-Za-z0-9_])
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(source: str) -> List[Token]:
    text = source.replace(UNICODE_MINUS, "-")
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        match = _TOKEN_RE.match(text, position)
        if match is None:
            raise ExpressionSyntaxError(f"Unexpected character {text[position]!r}", position)
        kind = match.lastgroup or ""
        if kind != "ws":
            tokens.append(Token(kind, match.group(), position))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class Expr:
    """AST node base. Evaluation is generic over floats, arrays and duals."""

    def evaluate(self, variables: Sequence[Any]) -> Any:
        raise NotImplementedError

    def to_source(self) -> str:
        raise NotImplementedError

    def is_smooth(self) -> bool:
        return True

    def max_variable(self) -> int:
        return 0


@dataclass(frozen=True)
class Number(Expr):
    value: float

    def evaluate(self, variables: Sequence[Any]) -> Any:
        return np.float64(self.value)

    def to_source(self) -> str:
        return repr(float(self.value))


@dataclass(frozen=True)
class Variable(Expr):
    index: int  # 1-based

    def evaluate(self, variables: Sequence[Any]) -> Any:
        return variables[self.index - 1]

    def to_source(self) -> str:
        return f"t{self.index}"

    def max_variable(self) -> int:
        return self.index


@dataclass(frozen=True)
class Negate(Expr):
    operand: Expr

    def evaluate(self, variables: Sequence[Any]) -> Any:
        return -self.operand.evaluate(variables)

    def to_source(self) -> str:
        return f"-({self.operand.to_source()})"

    def is_smooth(self) -> bool:
        return self.operand.is_smooth()

    def max_variable(self) -> int:
        return self.operand.max_variable()


_BINARY_OPERATIONS: Dict[str, Callable[[Any, Any], Any]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": lambda a, b: a**b,
}


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, variables: Sequence[Any]) -> Any:
        left = self.left.evaluate(variables)
        if self.op == "^" and self.right.max_variable() == 0:
            # constant exponent: power rule, no log of a possibly negative base
            return left ** float(self.right.evaluate(()))
        return _BINARY_OPERATIONS[self.op](left, self.right.evaluate(variables))

    def to_source(self) -> str:
        return f"({self.left.to_source()} {self.op} {self.right.to_source()})"

    def is_smooth(self) -> bool:
        return self.left.is_smooth() and self.right.is_smooth()

    def max_variable(self) -> int:
        return max(self.left.max_variable(), self.right.max_variable())


@dataclass(frozen=True)
class Call(Expr):
    name: str
    args: Tuple[Expr, ...]
    dimension: int = 0  # only used by the argument-free norm2()/norm()

    def _arguments(self, variables: Sequence[Any]) -> List[Any]:
        if self.args:
            return [arg.evaluate(variables) for arg in self.args]
        return list(variables[: self.dimension])

    def evaluate(self, variables: Sequence[Any]) -> Any:
        values = self._arguments(variables)
        if self.name in NON_SMOOTH_FUNCTIONS and any(isinstance(v, dual.Dual) for v in values):
            raise NonDifferentiable(f"{self.name}() has no derivative in the expression language")
        if self.name == "sqrt":
            return dual.sqrt(values[0])
        if self.name == "exp":
            return dual.exp(values[0])
        if self.name == "log":
            return dual.log(values[0])
        if self.name == "abs":
            return np.abs(values[0])
        if self.name == "min":
            return functools.reduce(np.minimum, values)
        if self.name == "max":
            return functools.reduce(np.maximum, values)
        squares = functools.reduce(lambda acc, v: acc + v * v, values[1:], values[0] * values[0])
        if self.name == "norm2":
            return squares
        return dual.sqrt(squares)

    def to_source(self) -> str:
        return f"{self.name}({', '.join(arg.to_source() for arg in self.args)})"

    def is_smooth(self) -> bool:
        return self.name not in NON_SMOOTH_FUNCTIONS and all(arg.is_smooth() for arg in self.args)

    def max_variable(self) -> int:
        if not self.args:
            return self.dimension
        return max(arg.max_variable() for arg in self.args)


class _Parser:
    def __init__(self, source: str, dimension: int):
        self.tokens = tokenize(source)
        self.index = 0
        self.dimension = dimension

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _expect(self, text: str) -> Token:
        if self.current.text != text:
            found = self.current.text or "end of input"
            raise ExpressionSyntaxError(f"Unexpected {found!r}", self.current.position, (text,))
        return self._advance()

    def parse(self) -> Expr:
        node = self.expr()
        if self.current.kind != "end":
            raise ExpressionSyntaxError(
                f"Unexpected {self.current.text!r}", self.current.position, ("+", "-", "*", "/", "^", "end")
            )
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.current.text in ("+", "-"):
            op = self._advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.current.text in ("*", "/"):
            op = self._advance().text
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        base = self.unary()
        if self.current.text == "^":
            self._advance()
            return Binary("^", base, self.factor())
        return base

    def unary(self) -> Expr:
        if self.current.text == "-":
            self._advance()
            return Negate(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self._advance()
            return Number(float(token.text))
        if token.kind == "var":
            self._advance()
            index = int(token.text[1:])
            if index > self.dimension:
                raise DimensionError(
                    f"Variable {token.text} at position {token.position} exceeds dimension {self.dimension}"
                )
            return Variable(index)
        if token.kind == "name":
            return self.call()
        if token.text == "(":
            self._advance()
            node = self.expr()
            self._expect(")")
            return node
        found = token.text or "end of input"
        raise ExpressionSyntaxError(
            f"Unexpected {found!r}", token.position, ("NUMBER", "VAR", "FUNC", "(", "-")
        )

    def call(self) -> Expr:
        token = self._advance()
        name = token.text
        if name not in FUNCTIONS:
            raise ExpressionSyntaxError(f"Unknown identifier {name!r}", token.position, tuple(sorted(FUNCTIONS)))
        self._expect("(")
        args: List[Expr] = []
        if self.current.text != ")":
            args.append(self.expr())
            while self.current.text == ",":
                self._advance()
                args.append(self.expr())
        self._expect(")")
        if name in UNARY_FUNCTIONS and len(args) != 1:
            raise ExpressionSyntaxError(f"{name}() takes exactly one argument", token.position)
        if name in ("min", "max") and not args:
            raise ExpressionSyntaxError(f"{name}() needs at least one argument", token.position)
        return Call(name, tuple(args), dimension=0 if args else self.dimension)


def parse_expression(source: str, dimension: int) -> Expr:
    """Parse ``source`` into an AST; raises ExpressionSyntaxError or DimensionError."""
    if dimension < 1:
        raise DimensionError(f"Dimension must be >= 1, got {dimension}")
    if not source or not source.strip():
        raise ExpressionSyntaxError("Empty expression", 0, ("NUMBER", "VAR", "FUNC", "(", "-"))
    node = _Parser(source, dimension).parse()
    logger.debug("Parsed %r as %s", source, node.to_source())
    return node
