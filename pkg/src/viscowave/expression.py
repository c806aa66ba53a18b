"""Small Pratt parser for right-hand sides and initial data.

Grammar: numbers, identifiers from a fixed set, ``+ - * / ^`` (``^`` is
right-associative), unary minus, calls to ``sin cos exp tanh abs sqrt`` and
parentheses. Expressions evaluate element-wise on numpy arrays.
"""

from __future__ import annotations

import re
from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np

from viscowave.errors import EvaluationError, ExpressionSyntaxError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "abs": np.abs,
    "sqrt": np.sqrt,
}
PROBLEM_VARIABLES = ("x", "t", "u", "p")

_TOKEN = re.compile(
    r"(?P<space>[ \t\r]+)"
    r"|(?P<newline>\n)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> Iterator[Token]:
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise ExpressionSyntaxError(
                f"Unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = match.lastgroup
        if kind == "newline":
            line, line_start = line + 1, match.end()
        elif kind != "space":
            yield Token(kind, match.group(), line, match.start() - line_start + 1)
        pos = match.end()
    yield Token("end", "", line, pos - line_start + 1)


@dataclass(frozen=True)
class Number:
    value: float

    def evaluate(self, env):
        return self.value

    def __str__(self) -> str:
        return repr(self.value)


@dataclass(frozen=True)
class Variable:
    name: str

    def evaluate(self, env):
        return env[self.name]

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Negate:
    operand: Node

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def __str__(self) -> str:
        return f"(-{self.operand})"


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: Node
    right: Node

    def evaluate(self, env):
        left, right = self.left.evaluate(env), self.right.evaluate(env)
        match self.op:
            case "+":
                return left + right
            case "-":
                return left - right
            case "*":
                return left * right
            case "/":
                if np.any(np.asarray(right) == 0):
                    raise EvaluationError("Division by zero", _first(env, right == 0))
                return left / right
            case "^":
                return np.power(left, right)

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Call:
    name: str
    argument: Node

    def evaluate(self, env):
        value = self.argument.evaluate(env)
        if self.name == "sqrt" and np.any(np.asarray(value) < 0):
            raise EvaluationError(
                "sqrt of a negative number", _first(env, np.asarray(value) < 0)
            )
        return FUNCTIONS[self.name](value)

    def __str__(self) -> str:
        return f"{self.name}({self.argument})"


Node = Number | Variable | Negate | BinaryOp | Call


def _first(env: Mapping, mask) -> dict:
    arrays = np.broadcast_arrays(
        np.asarray(mask), *(np.asarray(v, dtype=float) for v in env.values())
    )
    flat = arrays[0].ravel()
    index = int(np.argmax(flat)) if flat.size else 0
    return {
        name: float(array.ravel()[index])
        for name, array in zip(env.keys(), arrays[1:], strict=True)
    }


_BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 30}
_UNARY_BINDING = 25


class _Parser:
    def __init__(self, text: str, variables: tuple[str, ...]):
        self._tokens = tokenize(text)
        self._variables = variables
        self.token = next(self._tokens)

    def advance(self) -> Token:
        current = self.token
        self.token = next(self._tokens)
        return current

    def expect(self, text: str) -> None:
        if self.token.text != text:
            self.fail(f"Expected {text!r}, found {self.token.text or 'end of input'!r}")
        self.advance()

    def fail(self, message: str, token: Token | None = None):
        token = token or self.token
        raise ExpressionSyntaxError(message, token.line, token.column)

    def lbp(self) -> int:
        if self.token.kind == "op":
            return _BINDING.get(self.token.text, 0)
        return 0

    def expression(self, rbp: int = 0) -> Node:
        left = self.nud(self.advance())
        while rbp < self.lbp():
            left = self.led(self.advance(), left)
        return left

    def nud(self, token: Token) -> Node:
        if token.kind == "number":
            return Number(float(token.text))
        if token.kind == "name":
            if token.text in FUNCTIONS:
                self.expect("(")
                argument = self.expression()
                self.expect(")")
                return Call(token.text, argument)
            if token.text not in self._variables:
                self.fail(
                    f"Unknown identifier {token.text!r}; "
                    f"allowed: {', '.join(self._variables)}",
                    token,
                )
            return Variable(token.text)
        if token.text == "-":
            return Negate(self.expression(_UNARY_BINDING))
        if token.text == "+":
            return self.expression(_UNARY_BINDING)
        if token.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        self.fail(f"Unexpected {token.text or 'end of input'!r}", token)

    def led(self, token: Token, left: Node) -> Node:
        binding = _BINDING[token.text]
        # ^ binds to the right
        right = self.expression(binding - 1 if token.text == "^" else binding)
        return BinaryOp(token.text, left, right)


@dataclass(frozen=True)
class Expression:
    text: str
    tree: Node
    variables: tuple[str, ...] = PROBLEM_VARIABLES

    @classmethod
    def parse(
        cls, text: str, variables: tuple[str, ...] = PROBLEM_VARIABLES
    ) -> Expression:
        parser = _Parser(text, variables)
        if parser.token.kind == "end":
            parser.fail("Empty expression")
        tree = parser.expression()
        if parser.token.kind != "end":
            parser.fail(f"Unexpected {parser.token.text!r}")
        return cls(text=text, tree=tree, variables=variables)

    def free_variables(self) -> set[str]:
        found: set[str] = set()
        stack: list[Node] = [self.tree]
        while stack:
            node = stack.pop()
            match node:
                case Variable(name):
                    found.add(name)
                case Negate(operand) | Call(_, operand):
                    stack.append(operand)
                case BinaryOp(_, left, right):
                    stack.extend((left, right))
        return found

    def evaluate(self, **values):
        missing = self.free_variables() - values.keys()
        if missing:
            raise EvaluationError(f"No value for {', '.join(sorted(missing))}")
        env = {name: values[name] for name in self.variables if name in values}
        shape = np.broadcast_shapes(*(np.shape(v) for v in env.values()))
        with np.errstate(all="ignore"):
            result = np.broadcast_to(
                np.asarray(self.tree.evaluate(env), dtype=float), shape
            )
        bad = ~np.isfinite(result)
        if np.any(bad):
            raise EvaluationError(
                f"Expression {self.text!r} produced a non-finite value",
                _first(env, bad),
            )
        return result if shape else float(result)

    def __str__(self) -> str:
        return str(self.tree)
