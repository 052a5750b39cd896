"""PrSTL specification language: AST, parser, formatter, expression evaluation.

Concrete syntax (EBNF):

    formula      ::= "P" cmp number "(" formula ")"          probability bound
                   | "always" interval "(" formula ")"
                   | "eventually" interval "(" formula ")"
                   | "historically" interval "(" formula ")"
                   | "once" interval "(" formula ")"
                   | "next" "(" formula ")"
                   | "not" "(" formula ")"
                   | "(" formula ")" "and" "(" formula ")"
                   | "(" formula ")" "or" "(" formula ")"
                   | "(" formula ")" "implies" "(" formula ")"
                   | "(" formula ")" "until" interval "(" formula ")"
                   | "(" formula ")" "since" interval "(" formula ")"
                   | "(" formula ")"
                   | "true" | "false"
                   | predicate
    predicate    ::= expression cmp expression
    cmp          ::= "<" | "<=" | ">" | ">=" | "==" | "!="
    interval     ::= "[" number "," number "]" | "[" number "," "inf" ")"
    expression   ::= arithmetic over variables, numbers, + - * /, parentheses,
                     and sin cos exp log sqrt abs (1 argument), min max (2)

Notes on the accepted dialect:

* Boolean connectives take parenthesized operands; there is no connective
  precedence to remember.
* ``next`` and ``since`` are accepted extensions (``since`` mirrors the
  ``until`` spelling over the past); ``release`` is recognized and rejected,
  as no quantitative semantics is defined for it.
* ``true`` / ``false`` spell the constant formulas.
* Numbers are base-10 decimals, scientific notation allowed; a leading minus
  inside expressions or interval bounds is accepted (negative interval bounds
  are then rejected with an interval error rather than a token error).
* Probability thresholds must be constants in [0, 1] and the probability
  comparison must be one of < <= > >=.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union

__all__ = [
    "Comparison", "Var", "Const", "BinOp", "Call", "Expression",
    "Interval", "Top", "Bottom", "Predicate", "Not", "And", "Or", "Implies",
    "Always", "Eventually", "Until", "Next", "Historically", "Once", "Since",
    "Prob", "Formula",
    "FormulaError", "ParseError", "IntervalError", "ProbabilityError",
    "EvaluationError", "UnboundVariableError", "NumericDomainError",
    "parse_formula", "format_formula", "eval_expression",
    "free_variables", "contains_prob",
    "formula_to_json", "formula_from_json",
]


class FormulaError(ValueError):
    """Base class for every specification-language error."""


class ParseError(FormulaError):
    def __init__(self, message: str, position: int, expected: frozenset[str] = frozenset()):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += " (expected: " + ", ".join(sorted(expected)) + ")"
        super().__init__(detail)


class IntervalError(FormulaError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class ProbabilityError(FormulaError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class EvaluationError(ValueError):
    """Base class for expression evaluation failures."""


class UnboundVariableError(EvaluationError):
    pass


class NumericDomainError(EvaluationError):
    pass


class Comparison(Enum):
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="
    EQ = "=="
    NE = "!="


PROB_COMPARISONS = frozenset({Comparison.LT, Comparison.LE, Comparison.GT, Comparison.GE})

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1, "min": 2, "max": 2}

KEYWORDS = frozenset({
    "P", "always", "eventually", "until", "since", "release", "historically",
    "once", "next", "not", "and", "or", "implies", "inf", "true", "false",
}) | frozenset(FUNCTIONS)


# --------------------------------------------------------------------------
# Abstract syntax
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise FormulaError("numeric constants must be finite")


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Expression", ...]

    def __post_init__(self):
        arity = FUNCTIONS.get(self.fn)
        if arity is None:
            raise FormulaError(f"unknown function '{self.fn}'")
        if len(self.args) != arity:
            raise FormulaError(f"function '{self.fn}' takes exactly {arity} argument(s)")


Expression = Union[Var, Const, BinOp, Call]


@dataclass(frozen=True)
class Interval:
    """Temporal interval [lower, upper]; ``upper is None`` means unbounded."""
    lower: float
    upper: float | None

    def __post_init__(self):
        if not math.isfinite(self.lower) or self.lower < 0.0:
            raise IntervalError("interval lower bound must be finite and non-negative")
        if self.upper is not None:
            if not math.isfinite(self.upper):
                raise IntervalError("bounded interval upper bound must be finite")
            if self.upper < self.lower:
                raise IntervalError("interval upper bound must not be below the lower bound")

    @property
    def bounded(self) -> bool:
        return self.upper is not None


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Bottom:
    pass


@dataclass(frozen=True)
class Predicate:
    left: Expression
    comparison: Comparison
    right: Expression


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Always:
    interval: Interval
    child: "Formula"


@dataclass(frozen=True)
class Eventually:
    interval: Interval
    child: "Formula"


@dataclass(frozen=True)
class Until:
    interval: Interval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    child: "Formula"


@dataclass(frozen=True)
class Historically:
    interval: Interval
    child: "Formula"


@dataclass(frozen=True)
class Once:
    interval: Interval
    child: "Formula"


@dataclass(frozen=True)
class Since:
    interval: Interval
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Prob:
    comparison: Comparison
    threshold: float
    child: "Formula"

    def __post_init__(self):
        if self.comparison not in PROB_COMPARISONS:
            raise ProbabilityError("probability comparison must be one of < <= > >=")
        if not 0.0 <= self.threshold <= 1.0:
            raise ProbabilityError("probability threshold must lie in [0, 1]")


Formula = Union[Top, Bottom, Predicate, Not, And, Or, Implies,
                Always, Eventually, Until, Next, Historically, Once, Since, Prob]

_BINARY_FORMULAS = {And: "and", Or: "or", Implies: "implies"}
_UNARY_TEMPORAL = {Always: "always", Eventually: "eventually",
                   Historically: "historically", Once: "once"}


def _expr_children(f: Formula) -> Iterator[Formula]:
    if isinstance(f, (Not, Always, Eventually, Historically, Once, Next, Prob)):
        yield f.child
    elif isinstance(f, (And, Or, Implies, Until, Since)):
        yield f.left
        yield f.right


def free_variables(f: Formula) -> frozenset[str]:
    """Names of all signal variables referenced anywhere in the formula."""
    names: set[str] = set()

    def walk_expr(e: Expression) -> None:
        if isinstance(e, Var):
            names.add(e.name)
        elif isinstance(e, BinOp):
            walk_expr(e.left)
            walk_expr(e.right)
        elif isinstance(e, Call):
            for a in e.args:
                walk_expr(a)

    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Predicate):
            walk_expr(node.left)
            walk_expr(node.right)
        else:
            stack.extend(_expr_children(node))
    return frozenset(names)


def contains_prob(f: Formula) -> bool:
    stack = [f]
    while stack:
        node = stack.pop()
        if isinstance(node, Prob):
            return True
        stack.extend(_expr_children(node))
    return False


# --------------------------------------------------------------------------
# Tokenizer
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|==|!=|[<>()\[\],+\-*/])"
)

_COMPARISON_TOKENS = {"<": Comparison.LT, "<=": Comparison.LE, ">": Comparison.GT,
                      ">=": Comparison.GE, "==": Comparison.EQ, "!=": Comparison.NE}


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | "op" | "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

class _Reinterpret(Exception):
    """Internal signal: a parenthesized group must be re-read as an expression."""


_MAX_NESTING = 200


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0
        self.depth = 0
        # Deepest failure seen, kept so backtracking reports the most
        # informative error rather than the last attempted branch.
        self.best_error: ParseError | None = None

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        if tok.kind != "end":
            self.index += 1
        return tok

    def _note(self, err: ParseError) -> None:
        if self.best_error is None or err.position >= self.best_error.position:
            self.best_error = err

    def error(self, message: str, expected: frozenset[str] = frozenset()) -> ParseError:
        err = ParseError(message, self.peek().pos, expected)
        self._note(err)
        return err

    def expect_op(self, op: str) -> _Token:
        tok = self.peek()
        if tok.kind == "op" and tok.text == op:
            return self.advance()
        raise self.error(f"found {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
                         frozenset({repr(op)}))

    # ---- formulas ----------------------------------------------------

    def parse(self) -> Formula:
        f = self.formula()
        tok = self.peek()
        if tok.kind != "end":
            raise self.error(f"unexpected trailing input {tok.text!r}")
        return f

    def formula(self) -> Formula:
        # Bounded nesting keeps pathological inputs from overrunning the
        # interpreter stack; they get a positioned error instead.
        self.depth += 1
        try:
            if self.depth > _MAX_NESTING:
                raise self.error(f"nesting deeper than {_MAX_NESTING} levels")
            return self._formula()
        finally:
            self.depth -= 1

    def _formula(self) -> Formula:
        tok = self.peek()
        if tok.kind == "ident":
            if tok.text == "P":
                return self._prob()
            if tok.text in _UNARY_TEMPORAL.values():
                return self._unary_temporal(tok.text)
            if tok.text == "next":
                self.advance()
                return Next(self._parenthesized())
            if tok.text == "not":
                self.advance()
                return Not(self._parenthesized())
            if tok.text == "true":
                self.advance()
                return Top()
            if tok.text == "false":
                self.advance()
                return Bottom()
        if tok.kind == "op" and tok.text == "(":
            return self._paren_or_predicate()
        return self._predicate()

    def _prob(self) -> Formula:
        self.advance()  # P
        tok = self.peek()
        if tok.kind != "op" or tok.text not in _COMPARISON_TOKENS:
            raise self.error("probability operator needs a comparison",
                             frozenset({"<", "<=", ">", ">="}))
        cmp = _COMPARISON_TOKENS[tok.text]
        if cmp not in PROB_COMPARISONS:
            raise self.error("probability comparison cannot be == or !=",
                             frozenset({"<", "<=", ">", ">="}))
        self.advance()
        threshold_pos = self.peek().pos
        threshold = self._signed_number("probability threshold")
        child = self._parenthesized()
        try:
            return Prob(cmp, threshold, child)
        except ProbabilityError as exc:
            raise ProbabilityError(str(exc), threshold_pos) from None

    def _unary_temporal(self, keyword: str) -> Formula:
        self.advance()
        interval = self._interval()
        child = self._parenthesized()
        ctor = {v: k for k, v in _UNARY_TEMPORAL.items()}[keyword]
        return ctor(interval, child)

    def _parenthesized(self) -> Formula:
        self.expect_op("(")
        f = self.formula()
        self.expect_op(")")
        return f

    def _paren_or_predicate(self) -> Formula:
        start = self.index
        try:
            return self._paren_formula()
        except _Reinterpret:
            self.index = start
        except ParseError as exc:
            self._note(exc)
            self.index = start
        try:
            return self._predicate()
        except ParseError as exc:
            # Surface whichever attempt progressed the furthest.
            self._note(exc)
            raise self.best_error from None

    def _paren_formula(self) -> Formula:
        self.expect_op("(")
        f = self.formula()
        self.expect_op(")")
        tok = self.peek()
        if tok.kind == "ident" and tok.text in ("and", "or", "implies"):
            self.advance()
            right = self._parenthesized()
            ctor = {"and": And, "or": Or, "implies": Implies}[tok.text]
            return ctor(f, right)
        if tok.kind == "ident" and tok.text in ("until", "since"):
            self.advance()
            interval = self._interval()
            right = self._parenthesized()
            return (Until if tok.text == "until" else Since)(interval, f, right)
        if tok.kind == "ident" and tok.text == "release":
            raise self.error("the release operator has no defined robustness semantics "
                             "and is not supported")
        if tok.kind == "op" and (tok.text in _COMPARISON_TOKENS or tok.text in "+-*/"):
            # "(x + 1) > 0": the group was an arithmetic operand, not a formula.
            raise _Reinterpret()
        return f

    def _predicate(self) -> Formula:
        left = self._expression()
        tok = self.peek()
        if tok.kind != "op" or tok.text not in _COMPARISON_TOKENS:
            raise self.error("predicate needs a comparison operator",
                             frozenset(_COMPARISON_TOKENS))
        self.advance()
        right = self._expression()
        return Predicate(left, _COMPARISON_TOKENS[tok.text], right)

    # ---- intervals & numbers -----------------------------------------

    def _interval(self) -> Interval:
        open_pos = self.peek().pos
        self.expect_op("[")
        lower = self._signed_number("interval bound")
        self.expect_op(",")
        tok = self.peek()
        if tok.kind == "ident" and tok.text == "inf":
            self.advance()
            self.expect_op(")")
            upper: float | None = None
        else:
            upper = self._signed_number("interval bound")
            self.expect_op("]")
        try:
            return Interval(lower, upper)
        except IntervalError as exc:
            raise IntervalError(exc.args[0].split(" at position")[0], open_pos) from None

    def _signed_number(self, what: str) -> float:
        sign = 1.0
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            sign = -1.0
            tok = self.peek()
        if tok.kind != "number":
            raise self.error(f"{what} must be a number", frozenset({"number"}))
        self.advance()
        return sign * float(tok.text)

    # ---- expressions ---------------------------------------------------

    def _expression(self) -> Expression:
        expr = self._term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "+-":
                self.advance()
                expr = BinOp(tok.text, expr, self._term())
            else:
                return expr

    def _term(self) -> Expression:
        expr = self._factor()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in "*/":
                self.advance()
                expr = BinOp(tok.text, expr, self._factor())
            else:
                return expr

    def _factor(self) -> Expression:
        self.depth += 1
        try:
            if self.depth > _MAX_NESTING:
                raise self.error(f"nesting deeper than {_MAX_NESTING} levels")
            return self._factor_inner()
        finally:
            self.depth -= 1

    def _factor_inner(self) -> Expression:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            inner = self.peek()
            if inner.kind == "number":
                self.advance()
                return Const(-float(inner.text))
            return BinOp("-", Const(0.0), self._factor())
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            expr = self._expression()
            self.expect_op(")")
            return expr
        if tok.kind == "ident":
            if tok.text in FUNCTIONS:
                return self._call(tok.text)
            if tok.text in KEYWORDS:
                raise self.error(f"keyword {tok.text!r} cannot be used as a variable")
            self.advance()
            return Var(tok.text)
        raise self.error(f"found {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
                         frozenset({"number", "variable", "function", "'('"}))

    def _call(self, fn: str) -> Expression:
        call_pos = self.peek().pos
        self.advance()
        self.expect_op("(")
        args = [self._expression()]
        while self.peek().kind == "op" and self.peek().text == ",":
            self.advance()
            args.append(self._expression())
        self.expect_op(")")
        if len(args) != FUNCTIONS[fn]:
            raise ParseError(f"function '{fn}' takes exactly {FUNCTIONS[fn]} argument(s)",
                             call_pos)
        return Call(fn, tuple(args))


def parse_formula(text: str) -> Formula:
    """Parse concrete PrSTL syntax into an AST.

    Raises :class:`ParseError` (with position and expected-token set),
    :class:`IntervalError`, or :class:`ProbabilityError`.
    """
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Formatter (canonical form; parse(format(f)) is structurally f)
# --------------------------------------------------------------------------

def _format_number(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _format_expr(e: Expression, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(_format_expr(a) for a in e.args)})"
    prec = _PRECEDENCE[e.op]
    text = (f"{_format_expr(e.left, prec, False)} {e.op} "
            f"{_format_expr(e.right, prec, True)}")
    if prec < parent_prec or (prec == parent_prec and right_side):
        return f"({text})"
    return text


def _format_interval(i: Interval) -> str:
    if i.upper is None:
        return f"[{_format_number(i.lower)},inf)"
    return f"[{_format_number(i.lower)},{_format_number(i.upper)}]"


def format_formula(f: Formula) -> str:
    """Render the canonical concrete syntax for an AST."""
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Predicate):
        return f"{_format_expr(f.left)} {f.comparison.value} {_format_expr(f.right)}"
    if isinstance(f, Not):
        return f"not ({format_formula(f.child)})"
    if isinstance(f, (And, Or, Implies)):
        word = _BINARY_FORMULAS[type(f)]
        return f"({format_formula(f.left)}) {word} ({format_formula(f.right)})"
    if isinstance(f, (Always, Eventually, Historically, Once)):
        word = _UNARY_TEMPORAL[type(f)]
        return f"{word}{_format_interval(f.interval)}({format_formula(f.child)})"
    if isinstance(f, Next):
        return f"next({format_formula(f.child)})"
    if isinstance(f, (Until, Since)):
        word = "until" if isinstance(f, Until) else "since"
        return (f"({format_formula(f.left)}) {word}{_format_interval(f.interval)} "
                f"({format_formula(f.right)})")
    if isinstance(f, Prob):
        return (f"P{f.comparison.value}{_format_number(f.threshold)}"
                f"({format_formula(f.child)})")
    raise TypeError(f"not a formula node: {f!r}")


# --------------------------------------------------------------------------
# Expression evaluation
# --------------------------------------------------------------------------

def eval_expression(e: Expression, env: dict[str, float]) -> float:
    """Evaluate an arithmetic expression with every free variable bound in env."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(f"variable '{e.name}' is not bound") from None
    if isinstance(e, BinOp):
        left = eval_expression(e.left, env)
        right = eval_expression(e.right, env)
        if e.op == "+":
            out = left + right
        elif e.op == "-":
            out = left - right
        elif e.op == "*":
            out = left * right
        else:
            if right == 0.0:
                raise NumericDomainError("division by zero")
            out = left / right
        if not math.isfinite(out):
            raise NumericDomainError(f"non-finite result from '{e.op}'")
        return out
    if isinstance(e, Call):
        args = [eval_expression(a, env) for a in e.args]
        if e.fn == "log":
            if args[0] <= 0.0:
                raise NumericDomainError("log of a non-positive argument")
            return math.log(args[0])
        if e.fn == "sqrt":
            if args[0] < 0.0:
                raise NumericDomainError("sqrt of a negative argument")
            return math.sqrt(args[0])
        if e.fn == "exp":
            try:
                return math.exp(args[0])
            except OverflowError:
                raise NumericDomainError("exp overflow") from None
        if e.fn == "sin":
            return math.sin(args[0])
        if e.fn == "cos":
            return math.cos(args[0])
        if e.fn == "abs":
            return abs(args[0])
        if e.fn == "min":
            return min(args)
        return max(args)
    raise TypeError(f"not an expression node: {e!r}")


# --------------------------------------------------------------------------
# JSON form (documented serialization used by the CLI)
# --------------------------------------------------------------------------

def _expr_to_json(e: Expression) -> dict:
    if isinstance(e, Var):
        return {"kind": "variable", "name": e.name}
    if isinstance(e, Const):
        return {"kind": "constant", "value": e.value}
    if isinstance(e, BinOp):
        return {"kind": "binary", "op": e.op,
                "left": _expr_to_json(e.left), "right": _expr_to_json(e.right)}
    return {"kind": "call", "fn": e.fn, "args": [_expr_to_json(a) for a in e.args]}


def _interval_to_json(i: Interval) -> dict:
    return {"lower": i.lower, "upper": i.upper}


def formula_to_json(f: Formula) -> dict:
    if isinstance(f, Top):
        return {"kind": "top"}
    if isinstance(f, Bottom):
        return {"kind": "bottom"}
    if isinstance(f, Predicate):
        return {"kind": "predicate", "left": _expr_to_json(f.left),
                "comparison": f.comparison.value, "right": _expr_to_json(f.right)}
    if isinstance(f, Not):
        return {"kind": "not", "child": formula_to_json(f.child)}
    if isinstance(f, (And, Or, Implies)):
        return {"kind": _BINARY_FORMULAS[type(f)],
                "left": formula_to_json(f.left), "right": formula_to_json(f.right)}
    if isinstance(f, (Always, Eventually, Historically, Once)):
        return {"kind": _UNARY_TEMPORAL[type(f)],
                "interval": _interval_to_json(f.interval),
                "child": formula_to_json(f.child)}
    if isinstance(f, Next):
        return {"kind": "next", "child": formula_to_json(f.child)}
    if isinstance(f, (Until, Since)):
        return {"kind": "until" if isinstance(f, Until) else "since",
                "interval": _interval_to_json(f.interval),
                "left": formula_to_json(f.left), "right": formula_to_json(f.right)}
    if isinstance(f, Prob):
        return {"kind": "prob", "comparison": f.comparison.value,
                "threshold": f.threshold, "child": formula_to_json(f.child)}
    raise TypeError(f"not a formula node: {f!r}")


def _expr_from_json(d: dict) -> Expression:
    kind = d["kind"]
    if kind == "variable":
        return Var(d["name"])
    if kind == "constant":
        return Const(float(d["value"]))
    if kind == "binary":
        return BinOp(d["op"], _expr_from_json(d["left"]), _expr_from_json(d["right"]))
    if kind == "call":
        return Call(d["fn"], tuple(_expr_from_json(a) for a in d["args"]))
    raise FormulaError(f"unknown expression kind {kind!r}")


def formula_from_json(d: dict) -> Formula:
    kind = d["kind"]
    if kind == "top":
        return Top()
    if kind == "bottom":
        return Bottom()
    if kind == "predicate":
        return Predicate(_expr_from_json(d["left"]), Comparison(d["comparison"]),
                         _expr_from_json(d["right"]))
    if kind == "not":
        return Not(formula_from_json(d["child"]))
    if kind in ("and", "or", "implies"):
        ctor = {"and": And, "or": Or, "implies": Implies}[kind]
        return ctor(formula_from_json(d["left"]), formula_from_json(d["right"]))
    if kind in ("always", "eventually", "historically", "once"):
        ctor = {"always": Always, "eventually": Eventually,
                "historically": Historically, "once": Once}[kind]
        iv = Interval(float(d["interval"]["lower"]),
                      None if d["interval"]["upper"] is None else float(d["interval"]["upper"]))
        return ctor(iv, formula_from_json(d["child"]))
    if kind == "next":
        return Next(formula_from_json(d["child"]))
    if kind in ("until", "since"):
        iv = Interval(float(d["interval"]["lower"]),
                      None if d["interval"]["upper"] is None else float(d["interval"]["upper"]))
        ctor = Until if kind == "until" else Since
        return ctor(iv, formula_from_json(d["left"]), formula_from_json(d["right"]))
    if kind == "prob":
        return Prob(Comparison(d["comparison"]), float(d["threshold"]),
                    formula_from_json(d["child"]))
    raise FormulaError(f"unknown formula kind {kind!r}")


def formula_to_json_text(f: Formula, indent: int | None = None) -> str:
    return json.dumps(formula_to_json(f), indent=indent, sort_keys=True)
