"""
Parsers for the command-line mini-languages.

Function specs:

    spec := term (('+' | '-') term)*
    term := [number '*'] atom
    atom := power(p) | exp | plog(p) | linear(a, b) | log1p | log1psq
          | hariya(spec, r) | gen(h=spec, phi=spec)

Polynomial literals: signed terms "c*H{n1,n2}", "c*Hn", "c*x^n", "c*x1^a x2^b",
with c a real number or "(re,im)".
"""

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Tuple, Union
import logging
import re

from utils.custom_types import MonotonicityError, PolyBasis, SpecParseError, VerificationError
from utils.hermite import ComplexParam, CPoly, MultiIndex, iter_terms_sorted
from utils.scalarfn import (
    FnPair,
    ScalarFn,
    check_increasing,
    make_exp,
    make_generator,
    make_hariya_companion,
    make_linear,
    make_log1p,
    make_log1p_square,
    make_plog,
    make_power,
)

logger = logging.getLogger(__name__)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*^(),{}=]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    pos: int


def tokenize(text: str) -> List[Token]:
    tokens = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise SpecParseError(f"Unexpected character {text[pos:].lstrip()[:1]!r} at position {pos} in {text!r}")
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    return tokens


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def at(self, text: str) -> bool:
        token = self.peek()
        return token is not None and token.text == text

    def take(self) -> Token:
        token = self.peek()
        if token is None:
            raise SpecParseError(f"Unexpected end of input in {self.text!r}")
        self.index += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.take()
        if token.text != text:
            raise SpecParseError(f"Expected {text!r} at position {token.pos} in {self.text!r}, got {token.text!r}")
        return token

    def number(self) -> float:
        sign = 1.0
        while self.at("-") or self.at("+"):
            if self.take().text == "-":
                sign = -sign
        token = self.take()
        if token.kind != "num":
            raise SpecParseError(f"Expected a number at position {token.pos} in {self.text!r}, got {token.text!r}")
        return sign * float(token.text)

    def integer(self) -> int:
        value = self.number()
        if not value.is_integer():
            raise SpecParseError(f"Expected an integer in {self.text!r}, got {value:g}")
        return int(value)

    def done(self) -> bool:
        return self.index >= len(self.tokens)


# Function specs

Parsed = Union[ScalarFn, FnPair]


def _combine(left: Parsed, right: Parsed, sign: float, text: str) -> ScalarFn:
    if isinstance(left, FnPair) or isinstance(right, FnPair):
        raise SpecParseError(f"gen(...) cannot be combined arithmetically in {text!r}")
    return left + right if sign > 0 else left - right


def _parse_spec(cursor: _Cursor) -> Parsed:
    negate = False
    if cursor.at("-"):
        cursor.take()
        negate = True
    result = _parse_term(cursor)
    if negate:
        if isinstance(result, FnPair):
            raise SpecParseError(f"gen(...) cannot be negated in {cursor.text!r}")
        result = -result
    while cursor.at("+") or cursor.at("-"):
        sign = 1.0 if cursor.take().text == "+" else -1.0
        result = _combine(result, _parse_term(cursor), sign, cursor.text)
    return result


def _parse_term(cursor: _Cursor) -> Parsed:
    token = cursor.peek()
    if token is not None and token.kind == "num":
        scale = cursor.number()
        cursor.expect("*")
        atom = _parse_atom(cursor)
        if isinstance(atom, FnPair):
            raise SpecParseError(f"gen(...) cannot be scaled in {cursor.text!r}")
        return atom * scale
    return _parse_atom(cursor)


def _parse_atom(cursor: _Cursor) -> Parsed:
    token = cursor.take()
    if token.kind != "name":
        raise SpecParseError(f"Expected a function name at position {token.pos} in {cursor.text!r}, got {token.text!r}")
    name = token.text
    if name == "exp":
        return make_exp()
    if name == "log1p":
        return make_log1p()
    if name == "log1psq":
        return make_log1p_square()
    if name in ("power", "plog"):
        cursor.expect("(")
        p = cursor.number()
        cursor.expect(")")
        return make_power(p) if name == "power" else make_plog(p)
    if name == "linear":
        cursor.expect("(")
        a = cursor.number()
        cursor.expect(",")
        b = cursor.number()
        cursor.expect(")")
        return make_linear(a, b)
    if name == "hariya":
        cursor.expect("(")
        base = _parse_spec(cursor)
        cursor.expect(",")
        r = cursor.number()
        cursor.expect(")")
        if isinstance(base, FnPair):
            raise SpecParseError(f"hariya needs a single function, got gen(...) in {cursor.text!r}")
        return make_hariya_companion(base, r)
    if name == "gen":
        cursor.expect("(")
        parts = {}
        for key in ("h", "phi"):
            cursor.expect(key)
            cursor.expect("=")
            part = _parse_spec(cursor)
            if isinstance(part, FnPair):
                raise SpecParseError(f"gen(...) cannot be nested in {cursor.text!r}")
            parts[key] = part
            if key == "h":
                cursor.expect(",")
        cursor.expect(")")
        return make_generator(parts["h"], parts["phi"])
    raise SpecParseError(f"Unknown function {name!r} at position {token.pos} in {cursor.text!r}")


def parse_function_spec(text: str) -> Parsed:
    """
    Parse a function spec into a ScalarFn, or an FnPair for gen(...).

    Raises:
        SpecParseError: malformed spec or invalid parameters
    """
    cursor = _Cursor(text)
    try:
        result = _parse_spec(cursor)
    except SpecParseError:
        raise
    except VerificationError as e:
        # builder rejected a parameter, e.g. power(-1)
        raise SpecParseError(f"Invalid function spec {text!r}: {e}") from e
    if not cursor.done():
        token = cursor.peek()
        raise SpecParseError(f"Trailing input at position {token.pos} in {text!r}: {token.text!r}")
    return result


def parse_pair(P_text: str, Q_text: Optional[str] = None, assume_growth: bool = False) -> FnPair:
    """
    Resolve --P/--Q into an FnPair. Q defaults to P; gen(...) supplies the whole pair.
    P and Q are spot-checked for monotonicity.
    """
    P = parse_function_spec(P_text)
    if isinstance(P, FnPair):
        if Q_text is not None:
            raise SpecParseError("--Q cannot be combined with --P gen(...)")
        pair = P
    else:
        Q = P if Q_text is None else parse_function_spec(Q_text)
        if isinstance(Q, FnPair):
            raise SpecParseError("--Q cannot be gen(...)")
        pair = FnPair.from_PQ(P, Q)
    if assume_growth:
        pair = replace(pair, P=pair.P.declare_growth(), F=pair.F.declare_growth())

    try:
        check_increasing(pair.P)
        check_increasing(pair.Q)
    except MonotonicityError as e:
        raise SpecParseError(f"Rejected pair: {e}") from e
    logger.info(f"Parsed pair P = {pair.P.name}, Q = {pair.Q.name}, F = {pair.F.name}")
    return pair


def parse_complex_param(text: str) -> ComplexParam:
    return ComplexParam.parse(text)


# Polynomial literals

_HERMITE_NAME = re.compile(r"H(\d+)$")
_VARIABLE_NAME = re.compile(r"x(\d*)$")


def _parse_coefficient(cursor: _Cursor) -> Optional[complex]:
    token = cursor.peek()
    if token is None:
        return None
    if token.text == "(":
        cursor.take()
        re_ = cursor.number()
        cursor.expect(",")
        im_ = cursor.number()
        cursor.expect(")")
        return complex(re_, im_)
    if token.kind == "num":
        return complex(cursor.number())
    return None


def _parse_hermite_factor(cursor: _Cursor) -> MultiIndex:
    token = cursor.take()
    if token.text == "H":
        cursor.expect("{")
        degrees = [cursor.integer()]
        while cursor.at(","):
            cursor.take()
            degrees.append(cursor.integer())
        cursor.expect("}")
    else:
        degrees = [int(_HERMITE_NAME.match(token.text).group(1))]
    if any(d < 0 for d in degrees):
        raise SpecParseError(f"Negative Hermite degree in {cursor.text!r}")
    return tuple(degrees)


def _parse_monomial(cursor: _Cursor) -> Dict[int, int]:
    powers: Dict[int, int] = {}
    while True:
        token = cursor.peek()
        if token is None or token.kind != "name" or not _VARIABLE_NAME.match(token.text):
            break
        cursor.take()
        digits = _VARIABLE_NAME.match(token.text).group(1)
        var = int(digits) if digits else 1
        if var < 1:
            raise SpecParseError(f"Variables are numbered from 1, got {token.text!r}")
        exponent = 1
        if cursor.at("^"):
            cursor.take()
            exponent = cursor.integer()
            if exponent < 0:
                raise SpecParseError(f"Negative exponent in {cursor.text!r}")
        powers[var] = powers.get(var, 0) + exponent
        if cursor.at("*"):
            cursor.take()
    if not powers:
        token = cursor.peek()
        where = "end of input" if token is None else f"{token.text!r} at position {token.pos}"
        raise SpecParseError(f"Expected a monomial or Hermite term, got {where} in {cursor.text!r}")
    return powers


def _is_hermite_token(token: Optional[Token]) -> bool:
    return token is not None and token.kind == "name" and (token.text == "H" or bool(_HERMITE_NAME.match(token.text)))


def parse_polynomial(text: str, dimension: Optional[int] = None) -> CPoly:
    """
    Parse a polynomial literal into a CPoly in the Hermite basis.

    Args:
        text: e.g. "1 + 0.5*H1", "(0,1)*H{1,1} - x1^2 x2"
        dimension: number of variables; defaults to the largest index used

    Raises:
        SpecParseError: malformed literal or terms needing more than `dimension` variables
    """
    cursor = _Cursor(text)
    if cursor.done():
        raise SpecParseError("Empty polynomial literal")
    hermite_terms: List[Tuple[MultiIndex, complex]] = []
    monomial_terms: List[Tuple[Dict[int, int], complex]] = []

    first = True
    while not cursor.done():
        sign = 1.0
        signed = False
        while cursor.at("+") or cursor.at("-"):
            signed = True
            if cursor.take().text == "-":
                sign = -sign
        if not signed and not first:
            token = cursor.peek()
            raise SpecParseError(f"Expected '+' or '-' at position {token.pos} in {text!r}, got {token.text!r}")
        first = False

        coef = _parse_coefficient(cursor)
        if coef is not None:
            if cursor.at("*"):
                cursor.take()
            elif cursor.done() or cursor.at("+") or cursor.at("-"):
                hermite_terms.append(((), sign * coef))
                continue
        else:
            coef = 1.0
        if _is_hermite_token(cursor.peek()):
            hermite_terms.append((_parse_hermite_factor(cursor), sign * coef))
        else:
            monomial_terms.append((_parse_monomial(cursor), sign * coef))

    needed = max(
        [len(alpha) for alpha, _ in hermite_terms] + [max(powers) for powers, _ in monomial_terms] + [1]
    )
    if dimension is None:
        dimension = needed
    elif dimension < needed:
        raise SpecParseError(f"Literal {text!r} needs {needed} variables, but dimension is {dimension}")

    def pad(alpha: MultiIndex) -> MultiIndex:
        return tuple(alpha) + (0,) * (dimension - len(alpha))

    hermite: Dict[MultiIndex, complex] = {}
    for alpha, c in hermite_terms:
        key = pad(alpha)
        hermite[key] = hermite.get(key, 0) + c
    monomial: Dict[MultiIndex, complex] = {}
    for powers, c in monomial_terms:
        key = tuple(powers.get(j + 1, 0) for j in range(dimension))
        monomial[key] = monomial.get(key, 0) + c

    result = CPoly(dimension, hermite, PolyBasis.HERMITE)
    if monomial:
        result = result + CPoly(dimension, monomial, PolyBasis.MONOMIAL).to_hermite()
    return result


def _format_coefficient(c: complex) -> str:
    if c.imag == 0:
        return repr(float(c.real))
    return f"({float(c.real)!r},{float(c.imag)!r})"


def format_poly(p: CPoly) -> str:
    """Literal that parse_polynomial reads back to the same polynomial."""
    if p.is_zero():
        return "0"
    parts = []
    for alpha, c in iter_terms_sorted(p):
        if p.basis == PolyBasis.HERMITE:
            factor = "H{" + ",".join(str(n) for n in alpha) + "}"
        else:
            factor = " ".join(f"x{j + 1}^{n}" for j, n in enumerate(alpha) if n)
        coef = _format_coefficient(c)
        parts.append(f"{coef}*{factor}" if factor else coef)
    return " + ".join(parts)
