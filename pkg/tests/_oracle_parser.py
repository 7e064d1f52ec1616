"""Independent expression-parser oracle used to check the package parser.

Deliberately a different algorithm (precedence climbing over a token list,
producing S-expression strings) from the package's recursive-descent parser.
The frozen tables below were derived by hand from the published grammar and
are asserted against BOTH parsers.
"""

from __future__ import annotations

import math

_FUNCS = {
    "sin": 1, "cos": 1, "tan": 1, "cot": 1,
    "exp": 1, "ln": 1, "sqrt": 1, "abs": 1,
    "pow": 2,
}

_BINARY = {"+": (10, "L"), "-": (10, "L"), "*": (20, "L"), "/": (20, "L"), "^": (40, "R")}
_UNARY_BP = 30


class OracleParseError(Exception):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"{reason} at byte {offset}")
        self.offset = offset
        self.reason = reason


class OracleNonFinite(Exception):
    pass


class OracleUnbound(Exception):
    pass


def _tokenize(src: str):
    toks = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c in " \t\n\r":
            i += 1
            continue
        if c in "+-*/^(),":
            toks.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            start = i
            while i < n and src[i].isdigit():
                i += 1
            if i < n and src[i] == ".":
                i += 1
                while i < n and src[i].isdigit():
                    i += 1
            if src[start:i] == ".":
                raise OracleParseError(start, "malformed number")
            if i < n and src[i] in "eE":
                j = i + 1
                if j < n and src[j] in "+-":
                    j += 1
                if j >= n or not src[j].isdigit():
                    raise OracleParseError(start, "malformed number")
                i = j
                while i < n and src[i].isdigit():
                    i += 1
            toks.append(("num", src[start:i], start))
            continue
        if c.isalpha() or c == "_":
            start = i
            while i < n and (src[i].isalnum() or src[i] == "_"):
                i += 1
            toks.append(("ident", src[start:i], start))
            continue
        raise OracleParseError(i, "unexpected character")
    toks.append(("end", "", n))
    return toks


class _Climber:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def advance(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def parse(self):
        node = self.expr(0)
        kind, _, off = self.peek()
        if kind != "end":
            raise OracleParseError(off, "unexpected token")
        return node

    def expr(self, min_bp):
        node = self.prefix()
        while True:
            kind, _, _ = self.peek()
            if kind not in _BINARY:
                break
            bp, assoc = _BINARY[kind]
            if bp < min_bp:
                break
            self.advance()
            rhs = self.expr(bp + 1 if assoc == "L" else bp)
            node = (kind, node, rhs)
        return node

    def prefix(self):
        kind, text, off = self.advance()
        if kind == "-":
            return ("neg", self.expr(_UNARY_BP))
        if kind == "num":
            return ("num", float(text))
        if kind == "ident":
            if self.peek()[0] != "(":
                return ("var", text)
            if text not in _FUNCS:
                raise OracleParseError(off, "unknown function")
            self.advance()
            args = [self.expr(0)]
            while self.peek()[0] == ",":
                self.advance()
                args.append(self.expr(0))
            k2, _, off2 = self.advance()
            if k2 != ")":
                raise OracleParseError(off2, "expected ')'")
            if len(args) != _FUNCS[text]:
                raise OracleParseError(off, "wrong argument count")
            return ("call", text, args)
        if kind == "(":
            node = self.expr(0)
            k2, _, off2 = self.advance()
            if k2 != ")":
                raise OracleParseError(off2, "expected ')'")
            return node
        if kind == "end":
            raise OracleParseError(off, "unexpected end of input")
        raise OracleParseError(off, "unexpected token")


def oracle_sexpr(src: str) -> str:
    return _render(_Climber(_tokenize(src)).parse())


def _render(node) -> str:
    tag = node[0]
    if tag == "num":
        return repr(node[1])
    if tag == "var":
        return node[1]
    if tag == "neg":
        return f"(neg {_render(node[1])})"
    if tag == "call":
        args = " ".join(_render(a) for a in node[2])
        return f"(call {node[1]} {args})"
    return f"({tag} {_render(node[1])} {_render(node[2])})"


def oracle_eval(src: str, scope: dict[str, float]) -> float:
    return _eval(_Climber(_tokenize(src)).parse(), scope)


_MATH1 = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "ln": math.log, "sqrt": math.sqrt, "abs": abs,
}


def _check(v: float) -> float:
    if not math.isfinite(v):
        raise OracleNonFinite(repr(v))
    return v


def _eval(node, scope) -> float:
    tag = node[0]
    try:
        if tag == "num":
            return _check(node[1])
        if tag == "var":
            if node[1] not in scope:
                raise OracleUnbound(node[1])
            return _check(scope[node[1]])
        if tag == "neg":
            return _check(-_eval(node[1], scope))
        if tag == "call":
            args = [_eval(a, scope) for a in node[2]]
            if node[1] == "pow":
                return _check(math.pow(args[0], args[1]))
            if node[1] == "cot":
                return _check(math.cos(args[0]) / math.sin(args[0]))
            return _check(_MATH1[node[1]](args[0]))
        lhs = _eval(node[1], scope)
        rhs = _eval(node[2], scope)
        if tag == "+":
            return _check(lhs + rhs)
        if tag == "-":
            return _check(lhs - rhs)
        if tag == "*":
            return _check(lhs * rhs)
        if tag == "/":
            return _check(lhs / rhs)
        return _check(math.pow(lhs, rhs))
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise OracleNonFinite(str(exc)) from exc


# Hand-derived from the grammar: (source, canonical S-expression).
PRECEDENCE_CASES = [
    ("x1", "x1"),
    ("2", "2.0"),
    ("2.5", "2.5"),
    (".5", "0.5"),
    ("2.", "2.0"),
    ("1e3", "1000.0"),
    ("1.5e-3", "0.0015"),
    ("2E+2", "200.0"),
    ("-x1", "(neg x1)"),
    ("--x1", "(neg (neg x1))"),
    ("1+2", "(+ 1.0 2.0)"),
    ("1-2", "(- 1.0 2.0)"),
    ("1+2+3", "(+ (+ 1.0 2.0) 3.0)"),
    ("1-2-3", "(- (- 1.0 2.0) 3.0)"),
    ("1-2+3", "(+ (- 1.0 2.0) 3.0)"),
    ("1+2*3", "(+ 1.0 (* 2.0 3.0))"),
    ("1*2+3", "(+ (* 1.0 2.0) 3.0)"),
    ("1*2*3", "(* (* 1.0 2.0) 3.0)"),
    ("1/2/3", "(/ (/ 1.0 2.0) 3.0)"),
    ("1/2*3", "(* (/ 1.0 2.0) 3.0)"),
    ("1+2/3-4", "(- (+ 1.0 (/ 2.0 3.0)) 4.0)"),
    ("2^3", "(^ 2.0 3.0)"),
    ("2^3^2", "(^ 2.0 (^ 3.0 2.0))"),
    ("2^3*4", "(* (^ 2.0 3.0) 4.0)"),
    ("2*3^4", "(* 2.0 (^ 3.0 4.0))"),
    ("-x1^2", "(neg (^ x1 2.0))"),
    ("(-x1)^2", "(^ (neg x1) 2.0)"),
    ("-x1*x2", "(* (neg x1) x2)"),
    ("-(x1*x2)", "(neg (* x1 x2))"),
    ("2^-3", "(^ 2.0 (neg 3.0))"),
    ("2^-3^2", "(^ 2.0 (neg (^ 3.0 2.0)))"),
    ("-2^-3", "(neg (^ 2.0 (neg 3.0)))"),
    ("2*-3", "(* 2.0 (neg 3.0))"),
    ("2--3", "(- 2.0 (neg 3.0))"),
    ("2+-3", "(+ 2.0 (neg 3.0))"),
    ("sin(x1)", "(call sin x1)"),
    ("sin(x1)^2", "(^ (call sin x1) 2.0)"),
    ("-sin(x1)*cos(x1)", "(* (neg (call sin x1)) (call cos x1))"),
    ("cot(x1)", "(call cot x1)"),
    ("pow(x1, 2)", "(call pow x1 2.0)"),
    ("sqrt(abs(x1))", "(call sqrt (call abs x1))"),
    ("exp(-x1^2/2)", "(call exp (/ (neg (^ x1 2.0)) 2.0))"),
    ("ln(x1/x2)", "(call ln (/ x1 x2))"),
    ("(1+2)*3", "(* (+ 1.0 2.0) 3.0)"),
    ("((x1))", "x1"),
    ("tan(x1+x2*x3)", "(call tan (+ x1 (* x2 x3)))"),
    ("x1 * ( x2 + 3 ) ^ 2", "(* x1 (^ (+ x2 3.0) 2.0))"),
    ("u1-u2^2*t", "(- u1 (* (^ u2 2.0) t))"),
    ("pow(2, pow(2, 3))", "(call pow 2.0 (call pow 2.0 3.0))"),
    ("1e2^.5", "(^ 100.0 0.5)"),
]

# Hand-derived: (source, byte offset where the parse error is reported).
ERROR_CASES = [
    ("", 0),
    ("sin(", 4),
    ("(1+2", 4),
    ("1 + ", 4),
    ("2 +* 3", 3),
    ("foo(1)", 0),
    ("pow(1)", 0),
    ("sin(1, 2)", 0),
    ("pow(1,)", 6),
    ("1.2.3", 3),
    ("1e+", 0),
    ("x1 x2", 3),
    (")", 0),
    ("1 + )", 4),
    ("sin 1", 4),
    ("2^", 2),
    ("1,2", 1),
    ("1 # 2", 2),
    (".", 0),
]
