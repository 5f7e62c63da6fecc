"""Tokenizer, recursive-descent parser and stack-program compiler for
generator expressions.

Grammar (whitespace insignificant)::

    expression     := additive
    additive       := multiplicative (("+" | "-") multiplicative)*
    multiplicative := unary (("*" | "/") unary)*
    unary          := ("-")? power
    power          := atom ("^" atom)?
    atom           := "z" | number ["i"] | "i" | "pi"
                    | func "(" expression ")" | "(" expression ")"
    func           := "log" | "exp" | "sqrt"

``^`` binds tighter than unary minus, so ``-z^2`` is ``-(z^2)``.  All
powers, logarithms and square roots use the principal branch.

Expressions are held as nested tuples and compiled into a postfix
program that both kernel backends execute.
"""
from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError

FUNCTIONS = ("log", "exp", "sqrt")

# opcodes, shared with the compiled and the pure-Python kernels
OP_Z = 0
OP_CONST = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POW = 6
OP_NEG = 7
OP_LOG = 8
OP_EXP = 9
OP_SQRT = 10
OP_IPOW = 11

_MAX_IPOW = 16

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_PUNCT = set("+-*/^(),=")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "eof"
    value: object
    pos: int


def tokenize(text: str, offset: int = 0) -> list[Token]:
    """Split ``text`` into tokens; positions are reported as ``offset + index``."""
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        m = _NUMBER.match(text, i)
        if m:
            value = complex(float(m.group(0)), 0.0)
            j = m.end()
            if j < n and text[j] == "i" and not (j + 1 < n and (text[j + 1].isalnum() or text[j + 1] == "_")):
                value = complex(0.0, value.real)
                j += 1
            tokens.append(Token("num", value, offset + i))
            i = j
            continue
        m = _IDENT.match(text, i)
        if m:
            tokens.append(Token("ident", m.group(0), offset + i))
            i = m.end()
            continue
        if ch in _PUNCT:
            tokens.append(Token("op", ch, offset + i))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", offset + i,
                         ("z", "number", "(", "-") + FUNCTIONS)
    tokens.append(Token("eof", None, offset + n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def fail(self, expected):
        t = self.tok
        what = "end of input" if t.kind == "eof" else f"token {t.value!r}"
        raise ParseError(f"unexpected {what}", t.pos, expected)

    def is_op(self, *ops) -> bool:
        return self.tok.kind == "op" and self.tok.value in ops

    def expect_op(self, op):
        if not self.is_op(op):
            self.fail((op,))
        return self.advance()

    def expression(self):
        node = self.multiplicative()
        while self.is_op("+", "-"):
            op = self.advance().value
            node = ("add" if op == "+" else "sub", node, self.multiplicative())
        return node

    def multiplicative(self):
        node = self.unary()
        while self.is_op("*", "/"):
            op = self.advance().value
            node = ("mul" if op == "*" else "div", node, self.unary())
        return node

    def unary(self):
        if self.is_op("-"):
            self.advance()
            return ("neg", self.power())
        return self.power()

    def power(self):
        node = self.atom()
        if self.is_op("^"):
            self.advance()
            node = ("pow", node, self.atom())
        return node

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return ("const", t.value)
        if t.kind == "ident":
            name = t.value
            if name == "z":
                self.advance()
                return ("z",)
            if name == "i":
                self.advance()
                return ("const", 1j)
            if name == "pi":
                self.advance()
                return ("const", complex(math.pi))
            if name in FUNCTIONS:
                self.advance()
                self.expect_op("(")
                arg = self.expression()
                self.expect_op(")")
                return ("call", name, arg)
            raise ParseError(f"unknown identifier {name!r}", t.pos, ("z", "i", "pi") + FUNCTIONS)
        if self.is_op("("):
            self.advance()
            node = self.expression()
            self.expect_op(")")
            return node
        self.fail(("z", "number", "(") + FUNCTIONS)


def parse_expression(text: str, offset: int = 0):
    """Parse a complete expression string into an AST."""
    p = _Parser(tokenize(text, offset))
    node = p.expression()
    if p.tok.kind != "eof":
        p.fail(("+", "-", "*", "/", "^", "end of input"))
    return node


# -- AST utilities -----------------------------------------------------------

def uses_z(node) -> bool:
    tag = node[0]
    if tag == "z":
        return True
    if tag == "const":
        return False
    if tag == "call":
        return uses_z(node[2])
    return any(uses_z(child) for child in node[1:])


def substitute_z(node, replacement):
    """Return ``node`` with every occurrence of ``z`` replaced by ``replacement``."""
    tag = node[0]
    if tag == "z":
        return replacement
    if tag == "const":
        return node
    if tag == "call":
        return ("call", node[1], substitute_z(node[2], replacement))
    return (tag,) + tuple(substitute_z(child, replacement) for child in node[1:])


def eval_constant(node) -> complex:
    if uses_z(node):
        raise ValueError("expression depends on z")
    return complex(eval_array(compile_ast(node), np.zeros(1, dtype=complex))[0])


def format_number(c: complex) -> str:
    c = complex(c)
    re_, im = c.real, c.imag
    if im == 0.0:
        return repr(re_) if re_ >= 0 else f"(-{-re_!r})"
    if re_ == 0.0:
        return f"{im!r}i" if im >= 0 else f"(-{-im!r}i)"
    sign = "+" if im >= 0 else "-"
    return f"({re_!r}{sign}{abs(im)!r}i)"


_BINARY_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def to_text(node) -> str:
    """Fully parenthesised text that parses back to an equivalent tree."""
    tag = node[0]
    if tag == "z":
        return "z"
    if tag == "const":
        return format_number(node[1])
    if tag == "neg":
        return f"(-{to_text(node[1])})"
    if tag == "call":
        return f"{node[1]}({to_text(node[2])})"
    return f"({to_text(node[1])}{_BINARY_SYMBOL[tag]}{to_text(node[2])})"


# -- compilation -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Program:
    """Postfix program: ``code`` holds (opcode, argument) pairs, ``consts`` the literals."""

    code: np.ndarray
    consts: np.ndarray

    def __len__(self):
        return len(self.code) // 2


def compile_ast(node) -> Program:
    code: list[int] = []
    consts: list[complex] = []

    def const_index(value):
        consts.append(complex(value))
        return len(consts) - 1

    def emit(n):
        tag = n[0]
        if tag == "z":
            code.extend((OP_Z, 0))
        elif tag == "const":
            code.extend((OP_CONST, const_index(n[1])))
        elif tag == "neg":
            emit(n[1])
            code.extend((OP_NEG, 0))
        elif tag == "call":
            emit(n[2])
            code.extend(({"log": OP_LOG, "exp": OP_EXP, "sqrt": OP_SQRT}[n[1]], 0))
        elif tag == "pow" and n[2][0] == "const" and _small_integer(n[2][1]) is not None:
            emit(n[1])
            code.extend((OP_IPOW, _small_integer(n[2][1])))
        else:
            emit(n[1])
            emit(n[2])
            code.extend(({"add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL,
                          "div": OP_DIV, "pow": OP_POW}[tag], 0))

    emit(node)
    return Program(np.asarray(code, dtype=np.int64), np.asarray(consts, dtype=np.complex128))


def _small_integer(c: complex):
    c = complex(c)
    if c.imag == 0.0 and c.real == int(c.real) and abs(c.real) <= _MAX_IPOW:
        return int(c.real)
    return None


def principal_pow(base, expo):
    """``base ** expo`` on the principal branch, ``0 ** expo = 0`` for Re expo > 0."""
    if base == 0:
        return 0j if expo.real > 0 else complex(math.inf, 0.0)
    return cmath.exp(expo * cmath.log(base))


def integer_pow(base, n: int):
    result = 1 + 0j
    b = base
    m = abs(n)
    while m:
        if m & 1:
            result *= b
        b *= b
        m >>= 1
    return 1.0 / result if n < 0 else result


def eval_array(program: Program, z):
    """Vectorised evaluation of ``program`` on a complex ndarray."""
    z = np.asarray(z, dtype=np.complex128)
    stack = []
    code = program.code
    consts = program.consts
    with np.errstate(all="ignore"):
        for k in range(0, len(code), 2):
            op = code[k]
            arg = code[k + 1]
            if op == OP_Z:
                stack.append(z)
            elif op == OP_CONST:
                stack.append(np.full(z.shape, consts[arg], dtype=np.complex128))
            elif op == OP_NEG:
                stack.append(-stack.pop())
            elif op == OP_LOG:
                stack.append(np.log(stack.pop()))
            elif op == OP_EXP:
                stack.append(np.exp(stack.pop()))
            elif op == OP_SQRT:
                stack.append(np.sqrt(stack.pop()))
            elif op == OP_IPOW:
                stack.append(_integer_pow_array(stack.pop(), int(arg)))
            else:
                b = stack.pop()
                a = stack.pop()
                if op == OP_ADD:
                    stack.append(a + b)
                elif op == OP_SUB:
                    stack.append(a - b)
                elif op == OP_MUL:
                    stack.append(a * b)
                elif op == OP_DIV:
                    stack.append(a / b)
                elif op == OP_POW:
                    out = np.exp(b * np.log(a))
                    zero = a == 0
                    if np.any(zero):
                        out = np.where(zero, np.where(b.real > 0, 0j, np.inf + 0j), out)
                    stack.append(out)
                else:  # pragma: no cover - compile_ast never emits other codes
                    raise ValueError(f"bad opcode {op}")
    return stack[0]


def _integer_pow_array(base, n):
    result = np.ones_like(base)
    b = base.copy()
    m = abs(n)
    while m:
        if m & 1:
            result = result * b
        b = b * b
        m >>= 1
    return 1.0 / result if n < 0 else result
