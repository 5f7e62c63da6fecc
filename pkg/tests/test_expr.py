import cmath

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfplane.errors import ParseError
from halfplane.expr import compile_ast, eval_array, parse_expression, to_text, tokenize
from halfplane._fallback import eval_program


def ev(text, z):
    return complex(eval_array(compile_ast(parse_expression(text)), np.array([z]))[0])


@pytest.mark.parametrize("text,z,expected", [
    ("z", 2 + 1j, 2 + 1j),
    ("1+0.5i", 7, 1 + 0.5j),
    ("-z^2", 3, -9),
    ("(z+1)/(z+2)", 1, 2 / 3),
    ("2*z - 3", 1j, -3 + 2j),
    ("sqrt(z)", 4, 2),
    ("exp(log(z))", 1 + 1j, 1 + 1j),
    ("z^0.5", 1j, cmath.exp(0.25j * cmath.pi)),
    ("i*pi", 0, 1j * cmath.pi),
    ("2.5e-1i", 0, 0.25j),
    ("z^(-1)", 4, 0.25),
])
def test_evaluates(text, z, expected):
    assert ev(text, z) == pytest.approx(expected, rel=1e-15, abs=1e-15)


def test_power_binds_tighter_than_minus():
    assert parse_expression("-z^2") == ("neg", ("pow", ("z",), ("const", 2 + 0j)))


@pytest.mark.parametrize("text,pos,expected", [
    ("(z+1)/(z+2) * (z", 16, ")"),
    ("z +", 3, "z"),
    ("z $ 1", 2, "z"),
    ("foo(z)", 0, "log"),
    ("z)", 1, "end of input"),
    ("z^-1", 2, "("),
])
def test_parse_errors_report_position(text, pos, expected):
    with pytest.raises(ParseError) as info:
        parse_expression(text)
    assert info.value.position == pos
    assert expected in info.value.expected


def test_offsets_are_absolute():
    toks = tokenize("z + 1", offset=5)
    assert [t.pos for t in toks] == [5, 7, 9, 10]


_atoms = st.sampled_from(["z", "1", "2.5", "0.5i", "(z+1)", "sqrt(z)", "log(z+2)"])


@st.composite
def expressions(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(_atoms)
    op = draw(st.sampled_from(["+", "-", "*", "/"]))
    return f"({draw(expressions(depth=depth - 1))}{op}{draw(expressions(depth=depth - 1))})"


@settings(max_examples=80, deadline=None)
@given(expressions(), st.complex_numbers(min_magnitude=0.1, max_magnitude=10).filter(lambda z: z.real > 0.05))
def test_pretty_print_round_trip(text, z):
    ast = parse_expression(text)
    again = parse_expression(to_text(ast))
    a, b = ev(text, z), complex(eval_array(compile_ast(again), np.array([z]))[0])
    assert a == b or (cmath.isnan(a) and cmath.isnan(b))


@settings(max_examples=80, deadline=None)
@given(expressions(), st.complex_numbers(min_magnitude=0.1, max_magnitude=10).filter(lambda z: z.real > 0.05))
def test_scalar_and_vector_evaluators_agree(text, z):
    prog = compile_ast(parse_expression(text))
    a = eval_program(prog.code, prog.consts, z)
    b = complex(eval_array(prog, np.array([z]))[0])
    assert a == pytest.approx(b, rel=1e-13, abs=1e-13)
