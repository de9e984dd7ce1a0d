import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from llmc.expr import (
    BinOp,
    ExprDomainError,
    ExprSyntaxError,
    Func,
    Indicator,
    Neg,
    NonFiniteValueError,
    Num,
    UnknownIdentifierError,
    Var,
    breakpoints_of,
    evaluate,
    parse,
    pretty,
)


def test_parse_non_smooth_target():
    ast = parse("exp(-0.5*x) + indicator(2,4)")
    assert ast == BinOp(
        "+",
        Func("exp", BinOp("*", Neg(Num(0.5)), Var())),
        Indicator(2.0, 4.0),
    )


def test_parse_non_smooth_jump_density():
    ast = parse("x^2*exp(-0.5*x)")
    assert ast == BinOp(
        "*",
        BinOp("^", Var(), Num(2.0)),
        Func("exp", BinOp("*", Neg(Num(0.5)), Var())),
    )


def test_incomplete_expression_reports_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse("1+")
    assert err.value.offset == 2


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError):
        parse("foo(x)")


def test_indicator_bounds_must_be_literals():
    with pytest.raises(ExprSyntaxError):
        parse("indicator(x, 4)")
    with pytest.raises(ExprSyntaxError):
        parse("indicator(4, 2)")


def test_evaluate_non_smooth_at_3():
    ast = parse("exp(-0.5*x)+indicator(2,4)")
    assert evaluate(ast, 3.0) == pytest.approx(np.exp(-1.5) + 1.0, abs=1e-15)


def test_indicator_open_at_endpoints():
    ast = parse("indicator(2,4)")
    assert evaluate(ast, 2.0) == 0.0
    assert evaluate(ast, 4.0) == 0.0
    assert evaluate(ast, 3.999999) == 1.0


def test_ln_domain_error():
    with pytest.raises(ExprDomainError):
        evaluate(parse("ln(x)"), -1.0)


def test_sqrt_domain_error():
    with pytest.raises(ExprDomainError):
        evaluate(parse("sqrt(x)"), -4.0)


def test_zero_to_negative_power():
    with pytest.raises(ExprDomainError):
        evaluate(parse("x^(-1)"), 0.0)


def test_division_by_zero_is_reported():
    with pytest.raises(NonFiniteValueError):
        evaluate(parse("1/x"), 0.0)


def test_overflow_is_reported():
    with pytest.raises(NonFiniteValueError):
        evaluate(parse("exp(x)"), 1e9)


def test_precedence_cases():
    assert evaluate(parse("2+3*4"), 0.0) == 14.0
    assert evaluate(parse("2^3^2"), 0.0) == 512.0
    assert evaluate(parse("-2^2"), 0.0) == -4.0
    assert evaluate(parse("(2+3)*4"), 0.0) == 20.0
    assert evaluate(parse("2*x^2"), 3.0) == 18.0


def test_vectorized_evaluation():
    ast = parse("exp(-0.5*x)+indicator(2,4)")
    xs = np.array([1.0, 3.0, 5.0])
    out = evaluate(ast, xs)
    assert out == pytest.approx([np.exp(-0.5), np.exp(-1.5) + 1.0, np.exp(-2.5)])


def test_breakpoints_examples():
    assert breakpoints_of(parse("exp(-0.5*x)+indicator(2,4)")) == [2.0, 4.0]
    assert breakpoints_of(parse("exp(-x)")) == []
    assert breakpoints_of(parse("indicator(1,2)+indicator(2,3)")) == [1.0, 2.0, 3.0]


def test_evaluate_is_pure():
    ast = parse("x^2*exp(-0.5*x)")
    first = evaluate(ast, 1.7)
    for _ in range(5):
        assert evaluate(ast, 1.7) == first


# round-trip property: pretty-printing reparses to the identical tree

_numbers = st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)


def _exprs(depth):
    if depth == 0:
        leaf = st.one_of(
            _numbers.map(Num),
            st.just(Var()),
            st.tuples(_numbers, _numbers).map(
                lambda ab: Indicator(min(ab) - 1.0, max(ab) + 1.0)
            ),
        )
        return leaf
    sub = _exprs(depth - 1)
    return st.one_of(
        sub,
        sub.map(Neg),
        st.tuples(st.sampled_from("+-*/^"), sub, sub).map(lambda t: BinOp(*t)),
        st.tuples(st.sampled_from(["exp", "ln", "sqrt", "abs"]), sub).map(
            lambda t: Func(*t)
        ),
    )


@settings(max_examples=200, deadline=None)
@given(_exprs(4))
def test_pretty_print_round_trip(ast):
    assert parse(pretty(ast)) == ast


def test_negative_exponent():
    assert evaluate(parse("2^-3"), 0.0) == 0.125
    assert evaluate(parse("2^-2^-1"), 0.0) == pytest.approx(2.0 ** -0.5)
