import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minifol.errors import (
    ArityError,
    DimensionError,
    DomainError,
    ExpressionSyntaxError,
    EvaluationError,
    SchemaError,
    UnknownIdentifierError,
)
from minifol.mapdef import (
    Binary,
    Constant,
    Unary,
    Variable,
    eval_expr,
    load_map,
    load_map_json,
    parse,
    pretty_print,
    variables_used,
)


def test_basic_value():
    tree = parse("x1^2 + x2^2", 2)
    assert eval_expr(tree, (1.0, 1.0)) == 2.0
    assert eval_expr(tree, (3.0, 4.0)) == 25.0


def test_syntax_error_reports_offset():
    with pytest.raises(ExpressionSyntaxError) as err:
        parse("x1 + ", 2)
    assert err.value.position == 5


def test_unknown_variable():
    with pytest.raises(UnknownIdentifierError) as err:
        parse("x1 + x4", 3)
    assert err.value.name == "x4"


def test_unknown_function():
    with pytest.raises(UnknownIdentifierError):
        parse("foo(x1)", 2)


def test_atan2_arity():
    with pytest.raises(ArityError):
        parse("atan2(x1)", 2)
    with pytest.raises(ArityError):
        parse("sin(x1, x2)", 2)


def test_empty_expression():
    with pytest.raises(ExpressionSyntaxError):
        parse("   ", 2)


def test_trailing_garbage():
    with pytest.raises(ExpressionSyntaxError):
        parse("x1 x2", 2)
    with pytest.raises(ExpressionSyntaxError):
        parse("x1 + x2)", 2)


def test_bad_character():
    with pytest.raises(ExpressionSyntaxError) as err:
        parse("x1 + @", 2)
    assert err.value.position == 5


def test_precedence():
    # '^' binds tighter than unary minus
    assert eval_expr(parse("-x1^2", 1), (3.0,)) == -9.0
    assert parse("-x1^2", 1) == Unary("neg", Binary("^", Variable(1), Constant(2.0)))
    # right associative power
    assert eval_expr(parse("2^3^2", 1), (0.0,)) == 512.0
    # left associative subtraction and division
    assert eval_expr(parse("x1 - x2 - x3", 3), (10.0, 3.0, 2.0)) == 5.0
    assert eval_expr(parse("12 / x1 / x2", 2), (3.0, 2.0)) == 2.0
    assert eval_expr(parse("1 + 2 * 3", 1), (0.0,)) == 7.0


def test_constants():
    assert eval_expr(parse("pi", 1), (0.0,)) == math.pi
    assert eval_expr(parse("2*e", 1), (0.0,)) == 2.0 * math.e


def test_functions():
    point = (0.7,)
    assert eval_expr(parse("sin(x1)^2 + cos(x1)^2", 1), point) == pytest.approx(1.0)
    assert eval_expr(parse("atan2(x2, x1)", 2), (1.0, 1.0)) == pytest.approx(
        math.pi / 4
    )
    assert eval_expr(parse("log(exp(x1))", 1), point) == pytest.approx(0.7)
    assert eval_expr(parse("sqrt(x1^2)", 1), (-2.0,)) == 2.0
    assert eval_expr(parse("cosh(x1)^2 - sinh(x1)^2", 1), (1.3,)) == pytest.approx(1.0)
    assert eval_expr(parse("tanh(x1)", 1), (0.0,)) == 0.0


def test_singular_points_raise():
    with pytest.raises(EvaluationError) as err:
        eval_expr(parse("1 / x1", 1), (0.0,))
    assert err.value.point == (0.0,)
    with pytest.raises(EvaluationError):
        eval_expr(parse("log(x1)", 1), (-1.0,))
    with pytest.raises(EvaluationError):
        eval_expr(parse("sqrt(x1)", 1), (-1.0,))
    with pytest.raises(EvaluationError):
        eval_expr(parse("atan2(x1, x2)", 2), (0.0, 0.0))
    with pytest.raises(EvaluationError):
        eval_expr(parse("exp(x1)", 1), (1e6,))


def test_variables_used():
    assert variables_used(parse("x1*x3 + sin(x2)", 3)) == {1, 2, 3}
    assert variables_used(parse("2 + pi", 1)) == set()


def _expr_sources(draw_depth=0):
    leaves = st.sampled_from(
        ["x1", "x2", "x3", "1.5", "2.0", "0.25", "pi", "3.0", "e"]
    )
    unaries = st.sampled_from(["sin", "cos", "sinh", "cosh", "tanh", "exp"])
    binops = st.sampled_from(["+", "-", "*", "/", "^"])

    def extend(children):
        return st.one_of(
            st.tuples(children).map(lambda t: f"-{t[0]}"),
            st.tuples(unaries, children).map(lambda t: f"{t[0]}({t[1]})"),
            st.tuples(children, binops, children).map(
                lambda t: f"({t[0]} {t[1]} {t[2]})"
            ),
            st.tuples(children, children).map(lambda t: f"atan2({t[0]}, {t[1]})"),
        )

    return st.recursive(leaves, extend, max_leaves=12)


@given(_expr_sources())
@settings(max_examples=300, deadline=None)
def test_print_parse_round_trip(source):
    tree = parse(source, 3)
    printed = pretty_print(tree)
    assert parse(printed, 3) == tree


@given(
    _expr_sources(),
    st.tuples(
        st.floats(-2, 2, allow_nan=False),
        st.floats(-2, 2, allow_nan=False),
        st.floats(-2, 2, allow_nan=False),
    ),
)
@settings(max_examples=200, deadline=None)
def test_printed_form_evaluates_identically(source, point):
    tree = parse(source, 3)
    printed = pretty_print(tree)
    try:
        want = eval_expr(tree, point)
    except EvaluationError:
        with pytest.raises(EvaluationError):
            eval_expr(parse(printed, 3), point)
        return
    assert eval_expr(parse(printed, 3), point) == want


HELICOID_DOC = {
    "name": "helicoid",
    "n": 3,
    "m": 1,
    "components": ["x3 - atan2(x2, x1)"],
    "domain": {"min": [0.5, 0.5, -3.0], "max": [2.0, 2.0, 3.0]},
}


def test_load_map_round_trip():
    definition = load_map(HELICOID_DOC)
    assert definition.n == 3
    assert definition.m == 1
    assert definition.name == "helicoid"
    assert definition.to_document() == HELICOID_DOC
    again = load_map_json(json.dumps(definition.to_document()))
    assert again == definition


def test_load_map_ignores_extra_keys():
    doc = dict(HELICOID_DOC)
    doc["grid"] = [64, 64, 64]
    assert load_map(doc).name == "helicoid"


def test_load_map_contains():
    definition = load_map(HELICOID_DOC)
    assert definition.contains((1.0, 1.0, 0.0))
    assert not definition.contains((0.0, 1.0, 0.0))


def test_load_map_rejects_m_not_less_than_n():
    doc = {
        "name": "square",
        "n": 2,
        "m": 2,
        "components": ["x1", "x2"],
        "domain": {"min": [0, 0], "max": [1, 1]},
    }
    with pytest.raises(DimensionError):
        load_map(doc)


def test_load_map_rejects_bad_schema():
    with pytest.raises(SchemaError):
        load_map({"name": "x"})
    with pytest.raises(SchemaError):
        load_map(
            {
                "name": "x",
                "n": 2,
                "m": 1,
                "components": ["x1", "x2"],
                "domain": {"min": [0, 0], "max": [1, 1]},
            }
        )
    with pytest.raises(SchemaError):
        load_map_json("{not json")


def test_load_map_rejects_bad_domain():
    doc = {
        "name": "x",
        "n": 2,
        "m": 1,
        "components": ["x1"],
        "domain": {"min": [0.0, 1.0], "max": [1.0, 1.0]},
    }
    with pytest.raises(DomainError):
        load_map(doc)


def test_component_expressions_validated_against_n():
    doc = {
        "name": "x",
        "n": 2,
        "m": 1,
        "components": ["x3"],
        "domain": {"min": [0, 0], "max": [1, 1]},
    }
    with pytest.raises(UnknownIdentifierError):
        load_map(doc)
