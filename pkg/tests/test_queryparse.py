"""Query text parsing: grammar, desugaring, errors."""

import pytest

from wcoj.errors import DanglingAttribute, QuerySyntaxError, UnknownRelation
from wcoj.queryparse import materialize_derived, parse_query
from wcoj.relations import Filter, RelationSchema


def test_triangle_text():
    p = parse_query("tri(a1,a2,a3) := e(a1,a2), e(a2,a3), e(a3,a1)")
    assert p.head == "tri"
    assert p.head_vars == ("a1", "a2", "a3")
    assert p.query.num_attrs == 3
    assert p.query.schemas == (
        RelationSchema("e", (0, 1)),
        RelationSchema("e", (1, 2)),
        RelationSchema("e", (2, 0)),
    )
    assert p.filters == ()
    assert p.derived == {}


def test_named_queries_from_listing():
    four = parse_query(
        "c4(a1,a2,a3,a4) := e(a1,a2), e(a1,a3), e(a1,a4),"
        " e(a2,a3), e(a2,a4), e(a3,a4)"
    )
    assert len(four.query.schemas) == 6
    five = parse_query(
        "c5(a1,a2,a3,a4,a5) := e(a1,a2), e(a1,a3), e(a1,a4), e(a1,a5),"
        " e(a2,a3), e(a2,a4), e(a2,a5), e(a3,a4), e(a3,a5), e(a4,a5)"
    )
    assert len(five.query.schemas) == 10
    assert five.query.num_attrs == 5


def test_filters_parse():
    p = parse_query("t(a1,a2,a3) := e(a1,a2), e(a2,a3), e(a1,a3), a1 < a2, a2 != a3")
    assert p.filters == (Filter(0, "<", 1), Filter(1, "!=", 2))


def test_self_loop_desugars_to_derived_relation():
    p = parse_query("x(a1) := e(a1,a1)")
    assert p.query.schemas == (RelationSchema("e[0,0]", (0,)),)
    assert p.derived == {"e[0,0]": ("e", (0, 0))}
    rels = materialize_derived({"e": [(1, 1), (1, 2), (3, 3)]}, p.derived)
    assert rels["e[0,0]"] == [(1,), (3,)]


def test_partial_repeat_desugars():
    p = parse_query("y(a1,a2) := t(a1,a2,a1)", arities={"t": 3})
    assert p.query.schemas == (RelationSchema("t[0,1,0]", (0, 1)),)
    rels = materialize_derived({"t": [(1, 2, 1), (1, 2, 3), (4, 4, 4)]}, p.derived)
    assert rels["t[0,1,0]"] == [(1, 2), (4, 4)]


def test_syntax_errors_carry_position():
    with pytest.raises(QuerySyntaxError) as e:
        parse_query("bad(")
    assert e.value.position == 4
    with pytest.raises(QuerySyntaxError):
        parse_query("t(a1,a2) := e(a1,a2) e(a2,a1)")
    with pytest.raises(QuerySyntaxError):
        parse_query("t(a1,a1) := e(a1,a1)")
    with pytest.raises(QuerySyntaxError):
        parse_query("t(a1,a2) := e(a1,a9)")
    with pytest.raises(QuerySyntaxError):
        parse_query("t(a1,a2) := a1 < a9")
    with pytest.raises(QuerySyntaxError):
        parse_query("t(a1,a2) := e(a1,a2), @")


def test_unknown_relation_and_arity():
    with pytest.raises(UnknownRelation):
        parse_query("t(a1,a2) := f(a1,a2)", arities={"e": 2})
    with pytest.raises(UnknownRelation):
        parse_query("t(a1,a2,a3) := e(a1,a2,a3)", arities={"e": 2})
    p = parse_query("t(a1,a2) := e(a1,a2)", arities={"e": 2})
    assert p.query.schemas[0].base == "e"


def test_uncovered_head_variable_rejected():
    with pytest.raises(DanglingAttribute):
        parse_query("t(a1,a2,a3) := e(a1,a2)")


def test_whitespace_and_names_are_flexible():
    p = parse_query("q ( x , y ) :=   e( x,y ) ,   x    <  y")
    assert p.query.schemas == (RelationSchema("e", (0, 1)),)
    assert p.filters == (Filter(0, "<", 1),)
