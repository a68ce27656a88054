"""Forest structure: levels, predecessor chains, independence."""

import pytest
from hypothesis import given, strategies as st

from ficasata.data_forest import Allocator, independent


def test_levels_follow_parent_chain():
    al = Allocator()
    r = al.fresh_root()
    c = al.fresh_child(r)
    g = al.fresh_child(c)
    assert (r.level, c.level, g.level) == (0, 1, 2)
    assert g.pred() is c and g.pred(2) is r and g.pred(3) is None
    assert r.parent is None


def test_fresh_children_are_distinct():
    al = Allocator()
    r = al.fresh_root()
    kids = [al.fresh_child(r) for _ in range(5)]
    assert len({d.id for d in kids}) == 5
    assert all(d.parent is r for d in kids)


def test_independence_basics():
    al = Allocator()
    r = al.fresh_root()
    a = al.fresh_child(r)
    b = al.fresh_child(r)
    ag = al.fresh_child(a)
    assert independent(a, b)
    assert independent(ag, b) and independent(b, ag)
    assert not independent(r, a)
    assert not independent(ag, r)
    assert not independent(a, a)


def test_roots_of_different_trees_independent():
    al = Allocator()
    r1, r2 = al.fresh_root(), al.fresh_root()
    assert independent(r1, r2)
    assert not independent(r1, r1)


### randomized: independence is symmetric and matches the ancestor definition


@st.composite
def forest_pair(draw):
    al = Allocator()
    nodes = [al.fresh_root()]
    for _ in range(draw(st.integers(1, 20))):
        parent = draw(st.sampled_from(nodes + [None]))
        nodes.append(al.fresh_child(parent))
    i = draw(st.integers(0, len(nodes) - 1))
    j = draw(st.integers(0, len(nodes) - 1))
    return nodes[i], nodes[j]


@given(forest_pair())
def test_independence_symmetric_and_correct(pair):
    d1, d2 = pair
    expected = d1 is not d2 and d1 not in d2.ancestors() and d2 not in d1.ancestors()
    assert independent(d1, d2) == expected
    assert independent(d1, d2) == independent(d2, d1)
