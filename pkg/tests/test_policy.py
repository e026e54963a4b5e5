import itertools
import random

import pytest
from hypothesis import given, strategies as st

from healthbroker.abe.policy import (
    Leaf,
    PolicySyntaxError,
    Threshold,
    normalize_attributes,
    parse_policy,
    policy_to_text,
    satisfies,
)


def test_single_leaf():
    assert parse_policy("doctor") == Leaf("doctor")


def test_and_or_precedence():
    tree = parse_policy("(doctor AND cardiology) OR admin")
    assert tree == Threshold(1, (Threshold(2, (Leaf("doctor"), Leaf("cardiology"))), Leaf("admin")))
    # same tree without parens: AND binds tighter
    assert parse_policy("doctor AND cardiology OR admin") == tree


def test_threshold_node():
    tree = parse_policy("THRESHOLD(2, a, b, c)")
    assert tree == Threshold(2, (Leaf("a"), Leaf("b"), Leaf("c")))


def test_threshold_k_out_of_range():
    with pytest.raises(PolicySyntaxError):
        parse_policy("THRESHOLD(3, a, b)")


def test_keywords_case_insensitive_and_attrs_normalized():
    assert parse_policy("Doctor and CARDIOLOGY") == Threshold(2, (Leaf("doctor"), Leaf("cardiology")))


def test_empty_policy_rejected():
    for text in ("", "   ", "()"):
        with pytest.raises(PolicySyntaxError):
            parse_policy(text)


def test_syntax_error_carries_position():
    with pytest.raises(PolicySyntaxError) as err:
        parse_policy("doctor AND ")
    assert err.value.position >= 10


def test_trailing_garbage():
    with pytest.raises(PolicySyntaxError):
        parse_policy("doctor admin")


def test_no_wildcard_in_grammar():
    with pytest.raises((PolicySyntaxError, ValueError)):
        parse_policy("*")


def test_satisfies_threshold_examples():
    tree = parse_policy("THRESHOLD(2, a, b, c)")
    assert satisfies(tree, {"a", "c"})
    assert not satisfies(tree, {"a"})


def test_satisfies_superset_of_leaves():
    for text in ("(doctor AND cardiology) OR admin", "THRESHOLD(2, a, b, c)", "x"):
        tree = parse_policy(text)
        leaves = set()

        def collect(node):
            if isinstance(node, Leaf):
                leaves.add(node.attribute)
            else:
                for c in node.children:
                    collect(c)

        collect(tree)
        assert satisfies(tree, leaves | {"extra1", "extra2"})


def test_attribute_normalization():
    assert normalize_attributes(["Doctor", "  CARDIOLOGY "]) == frozenset({"doctor", "cardiology"})
    with pytest.raises(ValueError):
        normalize_attributes([])
    with pytest.raises(ValueError):
        normalize_attributes(["and"])


# -- independent brute-force oracle ---------------------------------------

UNIVERSE = ["a", "b", "c", "d", "e"]


def brute_force_eval(node, attrs):
    """Independent evaluator: expands threshold gates into subset enumeration."""
    if isinstance(node, Leaf):
        return node.attribute in attrs
    results = [brute_force_eval(c, attrs) for c in node.children]
    return any(
        all(results[i] for i in combo)
        for combo in itertools.combinations(range(len(results)), node.k)
    )


def random_tree(rng, depth=0):
    if depth >= 3 or rng.random() < 0.4:
        return Leaf(rng.choice(UNIVERSE))
    n = rng.randint(2, 4)
    children = tuple(random_tree(rng, depth + 1) for _ in range(n))
    return Threshold(rng.randint(1, n), children)


def test_satisfies_matches_brute_force_over_all_subsets():
    rng = random.Random(1234)
    for _ in range(60):
        tree = random_tree(rng)
        for r in range(len(UNIVERSE) + 1):
            for subset in itertools.combinations(UNIVERSE, r):
                if not subset:
                    continue
                assert satisfies(tree, set(subset)) == brute_force_eval(tree, set(subset))


# -- text form roundtrip ---------------------------------------------------

attr_st = st.sampled_from(UNIVERSE + ["doctor", "nurse", "hospitala"])


def tree_st(depth=0):
    leaf = attr_st.map(Leaf)
    if depth >= 2:
        return leaf
    inner = st.integers(2, 4).flatmap(
        lambda n: st.tuples(
            st.integers(1, n),
            st.lists(st.deferred(lambda: tree_st(depth + 1)), min_size=n, max_size=n),
        ).map(lambda kn: Threshold(kn[0], tuple(kn[1])))
    )
    return st.one_of(leaf, inner)


@given(tree_st())
def test_text_roundtrip(tree):
    assert parse_policy(policy_to_text(tree)) == tree
