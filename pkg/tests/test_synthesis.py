import numpy as np
import pytest

from loccforge.config import RunConfig
from loccforge.errors import InvalidMeasurementError
from loccforge.measurement import measurement_from_parts
from loccforge.synthesis import (
    SynthesisStats,
    build_classes,
    feasibility,
    orderings,
    synthesize,
)
from loccforge.tree import (
    align_weights,
    canonical_key,
    compact_same_party,
    group_value,
    leaf_tree,
    leaves,
    merge_and_extend,
    prune_unitary_rounds,
    root_for,
    validate_assignment,
    walk_nodes,
)

from conftest import load_fixture

I2 = np.eye(2)


def test_cascade5_protocol_shape():
    m = load_fixture("cascade5")
    v = synthesize(m, RunConfig(rounds=4))
    assert v.kind == "Protocol"
    assert v.reason == "protocol found in round 4"
    assert v.stats.as_dict() == {"rounds": 4, "trees_built": 12,
                                 "lps_solved": 78, "classes_found": 5}
    assert len(leaves(v.tree)) == 5
    assert len(walk_nodes(v.tree)) == 9
    assert validate_assignment(v.tree, m, v.assignment, pin_identities=True)

    # first measurement splits the identity along the B2 / B4 directions
    trunk = root_for(v.tree, v.tree.trunk_party)
    vals = sorted(
        (np.round(group_value(c.groups[0], m, 1, v.assignment), 8) for c in
         trunk.children),
        key=lambda a: float(a[0, 0].real))
    assert np.allclose(vals[0], np.diag([0.0, 0.3]))
    assert np.allclose(vals[1], np.diag([1.0, 0.7]))

    # each input operator is realized exactly once with weight one
    w, residual = align_weights(v.tree, m, v.assignment)
    assert np.allclose(w, np.ones(5))
    assert residual <= 1e-8

    assert orderings(v, m.party_names) == [
        ("B",), ("B", "A"), ("B", "A", "B"), ("B", "A", "B", "A")]


def test_cascade5_matches_hand_built_merge_sequence():
    m = load_fixture("cascade5")
    v = synthesize(m)
    ls = [leaf_tree(m, j) for j in range(5)]
    inner = merge_and_extend([ls[0], ls[1]], 0)         # A splits A1 vs A2
    mid = merge_and_extend([ls[3], inner], 1)           # B splits B4 vs pooled B1 B2
    outer = merge_and_extend([ls[4], mid], 0)           # A splits A5 vs A4
    top = merge_and_extend([ls[2], outer], 1)           # B splits B3 vs B5
    hand = prune_unitary_rounds(compact_same_party(top))
    assert canonical_key(v.tree) == canonical_key(hand)


def test_domino9_proved_impossible():
    m = load_fixture("domino9")
    v = synthesize(m)
    assert v.kind == "ProvedImpossible"
    assert v.reason == "round 2 produced no new equivalence classes"
    assert v.tree is None and v.assignment is None
    assert v.stats.as_dict() == {"rounds": 2, "trees_built": 13,
                                 "lps_solved": 130, "classes_found": 4}


def test_productbasis_first_mode():
    m = load_fixture("productbasis4")
    v = synthesize(m)
    assert v.kind == "Protocol"
    assert v.reason == "protocol found in round 2"
    assert v.stats.rounds == 2 and v.stats.trees_built == 9
    assert orderings(v, m.party_names) == [("A", "B")]
    assert len(v.protocols) == 1


def test_productbasis_exhaustive_mode():
    m = load_fixture("productbasis4")
    v = synthesize(m, RunConfig(mode="exhaustive"))
    assert v.kind == "Protocol"
    assert v.reason == "protocols found in round 2"
    assert len(v.protocols) == 2
    keys = {canonical_key(t) for t, _ in v.protocols}
    assert len(keys) == 2
    assert orderings(v, m.party_names) == [("A", "B"), ("B", "A")]
    for t, x in v.protocols:
        assert validate_assignment(t, m, x, pin_identities=True)


def test_fourparty_mismatch_has_no_classes():
    m = load_fixture("fourparty_mismatch")
    trees = [leaf_tree(m, j) for j in range(len(m))]
    assert build_classes(trees, m) == []
    # the mismatch also breaks completeness, so synthesis rejects the input
    with pytest.raises(InvalidMeasurementError, match="not complete"):
        synthesize(m)


def test_fourparty_aligned_single_class_and_protocol():
    m = load_fixture("fourparty_aligned")
    trees = [leaf_tree(m, j) for j in range(len(m))]
    cls = build_classes(trees, m)
    assert len(cls) == 1
    assert cls[0].free_party == 0 and cls[0].members == (0, 1)
    assert cls[0].party_subset == (1, 2, 3)

    v = synthesize(m, RunConfig(rounds=2))
    assert v.kind == "Protocol" and v.stats.rounds == 1
    hand = prune_unitary_rounds(compact_same_party(
        merge_and_extend([trees[0], trees[1]], 0)))
    assert canonical_key(v.tree) == canonical_key(hand)
    assert orderings(v, m.party_names) == [("A",)]


def test_feasibility_pins_reject_partial_coverage():
    m = load_fixture("productbasis4")
    t = merge_and_extend([leaf_tree(m, 0), leaf_tree(m, 1)], 1)
    assert feasibility(t, m, pin_identities=True) is None
    x = feasibility(t, m, pin_identities=False)
    assert x is not None and (x >= 1e-7 - 1e-12).all()
    assert validate_assignment(t, m, x)


def test_single_operator_identity():
    m = measurement_from_parts([[I2, I2]])
    v = synthesize(m)
    assert v.kind == "Protocol"
    assert v.reason == "single operator pins to the identity"
    assert v.tree.trunk_party is None
    assert orderings(v) == [()]
    assert np.allclose(v.assignment, [1.0, 1.0])


def test_single_operator_scaled_parts():
    m = measurement_from_parts([[2.0 * I2, 0.5 * I2]])
    v = synthesize(m)
    assert v.kind == "Protocol"
    assert np.allclose(v.assignment, [0.5, 2.0])


def test_rejects_invalid_measurement():
    m = measurement_from_parts([[np.diag([1.0, -0.5]), I2], [I2, I2]])
    with pytest.raises(InvalidMeasurementError) as exc:
        synthesize(m)
    assert any(d.kind == "not-psd" for d in exc.value.diagnostics)


def test_determinism_across_runs():
    m = load_fixture("cascade5")
    v1 = synthesize(m)
    v2 = synthesize(m)
    assert canonical_key(v1.tree) == canonical_key(v2.tree)
    assert v1.stats.as_dict() == v2.stats.as_dict()
    assert np.array_equal(v1.assignment, v2.assignment)

    mp = load_fixture("productbasis4")
    e1 = synthesize(mp, RunConfig(mode="exhaustive"))
    e2 = synthesize(mp, RunConfig(mode="exhaustive"))
    assert [canonical_key(t) for t, _ in e1.protocols] == \
        [canonical_key(t) for t, _ in e2.protocols]


def test_build_classes_stale_flags():
    m = load_fixture("productbasis4")
    trees = [leaf_tree(m, j) for j in range(len(m))]
    first = build_classes(trees, m)
    assert first and all(not c.stale for c in first)
    seen = {(c.free_party, frozenset(c.members)) for c in first}
    again = build_classes(trees, m, seen=seen)
    assert [(c.free_party, c.members) for c in again] == \
        [(c.free_party, c.members) for c in first]
    assert all(c.stale for c in again)


def test_build_classes_shares_lp_cache():
    m = load_fixture("productbasis4")
    trees = [leaf_tree(m, j) for j in range(len(m))]
    cache = {}
    stats = SynthesisStats()
    build_classes(trees, m, cache=cache, stats=stats)
    solved = stats.lps_solved
    assert solved > 0
    build_classes(trees, m, cache=cache, stats=stats)
    assert stats.lps_solved == solved


def test_round_budget():
    m = load_fixture("cascade5")
    v = synthesize(m, RunConfig(rounds=1))
    assert v.kind == "BudgetExhausted"
    assert v.reason == "round limit 1 reached"
    assert v.stats.rounds == 1
    v0 = synthesize(m, RunConfig(rounds=0))
    assert v0.kind == "BudgetExhausted" and v0.stats.rounds == 0


def test_lp_budget():
    m = load_fixture("cascade5")
    v = synthesize(m, RunConfig(max_lps=5))
    assert v.kind == "BudgetExhausted"
    assert v.reason == "lp budget exhausted"


def test_tree_budget():
    m = load_fixture("cascade5")
    v = synthesize(m, RunConfig(max_trees=5))
    assert v.kind == "BudgetExhausted"
    assert v.reason == "tree budget exhausted"


def test_orderings_input_forms():
    m = load_fixture("productbasis4")
    t = merge_and_extend([leaf_tree(m, 0), leaf_tree(m, 1)], 1)
    assert orderings([t]) == [(1, 0)] or orderings([t]) == [(1,)]
    assert orderings([(t, None)]) == orderings([t])
    named = orderings([t], m.party_names)
    assert all(isinstance(s[0], str) for s in named)
