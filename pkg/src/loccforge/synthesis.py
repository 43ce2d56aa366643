"""The synthesis loop: classes, mergers, feasibility, verdicts.

Starting from one-outcome trees, each round groups trees whose roots on all
parties but one can carry a common strictly positive value (an LP question),
merges every such subset with that remaining party measuring first, and tests
full-coverage trees for an assignment that pins every root to the identity.
No new maximal class in a round means no tree can ever be built that was not
already buildable, which proves impossibility.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from .config import RunConfig
from .errors import InfeasibleError, InvalidMeasurementError, TreeStructureError
from .hermitian import LP_TOL, vectorize
from .measurement import SeparableMeasurement, completeness_certificate, validate
from .simplex import feasible_point
from .tree import (
    ProtocolTree,
    canonical_key,
    compact_same_party,
    coverage,
    leaf_tree,
    merge_and_extend,
    prune_unitary_rounds,
    root_for,
    validate_assignment,
)


@dataclasses.dataclass
class SynthesisStats:
    rounds: int = 0
    trees_built: int = 0
    lps_solved: int = 0
    classes_found: int = 0

    def as_dict(self):
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class EquivalenceClass:
    free_party: int
    party_subset: tuple
    members: tuple
    stale: bool = False


@dataclasses.dataclass(frozen=True)
class SynthesisVerdict:
    kind: str                  # "Protocol" | "ProvedImpossible" | "BudgetExhausted"
    tree: ProtocolTree | None
    assignment: np.ndarray | None
    stats: SynthesisStats
    protocols: tuple = ()      # (tree, assignment) pairs, exhaustive mode
    reason: str = ""


class _BudgetHit(Exception):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


def _count_lp(stats: SynthesisStats, max_lps):
    stats.lps_solved += 1
    if max_lps is not None and stats.lps_solved > max_lps:
        raise _BudgetHit("lp budget exhausted")


def _equations_to_lp(equations, m, ncols):
    """equations: list of (party, [(col, op, scale, sign)]) with zero rhs."""
    blocks = []
    for party, terms in equations:
        d = m.dims[party]
        rows = np.zeros((d * d, ncols))
        for col, op, scale, sign in terms:
            rows[:, col] += sign * scale * vectorize(m.part(op, party))
        blocks.append(rows)
    return np.vstack(blocks)


def _class_feasible(trees, ids, free_party, m, stats, max_lps, tol):
    """Can the listed trees' roots share one strictly positive common value on
    every party except free_party?"""
    cols = {}

    def col(tid, var):
        return cols.setdefault((tid, var), len(cols))

    def gterms(tid, g, sign):
        return [(col(tid, t.var), t.op, t.scale, sign) for t in g]

    equations = []
    for beta in range(trees[ids[0]].P):
        if beta == free_party:
            continue
        for tid in ids:
            gs = root_for(trees[tid], beta).groups
            for ga, gb in zip(gs, gs[1:]):
                equations.append((beta, gterms(tid, ga, 1.0) + gterms(tid, gb, -1.0)))
        for ta, tb in zip(ids, ids[1:]):
            ga = root_for(trees[ta], beta).groups[0]
            gb = root_for(trees[tb], beta).groups[0]
            equations.append((beta, gterms(ta, ga, 1.0) + gterms(tb, gb, -1.0)))
    if not equations:
        return True
    A = _equations_to_lp(equations, m, len(cols))
    _count_lp(stats, max_lps)
    x = feasible_point(A, np.zeros(A.shape[0]), tol=tol, lower=np.ones(len(cols)))
    return x is not None


def _feasible_family(trees, eligible, free_party, m, cache, stats, max_lps,
                     max_subset, tol):
    """All feasible subsets of eligible ids (ascending DFS; prefix-closed)."""

    def check(ids):
        key = (free_party, frozenset(ids))
        if key not in cache:
            cache[key] = _class_feasible(trees, ids, free_party, m, stats,
                                         max_lps, tol)
        return cache[key]

    family = []

    def extend(s):
        family.append(s)
        if max_subset is not None and len(s) >= max_subset:
            return
        for j in eligible:
            if j <= s[-1]:
                continue
            t = s + (j,)
            if check(t):
                extend(t)

    for i in eligible:
        if check((i,)):
            extend((i,))
    return family


def build_classes(trees, m: SeparableMeasurement, *, cache=None, stats=None,
                  seen=None, max_subset=6, max_lps=None,
                  tol=LP_TOL) -> list:
    """All maximal mergeable classes for every free party, stale-flagged."""
    trees = list(trees)
    cache = {} if cache is None else cache
    stats = SynthesisStats() if stats is None else stats
    seen = set() if seen is None else seen
    out = []
    for free in range(m.P):
        eligible = [i for i, t in enumerate(trees) if t.trunk_party != free]
        if not eligible:
            continue
        family = _feasible_family(trees, eligible, free, m, cache, stats,
                                  max_lps, max_subset, tol)
        in_family = set(map(frozenset, family))
        for s in sorted(family, key=lambda s: (len(s), s)):
            if len(s) < 2:
                continue
            fs = frozenset(s)
            if any(fs | {j} in in_family for j in eligible if j not in fs):
                continue
            out.append(EquivalenceClass(
                free, tuple(p for p in range(m.P) if p != free), s,
                stale=(free, fs) in seen))
    return out


def feasibility(t: ProtocolTree, m: SeparableMeasurement, *,
                pin_identities: bool = True, delta: float = 1e-7,
                tol: float = LP_TOL):
    """A strictly positive assignment satisfying the tree's recorded equalities
    (and identity pins), or None."""

    def gterms(g, sign):
        return [(term.var, term.op, term.scale, sign) for term in g]

    equations = [(c.party, gterms(c.lhs, 1.0) + gterms(c.rhs, -1.0))
                 for c in t.constraints]
    lower = np.full(t.nvars, delta)
    rhs_blocks = []
    if pin_identities:
        for a in range(t.P):
            equations.append((a, gterms(root_for(t, a).groups[0], 1.0)))
            rhs_blocks.append((a, vectorize(np.eye(m.dims[a], dtype=complex))))
    if not equations:
        return lower.copy()
    A = _equations_to_lp(equations, m, t.nvars)
    b = np.zeros(A.shape[0])
    if pin_identities:
        offset = A.shape[0] - sum(m.dims[a] ** 2 for a, _ in rhs_blocks)
        for a, vec in rhs_blocks:
            b[offset:offset + vec.size] = vec
            offset += vec.size
    return feasible_point(A, b, tol=tol, lower=lower)


def _emit(tree, assignment, m, tol):
    out = prune_unitary_rounds(compact_same_party(tree))
    if not validate_assignment(out, m, assignment, pin_identities=True, tol=tol):
        raise TreeStructureError("normalized protocol failed revalidation")
    return out, assignment


def synthesize(m: SeparableMeasurement,
               config: RunConfig | None = None) -> SynthesisVerdict:
    cfg = config or RunConfig()
    cfg.check()
    diags = validate(m, cfg.tol.psd)
    if diags:
        raise InvalidMeasurementError("measurement failed validation", diags)
    try:
        completeness_certificate(m, cfg.delta, cfg.tol.lp)
    except InfeasibleError as e:
        raise InvalidMeasurementError(f"measurement is not complete: {e}") from e

    N = len(m.ops)
    stats = SynthesisStats()
    trees = [leaf_tree(m, j) for j in range(N)]
    stats.trees_built = N
    keys = {canonical_key(t) for t in trees}
    full = set(range(N))

    if N == 1:
        x = feasibility(trees[0], m, pin_identities=True, delta=cfg.delta,
                        tol=cfg.tol.lp)
        stats.lps_solved += 1
        if x is not None:
            tree, x = _emit(trees[0], x, m, cfg.tol.lp)
            return SynthesisVerdict("Protocol", tree, x, stats,
                                    protocols=((tree, x),),
                                    reason="single operator pins to the identity")
        return SynthesisVerdict("ProvedImpossible", None, None, stats,
                                reason="single operator cannot pin to the identity")

    cache = {}
    merged = set()
    seen_classes = set()
    round_idx = 0
    while True:
        if cfg.rounds is not None and round_idx >= cfg.rounds:
            return SynthesisVerdict("BudgetExhausted", None, None, stats,
                                    reason=f"round limit {cfg.rounds} reached")
        round_idx += 1
        stats.rounds = round_idx
        new_classes = 0
        round_protocols = []
        # one round = one parallel layer: trees born here only merge next round
        snapshot = len(trees)
        try:
            for free in range(m.P):
                eligible = [i for i in range(snapshot)
                            if trees[i].trunk_party != free]
                family = _feasible_family(trees, eligible, free, m, cache,
                                          stats, cfg.max_lps, cfg.max_subset,
                                          cfg.tol.lp)
                in_family = set(map(frozenset, family))
                mergers = []
                for s in family:
                    if len(s) < 2:
                        continue
                    fs = frozenset(s)
                    mergers.append(s)
                    if not any(fs | {j} in in_family
                               for j in eligible if j not in fs):
                        if (free, fs) not in seen_classes:
                            seen_classes.add((free, fs))
                            new_classes += 1
                            stats.classes_found += 1
                for s in sorted(mergers, key=lambda s: (len(s), s)):
                    mkey = (free, frozenset(s))
                    if mkey in merged:
                        continue
                    merged.add(mkey)
                    tnew = merge_and_extend([trees[i] for i in s], free)
                    ck = canonical_key(tnew)
                    if ck in keys:
                        continue
                    if len(trees) >= cfg.max_trees:
                        raise _BudgetHit("tree budget exhausted")
                    trees.append(tnew)
                    keys.add(ck)
                    stats.trees_built += 1
                    if coverage(tnew) == full:
                        _count_lp(stats, cfg.max_lps)
                        x = feasibility(tnew, m, pin_identities=True,
                                        delta=cfg.delta, tol=cfg.tol.lp)
                        if x is not None:
                            emitted = _emit(tnew, x, m, cfg.tol.lp)
                            if cfg.mode == "first":
                                return SynthesisVerdict(
                                    "Protocol", emitted[0], emitted[1], stats,
                                    protocols=(emitted,),
                                    reason=f"protocol found in round {round_idx}")
                            round_protocols.append(emitted)
        except _BudgetHit as e:
            return SynthesisVerdict("BudgetExhausted", None, None, stats,
                                    reason=e.reason)
        if round_protocols:
            first = round_protocols[0]
            return SynthesisVerdict("Protocol", first[0], first[1], stats,
                                    protocols=tuple(round_protocols),
                                    reason=f"protocols found in round {round_idx}")
        if new_classes == 0:
            return SynthesisVerdict(
                "ProvedImpossible", None, None, stats,
                reason=f"round {round_idx} produced no new equivalence classes")


def orderings(protocols, party_names=None) -> list:
    """Distinct per-branch measurement-order sequences over the protocols.

    Accepts a SynthesisVerdict, (tree, assignment) pairs, or bare trees. Names
    parties when given a name list, otherwise returns party indices.
    """
    if isinstance(protocols, SynthesisVerdict):
        items = [p[0] for p in protocols.protocols]
    else:
        items = [p[0] if isinstance(p, tuple) else p for p in protocols]
    seqs = set()
    for t in items:
        trunk = t.trunk_party
        if trunk is None:
            seqs.add(())
            continue

        def rec(n, seq):
            if not n.children:
                seqs.add(seq)
                return
            step = seq + (n.children[0].party,)
            for c in n.children:
                rec(c, step)

        rec(root_for(t, trunk), ())
    if party_names is not None:
        seqs = {tuple(party_names[p] for p in s) for s in seqs}
    return sorted(seqs)
