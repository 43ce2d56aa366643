"""Protocol trees: symbolic node labels, consistency checks, normalization passes.

A tree has one root per party. All roots are childless placeholders except at
most one, the trunk root, whose party measured first; its children are the
first-round outcomes. Node labels are groups of (op, var, scale) terms; a
group's numeric value under an assignment is the weighted sum of that party's
local operator parts. Multiple groups on one node are aliases and must agree
numerically. Walking the trunk top-down while carrying each party's current
value reproduces the branching-consistency rule: at every node, the children's
values sum to the carried value of the children's party.
"""
from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np

from .errors import (
    DimMismatchError,
    SubsetTooSmallError,
    TreeStructureError,
    UnboundVariableError,
    ZeroOperatorError,
)
from .hermitian import HERM_TOL, LP_TOL, HermitianOperator, proportional
from .measurement import ProductOperator, SeparableMeasurement


class Term(NamedTuple):
    op: int
    var: int
    scale: float = 1.0


# a Group is a tuple of Terms; its value is the sum of the terms' values
Group = tuple


class Constraint(NamedTuple):
    party: int
    lhs: Group
    rhs: Group


@dataclasses.dataclass(frozen=True)
class Node:
    party: int
    groups: tuple        # tuple of Groups; groups[0] is the value group, the rest aliases
    children: tuple = ()


@dataclasses.dataclass(frozen=True)
class ProtocolTree:
    P: int
    roots: tuple         # one Node per party, any storage order
    constraints: tuple
    nvars: int
    depth: int

    @property
    def trunk_party(self):
        for r in self.roots:
            if r.children:
                return r.party
        return None


def root_for(t: ProtocolTree, party: int) -> Node:
    for r in t.roots:
        if r.party == party:
            return r
    raise TreeStructureError(f"tree has no root for party {party}")


def leaf_tree(m: SeparableMeasurement, j: int) -> ProtocolTree:
    """One-outcome tree for operator j: childless roots, variable per party."""
    if not 0 <= j < len(m.ops):
        raise TreeStructureError(f"operator index {j} out of range")
    roots = tuple(Node(a, ((Term(j, a, 1.0),),), ()) for a in range(m.P))
    return ProtocolTree(m.P, roots, (), m.P, 0)


def _rename_group(g: Group, offset: int) -> Group:
    return tuple(Term(t.op, t.var + offset, t.scale) for t in g)


def _rename_node(n: Node, offset: int) -> Node:
    return Node(n.party,
                tuple(_rename_group(g, offset) for g in n.groups),
                tuple(_rename_node(c, offset) for c in n.children))


def _group_sort_key(g: Group):
    return (len(g), tuple(sorted((t.op, t.scale) for t in g)))


def merge_and_extend(constituents, free_party: int) -> ProtocolTree:
    """Merge trees that agree on all parties but one; that party measures first.

    Each non-free party's new root stacks every constituent's root groups as
    aliases. The free party's root becomes the trunk: one branch per
    constituent, carrying its old free-party root groups and adopting its old
    trunk children. Variables are renumbered per constituent so occurrences
    stay independent.
    """
    cs = list(constituents)
    if len(cs) < 2:
        raise SubsetTooSmallError("merging needs at least two trees")
    P = cs[0].P
    if any(c.P != P for c in cs):
        raise DimMismatchError("constituents disagree on party count")
    if not 0 <= free_party < P:
        raise TreeStructureError(f"free party {free_party} out of range")

    offsets = []
    total = 0
    for c in cs:
        offsets.append(total)
        total += c.nvars

    renamed_roots = []   # per constituent: {party: Node}
    constraints = []
    for c, off in zip(cs, offsets):
        renamed_roots.append({r.party: _rename_node(r, off) for r in c.roots})
        for con in c.constraints:
            constraints.append(Constraint(con.party,
                                          _rename_group(con.lhs, off),
                                          _rename_group(con.rhs, off)))

    roots = []
    for beta in range(P):
        if beta == free_party:
            continue
        stacked = [g for rr in renamed_roots for g in rr[beta].groups]
        stacked.sort(key=_group_sort_key)
        roots.append(Node(beta, tuple(stacked), ()))
        for ra, rb in zip(renamed_roots, renamed_roots[1:]):
            constraints.append(Constraint(beta, ra[beta].groups[0], rb[beta].groups[0]))

    branches = []
    for c, rr in zip(cs, renamed_roots):
        trunk_kids = ()
        if c.trunk_party is not None:
            trunk_kids = rr[c.trunk_party].children
        branches.append(Node(free_party, rr[free_party].groups, trunk_kids))
    value = tuple(t for rr in renamed_roots for t in rr[free_party].groups[0])
    roots.insert(free_party, Node(free_party, (value,), tuple(branches)))

    depth = 1 + max(c.depth for c in cs)
    return ProtocolTree(P, tuple(roots), tuple(constraints), total, depth)


def group_value(g: Group, m: SeparableMeasurement, party: int,
                assignment) -> np.ndarray:
    out = np.zeros((m.dims[party], m.dims[party]), dtype=complex)
    for t in g:
        if t.var >= len(assignment):
            raise UnboundVariableError(f"variable {t.var} not bound")
        out += t.scale * float(assignment[t.var]) * m.part(t.op, party)
    return out


def _close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    scale = max(1.0, float(np.abs(a).max(initial=0.0)) + float(np.abs(b).max(initial=0.0)))
    return float(np.abs(a - b).max(initial=0.0)) <= tol * scale


def _check_shape(t: ProtocolTree, m: SeparableMeasurement):
    if t.P != m.P:
        raise TreeStructureError("tree and measurement disagree on party count")
    if len(t.roots) != t.P or sorted(r.party for r in t.roots) != list(range(t.P)):
        raise TreeStructureError("roots must cover each party exactly once")
    if sum(1 for r in t.roots if r.children) > 1:
        raise TreeStructureError("more than one branching root")

    def rec(n):
        if not n.groups or any(len(g) == 0 for g in n.groups):
            raise TreeStructureError("node with empty label")
        if n.children:
            p = n.children[0].party
            if any(c.party != p for c in n.children):
                raise TreeStructureError("children of one node must share a party")
            for c in n.children:
                rec(c)

    for r in t.roots:
        rec(r)


def validate_assignment(t: ProtocolTree, m: SeparableMeasurement, assignment,
                        *, pin_identities: bool = False,
                        tol: float = LP_TOL) -> bool:
    """True iff every alias pair, branching sum, and optional identity pin holds."""
    assignment = np.asarray(assignment, dtype=float)
    if assignment.ndim != 1 or len(assignment) < t.nvars:
        raise UnboundVariableError(
            f"assignment binds {assignment.size} variables, tree uses {t.nvars}")
    _check_shape(t, m)

    ok = True

    def aliases(n):
        base = group_value(n.groups[0], m, n.party, assignment)
        for g in n.groups[1:]:
            if not _close(group_value(g, m, n.party, assignment), base, tol):
                return False
        return all(aliases(c) for c in n.children)

    for r in t.roots:
        ok = ok and aliases(r)

    values = {r.party: group_value(r.groups[0], m, r.party, assignment)
              for r in t.roots}

    def down(n, values):
        values = dict(values)
        values[n.party] = group_value(n.groups[0], m, n.party, assignment)
        if not n.children:
            return True
        p = n.children[0].party
        total = sum(group_value(c.groups[0], m, p, assignment) for c in n.children)
        if not _close(total, values[p], tol):
            return False
        return all(down(c, values) for c in n.children)

    trunk = t.trunk_party
    if trunk is not None:
        ok = ok and down(root_for(t, trunk), values)

    if pin_identities:
        for a in range(t.P):
            eye = np.eye(m.dims[a], dtype=complex)
            if not _close(values[a], eye, tol):
                ok = False
    return ok


def walk_nodes(t: ProtocolTree):
    """Trunk-subtree nodes in preorder; empty for a one-outcome tree."""
    trunk = t.trunk_party
    if trunk is None:
        return []
    out = []

    def rec(n):
        out.append(n)
        for c in n.children:
            rec(c)

    rec(root_for(t, trunk))
    return out


def leaves(t: ProtocolTree):
    return [n for n in walk_nodes(t) if not n.children]


def coverage(t: ProtocolTree) -> set:
    trunk = t.trunk_party
    if trunk is None:
        return {term.op for r in t.roots for g in r.groups for term in g}
    return {term.op for n in leaves(t) for g in n.groups for term in g}


def leaf_products(t: ProtocolTree, m: SeparableMeasurement, assignment):
    """Per leaf, the tuple of carried party values (the realized local parts)."""
    assignment = np.asarray(assignment, dtype=float)
    values = {r.party: group_value(r.groups[0], m, r.party, assignment)
              for r in t.roots}
    trunk = t.trunk_party
    if trunk is None:
        return [(None, tuple(values[a] for a in range(t.P)))]
    out = []

    def rec(n, values):
        values = dict(values)
        values[n.party] = group_value(n.groups[0], m, n.party, assignment)
        if not n.children:
            out.append((n, tuple(values[a] for a in range(t.P))))
            return
        for c in n.children:
            rec(c, values)

    rec(root_for(t, trunk), values)
    return out


@dataclasses.dataclass(frozen=True)
class ExtractionResult:
    measurement: SeparableMeasurement
    weights: np.ndarray


def extract_measurement(t: ProtocolTree, m: SeparableMeasurement, assignment,
                        tol: float = LP_TOL) -> ExtractionResult:
    """The separable measurement the tree implements: trace-one parts + weights.

    Leaves with proportional products pool into one operator whose weight is
    the summed leaf weight, so normalization passes leave the result unchanged.
    """
    reps = []      # list of tuples of trace-1 parts
    weights = []
    for _, parts in leaf_products(t, m, assignment):
        c = 1.0
        normed = []
        for p in parts:
            tr = float(np.trace(p).real)
            if tr <= tol:
                raise ZeroOperatorError("leaf realizes a vanishing local part")
            c *= tr
            normed.append(p / tr)
        for i, rp in enumerate(reps):
            if all(_close(a, b, tol) for a, b in zip(normed, rp)):
                weights[i] += c
                break
        else:
            reps.append(tuple(normed))
            weights.append(c)
    ops = [ProductOperator(tuple(HermitianOperator(p) for p in parts))
           for parts in reps]
    out = SeparableMeasurement(ops, labels=[f"E{i + 1}" for i in range(len(ops))],
                               party_names=m.party_names)
    return ExtractionResult(out, np.array(weights))


def align_weights(t: ProtocolTree, m: SeparableMeasurement, assignment,
                  tol: float = LP_TOL):
    """Map each leaf to an input operator; return per-op weights and the
    completeness residual of the weighted sum against the identity."""
    w = np.zeros(len(m.ops))
    for _, parts in leaf_products(t, m, assignment):
        hits = []
        for j in range(len(m.ops)):
            ratios = []
            for a in range(m.P):
                try:
                    r = proportional(parts[a], m.part(j, a), tol)
                except ZeroOperatorError:
                    r = None
                if r is None or r <= 0:
                    break
                ratios.append(r)
            else:
                hits.append((j, float(np.prod(ratios))))
        if len(hits) != 1:
            raise TreeStructureError(
                f"leaf product matches {len(hits)} operators, expected exactly 1")
        j, c = hits[0]
        w[j] += c
    total = sum(w[j] * m.ops[j].product() for j in range(len(m.ops)))
    residual = float(np.abs(total - m.identity()).max(initial=0.0))
    return w, residual


def canonical_key(t: ProtocolTree):
    """Structural identity: party-tagged shape with sorted (op, scale) term sets.

    Invariant under root storage order, sibling order, group order, term order,
    and variable renaming.
    """

    def gkey(g):
        return tuple(sorted((term.op, round(term.scale, 9)) for term in g))

    def nkey(n):
        return (n.party,
                tuple(sorted(gkey(g) for g in n.groups)),
                tuple(sorted(nkey(c) for c in n.children)))

    return (t.P, tuple(sorted(nkey(r) for r in t.roots)))


def _used_vars(t: ProtocolTree) -> set:
    used = set()

    def rec(n):
        for g in n.groups:
            for term in g:
                used.add(term.var)
        for c in n.children:
            rec(c)

    for r in t.roots:
        rec(r)
    return used


def _structural_depth(roots) -> int:
    def rec(n):
        if not n.children:
            return 0
        return 1 + max(rec(c) for c in n.children)

    return max(rec(r) for r in roots)


def _refresh(t: ProtocolTree, roots) -> ProtocolTree:
    roots = tuple(roots)
    used = set()

    def collect(n):
        for g in n.groups:
            for term in g:
                used.add(term.var)
        for c in n.children:
            collect(c)

    for r in roots:
        collect(r)
    cons = tuple(c for c in t.constraints
                 if all(term.var in used for term in c.lhs + c.rhs))
    return ProtocolTree(t.P, roots, cons, t.nvars, _structural_depth(roots))


def prune_unitary_rounds(t: ProtocolTree) -> ProtocolTree:
    """Splice out single-outcome rounds; they carry no information."""

    def fix(n):
        kids = [fix(c) for c in n.children]
        while len(kids) == 1:
            kids = list(kids[0].children)
        return Node(n.party, n.groups, tuple(kids))

    return _refresh(t, (fix(r) for r in t.roots))


def compact_same_party(t: ProtocolTree) -> ProtocolTree:
    """Fold a child into its parent list when the child measures its own party
    again immediately; consecutive same-party rounds compose into one."""

    def fix(n):
        kids = [fix(c) for c in n.children]
        out = []
        for c in kids:
            if c.children and c.children[0].party == c.party:
                out.extend(c.children)
            else:
                out.append(c)
        return Node(n.party, n.groups, tuple(out))

    return _refresh(t, (fix(r) for r in t.roots))


def _scale_group(g: Group, f: float) -> Group:
    return tuple(Term(term.op, term.var, term.scale * f) for term in g)


def _scale_subtree(n: Node, up_party: int, down_party: int, lam: float) -> Node:
    if n.party == up_party:
        f = lam
    elif n.party == down_party:
        f = 1.0 / lam
    else:
        f = 1.0
    groups = n.groups if f == 1.0 else tuple(_scale_group(g, f) for g in n.groups)
    return Node(n.party, groups,
                tuple(_scale_subtree(c, up_party, down_party, lam) for c in n.children))


def eliminate_coin_flips(t: ProtocolTree, m: SeparableMeasurement, assignment,
                         tol: float = HERM_TOL) -> ProtocolTree:
    """Pool proportional sibling outcomes; a coin decides nothing physical.

    When some pooled sibling continues with the same party, its outcomes hoist
    unchanged and the other siblings pass through, which is exact. Otherwise
    the coin bias moves into the next measuring party: each sibling's share
    scales that party's node labels by its branch probability (and rescales
    later same-party labels of the pooled party back), preserving every leaf
    product and branching sum.
    """
    if t.trunk_party is None:
        return t
    assignment = np.asarray(assignment, dtype=float)

    def val(n):
        return group_value(n.groups[0], m, n.party, assignment)

    def pool_list(kids, anchors):
        """One pooling layer over a sibling list; returns (new_kids, changed)."""
        psi = kids[0].party
        classes = []   # list of [member nodes]
        vals = {}
        for c in kids:
            v = val(c)
            vals[id(c)] = v
            for cl in classes:
                try:
                    ratio = proportional(v, vals[id(cl[0])], tol)
                except ZeroOperatorError:
                    ratio = None
                if ratio is not None and ratio > 0:
                    cl.append(c)
                    break
            else:
                classes.append([c])
        if all(len(cl) == 1 for cl in classes):
            return kids, False

        out = []
        for cl in classes:
            if len(cl) == 1:
                out.append(cl[0])
                continue
            pooled_val = sum(vals[id(c)] for c in cl)
            tr_total = float(np.trace(pooled_val).real)
            lams = [float(np.trace(vals[id(c)]).real) / tr_total for c in cl]
            ngroups = (tuple(term for c in cl for term in c.groups[0]),)
            if any(c.children and c.children[0].party == psi for c in cl):
                nkids = []
                for c in cl:
                    if c.children and c.children[0].party == psi:
                        nkids.extend(c.children)
                    else:
                        nkids.append(c)
                out.append(Node(psi, ngroups, tuple(nkids)))
            elif all(not c.children for c in cl):
                out.append(Node(psi, ngroups, ()))
            else:
                beta = min(c.children[0].party for c in cl if c.children)
                anchor = anchors[beta]
                nkids = []
                for c, lam in zip(cl, lams):
                    if not c.children:
                        nkids.append(Node(beta, (_scale_group(anchor, lam),), ()))
                    elif c.children[0].party == beta:
                        nkids.extend(_scale_subtree(k, beta, psi, lam)
                                     for k in c.children)
                    else:
                        wrapped = tuple(_scale_subtree(k, beta, psi, lam)
                                        for k in c.children)
                        nkids.append(Node(beta, (_scale_group(anchor, lam),), wrapped))
                out.append(Node(psi, ngroups, tuple(nkids)))
        return out, True

    def sweep(n, anchors):
        anchors = dict(anchors)
        anchors[n.party] = n.groups[0]
        if not n.children:
            return n, False
        kids, changed = pool_list(list(n.children), anchors)
        if changed:
            return Node(n.party, n.groups, tuple(kids)), True
        rebuilt = []
        for c in kids:
            nc, ch = sweep(c, anchors)
            rebuilt.append(nc)
            changed = changed or ch
        return Node(n.party, n.groups, tuple(rebuilt)), changed

    limit = len(walk_nodes(t)) + 16
    roots = {r.party: r for r in t.roots}
    trunk = t.trunk_party
    for _ in range(limit):
        anchors = {p: r.groups[0] for p, r in roots.items()}
        new_trunk, changed = sweep(roots[trunk], anchors)
        roots[trunk] = new_trunk
        if not changed:
            break
    else:
        raise TreeStructureError("coin pooling failed to reach a fixed point")
    return _refresh(t, (roots[p] for p in sorted(roots)))
