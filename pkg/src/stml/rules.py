"""Semantics-preserving rewrite rules: the action set of the learned strategy.

R0 and R1 are the array-flattening and loop-collapse rules of the
convolution example.  R2 (loop normalization) and R3 (auxiliary index
elimination) are extensions that give the action space a way to change the
non-normalized-loop and auxiliary-index features.

Each rule has a structural precondition (the node kind it rewrites) and
semantic guards (conditions under which the rewrite is provably
equivalent).  ``applicable`` only returns sites passing both.
"""
from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

from . import abstraction
from .errors import PreconditionViolated, SemanticGuardError
from .minic.ast import (
    INT_TYPES, ITERATION_INDEPENDENT, Assign, BinOp, Block, Break, Call, Continue,
    Decl, For, FunctionDef, Index, IntLit, Param, Program, Var, assignments,
    child_stmts, children, const_int, int_expr, loop_body_stmts, loop_var,
    map_stmt, node_at, own_exprs, replace_at, step_amount, sub_exprs, unit_step,
    walk_paths, walk_stmts, written_names,
)


class RuleId(enum.IntEnum):
    R0_flatten_array = 0
    R1_collapse_loops = 1
    R2_normalize_loop = 2
    R3_eliminate_aux_index = 3

    @property
    def short(self):
        return "R%d" % self.value

    @classmethod
    def parse(cls, text):
        text = str(text).strip()
        for r in cls:
            if text in (r.short, r.name) or text.lower() == r.name.lower():
                return r
        if text.isdigit() and int(text) < len(cls):
            return cls(int(text))
        raise ValueError("unknown rule %r (expected one of %s)" % (text, ", ".join(r.short for r in cls)))


RULE_INFO = {
    RuleId.R0_flatten_array: dict(
        precondition="array declared with two or more static dimensions, never passed whole to a call",
        delta="non_1d_arrays -1",
    ),
    RuleId.R1_collapse_loops: dict(
        precondition="perfect 2-deep nest, normalized loops with constant bounds, body free of "
                     "multi-dim accesses, break/continue and writes to either index, indices dead after the nest",
        delta="total_for_loops -1; max_nested_loop_depth -1 on the deepest nest",
    ),
    RuleId.R2_normalize_loop: dict(
        precondition="loop stepping its index by a constant > 1, invariant bounds, index not written "
                     "in the body and dead after the loop",
        delta="non_normalized_loops -1",
    ),
    RuleId.R3_eliminate_aux_index: dict(
        precondition="outermost normalized loop whose body updates an index variable once by a constant "
                     "at top level; variable used as a subscript, updated nowhere else, dead after the loop",
        delta="aux_index_vars -1",
    ),
}


@dataclass(frozen=True)
class Site:
    """Where a rule applies: a node path from the program root plus a target name."""
    path: Tuple[int, ...]
    target: str = ""

    def __str__(self):
        text = ".".join(str(i) for i in self.path)
        return text + ("@" + self.target if self.target else "")

    _RE = re.compile(r"^\d+(\.\d+)*(@[A-Za-z_][A-Za-z0-9_]*)?$")

    @classmethod
    def parse(cls, text):
        text = str(text).strip()
        if not cls._RE.match(text):
            raise ValueError("malformed site %r (expected e.g. '0.7@i')" % text)
        path, _, target = text.partition("@")
        return cls(tuple(int(x) for x in path.split(".")), target)


# -- shared guards --------------------------------------------------------------------

def _function_of(p: Program, path) -> Tuple[Optional[FunctionDef], tuple]:
    if not path or path[0] < len(p.globals):
        return None, ()
    return node_at(p, path[:1]), path[:1]


def _own_reads(s) -> set:
    names = {e.name for e in own_exprs(s) if isinstance(e, (Var, Index))}
    if isinstance(s, Assign) and s.op != "=":
        names.add(s.target.name)
    if isinstance(s, For):
        for clause in (s.init, s.step):
            if clause is not None and clause.op != "=":
                names.add(clause.target.name)
    return names


def _reads_outside(node, path, skip_path, name) -> bool:
    """Is ``name`` read anywhere under ``node`` except inside ``skip_path``?

    Loops that re-initialise ``name`` as their iteration variable are skipped.
    """
    for i, c in enumerate(children(node)):
        cp = path + (i,)
        if cp == skip_path or isinstance(c, (Decl, Param)):
            continue
        if isinstance(c, For) and loop_var(c) == name:
            continue
        if name in _own_reads(c) or _reads_outside(c, cp, skip_path, name):
            return True
    return False


def _is_local_int_scalar(f: FunctionDef, name) -> bool:
    d = f.declared(name)
    return d is not None and not d.dims and d.type in INT_TYPES


def _has_jump(stmts) -> Tuple[bool, bool]:
    """(break, continue) present at this loop level, ignoring nested loops."""
    brk = cont = False
    for s in stmts:
        if isinstance(s, Break):
            brk = True
        elif isinstance(s, Continue):
            cont = True
        elif not isinstance(s, For):
            b, c = _has_jump(child_stmts(s))
            brk, cont = brk or b, cont or c
    return brk, cont


def _invariant_expr(e, loop: For) -> bool:
    """No calls, and reads nothing the loop writes."""
    written = written_names((loop,))
    for x in sub_exprs(e):
        if isinstance(x, Call):
            return False
        if isinstance(x, (Var, Index)) and x.name in written:
            return False
    return True


def _inside_loop(p: Program, path) -> bool:
    return any(isinstance(node_at(p, path[:k]), For) for k in range(1, len(path)))


def _fresh_name(p: Program, f: FunctionDef, base: str) -> str:
    taken = {d.name for d in p.globals} | {g.name for g in p.functions}
    taken |= {d.name for d in f.params + f.locals}
    name, k = base, 1
    while name in taken:
        name = "%s%d" % (base, k)
        k += 1
    return name


def _add(e, k: int):
    if k == 0:
        return e
    return BinOp("+", e, IntLit(k)) if k > 0 else BinOp("-", e, IntLit(-k))


def _add_expr(e, a):
    c = const_int(a)
    if c is not None:
        return _add(e, c)
    return BinOp("+", e, a)


# -- R0: flatten array --------------------------------------------------------------------

def _check_r0(p, path, node, target):
    if not isinstance(node, (Decl, Param)):
        return PreconditionViolated, "site is not an array declaration"
    if target and target != node.name:
        return PreconditionViolated, "site declares '%s', not '%s'" % (node.name, target)
    if len(node.dims) < 2:
        return PreconditionViolated, "'%s' is not an array with two or more dimensions" % node.name
    f, _ = _function_of(p, path)
    scope = p.functions if f is None else (f,)
    for g in scope:
        for e in (x for s in walk_stmts(g.body) for x in own_exprs(s)):
            if isinstance(e, Call) and Var(node.name) in e.args:
                return SemanticGuardError, "'%s' is passed whole to '%s'" % (node.name, e.name)
    return None


def _apply_r0(p, path, node, target):
    dims = node.dims
    strides = [math.prod(dims[k + 1:]) for k in range(len(dims))]

    def flat(e):
        if isinstance(e, Index) and e.name == node.name:
            terms = [ix if s == 1 else BinOp("*", ix, IntLit(s)) for ix, s in zip(e.indices, strides)]
            acc = terms[0]
            for t in terms[1:]:
                acc = BinOp("+", acc, t)
            return Index(e.name, (acc,))
        return e

    new_decl = replace(node, dims=(math.prod(dims),))
    q = replace_at(p, path, new_decl)
    f, fpath = _function_of(q, path)
    targets = [(fpath, f)] if f is not None else [((len(q.globals) + i,), g) for i, g in enumerate(q.functions)]
    for fp, g in targets:
        q = replace_at(q, fp, replace(g, body=tuple(map_stmt(s, flat) for s in g.body)))
    return q


# -- R1: collapse loops ------------------------------------------------------------------------

def _bounds(loop: For):
    """(lower, upper) constants of ``for (v = a; v < b; v++)``, or None."""
    v = loop_var(loop)
    if v is None or not unit_step(loop):
        return None
    c = loop.cond
    if not (isinstance(c, BinOp) and c.op == "<" and c.left == Var(v)):
        return None
    a, b = const_int(loop.init.value), const_int(c.right)
    if a is None or b is None:
        return None
    return a, b


def _check_r1(p, path, node, target):
    if not isinstance(node, For):
        return PreconditionViolated, "site is not a for loop"
    f, fpath = _function_of(p, path)
    if f is None:
        return PreconditionViolated, "loop is not inside a function"
    if target and target != loop_var(node):
        return PreconditionViolated, "loop index is '%s', not '%s'" % (loop_var(node), target)
    body = loop_body_stmts(node)
    if len(body) != 1 or not isinstance(body[0], For):
        return PreconditionViolated, "not a perfect 2-deep loop nest"
    inner = body[0]
    outer_b, inner_b = _bounds(node), _bounds(inner)
    if outer_b is None or inner_b is None:
        return SemanticGuardError, "loops must be normalized with constant bounds"
    if outer_b[1] <= outer_b[0] or inner_b[1] <= inner_b[0]:
        return SemanticGuardError, "empty iteration space"
    v1, v2 = loop_var(node), loop_var(inner)
    if v1 == v2:
        return SemanticGuardError, "both loops use index '%s'" % v1
    for v in (v1, v2):
        if not _is_local_int_scalar(f, v):
            return SemanticGuardError, "index '%s' is not a local integer scalar" % v
    if any(a.target.name in (v1, v2) for a in assignments((inner.body,))):
        return SemanticGuardError, "loop body writes a loop index"
    if any(_has_jump(loop_body_stmts(inner))):
        return SemanticGuardError, "loop body contains break/continue"
    for s in walk_stmts((inner,)):
        for e in own_exprs(s):
            if isinstance(e, Index) and len(e.indices) > 1:
                return SemanticGuardError, "multi-dimensional access to '%s' inside the nest" % e.name
        if isinstance(s, Assign) and isinstance(s.target, Index) and len(s.target.indices) > 1:
            return SemanticGuardError, "multi-dimensional access to '%s' inside the nest" % s.target.name
    for v in (v1, v2):
        if _reads_outside(f, fpath, path, v):
            return SemanticGuardError, "index '%s' is read after the nest" % v
    return None


def _apply_r1(p, path, node, target):
    f, fpath = _function_of(p, path)
    inner = loop_body_stmts(node)[0]
    (a1, b1), (a2, b2) = _bounds(node), _bounds(inner)
    n1, n2 = b1 - a1, b2 - a2
    v1, v2 = loop_var(node), loop_var(inner)
    t = _fresh_name(p, f, "%s_%s" % (v1, v2))
    recover = (
        Assign(Var(v1), "=", _add(BinOp("/", Var(t), IntLit(n2)), a1)),
        Assign(Var(v2), "=", _add(BinOp("%", Var(t), IntLit(n2)), a2)),
    )
    ann = (ITERATION_INDEPENDENT,) if all(ITERATION_INDEPENDENT in l.annotations for l in (node, inner)) else ()
    collapsed = For(
        Assign(Var(t), "=", IntLit(0)),
        BinOp("<", Var(t), IntLit(n1 * n2)),
        Assign(Var(t), "++", None),
        Block(recover + loop_body_stmts(inner)),
        ann,
    )
    q = replace_at(p, path, collapsed)
    f = node_at(q, fpath)
    return replace_at(q, fpath, replace(f, locals=f.locals + (Decl("int", t),)))


# -- R2: normalize loop -----------------------------------------------------------------------

def _check_r2(p, path, node, target):
    if not isinstance(node, For):
        return PreconditionViolated, "site is not a for loop"
    f, fpath = _function_of(p, path)
    if f is None:
        return PreconditionViolated, "loop is not inside a function"
    v = loop_var(node)
    if target and target != v:
        return PreconditionViolated, "loop index is '%s', not '%s'" % (v, target)
    c = step_amount(node)
    if v is None or c is None or c < 2:
        return PreconditionViolated, "loop step is not a constant greater than 1"
    cond = node.cond
    if not (isinstance(cond, BinOp) and cond.op in ("<", "<=") and cond.left == Var(v)):
        return SemanticGuardError, "condition is not 'index < bound'"
    if not _is_local_int_scalar(f, v):
        return SemanticGuardError, "index '%s' is not a local integer scalar" % v
    for e in (node.init.value, cond.right):
        if any(x == Var(v) for x in sub_exprs(e)) or not _invariant_expr(e, node):
            return SemanticGuardError, "loop bounds are not invariant"
    if any(a.target.name == v for a in assignments((node.body,))):
        return SemanticGuardError, "loop body writes index '%s'" % v
    if _reads_outside(f, fpath, path, v):
        return SemanticGuardError, "index '%s' is read after the loop" % v
    return None


def _apply_r2(p, path, node, target):
    v = loop_var(node)
    c = step_amount(node)
    a, b = node.init.value, node.cond.right
    extra = c - 1 if node.cond.op == "<" else c
    ac, bc = const_int(a), const_int(b)
    if ac is not None and bc is not None:
        num = bc - ac + extra
        q = abs(num) // c
        trip = int_expr(-q if num < 0 else q)
    else:
        if ac is not None:
            num = _add(b, extra - ac)
        else:
            num = _add(BinOp("-", b, a), extra)
        trip = BinOp("/", num, IntLit(c))
    scaled = _add_expr(BinOp("*", IntLit(c), Var(v)), a)

    def sub(e):
        return scaled if e == Var(v) else e

    loop = For(
        Assign(Var(v), "=", IntLit(0)),
        BinOp("<", Var(v), trip),
        Assign(Var(v), "++", None),
        map_stmt(node.body, sub, targets=False),
        node.annotations,
    )
    return replace_at(p, path, loop)


# -- R3: eliminate auxiliary index -------------------------------------------------------------

def _aux_update(s, k) -> Optional[int]:
    """Constant increment when ``s`` is an update of ``k`` by a constant."""
    if not isinstance(s, Assign) or s.target != Var(k):
        return None
    if s.op == "++":
        return 1
    if s.op == "--":
        return -1
    if s.op in ("+=", "-="):
        c = const_int(s.value)
        return None if c is None else (c if s.op == "+=" else -c)
    if s.op == "=" and isinstance(s.value, BinOp) and s.value.op in ("+", "-"):
        l, r = s.value.left, s.value.right
        if l == Var(k):
            c = const_int(r)
            return None if c is None else (c if s.value.op == "+" else -c)
        if r == Var(k) and s.value.op == "+":
            return const_int(l)
    return None


def _r3_candidates(p, path, node):
    """Auxiliary index variables of loop ``node`` eligible for elimination."""
    f, fpath = _function_of(p, path)
    if f is None or not isinstance(node, For):
        return []
    j = loop_var(node)
    if j is None or not unit_step(node) or _inside_loop(p, path):
        return []
    if not _invariant_expr(node.init.value, node) or any(x == Var(j) for x in sub_exprs(node.init.value)):
        return []
    body = loop_body_stmts(node)
    subscripted = set()
    for s in walk_stmts((node,)):
        exprs = list(own_exprs(s))
        if isinstance(s, Assign):
            exprs.append(s.target)
        for e in exprs:
            if isinstance(e, Index):
                subscripted.update(x.name for ix in e.indices for x in sub_exprs(ix) if isinstance(x, Var))
    out = []
    for k in sorted(subscripted):
        if k == j or not _is_local_int_scalar(f, k):
            continue
        ups = [i for i, s in enumerate(body) if _aux_update(s, k) not in (None, 0)]
        if len(ups) != 1:
            continue
        if sum(1 for a in assignments((node,)) if a.target.name == k) != 1:
            continue
        if any(x == Var(k) for x in sub_exprs(node.cond)) if node.cond is not None else False:
            continue
        out.append((k, ups[0]))
    return out


def _reads_after(f, fpath, loop_path, name) -> bool:
    """Is ``name`` read in any statement that follows the loop in program order?"""
    seen = False
    for path, node in walk_paths(f, fpath):
        if path == loop_path:
            seen = True
            continue
        if not seen or path[:len(loop_path)] == loop_path:
            continue
        if isinstance(node, (Decl, Param)):
            continue
        if name in _own_reads(node):
            return True
    return False


def _check_r3(p, path, node, target):
    if not isinstance(node, For):
        return PreconditionViolated, "site is not a for loop"
    f, fpath = _function_of(p, path)
    if f is None:
        return PreconditionViolated, "loop is not inside a function"
    cands = dict(_r3_candidates(p, path, node))
    if target not in cands:
        return PreconditionViolated, "'%s' is not an eliminable auxiliary index of this loop" % target
    j = loop_var(node)
    if any(a.target.name == j for a in assignments((node.body,))):
        return SemanticGuardError, "loop body writes index '%s'" % j
    if _has_jump(loop_body_stmts(node))[1]:
        return SemanticGuardError, "loop body contains continue"
    if _reads_after(f, fpath, path, target):
        return SemanticGuardError, "'%s' is read after the loop" % target
    return None


def _apply_r3(p, path, node, target):
    k = target
    j = loop_var(node)
    body = loop_body_stmts(node)
    ups = dict(_r3_candidates(p, path, node))
    u = ups[k]
    c = _aux_update(body[u], k)
    a = node.init.value
    ac = const_int(a)

    def iteration(shift):
        # (j - a + shift), folded when a is constant
        if ac is not None:
            return _add(Var(j), shift - ac)
        return _add(BinOp("-", Var(j), a), shift)

    def closed(shift):
        it = iteration(shift)
        term = it if abs(c) == 1 else BinOp("*", it, IntLit(abs(c)))
        return BinOp("+" if c > 0 else "-", Var(k), term)

    def subst(expr):
        return lambda e: expr if e == Var(k) else e

    before = tuple(map_stmt(s, subst(closed(0)), targets=False) for s in body[:u])
    after = tuple(map_stmt(s, subst(closed(1)), targets=False) for s in body[u + 1:])
    return replace_at(p, path, replace(node, body=Block(before + after)))


_CHECKS = {
    RuleId.R0_flatten_array: _check_r0,
    RuleId.R1_collapse_loops: _check_r1,
    RuleId.R2_normalize_loop: _check_r2,
    RuleId.R3_eliminate_aux_index: _check_r3,
}
_APPLY = {
    RuleId.R0_flatten_array: _apply_r0,
    RuleId.R1_collapse_loops: _apply_r1,
    RuleId.R2_normalize_loop: _apply_r2,
    RuleId.R3_eliminate_aux_index: _apply_r3,
}


def _sites(p: Program, rule: RuleId):
    for path, node in walk_paths(p):
        if not path:
            continue
        if rule is RuleId.R0_flatten_array:
            if isinstance(node, (Decl, Param)) and _check_r0(p, path, node, node.name) is None:
                yield Site(path, node.name)
        elif rule is RuleId.R3_eliminate_aux_index:
            if isinstance(node, For):
                for k, _ in _r3_candidates(p, path, node):
                    if _check_r3(p, path, node, k) is None:
                        yield Site(path, k)
        elif isinstance(node, For) and _CHECKS[rule](p, path, node, "") is None:
            yield Site(path, loop_var(node))


def applicable(p: Program) -> List[Tuple[RuleId, Site]]:
    """Every (rule, site) whose precondition holds, in (rule, preorder) order."""
    return [(rule, site) for rule in RuleId for site in _sites(p, rule)]


def sites_for(p: Program, rule: RuleId) -> List[Site]:
    return list(_sites(p, RuleId(rule)))


def apply(p: Program, rule: RuleId, site: Site) -> Program:
    """Rewrite ``p`` at ``site`` with ``rule``; the input program is untouched.

    The result's abstraction is checked against the vector invariants.
    """
    rule = RuleId(rule)
    try:
        node = node_at(p, site.path)
    except IndexError:
        raise PreconditionViolated(rule.short, site, "path does not resolve") from None
    target = site.target
    if rule in (RuleId.R0_flatten_array,) and not target and isinstance(node, (Decl, Param)):
        target = node.name
    if rule is RuleId.R3_eliminate_aux_index and not target:
        raise PreconditionViolated(rule.short, site, "R3 needs a target variable")
    failure = _CHECKS[rule](p, site.path, node, target)
    if failure is not None:
        kind, reason = failure
        if kind is PreconditionViolated:
            raise PreconditionViolated(rule.short, site, reason)
        raise SemanticGuardError("%s at site %s: %s" % (rule.short, site, reason))
    q = _APPLY[rule](p, site.path, node, target)
    abstraction.check_invariants(abstraction.extract_features(q))
    return q
