"""Code abstraction: map a program to its 15-integer feature vector.

The vector is the state key of the Q table and the input of the readiness
classifier.  Index order is fixed (see ``FEATURES``).  Features 3, 4, 6 and 8
are flags; all others are counts over the whole program.
"""
from __future__ import annotations

import json
from typing import Iterator, Sequence, Tuple

from .errors import InvariantViolation, SchemaMismatch
from .minic.ast import (
    ITERATION_INDEPENDENT, LOOP_SCHEDULE, Assign, BinOp, Break, Call, Continue,
    For, If, Index, Program, Var, all_exprs, assignments, child_stmts, const_int,
    loop_var, own_exprs, read_names, sub_exprs, unit_step, walk_stmts,
    written_names,
)

SCHEMA = "stml-abs-v1"

FEATURES = (
    "max_nested_loop_depth",
    "function_calls",
    "shifted_array_writes",
    "irregular_loops",
    "global_writes",
    "if_statements",
    "non_static_loop_limits",
    "iteration_independent_loops",
    "has_loop_schedule",
    "loop_invariant_vars",
    "hoisted_var_modifications",
    "non_1d_arrays",
    "aux_index_vars",
    "total_for_loops",
    "non_normalized_loops",
)
NUM_FEATURES = len(FEATURES)
BINARY_FEATURES = (3, 4, 6, 8)

(MAX_DEPTH, CALLS, SHIFTED_WRITES, IRREGULAR, GLOBAL_WRITES, IFS, NON_STATIC,
 ITER_INDEPENDENT, LOOP_SCHED, INVARIANT_VARS, HOISTED_MODS, NON_1D_ARRAYS,
 AUX_INDEX, TOTAL_LOOPS, NON_NORMALIZED) = range(NUM_FEATURES)

AbstractionVector = Tuple[int, ...]


def _loops(stmts, stack=()) -> Iterator[Tuple[For, tuple]]:
    """Preorder (loop, enclosing loops) pairs."""
    for s in stmts:
        if isinstance(s, For):
            yield s, stack
            yield from _loops((s.body,), stack + (s,))
        else:
            yield from _loops(child_stmts(s), stack)


def _stmts_with_loops(stmts, stack=()):
    """Preorder (statement, enclosing loops) pairs.

    A loop's own init/cond/step count as enclosed by the loop itself, so the
    stack yielded for a ``For`` includes it.
    """
    for s in stmts:
        if isinstance(s, For):
            yield s, stack + (s,)
            yield from _stmts_with_loops((s.body,), stack + (s,))
        else:
            yield s, stack
            yield from _stmts_with_loops(child_stmts(s), stack)


def _outermost_loops(stmts):
    for s in stmts:
        if isinstance(s, For):
            yield s
        else:
            yield from _outermost_loops(child_stmts(s))


def _scalar_names(p: Program, f) -> set:
    names = {d.name for d in p.globals if not d.dims}
    names.update(d.name for d in f.params + f.locals if not d.dims)
    return names


def offset_from(e, var):
    """Constant c when ``e`` is ``var + c`` (or ``var``, ``c + var``, ``var - c``)."""
    if e == Var(var):
        return 0
    if isinstance(e, BinOp) and e.op in ("+", "-"):
        if e.left == Var(var):
            c = const_int(e.right)
            if c is not None:
                return c if e.op == "+" else -c
        if e.op == "+" and e.right == Var(var):
            return const_int(e.left)
    return None


# -- individual features ---------------------------------------------------------------

def count_shifted_writes(p: Program) -> int:
    """(loop, array) pairs written in one iteration at both a positive and a
    non-positive constant offset from the loop variable."""
    total = 0
    for f in p.functions:
        for loop, _ in _loops(f.body):
            v = loop_var(loop)
            if v is None:
                continue
            offsets = {}
            for a in assignments((loop.body,)):
                if not isinstance(a.target, Index):
                    continue
                for idx in a.target.indices:
                    off = offset_from(idx, v)
                    if off is not None:
                        offsets.setdefault(a.target.name, []).append(off)
                        break
            for offs in offsets.values():
                if any(o > 0 for o in offs) and any(o <= 0 for o in offs):
                    total += 1
    return total


def _is_derived_assignment(a: Assign, iter_vars: set) -> bool:
    if a.op != "=" or a.value is None:
        return False
    for e in sub_exprs(a.value):
        if isinstance(e, (Call, Index)):
            return False
        if isinstance(e, Var) and e.name not in iter_vars:
            return False
    return True


def count_aux_index_vars(p: Program) -> int:
    """Variables that index arrays inside a loop nest without being an
    iteration variable of an enclosing loop.

    Counted once per (outermost loop, variable).  Only variables updated
    inside the nest qualify; a variable whose every in-nest assignment is a
    plain function of enclosing iteration variables (``i = t / 3``) is a
    derived index, not an auxiliary one.
    """
    total = 0
    for f in p.functions:
        scalars = _scalar_names(p, f)
        for root in _outermost_loops(f.body):
            candidates = set()
            assigns = {}
            for s, stack in _stmts_with_loops((root,)):
                iter_vars = {loop_var(l) for l in stack}
                exprs = list(own_exprs(s))
                if isinstance(s, Assign):
                    exprs.append(s.target)
                for e in exprs:
                    if isinstance(e, Index):
                        for idx in e.indices:
                            for x in sub_exprs(idx):
                                if isinstance(x, Var) and x.name in scalars and x.name not in iter_vars:
                                    candidates.add(x.name)
                if isinstance(s, Assign) and isinstance(s.target, Var):
                    assigns.setdefault(s.target.name, []).append((s, iter_vars))
                elif isinstance(s, For):
                    inner_iter = {loop_var(l) for l in stack}
                    for clause in (s.init, s.step):
                        if clause is not None and isinstance(clause.target, Var):
                            name = clause.target.name
                            # the loop's own init/step define an iteration variable
                            if name == loop_var(s):
                                assigns.setdefault(name, []).append((None, inner_iter))
                            else:
                                assigns.setdefault(name, []).append((clause, inner_iter))
            for x in candidates:
                sites = assigns.get(x)
                if not sites:
                    continue
                derived = all(a is not None and _is_derived_assignment(a, iv) for a, iv in sites)
                if not derived:
                    total += 1
    return total


def loop_statics(p: Program):
    """(non_static_limits, non_normalized, max_depth, total_loops)."""
    non_static = 0
    non_normalized = 0
    max_depth = 0
    total = 0
    for f in p.functions:
        for loop, stack in _loops(f.body):
            total += 1
            max_depth = max(max_depth, len(stack))
            if not unit_step(loop):
                non_normalized += 1
            if loop.cond is None or non_static:
                continue
            own = loop_var(loop)
            root = stack[0] if stack else loop
            names = set()
            for e in sub_exprs(loop.cond):
                if isinstance(e, Call):
                    non_static = 1
                elif isinstance(e, (Var, Index)) and e.name != own:
                    names.add(e.name)
            if names & written_names((root,)):
                non_static = 1
    return non_static, non_normalized, max_depth, total


def _invariant_and_hoisted(p: Program):
    invariant = hoisted = 0
    for f in p.functions:
        scalars = _scalar_names(p, f)
        before = set()

        def visit(stmts):
            nonlocal invariant, hoisted
            for s in stmts:
                if isinstance(s, For):
                    inside = {a.target.name for a in assignments((s,)) if isinstance(a.target, Var)}
                    reads = read_names((s,))
                    iter_vars = {loop_var(l) for l, _ in _loops((s,))}
                    for x in before & scalars:
                        if x not in inside and x in reads:
                            invariant += 1
                        elif x in inside and x not in iter_vars:
                            hoisted += 1
                    before.update(inside)
                else:
                    if isinstance(s, Assign) and isinstance(s.target, Var):
                        before.add(s.target.name)
                    visit(child_stmts(s))

        visit(f.body)
    return invariant, hoisted


# -- the abstraction function -------------------------------------------------------------

def extract_features(p: Program) -> AbstractionVector:
    """The 15-element abstraction of ``p`` (pure and deterministic)."""
    v = [0] * NUM_FEATURES
    global_names = {d.name for d in p.globals}
    arrays = [d for d in p.globals if d.dims]
    for f in p.functions:
        arrays.extend(d for d in f.params + f.locals if d.dims)
        for e in all_exprs(f.body):
            if isinstance(e, Call):
                v[CALLS] += 1
        for s in walk_stmts(f.body):
            if isinstance(s, If):
                v[IFS] += 1
        for loop, _ in _loops(f.body):
            if ITERATION_INDEPENDENT in loop.annotations:
                v[ITER_INDEPENDENT] += 1
            if LOOP_SCHEDULE in loop.annotations:
                v[LOOP_SCHED] = 1
            if any(isinstance(s, (Break, Continue)) for s in walk_stmts((loop.body,))):
                v[IRREGULAR] = 1
        if any(a.target.name in global_names for a in assignments(f.body)):
            v[GLOBAL_WRITES] = 1
    for d in p.globals:
        if d.init is not None:
            v[CALLS] += sum(isinstance(e, Call) for e in sub_exprs(d.init))
    v[SHIFTED_WRITES] = count_shifted_writes(p)
    v[NON_STATIC], v[NON_NORMALIZED], v[MAX_DEPTH], v[TOTAL_LOOPS] = loop_statics(p)
    v[INVARIANT_VARS], v[HOISTED_MODS] = _invariant_and_hoisted(p)
    v[NON_1D_ARRAYS] = sum(1 for d in arrays if len(d.dims) >= 2)
    v[AUX_INDEX] = count_aux_index_vars(p)
    return tuple(v)


def check_invariants(v: Sequence[int]) -> None:
    """Raise InvariantViolation unless ``v`` is a well-formed abstraction vector."""
    if len(v) != NUM_FEATURES:
        raise InvariantViolation("abstraction vector must have %d entries, got %d" % (NUM_FEATURES, len(v)))
    for i, x in enumerate(v):
        if not isinstance(x, int) or isinstance(x, bool) or x < 0:
            raise InvariantViolation("feature %d (%s) must be a non-negative integer, got %r" % (i, FEATURES[i], x))
    for i in BINARY_FEATURES:
        if v[i] > 1:
            raise InvariantViolation("feature %d (%s) is binary, got %d" % (i, FEATURES[i], v[i]))
    loops = v[TOTAL_LOOPS]
    if loops == 0 and (v[MAX_DEPTH] or v[NON_NORMALIZED] or v[LOOP_SCHED]):
        raise InvariantViolation("loop features set without any loop: %r" % (tuple(v),))
    if loops > 0 and v[MAX_DEPTH] + 1 > loops:
        raise InvariantViolation("depth %d needs at least %d loops, have %d" % (v[MAX_DEPTH], v[MAX_DEPTH] + 1, loops))
    if v[NON_NORMALIZED] > loops or v[ITER_INDEPENDENT] > loops:
        raise InvariantViolation("per-loop counts exceed total loops: %r" % (tuple(v),))


def to_json(v: Sequence[int]) -> str:
    return json.dumps({"features": list(v), "schema": SCHEMA}, separators=(",", ":"))


def from_json(text: str) -> AbstractionVector:
    obj = json.loads(text)
    if obj.get("schema") != SCHEMA:
        raise SchemaMismatch("expected schema %s, got %r" % (SCHEMA, obj.get("schema")))
    v = tuple(int(x) for x in obj["features"])
    check_invariants(v)
    return v
