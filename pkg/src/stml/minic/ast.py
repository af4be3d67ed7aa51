"""Immutable AST for the mini-C subset.

All nodes are frozen dataclasses holding tuples, so structural equality is
plain ``==`` and programs can be shared freely between threads.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterator, Optional, Tuple, Union

LOOP_SCHEDULE = "loop_schedule"
ITERATION_INDEPENDENT = "iteration_independent"
ANNOTATION_KINDS = (LOOP_SCHEDULE, ITERATION_INDEPENDENT)

INT_TYPES = ("int", "long")
FLOAT_TYPES = ("float", "double")


# -- expressions -------------------------------------------------------------

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class FloatLit:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    name: str
    indices: Tuple["Expr", ...]


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnOp:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Expr", ...]


Expr = Union[IntLit, FloatLit, Var, Index, BinOp, UnOp, Call]


# -- statements ----------------------------------------------------------------

@dataclass(frozen=True)
class Assign:
    """``target op value``; ``op`` is one of = += -= *= /= %= ++ --.

    For ``++``/``--`` the value is None.
    """
    target: Union[Var, Index]
    op: str
    value: Optional[Expr]


@dataclass(frozen=True)
class ExprStmt:
    call: Call


@dataclass(frozen=True)
class Block:
    stmts: Tuple["Stmt", ...]


@dataclass(frozen=True)
class For:
    init: Optional[Assign]
    cond: Optional[Expr]
    step: Optional[Assign]
    body: "Stmt"
    annotations: Tuple[str, ...] = ()


@dataclass(frozen=True)
class If:
    cond: Expr
    then: "Stmt"
    orelse: Optional["Stmt"] = None


@dataclass(frozen=True)
class Break:
    pass


@dataclass(frozen=True)
class Continue:
    pass


@dataclass(frozen=True)
class Return:
    value: Optional[Expr] = None


@dataclass(frozen=True)
class Pragma:
    """A non-stml pragma line kept verbatim (without the leading ``#``)."""
    text: str


Stmt = Union[Assign, ExprStmt, Block, For, If, Break, Continue, Return, Pragma]


# -- declarations ----------------------------------------------------------------

@dataclass(frozen=True)
class Decl:
    type: str
    name: str
    dims: Tuple[int, ...] = ()
    init: Optional[Expr] = None

    @property
    def is_array(self):
        return bool(self.dims)


@dataclass(frozen=True)
class Param:
    type: str
    name: str
    dims: Tuple[int, ...] = ()

    @property
    def is_array(self):
        return bool(self.dims)


@dataclass(frozen=True)
class FunctionDef:
    ret_type: str
    name: str
    params: Tuple[Param, ...] = ()
    locals: Tuple[Decl, ...] = ()
    body: Tuple[Stmt, ...] = ()

    def declared(self, name):
        for d in self.params + self.locals:
            if d.name == name:
                return d
        return None


@dataclass(frozen=True)
class Program:
    globals: Tuple[Decl, ...] = ()
    functions: Tuple[FunctionDef, ...] = ()

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def global_decl(self, name):
        for d in self.globals:
            if d.name == name:
                return d
        return None


Node = Union[Program, FunctionDef, Decl, Param, Stmt]


# -- generic traversal -------------------------------------------------------------

def sub_exprs(e: Expr) -> Iterator[Expr]:
    """Preorder over an expression and all its subexpressions."""
    yield e
    if isinstance(e, Index):
        for i in e.indices:
            yield from sub_exprs(i)
    elif isinstance(e, BinOp):
        yield from sub_exprs(e.left)
        yield from sub_exprs(e.right)
    elif isinstance(e, UnOp):
        yield from sub_exprs(e.operand)
    elif isinstance(e, Call):
        for a in e.args:
            yield from sub_exprs(a)


def map_expr(e: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Rebuild ``e`` bottom-up, applying ``fn`` to every node."""
    if isinstance(e, Index):
        e = Index(e.name, tuple(map_expr(i, fn) for i in e.indices))
    elif isinstance(e, BinOp):
        e = BinOp(e.op, map_expr(e.left, fn), map_expr(e.right, fn))
    elif isinstance(e, UnOp):
        e = UnOp(e.op, map_expr(e.operand, fn))
    elif isinstance(e, Call):
        e = Call(e.name, tuple(map_expr(a, fn) for a in e.args))
    return fn(e)


def child_stmts(s: Stmt) -> Tuple[Stmt, ...]:
    if isinstance(s, Block):
        return s.stmts
    if isinstance(s, For):
        return (s.body,)
    if isinstance(s, If):
        return (s.then,) if s.orelse is None else (s.then, s.orelse)
    return ()


def walk_stmts(stmts) -> Iterator[Stmt]:
    """Preorder over statements, descending into compound statements."""
    for s in stmts:
        yield s
        yield from walk_stmts(child_stmts(s))


def target_reads(t: Union[Var, Index]) -> Iterator[Expr]:
    """Expressions read when evaluating an assignment target's address."""
    if isinstance(t, Index):
        for i in t.indices:
            yield from sub_exprs(i)


def own_exprs(s: Stmt) -> Iterator[Expr]:
    """Every expression node owned directly by ``s`` (not by child statements).

    Assignment targets are not yielded themselves; their subscripts are.
    """
    if isinstance(s, Assign):
        yield from target_reads(s.target)
        if s.value is not None:
            yield from sub_exprs(s.value)
    elif isinstance(s, ExprStmt):
        yield from sub_exprs(s.call)
    elif isinstance(s, For):
        if s.init is not None:
            yield from own_exprs(s.init)
        if s.cond is not None:
            yield from sub_exprs(s.cond)
        if s.step is not None:
            yield from own_exprs(s.step)
    elif isinstance(s, If):
        yield from sub_exprs(s.cond)
    elif isinstance(s, Return) and s.value is not None:
        yield from sub_exprs(s.value)


def all_exprs(stmts) -> Iterator[Expr]:
    for s in walk_stmts(stmts):
        yield from own_exprs(s)


def assignments(stmts) -> Iterator[Assign]:
    """All assignments, including for-loop init and step clauses."""
    for s in walk_stmts(stmts):
        if isinstance(s, Assign):
            yield s
        elif isinstance(s, For):
            if s.init is not None:
                yield s.init
            if s.step is not None:
                yield s.step


def target_name(t: Union[Var, Index]) -> str:
    return t.name


def read_names(stmts) -> set:
    """Names read anywhere in ``stmts`` (compound assignments read their target)."""
    names = set()
    for e in all_exprs(stmts):
        if isinstance(e, (Var, Index)):
            names.add(e.name)
    for a in assignments(stmts):
        if a.op != "=":
            names.add(a.target.name)
    return names


def written_names(stmts) -> set:
    """Names assigned anywhere, plus arrays passed whole to a call."""
    names = {a.target.name for a in assignments(stmts)}
    for e in all_exprs(stmts):
        if isinstance(e, Call):
            names.update(a.name for a in e.args if isinstance(a, Var))
    return names


def map_stmt(s: Stmt, fn: Callable[[Expr], Expr], targets: bool = True) -> Stmt:
    """Apply ``map_expr(_, fn)`` to every expression in a statement tree.

    With ``targets`` the function also sees assignment targets (so an
    ``Index`` target can be rewritten); bare ``Var`` targets are only
    rewritten if ``fn`` returns another ``Var`` or ``Index``.
    """
    def m(e):
        return None if e is None else map_expr(e, fn)

    def mt(t):
        if isinstance(t, Index):
            t = Index(t.name, tuple(m(i) for i in t.indices))
        if targets:
            new = fn(t)
            if isinstance(new, (Var, Index)):
                return new
        return t

    if isinstance(s, Assign):
        return Assign(mt(s.target), s.op, m(s.value))
    if isinstance(s, ExprStmt):
        return ExprStmt(m(s.call))
    if isinstance(s, Block):
        return Block(tuple(map_stmt(c, fn, targets) for c in s.stmts))
    if isinstance(s, For):
        return For(
            None if s.init is None else map_stmt(s.init, fn, targets),
            m(s.cond),
            None if s.step is None else map_stmt(s.step, fn, targets),
            map_stmt(s.body, fn, targets),
            s.annotations,
        )
    if isinstance(s, If):
        return If(m(s.cond), map_stmt(s.then, fn, targets),
                  None if s.orelse is None else map_stmt(s.orelse, fn, targets))
    if isinstance(s, Return):
        return Return(m(s.value))
    return s


# -- node paths ----------------------------------------------------------------------

def children(node) -> tuple:
    """Child nodes addressed by site paths.

    Program -> globals + functions; FunctionDef -> params + locals + body;
    compound statements -> their child statements.  Expressions are not
    addressable.
    """
    if isinstance(node, Program):
        return node.globals + node.functions
    if isinstance(node, FunctionDef):
        return node.params + node.locals + node.body
    if isinstance(node, (Block, For, If)):
        return child_stmts(node)
    return ()


def walk_paths(node, path=()) -> Iterator[Tuple[tuple, object]]:
    """Preorder (path, node) pairs below ``node``."""
    yield path, node
    for i, c in enumerate(children(node)):
        yield from walk_paths(c, path + (i,))


def node_at(root, path):
    node = root
    for i in path:
        kids = children(node)
        if not 0 <= i < len(kids):
            raise IndexError("path %s does not resolve" % (list(path),))
        node = kids[i]
    return node


def _with_child(node, i, new):
    if isinstance(node, Program):
        n = len(node.globals)
        if i < n:
            return replace(node, globals=node.globals[:i] + (new,) + node.globals[i + 1:])
        i -= n
        return replace(node, functions=node.functions[:i] + (new,) + node.functions[i + 1:])
    if isinstance(node, FunctionDef):
        parts = [list(node.params), list(node.locals), list(node.body)]
        for part in parts:
            if i < len(part):
                part[i] = new
                break
            i -= len(part)
        return replace(node, params=tuple(parts[0]), locals=tuple(parts[1]), body=tuple(parts[2]))
    if isinstance(node, Block):
        return Block(node.stmts[:i] + (new,) + node.stmts[i + 1:])
    if isinstance(node, For):
        return replace(node, body=new)
    if isinstance(node, If):
        return replace(node, then=new) if i == 0 else replace(node, orelse=new)
    raise IndexError("node has no children")


def replace_at(root, path, new):
    """Return a copy of ``root`` with the node at ``path`` replaced by ``new``."""
    if not path:
        return new
    parent = node_at(root, path[:1])
    return _with_child(root, path[0], replace_at(parent, path[1:], new))


# -- small helpers used by rules and features -------------------------------------------

def const_int(e) -> Optional[int]:
    """Fold an integer-literal expression, or None if it is not constant."""
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, UnOp) and e.op == "-":
        v = const_int(e.operand)
        return None if v is None else -v
    if isinstance(e, BinOp) and e.op in ("+", "-", "*", "/", "%"):
        a, b = const_int(e.left), const_int(e.right)
        if a is None or b is None:
            return None
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0:
            return None
        q = abs(a) // abs(b)
        q = -q if (a < 0) != (b < 0) else q
        return q if e.op == "/" else a - b * q
    return None


def int_expr(v: int) -> Expr:
    """An expression for integer ``v`` that prints and re-parses identically."""
    return IntLit(v) if v >= 0 else UnOp("-", IntLit(-v))


def loop_var(loop: For) -> Optional[str]:
    """Iteration variable of a ``for`` loop: the scalar assigned by its init."""
    if loop.init is not None and isinstance(loop.init.target, Var) and loop.init.op == "=":
        return loop.init.target.name
    return None


def unit_step(loop: For) -> bool:
    """True iff the step clause increments the iteration variable by exactly 1."""
    v = loop_var(loop)
    s = loop.step
    if v is None or s is None or not isinstance(s.target, Var) or s.target.name != v:
        return False
    if s.op == "++":
        return True
    if s.op == "+=":
        return const_int(s.value) == 1
    if s.op == "=" and isinstance(s.value, BinOp) and s.value.op == "+":
        l, r = s.value.left, s.value.right
        return (l == Var(v) and const_int(r) == 1) or (r == Var(v) and const_int(l) == 1)
    return False


def step_amount(loop: For) -> Optional[int]:
    """Constant increment of the iteration variable, or None if not of that form."""
    v = loop_var(loop)
    s = loop.step
    if v is None or s is None or not isinstance(s.target, Var) or s.target.name != v:
        return None
    if s.op == "++":
        return 1
    if s.op == "--":
        return -1
    if s.op == "+=":
        return const_int(s.value)
    if s.op == "-=":
        c = const_int(s.value)
        return None if c is None else -c
    if s.op == "=" and isinstance(s.value, BinOp) and s.value.op == "+":
        l, r = s.value.left, s.value.right
        if l == Var(v):
            return const_int(r)
        if r == Var(v):
            return const_int(l)
    return None


def loop_body_stmts(loop: For) -> Tuple[Stmt, ...]:
    return loop.body.stmts if isinstance(loop.body, Block) else (loop.body,)
