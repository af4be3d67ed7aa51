"""Canonical pretty-printer: 4-space indent, one statement per line.

Functions open their brace on a new line; compound statements use K&R braces.
Parentheses are emitted only where precedence requires them.
"""
from .ast import (
    Assign, BinOp, Block, Break, Call, Continue, Decl, ExprStmt, FloatLit, For,
    If, Index, IntLit, Pragma, Program, Return, UnOp, Var,
)

INDENT = "    "

_PREC = {"||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "%": 6}
_UNARY_PREC = 7


def _prec(e):
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, UnOp):
        return _UNARY_PREC
    return 8


def format_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, FloatLit):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Index):
        return e.name + "".join("[%s]" % format_expr(i) for i in e.indices)
    if isinstance(e, Call):
        return "%s(%s)" % (e.name, ", ".join(format_expr(a) for a in e.args))
    if isinstance(e, UnOp):
        inner = format_expr(e.operand)
        if _prec(e.operand) <= _UNARY_PREC:
            inner = "(%s)" % inner
        return e.op + inner
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left, right = format_expr(e.left), format_expr(e.right)
        if _prec(e.left) < p:
            left = "(%s)" % left
        if _prec(e.right) <= p:
            right = "(%s)" % right
        return "%s %s %s" % (left, e.op, right)
    raise TypeError("not an expression: %r" % (e,))


def format_simple(s) -> str:
    """An assignment or call statement without the trailing semicolon."""
    if isinstance(s, ExprStmt):
        return format_expr(s.call)
    if s.op in ("++", "--"):
        return format_expr(s.target) + s.op
    return "%s %s %s" % (format_expr(s.target), s.op, format_expr(s.value))


def _decl(d) -> str:
    text = "%s %s%s" % (d.type, d.name, "".join("[%d]" % n for n in d.dims))
    if isinstance(d, Decl) and d.init is not None:
        text += " = " + format_expr(d.init)
    return text


class _Printer:
    def __init__(self):
        self.lines = []

    def emit(self, depth, text):
        self.lines.append(INDENT * depth + text)

    def stmt(self, s, depth):
        if isinstance(s, (Assign, ExprStmt)):
            self.emit(depth, format_simple(s) + ";")
        elif isinstance(s, Break):
            self.emit(depth, "break;")
        elif isinstance(s, Continue):
            self.emit(depth, "continue;")
        elif isinstance(s, Return):
            self.emit(depth, "return;" if s.value is None else "return %s;" % format_expr(s.value))
        elif isinstance(s, Pragma):
            self.emit(depth, "#" + s.text)
        elif isinstance(s, Block):
            self.emit(depth, "{")
            for c in s.stmts:
                self.stmt(c, depth + 1)
            self.emit(depth, "}")
        elif isinstance(s, For):
            for kind in s.annotations:
                self.emit(depth, "#pragma stml " + kind)
            head = "for (%s; %s; %s)" % (
                "" if s.init is None else format_simple(s.init),
                "" if s.cond is None else format_expr(s.cond),
                "" if s.step is None else format_simple(s.step))
            self.body(head, s.body, depth)
        elif isinstance(s, If):
            self.if_stmt(s, depth, "")
        else:
            raise TypeError("not a statement: %r" % (s,))

    def body(self, head, body, depth):
        """Emit a loop/if header with its body; True if the body was braced."""
        if isinstance(body, Block):
            self.emit(depth, head + " {")
            for c in body.stmts:
                self.stmt(c, depth + 1)
            self.emit(depth, "}")
            return True
        self.emit(depth, head)
        self.stmt(body, depth + 1)
        return False

    def if_stmt(self, s, depth, lead):
        braced = self.body(lead + "if (%s)" % format_expr(s.cond), s.then, depth)
        if s.orelse is None:
            return
        if braced:
            self.lines.pop()
            lead = "} else"
        else:
            lead = "else"
        if isinstance(s.orelse, If):
            self.if_stmt(s.orelse, depth, lead + " ")
        else:
            self.body(lead, s.orelse, depth)

    def function(self, f):
        self.lines.append("%s %s(%s)" % (f.ret_type, f.name, ", ".join(_decl(p) for p in f.params)))
        self.lines.append("{")
        for d in f.locals:
            self.emit(1, _decl(d) + ";")
        for s in f.body:
            self.stmt(s, 1)
        self.lines.append("}")


def print_program(p: Program) -> str:
    """Render ``p`` in the canonical style (always ends with a newline)."""
    pr = _Printer()
    for d in p.globals:
        pr.lines.append(_decl(d) + ";")
    for i, f in enumerate(p.functions):
        if i or p.globals:
            pr.lines.append("")
        pr.function(f)
    return "\n".join(pr.lines) + "\n" if pr.lines else ""
