"""Recursive-descent parser for the mini-C subset.

Declarations found anywhere inside a function body are hoisted into the
function's local list; an initializer becomes an assignment at the original
position.  ``parse(print_program(p)) == p`` therefore holds for every parsed
program even though the input may declare variables mid-block.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ParseError, UnsupportedConstruct
from .ast import (
    ANNOTATION_KINDS, Assign, BinOp, Block, Break, Call, Continue, Decl, ExprStmt,
    FloatLit, For, FunctionDef, If, Index, IntLit, Param, Pragma, Program, Return,
    UnOp, Var,
)

TYPE_KEYWORDS = {"int", "long", "float", "double", "void"}
UNSUPPORTED_KEYWORDS = {
    "while", "do", "goto", "switch", "case", "default", "struct", "union", "enum",
    "typedef", "char", "short", "unsigned", "signed", "const", "static", "extern",
    "volatile", "register", "sizeof", "auto",
}
KEYWORDS = TYPE_KEYWORDS | UNSUPPORTED_KEYWORDS | {"for", "if", "else", "break", "continue", "return"}

_OPERATORS = [
    "<<=", ">>=", "++", "--", "+=", "-=", "*=", "/=", "%=", "==", "!=", "<=", ">=",
    "&&", "||", "->", "<<", ">>", "&=", "|=", "^=",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "(", ")", "{", "}", "[", "]",
    ";", ",", "&", "|", "^", "~", "?", ":", ".",
]
_UNSUPPORTED_OPS = {
    "->": "->", ".": "member access", "&": "&", "|": "|", "^": "^", "~": "~",
    "?": "conditional operator", ":": ":", "<<": "<<", ">>": ">>",
    "<<=": "<<=", ">>=": ">>=", "&=": "&=", "|=": "|=", "^=": "^=",
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?[fF]?|\d+[eE][+-]?\d+[fF]?)
  | (?P<int>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>%s)
""" % "|".join(re.escape(o) for o in _OPERATORS), re.VERBOSE | re.DOTALL)


@dataclass
class Token:
    kind: str  # id, kw, int, float, op, pragma, eof
    text: str
    line: int
    col: int


def tokenize(src: str):
    tokens = []
    pos, line, line_start = 0, 1, 0
    at_line_start = True
    n = len(src)
    while pos < n:
        col = pos - line_start + 1
        ch = src[pos]
        if ch == "#":
            if not at_line_start:
                raise ParseError("'#' must start a line", line, col)
            end = src.find("\n", pos)
            end = n if end == -1 else end
            text = src[pos + 1:end].strip()
            tokens.append(Token("pragma", text, line, col))
            pos = end
            continue
        if ch in "\"'":
            raise UnsupportedConstruct("string or character literal", line, col)
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError("unexpected character %r" % ch, line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "nl":
            line += 1
            line_start = m.end()
            at_line_start = True
        elif kind == "bcomment":
            nls = text.count("\n")
            if nls:
                line += nls
                line_start = pos + text.rfind("\n") + 1
        elif kind in ("ws", "lcomment"):
            pass
        else:
            if kind == "id" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, line, col))
            at_line_start = False
        pos = m.end()
    if src.startswith("/*", pos):
        raise ParseError("unterminated comment", line, pos - line_start + 1)
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Scope:
    def __init__(self, globals_):
        self.globals = globals_  # name -> Decl
        self.locals = {}  # name -> Param or Decl

    def lookup(self, name):
        return self.locals.get(name) or self.globals.get(name)


class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.globals = {}
        self.global_list = []
        self.functions = []
        self.function_names = set()
        self.scope = None
        self.loop_depth = 0
        self.hoisted = []

    # -- token helpers ---------------------------------------------------------
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def unsupported(self, what, tok=None):
        tok = tok or self.tok
        return UnsupportedConstruct(what, tok.line, tok.col)

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and t.kind in ((kind,) if kind else ("op", "kw"))

    def accept(self, text):
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text):
        if not self.at(text):
            self.check_unsupported()
            found = self.tok.text or "end of input"
            raise self.error("expected '%s' but found '%s'" % (text, found))
        self.i += 1

    def expect_id(self):
        t = self.tok
        if t.kind != "id":
            self.check_unsupported()
            raise self.error("expected identifier but found '%s'" % (t.text or "end of input"))
        self.i += 1
        return t

    def check_unsupported(self):
        t = self.tok
        if t.kind == "kw" and t.text in UNSUPPORTED_KEYWORDS:
            raise self.unsupported(t.text)
        if t.kind == "op" and t.text in _UNSUPPORTED_OPS:
            raise self.unsupported(_UNSUPPORTED_OPS[t.text])

    # -- top level ---------------------------------------------------------------
    def parse_program(self):
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind == "pragma":
                if t.text.split()[:2] == ["pragma", "stml"]:
                    raise self.error("dangling annotation '#%s' at top level" % t.text)
                word = t.text.split()[0] if t.text else ""
                raise self.unsupported("#" + word if word else "#")
            typ = self.parse_type()
            name = self.expect_id()
            if self.at("("):
                self.parse_function(typ, name)
            else:
                self.parse_global_decls(typ, name)
        return Program(tuple(self.global_list), tuple(self.functions))

    def parse_type(self):
        t = self.tok
        if t.kind == "kw" and t.text in TYPE_KEYWORDS:
            self.i += 1
            if self.at("*"):
                raise self.unsupported("pointer")
            return t.text
        self.check_unsupported()
        raise self.error("expected a type but found '%s'" % (t.text or "end of input"))

    def parse_dims(self, allow_empty=False):
        dims = []
        while self.at("["):
            self.i += 1
            t = self.tok
            if t.kind != "int":
                raise self.error("array dimension must be an integer literal", t)
            self.i += 1
            if int(t.text) <= 0:
                raise self.error("array dimension must be positive", t)
            dims.append(int(t.text))
            self.expect("]")
        return tuple(dims)

    def declare(self, table, name_tok, decl):
        name = name_tok.text
        if name in table or name in self.globals or name in self.function_names:
            raise self.error("redeclaration of '%s'" % name, name_tok)
        table[name] = decl

    def parse_global_decls(self, typ, name_tok):
        while True:
            dims = self.parse_dims()
            init = None
            if self.accept("="):
                if self.at("{"):
                    raise self.unsupported("array initializer")
                self.scope = _Scope(self.globals)
                init = self.parse_expr()
                self.scope = None
                if dims:
                    raise self.error("array '%s' cannot have a scalar initializer" % name_tok.text, name_tok)
            if typ == "void":
                raise self.error("variable '%s' declared void" % name_tok.text, name_tok)
            d = Decl(typ, name_tok.text, dims, init)
            if name_tok.text in self.globals or name_tok.text in self.function_names:
                raise self.error("redeclaration of '%s'" % name_tok.text, name_tok)
            self.globals[name_tok.text] = d
            self.global_list.append(d)
            if not self.accept(","):
                break
            name_tok = self.expect_id()
        self.expect(";")

    def parse_function(self, ret_type, name_tok):
        if name_tok.text in self.globals or name_tok.text in self.function_names:
            raise self.error("redeclaration of '%s'" % name_tok.text, name_tok)
        self.function_names.add(name_tok.text)
        self.scope = _Scope(self.globals)
        self.hoisted = []
        self.expect("(")
        params = []
        if self.at("void") and self.peek().text == ")":
            self.i += 1
        elif not self.at(")"):
            while True:
                ptype = self.parse_type()
                if ptype == "void":
                    raise self.error("parameter declared void")
                pname = self.expect_id()
                if self.at("[") and self.peek().text == "]":
                    raise self.error("array parameter '%s' needs static dimensions" % pname.text, pname)
                p = Param(ptype, pname.text, self.parse_dims())
                self.declare(self.scope.locals, pname, p)
                params.append(p)
                if not self.accept(","):
                    break
        self.expect(")")
        if self.at(";"):
            raise self.unsupported("function prototype")
        self.expect("{")
        body = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                raise self.error("unexpected end of input in function '%s'" % name_tok.text)
            body.extend(self.parse_stmt_or_decl())
        self.expect("}")
        self.functions.append(FunctionDef(ret_type, name_tok.text, tuple(params),
                                          tuple(self.hoisted), tuple(body)))
        self.scope = None

    # -- statements --------------------------------------------------------------
    def parse_local_decls(self):
        """Parse ``type a, b[2] = ...;`` and return the initializer assignments."""
        typ = self.parse_type()
        if typ == "void":
            raise self.error("variable declared void")
        out = []
        while True:
            name_tok = self.expect_id()
            dims = self.parse_dims()
            d = Decl(typ, name_tok.text, dims)
            self.declare(self.scope.locals, name_tok, d)
            self.hoisted.append(d)
            if self.accept("="):
                if self.at("{"):
                    raise self.unsupported("array initializer")
                if dims:
                    raise self.error("array '%s' cannot have a scalar initializer" % name_tok.text, name_tok)
                out.append(Assign(Var(name_tok.text), "=", self.parse_expr()))
            if not self.accept(","):
                break
        return out

    def parse_stmt_or_decl(self):
        """Return a list of statements (empty for a bare declaration)."""
        t = self.tok
        if t.kind == "kw" and t.text in TYPE_KEYWORDS:
            stmts = self.parse_local_decls()
            self.expect(";")
            return stmts
        return [self.parse_stmt()]

    def parse_stmt(self):
        t = self.tok
        if t.kind == "pragma":
            return self.parse_pragma()
        if t.kind == "kw":
            if t.text == "for":
                return self.parse_for(())
            if t.text == "if":
                self.i += 1
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                then = self.parse_sub_stmt()
                orelse = None
                if self.accept("else"):
                    orelse = self.parse_sub_stmt()
                return If(cond, then, orelse)
            if t.text in ("break", "continue"):
                if self.loop_depth == 0:
                    raise self.error("'%s' outside of a loop" % t.text)
                self.i += 1
                self.expect(";")
                return Break() if t.text == "break" else Continue()
            if t.text == "return":
                self.i += 1
                value = None if self.at(";") else self.parse_expr()
                self.expect(";")
                return Return(value)
            if t.text in TYPE_KEYWORDS:
                raise self.error("declaration not allowed here")
            if t.text == "else":
                raise self.error("'else' without 'if'")
            self.check_unsupported()
        if self.at("{"):
            self.i += 1
            stmts = []
            while not self.at("}"):
                if self.tok.kind == "eof":
                    raise self.error("unexpected end of input in block")
                stmts.extend(self.parse_stmt_or_decl())
            self.i += 1
            return Block(tuple(stmts))
        if self.at(";"):
            self.i += 1
            return Block(())
        s = self.parse_simple()
        self.expect(";")
        return s

    def parse_sub_stmt(self):
        # a declaration as the direct body of for/if is hoisted like any other
        if self.tok.kind == "kw" and self.tok.text in TYPE_KEYWORDS:
            stmts = self.parse_local_decls()
            self.expect(";")
            return stmts[0] if len(stmts) == 1 else Block(tuple(stmts))
        return self.parse_stmt()

    def parse_pragma(self):
        first = self.tok
        words = first.text.split()
        if words[:2] != ["pragma", "stml"]:
            if not words or words[0] != "pragma":
                raise self.unsupported("#" + (words[0] if words else ""))
            self.i += 1
            return Pragma(first.text)
        kinds = []
        while self.tok.kind == "pragma" and self.tok.text.split()[:2] == ["pragma", "stml"]:
            words = self.tok.text.split()
            if len(words) != 3 or words[2] not in ANNOTATION_KINDS:
                raise self.error("unknown stml annotation '#%s'" % self.tok.text)
            if words[2] not in kinds:
                kinds.append(words[2])
            self.i += 1
        if not self.at("for"):
            raise self.error("dangling annotation: '#pragma stml %s' must precede a for loop" % kinds[-1], first)
        return self.parse_for(tuple(kinds))

    def parse_for(self, annotations):
        self.expect("for")
        self.expect("(")
        init = None
        if self.tok.kind == "kw" and self.tok.text in TYPE_KEYWORDS:
            inits = self.parse_local_decls()
            if len(inits) != 1:
                raise self.error("for-loop declaration must initialize exactly one variable")
            init = inits[0]
        elif not self.at(";"):
            init = self.parse_simple(assign_only=True)
        if self.at(","):
            raise self.unsupported("comma operator")
        self.expect(";")
        cond = None if self.at(";") else self.parse_expr()
        self.expect(";")
        step = None if self.at(")") else self.parse_simple(assign_only=True)
        if self.at(","):
            raise self.unsupported("comma operator")
        self.expect(")")
        self.loop_depth += 1
        body = self.parse_sub_stmt()
        self.loop_depth -= 1
        return For(init, cond, step, body, annotations)

    def parse_simple(self, assign_only=False):
        t = self.tok
        if self.at("++") or self.at("--"):
            self.i += 1
            target = self.parse_lvalue()
            return Assign(target, t.text, None)
        if t.kind == "id" and self.peek().text == "(" and not assign_only:
            call = self.parse_postfix()
            if not isinstance(call, Call):
                raise self.error("expected a statement", t)
            return ExprStmt(call)
        target = self.parse_lvalue()
        op = self.tok
        if op.kind == "op" and op.text in ("++", "--"):
            self.i += 1
            return Assign(target, op.text, None)
        if op.kind == "op" and op.text in ("=", "+=", "-=", "*=", "/=", "%="):
            self.i += 1
            value = self.parse_expr()
            if self.at("=") or self.tok.text in ("+=", "-=", "*=", "/=", "%="):
                raise self.unsupported("chained assignment")
            return Assign(target, op.text, value)
        self.check_unsupported()
        raise self.error("expected assignment operator but found '%s'" % (op.text or "end of input"))

    def parse_lvalue(self):
        t = self.tok
        if t.kind != "id":
            self.check_unsupported()
            if self.at("*"):
                raise self.unsupported("pointer")
            raise self.error("expected assignable expression but found '%s'" % (t.text or "end of input"))
        if t.text in self.function_names and self.scope.lookup(t.text) is None:
            raise self.error("cannot assign to function '%s'" % t.text)
        e = self.parse_postfix()
        if isinstance(e, Var) and self.scope.lookup(e.name).is_array:
            raise self.error("cannot assign to whole array '%s'" % e.name, t)
        if not isinstance(e, (Var, Index)):
            raise self.error("expected assignable expression", t)
        return e

    # -- expressions -------------------------------------------------------------
    _BINARY = [("||",), ("&&",), ("==", "!="), ("<", "<=", ">", ">="), ("+", "-"), ("*", "/", "%")]

    def parse_expr(self, level=0):
        if level == len(self._BINARY):
            return self.parse_unary()
        left = self.parse_expr(level + 1)
        ops = self._BINARY[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.tok.text
            self.i += 1
            left = BinOp(op, left, self.parse_expr(level + 1))
        if self.tok.kind == "op" and self.tok.text in ("=", "+=", "-=", "*=", "/=", "%=") and level == 0:
            raise self.unsupported("assignment inside expression")
        if self.tok.kind == "op" and self.tok.text in ("++", "--"):
            raise self.unsupported("%s inside expression" % self.tok.text)
        return left

    def parse_unary(self):
        t = self.tok
        if t.kind == "op" and t.text in ("-", "!"):
            self.i += 1
            return UnOp(t.text, self.parse_unary())
        if t.kind == "op" and t.text == "+":
            self.i += 1
            return self.parse_unary()
        if t.kind == "op" and t.text in ("*", "&"):
            raise self.unsupported("pointer")
        if t.kind == "op" and t.text in ("++", "--"):
            raise self.unsupported("%s inside expression" % t.text)
        return self.parse_postfix()

    def parse_postfix(self, call_arg=False):
        t = self.tok
        if t.kind == "int":
            self.i += 1
            return IntLit(int(t.text))
        if t.kind == "float":
            self.i += 1
            return FloatLit(float(t.text.rstrip("fF")))
        if self.at("("):
            nxt = self.peek()
            if nxt.kind == "kw" and nxt.text in TYPE_KEYWORDS:
                raise self.unsupported("cast")
            self.i += 1
            e = self.parse_expr()
            self.expect(")")
            return e
        if t.kind != "id":
            self.check_unsupported()
            raise self.error("expected expression but found '%s'" % (t.text or "end of input"))
        self.i += 1
        name = t.text
        if self.at("("):
            if self.scope.lookup(name) is not None:
                raise self.error("'%s' is not a function" % name, t)
            self.i += 1
            args = []
            if not self.at(")"):
                while True:
                    args.append(self.parse_call_arg())
                    if not self.accept(","):
                        break
            self.expect(")")
            return Call(name, tuple(args))
        decl = self.scope.lookup(name)
        if decl is None:
            raise self.error("use of undeclared identifier '%s'" % name, t)
        indices = []
        while self.at("["):
            self.i += 1
            indices.append(self.parse_expr())
            self.expect("]")
        if not decl.dims:
            if indices:
                raise self.error("'%s' is not an array" % name, t)
            return Var(name)
        if not indices and call_arg:
            return Var(name)
        if len(indices) != len(decl.dims):
            raise self.error("array '%s' has %d dimension(s) but is accessed with %d index expression(s)"
                             % (name, len(decl.dims), len(indices)), t)
        return Index(name, tuple(indices))

    def parse_call_arg(self):
        t = self.tok
        if t.kind == "id" and self.peek().text in (",", ")"):
            decl = self.scope.lookup(t.text)
            if decl is not None and decl.dims:
                return self.parse_postfix(call_arg=True)
        return self.parse_expr()


def parse(source_text: str) -> Program:
    """Parse mini-C source into a :class:`Program`."""
    return Parser(source_text).parse_program()
