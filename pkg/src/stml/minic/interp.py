"""Reference interpreter for mini-C, used as the semantic-equivalence oracle.

Functions are compiled once into nested Python closures.  Integers are
64-bit two's complement with C truncating division; floats are IEEE doubles.
Arrays are passed by reference, scalars by value.  Every array access is
bounds-checked against the declared dimensions.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import DivisionByZero, EvalError, OutOfBounds, StepLimitExceeded
from .ast import (
    FLOAT_TYPES, Assign, BinOp, Block, Break, Call, Continue, ExprStmt, FloatLit,
    For, If, Index, IntLit, Pragma, Program, Return, UnOp, Var,
)

DEFAULT_MAX_STEPS = 10 ** 7

_MASK = (1 << 64) - 1
_SIGN = 1 << 63


def _wrap(v):
    if -_SIGN <= v < _SIGN:
        return v
    return ((v + _SIGN) & _MASK) - _SIGN


def _cdiv(a, b):
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


def _arith(op, a, b):
    if type(a) is int and type(b) is int:
        if op == "+":
            return _wrap(a + b)
        if op == "-":
            return _wrap(a - b)
        if op == "*":
            return _wrap(a * b)
        if b == 0:
            raise DivisionByZero("integer division by zero")
        q = _cdiv(a, b)
        return _wrap(q) if op == "/" else a - b * q
    a, b = float(a), float(b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            raise DivisionByZero("floating-point division by zero")
        return a / b
    raise EvalError("operator '%' requires integer operands")


def _convert(is_float, v):
    if is_float:
        return float(v)
    if type(v) is int:
        return v
    if math.isnan(v) or math.isinf(v):
        raise EvalError("cannot convert %r to int" % v)
    return _wrap(int(v))


class ArrayBuf:
    """Flat row-major buffer with its dimension list."""

    __slots__ = ("name", "dims", "data", "is_float")

    def __init__(self, name, dims, data, is_float):
        self.name = name
        self.dims = tuple(dims)
        self.data = data
        self.is_float = is_float

    def offset(self, idx):
        off = 0
        for k, n in zip(idx, self.dims):
            if type(k) is not int:
                raise EvalError("non-integer index %r into '%s'" % (k, self.name))
            if not 0 <= k < n:
                raise OutOfBounds(self.name, idx, self.dims)
            off = off * n + k
        return off


_BREAK = object()
_CONTINUE = object()


class _Ret:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


def _builtin_abs(x):
    return abs(x)


def _builtin_sqrt(x):
    if x < 0:
        raise EvalError("sqrt of negative value")
    return math.sqrt(x)


BUILTINS = {
    "abs": _builtin_abs,
    "fabs": lambda x: abs(float(x)),
    "sqrt": _builtin_sqrt,
    "min": min,
    "max": max,
}


class Interpreter:
    def __init__(self, program: Program, max_steps: int = DEFAULT_MAX_STEPS):
        self.program = program
        self.max_steps = max_steps
        self.steps = 0
        self.globals = {}
        self._compiled = {}

    # -- bookkeeping -------------------------------------------------------------
    def tick(self):
        self.steps += 1
        if self.steps > self.max_steps:
            raise StepLimitExceeded("step ceiling of %d exceeded" % self.max_steps)

    def _init_globals(self):
        self.globals = {}
        gtypes = {d.name: d for d in self.program.globals}
        for d in self.program.globals:
            fl = d.type in FLOAT_TYPES
            if d.dims:
                self.globals[d.name] = ArrayBuf(d.name, d.dims, [0.0 if fl else 0] * math.prod(d.dims), fl)
            elif d.init is not None:
                fn = self._expr(d.init, {}, gtypes)
                self.globals[d.name] = _convert(fl, fn(self.globals))
            else:
                self.globals[d.name] = 0.0 if fl else 0

    # -- compilation -------------------------------------------------------------
    def _function(self, name):
        if name in self._compiled:
            return self._compiled[name]
        try:
            f = self.program.function(name)
        except KeyError:
            raise EvalError("call to undefined function '%s'" % name) from None
        entry = {"def": f, "body": None}
        self._compiled[name] = entry
        local_decls = {d.name: d for d in f.params + f.locals}
        gdecls = {d.name: d for d in self.program.globals}
        entry["body"] = self._block(f.body, local_decls, gdecls)
        return entry

    def _lookup(self, name, locals_, globals_):
        if name in locals_:
            return True, locals_[name]
        return False, globals_[name]

    def _expr(self, e, locals_, globals_):
        if isinstance(e, IntLit):
            v = e.value
            return lambda fr: v
        if isinstance(e, FloatLit):
            v = float(e.value)
            return lambda fr: v
        if isinstance(e, Var):
            name = e.name
            is_local, decl = self._lookup(name, locals_, globals_)
            if is_local:
                return lambda fr: fr[name]
            return lambda fr: self.globals[name]
        if isinstance(e, Index):
            get_buf = self._buf(e.name, locals_, globals_)
            idx = [self._expr(i, locals_, globals_) for i in e.indices]
            if len(idx) == 1:
                i0 = idx[0]

                def read1(fr):
                    b = get_buf(fr)
                    k = i0(fr)
                    if type(k) is not int:
                        raise EvalError("non-integer index %r into '%s'" % (k, b.name))
                    if not 0 <= k < b.dims[0]:
                        raise OutOfBounds(b.name, (k,), b.dims)
                    return b.data[k]
                return read1

            def read(fr):
                b = get_buf(fr)
                return b.data[b.offset([f(fr) for f in idx])]
            return read
        if isinstance(e, UnOp):
            f = self._expr(e.operand, locals_, globals_)
            if e.op == "-":
                def neg(fr):
                    v = f(fr)
                    return _wrap(-v) if type(v) is int else -v
                return neg
            return lambda fr: 0 if f(fr) else 1
        if isinstance(e, BinOp):
            l = self._expr(e.left, locals_, globals_)
            r = self._expr(e.right, locals_, globals_)
            op = e.op
            if op == "&&":
                return lambda fr: 1 if (l(fr) and r(fr)) else 0
            if op == "||":
                return lambda fr: 1 if (l(fr) or r(fr)) else 0
            if op == "<":
                return lambda fr: 1 if l(fr) < r(fr) else 0
            if op == "<=":
                return lambda fr: 1 if l(fr) <= r(fr) else 0
            if op == ">":
                return lambda fr: 1 if l(fr) > r(fr) else 0
            if op == ">=":
                return lambda fr: 1 if l(fr) >= r(fr) else 0
            if op == "==":
                return lambda fr: 1 if l(fr) == r(fr) else 0
            if op == "!=":
                return lambda fr: 1 if l(fr) != r(fr) else 0
            return lambda fr: _arith(op, l(fr), r(fr))
        if isinstance(e, Call):
            return self._call(e, locals_, globals_)
        raise TypeError("not an expression: %r" % (e,))

    def _buf(self, name, locals_, globals_):
        is_local, _ = self._lookup(name, locals_, globals_)
        if is_local:
            return lambda fr: fr[name]
        return lambda fr: self.globals[name]

    def _call(self, e, locals_, globals_):
        name = e.name
        if name in BUILTINS and not any(f.name == name for f in self.program.functions):
            fn = BUILTINS[name]
            args = [self._expr(a, locals_, globals_) for a in e.args]
            return lambda fr: fn(*[a(fr) for a in args])
        arg_fns = []
        for a in e.args:
            if isinstance(a, Var) and self._lookup(a.name, locals_, globals_)[1].dims:
                arg_fns.append((True, self._buf(a.name, locals_, globals_)))
            else:
                arg_fns.append((False, self._expr(a, locals_, globals_)))

        def call(fr):
            return self.invoke(name, [f(fr) for _, f in arg_fns])
        return call

    def _target(self, t, locals_, globals_):
        """Return (getter, setter) closures for an assignment target."""
        is_local, decl = self._lookup(t.name, locals_, globals_)
        fl = decl.type in FLOAT_TYPES
        name = t.name
        if isinstance(t, Var):
            if is_local:
                def set_local(fr, v):
                    fr[name] = _convert(fl, v)
                return (lambda fr: fr[name]), set_local

            def set_global(fr, v):
                self.globals[name] = _convert(fl, v)
            return (lambda fr: self.globals[name]), set_global
        get_buf = self._buf(name, locals_, globals_)
        idx = [self._expr(i, locals_, globals_) for i in t.indices]

        def locate(fr):
            b = get_buf(fr)
            return b, b.offset([f(fr) for f in idx])
        return locate, fl

    def _assign(self, s, locals_, globals_):
        op = s.op
        if isinstance(s.target, Var):
            get, put = self._target(s.target, locals_, globals_)
            if op == "=":
                val = self._expr(s.value, locals_, globals_)
                return lambda fr: put(fr, val(fr))
            if op in ("++", "--"):
                delta = 1 if op == "++" else -1
                return lambda fr: put(fr, _arith("+", get(fr), delta))
            val = self._expr(s.value, locals_, globals_)
            aop = op[0]
            return lambda fr: put(fr, _arith(aop, get(fr), val(fr)))
        locate, fl = self._target(s.target, locals_, globals_)
        if op == "=":
            val = self._expr(s.value, locals_, globals_)

            def store(fr):
                v = val(fr)
                b, off = locate(fr)
                b.data[off] = _convert(fl, v)
            return store
        if op in ("++", "--"):
            delta = 1 if op == "++" else -1

            def bump(fr):
                b, off = locate(fr)
                b.data[off] = _convert(fl, _arith("+", b.data[off], delta))
            return bump
        val = self._expr(s.value, locals_, globals_)
        aop = op[0]

        def update(fr):
            b, off = locate(fr)
            v = val(fr)
            b.data[off] = _convert(fl, _arith(aop, b.data[off], v))
        return update

    def _stmt(self, s, locals_, globals_):
        tick = self.tick
        if isinstance(s, Assign):
            f = self._assign(s, locals_, globals_)

            def run_assign(fr):
                tick()
                f(fr)
            return run_assign
        if isinstance(s, ExprStmt):
            f = self._call(s.call, locals_, globals_)

            def run_call(fr):
                tick()
                f(fr)
            return run_call
        if isinstance(s, Block):
            return self._block(s.stmts, locals_, globals_)
        if isinstance(s, Pragma):
            return lambda fr: None
        if isinstance(s, Break):
            return lambda fr: _BREAK
        if isinstance(s, Continue):
            return lambda fr: _CONTINUE
        if isinstance(s, Return):
            if s.value is None:
                return lambda fr: _Ret(None)
            f = self._expr(s.value, locals_, globals_)
            return lambda fr: _Ret(f(fr))
        if isinstance(s, If):
            c = self._expr(s.cond, locals_, globals_)
            then = self._stmt(s.then, locals_, globals_)
            orelse = None if s.orelse is None else self._stmt(s.orelse, locals_, globals_)

            def run_if(fr):
                tick()
                if c(fr):
                    return then(fr)
                if orelse is not None:
                    return orelse(fr)
                return None
            return run_if
        if isinstance(s, For):
            init = None if s.init is None else self._assign(s.init, locals_, globals_)
            cond = None if s.cond is None else self._expr(s.cond, locals_, globals_)
            step = None if s.step is None else self._assign(s.step, locals_, globals_)
            body = self._stmt(s.body, locals_, globals_)

            def run_for(fr):
                if init is not None:
                    init(fr)
                while True:
                    tick()
                    if cond is not None and not cond(fr):
                        return None
                    r = body(fr)
                    if r is not None:
                        if r is _BREAK:
                            return None
                        if r is not _CONTINUE:
                            return r
                    if step is not None:
                        step(fr)
            return run_for
        raise TypeError("not a statement: %r" % (s,))

    def _block(self, stmts, locals_, globals_):
        fns = [self._stmt(s, locals_, globals_) for s in stmts]

        def run_block(fr):
            for f in fns:
                r = f(fr)
                if r is not None:
                    return r
            return None
        return run_block

    # -- execution -----------------------------------------------------------------
    def invoke(self, name, args):
        entry = self._function(name)
        f = entry["def"]
        if len(args) != len(f.params):
            raise EvalError("function '%s' expects %d argument(s), got %d" % (name, len(f.params), len(args)))
        fr = {}
        for p, a in zip(f.params, args):
            fl = p.type in FLOAT_TYPES
            if p.dims:
                if not isinstance(a, ArrayBuf):
                    raise EvalError("parameter '%s' of '%s' expects an array" % (p.name, name))
                if len(a.data) != math.prod(p.dims):
                    raise EvalError("array argument for '%s' has %d elements, expected %d"
                                    % (p.name, len(a.data), math.prod(p.dims)))
                if a.is_float != fl:
                    raise EvalError("array argument for '%s' has mismatched element type" % p.name)
                fr[p.name] = ArrayBuf(p.name, p.dims, a.data, fl)
            else:
                if isinstance(a, ArrayBuf):
                    raise EvalError("parameter '%s' of '%s' expects a scalar" % (p.name, name))
                if a is None:
                    raise EvalError("void value used as argument")
                fr[p.name] = _convert(fl, a)
        for d in f.locals:
            fl = d.type in FLOAT_TYPES
            if d.dims:
                fr[d.name] = ArrayBuf(d.name, d.dims, [0.0 if fl else 0] * math.prod(d.dims), fl)
            else:
                fr[d.name] = 0.0 if fl else 0
        r = entry["body"](fr)
        value = r.value if isinstance(r, _Ret) else None
        if f.ret_type == "void":
            if value is not None:
                raise EvalError("void function '%s' returns a value" % name)
            return None
        if value is None:
            value = 0
        return _convert(f.ret_type in FLOAT_TYPES, value)

    def run(self, entry, inputs):
        self.steps = 0
        self._init_globals()
        f = self._function(entry)["def"]
        if len(inputs) != len(f.params):
            raise EvalError("'%s' expects %d input(s), got %d" % (entry, len(f.params), len(inputs)))
        args = []
        for p, value in zip(f.params, inputs):
            fl = p.type in FLOAT_TYPES
            if p.dims:
                arr = np.asarray(value)
                if arr.size != math.prod(p.dims):
                    raise EvalError("input for '%s' has %d elements, expected %d"
                                    % (p.name, arr.size, math.prod(p.dims)))
                flat = arr.ravel().tolist()
                data = [float(x) for x in flat] if fl else [_convert(False, x) for x in flat]
                args.append(ArrayBuf(p.name, p.dims, data, fl))
            else:
                args.append(np.asarray(value).item())
        self.invoke(entry, args)
        out = []
        for p, a in zip(f.params, args):
            if p.dims:
                dtype = np.float64 if a.is_float else np.int64
                out.append(np.array(a.data, dtype=dtype).reshape(p.dims))
        return out


def evaluate(p: Program, entry: str, inputs: Sequence, max_steps: int = DEFAULT_MAX_STEPS):
    """Run ``entry`` on ``inputs`` and return the final values of its array parameters.

    Array inputs may have any shape whose size matches the declared
    dimensions; they are copied, never modified.
    """
    return Interpreter(p, max_steps).run(entry, list(inputs))


def outputs_equal(a, b) -> bool:
    """Bit-exact comparison of two evaluate() results, ignoring array shape."""
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        x, y = np.asarray(x).ravel(), np.asarray(y).ravel()
        if x.dtype != y.dtype or x.shape != y.shape:
            return False
        if x.tobytes() != y.tobytes():
            return False
    return True


def random_inputs(p: Program, entry: str, rng: np.random.Generator, low=-9, high=9):
    """Random inputs matching the parameter list of ``entry``.

    Integer arrays draw from [low, high]; float arrays are uniform in the same
    range; integer scalars from [0, high].
    """
    f = p.function(entry)
    out = []
    for prm in f.params:
        fl = prm.type in FLOAT_TYPES
        if prm.dims:
            if fl:
                out.append(rng.uniform(low, high, size=prm.dims))
            else:
                out.append(rng.integers(low, high, endpoint=True, size=prm.dims))
        else:
            out.append(float(rng.uniform(0, high)) if fl else int(rng.integers(0, high, endpoint=True)))
    return out
