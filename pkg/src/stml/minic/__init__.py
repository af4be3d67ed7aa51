"""Parser, printer and interpreter for the C subset the toolkit rewrites."""
from .ast import *  # noqa: F401,F403
from .interp import evaluate, outputs_equal, random_inputs
from .parser import parse
from .printer import format_expr, print_program

__all__ = ["parse", "print_program", "format_expr", "evaluate", "outputs_equal", "random_inputs"]
