"""Exception hierarchy shared by every stml module.

``StmlError`` subclasses are domain errors: the CLI maps them to exit code 1.
"""


class StmlError(Exception):
    pass


class ParseError(StmlError):
    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        if line is not None:
            message = "line %d, column %d: %s" % (line, col, message)
        super().__init__(message)


class UnsupportedConstruct(ParseError):
    def __init__(self, construct, line=None, col=None):
        self.construct = construct
        super().__init__("unsupported construct '%s'" % construct, line, col)


class EvalError(StmlError):
    pass


class OutOfBounds(EvalError):
    def __init__(self, name, index, dims):
        self.name = name
        self.index = tuple(index)
        self.dims = tuple(dims)
        super().__init__("out-of-bounds access %s%s with dimensions %s" % (
            name, "".join("[%d]" % i for i in self.index), list(self.dims)))


class StepLimitExceeded(EvalError):
    pass


class DivisionByZero(EvalError):
    pass


class RuleError(StmlError):
    pass


class PreconditionViolated(RuleError):
    def __init__(self, rule, site, reason=""):
        self.rule = rule
        self.site = site
        msg = "precondition of %s violated at site %s" % (rule, site)
        if reason:
            msg += ": " + reason
        super().__init__(msg)


class SemanticGuardError(RuleError):
    pass


class InvariantViolation(StmlError):
    pass


class ClassifierError(StmlError):
    pass


class RLError(StmlError):
    pass


class FinalityConflict(RLError):
    pass


class NoTransition(RLError):
    pass


class SequenceError(StmlError):
    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class ChainBreak(SequenceError):
    pass


class NonFinalTerminal(SequenceError):
    pass


class RuleInapplicable(StmlError):
    pass


class SchemaMismatch(StmlError):
    pass
