"""Exception types shared across the package."""


class DomainError(ValueError):
    """A request that is outside the mathematical domain of an operation.

    Carries a short machine-readable ``code`` (stable across releases) next
    to the human message, so the CLI can serialize failures as JSON.
    """

    def __init__(self, code, message=None):
        self.code = code
        super().__init__(code if message is None else "%s: %s" % (code, message))


class ParseError(DomainError):
    """Syntax error in polynomial text, with the offending position."""

    def __init__(self, message, position):
        self.position = position
        DomainError.__init__(self, "syntax error", "%s (at position %d)" % (message, position))
