"""Error types shared across the engine."""


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class DanglingAttribute(EngineError):
    """An attribute of the query appears in no relation atom."""


class BadOrder(EngineError):
    """An attribute order is not a permutation of the query's attributes."""


class ArityMismatch(EngineError):
    """A tuple or atom does not match the arity of its relation."""


class RangeError(EngineError):
    """An enumeration range lies outside [0, count] for its key."""


class MissingIndex(EngineError):
    """An engine asked for an extension index that was never built."""


class ResolverMiss(EngineError):
    """A positional extension lookup addressed a key or rank that does not exist."""


class StaleTimestamp(EngineError):
    """An update carries a timestamp below the current frontier."""


class FrontierRegression(EngineError):
    """An attempt to move the frontier backwards."""


class QuerySyntaxError(EngineError):
    """Query text failed to parse; carries the offending position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownRelation(EngineError):
    """Query text references a relation name or arity that is not available."""


class NotFactorizable(EngineError):
    """The last two order attributes are linked by an atom or filter."""


class ScaleGuard(EngineError):
    """Reference evaluator refused an input too large for brute force."""
