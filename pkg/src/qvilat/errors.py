"""Exception types shared across the package."""


class CarrierMismatchError(ValueError):
    """An element or table entry does not belong to the declared carrier."""


class NotALatticeError(ValueError):
    """Some pair of elements has no meet or no join."""


class InvalidFunctionalError(ValueError):
    """A functional takes the value -inf/nan or has empty effective domain."""


class HypothesisViolation(ValueError):
    """A theorem or lemma was invoked on data violating one of its hypotheses.

    ``clause`` names the failed hypothesis, ``witness`` carries the offending
    elements (or is None).
    """

    def __init__(self, clause, witness=None, message=None):
        self.clause = clause
        self.witness = witness
        text = message or f"hypothesis {clause!r} violated"
        if witness is not None:
            text += f" (witness: {witness!r})"
        self.message = message
        super().__init__(text)

    def __reduce__(self):
        return type(self), (self.clause, self.witness, self.message)


class DegenerateBracketError(ValueError):
    """A piecewise-linear bracket was requested with x1 >= x2."""


class InfeasibleError(ValueError):
    """A grid vector violates the obstacle constraint."""

    def __init__(self, node, excess):
        self.node = node
        self.excess = excess
        super().__init__(f"obstacle violated at node {node} by {excess:.3e}")

    def __reduce__(self):
        return type(self), (self.node, self.excess)


class InvalidAuxDataError(ValueError):
    """Auxiliary sub/supersolution data does not satisfy its invariants."""


class MonotonicityError(RuntimeError):
    """An outer iterate left the order it was required to respect."""


class InstanceTooLargeError(ValueError):
    """Brute-force enumeration was requested on an instance above the size cap."""


class ConfigError(ValueError):
    """A problem configuration is malformed; ``field`` names the culprit."""

    def __init__(self, field, message):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")

    def __reduce__(self):
        return type(self), (self.field, self.message)


class UndeclaredUniverseError(ValueError):
    """Sub/super-operator construction needs a finite functional universe."""
