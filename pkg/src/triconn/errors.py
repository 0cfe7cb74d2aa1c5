"""Exception types raised across the package, grouped by subsystem."""


class TriconnError(Exception):
    """Base class for all package errors."""


# -- complex construction -------------------------------------------------

class MixedDimension(TriconnError):
    pass


class NotPure(TriconnError):
    pass


class NonPseudomanifold(TriconnError):
    pass


class BadLink(TriconnError):
    pass


class UnknownName(TriconnError):
    pass


class NotASimplex(TriconnError):
    pass


class WrongDimension(TriconnError):
    pass


class Disconnected(TriconnError):
    pass


# -- homology and framed chains -------------------------------------------

class NotAPath(TriconnError):
    pass


class EdgeNotInComplex(TriconnError):
    pass


class SimplexNotInComplex(TriconnError):
    pass


# -- connections -----------------------------------------------------------

class MissingCoefficient(TriconnError):
    pass


class ZeroCoefficient(TriconnError):
    pass


class MissingGaugeValue(TriconnError):
    pass


class DegenerateSolutions(TriconnError):
    pass


class DifferentComplex(TriconnError):
    pass


class MixedField(TriconnError):
    pass


# -- invariants ------------------------------------------------------------

class NoPath(TriconnError):
    pass


class InvalidFraming(TriconnError):
    pass


class MissingHomologyData(TriconnError):
    pass


class UnpairedInteriorEdge(TriconnError):
    pass


class BranchViolation(TriconnError):
    pass


class NonIntegerTotal(TriconnError):
    pass


# -- curvature ---------------------------------------------------------------

class InconsistentMu(TriconnError):
    pass


class Degenerate(TriconnError):
    pass


# -- holonomy ----------------------------------------------------------------

class NotClosed(TriconnError):
    pass


class NotWordBuilt(TriconnError):
    pass


class BadLabeling(TriconnError):
    pass


# -- reconstruction ----------------------------------------------------------

class Unsolvable(TriconnError):
    """A multiplicative system has no solution over the requested field.

    Carries the index of the violated (transformed) row, the root order that
    would be required, and the offending target value.
    """

    def __init__(self, row, root, value, message=None):
        self.row = row
        self.root = root
        self.value = value
        super().__init__(message or f"row {row}: no {root}-th root of {value}")


class InconsistentInvariants(TriconnError):
    pass


class BranchObstruction(TriconnError):
    pass


class CocycleNotExact(TriconnError):
    pass


class NotLocallyFlat(TriconnError):
    pass


# -- file formats --------------------------------------------------------------

class ParseError(TriconnError):
    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")
