"""Exception types shared across the package."""


class UnitaxError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(UnitaxError):
    """An input artifact violates a structural invariant."""


class InvalidClass(ValidationError):
    """A class was given an empty or otherwise unusable atom set."""


class NotFound(UnitaxError):
    """A referenced dataset or class does not exist."""


class AmbiguousDeclaration(UnitaxError):
    """A declaration targets an already-split class and cannot be applied
    without guessing which part is meant."""


class InconsistentDeclaration(UnitaxError):
    """Post-hoc verification of a declared relation failed."""


class UnmappedLabel(UnitaxError):
    """A label maps to no universal class."""


class InvalidLogit(UnitaxError):
    """A logit vector contains non-finite entries."""


class InvalidProbability(UnitaxError):
    """A probability lies outside [0, 1]."""


class TrainingDiverged(UnitaxError):
    """The training loss became non-finite."""


class OrthogonalDataset(UnitaxError):
    """No class of the foreign dataset intersects the ground-truth class."""
