"""Exception hierarchy.  Everything derives from ``RandLUError``."""


class RandLUError(Exception):
    pass


class InvalidStateError(RandLUError, ValueError):
    """Matrix is not Hermitian, not unit trace, or not positive semidefinite."""


class NonPhysicalStateError(InvalidStateError):
    """Hermitian and unit trace, but with a negative eigenvalue."""


class NonPhysicalInvariantsError(RandLUError, ValueError):
    """Characteristic polynomial has complex or out-of-range roots."""

    def __init__(self, message, discriminant=None, roots=None):
        super().__init__(message)
        self.discriminant = discriminant
        self.roots = roots


class InconsistentInvariantsError(RandLUError, ValueError):
    pass


class UnsupportedMomentError(RandLUError, NotImplementedError):
    pass


class IncompleteInputError(RandLUError, KeyError):
    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"missing moments: {', '.join(map(str, self.missing))}")

    def __str__(self):
        return self.args[0]


class InsufficientShotsError(RandLUError, ValueError):
    def __init__(self, n_shots, minimum):
        self.n_shots = n_shots
        self.minimum = minimum
        super().__init__(f"{n_shots} shots given, at least {minimum} required")


class InsufficientSetError(RandLUError, ValueError):
    pass


class InconsistentRegionError(RandLUError, ValueError):
    """No physical singular-value triple is compatible with the given intervals."""
