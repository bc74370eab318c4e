"""Exception types shared across the package."""


class SpotterError(Exception):
    """Base for all domain errors raised by this package."""


class FormatError(SpotterError):
    """A file did not match its declared on-disk format."""


class PrecisionUnreachable(SpotterError):
    """No operating point reaches the requested precision floor."""

    def __init__(self, target, best):
        super().__init__(
            f"target precision {target:.4f} unreachable; best achievable is {best:.4f}"
        )
        self.target = target
        self.best = best
