"""Exception types shared across the package."""


class MplabError(Exception):
    """Base class for library errors."""


class StructuralError(MplabError, ValueError):
    """Distance data that cannot describe a finite space at all."""


class DomainError(MplabError, ValueError):
    """An argument outside the domain of an operation."""


class CapExceeded(MplabError):
    """An exact computation would exceed its configured size cap.

    ``context`` carries whatever the raising site knows about the offending
    instance (e.g. the ball center and radius of a scale scan).
    """

    def __init__(self, message, size=None, cap=None, context=None):
        super().__init__(message)
        self.size = size
        self.cap = cap
        self.context = dict(context or {})

    def with_context(self, **kw):
        err = CapExceeded(str(self), self.size, self.cap, {**self.context, **kw})
        return err
