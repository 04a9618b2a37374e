"""Exception types shared across frameforge modules."""


class FrameforgeError(Exception):
    """Base class for all library errors."""


class CapExceeded(FrameforgeError):
    """An expansion would materialize more terms than the configured cap."""


class BoundViolated(FrameforgeError):
    """A computed norm exceeds a closed-form bound beyond its certified error."""


class DecayTooWeak(FrameforgeError):
    pass


class OutOfRange(FrameforgeError):
    pass


class SingularSystem(FrameforgeError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class Infeasible(FrameforgeError):
    pass


class ChainBroken(FrameforgeError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class MismatchDetected(FrameforgeError):
    pass


class StageFailed(FrameforgeError):
    def __init__(self, step, message):
        super().__init__(f"stage {step}: {message}")
        self.step = step


class CollisionDetected(FrameforgeError):
    pass


class NotDiagonallyDominant(FrameforgeError):
    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation
