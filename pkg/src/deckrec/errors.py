"""Exception types shared across the package."""


class DeckrecError(Exception):
    pass


class InvalidArgument(DeckrecError, ValueError):
    pass


class InvalidAction(DeckrecError, ValueError):
    pass


class InvalidState(DeckrecError, RuntimeError):
    pass


class HorizonExhausted(DeckrecError, RuntimeError):
    """Raised when asking for actions from a state whose step counter reached D."""


class TrainingDiverged(DeckrecError, FloatingPointError):
    """Non-finite parameters or TD errors.

    ``checkpoint`` carries the last finite parameters when available.
    """

    def __init__(self, message, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class InsufficientData(DeckrecError, ValueError):
    pass


class InstanceTooLarge(DeckrecError, ValueError):
    pass


class GenerationFailure(DeckrecError, RuntimeError):
    pass


class ConfigurationError(DeckrecError, ValueError):
    pass
