"""Exception types shared across capkit."""


class CapkitError(Exception):
    """Base class for every error raised by capkit."""


class EmptySentence(CapkitError, ValueError):
    """A caption had no tokens left after preprocessing."""


class MalformedEmbeddingFile(CapkitError, ValueError):
    pass


class VocabError(CapkitError, KeyError):
    pass


class ShapeError(CapkitError, ValueError):
    pass


class MalformedTensorFile(CapkitError, ValueError):
    pass


class MalformedCheckpoint(CapkitError, ValueError):
    pass


class DivergenceError(CapkitError, ArithmeticError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class ValidationError(CapkitError, ValueError):
    """Raised when annotation records fail validation; carries the violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = "" if len(self.violations) <= 5 else f" (+{len(self.violations) - 5} more)"
        super().__init__(f"{len(self.violations)} violation(s): {lines}{more}")


class InsufficientReferences(CapkitError, ValueError):
    def __init__(self, video_id: str, have: int, need: int):
        super().__init__(f"video {video_id!r} has {have} captions, needs at least {need}")
        self.video_id = video_id
