"""Exception hierarchy. The CLI maps each family onto an exit status."""


class RNNPBError(Exception):
    pass


class DataFormatError(RNNPBError, ValueError):
    """Malformed or unreadable input data (CSV, model file, config file)."""


class DimensionMismatchError(DataFormatError):
    pass


class ModelFormatError(DataFormatError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class UnknownLabelError(DataFormatError, KeyError):
    def __init__(self, label, available):
        self.label = label
        self.available = sorted(available)
        super().__init__(f"unknown label {label!r}; available: {', '.join(self.available)}")

    def __str__(self):
        return self.args[0]


class StreamError(DataFormatError):
    def __init__(self, frame_index, message):
        self.frame_index = frame_index
        super().__init__(f"frame {frame_index}: {message}")


class NumericError(RNNPBError, ArithmeticError):
    """Non-finite values appeared in a computation."""


class NumericOverflowError(NumericError):
    def __init__(self, message, epoch=None, report=None):
        self.epoch = epoch
        self.report = report
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
