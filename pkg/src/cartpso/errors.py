"""Exception hierarchy.

Every error raised by the toolkit derives from :class:`CartPsoError`.
Validation problems (bad input data, bad configuration) derive from
:class:`ValidationError`; the CLI maps those to exit code 2.
"""


class CartPsoError(Exception):
    pass


class ValidationError(CartPsoError, ValueError):
    pass


# features
class EmptyMask(ValidationError):
    pass


class ZeroCytoplasm(ValidationError):
    pass


class NoPairs(ValidationError):
    pass


class RegionTooSmall(ValidationError):
    pass


class FeatureExtractionError(ValidationError):
    """Wraps an extraction failure with the catalog index of the failing feature."""

    def __init__(self, feature_index, feature_name, cause):
        self.feature_index = feature_index
        self.feature_name = feature_name
        self.cause = cause
        super().__init__(
            f"feature {feature_index} ({feature_name}): {type(cause).__name__}: {cause}"
        )


# cart
class EmptyNode(ValidationError):
    pass


class EmptySide(ValidationError):
    pass


class InconsistentCounts(ValidationError):
    pass


class EmptyDataset(ValidationError):
    pass


class BadK(ValidationError):
    pass


# svm
class BadSigma(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class SingleClass(ValidationError):
    pass


# pso
class BadConfig(ValidationError):
    pass


class ObjectiveFailure(CartPsoError):
    def __init__(self, particle_index, cause):
        self.particle_index = particle_index
        self.cause = cause
        super().__init__(f"objective failed for particle {particle_index}: {cause!r}")


# metrics
class LengthMismatch(ValidationError):
    pass


class UnknownLabel(ValidationError):
    pass


class NotBinary(ValidationError):
    pass


class BadClassSet(ValidationError):
    pass


# pipeline
class ParseError(ValidationError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class MissingFile(CartPsoError, FileNotFoundError):
    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"missing file: {path}")


class DuplicateId(ValidationError):
    def __init__(self, sample_id):
        self.sample_id = sample_id
        super().__init__(f"duplicate sample_id: {sample_id!r}")


class ClassTooSmall(ValidationError):
    def __init__(self, label, count):
        self.label = label
        self.count = count
        super().__init__(f"class {label!r} has {count} samples; at least 3 required")


class ExtractionFailures(ValidationError):
    """Raised after a batch extraction when one or more samples failed."""

    def __init__(self, failures):
        self.failures = list(failures)
        lines = [f"{sid}: {err}" for sid, err in self.failures]
        super().__init__(f"{len(self.failures)} sample(s) failed:\n" + "\n".join(lines))


class StageError(CartPsoError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
