"""Exception types shared across the package."""


class VsearchError(Exception):
    """Base class for all package errors."""


class InputError(VsearchError):
    """A caller-supplied value violates an operation's preconditions."""


class TrainingDivergedError(VsearchError):
    """Loss or gradients became non-finite during training."""


class FormatError(VsearchError):
    """An on-disk artifact is malformed or has the wrong version."""


class StaleStoreError(VsearchError):
    """An embedding store was built from a different model checkpoint."""


class MissingDocumentError(VsearchError):
    """A document id was not found in a store or index."""


class ServiceError(VsearchError):
    """The serving layer cannot satisfy a request (e.g. model not loaded)."""
