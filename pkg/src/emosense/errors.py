"""Exception hierarchy shared by every pipeline stage."""


class EmosenseError(ValueError):
    """Base class for all errors raised by emosense."""


# ingestion
class MalformedManifest(EmosenseError):
    pass


class MissingChannel(EmosenseError):
    pass


class UnknownVideo(EmosenseError, KeyError):
    def __str__(self):
        return EmosenseError.__str__(self)


class MalformedTrace(EmosenseError):
    pass


class RateMismatch(EmosenseError):
    pass


class NonFinite(EmosenseError):
    pass


class OutOfRange(EmosenseError):
    pass


# signal processing
class BadBand(EmosenseError):
    pass


class TooShort(EmosenseError):
    pass


class WindowOutOfRange(EmosenseError):
    pass


# features
class EmptyWindow(EmosenseError):
    pass


class MissingSeries(EmosenseError):
    pass


class DuplicateInstance(EmosenseError):
    pass


class EmptyMask(EmosenseError):
    pass


# learning / evaluation
class EmptyDataset(EmosenseError):
    pass


class SingleClass(EmosenseError):
    pass


class DimensionMismatch(EmosenseError):
    pass


class InstanceMismatch(EmosenseError):
    pass
