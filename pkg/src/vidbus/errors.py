"""Exception hierarchy shared by every vidbus component."""


class VidbusError(Exception):
    """Base class. ``code`` is the stable wire name used in error documents."""

    code = "Error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# scheduler
class InvalidConfig(VidbusError):
    code = "InvalidConfig"


class CapacityViolated(VidbusError):
    code = "CapacityViolated"


class InvalidSampleWindow(VidbusError):
    code = "InvalidSampleWindow"


class MonotonicityViolated(VidbusError):
    code = "MonotonicityViolated"


class InvalidTransaction(VidbusError):
    code = "InvalidTransaction"


class QueueFull(VidbusError):
    code = "QueueFull"


class UnknownTransaction(VidbusError):
    code = "UnknownTransaction"


# bus
class AddressInUse(VidbusError):
    code = "AddressInUse"


class InvalidAddress(VidbusError):
    code = "InvalidAddress"


class NoSuchEndpoint(VidbusError):
    code = "NoSuchEndpoint"


class Overloaded(VidbusError):
    """Scheduler backpressure surfaced to a client. Retryable."""

    code = "Overloaded"


class Timeout(VidbusError):
    code = "Timeout"


class BadRequest(VidbusError):
    code = "BadRequest"


# registry
class KeyUnavailable(VidbusError):
    code = "KeyUnavailable"


class DuplicateSource(VidbusError):
    code = "DuplicateSource"


class NoSuchSource(VidbusError):
    code = "NoSuchSource"


class Forbidden(VidbusError):
    code = "Forbidden"


class CorruptRecord(VidbusError):
    code = "CorruptRecord"


# auth
class AuthFailed(VidbusError):
    code = "AuthFailed"


class StoreUnavailable(VidbusError):
    code = "StoreUnavailable"


class TokenInvalid(VidbusError):
    code = "TokenInvalid"


class TokenExpired(VidbusError):
    code = "TokenExpired"


class InvalidUserType(VidbusError):
    code = "InvalidUserType"


class WeakPassword(VidbusError):
    code = "WeakPassword"


class DuplicateUser(VidbusError):
    code = "DuplicateUser"


# simulation
class InvalidSpec(VidbusError):
    code = "InvalidSpec"


class IoError(VidbusError):
    code = "IoError"
