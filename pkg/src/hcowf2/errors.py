"""Exception hierarchy shared by all hcowf2 modules."""


class Hcowf2Error(Exception):
    """Base class for every error raised by this package."""


class ParameterError(Hcowf2Error, ValueError):
    """Invalid (n, k) or other numeric parameter."""


class GenerationExhausted(Hcowf2Error):
    """Rejection sampling gave up before filling the clause set or Q."""


class WidthMismatch(Hcowf2Error, ValueError):
    """A bit vector does not have the width the function expects."""


class DescriptionInvalid(Hcowf2Error, ValueError):
    """A function description breaks one of its invariants."""


class InvariantViolation(DescriptionInvalid):
    """Decoded bytes are well formed but describe an invalid instance."""


class MalformedEncoding(Hcowf2Error, ValueError):
    """Bytes are not a function description at all (bad magic, bad lengths)."""


class ScaleRefused(Hcowf2Error):
    """The requested size exceeds a configured memory/time guard."""


class InsufficientCluster(Hcowf2Error):
    """Formula partitioning needs more nodes than the cluster has."""


class ProtocolError(Hcowf2Error):
    """Base class for failures of the sender/receiver exchange."""


class TransportError(ProtocolError):
    """The byte stream closed or failed mid-exchange."""


class ProtocolViolation(ProtocolError):
    """A frame arrived that the current session phase does not accept."""


class Rejected(ProtocolError):
    """The receiver answered VERIFY_RESULT 0."""


class SignatureMismatch(ProtocolError):
    """The delivered description does not hash to the announced signature."""
