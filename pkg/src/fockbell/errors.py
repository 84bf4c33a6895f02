"""Exception hierarchy shared by all modules."""


class FockError(Exception):
    """Base class for errors raised by fockbell."""


class PartitionMismatchError(FockError, ValueError):
    """Two states or vectors do not live on compatible mode partitions."""


class ZeroStateError(FockError, ValueError):
    """An operation produced, or was given, a state of zero norm."""


class EmptySectorError(FockError, ValueError):
    """The requested particle-number sector carries no weight."""


class SeparableStateError(FockError, ValueError):
    """The state has Schmidt rank below two, so no Bell functional can be built."""


class ContractViolation(FockError, ValueError):
    """Arguments are individually valid but violate an operation's contract."""
