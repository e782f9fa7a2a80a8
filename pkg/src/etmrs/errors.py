"""Exception hierarchy shared by all modules."""


class EtmrsError(Exception):
    """Base class for every error raised by the package."""


class ConfigError(EtmrsError):
    """Malformed or inconsistent scenario file."""


class AlphaExceedsCapacity(EtmrsError):
    """The circuit cost cannot be supported even by a full battery."""


class SingularSystem(EtmrsError):
    """The stationary linear system has no unique solution (reducible chain)."""


class TooManyRelays(EtmrsError):
    """Exact subset enumeration requested beyond the supported relay count."""


class SearchSpaceTooLarge(EtmrsError):
    """An exhaustive threshold search would exceed the evaluation guard."""
