"""Exception hierarchy shared by all ldpfreq modules."""


class LdpError(Exception):
    """Base class for all ldpfreq errors."""


class NegativeEntryError(LdpError):
    """A probability vector contains a negative entry."""


class NotNormalizedError(LdpError):
    """A probability vector does not sum to 1 within tolerance."""


class IndexOutOfDomainError(LdpError):
    """An item index lies outside 0..k-1."""


class KindMismatchError(LdpError):
    """A report kind does not match the mechanism it is evaluated against."""


class DegenerateChainError(LdpError):
    """An (eps_inf, eps_1) pair yields an infeasible second obfuscation step."""


class DegenerateChannelError(LdpError):
    """Channel with p* == q* cannot be inverted."""


class ZeroDenominatorError(LdpError):
    """An observed symbol has positive mass but zero model probability."""


class EmptyCountsError(LdpError):
    """Support counts sum to zero; nothing to estimate from."""


class LengthMismatchError(LdpError):
    """Two distributions of different lengths were compared."""


class UnpairedRunsError(LdpError):
    """Gain aggregation requires matching MI and IBU rows per run."""


class CsvParseError(LdpError):
    """A CSV cell could not be parsed as a number."""


class ColumnMissingError(LdpError):
    """The requested CSV column is not present in the header."""


class ConfigError(LdpError):
    """An experiment configuration is invalid."""
