"""Custom exceptions for splurge-sqcpc.

Every error raised by the package derives from :class:`SplurgeSqcpcError` so
callers (and the CLI exit-code mapping) can distinguish configuration, data,
shape and numeric failures without string matching.
"""

from splurge_exceptions import SplurgeFrameworkError


class SplurgeSqcpcError(SplurgeFrameworkError):
    """Base exception for splurge-sqcpc.

    Attributes:
        _domain (str): "splurge-sqcpc"
    """

    _domain = "splurge-sqcpc"


class SplurgeSqcpcTypeError(SplurgeSqcpcError):
    """Error for type-related issues.

    Attributes:
        _domain (str): "splurge-sqcpc.type"
    """

    _domain = "splurge-sqcpc.type"


class SplurgeSqcpcValueError(SplurgeSqcpcError):
    """Error for value-related issues.

    Attributes:
        _domain (str): "splurge-sqcpc.value"
    """

    _domain = "splurge-sqcpc.value"


class SplurgeSqcpcShapeError(SplurgeSqcpcValueError):
    """Error for tensor shape and dimension contract violations.

    Attributes:
        _domain (str): "splurge-sqcpc.shape"
    """

    _domain = "splurge-sqcpc.shape"


class SplurgeSqcpcConfigError(SplurgeSqcpcValueError):
    """Error for unknown keys, bad values and checkpoint/config mismatches.

    Attributes:
        _domain (str): "splurge-sqcpc.config"
    """

    _domain = "splurge-sqcpc.config"


class SplurgeSqcpcDataError(SplurgeSqcpcValueError):
    """Error for malformed or inconsistent dataset content.

    Attributes:
        _domain (str): "splurge-sqcpc.data"
    """

    _domain = "splurge-sqcpc.data"


class SplurgeSqcpcOSError(SplurgeSqcpcError):
    """Error for OS and I/O issues.

    Attributes:
        _domain (str): "splurge-sqcpc.os"
    """

    _domain = "splurge-sqcpc.os"


class SplurgeSqcpcRuntimeError(SplurgeSqcpcError):
    """Error for runtime issues.

    Attributes:
        _domain (str): "splurge-sqcpc.runtime"
    """

    _domain = "splurge-sqcpc.runtime"


class SplurgeSqcpcNumericError(SplurgeSqcpcRuntimeError):
    """Error for non-finite values in tensors or losses.

    Attributes:
        _domain (str): "splurge-sqcpc.numeric"
    """

    _domain = "splurge-sqcpc.numeric"
