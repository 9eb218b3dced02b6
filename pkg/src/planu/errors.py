"""Exception types shared across the package."""


class PlanuError(Exception):
    """Base class for planu-specific failures."""


class SearchError(PlanuError):
    """Raised when a tree operation is applied to an invalid node."""


class EnvError(PlanuError):
    """Illegal or malformed action submitted to an environment."""


class TransportError(PlanuError):
    """HTTP transport failure after retries were exhausted."""


class MalformedResponseError(PlanuError):
    """Endpoint response could not be parsed into the expected shape."""


class OfflineCacheMissError(PlanuError):
    """Offline mode was requested but the response is not in the cache."""


class ConfigError(PlanuError):
    """Invalid experiment configuration; carries a list of diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))
