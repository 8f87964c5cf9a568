"""Exception hierarchy, mapped onto CLI exit codes in cli.py."""


class SimpleCorpusError(Exception):
    """Base for all toolkit errors."""


class UsageError(SimpleCorpusError):
    """Bad configuration or CLI usage. Exit code 1."""


class CorpusIOError(SimpleCorpusError):
    """Fatal I/O problem: unreadable input, failed write. Exit code 2."""


class ScorerError(SimpleCorpusError):
    """Base for external-scorer failures. Exit code 3 when fatal."""


class ScorerProtocolError(ScorerError):
    """The scorer endpoint violated the wire contract (bad id, bad range,
    unparseable line)."""


class ScorerTimeoutError(ScorerError):
    """No response within the timeout after all retries were spent."""


class ScorerRecordError(ScorerError):
    """Per-item scoring failure; the pipeline skips the record and counts it."""
