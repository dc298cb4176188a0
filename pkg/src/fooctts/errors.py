"""Shared exception base for the package.

Every domain error raised by this package derives from FoocttsError so
callers (notably the CLI) can separate bad input from genuine crashes.
"""


class FoocttsError(Exception):
    pass
