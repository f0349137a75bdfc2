# The MIT License (MIT)
# Copyright © 2024 KGForge Contributors

# Permission is hereby granted, free of charge, to any person obtaining a copy of this software and associated
# documentation files (the “Software”), to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the Software,
# and to permit persons to whom the Software is furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies or substantial portions of
# the Software.

# THE SOFTWARE IS PROVIDED “AS IS”, WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO
# THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION
# OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

from typing import Optional


class KgForgeError(Exception):
    """Base class for every operator-facing error raised by kgforge.

    The CLI maps ``exit_code`` to the process exit status.
    """

    exit_code: int = 1


class ConfigurationError(KgForgeError):
    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


class DataError(KgForgeError):
    exit_code = 3


class LoadError(DataError):
    """Malformed or inconsistent input file. Carries the file and 1-based line number."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(location + message)
        self.path = path
        self.line = line


class SamplingError(DataError):
    pass


class UndefinedMetricError(DataError):
    pass


class NumericFault(KgForgeError):
    """Non-finite value produced by a forward op, or a failed gradient check."""

    exit_code = 4

    def __init__(self, message: str, op: Optional[str] = None):
        super().__init__(f"[{op}] {message}" if op else message)
        self.op = op


class ContractViolation(ValueError):
    """A caller broke a documented precondition (wrong shape, non-scalar loss, ...)."""

    exit_code = 4
