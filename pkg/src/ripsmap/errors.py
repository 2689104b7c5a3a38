"""Exception classes. Each carries the CLI exit code for its error class."""


class RipsmapError(Exception):
    exit_code = 5


class ParameterError(RipsmapError, ValueError):
    """Invalid argument (bad radii, k > n, negative height, ...)."""

    exit_code = 2

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class TableError(RipsmapError):
    """Problem reading or encoding an input table."""

    exit_code = 3

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class BudgetExceeded(RipsmapError):
    exit_code = 4

    def __init__(self, count, budget):
        super().__init__(
            f"simplex budget exceeded: reached {count} simplices (cap {budget}); "
            "lower max_eps or subsample the cloud"
        )
        self.count = count
        self.budget = budget


class AlgorithmError(RipsmapError):
    exit_code = 5

    def __init__(self, message, cover_index=None):
        super().__init__(message)
        self.cover_index = cover_index
