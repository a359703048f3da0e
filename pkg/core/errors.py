"""
Exception types raised across the NTMP modules.
"""


class NTMPError(Exception):
    """Base class for every error raised by this package."""


class IllConditionedError(NTMPError, ValueError):
    def __init__(self, gap, message=None):
        self.gap = float(gap)
        super().__init__(message or f"Identifiability gap |pi - alpha| = {self.gap:.3e} is below the hard threshold")


class UnsplittableDegenerateError(NTMPError, ValueError):
    def __init__(self, alpha):
        self.alpha = float(alpha)
        super().__init__(f"Every tuple has alpha_t = {self.alpha:.6f} = pi_hat; "
                         "no stratification can restore identifiability")


class InfeasibleTupleSpecError(NTMPError, ValueError):
    def __init__(self, needed_pos, have_pos, needed_neg, have_neg):
        self.needed_pos = int(needed_pos)
        self.have_pos = int(have_pos)
        self.needed_neg = int(needed_neg)
        self.have_neg = int(have_neg)
        short_pos = max(0, self.needed_pos - self.have_pos)
        short_neg = max(0, self.needed_neg - self.have_neg)
        super().__init__(
            f"Pool cannot supply the requested tuples: short by {short_pos} positives "
            f"(need {self.needed_pos}, have {self.have_pos}) and {short_neg} negatives "
            f"(need {self.needed_neg}, have {self.have_neg})"
        )


class CsvParseError(NTMPError, ValueError):
    def __init__(self, row, message):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class DegenerateInputError(NTMPError, ValueError):
    pass


class NonFiniteLossError(NTMPError, ValueError):
    pass


class ConfigError(NTMPError, ValueError):
    pass
