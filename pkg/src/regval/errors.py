"""Exception hierarchy for the valuation engine.

Everything raised on purpose by the library derives from :class:`ValuationError`,
so callers can distinguish engine-level failures from plain programming errors.
"""

from __future__ import annotations


class ValuationError(Exception):
    """Base class for all engine errors."""


class TreeStructureError(ValuationError):
    """Malformed event tree: bad parent links, times, probabilities or node ids."""


class NonPositiveStatePriceError(ValuationError):
    """A one-period state price came out zero or negative."""


class ZeroPresentValueError(ValuationError):
    """Cost of capital requested for a claim with zero present value."""


class ZeroExpectationError(ValuationError):
    """A weighting or rate needs a nonzero expectation and got zero."""


class ZeroVarianceError(ValuationError):
    """Beta requested against a market payoff with zero variance."""


class ZeroDenominatorError(ValuationError):
    """A quotient in a rate recursion hit a zero divisor (degenerate flow)."""


class RateOutOfRangeError(ValuationError):
    """A rate fell outside its admissible range (e.g. non-finite or non-positive)."""


class NonConvergenceError(ValuationError):
    """An iterative solver exhausted its iteration budget."""


class NoSolutionError(ValuationError):
    """A root-finding problem has no solution in the searched region."""


class NoSignChangeError(ValuationError):
    """Bisection could not bracket a root (ill-posed rate-of-return problem)."""


class ZeroPortfolioValueError(ValuationError):
    """Portfolio-level rate requested for a portfolio worth exactly zero."""


class PolicyViolationError(ValuationError):
    """A regulatory policy failed its per-reset value condition."""
