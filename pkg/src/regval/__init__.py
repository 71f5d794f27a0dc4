"""Finite-state valuation engine for regulated asset bases.

Event trees carry physical probabilities and one-period state prices; on top
of them sit expectation and present-value functionals, cost-of-capital
operators, the one-year and multi-year regulatory allowance schemes, debt
portfolios, and reproductions of the published illustration tables.
"""

from .bbm import (
    BuildingBlockDecomposition,
    OneYearScenario,
    combined_coc_series,
    combined_cost_of_capital,
    component_allowance,
    constant_allowance_schedule,
    revenue_allowance,
    solve_standard_allowance,
    standard_allowance,
)
from .coc import (
    MeanVarianceSpec,
    beta,
    capm_rate,
    cost_of_capital,
    expectation_weighted_average,
    holding_cost_of_capital,
    mean_variance_tree,
    two_period_decomposition_residual,
    value_weighted_average,
)
from .debt import (
    DebtInstrument,
    DebtPortfolio,
    EquityScenario,
    InstrumentShare,
    RateSplitInstance,
    RateSplitResult,
    build_portfolio_document,
    equity_allowance,
    equity_allowance_identity_residual,
    first_period_debt_flows,
    one_year_wacc,
    parse_portfolio_document,
    portfolio_cost_of_capital,
    portfolio_value,
    rebalance_invariance_residual,
    weighted_average_rate_gap,
    ytm_and_coc,
)
from .errors import (
    NonConvergenceError,
    NonPositiveStatePriceError,
    NoSignChangeError,
    NoSolutionError,
    PolicyViolationError,
    RateOutOfRangeError,
    TreeStructureError,
    ValuationError,
    ZeroDenominatorError,
    ZeroExpectationError,
    ZeroPortfolioValueError,
    ZeroPresentValueError,
    ZeroVarianceError,
)
from .multiyear import (
    AnnualParams,
    CashflowCsvError,
    ForwardParams,
    MultiYearScenario,
    NpvCheck,
    allowance_path,
    annual_allowance,
    annual_expansion_residual,
    annual_expansion_value,
    annual_reset_parameters,
    forward_parameters,
    implied_combined_coc,
    internal_rate_of_return,
    read_cashflow_csv,
    single_rate_allowances,
    verify_npv_zero,
)
from .rates import GrossRate, as_gross
from .reports import ReportTable, build_report, multiyear_table, render_figure
from .tree import (
    CashFlowStream,
    DocumentError,
    EventTree,
    RandomCashFlow,
    TreeNode,
    build_document,
    parse_document,
)

__version__ = "0.1.0"

__all__ = [
    "AnnualParams",
    "BuildingBlockDecomposition",
    "CashFlowStream",
    "CashflowCsvError",
    "DebtInstrument",
    "DebtPortfolio",
    "DocumentError",
    "EquityScenario",
    "EventTree",
    "ForwardParams",
    "GrossRate",
    "InstrumentShare",
    "MeanVarianceSpec",
    "MultiYearScenario",
    "NonConvergenceError",
    "NonPositiveStatePriceError",
    "NoSignChangeError",
    "NoSolutionError",
    "NpvCheck",
    "OneYearScenario",
    "PolicyViolationError",
    "RandomCashFlow",
    "RateOutOfRangeError",
    "RateSplitInstance",
    "RateSplitResult",
    "ReportTable",
    "TreeNode",
    "TreeStructureError",
    "ValuationError",
    "ZeroDenominatorError",
    "ZeroExpectationError",
    "ZeroPortfolioValueError",
    "ZeroPresentValueError",
    "ZeroVarianceError",
    "allowance_path",
    "annual_allowance",
    "annual_expansion_residual",
    "annual_expansion_value",
    "annual_reset_parameters",
    "as_gross",
    "beta",
    "build_document",
    "build_portfolio_document",
    "build_report",
    "capm_rate",
    "combined_coc_series",
    "combined_cost_of_capital",
    "component_allowance",
    "constant_allowance_schedule",
    "cost_of_capital",
    "equity_allowance",
    "equity_allowance_identity_residual",
    "expectation_weighted_average",
    "first_period_debt_flows",
    "forward_parameters",
    "holding_cost_of_capital",
    "implied_combined_coc",
    "internal_rate_of_return",
    "mean_variance_tree",
    "multiyear_table",
    "one_year_wacc",
    "parse_document",
    "parse_portfolio_document",
    "portfolio_cost_of_capital",
    "portfolio_value",
    "read_cashflow_csv",
    "rebalance_invariance_residual",
    "render_figure",
    "revenue_allowance",
    "single_rate_allowances",
    "solve_standard_allowance",
    "standard_allowance",
    "two_period_decomposition_residual",
    "value_weighted_average",
    "verify_npv_zero",
    "weighted_average_rate_gap",
    "ytm_and_coc",
]
