"""Cover's universal portfolio, its high-order recursion, and an exact
rational verifier for small markets."""

from .highorder import HoupResult, houp, houp_relatives
from .market import Market, MarketError, Permutation, augment, load_csv, permute, save_csv, toy_market
from .oracle import RationalMarket, exact_houp_value, exact_up_value, verify_paper
from .portfolio import (
    AllocationPath,
    WealthPath,
    best_crp_hindsight,
    crp_value,
    split_and_forget,
    universal_portfolio,
)
from .simplex import SamplerSpec, Scheme, average_over_simplex, exact_moment, gauss_legendre_rule, sample_uniform

__version__ = "0.1.0"
