"""
subcash: cash sub-additive risk measures under interest-rate ambiguity.

Finite-scenario reserves, their sub-probability duals, optimal risk transfer
by inf-convolution, and lattice BSDE dynamics.
"""

__version__ = "0.1.0"

__all__ = ["core", "measures", "transfer", "dynamic", "evaluation", "cli", "utils"]
