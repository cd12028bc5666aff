"""Exact Fedosov-type deformation quantization on Kaehler charts.

Exact Gaussian-rational jets, the fibrewise kappa-ordered Weyl algebra, Kaehler
and bundle geometry from potentials and fibre metrics, the Fedosov recursions
with star products, module products, deformed Hermitian metrics and the
canonical line bundle bimodule, plus executable verification suites.
"""

from .errors import (ConfigError, DegenerateMetric, DimensionMismatch, FedosovError,
                     IncompatibleKinds, JetOrderExhausted, MissingFibreMetric,
                     NegativeLambdaPower, NonClosedOmega, NonHermitianMetric, NonTypeOneOne,
                     NotInvertible)
from .fedosov import (FedosovSolution, MoritaBimodule, as_symbol, deformed_metric_h,
                      deformed_pairing_H, fedosov_derivative, lambda_coefficients,
                      morita_bimodule, omega_11, omega_from_potential, recursion_residual,
                      required_jet_order, solve_r, star, star_prime, taylor)
from .geometry import (BundleChart, KaehlerChart, bundle_from_metric, builtin_potential,
                       canonical_line_bundle, chart_from_potential, connection_apply,
                       trivial_bundle, two_form)
from .scalars import EXACT, GaussianRational, Jet
from .verification import (CheckReport, SuiteConfig, check_associativity, check_separation,
                           oracle_flat_star, replay, run_suite)
from .weyl import (TruncationPolicy, WeylElement, circ, conjugate, contraction, delta,
                   delta_inv, delta_star, laplace_fib, mu_product, poisson_fibre, proj, s_kappa,
                   sigma, star_involution, supercommutator)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
