"""Convergence-probability bounds for probabilistic PCF with ground errors."""

from pcfbounds.bounds import BoundsQuery, BoundsReport, bound_at_k, cross_validate, refine
from pcfbounds.groundsem import ERR, SubDist, ext_leq, parse_subdist
from pcfbounds.krivine import kreval, kreval_term
from pcfbounds.operational import err_probability, estimate, exact_outcomes, sample, step
from pcfbounds.poly import Polynomial, evaluate, tree_to_poly
from pcfbounds.syntax import LOWER, UPPER, parse, term_preorder_leq, typecheck, unfold, wrap_observe

__version__ = "0.1.0"
