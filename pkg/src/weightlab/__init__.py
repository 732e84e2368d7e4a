"""Numerical laboratory for weighted norm inequalities of rough singular integrals."""
from .errors import (ConfigError, DegenerateWeightError, DomainError, KernelError,
                     NumericError, ParameterError, ResolutionError, WeightlabError)
from .corpus import make_function
from .grid import (Cube, DyadicLattice, GridSpec, SampledFunction, average, canonical_shifts,
                   enumerate_cubes, load_csv, lp_norm, save_csv)
from .maximal import (generalized_holder_check, hl_maximal, iterated_maximal, luxemburg_norm,
                      orlicz_maximal, power_maximal, rubio_de_francia)
from .operators import (CzBound, DecompositionPlan, KernelSpec, apply_t_omega,
                        commutator_apply, dini_norm, hilbert, kernel_from_name, lp_piece_apply,
                        odd_power, piece_decay_scan, smooth_partial_sum, summation_bound)
from .sparse import (SparseFamily, b_psi_operator, build_sparse_family, carleson_check,
                     domination_fit, lemma47_check, sparse_commutator_forms, sparse_operator,
                     shifted_families, verify_sparsity)
from .registry import load_registry
from .weights import (BmoSymbol, Weight, a1_constant, ap_constant, bmo_norm, exp_symbol_ap,
                      fujii_wilson_constant, make_symbol, make_weight, rhi_check)
from .young import YoungFunction, complementary

__version__ = "0.1.0"
