"""Bump-train counterexamples for the regularity of p-Poisson problems.

Core pieces: the bump train and its closed-form norms (:mod:`.construction`),
finite-difference moduli and exponent fits (:mod:`.besov`), the radial lift to
``R^d`` with the associated data (:mod:`.radial`) and the experiment driver
(:mod:`.harness`).
"""
from .besov import (Method, ModulusSample, exact_gap_diff, diff_norm, fit_exponent,
                    modulus_sweep, predicted_exponent, w_diff_norm)
from .construction import (DIVERGENT, BumpParams, Phase, breakpoint, cumulative_w, eval_u,
                           eval_v, eval_v_prime, eval_w, eval_w_prime, locate, w_lp_norm,
                           w_prime_finite, w_prime_lp_norm)
from .errors import (DomainError, GridTooCoarse, HypothesisViolated, InsufficientSamples,
                     NotDifferentiable, OutOfValidity, PreconditionError, PsharpError,
                     TruncationSaturated)
from .harness import (ExperimentConfig, MainTheoremConfig, classify_A, classify_u,
                      run_experiment, savare_compare, select_params_L, select_params_main)
from .radial import RadialFieldSpec, eval_A, eval_grad_u_d, eval_u_d, f_weak, make_grid

__version__ = "0.1.0"
