"""Steady states of irreducible Markov chains via adaptively built multigrid.

The package computes the stationary vector of a column-stochastic matrix A
by solving the singular system (I - A) x = 0: a bootstrap setup phase
approximates small singular triplets and builds least-squares transfer
operators from them, and the resulting V-cycle preconditions GMRES on the
residual equation.  Chain generators for the standard benchmark families,
field-of-values diagnostics, and a command-line harness are included.
"""

from .chains import (ChainProblem, PetriNetSpec, birth_death, import_chain,
                     make_chain, molloy_net, petri_reachability, random_planar,
                     tandem_queue, uniform_2d)
from .coarsen import CfSplitting, CoarseningConfig, cr_coarsen, geometric_coarsen
from .dense import (EigenDecomposition, gen_sym_eig, herm_eig_max, pinv_solve,
                    qr_solve_ls, svd, sym_eig)
from .fov import (FovResult, ProjectedSystem, elman_bound, eigenvalue_dots,
                  fov_boundary, project_range, projected_preconditioned,
                  theorem2_bound)
from .interp import (InterpConfig, WeightedTestSet, build_interpolation,
                     build_restriction, fit_row, singular_test_weights)
from .bootstrap import (Hierarchy, Level, SetupConfig, SetupResult, TripletSet,
                        bootstrap_cycle, coarsest_triplets, complexities,
                        export_hierarchy, init_test_vectors, rayleigh_sigma,
                        run_setup)
from .presets import PRESETS, build_problem, default_setup_config
from .relax import SmootherConfig, jacobi_sweep, jacobi_sweep_transpose
from .solver import (GmresConfig, SolveReport, VCycleOperator, gmres,
                     power_iteration_oracle, solve_steady_state)
from .sparse import (make_csr, load_matrix_market, neighborhood,
                     save_matrix_market, spmv, spmv_transpose, transpose,
                     triple_product)

__version__ = "0.1.0"
