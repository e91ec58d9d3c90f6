"""soup2d: two-dimensional random-interlacement soups and their verification.

Lattice potential theory (potential kernel, killed and massive Green
functions, capacities), exact Doob-transform samplers for Dirichlet, tilted
and massive trajectory soups, Gaussian free fields with pinning, and a
statistics harness checking the pinned Ray-Knight isomorphisms against
Monte Carlo.
"""

__version__ = "0.1.0"

from ._core import BACKEND as kernel_backend
from .dirichlet import (DirichletSolver, MeasureOnSet, avoid_probability,
                        ball_solver, capacity, capacity_exact,
                        capacity_finite_N, equilibrium_measure,
                        green_dirichlet, harmonic_measure,
                        harmonic_measure_exact, rho_measure, solver_for)
from .errors import (AccuracyError, BudgetError, DomainError, NumericError,
                     Soup2dError)
from .experiments import EXPERIMENTS, ExperimentReport, laplace_exact
from .geometry import Domain, ball_points, parse_set_file
from .gff import (ConditionalShift, ConditionalShiftK, FieldSampler,
                  GaussianSpec, build_spec, sample_field, shift_function)
from .massive import (MassiveRegime, capacity_massive, massive_equilibrium,
                      massive_hit_probability, massive_hit_probability_exact)
from .potential import (PotentialTable, massive_green, potential_asymptotic,
                        potential_kernel)
from .soup_dirichlet import (DirichletSoupSampler, occupation_field,
                             sample_conditioned_backward,
                             sample_conditioned_forward, sample_soup,
                             sample_soup_via_excursions, soup_sampler,
                             vacancy_probability)
from .soup_massive import (MassiveSoupSampler, pinned_vacancy_exact,
                           sample_massive_soup, sample_massive_soup_pinned)
from .soup_tilted import (TiltedOccupationSampler, TiltedWalkKernel,
                          sample_tilted_forward, sample_tilted_soup,
                          tilted_step)
from .streams import ReplicaRng, StreamFactory
from .trajectories import (BidirectionalTrajectory, KilledTrajectory,
                           OccupationField, SoupSample)
