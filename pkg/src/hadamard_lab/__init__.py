"""Barycentres on CAT(0) spaces and their ergodic averages.

The main entry points::

    from hadamard_lab import Hyperboloid2, FiniteMeasure, barycentre, w2_distance
"""
from .barycentre import BarycentreResult, barycentre, inductive_mean, lipschitz_check, variance_gap
from .dynamics import (Cyclic, FinitePermutation, FolnerSequence, HeisenbergZ, IntegerLattice, Integers,
                       TorusRotation, TwoComponent, box_sequence, custom_sequence, cyclic_rotation,
                       folner_defect, interval_sequence, shrinking_sequence, shulman_ratio, tempered_report)
from .ergodic import (EmpiricalSpec, convergence_experiment, d2_distance, empirical_barycentre,
                      empirical_measure, finite_valued_approximation, maximal_experiment, pushforward_reference)
from .errors import CapacityError, ConvergenceError, DomainError, PrecisionError
from .geometry import (Euclidean, Hyperboloid2, MetricTree, Product, SpacePoint, TreeShape,
                       cn_inequality_residual, diameter, dist, geodesic_point, tripod)
from .observables import circle, component_circles, constant, hyperbolic_loop, table, tripod_path
from .transport import (Coupling, FiniteMeasure, orbit_coupling, second_moment, tv_distance,
                        tv_to_w2_bound_check, w2_distance)

__version__ = "0.1.0"
