"""cleavelab: continuum cleavage laws of brittle crystals from cell energies.

The package computes, for mass-spring Bravais lattice models under uniaxial
tension, the stiffness and toughness constants of the limiting energy, the
critical boundary load, and the optimal crystallographic cleavage planes; it
verifies the predicted law numerically by evaluating and locally minimizing
the discrete energy on finite lattices.
"""

from .lattice import (
    BravaisBasis,
    DomainBox,
    LatticeInstance,
    build_basis,
    build_lattice,
    crystallographic_normals,
    discrete_gradient,
    interaction_directions,
    neighbor_pairs,
)
from .potentials import (
    CellEnergyModel,
    EnergySystem,
    Shell,
    bond_betas,
    cell_energy,
    decomposition_check,
    make_potential,
    model_from_preset,
    total_energy,
)
from .elastic import (
    ElasticConstants,
    InadmissibleModelError,
    alpha_A,
    compute_elastic_constants,
    optimal_strain,
    reduced_energy,
    strain_quadratic_form,
)
from .fracture import (
    FractureConstants,
    beta_A,
    compute_fracture_constants,
    min_length,
    sphere_extrema,
    surplus,
)
from .cleavage import (
    CleavageLaw,
    Configuration,
    cleavage_law,
    count_broken_bonds,
    crack_energy_limit,
    cracked_config,
    elastic_config,
)
from .simulate import (
    MinimizeOptions,
    MinimizeReport,
    SweepTable,
    apply_boundary,
    energy_gradient,
    epsilon_sweep,
    minimize,
)
from .kernels import HAVE_COMPILED

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
