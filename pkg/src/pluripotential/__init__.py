"""Pluripotential energies, Monge-Ampere measures and Dirichlet quasi-metrics on
finite model backends (weighted graphs and periodic toric grids)."""
from .core import (dirichlet_j, e_energy, energy_pairing, j_functional, ma, mixed_measure, mu_omega,
                   normalize, omega_norm, submean_constant, thompson_distance, verify_axioms)
from .graph import GraphModel, g2, random_graph
from .measures import dd_metric, j_energy, quasi_metric
from .model import Model
from .modelio import dump_model, load_model, parse_model
from .toric import ToricModel
from .twisted import j_twisted_value, nabla_e

__version__ = "0.1.0"
