"""Octonionic plurisubharmonic functions in two octonionic variables.

Numerical toolkit for the octonionic Hessian, mixed Monge-Ampere densities,
ball automorphisms of the octonionic unit ball and the Perron envelope.
"""

from octopsh.errors import ContractError, DomainError, OctopshError

__version__ = "0.1.0"

__all__ = ["ContractError", "DomainError", "OctopshError", "__version__"]
