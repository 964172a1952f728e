"""Conformal deformation of Schouten-tensor curvature equations on discrete manifolds."""

from .symfuncs import ConeSpec, DomainError, SymFuncSpec, elementary_symmetric, sigma_k

__all__ = ["ConeSpec", "DomainError", "SymFuncSpec", "elementary_symmetric", "sigma_k"]
__version__ = "0.1.0"
