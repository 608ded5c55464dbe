"""Signorini contact for the isotropic Lamé system via its half-Laplacian reduction."""

from .params import (DisplacementSlab, DomainError, GridSpec, LameParams, RealField,
                     SingularFrequencyError, SpectralField, derive_constants)

__version__ = "0.1.0"

__all__ = [
    "DisplacementSlab",
    "DomainError",
    "GridSpec",
    "LameParams",
    "RealField",
    "SingularFrequencyError",
    "SpectralField",
    "derive_constants",
]
