"""Linearized two-species BGK mixture: Hermite spectral solver, decay certification, grid oracle."""

from .mixture_model import ConstraintViolation, MixtureParams, ValidatedParams, validate
from .spectral_galerkin import SpectralField, evolve, project
from .hypocoercivity import EntropyCertificate, EntropyParams, certify, entropy, verify_decay

__all__ = [
    "ConstraintViolation", "MixtureParams", "ValidatedParams", "validate",
    "SpectralField", "evolve", "project",
    "EntropyCertificate", "EntropyParams", "certify", "entropy", "verify_decay",
]
