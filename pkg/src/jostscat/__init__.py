"""Jost functions, phase shifts and bound states for Schrodinger and Dirac
Hamiltonians with generalized Yukawa potentials.

Two independent computational routes are provided: a momentum-space Volterra
scheme (kernel tables, resolvents, spectral densities) and a radial-ODE
oracle (direct integration plus Wronskian / small-radius extraction).  The
test suite and the ``selftest`` CLI subcommand cross-validate them.
"""

from .channels import Channel, degeneracy, make_channel
from .errors import (BranchError, DivergenceError, DomainError, ExtractionError,
                     GridError, JostscatError, NumericsError, RenormalizationError,
                     TruncationError, ValidationError)
from .potential import (InteractionKind, SpectralWeight, evaluate_potential,
                        load_weight, moments, relcorr_weight, weyl_transform, yukawa)

__all__ = [
    "Channel", "degeneracy", "make_channel",
    "SpectralWeight", "InteractionKind", "evaluate_potential", "moments",
    "relcorr_weight", "weyl_transform", "yukawa", "load_weight",
    "JostscatError", "ValidationError", "DomainError", "NumericsError",
    "BranchError", "GridError", "TruncationError", "ExtractionError",
    "DivergenceError", "RenormalizationError",
]

__version__ = "0.1.0"
