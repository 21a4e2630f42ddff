"""Exact simulation of a two-photon 2x4x4 hyperentangled source, its
frequency-spatial state analyzer, and the key-distribution protocol built on it."""

from .errors import DegenerateStateError, HyperentError, PostSelectionError, ProtocolError, UsageError
from .state import (
    ERASED,
    PhotonLabel,
    PureState,
    Registry,
    STANDARD,
    apply_mode_unitary,
    dump_state,
    fidelity,
    inner_product,
    load_state,
    marginal_distribution,
    normalize,
    tensor,
)
from .expr import state_from_expr

__version__ = "0.1.0"
