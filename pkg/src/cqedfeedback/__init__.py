"""Single-photon feedback entanglement of two Lambda-atoms in a leaky cavity."""

from ._backend import BACKEND
from .errors import (
    ConsistencyError,
    CQEDError,
    DegenerateSpectrumError,
    DomainError,
    OracleUnavailableError,
    ParameterRangeError,
    PoleProximityError,
    QuadratureError,
    SearchError,
)
from .model import (
    Factor,
    FactorKind,
    RabiPoles,
    SpectralFunction,
    SystemParams,
    cavity_spectrum,
    coupling_g,
    input_spectrum,
    rabi_poles,
    transfer_C,
    transfer_D,
)

__version__ = "0.1.0"
