"""focklab: numerical laboratory for Toeplitz operators on oscillator
eigenspaces, commutator trace identities, and Fredholm index estimation."""

__version__ = "0.1.0"

from .algebra import (  # noqa: F401
    PolyState,
    LevelBasisVector,
    apply_A,
    apply_C,
    apply_P,
    apply_Pj,
    apply_Vj,
    apply_Vj_adjoint,
    fock_basis,
    inner_product,
    level_basis,
    number_op,
    state_norm,
)
from .symbols import (  # noqa: F401
    CompactProfile,
    HalfPlaneSwitch,
    LandauParameters,
    Phase,
    RealPolynomial,
    SwitchProfile,
    Wedge,
    eta_moment,
    gauss_moment,
    kernel_overlap,
    kernel_tail_norm,
    level_count,
    scale_physical,
    tent_bump,
)
from .toeplitz import (  # noqa: F401
    OperatorMatrix,
    TruncationSpec,
    rotation_conjugate,
    toeplitz_level,
    toeplitz_lll,
    toeplitz_stacked,
)
