"""topoplasma: topological classification of magnetized cold-plasma waves.

Bulk band structures and phase diagram, Berry-curvature integrals and
bulk-difference invariants under high-wavenumber regularization, and
finite-difference interface spectra whose spectral flow tests the
bulk-edge correspondence, including reduced two-band models and the
singular cases where the correspondence fails.
"""

from .bulk import (
    BandStructure,
    GapInterval,
    Phase,
    band_extrema,
    build_bulk_hamiltonian,
    build_tm_te,
    classify_phase,
    eigendecompose,
    k0_eigenvalues,
    limiting_eigenvectors,
    symmetry_operator,
    transition_frequencies,
)
from .dirac import (
    DiracModel,
    DiracProfile,
    WeylProbe,
    dirac_bdi,
    dirac_interface_spectrum,
    gap_overlap,
    reduce_minus,
    reduce_plus,
    weyl_residual,
)
from .errors import (
    InvalidParameter,
    NotApplicable,
    NumericalFailure,
    ResolutionError,
    TopoplasmaError,
)
from .interface import (
    InterfaceDiscretization,
    LogisticProfile,
    ParameterProfile,
    SweepRecord,
    TabulatedProfile,
    build_interface_matrix,
    common_gap,
    filter_spurious,
    gap_dos_probe,
    spectral_flow,
    sweep_spectrum,
    write_sweep_csv,
)
from .invariants import (
    BdiResult,
    CurvatureResult,
    GluingReport,
    bdi,
    check_gluing,
    curvature_analytic,
    curvature_quadrature,
    table1_row,
    table2,
)
from .params import PlasmaParams, RegularizationScheme, WaveVector

__version__ = "0.1.0"
