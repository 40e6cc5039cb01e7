"""Berry-curvature integrals, gluing diagnostics and bulk-difference invariants.

Two independent routes compute the per-band curvature integral C_j:

* analytic: for the rotation-invariant symbol, C[Pi] reduces to boundary
  terms  C_j = m_j(inf) - m_j(0)  with  m = i <psi, R'(0) psi>  evaluated on
  the closed-form k -> 0 and k -> infinity eigenvectors (R'(0) is the
  rotation generator Diag(J, J, J), J = ez x).

* quadrature: a gauge-invariant plaquette (link-variable) sum on a polar
  grid, with determinant links for multi-band projectors.

Sign convention: the plaquette orientation is fixed once so that phase II+
yields (C_1..C_4) = (-1, sigma/sqrt(sigma^2+1), +1, -1); the analytic route
uses the same convention by construction.

A bulk-difference invariant for gap ell is the difference of curvature sums
below the gap of the two phases; it is a genuine integer invariant only when
the limiting gap projectors of the two phases agree along every direction
(the gluing condition), which is what GluingReport records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bulk import (
    Phase,
    classify_phase,
    bulk_hamiltonian_grid,
    tm_hamiltonian_grid,
    limiting_eigenvectors,
)
from .errors import InvalidParameter, NotApplicable, NumericalFailure
from .params import PlasmaParams, RegularizationScheme

__all__ = [
    "CurvatureResult",
    "GluingReport",
    "BdiResult",
    "table1_row",
    "curvature_analytic",
    "curvature_quadrature",
    "check_gluing",
    "bdi",
    "table2",
    "TABLE2_TRANSITIONS",
]

GLUING_TOL = 1e-8
MIN_LINK_MODULUS = 1e-6
# TM components within the 9-component (v, E, B) ordering
TM_COMPONENTS = np.array([0, 1, 3, 4, 8])


# --------------------------------------------------------------------------
# Analytic route
# --------------------------------------------------------------------------

def _sigma_term(sigma: float) -> float:
    """sigma / sqrt(1 + sigma^2), with sigma = +inf -> 1."""
    if math.isinf(sigma):
        return 1.0
    return sigma / math.sqrt(1.0 + sigma * sigma)


# m(0) per positive band for each phase family, in units of sign(Omega).
# Band content at k=0: 'z' (linear e_z polarization, m=0), '+'/'-' (circular,
# m = +-1 for Omega > 0); ordering follows the phase definition.
_M0_BY_ROMAN = {
    "I": (0.0, 1.0, -1.0, 1.0),     # (omega_p, L-, R, L+)
    "II": (1.0, 0.0, -1.0, 1.0),    # (L-, omega_p, R, L+)
    "III": (1.0, -1.0, 0.0, 1.0),   # (L-, R, omega_p, L+)
}


def table1_row(phase: Phase, sigma_bar: float) -> tuple[float, float, float, float]:
    """Curvature integrals (C_1..C_4) of the positive bands for one phase.

    For phases IV+- (k_z = 0) bands 1, 3 are the trivial TE bands and
    bands 2, 4 carry the TM entries.
    """
    if phase is Phase.BOUNDARY:
        raise NotApplicable("curvature integrals are undefined on a phase boundary")
    sign = float(phase.sign)
    st = _sigma_term(sigma_bar)
    if phase.roman == "IV":
        # TM band 1 is circular '-', TM band 2 circular '+' at k=0;
        # at infinity only the TM flat band carries m = sign * st.
        return (0.0, sign * (1.0 + st), 0.0, -sign)
    m0 = np.array(_M0_BY_ROMAN[phase.roman]) * sign
    m_inf = np.array([0.0, sign * st, 0.0, 0.0])
    return tuple(m_inf - m0)


@dataclass(frozen=True)
class CurvatureResult:
    band: int
    value: float
    method: str  # "analytic" | "quadrature"
    residual: float


def curvature_analytic(p: PlasmaParams, band: int) -> CurvatureResult:
    """Closed-form curvature integral of a signed band (+-1..+-4, or 0)."""
    if band == 0:
        return CurvatureResult(band=0, value=0.0, method="analytic", residual=0.0)
    if abs(band) not in (1, 2, 3, 4):
        raise InvalidParameter("band must be in +-1..+-4 or 0")
    phase = classify_phase(p)
    row = table1_row(phase, p.sigma_bar)
    value = row[abs(band) - 1]
    if band < 0:
        value = -value  # conjugation antisymmetry C_{-j} = -C_j
    return CurvatureResult(band=band, value=float(value), method="analytic",
                           residual=0.0)


# --------------------------------------------------------------------------
# Quadrature route (gauge-invariant plaquette sum, polar grid)
# --------------------------------------------------------------------------

def _default_k_cut(p: PlasmaParams) -> float:
    scale = max(1.0, p.omega_p, abs(p.omega_c), abs(p.k_z))
    k = 1e3 * scale
    # regularized runs must reach the regime where sigma(k) has settled
    if p.reg.kind == "omega-decay" and p.omega_p > 0:
        sigma0 = abs(p.omega_c) / p.omega_p
        k = max(k, 2e3 * sigma0 / math.sqrt(p.reg.eta))
    elif p.reg.kind == "plasma-decay" and p.omega_c != 0 and p.omega_p > 0:
        sigma0 = abs(p.omega_c) / p.omega_p
        k = max(k, 2e3 / (sigma0 * math.sqrt(p.reg.eta)))
    return k


def _band_columns(p: PlasmaParams, bands: tuple[int, ...], kz_tol: float = 1e-12):
    """(grid builder, matrix size, columns) for the requested signed bands."""
    scale = max(1.0, abs(p.omega_c), p.omega_p)
    if abs(p.k_z) > kz_tol * scale:
        return bulk_hamiltonian_grid, 9, [4 + j for j in bands]
    # k_z = 0: sorted 9x9 bands hop between TM and TE branches, so follow
    # the decoupled subsystems instead.  |band| 2, 4 -> TM 1, 2; |band| 3
    # -> TE light cone; the TE zero pair (|band| 1) is everywhere degenerate.
    tm_cols, te_cols = [], []
    for j in bands:
        a = abs(j)
        s = 1 if j > 0 else -1
        if a in (2, 4):
            tm_cols.append(2 + s * (1 if a == 2 else 2))
        elif a == 3:
            te_cols.append(3 if s > 0 else 0)
        else:
            raise NotApplicable(
                "band +-1 at k_z = 0 is the degenerate TE zero pair; "
                "its curvature vanishes identically"
            )
    if tm_cols and te_cols:
        raise InvalidParameter("cannot mix TM and TE bands in one projector")
    if tm_cols:
        return tm_hamiltonian_grid, 5, tm_cols
    return _te_hamiltonian_grid(p), 4, te_cols


def _te_hamiltonian_grid(p: PlasmaParams):
    def build(_p, KX, KY):
        KX = np.asarray(KX, dtype=float)
        KY = np.asarray(KY, dtype=float)
        k = np.hypot(KX, KY)
        _, wp = _p.coefficients_at(k)
        sh = KX.shape
        H = np.zeros(sh + (4, 4), dtype=complex)
        H[..., 0, 1] = -1j * wp
        H[..., 1, 0] = 1j * wp
        H[..., 1, 2] = KY
        H[..., 2, 1] = KY
        H[..., 1, 3] = -KX
        H[..., 3, 1] = -KX
        return H

    return build


def _plaquette_sum(vecs: np.ndarray) -> tuple[float, float]:
    """Oriented plaquette-phase sum and the minimum link modulus.

    vecs has shape (n_r+1, n_theta, dim, n_bands); links are determinants of
    the band-overlap matrices, making the sum gauge invariant (including
    arbitrary per-point band rotations).
    """
    def link(a, b):
        ov = np.einsum("ijka,ijkb->ijab", np.conj(a), b)
        if ov.shape[-1] == 1:
            return ov[..., 0, 0]
        return np.linalg.det(ov)

    u_r = link(vecs[:-1], vecs[1:])                      # (n_r, n_th)
    u_t = link(vecs, np.roll(vecs, -1, axis=1))          # (n_r+1, n_th)
    loops = u_r * u_t[1:] * np.conj(np.roll(u_r, -1, axis=1)) * np.conj(u_t[:-1])
    min_mod = float(min(np.abs(u_r).min(), np.abs(u_t).min()))
    return float(np.angle(loops).sum()), min_mod


def _quadrature_value(p, bands, K_cut, r_min, n_r, n_theta):
    builder, _, cols = _band_columns(p, bands)
    r = np.geomspace(r_min, K_cut, n_r + 1)
    th = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    R, TH = np.meshgrid(r, th, indexing="ij")
    H = builder(p, R * np.cos(TH), R * np.sin(TH))
    _, V = np.linalg.eigh(H)
    vecs = V[..., :, cols]
    phase_sum, min_mod = _plaquette_sum(vecs)
    if min_mod < MIN_LINK_MODULUS:
        raise NumericalFailure(
            f"plaquette link modulus {min_mod:.2e} below {MIN_LINK_MODULUS:.0e}; "
            "near-degeneracy or gauge obstruction on the grid"
        )
    # orientation fixed by the phase II+ calibration (see module docstring)
    return -phase_sum / (2.0 * math.pi)


def curvature_quadrature(
    p: PlasmaParams,
    band: int | tuple[int, ...],
    K_cut: float | None = None,
    n_r: int | None = None,
    n_theta: int = 64,
    r_min: float = 1e-4,
    refine: bool = True,
) -> CurvatureResult:
    """Numerical curvature integral over the plane |k_perp| <= K_cut.

    `band` may be a tuple of signed bands, in which case the (rank > 1)
    projector onto their span is integrated.  The reported residual is the
    change under one grid refinement (n -> 2n in both directions).
    """
    bands = (band,) if isinstance(band, int) else tuple(band)
    if len(bands) == 0:
        raise InvalidParameter("empty band selection")
    if 0 in bands and len(bands) > 1:
        raise InvalidParameter("band 0 cannot join a multi-band projector")
    if bands == (0,):
        scale = max(1.0, abs(p.omega_c), p.omega_p)
        if abs(p.k_z) <= 1e-12 * scale:
            raise NotApplicable("band 0 is triply degenerate at k_z = 0")
    if K_cut is None:
        K_cut = _default_k_cut(p)
    if n_r is None:
        n_r = max(192, int(round(16.0 * math.log(K_cut / r_min))))
    if n_r < 64 or n_theta < 64:
        raise InvalidParameter("grid sizes must be >= 64")
    value = _quadrature_value(p, bands, K_cut, r_min, n_r, n_theta)
    if refine:
        fine = _quadrature_value(p, bands, K_cut, r_min, 2 * n_r, 2 * n_theta)
        res = abs(fine - value)
        value = fine
    else:
        res = math.nan
    out_band = bands[0] if len(bands) == 1 else 0
    return CurvatureResult(band=out_band, value=value, method="quadrature",
                           residual=res)


# --------------------------------------------------------------------------
# Gluing condition
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GluingReport:
    ell: int
    per_band: dict
    gap_mismatch: float
    glued: bool
    n_theta: int


def _is_tm_pair(pN: PlasmaParams, pS: PlasmaParams) -> bool:
    scale = max(1.0, abs(pN.omega_c), pN.omega_p, abs(pS.omega_c), pS.omega_p)
    return abs(pN.k_z) <= 1e-12 * scale and abs(pS.k_z) <= 1e-12 * scale


def _limit_projector(p: PlasmaParams, bands, theta: float, tm: bool) -> np.ndarray:
    P = np.zeros((9, 9), dtype=complex)
    for j in bands:
        v = limiting_eigenvectors(p, theta, j)
        P += np.outer(v, np.conj(v))
    if tm:
        P = P[np.ix_(TM_COMPONENTS, TM_COMPONENTS)]
    return P


def check_gluing(
    pN: PlasmaParams, pS: PlasmaParams, ell: int, n_theta: int = 16
) -> GluingReport:
    """Directional match of the two phases' limiting gap projectors.

    Band projectors above the gap are compared (equivalent to comparing
    P_ell itself).  Bands 3 and 4 share an asymptotically degenerate
    two-dimensional limit space, so the decisive quantity is the mismatch of
    the summed (gap) projector; per-band numbers for the natural
    representatives are reported alongside.
    """
    if ell not in (1, 2):
        raise InvalidParameter("ell must be 1 or 2")
    scale = max(1.0, abs(pN.k_z), abs(pS.k_z))
    if abs(pN.k_z - pS.k_z) > 1e-12 * scale:
        raise InvalidParameter("gluing requires a common k_z")
    if pN.reg.kind != pS.reg.kind:
        raise InvalidParameter("gluing requires a common regularization kind")
    tm = _is_tm_pair(pN, pS)
    if tm:
        bands_above = (2, 4) if ell == 1 else (4,)  # TM bands via 9x9 labels
    else:
        bands_above = tuple(range(ell + 1, 5))
    thetas = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    per_band = {j: 0.0 for j in bands_above}
    gap_mismatch = 0.0
    for th in thetas:
        for j in bands_above:
            d = _limit_projector(pN, (j,), th, tm) - _limit_projector(pS, (j,), th, tm)
            per_band[j] = max(per_band[j], float(np.linalg.norm(d)))
        d = _limit_projector(pN, bands_above, th, tm) - _limit_projector(
            pS, bands_above, th, tm
        )
        gap_mismatch = max(gap_mismatch, float(np.linalg.norm(d)))
    return GluingReport(
        ell=ell,
        per_band=per_band,
        gap_mismatch=gap_mismatch,
        glued=bool(gap_mismatch < GLUING_TOL),
        n_theta=n_theta,
    )


# --------------------------------------------------------------------------
# Bulk-difference invariants
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BdiResult:
    ell: int
    value: int
    raw: float
    rounding_residual: float
    gluing: GluingReport
    is_bdi: bool


def _curvature_sum_below(p: PlasmaParams, ell: int, tm: bool) -> float:
    """Sum of curvature integrals of all bands below gap ell.

    By conjugation antisymmetry the full sum over bands <= ell equals minus
    the sum over positive bands above the gap, which the curvature-table
    rows provide directly.
    """
    row = table1_row(classify_phase(p), p.sigma_bar)
    if tm:
        above = {1: (2, 4), 2: (4,)}[ell]
    else:
        above = tuple(range(ell + 1, 5))
    return -sum(row[j - 1] for j in above)


def bdi(pN: PlasmaParams, pS: PlasmaParams, ell: int) -> BdiResult:
    """Bulk-difference invariant of gap ell for the S -> N transition.

    The value is reported even when the gluing condition fails (is_bdi is
    then False): such integers are exactly the cautionary cases where the
    number does not protect anything.
    """
    gluing = check_gluing(pN, pS, ell)
    tm = _is_tm_pair(pN, pS)
    raw = _curvature_sum_below(pS, ell, tm) - _curvature_sum_below(pN, ell, tm)
    value = int(round(raw))
    return BdiResult(
        ell=ell,
        value=value,
        raw=raw,
        rounding_residual=abs(raw - value),
        gluing=gluing,
        is_bdi=gluing.glued,
    )


# Canonical parameter pairs for the five transitions (k_z = 2 base point,
# |Omega| = 1 so omega_- = 0.8284, omega_+ = 4.8284; IV rows at k_z = 0).
def _table2_pairs(reg: RegularizationScheme):
    om_minus = 0.5 * (math.sqrt(16.0 + 16.0) - 4.0)  # omega_-(Omega=1, kz=2)
    P = lambda oc, wp, kz: PlasmaParams(omega_c=oc, omega_p=wp, k_z=kz, reg=reg)
    return [
        ("I+->II+", P(1, 0.5 * om_minus, 2), P(1, 1.5 * om_minus, 2)),
        ("I-->II-", P(-1, 0.5 * om_minus, 2), P(-1, 1.5 * om_minus, 2)),
        ("II+->III+", P(1, 2.0, 2), P(1, 6.0, 2)),
        ("II-->III-", P(-1, 2.0, 2), P(-1, 6.0, 2)),
        ("I-->I+", P(-1, 0.5 * om_minus, 2), P(1, 0.5 * om_minus, 2)),
        ("II-->II+", P(-1, 1.0, 2), P(1, 1.0, 2)),
        ("IV-->IV+", P(-1, 1.0, 0), P(1, 1.0, 0)),
    ]


TABLE2_TRANSITIONS = tuple(n for n, _, _ in _table2_pairs(RegularizationScheme()))


def table2(scheme: RegularizationScheme | None = None):
    """BDI pairs (ell = 1, ell = 2) for every admissible phase transition.

    With the Omega-decay regularization every row is a well-defined BDI;
    other schemes reproduce the cautionary non-glued integers.
    """
    if scheme is None:
        scheme = RegularizationScheme(kind="omega-decay", eta=1e-2)
    rows = []
    for name, pS, pN in _table2_pairs(scheme):
        rows.append((name, pS, pN, bdi(pN, pS, 1), bdi(pN, pS, 2)))
    return rows
