"""Bulk Hamiltonians of the magnetized cold-plasma model and their spectra.

The 9x9 Hermitian symbol acts on (v, E, B) (three R^3 blocks) at in-plane
wavevector k_perp and fixed k_z:

    H(k) = [[ i Omega(k) ez_x ,  -i omega_p(k) I ,  0        ],
            [ i omega_p(k) I  ,   0              ,  -kop_x   ],
            [ 0               ,   kop_x          ,  0        ]]

with u_x the 3x3 cross-product matrix of u and kop = (k_x, k_y, k_z).
At k_z = 0 the system decouples into a 5x5 TM block on (v_x, v_y, E_x, E_y,
B_z) and a 4x4 TE block on (v_z, E_z, B_x, B_y).

Positive k = 0 eigenvalues are (omega_p, omega_L-, omega_R, omega_L+), the
latter three being roots of the two cubics

    k_z^2 = w^2 - omega_p^2 w / (w + |Omega|)   (R branch)
    k_z^2 = w^2 - omega_p^2 w / (w - |Omega|)   (L branches),

and the phase of the model is decided by where omega_p falls relative to the
band-crossing frequencies omega_-/omega_+.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidParameter, NotApplicable, NumericalFailure
from .params import PlasmaParams, WaveVector

__all__ = [
    "Phase",
    "BandStructure",
    "GapInterval",
    "SymmetryOperator",
    "K0Eigenvalues",
    "cross_matrix",
    "build_bulk_hamiltonian",
    "bulk_hamiltonian_grid",
    "build_tm_te",
    "tm_hamiltonian_grid",
    "symmetry_operator",
    "eigendecompose",
    "k0_eigenvalues",
    "transition_frequencies",
    "classify_phase",
    "limiting_eigenvectors",
    "band_extrema",
]

EZ = np.array([0.0, 0.0, 1.0])
HERMITICITY_RTOL = 1e-12
SPECTRUM_SYM_TOL = 1e-10
BOUNDARY_RTOL = 1e-8


def cross_matrix(u) -> np.ndarray:
    """3x3 matrix of the map w -> u x w."""
    ux, uy, uz = u
    return np.array(
        [[0.0, -uz, uy], [uz, 0.0, -ux], [-uy, ux, 0.0]], dtype=complex
    )


# --------------------------------------------------------------------------
# Hamiltonian construction
# --------------------------------------------------------------------------

def build_bulk_hamiltonian(p: PlasmaParams, kv: WaveVector) -> np.ndarray:
    """9x9 Hermitian bulk symbol at kv, with regularized coefficients."""
    om, wp = p.coefficients_at(kv.k)
    om = float(om)
    wp = float(wp)
    kop = kv.k3(p.k_z)
    if not np.all(np.isfinite(kop)):
        raise InvalidParameter("non-finite wavevector")
    Z = np.zeros((3, 3), dtype=complex)
    I3 = np.eye(3, dtype=complex)
    kx3 = cross_matrix(kop)
    H = np.block(
        [
            [1j * om * cross_matrix(EZ), -1j * wp * I3, Z],
            [1j * wp * I3, Z, -kx3],
            [Z, kx3, Z],
        ]
    )
    _assert_hermitian(H)
    return H


def bulk_hamiltonian_grid(p: PlasmaParams, KX, KY) -> np.ndarray:
    """Stacked 9x9 symbols over arrays of (k_x, k_y); shape (..., 9, 9)."""
    KX = np.asarray(KX, dtype=float)
    KY = np.asarray(KY, dtype=float)
    k = np.hypot(KX, KY)
    om, wp = p.coefficients_at(k)
    sh = KX.shape
    H = np.zeros(sh + (9, 9), dtype=complex)
    Jz = cross_matrix(EZ)
    H[..., 0:3, 0:3] = 1j * om[..., None, None] * Jz
    H[..., 0:3, 3:6] = -1j * wp[..., None, None] * np.eye(3)
    H[..., 3:6, 0:3] = 1j * wp[..., None, None] * np.eye(3)
    KC = np.zeros(sh + (3, 3), dtype=complex)
    KC[..., 0, 1] = -p.k_z
    KC[..., 0, 2] = KY
    KC[..., 1, 0] = p.k_z
    KC[..., 1, 2] = -KX
    KC[..., 2, 0] = -KY
    KC[..., 2, 1] = KX
    H[..., 3:6, 6:9] = -KC
    H[..., 6:9, 3:6] = KC
    return H


def build_tm_te(p: PlasmaParams, kv: WaveVector, kz_tol: float = 1e-12):
    """Decoupled (TM 5x5, TE 4x4) blocks; requires k_z = 0.

    TM acts on (v_x, v_y, E_x, E_y, B_z), TE on (v_z, E_z, B_x, B_y).  Their
    direct sum is a basis permutation of the 9x9 symbol at k_z = 0.
    """
    if abs(p.k_z) > kz_tol * max(1.0, abs(p.omega_c), p.omega_p):
        raise NotApplicable("TM/TE split requires k_z = 0")
    om, wp = p.coefficients_at(kv.k)
    om = float(om)
    wp = float(wp)
    kx, ky = kv.k_x, kv.k_y
    # (v_x, v_y) block is the e_z-cross restriction i*Omega*[[0,-1],[1,0]]
    H_tm = np.array(
        [
            [0, -1j * om, -1j * wp, 0, 0],
            [1j * om, 0, 0, -1j * wp, 0],
            [1j * wp, 0, 0, 0, -ky],
            [0, 1j * wp, 0, 0, kx],
            [0, 0, -ky, kx, 0],
        ],
        dtype=complex,
    )
    H_te = np.array(
        [
            [0, -1j * wp, 0, 0],
            [1j * wp, 0, ky, -kx],
            [0, ky, 0, 0],
            [0, -kx, 0, 0],
        ],
        dtype=complex,
    )
    _assert_hermitian(H_tm)
    _assert_hermitian(H_te)
    return H_tm, H_te


def tm_hamiltonian_grid(p: PlasmaParams, KX, KY) -> np.ndarray:
    """Stacked TM 5x5 symbols over arrays of (k_x, k_y)."""
    KX = np.asarray(KX, dtype=float)
    KY = np.asarray(KY, dtype=float)
    k = np.hypot(KX, KY)
    om, wp = p.coefficients_at(k)
    sh = KX.shape
    H = np.zeros(sh + (5, 5), dtype=complex)
    H[..., 0, 1] = -1j * om
    H[..., 1, 0] = 1j * om
    H[..., 0, 2] = -1j * wp
    H[..., 2, 0] = 1j * wp
    H[..., 1, 3] = -1j * wp
    H[..., 3, 1] = 1j * wp
    H[..., 2, 4] = -KY
    H[..., 4, 2] = -KY
    H[..., 3, 4] = KX
    H[..., 4, 3] = KX
    return H


# --------------------------------------------------------------------------
# Symmetry operators
# --------------------------------------------------------------------------

def _rot3(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _s_block(theta: float) -> np.ndarray:
    """S(theta) = R(theta) S(0) R(-theta) with S(0) = diag(1, -1, 1)."""
    c2, s2 = math.cos(2 * theta), math.sin(2 * theta)
    return np.array([[c2, s2, 0.0], [s2, -c2, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class SymmetryOperator:
    name: str
    theta: float
    matrix: np.ndarray


_SYMMETRY_NAMES = (
    "R",
    "S",
    "Gamma_P",
    "Gamma_Omega",
    "Gamma_k",
    "Gamma_P_tilde",
    "Gamma_k_tilde",
)


def symmetry_operator(name: str, theta: float = 0.0) -> SymmetryOperator:
    """Discrete/rotation symmetry operators of the bulk model.

    R:              Diag(R3, R3, R3), rotation about e_z (unitary)
    S:              3x3 reflection block S(theta) (Hermitian involution)
    Gamma_P:        Diag(S, -S, -S); Gamma_P H Gamma_P = -H
    Gamma_Omega:    Diag(I, -I, I);  Gamma_Omega H(Omega) Gamma_Omega = -H(-Omega)
    Gamma_k:        Diag(I, I, -I);  Gamma_k H(kop) Gamma_k = H(-kop)
    Gamma_P_tilde:  Gamma_P Gamma_Omega = Diag(S, S, -S); maps Omega -> -Omega
    Gamma_k_tilde:  Gamma_k R(pi); maps k_z -> -k_z
    """
    if not math.isfinite(theta):
        raise InvalidParameter("theta must be finite")
    I3 = np.eye(3)
    S = _s_block(theta)
    if name == "R":
        M = np.kron(np.eye(3), _rot3(theta))
    elif name == "S":
        M = S
    elif name == "Gamma_P":
        M = np.block(
            [[S, 0 * I3, 0 * I3], [0 * I3, -S, 0 * I3], [0 * I3, 0 * I3, -S]]
        )
    elif name == "Gamma_Omega":
        M = np.kron(np.diag([1.0, -1.0, 1.0]), I3)
    elif name == "Gamma_k":
        M = np.kron(np.diag([1.0, 1.0, -1.0]), I3)
    elif name == "Gamma_P_tilde":
        M = np.block(
            [[S, 0 * I3, 0 * I3], [0 * I3, S, 0 * I3], [0 * I3, 0 * I3, -S]]
        )
    elif name == "Gamma_k_tilde":
        M = np.kron(np.diag([1.0, 1.0, -1.0]), I3) @ np.kron(np.eye(3), _rot3(math.pi))
    else:
        raise InvalidParameter(f"unknown symmetry operator {name!r}")
    return SymmetryOperator(name=name, theta=theta, matrix=M.astype(complex))


# --------------------------------------------------------------------------
# Diagonalization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BandStructure:
    """Sorted eigenpairs of one Hermitian symbol.

    eigenvalues are ascending; eigenvectors[:, j] belongs to eigenvalues[j].
    degenerate_blocks lists index ranges (start, stop) of clusters closer
    than degeneracy_tol; such subspaces are only defined up to rotation.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    degeneracy_tol: float
    degenerate_blocks: tuple

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    def positive_band(self, j: int) -> np.ndarray:
        """Eigenvector of signed band j (j = 0 is the central zero band)."""
        mid = self.n // 2
        return self.eigenvectors[:, mid + j]

    def positive_eigenvalue(self, j: int) -> float:
        mid = self.n // 2
        return float(self.eigenvalues[mid + j])


def eigendecompose(
    M: np.ndarray,
    degeneracy_tol: float | None = None,
    check_spectrum_symmetry: bool = True,
) -> BandStructure:
    """Full Hermitian eigendecomposition with degeneracy bookkeeping.

    The model family is particle-hole symmetric, so the spectrum of every
    matrix built by this package is symmetric about zero; that is verified
    here unless disabled.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidParameter("expected a square matrix")
    _assert_hermitian(M)
    try:
        w, V = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalFailure(f"eigensolver did not converge: {exc}") from exc
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    if check_spectrum_symmetry:
        if np.max(np.abs(np.sort(w) + np.sort(-w)[::-1])) > SPECTRUM_SYM_TOL * scale:
            raise NumericalFailure("spectrum not symmetric about zero")
    tol = degeneracy_tol if degeneracy_tol is not None else 1e-9 * scale
    blocks = []
    start = 0
    for i in range(1, w.size + 1):
        if i == w.size or w[i] - w[i - 1] > tol:
            if i - start > 1:
                blocks.append((start, i))
            start = i
    return BandStructure(
        eigenvalues=w,
        eigenvectors=V,
        degeneracy_tol=tol,
        degenerate_blocks=tuple(blocks),
    )


def _assert_hermitian(M: np.ndarray):
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    dev = float(np.max(np.abs(M - M.conj().T)))
    if dev > HERMITICITY_RTOL * scale:
        raise InvalidParameter(f"matrix not Hermitian (deviation {dev:.2e})")


# --------------------------------------------------------------------------
# k = 0 spectrum, transitions, phases
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class K0Eigenvalues:
    omega_Lm: float
    omega_R: float
    omega_Lp: float
    omega_p: float

    def sorted_positive(self) -> np.ndarray:
        return np.sort([self.omega_Lm, self.omega_R, self.omega_Lp, self.omega_p])


def _cubic_residuals(p: PlasmaParams, roots: K0Eigenvalues):
    """Residuals of the two defining cubics at the returned roots."""
    om = abs(p.omega_c)
    wp2 = p.omega_p**2
    kz2 = p.k_z**2

    def f_r(w):
        return w * w - wp2 * w / (w + om) - kz2

    def f_l(w):
        return w * w - wp2 * w / (w - om) - kz2

    return f_r(roots.omega_R), f_l(roots.omega_Lm), f_l(roots.omega_Lp)


def k0_eigenvalues(p: PlasmaParams) -> K0Eigenvalues:
    """Positive k = 0 eigenvalues (omega_L-, omega_R, omega_L+) and omega_p.

    Roots are found by bracketed root-finding on the monotone intervals
    (0, |Omega|), (|kz|, sqrt(kz^2 + wp^2)) and (|Omega| or the light line,
    up) where each cubic has exactly one sign change.
    """
    om = abs(p.omega_c)
    wp = p.omega_p
    kz = abs(p.k_z)
    if om == 0.0 or kz == 0.0:
        raise NotApplicable("k=0 cubics require Omega != 0 and k_z != 0")
    if wp == 0.0:
        raise NotApplicable("omega_p = 0 collapses the L-branch pair")
    kz2, wp2 = kz * kz, wp * wp

    def f_r(w):
        return w * w - wp2 * w / (w + om) - kz2

    def f_l(w):
        return w * w - wp2 * w / (w - om) - kz2

    try:
        # R branch inside the light strip  kz < w_R < sqrt(kz^2 + wp^2)
        w_r = brentq(f_r, kz * (1 - 1e-14), math.sqrt(kz2 + wp2) * (1 + 1e-14),
                     xtol=1e-15, rtol=8.9e-16)
        # L- below the cyclotron pole, where f_l -> +inf
        lo = om * 1e-30
        hi = om * (1 - 1e-15)
        w_lm = brentq(f_l, lo, hi, xtol=1e-15, rtol=8.9e-16)
        # L+ above the pole; f_l(om+) = -inf, f_l(w) ~ w^2 at large w
        lo = om * (1 + 1e-15)
        hi = math.sqrt(kz2 + wp2) + om + wp + 1.0
        while f_l(hi) < 0:
            hi *= 2.0
        w_lp = brentq(f_l, lo, hi, xtol=1e-15, rtol=8.9e-16)
    except ValueError as exc:
        raise NumericalFailure(f"k=0 root bracketing failed: {exc}") from exc
    roots = K0Eigenvalues(omega_Lm=w_lm, omega_R=w_r, omega_Lp=w_lp, omega_p=wp)
    scale = max(1.0, om, wp, kz) ** 2
    if max(abs(r) for r in _cubic_residuals(p, roots)) > 1e-10 * scale:
        raise NumericalFailure("k=0 cubic residual above tolerance")
    return roots


def transition_frequencies(omega_c: float, k_z: float) -> tuple[float, float]:
    """Band-crossing frequencies (omega_-, omega_+) at k = 0.

    omega_-/+ / |Omega| = (sqrt(x^4 + 4 x^2) -/+ ... ) / 2 with x = k_z/Omega;
    omega_- is the I/II transition (meaningful for under-dense plasmas),
    omega_+ the II/III transition.
    """
    if omega_c == 0.0:
        raise NotApplicable("transition frequencies require Omega != 0")
    x = abs(k_z / omega_c)
    root = math.sqrt(x**4 + 4 * x**2)
    om = abs(omega_c)
    return 0.5 * om * (root - x * x), 0.5 * om * (root + x * x)


class Phase(enum.Enum):
    I_PLUS = "I+"
    I_MINUS = "I-"
    II_PLUS = "II+"
    II_MINUS = "II-"
    III_PLUS = "III+"
    III_MINUS = "III-"
    IV_PLUS = "IV+"
    IV_MINUS = "IV-"
    BOUNDARY = "boundary"

    @property
    def roman(self) -> str:
        return self.value.rstrip("+-")

    @property
    def sign(self) -> int:
        if self is Phase.BOUNDARY:
            return 0
        return 1 if self.value.endswith("+") else -1


def classify_phase(p: PlasmaParams) -> Phase:
    """Topological phase of the bulk parameters.

    k_z = 0 with Omega >< 0 is the decoupled TM/TE phase IV+-; otherwise
    omega_p is compared against the crossing frequencies omega_-/omega_+.
    Within relative tolerance of omega_p = omega_-/+, Omega = 0, or
    omega_p = 0 the classification is reported as Boundary.
    """
    scale = max(1.0, abs(p.omega_c), p.omega_p, abs(p.k_z))
    if abs(p.omega_c) < BOUNDARY_RTOL * scale:
        return Phase.BOUNDARY
    sign = "+" if p.omega_c > 0 else "-"
    if abs(p.k_z) < BOUNDARY_RTOL * scale:
        return Phase(f"IV{sign}")
    if p.omega_p < BOUNDARY_RTOL * scale:
        return Phase.BOUNDARY
    om_minus, om_plus = transition_frequencies(p.omega_c, p.k_z)
    if abs(p.omega_p - om_minus) < BOUNDARY_RTOL * max(1.0, om_minus):
        return Phase.BOUNDARY
    if abs(p.omega_p - om_plus) < BOUNDARY_RTOL * max(1.0, om_plus):
        return Phase.BOUNDARY
    if p.omega_p < om_minus:
        return Phase(f"I{sign}")
    if p.omega_p < om_plus:
        return Phase(f"II{sign}")
    return Phase(f"III{sign}")


# --------------------------------------------------------------------------
# k -> infinity eigenvectors
# --------------------------------------------------------------------------

def _sigma_terms(sigma: float) -> tuple[float, float]:
    """(sigma/sqrt(1+sigma^2), 1/sqrt(1+sigma^2)) with sigma = inf handled."""
    if math.isinf(sigma):
        return 1.0, 0.0
    s = math.sqrt(1.0 + sigma * sigma)
    return sigma / s, 1.0 / s


def limiting_eigenvectors(p: PlasmaParams, theta: float, branch: int) -> np.ndarray:
    """Unit k -> infinity eigenvector of signed band `branch` (+-1..+-4).

    Evaluated with sigma = sigma_bar of the regularization and the sign of
    Omega.  Branches 3 and 4 become asymptotically degenerate (both follow
    the light cone); the returned vectors are the natural orthonormal
    representatives of that two-dimensional limit space.
    """
    if branch not in (1, 2, 3, 4, -1, -2, -3, -4):
        raise InvalidParameter("branch must be in +-1..+-4")
    sg, ci = _sigma_terms(p.sigma_bar)
    pos = p.omega_c >= 0
    khat = np.array([math.cos(theta), math.sin(theta), 0.0])
    u = np.array([math.sin(theta), -math.cos(theta), 0.0])  # khat x ez
    ez = EZ
    zero = np.zeros(3)
    j = abs(branch)
    if j == 1:
        su = -ci if pos else ci
        vec = np.concatenate([su * u + 1j * ez, -sg * khat, zero])
    elif j == 2:
        su = -sg if pos else sg
        vec = np.concatenate([su * u - 1j * khat, ci * khat, zero])
    elif j == 3:
        vec = (np.concatenate([zero, ez, u]) if pos
               else np.concatenate([zero, -ez, -u]))
    else:
        vec = (np.concatenate([zero, -u, ez]) if pos
               else np.concatenate([zero, u, -ez]))
    vec = vec.astype(complex) / math.sqrt(2.0)
    if branch < 0:
        gk = np.concatenate([np.ones(6), -np.ones(3)])
        vec = gk * np.conj(vec)
    return vec


# --------------------------------------------------------------------------
# Global gaps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GapInterval:
    ell: int
    lo: float
    hi: float
    is_global: bool

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def intersect(self, other: "GapInterval") -> "GapInterval":
        if self.ell != other.ell:
            raise InvalidParameter("cannot intersect gaps with different ell")
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        return GapInterval(ell=self.ell, lo=lo, hi=hi, is_global=lo < hi)


def band_extrema(
    p: PlasmaParams,
    ell: int,
    kgrid: Sequence[float] | None = None,
    system: str = "full",
) -> GapInterval:
    """Gap interval between positive bands ell and ell+1 over a radial scan.

    system="full" uses the 9x9 bands (positive bands 1..4); system="tm"
    uses the 5x5 TM bands at k_z = 0 (bands 0, 1, 2 with band 0 flat at 0).
    By rotational invariance a theta = 0 scan suffices.
    """
    if system not in ("full", "tm"):
        raise InvalidParameter("system must be 'full' or 'tm'")
    if ell not in (1, 2):
        raise InvalidParameter("only gaps ell = 1, 2 can be global")
    if kgrid is None:
        kmax = 50.0 * max(p.omega_p, abs(p.omega_c), abs(p.k_z), 1.0)
        kgrid = np.linspace(0.0, kmax, 2000)
    kgrid = np.asarray(kgrid, dtype=float)
    if kgrid.size == 0:
        raise InvalidParameter("empty k grid")
    if system == "tm":
        H = tm_hamiltonian_grid(p, kgrid, np.zeros_like(kgrid))
        w = np.linalg.eigvalsh(H)  # columns: 2 negative, zero, 2 positive
        bands = {0: np.zeros_like(kgrid), 1: w[:, 3], 2: w[:, 4]}
        lo = float(np.max(bands[ell - 1]))
        hi = float(np.min(bands[ell]))
    else:
        H = bulk_hamiltonian_grid(p, kgrid, np.zeros_like(kgrid))
        w = np.linalg.eigvalsh(H)
        lo = float(np.max(w[:, 4 + ell]))
        hi = float(np.min(w[:, 5 + ell]))
    return GapInterval(ell=ell, lo=lo, hi=hi, is_global=lo < hi)
