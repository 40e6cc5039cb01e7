"""Finite-difference interface Hamiltonians and spectral-flow extraction.

The interface operator keeps k_x (and k_z) as Fourier parameters while the
coefficients Omega(y), omega_p(y) vary along y on a periodic interval
[-L, L].  y is discretized on N cells with the E/v fields on integer grid
points and B on half-integer points; the one-sided differences plus
neighbor averaging below make the 9N x 9N matrix exactly Hermitian and
preserve the particle-hole symmetry of the continuum operator.

Periodic boundary conditions create a second, spurious phase transition at
y = +-L; its edge modes are removed by the localization-weight filter and
counted so the "discontinuous branch" artifacts can be audited.

Spectral flow of a gap is the signed number of E_ref crossings by branches
localized at the physical interface as k_x sweeps.  The global sign is
calibrated once: the I+ -> II+ transition in gap 1 returns +1.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment
from scipy.special import expit

from .bulk import EZ, GapInterval, band_extrema, cross_matrix
from .errors import InvalidParameter, NotApplicable, NumericalFailure, ResolutionError
from .params import PlasmaParams, RegularizationScheme

__all__ = [
    "LogisticProfile",
    "TabulatedProfile",
    "FunctionProfile",
    "ParameterProfile",
    "InterfaceDiscretization",
    "SweepRecord",
    "EdgeReport",
    "build_interface_matrix",
    "build_tm_interface_matrix",
    "sweep_spectrum",
    "filter_spurious",
    "spectral_flow",
    "gap_dos_probe",
    "common_gap",
    "write_sweep_csv",
]

W_EDGE_DEFAULT = 0.1
LOC_WINDOW_DEFAULT = 0.2


# --------------------------------------------------------------------------
# Coefficient profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LogisticProfile:
    """Periodic combination of logistic steps.

    Rises from `south` to `north` across y = center with the given width and
    falls back across the wrap point y = +-L, so values and slopes match at
    the periodic boundary.
    """

    south: float
    north: float
    width: float = 2.0
    center: float = 0.0

    def __call__(self, y, L: float):
        y = np.asarray(y, dtype=float)
        g = np.zeros_like(y)
        for m in (-2, -1, 0, 1, 2):
            ym = y + 2.0 * m * L
            g += expit((ym - self.center) / self.width)
            g -= expit((ym - L) / self.width)
        return self.south + (self.north - self.south) * g

    def plateau(self, side: str) -> float:
        return self.south if side == "south" else self.north


@dataclass(frozen=True)
class TabulatedProfile:
    """Periodic sample table on the uniform grid y_i = -L + i * 2L/n."""

    values: tuple

    def __call__(self, y, L: float):
        v = np.asarray(self.values, dtype=float)
        y = np.asarray(y, dtype=float)
        t = (y + L) / (2.0 * L) * v.size
        i0 = np.floor(t).astype(int) % v.size
        frac = t - np.floor(t)
        return v[i0] * (1.0 - frac) + v[(i0 + 1) % v.size] * frac

    def plateau(self, side: str) -> float:
        v = np.asarray(self.values, dtype=float)
        idx = v.size // 4 if side == "south" else (3 * v.size) // 4
        return float(v[idx])


@dataclass(frozen=True)
class FunctionProfile:
    """Arbitrary periodic coefficient function with declared plateau values."""

    fn: Callable
    south: float
    north: float

    def __call__(self, y, L: float):
        return self.fn(np.asarray(y, dtype=float), L)

    def plateau(self, side: str) -> float:
        return self.south if side == "south" else self.north


def _as_profile(spec):
    if isinstance(spec, (int, float)):
        c = float(spec)

        class _Const:
            def __call__(self, y, L):
                return np.full_like(np.asarray(y, dtype=float), c)

            def plateau(self, side):
                return c

        return _Const()
    return spec


@dataclass(frozen=True)
class ParameterProfile:
    """y-dependent (Omega, omega_p) between a south and a north bulk phase."""

    omega_c: object
    omega_p: object
    k_z: float
    L: float

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidParameter("L must be positive and finite")
        object.__setattr__(self, "omega_c", _as_profile(self.omega_c))
        object.__setattr__(self, "omega_p", _as_profile(self.omega_p))
        yl = np.array([-self.L, self.L])
        for f in (self.omega_c, self.omega_p):
            v = f(yl, self.L)
            if not np.all(np.isfinite(v)):
                raise InvalidParameter("profile not finite at +-L")
            if abs(v[0] - v[1]) > 1e-10 * max(1.0, np.max(np.abs(v))):
                raise InvalidParameter("profile not periodic at +-L")

    def omega_c_at(self, y):
        return self.omega_c(y, self.L)

    def omega_p_at(self, y):
        return self.omega_p(y, self.L)

    def bulk_params(self, side: str, reg: RegularizationScheme | None = None) -> PlasmaParams:
        """Plateau PlasmaParams of one side ('south' = y < 0, 'north' = y > 0)."""
        return PlasmaParams(
            omega_c=float(self.omega_c.plateau(side)),
            omega_p=float(self.omega_p.plateau(side)),
            k_z=self.k_z,
            reg=reg if reg is not None else RegularizationScheme(),
        )


@dataclass(frozen=True)
class InterfaceDiscretization:
    n_y: int
    L: float
    kx_grid: tuple

    def __post_init__(self):
        if self.n_y < 50:
            raise InvalidParameter("n_y must be >= 50")
        kx = np.asarray(self.kx_grid, dtype=float)
        if kx.size == 0 or np.any(np.diff(kx) <= 0):
            raise InvalidParameter("kx_grid must be sorted strictly increasing")
        if np.max(np.abs(kx + kx[::-1])) > 1e-9 * max(1.0, np.max(np.abs(kx))):
            raise InvalidParameter("kx_grid must be symmetric about 0")
        object.__setattr__(self, "kx_grid", tuple(float(k) for k in kx))

    @property
    def dy(self) -> float:
        return 2.0 * self.L / self.n_y

    @property
    def y(self) -> np.ndarray:
        return -self.L + self.dy * np.arange(self.n_y)


# --------------------------------------------------------------------------
# Matrix assembly
# --------------------------------------------------------------------------

def build_interface_matrix(
    profile: ParameterProfile, disc: InterfaceDiscretization, kx: float
) -> np.ndarray:
    """9N x 9N Hermitian interface matrix at one k_x.

    Per cell i the diagonal block couples (v, E, B) locally; B lives on
    half-integer points, so E rows use the backward difference / average of
    B and B rows the forward difference / average of E:

        E_i:  G B_i - D B_{i-1},   B_i:  D E_i - G E_{i+1},

    with G = (i/dy) ey_x - (1/2) Kv_x, D = (i/dy) ey_x + (1/2) Kv_x and
    Kv = (k_x, 0, k_z).  Periodic wrap closes the stencil.
    """
    if disc.L != profile.L:
        raise InvalidParameter("profile and discretization L differ")
    N = disc.n_y
    dy = disc.dy
    y = disc.y
    om = np.asarray(profile.omega_c_at(y), dtype=float)
    wp = np.asarray(profile.omega_p_at(y), dtype=float)
    ey = np.array([0.0, 1.0, 0.0])
    Kv = np.array([kx, 0.0, profile.k_z])
    G = (1j / dy) * cross_matrix(ey) - 0.5 * cross_matrix(Kv)
    D = (1j / dy) * cross_matrix(ey) + 0.5 * cross_matrix(Kv)
    Jz = cross_matrix(EZ)
    I3 = np.eye(3)
    H = np.zeros((9 * N, 9 * N), dtype=complex)
    for i in range(N):
        s = 9 * i
        H[s:s + 3, s:s + 3] = 1j * om[i] * Jz
        H[s:s + 3, s + 3:s + 6] = -1j * wp[i] * I3
        H[s + 3:s + 6, s:s + 3] = 1j * wp[i] * I3
        H[s + 3:s + 6, s + 6:s + 9] = G
        H[s + 6:s + 9, s + 3:s + 6] = D
        sm = 9 * ((i - 1) % N)
        sp = 9 * ((i + 1) % N)
        H[s + 3:s + 6, sm + 6:sm + 9] = -D
        H[s + 6:s + 9, sp + 3:sp + 6] = -G
    return H


def build_tm_interface_matrix(
    profile: ParameterProfile, disc: InterfaceDiscretization, kx: float
) -> np.ndarray:
    """5N x 5N TM interface matrix at k_z = 0, same staggering for B_z."""
    scale = max(1.0, np.max(np.abs(profile.omega_c_at(disc.y))))
    if abs(profile.k_z) > 1e-12 * scale:
        raise NotApplicable("TM interface requires k_z = 0")
    N = disc.n_y
    dy = disc.dy
    y = disc.y
    om = np.asarray(profile.omega_c_at(y), dtype=float)
    wp = np.asarray(profile.omega_p_at(y), dtype=float)
    H = np.zeros((5 * N, 5 * N), dtype=complex)
    idy = 1j / dy
    for i in range(N):
        s = 5 * i
        # (v_x, v_y, E_x, E_y, B_z)
        H[s + 0, s + 1] = -1j * om[i]
        H[s + 1, s + 0] = 1j * om[i]
        H[s + 0, s + 2] = -1j * wp[i]
        H[s + 2, s + 0] = 1j * wp[i]
        H[s + 1, s + 3] = -1j * wp[i]
        H[s + 3, s + 1] = 1j * wp[i]
        sm = 5 * ((i - 1) % N)
        sp = 5 * ((i + 1) % N)
        # E_x row: +i d_y B -> backward difference (B on half points)
        H[s + 2, s + 4] = idy
        H[s + 2, sm + 4] = -idy
        # E_y row: +k_x B -> average
        H[s + 3, s + 4] = 0.5 * kx
        H[s + 3, sm + 4] = 0.5 * kx
        # B row: +i d_y E_x (forward) + k_x E_y (average)
        H[s + 4, sp + 2] = idy
        H[s + 4, s + 2] = -idy
        H[s + 4, sp + 3] = 0.5 * kx
        H[s + 4, s + 3] = 0.5 * kx
    return H


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRecord:
    """Full eigensolve at one k_x plus localization weights.

    weights0 / weightsL are the probability weights inside |y| < w_edge * L
    and beyond |y| > (1 - w_edge) * L (the spurious edge); weights_loc uses
    the wider loc_window at y = 0 used for flow attribution.  kept marks
    eigenpairs surviving the spurious-mode filter.
    """

    kx: float
    eigenvalues: np.ndarray
    weights0: np.ndarray
    weightsL: np.ndarray
    weights_loc: np.ndarray
    kept: np.ndarray
    n_y: int
    w_edge: float
    loc_window: float

    def in_gap(self, gap: GapInterval, kept_only: bool = True) -> np.ndarray:
        m = (self.eigenvalues > gap.lo) & (self.eigenvalues < gap.hi)
        if kept_only:
            m &= self.kept
        return m


def _solve_one(H: np.ndarray, y: np.ndarray, L: float, kx: float,
               w_edge: float, loc_window: float, ph_tol: float | None) -> SweepRecord:
    n_y = y.size
    ncomp = H.shape[0] // n_y
    try:
        w, V = sla.eigh(H, driver="evr", check_finite=False, overwrite_a=True)
    except Exception as exc:
        raise NumericalFailure(f"interface eigensolve failed at kx={kx}: {exc}")
    if ph_tol is not None:
        dev = float(np.max(np.abs(np.sort(w) + np.sort(-w)[::-1])))
        if dev > ph_tol * max(1.0, float(np.max(np.abs(w)))):
            raise NumericalFailure(
                f"particle-hole symmetry violated at kx={kx} (dev {dev:.2e})"
            )
    P = (np.abs(V) ** 2).reshape(n_y, ncomp, -1).sum(axis=1)
    m0 = np.abs(y) < w_edge * L
    mL = np.abs(y) > (1.0 - w_edge) * L
    mloc = np.abs(y) < loc_window * L
    return SweepRecord(
        kx=float(kx),
        eigenvalues=w,
        weights0=P[m0].sum(axis=0),
        weightsL=P[mL].sum(axis=0),
        weights_loc=P[mloc].sum(axis=0),
        kept=np.ones(w.size, dtype=bool),
        n_y=n_y,
        w_edge=w_edge,
        loc_window=loc_window,
    )


def sweep_spectrum(
    profile: ParameterProfile,
    disc: InterfaceDiscretization,
    system: str = "full",
    threads: int = 1,
    w_edge: float = W_EDGE_DEFAULT,
    loc_window: float = LOC_WINDOW_DEFAULT,
) -> list[SweepRecord]:
    """Dense eigensolve at every k_x, in deterministic k_x order.

    system="full" builds the 9N x 9N operator, system="tm" the 5N x 5N TM
    operator (k_z = 0 only).  The particle-hole symmetry of each spectrum is
    verified to 1e-9.
    """
    if system not in ("full", "tm"):
        raise InvalidParameter("system must be 'full' or 'tm'")
    build = build_interface_matrix if system == "full" else build_tm_interface_matrix
    y = disc.y

    def task(kx):
        return _solve_one(build(profile, disc, kx), y, disc.L, kx,
                          w_edge, loc_window, ph_tol=1e-9)

    kxs = disc.kx_grid
    if threads <= 1 or len(kxs) == 1:
        return [task(kx) for kx in kxs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, kxs))


def filter_spurious(
    records: Sequence[SweepRecord], w_edge: float = W_EDGE_DEFAULT
) -> tuple[list[SweepRecord], list[tuple]]:
    """Drop eigenpairs carrying more than half their weight at the spurious edge.

    Returns filtered records (kept mask updated) and the removal log
    [(kx, omega, weightL), ...] so discontinuous-branch artifacts can be
    reconstructed.
    """
    out = []
    removed = []
    for r in records:
        spurious = r.weightsL > 0.5
        for om, wl in zip(r.eigenvalues[spurious], r.weightsL[spurious]):
            removed.append((r.kx, float(om), float(wl)))
        out.append(replace(r, kept=r.kept & ~spurious))
    return out, removed


# --------------------------------------------------------------------------
# Spectral flow
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeReport:
    gap: GapInterval
    e_ref: float
    flow: int
    branch_list: tuple
    filtered_count: int
    ambiguous: tuple = ()


def _match_pairs(w1, f1, w2, f2, cutoff: float):
    """Optimal matching of adjacent in-gap eigenvalue lists.

    Cost is |d omega| plus a localization-signature penalty (branches keep
    their weight profile between nearby samples, which disambiguates two
    branches passing within one step of each other); |d omega| > cutoff
    pairs are forbidden, and every state may stay lone at cost `cutoff`.
    """
    n1, n2 = w1.size, w2.size
    if n1 == 0 or n2 == 0:
        return [], np.arange(n1), np.arange(n2)
    big = 1e6 * max(1.0, cutoff)
    d = np.abs(w1[:, None] - w2[None, :])
    feat = np.abs(f1[:, None, :] - f2[None, :, :]).sum(axis=2)
    cost = d + 0.25 * cutoff * feat
    cost[d > cutoff] = big
    n = n1 + n2
    C = np.full((n, n), 0.0)
    C[:n1, :n2] = cost
    C[:n1, n2:] = big
    C[:n1, n2:][np.arange(n1), np.arange(n1)] = cutoff  # state i stays lone
    C[n1:, :n2] = big
    C[n1:, :n2][np.arange(n2), np.arange(n2)] = cutoff
    rows, cols = linear_sum_assignment(C)
    pairs, lone1, lone2 = [], [], []
    for i, j in zip(rows, cols):
        if i < n1 and j < n2:
            pairs.append((i, j))
        elif i < n1:
            lone1.append(i)
        elif j < n2:
            lone2.append(j)
    return pairs, np.array(lone1, dtype=int), np.array(lone2, dtype=int)


def spectral_flow(
    records: Sequence[SweepRecord],
    gap: GapInterval,
    loc_window: float = LOC_WINDOW_DEFAULT,
    e_ref: float | None = None,
) -> EdgeReport:
    """Signed count of E_ref crossings by interface-localized branches.

    For each adjacent k_x pair the in-gap (filtered) eigenvalues are matched
    by optimal assignment; a matched pair straddling E_ref counts with the
    sign of its direction (upward in omega as k_x increases is +1) if the
    cleaner endpoint carries more than half its weight within
    loc_window * L of y = 0.  Sign convention calibrated on I+ -> II+ gap 1
    (flow = +1).  E_ref defaults to the gap midpoint; the flow of a true
    edge branch is independent of the choice.
    """
    if not gap.is_global:
        raise NotApplicable("spectral flow needs a global gap")
    if len(records) < 2:
        raise InvalidParameter("need at least two k_x samples")
    for r in records:
        if abs(r.loc_window - loc_window) > 1e-12:
            raise InvalidParameter(
                "records were computed with a different loc_window"
            )
    cutoff = gap.width / 4.0
    if e_ref is None:
        e_ref = gap.midpoint
    elif not (gap.lo < e_ref < gap.hi):
        raise InvalidParameter("e_ref must lie inside the gap")
    flow = 0
    events = []
    ambiguous = []
    suspects = []
    step_max = 0.0

    def _check_lone(kx, omega, loc):
        # A lone in-gap state can only hide a crossing when it sits within a
        # branch step of E_ref; the step bound is judged after the sweep from
        # the matched pairs.  Branches hybridizing with their spurious
        # kx-mirror carry loc ~ 1/2 and are logged rather than fatal.
        if abs(omega - e_ref) >= cutoff:
            return
        if loc > 0.55:
            suspects.append((float(kx), float(omega), float(loc)))
        else:
            ambiguous.append((float(kx), float(omega), float(loc)))

    for r1, r2 in zip(records[:-1], records[1:]):
        m1 = r1.in_gap(gap)
        m2 = r2.in_gap(gap)
        w1 = r1.eigenvalues[m1]
        w2 = r2.eigenvalues[m2]
        loc1 = r1.weights_loc[m1]
        loc2 = r2.weights_loc[m2]
        f1 = np.column_stack([loc1, r1.weightsL[m1]])
        f2 = np.column_stack([loc2, r2.weightsL[m2]])
        pairs, lone1, lone2 = _match_pairs(w1, f1, w2, f2, cutoff)
        for i in lone1:
            _check_lone(r1.kx, w1[i], loc1[i])
        for j in lone2:
            _check_lone(r2.kx, w2[j], loc2[j])
        for i, j in pairs:
            step_max = max(step_max, abs(w2[j] - w1[i]))
            lo_w, hi_w = sorted((w1[i], w2[j]))
            if not (lo_w < e_ref <= hi_w):
                continue
            direction = 1 if w2[j] > w1[i] else -1
            # attribute by the cleaner endpoint: where a branch hybridizes
            # with its spurious kx-mirror (isolated k_x points) the local
            # weight dips to ~1/2 while the other endpoint stays sharp
            loc = max(loc1[i], loc2[j])
            kx_at = r1.kx if loc1[i] >= loc2[j] else r2.kx
            if loc > 0.5:
                flow += direction
                events.append((float(kx_at), int(direction), float(loc)))
    danger = min(cutoff, 2.0 * step_max) if step_max > 0 else cutoff
    fatal = [s for s in suspects if abs(s[1] - e_ref) < danger]
    if not events and not fatal:
        # localized states near E_ref that were never tracked across any
        # adjacent pair mean the branch outran the grid entirely
        fatal = [s for s in ambiguous + suspects
                 if abs(s[1] - e_ref) < danger and s[2] > 0.45]
    if fatal:
        kx, omega, _ = fatal[0]
        raise ResolutionError(
            f"unmatched interface branch at kx={kx:.4f}, omega={omega:.6f}; "
            "refine the kx grid"
        )
    ambiguous.extend(suspects)
    filtered = sum(int(np.sum(~r.kept)) for r in records)
    return EdgeReport(gap=gap, e_ref=e_ref, flow=flow,
                      branch_list=tuple(events), filtered_count=filtered,
                      ambiguous=tuple(dict.fromkeys(ambiguous)))


def gap_dos_probe(records: Sequence[SweepRecord], gap: GapInterval) -> dict:
    """In-gap state count per k_x after spurious filtering.

    A count that keeps growing with the resolution N certifies a continuum
    filling the gap (bulk-edge correspondence breakdown) rather than a fixed
    family of edge branches.
    """
    counts = np.array([int(np.sum(r.in_gap(gap))) for r in records])
    return {
        "kx": np.array([r.kx for r in records]),
        "counts": counts,
        "mean": float(np.mean(counts)),
        "max": int(np.max(counts)) if counts.size else 0,
    }


def common_gap(
    pS: PlasmaParams, pN: PlasmaParams, ell: int, system: str = "full"
) -> GapInterval:
    """Intersection of the two bulk phases' gap intervals."""
    return band_extrema(pS, ell, system=system).intersect(
        band_extrema(pN, ell, system=system)
    )


# --------------------------------------------------------------------------
# CSV emission
# --------------------------------------------------------------------------

def write_sweep_csv(records: Sequence[SweepRecord], path) -> None:
    """Per-sweep CSV: kx, eigenvalue_index, omega, weight0, weightL, kept."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kx", "eigenvalue_index", "omega", "weight0", "weightL", "kept"])
        for r in records:
            for i, om in enumerate(r.eigenvalues):
                w.writerow([
                    f"{r.kx:.10g}", i, f"{om:.12g}",
                    f"{r.weights0[i]:.6g}", f"{r.weightsL[i]:.6g}",
                    int(r.kept[i]),
                ])
