"""Bulk Hamiltonian construction, symmetries, k=0 spectrum, phases."""

import math

import numpy as np
import pytest

from topoplasma.bulk import (
    Phase,
    band_extrema,
    build_bulk_hamiltonian,
    build_tm_te,
    classify_phase,
    cross_matrix,
    eigendecompose,
    k0_eigenvalues,
    limiting_eigenvectors,
    symmetry_operator,
    transition_frequencies,
)
from topoplasma.errors import InvalidParameter, NotApplicable
from topoplasma.params import PlasmaParams, RegularizationScheme, WaveVector


def H(omega_c, omega_p, k_z, k=0.0, theta=0.0, reg=None):
    p = PlasmaParams(omega_c, omega_p, k_z,
                     reg=reg if reg is not None else RegularizationScheme())
    return build_bulk_hamiltonian(p, WaveVector(k=k, theta=theta))


def random_params(rng, n, with_reg=False):
    out = []
    for _ in range(n):
        oc = rng.uniform(-3, 3)
        wp = rng.uniform(0.05, 3)
        kz = rng.uniform(-3, 3)
        reg = RegularizationScheme()
        if with_reg:
            kind = rng.choice(["none", "omega-decay", "plasma-decay"])
            if kind != "none":
                reg = RegularizationScheme(kind, rng.uniform(0.01, 1.0))
        out.append(PlasmaParams(oc, wp, kz, reg=reg))
    return out


# --------------------------------------------------------------------------
# construction
# --------------------------------------------------------------------------

def test_block_structure_at_k0():
    M = H(1.0, 1.0, 1.0, k=0.0)
    assert np.allclose(M[0:3, 3:6], -1j * np.eye(3), atol=1e-15)
    assert np.allclose(M[3:6, 6:9], -cross_matrix([0, 0, 1]), atol=1e-15)
    assert np.allclose(M[0:3, 0:3], 1j * cross_matrix([0, 0, 1]), atol=1e-15)


def test_free_maxwell_limit():
    M = H(0.0, 0.0, 0.7, k=1.3, theta=0.4)
    # v block fully decoupled, E/B blocks carry the curl
    assert np.all(M[0:3, :] == 0) and np.all(M[:, 0:3] == 0)
    kop = np.array([1.3 * math.cos(0.4), 1.3 * math.sin(0.4), 0.7])
    assert np.allclose(M[3:6, 6:9], -cross_matrix(kop), atol=1e-15)


def test_omega_decay_enters_coefficients():
    reg = RegularizationScheme("omega-decay", eta=1.0)
    M = H(1.0, 1.0, 0.0, k=1.0, reg=reg)
    assert np.allclose(M[0:3, 0:3], (1j / math.sqrt(2)) * cross_matrix([0, 0, 1]),
                       atol=1e-15)
    # plasma coefficient untouched
    assert np.allclose(M[0:3, 3:6], -1j * np.eye(3), atol=1e-15)


def test_nonfinite_input_rejected():
    with pytest.raises(InvalidParameter):
        PlasmaParams(math.nan, 1.0, 1.0)
    with pytest.raises(InvalidParameter):
        WaveVector(k=-1.0)
    with pytest.raises(InvalidParameter):
        PlasmaParams(1.0, -0.5, 1.0)


def test_hermiticity_randomized():
    rng = np.random.default_rng(7)
    for p in random_params(rng, 50, with_reg=True):
        kv = WaveVector(k=rng.uniform(0, 10), theta=rng.uniform(0, 2 * math.pi))
        M = build_bulk_hamiltonian(p, kv)
        assert np.max(np.abs(M - M.conj().T)) <= 1e-12 * max(1.0, np.max(np.abs(M)))


# --------------------------------------------------------------------------
# symmetries
# --------------------------------------------------------------------------

def test_rotation_covariance_and_invariance():
    rng = np.random.default_rng(3)
    for _ in range(8):
        oc, wp, kz = rng.uniform(-2, 2), rng.uniform(0.1, 2), rng.uniform(-2, 2)
        k = rng.uniform(0, 4)
        th = rng.uniform(0, 2 * math.pi)
        R = symmetry_operator("R", th).matrix
        lhs = R.conj().T @ H(oc, wp, kz, k=k, theta=th) @ R
        assert np.max(np.abs(lhs - H(oc, wp, kz, k=k, theta=0.0))) < 1e-10
        w_th = np.linalg.eigvalsh(H(oc, wp, kz, k=k, theta=th))
        w_0 = np.linalg.eigvalsh(H(oc, wp, kz, k=k, theta=0.0))
        assert np.max(np.abs(w_th - w_0)) < 1e-10


def test_parity_and_sign_flip_identities():
    rng = np.random.default_rng(11)
    for _ in range(8):
        oc, wp, kz = rng.uniform(-2, 2), rng.uniform(0.1, 2), rng.uniform(-2, 2)
        k = rng.uniform(0, 4)
        th = rng.uniform(0, 2 * math.pi)
        M = H(oc, wp, kz, k=k, theta=th)
        GP = symmetry_operator("Gamma_P", th).matrix
        assert np.max(np.abs(GP @ M @ GP + M)) < 1e-12 * max(1, k, abs(oc), wp)
        GO = symmetry_operator("Gamma_Omega").matrix
        assert np.max(np.abs(GO @ M @ GO + H(-oc, wp, kz, k=k, theta=th))) < 1e-12
        GK = symmetry_operator("Gamma_k").matrix
        # Gamma_k flips the full wavevector kop -> -kop
        assert np.max(np.abs(
            GK @ M @ GK - H(oc, wp, -kz, k=k, theta=th + math.pi))) < 1e-12
        GKT = symmetry_operator("Gamma_k_tilde").matrix
        assert np.max(np.abs(
            GKT @ M @ GKT.conj().T - H(oc, wp, -kz, k=k, theta=th))) < 1e-12
        GPT = symmetry_operator("Gamma_P_tilde", th).matrix
        assert np.max(np.abs(GPT @ M @ GPT - H(-oc, wp, kz, k=k, theta=th))) < 1e-12


def test_gamma_p0_gamma_omega_is_signed_identity():
    GP0 = symmetry_operator("Gamma_P", 0.0).matrix
    GO = symmetry_operator("Gamma_Omega").matrix
    expect = np.diag([1, -1, 1, 1, -1, 1, -1, 1, -1]).astype(complex)
    assert np.allclose(GP0 @ GO, expect, atol=1e-15)


def test_symmetry_operator_algebra():
    th = 0.83
    R = symmetry_operator("R", th).matrix
    assert np.allclose(R @ R.conj().T, np.eye(9), atol=1e-14)
    GKT = symmetry_operator("Gamma_k_tilde").matrix
    assert np.allclose(GKT @ GKT.conj().T, np.eye(9), atol=1e-14)
    for name in ("Gamma_P", "Gamma_Omega", "Gamma_k", "Gamma_P_tilde"):
        G = symmetry_operator(name, th).matrix
        assert np.allclose(G, G.conj().T, atol=1e-12)
        assert np.allclose(G @ G, np.eye(9), atol=1e-12)
    S = symmetry_operator("S", th).matrix
    assert np.allclose(S @ S, np.eye(3), atol=1e-14)
    with pytest.raises(InvalidParameter):
        symmetry_operator("nope")


# --------------------------------------------------------------------------
# diagonalization
# --------------------------------------------------------------------------

def test_eigendecompose_basic():
    bs = eigendecompose(np.zeros((9, 9)))
    assert np.all(bs.eigenvalues == 0)
    assert bs.degenerate_blocks == ((0, 9),)
    with pytest.raises(InvalidParameter):
        eigendecompose(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_spectrum_symmetric_and_zero_mode():
    rng = np.random.default_rng(5)
    for p in random_params(rng, 20):
        k = rng.uniform(0.05, 4)
        th = rng.uniform(0, 2 * math.pi)
        bs = eigendecompose(build_bulk_hamiltonian(p, WaveVector(k, th)))
        w = bs.eigenvalues
        assert np.max(np.abs(np.sort(w) + np.sort(-w)[::-1])) < 1e-10 * max(1, w[-1])
        assert abs(bs.positive_eigenvalue(0)) < 1e-12 * max(1.0, w[-1])
        kop = np.array([k * math.cos(th), k * math.sin(th), p.k_z])
        khat = kop / np.linalg.norm(kop)
        psi0 = np.concatenate([0 * khat, 0 * khat, khat])
        v0 = bs.positive_band(0)
        # central eigenvector spans (0, 0, kop/|kop|) up to phase
        assert abs(abs(np.vdot(psi0, v0)) - 1.0) < 1e-9


def test_omega_zero_bias_spectrum():
    # Omega=0, omega_p=1, |kop|=1: positive bands (0, omega_p, lc, lc) with
    # lc = sqrt(omega_p^2 + |kop|^2), on top of the central zero mode
    bs = eigendecompose(H(0.0, 1.0, 0.6, k=0.8))
    got = bs.eigenvalues[4:]
    expect = np.array([0.0, 0.0, 1.0, math.sqrt(2), math.sqrt(2)])
    assert np.max(np.abs(got - expect)) < 1e-12


def test_k0_spectrum_matches_cubic_roots():
    p = PlasmaParams(1.0, 1.0, 1.0)
    roots = k0_eigenvalues(p)
    bs = eigendecompose(build_bulk_hamiltonian(p, WaveVector(0.0)))
    got = bs.eigenvalues[5:]
    assert np.max(np.abs(got - roots.sorted_positive())) < 1e-10


# --------------------------------------------------------------------------
# k=0 roots, transitions, phases
# --------------------------------------------------------------------------

def test_k0_residuals_and_ordering_chain():
    rng = np.random.default_rng(123)
    for _ in range(1000):
        p = PlasmaParams(rng.uniform(-3, 3), rng.uniform(0.02, 3),
                         rng.uniform(0.02, 3) * rng.choice([-1, 1]))
        if abs(p.omega_c) < 1e-3:
            continue
        r = k0_eigenvalues(p)
        om, wp, kz = abs(p.omega_c), p.omega_p, abs(p.k_z)
        scale = max(1.0, om, wp, kz) ** 2
        # defining equations hold at the roots
        assert abs(r.omega_R**2 - wp**2 * r.omega_R / (r.omega_R + om) - kz**2) \
            < 1e-10 * scale
        for w in (r.omega_Lm, r.omega_Lp):
            assert abs(w**2 - wp**2 * w / (w - om) - kz**2) < 1e-10 * scale
        # ordering chain
        assert 0 < r.omega_Lm < r.omega_R < r.omega_Lp
        assert r.omega_Lm**2 < min(om**2, kz**2)
        assert kz**2 < r.omega_R**2 < kz**2 + wp**2
        assert r.omega_Lp**2 > kz**2 + wp**2


def test_k0_eigenvalues_not_applicable():
    with pytest.raises(NotApplicable):
        k0_eigenvalues(PlasmaParams(0.0, 1.0, 1.0))
    with pytest.raises(NotApplicable):
        k0_eigenvalues(PlasmaParams(1.0, 1.0, 0.0))


def test_transition_frequencies_values():
    om_m, om_p = transition_frequencies(1.0, 2.0)
    assert abs(om_m - 0.8284271247461903) < 1e-12
    assert transition_frequencies(2.5, 0.0) == (0.0, 0.0)
    om_m, om_p = transition_frequencies(1.0, 1.0)
    assert abs(om_p - 0.5 * (math.sqrt(5) + 1)) < 1e-12
    with pytest.raises(NotApplicable):
        transition_frequencies(0.0, 1.0)


def test_transition_is_band_crossing():
    # at omega_p slightly below/above omega_-, the k=0 roots swap order with
    # omega_p; same for omega_+ against omega_R (independent crossing check)
    om_m, om_p = transition_frequencies(1.0, 2.0)
    lo = k0_eigenvalues(PlasmaParams(1.0, om_m * (1 - 1e-6), 2.0))
    hi = k0_eigenvalues(PlasmaParams(1.0, om_m * (1 + 1e-6), 2.0))
    assert (lo.omega_p - lo.omega_Lm) < 0 < (hi.omega_p - hi.omega_Lm)
    lo = k0_eigenvalues(PlasmaParams(1.0, om_p * (1 - 1e-6), 2.0))
    hi = k0_eigenvalues(PlasmaParams(1.0, om_p * (1 + 1e-6), 2.0))
    assert (lo.omega_p - lo.omega_R) < 0 < (hi.omega_p - hi.omega_R)


def test_classify_phase_examples():
    om_m, _ = transition_frequencies(1.0, 2.0)
    assert classify_phase(PlasmaParams(1.0, 0.5 * om_m, 2.0)) is Phase.I_PLUS
    assert classify_phase(PlasmaParams(1.0, 1.5 * om_m, 2.0)) is Phase.II_PLUS
    assert classify_phase(PlasmaParams(-1.0, 1.0, 0.0)) is Phase.IV_MINUS
    assert classify_phase(PlasmaParams(1.0, 1.0, 0.0)) is Phase.IV_PLUS
    assert classify_phase(PlasmaParams(0.0, 1.0, 2.0)) is Phase.BOUNDARY
    assert classify_phase(PlasmaParams(1.0, om_m, 2.0)) is Phase.BOUNDARY
    assert classify_phase(PlasmaParams(-2.0, 7.0, 1.0)) is Phase.III_MINUS


def test_classify_phase_consistent_with_k0_ordering():
    rng = np.random.default_rng(42)
    for _ in range(200):
        p = PlasmaParams(rng.uniform(-3, 3), rng.uniform(0.05, 4),
                         rng.uniform(0.1, 3))
        ph = classify_phase(p)
        if ph is Phase.BOUNDARY or abs(p.omega_c) < 1e-6:
            continue
        r = k0_eigenvalues(p)
        rank = int(np.searchsorted(np.sort([r.omega_Lm, r.omega_R, r.omega_Lp]),
                                   p.omega_p))
        assert ph.roman == {0: "I", 1: "II", 2: "III"}[rank]
        assert ph.sign == (1 if p.omega_c > 0 else -1)


# --------------------------------------------------------------------------
# TM / TE split
# --------------------------------------------------------------------------

def test_tm_te_permutation_equivalence():
    rng = np.random.default_rng(9)
    for _ in range(10):
        p = PlasmaParams(rng.uniform(-2, 2), rng.uniform(0.1, 2), 0.0)
        kv = WaveVector(k=rng.uniform(0, 3), theta=rng.uniform(0, 2 * math.pi))
        tm, te = build_tm_te(p, kv)
        w_split = np.sort(np.concatenate([np.linalg.eigvalsh(tm),
                                          np.linalg.eigvalsh(te)]))
        w_full = np.sort(np.linalg.eigvalsh(build_bulk_hamiltonian(p, kv)))
        assert np.max(np.abs(w_split - w_full)) < 1e-10


def test_te_eigenvalues_closed_form():
    p = PlasmaParams(1.0, 1.0, 0.0)
    _, te = build_tm_te(p, WaveVector(k=1.0))
    w = np.sort(np.linalg.eigvalsh(te))
    s2 = math.sqrt(2.0)
    assert np.max(np.abs(w - np.array([-s2, 0.0, 0.0, s2]))) < 1e-12


def test_tm_eigenvalues_at_k0():
    oc, wp = 1.3, 0.8
    tm, _ = build_tm_te(PlasmaParams(oc, wp, 0.0), WaveVector(k=0.0))
    w = np.sort(np.linalg.eigvalsh(tm))
    wh2 = 2 * wp**2 + oc**2
    t1 = math.sqrt(0.5 * (wh2 - math.sqrt(oc**4 + 4 * wp**2 * oc**2)))
    t2 = math.sqrt(0.5 * (wh2 + math.sqrt(oc**4 + 4 * wp**2 * oc**2)))
    assert np.max(np.abs(w - np.array([-t2, -t1, 0.0, t1, t2]))) < 1e-12


def test_tm_te_requires_kz_zero():
    with pytest.raises(NotApplicable):
        build_tm_te(PlasmaParams(1.0, 1.0, 0.5), WaveVector(k=1.0))


# --------------------------------------------------------------------------
# limiting eigenvectors
# --------------------------------------------------------------------------

def test_limiting_eigenvectors_orthonormal():
    for sigma_setup in [
        PlasmaParams(1.0, 1.0, 2.0),
        PlasmaParams(-2.0, 1.0, 2.0),
        PlasmaParams(1.0, 1.0, 2.0, reg=RegularizationScheme("omega-decay", 0.1)),
        PlasmaParams(1.0, 1.0, 2.0, reg=RegularizationScheme("plasma-decay", 0.1)),
    ]:
        for th in (0.0, 0.9, 4.0):
            V = np.array([limiting_eigenvectors(sigma_setup, th, b)
                          for b in (1, 2, 3, 4, -1, -2, -3, -4)])
            G = V.conj() @ V.T
            assert np.max(np.abs(G - np.eye(8))) < 1e-12


def test_limiting_eigenvector_branch3_form():
    p = PlasmaParams(1.0, 0.7, 2.0)
    th = 0.6
    khat = np.array([math.cos(th), math.sin(th), 0.0])
    u = np.array([math.sin(th), -math.cos(th), 0.0])
    want = np.concatenate([0 * u, np.array([0, 0, 1.0]), u]) / math.sqrt(2)
    got = limiting_eigenvectors(p, th, 3)
    assert abs(abs(np.vdot(want, got)) - 1.0) < 1e-12


def test_limiting_eigenvector_sigma0_branch2():
    p = PlasmaParams(1.0, 1.0, 2.0, reg=RegularizationScheme("omega-decay", 0.1))
    th = 1.2
    khat = np.array([math.cos(th), math.sin(th), 0.0])
    want = np.concatenate([-1j * khat, khat, 0 * khat]) / math.sqrt(2)
    got = limiting_eigenvectors(p, th, 2)
    assert abs(abs(np.vdot(want, got)) - 1.0) < 1e-12


def _proj(v):
    return np.outer(v, v.conj())


def test_limiting_projector_gluing_table():
    reg0 = RegularizationScheme("omega-decay", 0.1)
    p_pos = PlasmaParams(1.0, 1.0, 2.0, reg=reg0)
    p_neg = PlasmaParams(-1.0, 1.0, 2.0, reg=reg0)
    th = 0.77
    # sigma_bar = 0: band 1 of -Omega glues to band -1 of +Omega, bands 2..4 glue
    assert np.allclose(_proj(limiting_eigenvectors(p_neg, th, 1)),
                       _proj(limiting_eigenvectors(p_pos, th, -1)), atol=1e-12)
    for j in (2, 3, 4):
        assert np.allclose(_proj(limiting_eigenvectors(p_neg, th, j)),
                           _proj(limiting_eigenvectors(p_pos, th, j)), atol=1e-12)
    # sigma_bar = inf (plasma decay): band 2 of -Omega glues to band -2 instead
    regi = RegularizationScheme("plasma-decay", 0.1)
    q_pos = PlasmaParams(1.0, 1.0, 2.0, reg=regi)
    q_neg = PlasmaParams(-1.0, 1.0, 2.0, reg=regi)
    assert np.allclose(_proj(limiting_eigenvectors(q_neg, th, 2)),
                       _proj(limiting_eigenvectors(q_pos, th, -2)), atol=1e-12)
    d = _proj(limiting_eigenvectors(q_neg, th, 2)) - \
        _proj(limiting_eigenvectors(q_pos, th, 2))
    assert np.linalg.norm(d) > 1.0


def test_limiting_eigenvectors_match_diagonalization():
    # oracle: direct eigh of the 9x9 at large k, per Omega sign
    for oc in (1.0, -1.0):
        p = PlasmaParams(oc, 2.0, 2.0)
        th = 0.35
        k = 1e5
        kv = WaveVector(k=k, theta=th)
        M = build_bulk_hamiltonian(p, kv)
        w, V = np.linalg.eigh(M)
        # band 2 isolated at large k
        v2 = V[:, 6]
        lim2 = limiting_eigenvectors(p, th, 2)
        assert abs(abs(np.vdot(lim2, v2)) - 1.0) < 1e-4
        # bands 3, 4 compared as a rank-2 span (asymptotically degenerate)
        S = V[:, 7:9]
        P_num = S @ S.conj().T
        P_lim = (_proj(limiting_eigenvectors(p, th, 3))
                 + _proj(limiting_eigenvectors(p, th, 4)))
        assert np.linalg.norm(P_num - P_lim) < 1e-4
        # band 1: deflate the exact zero mode out of the near-null 2d space
        kop = kv.k3(p.k_z)
        khat = kop / np.linalg.norm(kop)
        psi0 = np.concatenate([0 * khat, 0 * khat, khat]).astype(complex)
        S01 = V[:, 4:6]
        c = S01.conj().T @ psi0
        v1 = S01 @ np.array([-np.conj(c[1]), np.conj(c[0])])
        v1 /= np.linalg.norm(v1)
        lim1 = limiting_eigenvectors(p, th, 1)
        assert abs(abs(np.vdot(lim1, v1)) - 1.0) < 1e-4


def test_limiting_eigenvectors_bad_branch():
    with pytest.raises(InvalidParameter):
        limiting_eigenvectors(PlasmaParams(1, 1, 1), 0.0, 5)


# --------------------------------------------------------------------------
# band extrema / gaps
# --------------------------------------------------------------------------

def test_band_extrema_phase_I_gap1_global():
    om_m, _ = transition_frequencies(1.0, 2.0)
    g = band_extrema(PlasmaParams(1.0, 0.5 * om_m, 2.0), 1)
    assert g.is_global and g.lo < g.hi


def test_band_extrema_gap2_II_vs_III_do_not_overlap():
    _, om_p = transition_frequencies(1.0, 1.0)
    g2_II = band_extrema(PlasmaParams(1.0, 0.5 * om_p, 1.0), 2)
    g2_III = band_extrema(PlasmaParams(1.0, 1.5 * om_p, 1.0), 2)
    assert not g2_II.intersect(g2_III).is_global


def test_band_extrema_closed_form_unbiased():
    # Omega = 0: positive bands are (0, omega_p, light cone x2); the
    # closed-form scan is the oracle for the gap interval
    p = PlasmaParams(0.0, 1.0, 1.0)
    kgrid = np.linspace(0.0, 60.0, 1500)
    g = band_extrema(p, 1, kgrid=kgrid)
    assert abs(g.lo - 0.0) < 1e-12
    assert abs(g.hi - 1.0) < 1e-12
    g2 = band_extrema(p, 2, kgrid=kgrid)
    # band 2 flat at omega_p, band 3 = sqrt(omega_p^2 + k^2 + kz^2) >= sqrt(2)
    assert abs(g2.lo - 1.0) < 1e-12
    assert abs(g2.hi - math.sqrt(2.0)) < 1e-9


def test_band_extrema_validation():
    with pytest.raises(InvalidParameter):
        band_extrema(PlasmaParams(1, 1, 1), 1, kgrid=[])
    with pytest.raises(InvalidParameter):
        band_extrema(PlasmaParams(1, 1, 1), 3)
