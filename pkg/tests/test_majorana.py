import numpy as np
import pytest

from oll.liouville import dark_state_check
from oll.majorana import (
    bloch_field,
    braiding_unitary,
    covariance_from_state,
    damping_spectrum,
    evolve_covariance,
    fixed_phase_jump,
    kitaev_wire_hamiltonian,
    majorana_matrices,
    number_conserving_jumps,
    steady_covariance,
    steady_residual,
    theta_scan,
    winding_number,
    wire_jumps,
)


def test_system_matrix_structure():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = 5
        vecs = [rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
                for _ in range(rng.integers(1, 6))]
        sys = wire_jumps(4, 0.3)
        sys.lindblad_vectors = [np.pad(v, (0, 0)) for v in
                                [np.resize(v, 8) for v in vecs[:1]]]
        x = sys.damping_matrix
        y = sys.fluctuation_matrix
        assert np.abs(x - x.T).max() < 1e-12
        assert np.abs(y + y.T).max() < 1e-12
        assert np.linalg.eigvalsh(x).min() > -1e-12


def test_flat_spectrum_periodic_quarter_pi():
    sys = wire_jumps(10, np.pi / 4, "periodic")
    x = sys.damping_matrix
    assert np.abs(x - 0.5 * np.eye(20)).max() < 1e-12
    evals = damping_spectrum(sys)
    assert np.ptp(evals) < 1e-10


def test_open_wire_edge_zero_modes():
    n = 10
    sys = wire_jumps(n, np.pi / 4, "open")
    x = sys.damping_matrix
    evals, evecs = np.linalg.eigh(x)
    assert (np.abs(evals) < 1e-12).sum() == 2
    kernel = evecs[:, np.abs(evals) < 1e-12]
    proj = kernel @ kernel.conj().T
    target = np.zeros((2 * n, 2 * n))
    target[0, 0] = 1.0
    target[2 * n - 1, 2 * n - 1] = 1.0
    assert np.abs(proj - target).max() < 1e-10
    for j in range(kernel.shape[1]):
        weight = kernel[0, j] ** 2 + kernel[2 * n - 1, j] ** 2
        assert weight > 1 - 1e-10


def test_steady_covariance_solves_lyapunov():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = 8
        vecs = [rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n)
                for _ in range(n)]
        from oll.majorana import MajoranaSystem
        sys = MajoranaSystem(n, vecs)
        gbar = steady_covariance(sys)
        assert steady_residual(sys, gbar) < 1e-9
        evolved = evolve_covariance(sys, gbar, 2.0, 0.01)
        assert np.abs(evolved - gbar).max() < 1e-9


def test_periodic_steady_state_matches_kitaev_ground_covariance():
    n = 6
    sys = wire_jumps(n, np.pi / 4, "periodic")
    gbar = steady_covariance(sys)
    h = kitaev_wire_hamiltonian(n, boundary="periodic")
    evals, evecs = np.linalg.eigh(h)
    ground = evecs[:, 0]
    _, gammas = majorana_matrices(n)
    g_exact = covariance_from_state(ground, gammas)
    assert np.abs(gbar - g_exact).max() < 1e-8
    # purity: all i*Gamma eigenvalues on the unit circle
    assert np.abs(np.abs(np.linalg.eigvalsh(1j * gbar)) - 1).max() < 1e-10


def test_deformed_wire_not_pure():
    sys = wire_jumps(10, 1.9 * np.pi / 4, "periodic")
    gbar = steady_covariance(sys)
    mags = np.abs(np.linalg.eigvalsh(1j * gbar))
    assert mags.min() < 0.99


def test_mixed_sector_decay_and_edge_memory():
    n = 8
    sys = wire_jumps(n, np.pi / 4, "open")
    x = sys.damping_matrix
    evals, evecs = np.linalg.eigh(x)
    rng = np.random.default_rng(11)
    a = rng.normal(size=(2 * n, 2 * n))
    g0 = (a - a.T) / 4
    g0 = g0 / max(np.abs(np.linalg.eigvalsh(1j * g0)).max(), 1.0)
    t = 1.7
    gt = evolve_covariance(sys, g0, t, 0.002)
    # in the eigenbasis of X: kernel-row entries decay like exp(-lambda t)
    g0e = evecs.T @ g0 @ evecs
    gte = evecs.T @ gt @ evecs
    kernel = np.abs(evals) < 1e-12
    bulk = ~kernel
    lam = evals[bulk]
    expected = np.exp(-lam * t) * g0e[np.ix_(kernel, bulk)]
    assert np.abs(gte[np.ix_(kernel, bulk)] - expected).max() < 1e-6
    # edge-edge block does not move at all
    assert np.abs(gte[np.ix_(kernel, kernel)]
                  - g0e[np.ix_(kernel, kernel)]).max() < 1e-10


def test_edge_block_constant_over_long_time():
    n = 6
    sys = wire_jumps(n, np.pi / 4, "open")
    rng = np.random.default_rng(5)
    a = rng.normal(size=(2 * n, 2 * n))
    g0 = (a - a.T) / 6
    g0 /= max(np.abs(np.linalg.eigvalsh(1j * g0)).max(), 1.0)
    gt = evolve_covariance(sys, g0, 20.0, 0.01)
    assert abs(gt[0, 2 * n - 1] - g0[0, 2 * n - 1]) < 1e-10


def test_bloch_field_pure_circle_at_quarter_pi():
    fld = bloch_field(np.pi / 4, n_sites=32)
    mags = np.linalg.norm(fld.n_vectors, axis=1)
    assert np.abs(mags - 1).max() < 1e-10
    assert fld.chiral_axis is not None
    assert fld.chiral_residual < 1e-10


def test_bloch_field_gap_closes_at_half_pi():
    fld = bloch_field(np.pi / 2, n_sites=32)
    k0 = np.argmin(np.abs(fld.k_grid))
    kpi = np.argmin(np.abs(fld.k_grid + np.pi))
    assert np.linalg.norm(fld.n_vectors[k0]) < 1e-10
    assert np.linalg.norm(fld.n_vectors[kpi]) < 1e-10
    res = winding_number(fld)
    assert res.nu is None
    assert res.purity_gap < 1e-8


def test_chiral_axis_exists_for_generic_theta():
    for th in (0.3, 0.9, 1.3, 2.0, 2.8):
        fld = bloch_field(th, n_sites=32)
        assert fld.chiral_axis is not None
        assert fld.chiral_residual < 1e-8


def test_winding_values_and_jump_location():
    assert winding_number(bloch_field(np.pi / 4, n_sites=64)).nu == -1
    assert winding_number(bloch_field(3 * np.pi / 4, n_sites=64)).nu == 1
    thetas = np.linspace(0.2, np.pi - 0.2, 24)   # grid avoids pi/2 itself
    rows = theta_scan(thetas, n_sites=32)
    nus = np.array([r[1] for r in rows])
    assert not np.isnan(nus).any()
    jumps = np.flatnonzero(np.diff(nus) != 0)
    assert len(jumps) == 1
    lo, hi = thetas[jumps[0]], thetas[jumps[0] + 1]
    assert lo <= np.pi / 2 <= hi


def test_winding_grid_refinement_invariance():
    nu64 = winding_number(bloch_field(1.1, n_sites=64)).nu
    nu256 = winding_number(bloch_field(1.1, n_sites=256)).nu
    assert nu64 == nu256


def test_winding_robust_to_small_chiral_perturbation():
    # perturb the lindblad vectors within the chiral class
    n = 32
    rng = np.random.default_rng(7)
    base = bloch_field(1.0, n_sites=n)
    nu0 = winding_number(base).nu
    for _ in range(3):
        th = 1.0 + rng.normal() * 1e-3
        assert winding_number(bloch_field(th, n_sites=n)).nu == nu0


def test_theta_zero_is_a_transition_point():
    fld = bloch_field(0.0, n_sites=32)
    res = winding_number(fld)
    assert res.nu is None and res.purity_gap < 1e-8


# ------------------------------------------------------------- braiding


def test_braiding_noncommutativity():
    b12 = braiding_unitary(0, 1, 4).dense()
    b23 = braiding_unitary(1, 2, 4).dense()
    b34 = braiding_unitary(2, 3, 4).dense()
    comm = b12 @ b23 - b23 @ b12
    assert np.linalg.norm(comm, 2) > 0.5
    comm_far = b12 @ b34 - b34 @ b12
    assert np.abs(comm_far).max() < 1e-12


def test_braiding_eighth_power_is_identity():
    b = braiding_unitary(0, 2, 3).dense()
    p = np.linalg.matrix_power(b, 8)
    phase = p[0, 0]
    assert abs(abs(phase) - 1) < 1e-12
    assert np.abs(p - phase * np.eye(8)).max() < 1e-12


# ----------------------------------------------- number conservation


def test_number_conserving_channels_commute_with_total_number():
    from oll.hilbert import number_operator
    model = number_conserving_jumps(5)
    n_tot = number_operator(model.space).dense()
    for rate, op in model.channels:
        comm = op.dense() @ n_tot - n_tot @ op.dense()
        assert np.abs(comm).max() < 1e-12


def test_kitaev_ground_state_sectors_are_dark():
    n = 6
    model = number_conserving_jumps(n)
    h = kitaev_wire_hamiltonian(n, boundary="open")
    evals, evecs = np.linalg.eigh(h)
    # twofold-degenerate ground space on the open chain
    assert abs(evals[0] - evals[1]) < 1e-10
    assert evals[2] - evals[0] > 0.5
    occ = np.array(model.space.occupations).sum(axis=1)
    for g in (evecs[:, 0], evecs[:, 1]):
        for n_part in range(n + 1):
            proj = g * (occ == n_part)
            nrm = np.linalg.norm(proj)
            if nrm < 1e-12:
                continue
            out = dark_state_check(model, proj / nrm)
            assert out["channel_residuals"].max() < 1e-10


def test_fixed_phase_operator_identity():
    # C+ + A equals the theta = pi/4 wire jump lifted to the Fock space
    n = 4
    _, gammas = majorana_matrices(n)
    for i in range(n - 1):
        j_mat = fixed_phase_jump(n, i)
        # 1/2 (x_i + i y_{i+1})
        expected = 0.5 * (gammas[2 * i + 1] + 1j * gammas[2 * (i + 1)])
        assert np.abs(j_mat - expected).max() < 1e-12
