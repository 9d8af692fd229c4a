import numpy as np
import pytest

from oll.fermisea import (
    RUNG_ADAPTED_SIGNS,
    FermiLattice,
    PairFunction,
    adiabatic_passage,
    dwave_jump_ops,
    dwave_state,
    fermion_space,
    fhm_hamiltonian,
    ground_state,
    hopping_matrix,
    mode,
    mode_permutation_operator,
    neel_jump_ops,
    neel_state,
    pair_creator,
    parent_hamiltonian,
    quasiparticle_rates,
    von_neumann_entropy,
)
from oll.hilbert import number_operator
from oll.liouville import dark_state_check, dark_subspace, steady_states
from oll.trajectory import TrajectoryConfig, ensemble_average


@pytest.fixture(scope="module")
def lat22():
    return FermiLattice(2, 2)


def test_lattice_bipartite_consistency():
    lat = FermiLattice(4, 4)
    for site in range(lat.n_sites):
        for d in lat.directions():
            nb = lat.neighbor(site, d)
            assert lat.sublattice(nb) != lat.sublattice(site)


def test_pair_function_dwave_law():
    qs = np.linspace(-np.pi, np.pi, 17)
    for qx in qs:
        for qy in qs:
            v = PairFunction.momentum(qx, qy)
            assert abs(v + PairFunction.momentum(-qy, qx)) < 1e-12
            assert abs(v - PairFunction.momentum(-qx, -qy)) < 1e-12


def test_dwave_state_forms_agree(lat22):
    base = dwave_state(lat22, 1, form="y")
    for form in ("+", "-"):
        other = dwave_state(lat22, 1, form=form)
        assert abs(abs(np.vdot(base, other)) - 1) < 1e-12


def test_dwave_state_structure_2x2(lat22):
    # two fermions: nearest-neighbor singlets with the d-wave sign pattern
    space = fermion_space(8, 2)
    psi = dwave_state(lat22, 1)
    site = lat22.site

    def amp(m1, m2):
        occ = [0] * 8
        occ[m1] = occ[m2] = 1
        return psi[space.index_of(tuple(occ))]

    # no diagonal pairs
    diag = amp(mode(site(0, 0), 0), mode(site(1, 1), 1))
    assert abs(diag) < 1e-12
    # singlet: opposite sign under spin exchange on an x bond
    a_du = amp(mode(site(0, 0), 0), mode(site(1, 0), 1))
    a_ud = amp(mode(site(0, 0), 1), mode(site(1, 0), 0))
    assert abs(a_du + a_ud) < 1e-12
    assert abs(a_du) > 1e-3
    # d-wave: x and y bonds carry opposite signs (same spin arrangement)
    b_du = amp(mode(site(0, 0), 0), mode(site(0, 1), 1))
    assert abs(a_du + b_du) < 1e-12


def test_dwave_state_total_sz_zero(lat22):
    psi = dwave_state(lat22, 1)
    space = fermion_space(8, 2)
    n_up = sum(number_operator(space, mode(s, 1)).dense()
               for s in range(4))
    n_dn = sum(number_operator(space, mode(s, 0)).dense()
               for s in range(4))
    sz = np.vdot(psi, (n_up - n_dn) @ psi).real / 2
    assert abs(sz) < 1e-12


def test_dwave_rotation_antisymmetry():
    # 90-degree lattice rotation flips the sign of the one-pair state
    lat = FermiLattice(4, 4)
    space = fermion_space(lat.n_modes, 2)
    psi = dwave_state(lat, 1)
    perm = {}
    for s in range(lat.n_sites):
        x, y = lat.coords(s)
        s2 = lat.site(y, (-x) % 4)
        for spin in range(2):
            perm[mode(s, spin)] = mode(s2, spin)
    rot = mode_permutation_operator(space, perm)
    rotated = rot.mat @ psi
    assert np.abs(rotated + psi).max() < 1e-12


def test_neel_states_dark(lat22):
    model = neel_jump_ops(lat22)
    for which in (1, -1):
        st = neel_state(lat22, which)
        assert dark_state_check(model, st)["channel_residuals"].max() < 1e-12


def test_polarized_state_not_stationary(lat22):
    model = neel_jump_ops(lat22)
    occ = [0] * 8
    for s in range(4):
        occ[mode(s, 1)] = 1
    psi = model.space.basis_state(tuple(occ))
    assert dark_state_check(model, psi)["channel_residuals"].max() > 0.1


def test_neel_steady_dimensions(lat22):
    res = steady_states(neel_jump_ops(lat22))
    assert res.dimension == 2
    res_b = steady_states(neel_jump_ops(lat22, breaker_site=0))
    assert res_b.dimension == 1
    assert res_b.raw_null_dimension == 1


def test_breaker_selects_neel_plus(lat22):
    model = neel_jump_ops(lat22, breaker_site=0)   # site 0 is on sublattice A
    plus = neel_state(lat22, +1)
    minus = neel_state(lat22, -1)
    out = dark_state_check(model, plus)
    assert out["channel_residuals"].max() < 1e-12
    out_m = dark_state_check(model, minus)
    assert out_m["channel_residuals"].max() > 0.1


def test_dwave_channels_commute_with_generator(lat22):
    dc = pair_creator(lat22, 0)
    j2 = dwave_jump_ops(lat22, 2)
    j0 = dwave_jump_ops(lat22, 0)
    for (_, op2), (_, op0) in zip(j2.channels, j0.channels):
        comm = op2.mat @ dc.mat - dc.mat @ op0.mat
        worst = abs(comm.tocoo().data).max() if comm.nnz else 0.0
        assert worst < 1e-12


def test_dwave_channels_conserve_number(lat22):
    model = dwave_jump_ops(lat22, 2)
    n_tot = number_operator(model.space).dense()
    for _, op in model.channels:
        comm = op.dense() @ n_tot - n_tot @ op.dense()
        assert np.abs(comm).max() < 1e-12


def test_dwave_dark_4x4_one_pair():
    lat = FermiLattice(4, 4)
    psi = dwave_state(lat, 1)
    model = dwave_jump_ops(lat, 2)
    assert dark_state_check(model, psi)["channel_residuals"].max() < 1e-10


def test_dropping_z_channel_doubles_dark_space(lat22):
    full = dark_subspace(dwave_jump_ops(lat22, 2))
    no_z = dark_subspace(dwave_jump_ops(lat22, 2, alphas=("+", "-")))
    assert full.shape[1] == 1
    assert no_z.shape[1] == 2


def test_quasiparticle_rates():
    kappa_q, n_tilde = quasiparticle_rates(400)
    # frozen from the converged quadrature of the momentum integral
    assert abs(n_tilde - 0.714725) < 1e-4
    _, n_tilde2 = quasiparticle_rates(800)
    assert abs(n_tilde - n_tilde2) < 1e-4
    qs = np.linspace(-np.pi, np.pi, 41)
    for qx in qs:
        for qy in qs:
            assert kappa_q(qx, qy) >= n_tilde - 1e-12
    # nodal momenta damp at exactly the gap value
    assert abs(kappa_q(0.7, 0.7) - n_tilde) < 1e-12
    assert abs(kappa_q(-1.1, 1.1) - n_tilde) < 1e-12


def test_parent_hamiltonian_zero_mode_and_gap():
    lat = FermiLattice(4, 1)
    psi = dwave_state(lat, 1)
    hp = parent_hamiltonian(lat, 1.0, 2)
    assert abs(np.vdot(psi, hp.mat @ psi).real) < 1e-12
    evals, evecs = ground_state(hp, k=3)
    assert abs(evals[0]) < 1e-10
    gap = evals[1] - evals[0]
    assert 0.072 < gap < 7.2     # order of magnitude of 0.72 V (small lattice)
    # unique fixed-number ground state on this fixture
    assert evals[1] > 1e-6


def test_fhm_free_limit_matches_band_sum():
    lat = FermiLattice(3, 2)
    n_particles = 3
    h = fhm_hamiltonian(lat, 1.0, 0.0, n_particles)
    evals, _ = ground_state(h)
    band = np.linalg.eigvalsh(hopping_matrix(lat, 1.0))
    doubled = np.sort(np.concatenate([band, band]))
    assert abs(evals[0] - doubled[:n_particles].sum()) < 1e-10


def test_fhm_hermitian_and_atomic_limit():
    lat = FermiLattice(2, 2)
    h = fhm_hamiltonian(lat, 0.0, 3.0, 4)
    d = h.dense()
    assert np.abs(d - d.conj().T).max() < 1e-12
    evals = np.linalg.eigvalsh(d)
    # J=0 ground energy: no double occupancy
    assert abs(evals[0]) < 1e-12


def test_trajectory_entropy_decreases_4x1():
    # open chain: unique dark state, Liouvillian gap ~ 0.1, so the
    # ensemble entropy rises from the pure start and then drains slowly
    lat = FermiLattice(4, 1, boundary="open")
    model = dwave_jump_ops(lat, 2)
    space = model.space
    occ = [0] * 8
    occ[mode(0, 0)] = occ[mode(1, 1)] = 1
    psi0 = space.basis_state(tuple(occ))
    cfg = TrajectoryConfig(dt=0.02, t_final=70.0, n_trajectories=48,
                           master_seed=12, n_samples=15, store_states=True,
                           fidelity_target=dwave_state(lat, 1))
    res = ensemble_average(model, psi0, cfg, keep_records=True, threads=2)
    entropies = []
    for k in range(15):
        rho = np.zeros((space.dim, space.dim), dtype=complex)
        for rec in res.records:
            v = rec.states[k]
            rho += np.outer(v, v.conj())
        entropies.append(von_neumann_entropy(rho / len(res.records)))
    peak = int(np.argmax(entropies))
    tail = entropies[peak:]
    assert peak < 5
    assert all(b <= a + 0.02 for a, b in zip(tail, tail[1:]))
    assert entropies[-1] < 0.4 * max(entropies)
    assert res.final_fidelities.mean() > 0.8


def test_adiabatic_passage_master_matches_trajectory_4x1():
    lat = FermiLattice(4, 1)
    kwargs = dict(n_pairs=1, t_total=6.0, j_final=1.0, u_final=2.0,
                  kappa=0.3, dt=0.01, n_samples=9, seed=5)
    res_m = adiabatic_passage(lat, method="master", **kwargs)
    res_t = adiabatic_passage(lat, method="trajectory",
                              n_trajectories=300, threads=2, **kwargs)
    err = np.abs(res_m.fidelity - res_t.fidelity)
    assert err.max() < 0.05     # statistical agreement of the two routes


def test_adiabatic_passage_beats_quench_small():
    lat = FermiLattice(2, 4, boundary="open")
    res = adiabatic_passage(lat, 1, t_total=20.0, j_final=1.0, u_final=4.0,
                            n_trajectories=4, dt=0.02, n_samples=11, seed=2,
                            signs=RUNG_ADAPTED_SIGNS)
    assert res.final_fidelity > res.initial_overlap
    assert res.final_fidelity > res.quench_fidelity
