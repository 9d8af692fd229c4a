import numpy as np
import pytest
import scipy.linalg

from oll.digital import (
    Circuit,
    GateSpec,
    KrausMap,
    NoiseSpec,
    ancilla_dissipative_map,
    bell_pump_map,
    certification_error,
    compile_nbody_phase,
    depolarize,
    gate_unitary,
    noisy_apply,
    partial_trace,
    stabilizer_pump_map,
    trotter_evolve,
)
from oll.hilbert import build_space, pauli_string
from oll.liouville import LindbladModel, lindblad_rhs
from oll.hilbert import Operator


def bell_states():
    s2 = 1 / np.sqrt(2)
    phi_p = s2 * np.array([1, 0, 0, 1], dtype=complex)
    phi_m = s2 * np.array([1, 0, 0, -1], dtype=complex)
    psi_p = s2 * np.array([0, 1, 1, 0], dtype=complex)
    psi_m = s2 * np.array([0, 1, -1, 0], dtype=complex)
    return phi_p, phi_m, psi_p, psi_m


def random_density_matrix(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# ---------------------------------------------------------------- gates


def test_z_rotation_full_turn_is_identity_up_to_phase():
    space = build_space("spin", 1)
    u = gate_unitary(space, GateSpec("rot1", (0,), "z", np.pi)).dense()
    phase = u[0, 0]
    assert abs(abs(phase) - 1) < 1e-12
    assert np.abs(u - phase * np.eye(2)).max() < 1e-12


def test_cnotn_flips_all_targets():
    space = build_space("spin", 4)
    u = gate_unitary(space, GateSpec("cnotn", (0, 1, 2, 3))).dense()
    src = space.basis_state((1, 0, 0, 0))
    dst = space.basis_state((1, 1, 1, 1))
    assert abs(np.vdot(dst, u @ src) - 1) < 1e-12
    # control in |0>: nothing happens
    src0 = space.basis_state((0, 1, 0, 1))
    assert abs(np.vdot(src0, u @ src0) - 1) < 1e-12


def test_ms_gate_commutes_with_global_flip():
    space = build_space("spin", 3)
    u = gate_unitary(space, GateSpec("ms", (0, 1, 2), "x", 0.37)).dense()
    flip = pauli_string(space, [(q, "x") for q in range(3)]).dense()
    assert np.abs(u @ flip - flip @ u).max() < 1e-12


def test_circuit_serialization_roundtrip():
    circ = Circuit(3)
    circ.append(GateSpec("rot1", (0,), "z", 0.25))
    circ.append(GateSpec("ms", (0, 1, 2), "x", np.pi / 4))
    circ.append(GateSpec("crot", (0, 1), "y", -0.5))
    circ.append(GateSpec("cnotn", (2, 0, 1)))
    text = circ.serialize()
    back = Circuit.deserialize(text, 3)
    assert np.abs(circ.unitary() - back.unitary()).max() < 1e-12


# ------------------------------------------------------------- compiler


def test_compile_identity_at_zero_phase():
    circ = compile_nbody_phase([0, 1, 2], 0.0, "x", ancilla=3)
    space = build_space("spin", 4)
    u = circ.unitary(space)
    phase = u[0, 0]
    assert np.abs(u - phase * np.eye(16)).max() < 1e-9


@pytest.mark.parametrize("phi", [0.1, 0.25 * np.pi, 0.5 * np.pi])
def test_compile_six_body_certified(phi):
    targets = list(range(6))
    circ = compile_nbody_phase(targets, phi, "x", ancilla=6)
    assert circ.native
    assert circ.entangling_count == 2
    assert certification_error(circ, targets, "x", phi, 6) < 1e-9


def test_compile_six_body_ghz_flip():
    # at phi = pi/2 the propagator maps all-up to all-down (up to phase)
    circ = compile_nbody_phase(list(range(6)), np.pi / 2, "x", ancilla=6)
    space = build_space("spin", 7)
    u = circ.unitary(space)
    src = space.basis_state((0,) * 7)
    dst = space.basis_state((1,) * 6 + (0,))
    amp = np.vdot(dst, u @ src)
    assert abs(abs(amp) - 1) < 1e-9


def test_compile_four_body_ancilla_returns():
    circ = compile_nbody_phase([0, 1, 2, 3], 0.7, "x", ancilla=4)
    space = build_space("spin", 5)
    u = circ.unitary(space)
    for k in range(16):
        occ = [int(b) for b in format(k, "04b")] + [0]
        src = space.basis_state(tuple(occ))
        out = u @ src
        # weight outside the ancilla-|0> block
        t = out.reshape(16, 2)
        assert np.abs(t[:, 1]).max() < 1e-9


def test_compile_mixed_axes():
    targets = [0, 1, 2, 3]
    axes = ["z", "z", "x", "y"]
    circ = compile_nbody_phase(targets, 0.4, axes, ancilla=4)
    assert certification_error(circ, targets, axes, 0.4, 4) < 1e-9


# ------------------------------------------------------------- trotter


def test_trotter_exact_for_commuting_terms():
    space = build_space("spin", 2)
    z0 = pauli_string(space, [(0, "z")]).dense()
    z1 = pauli_string(space, [(1, "z")]).dense()
    psi0 = np.ones(4, dtype=complex) / 2
    _, states, _ = trotter_evolve(
        [("a", 0.8 * z0, None), ("b", 1.3 * z1, None)], 2.0, 3, psi0)
    exact = scipy.linalg.expm(-1j * 2.0 * (0.8 * z0 + 1.3 * z1)) @ psi0
    assert np.abs(states[-1] - exact).max() < 1e-10


def ising_terms(j, b):
    space = build_space("spin", 2)
    h_int = j * pauli_string(space, [(0, "x"), (1, "x")]).dense()
    h_mag = b * (pauli_string(space, [(0, "z")]).dense()
                 + pauli_string(space, [(1, "z")]).dense())
    return space, h_int, h_mag


def test_trotter_refinement_improves_two_spin_ising():
    space, h_int, h_mag = ising_terms(j=2.0, b=1.0)
    psi0 = space.basis_state((0, 0))
    t = 0.8
    exact = scipy.linalg.expm(-1j * t * (h_int + h_mag)) @ psi0
    errs = []
    for n in (1, 4):
        _, states, _ = trotter_evolve(
            [("int", h_int, None), ("mag", h_mag, None)], t, n, psi0)
        errs.append(np.abs(states[-1] - exact).max())
    assert errs[1] < errs[0]


def test_trotter_first_order_error_slope():
    space, h_int, h_mag = ising_terms(j=2.0, b=1.0)
    psi0 = space.basis_state((0, 0))
    t = 0.5
    exact = scipy.linalg.expm(-1j * t * (h_int + h_mag)) @ psi0
    ns = np.array([1, 2, 4, 8, 16])
    errs = []
    for n in ns:
        _, states, _ = trotter_evolve(
            [("int", h_int, None), ("mag", h_mag, None)], t, int(n), psi0)
        errs.append(np.abs(states[-1] - exact).max())
    slope = np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert abs(slope + 1) < 0.1


def test_trotter_ramped_ising_oscillates():
    # interaction ramped 0 -> 4B produces diabatic population oscillation
    space, h_int, h_mag = ising_terms(j=4.0, b=1.0)
    plus = np.ones(2, dtype=complex) / np.sqrt(2)
    psi0 = np.kron(plus, plus)
    xx_proj = np.outer(psi0, psi0.conj())
    t_total = np.pi / 2
    times, _, obs = trotter_evolve(
        [("int", h_int, lambda t: t / t_total), ("mag", h_mag, None)],
        t_total, 24, psi0, observables=[Operator(
            xx_proj, space, space)])
    vals = obs[:, 0].real
    diffs = np.diff(vals)
    assert (diffs > 1e-4).any() and (diffs < -1e-4).any()


# ---------------------------------------------------------- Kraus maps


def test_bell_pump_deterministic_single_cycle():
    rng = np.random.default_rng(0)
    zz = bell_pump_map("ZZ", 1.0)
    xx = bell_pump_map("XX", 1.0)
    _, _, _, psi_m = bell_states()
    for _ in range(10):
        rho = random_density_matrix(4, rng)
        out = xx.apply(zz.apply(rho))
        fid = np.vdot(psi_m, out @ psi_m).real
        assert abs(fid - 1) < 1e-10


def test_bell_pump_identity_at_zero():
    rng = np.random.default_rng(1)
    zz = bell_pump_map("ZZ", 0.0)
    rho = random_density_matrix(4, rng)
    assert np.abs(zz.apply(rho) - rho).max() < 1e-12


def markov_bell_populations(p, cycles):
    # independent oracle: populations in the Bell basis form a Markov chain
    v = np.array([0.25, 0.25, 0.25, 0.25])   # (phi+, phi-, psi+, psi-)
    for _ in range(cycles):
        phi_p, phi_m, psi_p, psi_m = v
        v = np.array([phi_p * (1 - p), phi_m * (1 - p),
                      psi_p + p * phi_p, psi_m + p * phi_m])
        phi_p, phi_m, psi_p, psi_m = v
        v = np.array([phi_p * (1 - p), phi_m + p * phi_p,
                      psi_p * (1 - p), psi_m + p * psi_p])
    return v


def test_bell_pump_three_probabilistic_cycles():
    expected = markov_bell_populations(0.5, 3)[3]
    assert abs(expected - 225 / 256) < 1e-15
    zz = bell_pump_map("ZZ", 0.5)
    xx = bell_pump_map("XX", 0.5)
    rho = np.eye(4, dtype=complex) / 4
    for _ in range(3):
        rho = xx.apply(zz.apply(rho))
    _, _, _, psi_m = bell_states()
    assert abs(np.vdot(psi_m, rho @ psi_m).real - 225 / 256) < 1e-10


def test_kraus_maps_trace_preserving_on_random_states():
    rng = np.random.default_rng(5)
    space = build_space("spin", 2)
    zz = pauli_string(space, [(0, "z"), (1, "z")])
    x1 = pauli_string(space, [(0, "x")])
    maps = [bell_pump_map("ZZ", 0.3), bell_pump_map("XX", 0.9),
            stabilizer_pump_map(zz, -1, 0.4, x1)]
    for m in maps:
        for _ in range(30):
            rho = random_density_matrix(4, rng)
            out = m.apply(rho)
            assert abs(np.trace(out) - 1) < 1e-10


def test_stabilizer_pump_ghz_from_mixed():
    space = build_space("spin", 4)
    rho = np.eye(16, dtype=complex) / 16
    seq = [([(0, "z"), (1, "z")], [(1, "x")]),
           ([(1, "z"), (2, "z")], [(2, "x")]),
           ([(2, "z"), (3, "z")], [(3, "x")]),
           ([(q, "x") for q in range(4)], [(0, "z")])]
    for stab_spec, flip_spec in seq:
        stab = pauli_string(space, stab_spec)
        flip = pauli_string(space, flip_spec)
        rho = stabilizer_pump_map(stab, 1, 1.0, flip).apply(rho)
    ghz = (space.basis_state((0,) * 4) + space.basis_state((1,) * 4)) \
        / np.sqrt(2)
    assert abs(np.vdot(ghz, rho @ ghz).real - 1) < 1e-10


def test_stabilizer_pump_rejects_commuting_flip():
    space = build_space("spin", 2)
    zz = pauli_string(space, [(0, "z"), (1, "z")])
    z1 = pauli_string(space, [(0, "z")])
    with pytest.raises(ValueError):
        stabilizer_pump_map(zz, 1, 0.5, z1)


def test_stabilizer_pump_small_p_matches_lindblad_generator():
    space = build_space("spin", 2)
    zz = pauli_string(space, [(0, "z"), (1, "z")])
    x2 = pauli_string(space, [(1, "x")])
    c = x2.dense() @ (np.eye(4) - zz.dense()) / 2
    model = LindbladModel(space, None, [(1.0, Operator(c, space, space))])
    rng = np.random.default_rng(8)
    rho = random_density_matrix(4, rng)
    gen = lindblad_rhs(model, rho)   # rate 1 gives exactly D[c]rho
    errs = []
    for p in (1e-3, 1e-4):
        m = stabilizer_pump_map(zz, 1, p, x2)
        errs.append(np.abs((m.apply(rho) - rho) / p - gen).max())
    assert errs[0] < 0.01
    assert errs[1] < errs[0] * 0.2         # first order in p


def test_stabilizer_pump_fixed_point():
    space = build_space("spin", 2)
    zz = pauli_string(space, [(0, "z"), (1, "z")])
    x2 = pauli_string(space, [(1, "x")])
    m = stabilizer_pump_map(zz, 1, 0.7, x2)
    rho = np.diag([0.5, 0, 0, 0.5]).astype(complex)   # already ZZ=+1
    assert np.abs(m.apply(rho) - rho).max() < 1e-12


# --------------------------------------------- ancilla-mediated channels


def test_identity_circuit_gives_identity_channel():
    circ = Circuit(3)
    m = ancilla_dissipative_map(circ, ancilla=2, ancilla_in=0)
    assert len(m.elements) == 2
    assert np.abs(m.elements[0] - np.eye(4)).max() < 1e-12
    assert np.abs(m.elements[1]).max() < 1e-12


def _controlled(space, ancilla_spec, op_if_0, op_if_1):
    p0, p1 = ancilla_spec
    return p0 @ op_if_0 + p1 @ op_if_1


def bell_pump_circuit(p):
    """M, C(p), M^-1 on two system qubits + ancilla (index 2)."""
    space = build_space("spin", 3)
    eye = np.eye(8)
    zz = pauli_string(space, [(0, "z"), (1, "z")]).dense()
    za = pauli_string(space, [(2, "z")]).dense()
    xa = pauli_string(space, [(2, "x")]).dense()
    x2 = pauli_string(space, [(1, "x")]).dense()
    # M: flip the ancilla iff ZZ = -1 (parity map)
    m = (eye + zz) / 2 + (eye - zz) / 2 @ xa
    alpha = np.arcsin(np.sqrt(p))
    u_x2 = scipy.linalg.expm(1j * alpha * x2)
    c = (eye + za) / 2 @ u_x2 + (eye - za) / 2
    circ = Circuit(3)
    circ.append(GateSpec("raw", (0, 1, 2), matrix=m))
    circ.append(GateSpec("raw", (1, 2), matrix=c))
    circ.append(GateSpec("raw", (0, 1, 2), matrix=m))
    return circ


def test_bell_circuit_reproduces_bell_pump_choi():
    p = 0.37
    circ = bell_pump_circuit(p)
    chan = ancilla_dissipative_map(circ, ancilla=2, ancilla_in=0)
    direct = bell_pump_map("ZZ", p)
    assert np.abs(chan.choi() - direct.choi()).max() < 1e-9


def test_plaquette_circuit_reproduces_stabilizer_pump_choi():
    space = build_space("spin", 5)
    eye = np.eye(32)
    ap = pauli_string(space, [(q, "x") for q in range(4)]).dense()
    xa = pauli_string(space, [(4, "x")]).dense()
    za = pauli_string(space, [(4, "z")]).dense()
    z0 = pauli_string(space, [(0, "z")]).dense()
    phi = 0.61
    m = (eye + ap) / 2 + (eye - ap) / 2 @ xa
    sig = scipy.linalg.expm(1j * phi * z0)
    c = (eye + za) / 2 + (eye - za) / 2 @ sig
    circ = Circuit(5)
    for mat in (m, c, m):
        circ.append(GateSpec("raw", tuple(range(5)), matrix=mat))
    chan = ancilla_dissipative_map(circ, ancilla=4, ancilla_in=0)

    sys_space = build_space("spin", 4)
    ap_sys = pauli_string(sys_space, [(q, "x") for q in range(4)])
    z0_sys = pauli_string(sys_space, [(0, "z")])
    direct = stabilizer_pump_map(ap_sys, 1, np.sin(phi) ** 2, z0_sys)
    assert np.abs(chan.choi() - direct.choi()).max() < 1e-9


# ----------------------------------------------------------- gate noise


def test_depolarize_trace_and_limit():
    rng = np.random.default_rng(4)
    rho = random_density_matrix(8, rng)
    out = depolarize(rho, [1], 1.0, 3)
    assert abs(np.trace(out) - 1) < 1e-12
    # fully depolarized qubit is maximally mixed
    red = partial_trace(out, [1], 3)
    assert np.abs(red - np.eye(2) / 2).max() < 1e-12
    # keep-qubit marginals untouched
    red02 = partial_trace(out, [0, 2], 3)
    assert np.abs(red02 - partial_trace(rho, [0, 2], 3)).max() < 1e-12


def test_noisy_apply_zero_noise_exact():
    rng = np.random.default_rng(9)
    circ = bell_pump_circuit(0.8)
    rho = random_density_matrix(8, rng)
    u = circ.unitary()
    out = noisy_apply(circ, rho, NoiseSpec(0.0, 0.0))
    assert np.abs(out - u @ rho @ u.conj().T).max() < 1e-10


def test_noisy_ghz_pumping_decays_zz():
    # repeated pumping of the four-body stabilizer with depolarizing noise
    space = build_space("spin", 4)
    ghz = (space.basis_state((0,) * 4) + space.basis_state((1,) * 4)) \
        / np.sqrt(2)
    rho = np.outer(ghz, ghz.conj())
    ap = pauli_string(space, [(q, "x") for q in range(4)])
    z0 = pauli_string(space, [(0, "z")])
    pump = stabilizer_pump_map(ap, 1, 0.5, z0)
    zz01 = pauli_string(space, [(0, "z"), (1, "z")]).dense()
    vals = []
    for _ in range(8):
        rho = pump.apply(rho)
        rho = depolarize(rho, range(4), 0.03, 4)
        vals.append(np.trace(zz01 @ rho).real)
    assert vals[-1] < vals[0] - 0.05
    assert all(b < a + 1e-9 for a, b in zip(vals, vals[1:]))


def test_compile_odd_target_count():
    circ = compile_nbody_phase([0, 1, 2], 0.3, "x", ancilla=3)
    assert circ.native and circ.entangling_count == 2
    assert certification_error(circ, [0, 1, 2], "x", 0.3, 3) < 1e-9


def test_compile_five_targets_z_axes():
    circ = compile_nbody_phase(list(range(5)), 0.45, "z", ancilla=5)
    assert certification_error(circ, list(range(5)), "z", 0.45, 5) < 1e-9


def test_kraus_composition_matches_sequential_application():
    rng = np.random.default_rng(12)
    zz = bell_pump_map("ZZ", 0.5)
    xx = bell_pump_map("XX", 0.5)
    cycle = xx.compose(zz)
    three = cycle.power(3)
    rho = random_density_matrix(4, rng)
    seq = rho.copy()
    for _ in range(3):
        seq = xx.apply(zz.apply(seq))
    assert np.abs(three.apply(rho) - seq).max() < 1e-12
    _, _, _, psi_m = bell_states()
    mixed = np.eye(4, dtype=complex) / 4
    pop = np.vdot(psi_m, three.apply(mixed) @ psi_m).real
    assert abs(pop - 225 / 256) < 1e-12
