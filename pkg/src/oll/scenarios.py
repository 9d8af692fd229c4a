"""Scenario registry for the command-line runner.

Each scenario is a declarative config (defaults + description) plus a
runner returning a column-oriented series, a results dict for
summary.json, and a plot hint for the rendered figure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass
class ScenarioOutput:
    columns: list
    rows: np.ndarray              # (n_rows, n_cols) float
    results: dict
    plot: str = "lines"           # lines | profile | steps
    ylabel: str = ""


@dataclass
class Scenario:
    name: str
    description: str
    figure_analog: str
    defaults: dict
    runner: Callable


REGISTRY: dict = {}


def scenario(name, description, figure_analog, defaults):
    def wrap(fn):
        REGISTRY[name] = Scenario(name, description, figure_analog,
                                  defaults, fn)
        return fn
    return wrap


def _bell_states():
    s2 = 1 / np.sqrt(2)
    return {
        "phi_plus": s2 * np.array([1, 0, 0, 1], dtype=complex),
        "phi_minus": s2 * np.array([1, 0, 0, -1], dtype=complex),
        "psi_plus": s2 * np.array([0, 1, 1, 0], dtype=complex),
        "psi_minus": s2 * np.array([0, 1, -1, 0], dtype=complex),
    }


@scenario(
    "bell-pump",
    "Kraus pumping of two qubits into the singlet Bell state",
    "Bell-state pumping populations over cooling cycles",
    {"p": 0.5, "cycles": 3},
)
def run_bell_pump(cfg, seed, threads):
    from .digital import bell_pump_map
    states = _bell_states()
    zz = bell_pump_map("ZZ", cfg["p"])
    xx = bell_pump_map("XX", cfg["p"])
    rho = np.eye(4, dtype=complex) / 4
    rows = []
    for cycle in range(cfg["cycles"] + 1):
        pops = [np.vdot(v, rho @ v).real for v in states.values()]
        rows.append([cycle] + pops)
        rho = xx.apply(zz.apply(rho))
    det = bell_pump_map("XX", 1.0).apply(
        bell_pump_map("ZZ", 1.0).apply(np.eye(4, dtype=complex) / 4))
    psi_m = states["psi_minus"]
    results = {
        "target_population": rows[-1][4],
        "deterministic_single_cycle_fidelity":
            float(np.vdot(psi_m, det @ psi_m).real),
    }
    return ScenarioOutput(["cycle"] + list(states), np.array(rows), results,
                          ylabel="population")


@scenario(
    "stabilizer-pump",
    "Four-qubit stabilizer pumping toward the GHZ stabilizer sector",
    "stabilizer expectation growth under repeated pumping",
    {"p": 0.5, "cycles": 10},
)
def run_stabilizer_pump(cfg, seed, threads):
    from .digital import stabilizer_pump_map
    from .hilbert import build_space, pauli_string
    space = build_space("spin", 4)
    xxxx = pauli_string(space, [(q, "x") for q in range(4)])
    z01 = pauli_string(space, [(0, "z"), (1, "z")])
    pump = stabilizer_pump_map(xxxx, 1, cfg["p"], pauli_string(space, [(0, "z")]))
    rho = space.basis_state((1, 1, 1, 1))
    rho = np.outer(rho, rho.conj())
    rows = []
    for cycle in range(cfg["cycles"] + 1):
        rows.append([cycle, np.trace(xxxx.dense() @ rho).real,
                     np.trace(z01.dense() @ rho).real])
        rho = pump.apply(rho)
    # deterministic sequential pumping from the fully mixed state
    rho_m = np.eye(16, dtype=complex) / 16
    seq = [([(0, "z"), (1, "z")], [(1, "x")]),
           ([(1, "z"), (2, "z")], [(2, "x")]),
           ([(2, "z"), (3, "z")], [(3, "x")]),
           ([(q, "x") for q in range(4)], [(0, "z")])]
    for stab_spec, flip_spec in seq:
        rho_m = stabilizer_pump_map(pauli_string(space, stab_spec), 1, 1.0,
                                    pauli_string(space, flip_spec)).apply(rho_m)
    ghz = (space.basis_state((0,) * 4) + space.basis_state((1,) * 4)) / np.sqrt(2)
    vals = [r[1] for r in rows]
    results = {
        "ghz_fidelity_deterministic": float(np.vdot(ghz, rho_m @ ghz).real),
        "monotone_growth": bool(all(b >= a - 1e-12
                                    for a, b in zip(vals, vals[1:]))),
        "final_stabilizer": vals[-1],
    }
    return ScenarioOutput(["cycle", "xxxx", "z0z1"], np.array(rows), results,
                          ylabel="expectation")


@scenario(
    "toric-cool",
    "Trajectory cooling of the periodic toric code; optional depolarizing "
    "noise via digital pumping cycles",
    "anyon density decay toward the stabilizer ground state",
    {"lx": 2, "ly": 2, "n_trajectories": 30, "t_final": 30.0, "dt": 0.02,
     "epsilon": 0.0, "cycles": 30},
)
def run_toric_cool(cfg, seed, threads):
    from .spinmodels import ToricLattice, toric_model, toric_ground_energy
    from .trajectory import TrajectoryConfig, ensemble_average
    tm = toric_model(ToricLattice(cfg["lx"], cfg["ly"]))
    if cfg["epsilon"] > 0:
        rows, results = _noisy_toric_cycles(tm, cfg, seed)
        return ScenarioOutput(["cycle", "magnetic", "electric"],
                              rows, results, ylabel="anyon density")
    obs = tm.plaquette_ops + tm.vertex_ops + [tm.model.hamiltonian]
    down = tm.space.basis_state((1,) * tm.lattice.n_spins)
    cfg_t = TrajectoryConfig(dt=cfg["dt"], t_final=cfg["t_final"],
                             n_trajectories=cfg["n_trajectories"],
                             master_seed=seed, observables=obs, n_samples=31)
    res = ensemble_average(tm.model, down, cfg_t, threads=threads)
    n_p = len(tm.plaquette_ops)
    n_s = len(tm.vertex_ops)
    mag = (1 - res.mean[:, :n_p].real.mean(axis=1)) / 2
    elec = (1 - res.mean[:, n_p:n_p + n_s].real.mean(axis=1)) / 2
    energy = res.mean[:, -1].real
    rows = np.column_stack([res.times, mag, elec, energy])
    results = {
        "final_magnetic_density": float(mag[-1]),
        "final_electric_density": float(elec[-1]),
        "final_energy": float(energy[-1]),
        "ground_energy": toric_ground_energy(tm),
    }
    return ScenarioOutput(["time", "magnetic", "electric", "energy"],
                          rows, results, ylabel="anyon density / energy")


def _noisy_toric_cycles(tm, cfg, seed):
    from .digital import depolarize, stabilizer_pump_map
    from .hilbert import pauli_string
    lat, space = tm.lattice, tm.space
    n = lat.n_spins
    down = space.basis_state((1,) * n)
    rho = np.outer(down, down.conj())
    rows = []
    flip_counter = 0
    groups = [(lat.plaquettes, tm.plaquette_ops, "z"),
              (lat.vertices, tm.vertex_ops, "x")]
    for cycle in range(cfg["cycles"] + 1):
        mag = np.mean([(1 - np.trace(op.dense() @ rho).real) / 2
                       for op in tm.plaquette_ops])
        elec = np.mean([(1 - np.trace(op.dense() @ rho).real) / 2
                        for op in tm.vertex_ops])
        rows.append([cycle, mag, elec])
        for edges, ops, flip_axis in groups:
            for members, stab in zip(edges, ops):
                flip_site = members[flip_counter % len(members)]
                flip = pauli_string(space, [(flip_site, flip_axis)])
                rho = stabilizer_pump_map(stab, 1, 1.0, flip).apply(rho)
                rho = depolarize(rho, members, cfg["epsilon"], n)
        flip_counter += 1
    rows = np.array(rows)
    tail = rows[-max(cfg["cycles"] // 3, 2):, 1:]
    return rows, {
        "stationary_magnetic_density": float(tail[:, 0].mean()),
        "stationary_electric_density": float(tail[:, 1].mean()),
    }


@scenario(
    "trotter-ising",
    "First-order product-formula error scaling on the two-spin Ising model",
    "digitized-versus-exact error at increasing Trotter resolution",
    {"j": 2.0, "b": 1.0, "t": 0.5, "steps": [1, 2, 4, 8, 16]},
)
def run_trotter_ising(cfg, seed, threads):
    import scipy.linalg
    from .digital import trotter_evolve
    from .hilbert import build_space, pauli_string
    space = build_space("spin", 2)
    h_int = cfg["j"] * pauli_string(space, [(0, "x"), (1, "x")]).dense()
    h_mag = cfg["b"] * (pauli_string(space, [(0, "z")]).dense()
                        + pauli_string(space, [(1, "z")]).dense())
    psi0 = space.basis_state((0, 0))
    exact = scipy.linalg.expm(-1j * cfg["t"] * (h_int + h_mag)) @ psi0
    rows = []
    for n in cfg["steps"]:
        _, states, _ = trotter_evolve([("int", h_int, None),
                                       ("mag", h_mag, None)],
                                      cfg["t"], int(n), psi0)
        rows.append([n, float(np.abs(states[-1] - exact).max())])
    rows = np.array(rows)
    slope = float(np.polyfit(np.log(rows[:, 0]), np.log(rows[:, 1]), 1)[0])
    return ScenarioOutput(["n_steps", "sup_error"], rows,
                          {"loglog_slope": slope}, ylabel="sup error")


@scenario(
    "nbody-compile",
    "Certified two-entangler compilation of a many-body phase propagator",
    "collective-gate circuit driving coherent multi-spin flips",
    {"n_targets": 6, "phi_points": 25},
)
def run_nbody_compile(cfg, seed, threads):
    from .digital import certification_error, compile_nbody_phase
    from .hilbert import build_space
    n = cfg["n_targets"]
    space = build_space("spin", n + 1)
    up = space.basis_state((0,) * (n + 1))
    dn = space.basis_state((1,) * n + (0,))
    rows = []
    worst = 0.0
    for phi in np.linspace(0, np.pi, cfg["phi_points"]):
        circ = compile_nbody_phase(list(range(n)), float(phi), "x", ancilla=n)
        u = circ.unitary(space)
        rows.append([phi, abs(np.vdot(up, u @ up)) ** 2,
                     abs(np.vdot(dn, u @ up)) ** 2])
        worst = max(worst, certification_error(circ, list(range(n)), "x",
                                               float(phi), n))
    circ = compile_nbody_phase(list(range(n)), np.pi / 4, "x", ancilla=n)
    results = {"max_certification_error": worst,
               "entangling_count": circ.entangling_count,
               "native": circ.native}
    return ScenarioOutput(["phi", "pop_all_up", "pop_all_down"],
                          np.array(rows), results, ylabel="population")


@scenario(
    "lgt-cool",
    "Constraint-sector cooling of the 12-spin gauge cluster to the "
    "dimer-condensate state",
    "ring-exchange pumping into the Rokhsar-Kivelson superposition",
    {"t_final": 40.0, "dt": 0.02},
)
def run_lgt_cool(cfg, seed, threads):
    from .liouville import evolve_master
    from .spinmodels import (LgtCluster, dimer_condensate_reference,
                             lgt_model, seed_covering)
    lgt = lgt_model(LgtCluster())
    ref = lgt.restrict(dimer_condensate_reference(lgt))
    start = lgt.restrict(seed_covering(lgt))
    rho0 = np.outer(start, start.conj())
    proj = np.outer(ref, ref.conj())
    from .hilbert import Operator
    res = evolve_master(lgt.sector_model, rho0, cfg["t_final"], cfg["dt"],
                        observables=[Operator(proj, lgt.sector, lgt.sector)],
                        n_samples=41, store_states=False)
    rows = np.column_stack([res.times, res.observables[:, 0].real])
    return ScenarioOutput(["time", "fidelity"], rows,
                          {"final_fidelity": float(rows[-1, 1])},
                          ylabel="fidelity")


@scenario(
    "lgt-ramp",
    "Trotterized ramp of the Rokhsar-Kivelson term at several per-step phases",
    "digitized adiabatic ramp versus the exact ground-state energy",
    {"phis": [0.5, 0.25, 0.1], "t_final": 6.0},
)
def run_lgt_ramp(cfg, seed, threads):
    from .spinmodels import LgtCluster, lgt_adiabatic_ramp, lgt_model
    lgt = lgt_model(LgtCluster())
    all_rows = None
    errors = {}
    for phi in cfg["phis"]:
        times, energies, exact, _ = lgt_adiabatic_ramp(lgt, float(phi),
                                                       cfg["t_final"])
        grid = np.linspace(0, cfg["t_final"], 25)
        e_i = np.interp(grid, times, energies)
        x_i = np.interp(grid, times, exact)
        col = e_i - x_i
        if all_rows is None:
            all_rows = [grid, x_i]
        all_rows.append(col)
        errors[f"final_error_phi_{phi}"] = float(abs(energies[-1] - exact[-1]))
    rows = np.column_stack(all_rows)
    cols = ["time", "exact_energy"] + [f"err_phi_{p}" for p in cfg["phis"]]
    errors["ordered"] = bool(
        errors[f"final_error_phi_{cfg['phis'][0]}"]
        > errors[f"final_error_phi_{cfg['phis'][1]}"]
        > errors[f"final_error_phi_{cfg['phis'][2]}"])
    return ScenarioOutput(cols, rows, errors, ylabel="energy error")


@scenario(
    "bec-dark",
    "Uniqueness and trajectory convergence of the phase-locked condensate "
    "on a small ring",
    "pumping into the fixed-number condensate dark state",
    {"n_sites": 4, "n_particles": 3, "n_trajectories": 40, "t_final": 12.0,
     "dt": 0.02},
)
def run_bec_dark(cfg, seed, threads):
    from .bosefield import bec_jump_ops, bec_state
    from .liouville import dark_state_check, steady_states
    from .trajectory import RankOneProjector, TrajectoryConfig, ensemble_average
    m, n = cfg["n_sites"], cfg["n_particles"]
    model = bec_jump_ops(m, n)
    target = bec_state(m, n)
    resid = dark_state_check(model, target)["channel_residuals"].max()
    steads = steady_states(model)
    occ = [0] * m
    occ[0] = n
    psi0 = model.space.basis_state(tuple(occ))
    cfg_t = TrajectoryConfig(dt=cfg["dt"], t_final=cfg["t_final"],
                             n_trajectories=cfg["n_trajectories"],
                             master_seed=seed, n_samples=31,
                             observables=[RankOneProjector(target)])
    res = ensemble_average(model, psi0, cfg_t, threads=threads)
    rows = np.column_stack([res.times, res.mean[:, 0].real,
                            res.stderr[:, 0]])
    results = {"max_dark_residual": float(resid),
               "null_space_dimension": steads.dimension,
               "final_fidelity": float(rows[-1, 1])}
    return ScenarioOutput(["time", "fidelity", "stderr"], rows, results,
                          ylabel="fidelity")


@scenario(
    "gutzwiller-scan",
    "Mean-field condensate fraction versus interaction, against the "
    "analytic low-density formula",
    "steady-state condensate fraction and its vanishing point",
    {"j_tilde": 0.0, "n": 0.05, "z": 4, "u_lo": 0.3, "u_hi": 1.1,
     "n_points": 9, "n_max": 5, "t_relax": 150.0, "dt": 0.01},
)
def run_gutzwiller_scan(cfg, seed, threads):
    from .bosefield import (BoseParams, condensate_fraction_analytic,
                            critical_u, gutzwiller_steady)
    rows = []
    z = cfg["z"]
    for ut in np.linspace(cfg["u_lo"], cfg["u_hi"], cfg["n_points"]):
        j_raw = 4 * cfg["j_tilde"]
        u_raw = 4 * z * ut
        p = BoseParams(j=j_raw, u=u_raw, mu=-j_raw * z + 2 * u_raw * cfg["n"],
                       n=cfg["n"], z=z, n_max=cfg["n_max"])
        res = gutzwiller_steady(p, dt=cfg["dt"], t_max=cfg["t_relax"],
                                tol=1e-8)
        frac = abs(res.psi) ** 2 / cfg["n"]
        rows.append([ut, frac,
                     max(condensate_fraction_analytic(ut, cfg["j_tilde"]), 0.0)])
    rows = np.array(rows)
    results = {"formula_root": critical_u(cfg["j_tilde"])}
    return ScenarioOutput(["u_tilde", "fraction_numeric", "fraction_analytic"],
                          rows, results, ylabel="condensate fraction")


@scenario(
    "cdw",
    "Real-space mean-field response of the condensate to a density seed "
    "below and above the critical hopping",
    "density-profile evolution in the dynamically unstable regime",
    {"n_sites": 64, "u": 4.0, "n": 0.3, "j": 0.5, "n_max": 6,
     "perturbation": 1e-3, "t_final": 40.0, "dt": 0.01},
)
def run_cdw(cfg, seed, threads):
    from .bosefield import BoseParams, cdw_simulation, instability_boundary
    p = BoseParams(j=cfg["j"], u=cfg["u"], n=cfg["n"], z=2,
                   n_max=cfg["n_max"])
    res = cdw_simulation(cfg["n_sites"], p, cfg["perturbation"],
                         cfg["t_final"], cfg["dt"], seed)
    rows = np.column_stack([np.arange(cfg["n_sites"]), res.profile])
    results = {
        "critical_hopping": instability_boundary(p),
        "contrast": res.contrast,
        "contrast_over_seed": res.contrast / cfg["perturbation"],
        "wavelength": res.wavelength,
        "stationary": bool(res.stationary),
    }
    return ScenarioOutput(["site", "density"], rows, results,
                          plot="profile", ylabel="density")


@scenario(
    "critical-probe",
    "Order-parameter decay exponent at the interaction-driven critical point",
    "log-derivative plateau of the order parameter at criticality",
    {"u": 14.140960693359375, "n": 1.0, "z": 4, "n_max": 7, "t_final": 400.0, "dt": 0.005},
)
def run_critical_probe(cfg, seed, threads):
    from .bosefield import BoseParams, critical_exponent_probe
    p = BoseParams(j=0.0, u=cfg["u"], n=cfg["n"], z=cfg["z"],
                   n_max=cfg["n_max"])
    res = critical_exponent_probe(p, t_final=cfg["t_final"], dt=cfg["dt"])
    good = res.psi_mag > 1e-12
    rows = np.column_stack([res.times[good], res.psi_mag[good],
                            res.log_derivative])
    results = {"plateau": res.plateau}
    return ScenarioOutput(["time", "psi_mag", "dlog_dlog"], rows, results,
                          ylabel="|psi|, log-derivative")


@scenario(
    "neel",
    "Dark antiferromagnetic orderings of the spin-flip transport channels",
    "steady-state degeneracy with and without the symmetry breaker",
    {"lx": 2, "ly": 2},
)
def run_neel(cfg, seed, threads):
    from .fermisea import FermiLattice, neel_jump_ops, neel_state
    from .liouville import dark_state_check, steady_states
    lat = FermiLattice(cfg["lx"], cfg["ly"])
    model = neel_jump_ops(lat)
    rows = []
    for which in (1, -1):
        resid = dark_state_check(model, neel_state(lat, which))
        rows.append(resid["channel_residuals"])
    rows = np.column_stack([np.arange(len(rows[0])), rows[0], rows[1]])
    res = steady_states(model)
    res_b = steady_states(neel_jump_ops(lat, breaker_site=0))
    results = {"steady_dimension": res.dimension,
               "raw_null_dimension": res.raw_null_dimension,
               "steady_dimension_with_breaker": res_b.dimension}
    return ScenarioOutput(["channel", "residual_neel_plus",
                           "residual_neel_minus"], rows, results,
                          ylabel="residual")


@scenario(
    "dwave-dark",
    "Dark-state residuals of the pair-coherence channels on the square "
    "lattice",
    "paired-state annihilation by every channel",
    {"lx": 4, "ly": 4, "n_pairs": 1},
)
def run_dwave_dark(cfg, seed, threads):
    from .fermisea import (FermiLattice, dwave_jump_ops, dwave_state,
                           quasiparticle_rates)
    from .liouville import dark_state_check
    lat = FermiLattice(cfg["lx"], cfg["ly"])
    psi = dwave_state(lat, cfg["n_pairs"])
    model = dwave_jump_ops(lat, 2 * cfg["n_pairs"])
    resid = dark_state_check(model, psi)["channel_residuals"]
    _, n_tilde = quasiparticle_rates()
    rows = np.column_stack([np.arange(len(resid)), resid])
    return ScenarioOutput(["channel", "residual"], rows,
                          {"max_residual": float(resid.max()),
                           "n_tilde": n_tilde},
                          ylabel="residual")


@scenario(
    "dwave-traj",
    "Trajectory purification toward the paired dark state on a short chain",
    "ensemble entropy rise and drain during pairing",
    {"length": 4, "n_pairs": 1, "n_trajectories": 48, "t_final": 70.0,
     "dt": 0.02},
)
def run_dwave_traj(cfg, seed, threads):
    from .fermisea import (FermiLattice, dwave_jump_ops, dwave_state, mode,
                           von_neumann_entropy)
    from .trajectory import TrajectoryConfig, ensemble_average
    lat = FermiLattice(cfg["length"], 1, boundary="open")
    model = dwave_jump_ops(lat, 2 * cfg["n_pairs"])
    occ = [0] * lat.n_modes
    occ[mode(0, 0)] = occ[mode(1, 1)] = 1
    psi0 = model.space.basis_state(tuple(occ))
    target = dwave_state(lat, cfg["n_pairs"])
    cfg_t = TrajectoryConfig(dt=cfg["dt"], t_final=cfg["t_final"],
                             n_trajectories=cfg["n_trajectories"],
                             master_seed=seed, n_samples=15,
                             store_states=True, fidelity_target=target)
    res = ensemble_average(model, psi0, cfg_t, threads=threads,
                           keep_records=True)
    dim = model.space.dim
    entropies = []
    fids = []
    for k in range(15):
        rho = np.zeros((dim, dim), dtype=complex)
        for rec in res.records:
            v = rec.states[k]
            rho += np.outer(v, v.conj())
        rho /= len(res.records)
        entropies.append(von_neumann_entropy(rho))
        fids.append(float(np.vdot(target, rho @ target).real))
    rows = np.column_stack([res.times, entropies, fids])
    return ScenarioOutput(
        ["time", "entropy", "fidelity"], rows,
        {"final_entropy": entropies[-1], "final_fidelity": fids[-1],
         "mean_final_trajectory_fidelity": float(res.final_fidelities.mean())},
        ylabel="entropy / fidelity")


@scenario(
    "adiabatic-passage",
    "Dissipative-assisted ramp from the paired dark state to the "
    "Fermi-Hubbard ground state on a two-leg ladder",
    "fidelity to the Hubbard ground state along the ramp",
    {"legs": 6, "n_pairs": 2, "t_total": 30.0, "j_final": 1.0,
     "u_final": 4.0, "kappa": 0.05, "n_trajectories": 4, "dt": 0.02},
)
def run_adiabatic_passage(cfg, seed, threads):
    from .fermisea import RUNG_ADAPTED_SIGNS, FermiLattice, adiabatic_passage
    lat = FermiLattice(2, cfg["legs"], boundary="open")
    res = adiabatic_passage(lat, cfg["n_pairs"], t_total=cfg["t_total"],
                            j_final=cfg["j_final"], u_final=cfg["u_final"],
                            kappa=cfg["kappa"],
                            n_trajectories=cfg["n_trajectories"],
                            seed=seed, dt=cfg["dt"], n_samples=21,
                            threads=threads, signs=RUNG_ADAPTED_SIGNS)
    rows = np.column_stack([res.times, res.fidelity])
    results = {"initial_overlap": res.initial_overlap,
               "final_fidelity": res.final_fidelity,
               "quench_fidelity": res.quench_fidelity,
               "ground_energy": res.ground_energy}
    return ScenarioOutput(["time", "fidelity"], rows, results,
                          ylabel="fidelity")


@scenario(
    "wire-spectrum",
    "Damping spectrum and edge zero modes of the dissipative pairing wire",
    "flat bulk damping with isolated edge zero modes",
    {"n_modes": 10, "theta": float(np.pi / 4)},
)
def run_wire_spectrum(cfg, seed, threads):
    from .majorana import damping_spectrum, wire_jumps
    n = cfg["n_modes"]
    open_evals = damping_spectrum(wire_jumps(n, cfg["theta"], "open"))
    per_evals = damping_spectrum(wire_jumps(n, cfg["theta"], "periodic"))
    rows = np.column_stack([np.arange(2 * n), open_evals, per_evals])
    results = {
        "open_zero_modes": int((np.abs(open_evals) < 1e-12).sum()),
        "periodic_flatness": float(np.ptp(per_evals)),
    }
    return ScenarioOutput(["index", "open_wire", "periodic_wire"], rows,
                          results, plot="steps", ylabel="damping eigenvalue")


@scenario(
    "winding-scan",
    "Mixed-state winding number, purity gap and damping gap across the "
    "wire deformation",
    "topological transition located by the integer jump",
    {"theta_lo": 0.2, "theta_hi": float(np.pi - 0.2), "n_thetas": 24,
     "n_sites": 64},
)
def run_winding_scan(cfg, seed, threads):
    from .majorana import theta_scan
    thetas = np.linspace(cfg["theta_lo"], cfg["theta_hi"], cfg["n_thetas"])
    rows = np.array(theta_scan(thetas, n_sites=cfg["n_sites"]))
    nus = rows[:, 1]
    defined = ~np.isnan(nus)
    jumps = np.flatnonzero(np.diff(nus[defined]) != 0)
    jump_at = None
    if len(jumps):
        th = thetas[defined]
        jump_at = float((th[jumps[0]] + th[jumps[0] + 1]) / 2)
    results = {"jump_location": jump_at,
               "transition": float(np.pi / 2)}
    return ScenarioOutput(["theta", "winding", "purity_gap", "damping_gap"],
                          rows, results, plot="steps", ylabel="winding / gaps")


@scenario(
    "braiding",
    "Non-commuting exchange unitaries of shared-site Majorana pairs",
    "non-abelian braiding algebra check",
    {"n_modes": 4},
)
def run_braiding(cfg, seed, threads):
    from .majorana import braiding_unitary
    n = cfg["n_modes"]
    b12 = braiding_unitary(0, 1, n).dense()
    b23 = braiding_unitary(1, 2, n).dense()
    b34 = braiding_unitary(2, 3, n).dense()
    rows = []
    pairs = [("b12_b23", b12, b23), ("b23_b34", b23, b34),
             ("b12_b34", b12, b34)]
    for k, (label, a, b) in enumerate(pairs):
        rows.append([k, float(np.linalg.norm(a @ b - b @ a, 2))])
    p8 = np.linalg.matrix_power(b12, 8)
    phase = p8[0, 0]
    results = {
        "overlap_commutator_norm": rows[0][1],
        "disjoint_commutator_norm": rows[2][1],
        "eighth_power_identity_defect":
            float(np.abs(p8 - phase * np.eye(len(p8))).max()),
    }
    return ScenarioOutput(["pair_index", "commutator_norm"],
                          np.array(rows), results, plot="steps",
                          ylabel="commutator norm")
