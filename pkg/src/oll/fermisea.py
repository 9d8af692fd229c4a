"""Fixed-number fermionic dissipative engineering on bipartite lattices:
spin-flip transport channels targeting Neel order, their d-wave
superpositions targeting an off-site paired state, the parent
Hamiltonian, and the adiabatic passage to the Fermi-Hubbard ground state.

Mode convention: mode = 2*site + spin with spin index 0 = down, 1 = up,
sites row-major; all fermionic signs inherit from that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import Operator, build_space, mode_operator
from .liouville import LindbladModel

DOWN, UP = 0, 1

# spin matrices on the (down, up) ordered doublet
SPIN = {
    "+": np.array([[0, 0], [1, 0]], dtype=complex),       # |up><down|
    "-": np.array([[0, 1], [0, 0]], dtype=complex),
    "z": np.array([[-1, 0], [0, 1]], dtype=complex),
    "y": np.array([[0, 1j], [-1j, 0]], dtype=complex),
    "1+z": np.array([[0, 0], [0, 2]], dtype=complex),
}

DIRECTIONS = {"+x": (1, 0), "-x": (-1, 0), "+y": (0, 1), "-y": (0, -1)}


@dataclass(frozen=True)
class FermiLattice:
    lx: int
    ly: int
    boundary: str = "periodic"

    @property
    def n_sites(self):
        return self.lx * self.ly

    @property
    def n_modes(self):
        return 2 * self.n_sites

    def site(self, x, y):
        return (y % self.ly) * self.lx + (x % self.lx)

    def coords(self, site):
        return site % self.lx, site // self.lx

    def sublattice(self, site):
        x, y = self.coords(site)
        return (x + y) % 2

    def neighbor(self, site, direction) -> Optional[int]:
        dx, dy = DIRECTIONS[direction]
        x, y = self.coords(site)
        nx, ny = x + dx, y + dy
        if self.boundary == "open" and not (0 <= nx < self.lx
                                            and 0 <= ny < self.ly):
            return None
        return self.site(nx, ny)

    def directions(self, one_sided=False):
        """Bond directions that exist on this lattice; a 1-wide lattice
        keeps only the x axis."""
        dirs = ["+x", "-x"] if self.ly == 1 else ["+x", "-x", "+y", "-y"]
        if self.lx == 1:
            dirs = [d for d in dirs if "x" not in d]
        if one_sided:
            dirs = [d for d in dirs if d.startswith("+")]
        return dirs


PAIR_SIGNS = {"+x": 1.0, "-x": 1.0, "+y": -1.0, "-y": -1.0}


@dataclass(frozen=True)
class PairFunction:
    """d-wave pair amplitudes: +1 on x bonds, -1 on y bonds."""

    @staticmethod
    def momentum(qx, qy):
        return np.cos(qx) - np.cos(qy)

    @staticmethod
    def bond(direction):
        return PAIR_SIGNS[direction]


def mode(site: int, spin: int) -> int:
    return 2 * site + spin


@lru_cache(maxsize=32)
def fermion_space(n_modes: int, n_particles: int):
    return build_space("fermion", n_modes, n_particles=n_particles)


@lru_cache(maxsize=256)
def _annihilators(n_modes: int, n_particles: int):
    space = fermion_space(n_modes, n_particles)
    return [mode_operator(space, "annihilate", m).sparse()
            for m in range(n_modes)]


def _hops(lat: FermiLattice, n_particles: int):
    """c+_dst c_src builder within one fixed-number sector."""
    if n_particles == 0:
        zero = sp.csr_matrix((1, 1), dtype=complex)
        return lambda dst, src: zero
    ann = _annihilators(lat.n_modes, n_particles)
    # rectangles: annihilate N -> N-1, then create back N-1 -> N
    create_back = [mode_operator(fermion_space(lat.n_modes, n_particles - 1),
                                 "create", m).sparse()
                   for m in range(lat.n_modes)]

    def hop(dst, src):
        return create_back[dst] @ ann[src]
    return hop


def spin_hop(lat: FermiLattice, n_particles: int, site: int, direction: str,
             smat: np.ndarray, hop=None):
    """sum_{s,t} smat[s,t] c+_{site+e_dir, s} c_{site, t} (None off-lattice)."""
    dst_site = lat.neighbor(site, direction)
    if dst_site is None:
        return None
    hop = hop or _hops(lat, n_particles)
    out = None
    for s in range(2):
        for t in range(2):
            if smat[s, t] == 0:
                continue
            term = smat[s, t] * hop(mode(dst_site, s), mode(site, t))
            out = term if out is None else out + term
    return out


def neel_jump_ops(lat: FermiLattice, breaker_site: Optional[int] = None,
                  rate: float = 2.0) -> LindbladModel:
    """Spin-flip transport channels whose joint dark states are the two
    Neel orderings at half filling; an optional one-site spin-selective
    channel removes one of the two (on sublattice A it keeps down-on-A)."""
    n_particles = lat.n_sites
    space = fermion_space(lat.n_modes, n_particles)
    hop = _hops(lat, n_particles)
    channels = []
    for site in range(lat.n_sites):
        for direction in lat.directions(one_sided=True):
            for a in ("+", "-"):
                c = spin_hop(lat, n_particles, site, direction, SPIN[a], hop)
                if c is not None:
                    channels.append((rate, Operator(c, space, space)))
    if breaker_site is not None:
        direction = lat.directions(one_sided=True)[0]
        c = spin_hop(lat, n_particles, breaker_site, direction,
                     SPIN["1+z"], hop)
        channels.append((rate, Operator(c, space, space)))
    return LindbladModel(space, None, channels)


def neel_state(lat: FermiLattice, which: int = +1) -> np.ndarray:
    """|N+> (down on sublattice A) or |N-> as a basis vector."""
    space = fermion_space(lat.n_modes, lat.n_sites)
    occ = [0] * lat.n_modes
    for site in range(lat.n_sites):
        spin_down_on_a = DOWN if which > 0 else UP
        spin = spin_down_on_a if lat.sublattice(site) == 0 else (
            UP if which > 0 else DOWN)
        occ[mode(site, spin)] = 1
    return space.basis_state(tuple(occ))


def dwave_jump_ops(lat: FermiLattice, n_particles: int,
                   alphas: Sequence[str] = ("+", "-", "z"),
                   rate: float = 2.0, signs=None) -> LindbladModel:
    """Pair-coherence channels J_i^a = sum_dir rho_dir c+_{i+e} sigma^a c_i.

    signs overrides the bond sign pattern (default d-wave: +x, -y); a
    two-leg ladder matches its ground state with rung-positive signs.
    """
    signs = PAIR_SIGNS if signs is None else signs
    space = fermion_space(lat.n_modes, n_particles)
    hop = _hops(lat, n_particles)
    channels = []
    for site in range(lat.n_sites):
        for a in alphas:
            acc = None
            for direction in lat.directions():
                term = spin_hop(lat, n_particles, site, direction,
                                SPIN[a], hop)
                if term is None:
                    continue
                term = signs[direction] * term
                acc = term if acc is None else acc + term
            if acc is not None:
                channels.append((rate, Operator(acc, space, space)))
    return LindbladModel(space, None, channels)


def pair_creator(lat: FermiLattice, n_from: int, form: str = "y",
                 signs=None):
    """Zero-momentum paired-state creation as a rectangle N -> N+2."""
    signs = PAIR_SIGNS if signs is None else signs
    space_n = fermion_space(lat.n_modes, n_from)
    space_mid = fermion_space(lat.n_modes, n_from + 1)
    create_mid = [mode_operator(space_n, "create", m).sparse()
                  for m in range(lat.n_modes)]
    create_top = [mode_operator(space_mid, "create", m).sparse()
                  for m in range(lat.n_modes)]

    if form == "y":
        dirs = [d for d in lat.directions() if d.startswith("+")]
        smat = SPIN["y"]
        prefactor = 0.5j
    elif form in ("+", "-"):
        dirs = lat.directions()
        smat = SPIN[form]
        prefactor = 0.5 if form == "+" else -0.5
    else:
        raise ValueError(f"unknown pair form {form!r}")

    out = None
    for site in range(lat.n_sites):
        for direction in dirs:
            dst = lat.neighbor(site, direction)
            if dst is None:
                continue
            for s in range(2):
                for t in range(2):
                    if smat[s, t] == 0:
                        continue
                    term = (signs[direction] * smat[s, t] * prefactor) \
                        * (create_top[mode(dst, s)] @ create_mid[mode(site, t)])
                    out = term if out is None else out + term
    return Operator(out, fermion_space(lat.n_modes, n_from + 2), space_n)


def dwave_state(lat: FermiLattice, n_pairs: int, form: str = "y",
                signs=None) -> np.ndarray:
    """Normalized (d+)^n_pairs |vac>; raises if it vanishes."""
    vac_space = fermion_space(lat.n_modes, 0)
    vec = np.zeros(vac_space.dim, dtype=complex)
    vec[0] = 1.0
    for k in range(n_pairs):
        vec = pair_creator(lat, 2 * k, form, signs).mat @ vec
    nrm = np.linalg.norm(vec)
    if nrm < 1e-12:
        raise ValueError("pair state vanishes (overfilled lattice)")
    return vec / nrm


def quasiparticle_rates(n_grid: int = 400, kappa: float = 1.0):
    """Momentum-resolved damping rate kappa*ntilde*(1 + phi_q^2) and the
    mean-field occupation factor ntilde from 2D quadrature over the BZ."""
    q = -np.pi + 2 * np.pi * np.arange(n_grid) / n_grid
    qx, qy = np.meshgrid(q, q, indexing="ij")
    phi2 = PairFunction.momentum(qx, qy) ** 2
    n_tilde = float(2 * np.mean(phi2 / (1 + phi2)))

    def kappa_q(qx, qy):
        return kappa * n_tilde * (1 + PairFunction.momentum(qx, qy) ** 2)

    return kappa_q, n_tilde


def parent_hamiltonian(lat: FermiLattice, v: float, n_particles: int,
                       alphas: Sequence[str] = ("+", "-", "z"),
                       signs=None) -> Operator:
    """V sum_{i,a} J_i^a+ J_i^a; positive semidefinite, d-wave dark state
    as zero mode."""
    if v <= 0:
        raise ValueError("parent Hamiltonian needs V > 0")
    model = dwave_jump_ops(lat, n_particles, alphas, rate=1.0, signs=signs)
    acc = None
    for _, op in model.channels:
        term = op.mat.conj().T @ op.mat
        acc = term if acc is None else acc + term
    space = fermion_space(lat.n_modes, n_particles)
    return Operator(v * acc, space, space, hermitian=True)


def fhm_hamiltonian(lat: FermiLattice, j: float, u: float,
                    n_particles: int) -> Operator:
    """-J sum_<ij>s c+_is c_js + U sum_i n_iu n_id on a fixed-N sector."""
    space = fermion_space(lat.n_modes, n_particles)
    hop = _hops(lat, n_particles)
    acc = None
    for site in range(lat.n_sites):
        for direction in lat.directions(one_sided=True):
            dst = lat.neighbor(site, direction)
            if dst is None:
                continue
            for s in range(2):
                term = hop(mode(dst, s), mode(site, s))
                term = term + term.conj().T
                acc = term * (-j) if acc is None else acc - j * term
    occ = np.array(space.occupations)
    double = (occ[:, 0::2] * occ[:, 1::2]).sum(axis=1).astype(complex)
    u_term = sp.diags(u * double).tocsr()
    acc = u_term if acc is None else acc + u_term
    return Operator(acc.tocsr(), space, space, hermitian=True)


def hopping_matrix(lat: FermiLattice, j: float) -> np.ndarray:
    """Single-particle hopping matrix on sites (spinless band)."""
    h = np.zeros((lat.n_sites, lat.n_sites))
    for site in range(lat.n_sites):
        for direction in lat.directions(one_sided=True):
            dst = lat.neighbor(site, direction)
            if dst is not None:
                h[dst, site] -= j
                h[site, dst] -= j
    return h


def ground_state(op: Operator, k: int = 1):
    """Lowest eigenpair(s) by sparse Lanczos (dense fallback)."""
    mat = op.sparse()
    d = mat.shape[0]
    if d <= 400:
        evals, evecs = np.linalg.eigh(np.asarray(mat.todense()))
        return evals[:k], evecs[:, :k]
    evals, evecs = spla.eigsh(mat, k=max(k, 2), which="SA")
    order = np.argsort(evals)
    return evals[order][:k], evecs[:, order][:, :k]


def mode_permutation_operator(space, perm):
    """Signed permutation induced on the fixed-N basis by relabeling modes."""
    d = space.dim
    mat = sp.lil_matrix((d, d))
    for col, occ in enumerate(space.occupations):
        occupied = [m for m, o in enumerate(occ) if o]
        images = [perm[m] for m in occupied]
        order = np.argsort(images)
        # parity of the sort permutation
        sign = 1.0
        seen = [False] * len(order)
        for start in range(len(order)):
            if seen[start]:
                continue
            length = 0
            jdx = start
            while not seen[jdx]:
                seen[jdx] = True
                jdx = int(order[jdx])
                length += 1
            if length % 2 == 0:
                sign = -sign
        new_occ = [0] * space.n_modes
        for m in images:
            new_occ[m] = 1
        mat[space.index_of(tuple(new_occ)), col] = sign
    return Operator(mat.tocsr(), space, space)


def von_neumann_entropy(rho: np.ndarray) -> float:
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    evals = evals[evals > 1e-14]
    return float(-(evals * np.log(evals)).sum())


@dataclass
class PassageResult:
    times: np.ndarray
    fidelity: np.ndarray               # ensemble/master fidelity to final GS
    initial_overlap: float
    quench_fidelity: float
    final_fidelity: float
    ground_energy: float


RUNG_ADAPTED_SIGNS = {"+x": 1.0, "-x": 1.0, "+y": 1.0, "-y": 1.0}


def adiabatic_passage(lat: FermiLattice, n_pairs: int, t_total: float = 30.0,
                      v0: float = 1.0, j_final: float = 1.0,
                      u_final: float = 4.0, kappa: float = 0.05,
                      method: str = "trajectory", n_trajectories: int = 8,
                      seed: int = 0, dt: float = 0.02, n_samples: int = 41,
                      threads: int = 1, signs=None, v_window: float = 0.5,
                      v_power: float = 1.0) -> PassageResult:
    """Ramp the pairing Liouvillian + parent Hamiltonian out and the
    Fermi-Hubbard Hamiltonian in, tracking fidelity to the final ground
    state; a sudden quench over the same horizon is the control."""
    n_particles = 2 * n_pairs
    space = fermion_space(lat.n_modes, n_particles)
    model = dwave_jump_ops(lat, n_particles, rate=2.0 * kappa, signs=signs)
    jj_sum = None
    for _, op in model.channels:
        term = op.mat.conj().T @ op.mat
        jj_sum = term if jj_sum is None else jj_sum + term
    jj_sum = jj_sum.tocsr()
    h_hop = fhm_hamiltonian(lat, 1.0, 0.0, n_particles).sparse()
    h_int = fhm_hamiltonian(lat, 0.0, 1.0, n_particles).sparse()

    psi0 = dwave_state(lat, n_pairs, signs=signs)
    h_final = (j_final * h_hop + u_final * h_int).tocsr()
    evals, evecs = ground_state(Operator(h_final, space, space,
                                         hermitian=True))
    gs = evecs[:, 0]
    e0 = float(evals[0])
    initial_overlap = float(abs(np.vdot(gs, psi0)) ** 2)

    def s_of(t):
        return min(max(t / t_total, 0.0), 1.0)

    def v_of(t):
        # pairing drive ramps out early (by v_window of the horizon) with
        # a soft landing: late jumps would drag the state back toward the
        # pair state and away from the Hubbard ground state, so the tail
        # of the passage is a clean adiabatic following of H(t)
        return v0 * max(1.0 - s_of(t) / v_window, 0.0) ** v_power

    # H_eff(t) = V(t) H_p/V + J(t) H_hop + U(t) H_int - i kappa V(t)/v0 sum J+J
    terms = [
        (lambda t: v_of(t) - 1j * kappa * v_of(t) / v0, jj_sum),
        (lambda t: j_final * s_of(t), h_hop),
        (lambda t: u_final * s_of(t), h_int),
    ]

    from .trajectory import (TrajectoryConfig, RankOneProjector,
                             _ensemble_generic, _run_trajectory_generic)

    proj = RankOneProjector(gs)
    cfg = TrajectoryConfig(dt=dt, t_final=t_total,
                           n_trajectories=n_trajectories, master_seed=seed,
                           observables=[proj], n_samples=n_samples)
    channels = [(lambda t, r=rate: r * v_of(t) / v0, op.mat)
                for rate, op in model.channels]

    if method == "trajectory":
        res = _ensemble_generic(terms, channels, psi0, cfg, threads=threads)
        fidelity = res.mean[:, 0].real
        times = res.times
    elif method == "master":
        from .liouville import evolve_master
        rho0 = np.outer(psi0, psi0.conj())
        jj_dense = np.asarray(jj_sum.todense())
        hop_dense = np.asarray(h_hop.todense())
        int_dense = np.asarray(h_int.todense())

        def h_t(t):
            return v_of(t) * jj_dense + s_of(t) * (j_final * hop_dense
                                                   + u_final * int_dense)

        res = evolve_master(
            model, rho0, t_total, dt,
            observables=[Operator(np.outer(gs, gs.conj()), space, space)],
            n_samples=n_samples, store_states=False, hamiltonian_t=h_t,
            rate_scale_t=lambda t: v_of(t) / v0)
        fidelity = res.observables[:, 0].real
        times = res.times
    else:
        raise ValueError(f"unknown method {method!r}")

    # sudden-quench control: pure Hamiltonian evolution under the final FHM
    quench_cfg = TrajectoryConfig(dt=dt, t_final=t_total, n_trajectories=1,
                                  master_seed=seed, observables=[proj],
                                  n_samples=n_samples)
    quench = _run_trajectory_generic(h_final, [], psi0, quench_cfg, 0)
    quench_fid = float(quench.observables[-1, 0].real)

    return PassageResult(times, fidelity, initial_overlap, quench_fid,
                         float(fidelity[-1]), e0)
