"""Spin-system builders: toric code on a periodic square lattice, and a
12-spin U(1) lattice-gauge cluster, with their cooling channels.

The gauge cluster realizes four cubic-lattice unit cells as a 2x2x1
periodic arrangement: four sites, one x/y/z edge each (12 spins).  With
period one along z the two z-edges of a site coincide, so the six-spin
vertex constraint counts that edge twice (the only parity-consistent
option), and ring exchange survives only on the four xy plaquettes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    Operator,
    SpaceDescriptor,
    build_space,
    pauli_string,
)
from .liouville import LindbladModel

S_PLUS_LOCAL = np.array([[0, 0], [1, 0]], dtype=complex)    # |1><0|
S_MINUS_LOCAL = S_PLUS_LOCAL.T.conj()


# ------------------------------------------------------------ toric code


@dataclass(frozen=True)
class ToricLattice:
    """Spins on the edges of an Lx x Ly periodic square lattice."""

    lx: int
    ly: int

    @property
    def n_spins(self):
        return 2 * self.lx * self.ly

    def h_edge(self, x, y):
        return (y % self.ly) * self.lx + (x % self.lx)

    def v_edge(self, x, y):
        return self.lx * self.ly + (y % self.ly) * self.lx + (x % self.lx)

    def plaquette(self, x, y):
        return (self.h_edge(x, y), self.v_edge(x + 1, y),
                self.h_edge(x, y + 1), self.v_edge(x, y))

    def vertex(self, x, y):
        return (self.h_edge(x, y), self.h_edge(x - 1, y),
                self.v_edge(x, y), self.v_edge(x, y - 1))

    @property
    def plaquettes(self):
        return [self.plaquette(x, y) for y in range(self.ly)
                for x in range(self.lx)]

    @property
    def vertices(self):
        return [self.vertex(x, y) for y in range(self.ly)
                for x in range(self.lx)]


@dataclass
class ToricModel:
    lattice: ToricLattice
    space: SpaceDescriptor
    model: LindbladModel
    plaquette_ops: list            # A_p (X products)
    vertex_ops: list               # B_s (Z products)
    e0: float


def toric_model(lat: ToricLattice, e0: float = 1.0, kappa: float = 1.0,
                flip_schedule="all") -> ToricModel:
    """Toric-code Hamiltonian with anyon-annihilating cooling channels.

    flip_schedule 'all' attaches one channel per (stabilizer, member spin)
    at rate kappa/4, the continuous analog of cycling the flipped spin.
    ('fixed', k) keeps only the k-th member.
    """
    space = build_space("spin", lat.n_spins)
    a_ops = [pauli_string(space, [(e, "x") for e in p]) for p in lat.plaquettes]
    b_ops = [pauli_string(space, [(e, "z") for e in v]) for v in lat.vertices]
    h = -e0 * (sum(o.dense() for o in a_ops) + sum(o.dense() for o in b_ops))

    def members(stab_edges):
        if flip_schedule == "all":
            return [(e, kappa / len(stab_edges)) for e in stab_edges]
        kind, k = flip_schedule
        if kind != "fixed":
            raise ValueError(f"unknown flip schedule {flip_schedule!r}")
        return [(stab_edges[k], kappa)]

    eye = np.eye(space.dim)
    channels = []
    for edges, stab in zip(lat.plaquettes, a_ops):
        for e, rate in members(edges):
            flip = pauli_string(space, [(e, "z")]).dense()
            channels.append((rate, Operator(
                0.5 * flip @ (eye - stab.dense()), space, space)))
    for edges, stab in zip(lat.vertices, b_ops):
        for e, rate in members(edges):
            flip = pauli_string(space, [(e, "x")]).dense()
            channels.append((rate, Operator(
                0.5 * flip @ (eye - stab.dense()), space, space)))
    model = LindbladModel(space, Operator(h, space, space, hermitian=True),
                          channels)
    return ToricModel(lat, space, model, a_ops, b_ops, e0)


def anyon_density(state, tm: ToricModel):
    """(magnetic, electric) anyon densities of a vector or density matrix."""
    def mean(ops):
        vals = [op.expect(state).real for op in ops]
        return float(np.mean([(1 - v) / 2 for v in vals]))
    return mean(tm.plaquette_ops), mean(tm.vertex_ops)


def toric_ground_energy(tm: ToricModel) -> float:
    lat = tm.lattice
    return -tm.e0 * (lat.lx * lat.ly * 2)


def lattice_description(lat) -> str:
    """Plain-text adjacency lists (one stabilizer per line) for fixtures.

    Works for ToricLattice (plaquette/vertex lines) and LgtCluster
    (octahedron lines carry edge:weight pairs, plaquette lines the
    ordered ring-exchange cycle).
    """
    lines = [f"# {type(lat).__name__}"]
    if isinstance(lat, ToricLattice):
        lines.append(f"spins {lat.n_spins}")
        for p in lat.plaquettes:
            lines.append("plaquette " + " ".join(str(e) for e in p))
        for v in lat.vertices:
            lines.append("vertex " + " ".join(str(e) for e in v))
    elif isinstance(lat, LgtCluster):
        lines.append(f"spins {lat.n_spins}")
        for o in lat.octahedra:
            lines.append("octahedron "
                         + " ".join(f"{e}:{w}" for e, w in o))
        for p in lat.plaquettes:
            lines.append("plaquette " + " ".join(str(e) for e in p))
    else:
        raise TypeError(f"no description format for {type(lat).__name__}")
    return "\n".join(lines) + "\n"


def parse_lattice_description(text: str) -> dict:
    """Inverse of lattice_description, as plain adjacency data."""
    out = {"plaquettes": [], "vertices": [], "octahedra": [], "spins": 0}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        head, *rest = line.split()
        if head == "spins":
            out["spins"] = int(rest[0])
        elif head in ("plaquette", "vertex"):
            key = "plaquettes" if head == "plaquette" else "vertices"
            out[key].append(tuple(int(e) for e in rest))
        elif head == "octahedron":
            out["octahedra"].append([
                (int(e.split(":")[0]), int(e.split(":")[1])) for e in rest])
        else:
            raise ValueError(f"unknown lattice line {head!r}")
    return out


# ------------------------------------------------- U(1) lattice gauge


@dataclass(frozen=True)
class LgtCluster:
    """2x2x1 periodic cubic cluster: 12 edge spins, 4 site constraints."""

    u: float = 1.0
    j: float = 1.0
    v: float = 1.0

    @property
    def n_spins(self):
        return 12

    @staticmethod
    def x_edge(x, y):
        return (y % 2) * 2 + (x % 2)

    @staticmethod
    def y_edge(x, y):
        return 4 + (y % 2) * 2 + (x % 2)

    @staticmethod
    def z_edge(x, y):
        return 8 + (y % 2) * 2 + (x % 2)

    @property
    def octahedra(self):
        """Per site: [(edge, weight)] with the z edge doubled by periodicity."""
        out = []
        for y in range(2):
            for x in range(2):
                out.append([(self.x_edge(x, y), 1), (self.x_edge(x - 1, y), 1),
                            (self.y_edge(x, y), 1), (self.y_edge(x, y - 1), 1),
                            (self.z_edge(x, y), 2)])
        return out

    @property
    def plaquettes(self):
        """Ordered 4-cycles carrying the ring exchange."""
        return [(self.x_edge(x, y), self.y_edge(x + 1, y),
                 self.x_edge(x, y + 1), self.y_edge(x, y))
                for y in range(2) for x in range(2)]


class SectorSpace:
    """Duck-typed space for operators restricted to a constraint sector."""

    def __init__(self, dim, label=""):
        self.dim = dim
        self.kind = f"sector:{label}"


@dataclass
class LgtModel:
    cluster: LgtCluster
    space: SpaceDescriptor            # full 4096-dim register
    model: LindbladModel              # full-space model (sparse operators)
    constraint_ops: list              # S_o^z as sparse matrices
    ring_ops: list                    # B_p as sparse matrices
    constraint_indices: np.ndarray    # basis positions in the sector
    sector: SectorSpace
    sector_h: np.ndarray              # dense H restricted to the sector
    sector_ring_ops: list
    sector_model: LindbladModel

    def lift(self, vec_sector: np.ndarray) -> np.ndarray:
        full = np.zeros(self.space.dim, dtype=complex)
        full[self.constraint_indices] = vec_sector
        return full

    def restrict(self, vec_full: np.ndarray) -> np.ndarray:
        return vec_full[self.constraint_indices]

    def constraint_projector(self):
        d = self.space.dim
        diag = np.zeros(d)
        diag[self.constraint_indices] = 1.0
        return sp.diags(diag).tocsr()


def _ring_exchange_full(space, cycle):
    """S+ S- S+ S- + S- S+ S- S+ around an ordered 4-cycle, sparse."""
    def chain(ops):
        locals_ = [sp.identity(2, dtype=complex, format="csr")] * space.n_modes
        for e, loc in ops:
            locals_[e] = sp.csr_matrix(loc)
        out = sp.identity(1, dtype=complex, format="csr")
        for loc in locals_:
            out = sp.kron(out, loc, format="csr")
        return out

    e1, e2, e3, e4 = cycle
    term1 = chain([(e1, S_PLUS_LOCAL), (e2, S_MINUS_LOCAL),
                   (e3, S_PLUS_LOCAL), (e4, S_MINUS_LOCAL)])
    term2 = chain([(e1, S_MINUS_LOCAL), (e2, S_PLUS_LOCAL),
                   (e3, S_MINUS_LOCAL), (e4, S_PLUS_LOCAL)])
    return (term1 + term2).tocsr()


def lgt_model(cluster: LgtCluster, kappa: float = 1.0,
              flip_schedule="all") -> LgtModel:
    """Gauge-theory Hamiltonian, plaquette cooling channels and the
    constraint-sector restriction of both."""
    space = build_space("spin", cluster.n_spins)
    d = space.dim

    # constraint operators (diagonal)
    occ = np.array(space.occupations)                    # (4096, 12) of 0/1
    sz = 1 - 2 * occ                                     # +1 for occ 0
    s_o_diags = []
    for members in cluster.octahedra:
        diag = np.zeros(d)
        for e, w in members:
            diag += w * sz[:, e]
        s_o_diags.append(diag)
    constraint_ops = [sp.diags(diag.astype(complex)).tocsr()
                      for diag in s_o_diags]
    mask = np.ones(d, dtype=bool)
    for diag in s_o_diags:
        mask &= diag == 0
    constraint_indices = np.flatnonzero(mask)
    sector = SectorSpace(len(constraint_indices), "lgt")

    ring_ops = [_ring_exchange_full(space, cyc) for cyc in cluster.plaquettes]

    h_full = None
    for diag in s_o_diags:
        term = cluster.u * sp.diags((diag ** 2).astype(complex))
        h_full = term if h_full is None else h_full + term
    for bp in ring_ops:
        h_full = h_full - cluster.j * bp + cluster.v * (bp @ bp)
    h_full = h_full.tocsr()

    def flip_members(cycle):
        if flip_schedule == "all":
            return [(e, kappa / 4) for e in cycle]
        kind, k = flip_schedule
        if kind != "fixed":
            raise ValueError(f"unknown flip schedule {flip_schedule!r}")
        return [(cycle[k], kappa)]

    eye = sp.identity(d, dtype=complex, format="csr")
    channels = []
    zdiag = [sp.diags(sz[:, e].astype(complex)).tocsr() for e in range(12)]
    for cyc, bp in zip(cluster.plaquettes, ring_ops):
        pump = ((eye - bp) @ bp) * 0.5
        for e, rate in flip_members(cyc):
            channels.append((rate, Operator(zdiag[e] @ pump, space, space)))
    model = LindbladModel(
        space, Operator(h_full, space, space, hermitian=True), channels)

    idx = constraint_indices
    sector_h = np.asarray(h_full[np.ix_(idx, idx)].todense())
    sector_ring = [np.asarray(bp[np.ix_(idx, idx)].todense())
                   for bp in ring_ops]
    sector_channels = [
        (rate, Operator(np.asarray(c.mat[np.ix_(idx, idx)].todense()),
                        sector, sector))
        for rate, c in channels]
    sector_model = LindbladModel(
        sector, Operator(sector_h, sector, sector, hermitian=True),
        sector_channels)
    return LgtModel(cluster, space, model, constraint_ops, ring_ops,
                    constraint_indices, sector, sector_h, sector_ring,
                    sector_model)


def _sector_occupations(lgt: LgtModel):
    return [lgt.space.occupations[i] for i in lgt.constraint_indices]


def _flip_component(lgt: LgtModel):
    """Seed covering and its ring-exchange-connected component."""
    cluster = lgt.cluster
    occs = _sector_occupations(lgt)
    if not occs:
        raise ValueError("empty constraint sector")
    pos = {o: k for k, o in enumerate(occs)}

    def flips(o):
        out = []
        for cyc in cluster.plaquettes:
            pat = tuple(o[e] for e in cyc)
            if pat in ((0, 1, 0, 1), (1, 0, 1, 0)):
                new = list(o)
                for e in cyc:
                    new[e] = 1 - new[e]
                out.append(tuple(new))
        return out

    seed = next((o for o in occs if flips(o)), None)
    if seed is None:
        raise ValueError("no flippable covering in the constraint sector")
    component = {seed}
    stack = [seed]
    while stack:
        cur = stack.pop()
        for nxt in flips(cur):
            if nxt not in component:
                component.add(nxt)
                stack.append(nxt)
    return seed, component, pos


def seed_covering(lgt: LgtModel) -> np.ndarray:
    """A classical dimer covering with flippable plaquettes (full basis)."""
    seed, _, pos = _flip_component(lgt)
    vec = np.zeros(lgt.sector.dim, dtype=complex)
    vec[pos[seed]] = 1.0
    return lgt.lift(vec)


def dimer_condensate_reference(lgt: LgtModel) -> np.ndarray:
    """Equal-weight superposition over the flip-connected component of a
    seed covering; the cooled target at the Rokhsar-Kivelson point.

    Returned in the full register basis.  Equivalently the top eigenvector
    of sum_p B_p restricted to the constraint sector and seed component.
    """
    seed, component, pos = _flip_component(lgt)
    vec = np.zeros(lgt.sector.dim, dtype=complex)
    for o in component:
        vec[pos[o]] = 1.0
    vec /= np.linalg.norm(vec)
    return lgt.lift(vec)


def rk_hamiltonian_sector(lgt: LgtModel, j: Optional[float] = None,
                          v: Optional[float] = None) -> np.ndarray:
    j = lgt.cluster.j if j is None else j
    v = lgt.cluster.v if v is None else v
    h = np.zeros((lgt.sector.dim, lgt.sector.dim), dtype=complex)
    for bp in lgt.sector_ring_ops:
        h += -j * bp + v * (bp @ bp)
    return h


def lgt_adiabatic_ramp(lgt: LgtModel, phi: float, t_final: float = 10.0,
                       ramp=None):
    """Trotterized ramp of the Rokhsar-Kivelson term from the RK point.

    phi is the per-step phase J*dt.  Returns (times, trotter energies,
    exact instantaneous ground energies, final state in the sector).
    """
    from .digital import trotter_evolve

    j = lgt.cluster.j
    if ramp is None:
        def ramp(t):
            return max(lgt.cluster.v * (1 - t * j / 10.0), 0.0)
    n_steps = max(int(round(t_final * j / phi)), 1)
    psi0 = lgt.restrict(dimer_condensate_reference(lgt))

    terms = []
    for k, bp in enumerate(lgt.sector_ring_ops):
        terms.append((f"ring{k}", -j * bp, None))
        terms.append((f"rk{k}", bp @ bp, ramp))
    times, states, _ = trotter_evolve(terms, t_final, n_steps, psi0)

    energies = np.zeros(len(times))
    exact = np.zeros(len(times))
    for k, t in enumerate(times):
        h_t = rk_hamiltonian_sector(lgt, v=ramp(t))
        energies[k] = np.vdot(states[k], h_t @ states[k]).real
        exact[k] = np.linalg.eigvalsh(h_t)[0]
    return times, energies, exact, states[-1]
