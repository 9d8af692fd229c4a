"""Finite Hilbert spaces and the operators living on them.

Three kinds of spaces are supported:

* ``spin``    -- a register of qubits, dimension 2^n.
* ``boson``   -- lattice bosons with a per-site occupation cap ``n_max``,
  either the full product space or a fixed total-number sector.
* ``fermion`` -- fermionic modes, either the full Fock space (2^n) or a
  fixed-number sector of dimension C(n_modes, N).

Every space carries an explicit basis of occupation tuples in a single
canonical mode order (row-major over lattice sites, spin-down before
spin-up within a site).  All fermionic signs derive from that one order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

# Dense storage below this dimension, sparse above.  Exact solvers densify
# on demand; mat-vec paths accept either.
DENSE_CUTOFF = 1024

SIGMA = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)   # |0><1| with 0 = up
SIGMA_MINUS = SIGMA_PLUS.T.conj()


class SpaceError(ValueError):
    """Raised for inconsistent space specifications."""


def _boson_occupations(n_sites, n_particles, n_max):
    """All tuples with sum N and entries <= n_max, lexicographic order."""
    out = []

    def rec(prefix, remaining, sites_left):
        if sites_left == 0:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        for k in range(min(n_max, remaining) + 1):
            rec(prefix + [k], remaining - k, sites_left - 1)

    rec([], n_particles, n_sites)
    return out


@dataclass(frozen=True)
class SpaceDescriptor:
    """Indexed basis of a finite Hilbert space."""

    kind: str                       # 'spin' | 'boson' | 'fermion'
    n_modes: int
    n_max: int                      # per-mode cap (1 for spin/fermion)
    n_particles: Optional[int]      # fixed-number sector, None = full space
    occupations: tuple = field(repr=False)
    _index: dict = field(repr=False, hash=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.occupations)

    def index_of(self, occupation) -> int:
        return self._index[tuple(occupation)]

    def occupation_of(self, index: int):
        return self.occupations[index]

    def with_particles(self, n_particles: int) -> "SpaceDescriptor":
        """Sibling space with a different fixed particle number."""
        return build_space(self.kind, self.n_modes, n_max=self.n_max,
                           n_particles=n_particles)

    def basis_state(self, occupation) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index_of(occupation)] = 1.0
        return vec


def build_space(kind: str, n_modes: int, n_max: Optional[int] = None,
                n_particles: Optional[int] = None) -> SpaceDescriptor:
    """Construct a space descriptor with its enumerated basis.

    ``kind='spin'`` ignores n_max/n_particles.  For bosons n_max defaults
    to n_particles in fixed-number sectors and must be given otherwise.
    """
    if n_modes <= 0:
        raise SpaceError("n_modes must be positive")
    if kind == "spin":
        occ = list(itertools.product((0, 1), repeat=n_modes))
        n_max = 1
        n_particles = None
    elif kind == "fermion":
        n_max = 1
        if n_particles is None:
            occ = list(itertools.product((0, 1), repeat=n_modes))
        else:
            if not 0 <= n_particles <= n_modes:
                raise SpaceError(
                    f"fermion number {n_particles} outside [0, {n_modes}]")
            occ = []
            for positions in itertools.combinations(range(n_modes), n_particles):
                o = [0] * n_modes
                for p in positions:
                    o[p] = 1
                occ.append(tuple(o))
    elif kind == "boson":
        if n_particles is not None:
            if n_max is None:
                n_max = n_particles
            if n_max < 1:
                raise SpaceError("bosonic n_max must be >= 1")
            occ = _boson_occupations(n_modes, n_particles, n_max)
            if not occ:
                raise SpaceError("empty bosonic sector (N > n_sites*n_max)")
        else:
            if n_max is None or n_max < 1:
                raise SpaceError("bosonic n_max must be >= 1")
            occ = list(itertools.product(range(n_max + 1), repeat=n_modes))
    else:
        raise SpaceError(f"unknown space kind {kind!r}")
    index = {o: i for i, o in enumerate(occ)}
    return SpaceDescriptor(kind, n_modes, n_max, n_particles, tuple(occ), index)


def _sanity_dims(space):
    if space.kind == "spin":
        return 2 ** space.n_modes
    if space.kind == "fermion" and space.n_particles is not None:
        return comb(space.n_modes, space.n_particles)
    return space.dim


@dataclass
class Operator:
    """Matrix with its domain/codomain spaces and a tri-state hermitian flag.

    hermitian is True/False when known, None when not asserted.  Square
    operators have space_out == space_in.
    """

    mat: object                     # ndarray or scipy sparse
    space_out: SpaceDescriptor
    space_in: SpaceDescriptor
    hermitian: Optional[bool] = None

    def __post_init__(self):
        rows, cols = self.mat.shape
        if rows != self.space_out.dim or cols != self.space_in.dim:
            raise SpaceError("operator shape does not match its spaces")
        if self.hermitian and hermiticity_defect(self.mat) >= 1e-12:
            raise SpaceError("operator flagged hermitian is not")

    @property
    def space(self):
        return self.space_in

    @property
    def dim(self):
        return self.space_in.dim

    def dense(self) -> np.ndarray:
        if sp.issparse(self.mat):
            return np.asarray(self.mat.todense())
        return self.mat

    def sparse(self):
        if sp.issparse(self.mat):
            return self.mat.tocsr()
        return sp.csr_matrix(self.mat)

    def dag(self) -> "Operator":
        return Operator(self.mat.conj().T.tocsr() if sp.issparse(self.mat)
                        else self.mat.conj().T,
                        self.space_in, self.space_out, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            if other.space_out is not self.space_in and \
                    other.space_out.dim != self.space_in.dim:
                raise SpaceError("operator composition dimension mismatch")
            return Operator(self.mat @ other.mat, self.space_out,
                            other.space_in)
        return self.mat @ other

    def __add__(self, other):
        o = other.mat if isinstance(other, Operator) else other
        herm = self.hermitian if isinstance(other, Operator) and \
            self.hermitian and other.hermitian else None
        return Operator(self.mat + o, self.space_out, self.space_in, herm)

    def __sub__(self, other):
        o = other.mat if isinstance(other, Operator) else other
        return Operator(self.mat - o, self.space_out, self.space_in)

    def __mul__(self, scalar):
        return Operator(self.mat * scalar, self.space_out, self.space_in)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def expect(self, state: np.ndarray) -> complex:
        """<psi|A|psi> for a vector, tr(A rho) for a square matrix."""
        if state.ndim == 1:
            return complex(np.vdot(state, self.mat @ state))
        prod = self.mat @ state
        return complex(prod.diagonal().sum() if sp.issparse(prod)
                       else np.trace(prod))


def as_matrix(op):
    """Accept an Operator or a bare matrix and return the matrix."""
    return op.mat if isinstance(op, Operator) else op


def _maybe_dense(mat, dim):
    if dim <= DENSE_CUTOFF:
        return np.asarray(mat.todense()) if sp.issparse(mat) else mat
    return mat.tocsr() if sp.issparse(mat) else sp.csr_matrix(mat)


def _kron_chain(locals_):
    out = sp.identity(1, dtype=complex, format="csr")
    for loc in locals_:
        out = sp.kron(out, sp.csr_matrix(loc), format="csr")
    return out


def site_operator(space: SpaceDescriptor, local: np.ndarray, site: int,
                  hermitian: Optional[bool] = None) -> Operator:
    """Lift a single-mode operator to the full product space."""
    if space.n_particles is not None:
        raise SpaceError("site_operator needs a full product space")
    d_loc = space.n_max + 1
    locals_ = [np.eye(d_loc)] * space.n_modes
    locals_[site] = local
    mat = _maybe_dense(_kron_chain(locals_), space.dim)
    return Operator(mat, space, space, hermitian)


def pauli_string(space: SpaceDescriptor, spec: Sequence) -> Operator:
    """Tensor product of Pauli matrices at the named sites, identity elsewhere.

    spec is an iterable of (site, axis) pairs with axis in 'xyz'.
    """
    if space.kind != "spin":
        raise SpaceError("pauli_string requires a spin register")
    sites = [s for s, _ in spec]
    if len(set(sites)) != len(sites):
        raise SpaceError("repeated site in pauli string")
    locals_ = [SIGMA["i"]] * space.n_modes
    for site, axis in spec:
        if not 0 <= site < space.n_modes:
            raise SpaceError(f"site {site} out of range")
        locals_[site] = SIGMA[axis]
    mat = _maybe_dense(_kron_chain(locals_), space.dim)
    return Operator(mat, space, space, hermitian=True)


def identity(space: SpaceDescriptor) -> Operator:
    mat = np.eye(space.dim, dtype=complex) if space.dim <= DENSE_CUTOFF \
        else sp.identity(space.dim, dtype=complex, format="csr")
    return Operator(mat, space, space, hermitian=True)


def _fermion_sign(occ, mode):
    return -1.0 if sum(occ[:mode]) % 2 else 1.0


def mode_operator(space: SpaceDescriptor, kind: str, mode: int) -> Operator:
    """Creation/annihilation operator for one bosonic or fermionic mode.

    On full spaces the result is square.  On fixed-number sectors it is the
    rectangular block mapping into the adjacent-number sibling space;
    number-conserving composites are built by chaining these blocks.
    """
    if space.kind == "spin":
        raise SpaceError("mode operators are for boson/fermion spaces")
    if not 0 <= mode < space.n_modes:
        raise SpaceError(f"mode {mode} out of range")
    if kind not in ("create", "annihilate"):
        raise SpaceError(f"unknown mode operator kind {kind!r}")

    if space.n_particles is None:
        return _full_space_mode_operator(space, kind, mode)

    delta = 1 if kind == "create" else -1
    target = space.with_particles(space.n_particles + delta)
    rows, cols, vals = [], [], []
    for j, occ in enumerate(space.occupations):
        n = occ[mode]
        if kind == "annihilate":
            if n == 0:
                continue
            new = occ[:mode] + (n - 1,) + occ[mode + 1:]
            amp = np.sqrt(n) if space.kind == "boson" else _fermion_sign(occ, mode)
        else:
            if n >= space.n_max:
                continue
            new = occ[:mode] + (n + 1,) + occ[mode + 1:]
            amp = np.sqrt(n + 1) if space.kind == "boson" \
                else _fermion_sign(occ, mode)
        rows.append(target.index_of(new))
        cols.append(j)
        vals.append(amp)
    mat = sp.coo_matrix((vals, (rows, cols)),
                        shape=(target.dim, space.dim), dtype=complex)
    return Operator(_maybe_dense(mat, max(target.dim, space.dim)),
                    target, space)


def _full_space_mode_operator(space, kind, mode):
    if space.kind == "fermion":
        # Jordan-Wigner: sign string over all modes preceding `mode`.
        ann = np.array([[0, 1], [0, 0]], dtype=complex)   # |0><1|, 1 = filled
        zloc = np.array([[1, 0], [0, -1]], dtype=complex)
        locals_ = [zloc] * mode + [ann] + \
            [np.eye(2, dtype=complex)] * (space.n_modes - mode - 1)
        mat = _kron_chain(locals_)
    else:
        d = space.n_max + 1
        ann = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
        locals_ = [np.eye(d, dtype=complex)] * space.n_modes
        locals_[mode] = ann
        mat = _kron_chain(locals_)
    if kind == "create":
        mat = mat.conj().T
    return Operator(_maybe_dense(mat.tocsr(), space.dim), space, space)


def number_operator(space: SpaceDescriptor, mode: Optional[int] = None) -> Operator:
    """Occupation of one mode, or total number when mode is None."""
    occ = np.array(space.occupations)
    diag = occ[:, mode] if mode is not None else occ.sum(axis=1)
    if space.dim <= DENSE_CUTOFF:
        mat = np.diag(diag.astype(complex))
    else:
        mat = sp.diags(diag.astype(complex)).tocsr()
    return Operator(mat, space, space, hermitian=True)


def hermiticity_defect(mat) -> float:
    if sp.issparse(mat):
        diff = (mat - mat.conj().T).tocoo()
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0
    return float(np.abs(mat - mat.conj().T).max())
