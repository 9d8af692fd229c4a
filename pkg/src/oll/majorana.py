"""Gaussian fermionic Liouvillians in the Majorana representation.

Mode i carries two hermitian quadratures c[2i] = i(a_i - a_i+) and
c[2i+1] = a_i + a_i+, so a_i = (c[2i+1] - i c[2i]) / 2.  A linear jump
operator j = l^T c is stored through its coefficient vector l; the
damping matrix X = 2 Re M and fluctuation matrix Y = 4 Im M derive from
M = sum_b rate_b l_b l_b+.  The covariance Gamma_ab = (i/2) <[c_a, c_b]>
obeys dGamma/dt = -{X, Gamma} + Y.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .hilbert import Operator, build_space, mode_operator
from .liouville import LindbladModel


@dataclass
class MajoranaSystem:
    n_modes: int
    lindblad_vectors: list                 # complex 2N vectors
    rates: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.rates is None:
            self.rates = np.ones(len(self.lindblad_vectors))
        self.lindblad_vectors = [np.asarray(v, dtype=complex)
                                 for v in self.lindblad_vectors]
        for v in self.lindblad_vectors:
            if v.shape != (2 * self.n_modes,):
                raise ValueError("lindblad vector length must be 2*n_modes")

    @property
    def m_matrix(self) -> np.ndarray:
        n2 = 2 * self.n_modes
        m = np.zeros((n2, n2), dtype=complex)
        for rate, l in zip(self.rates, self.lindblad_vectors):
            m += rate * np.outer(l, l.conj())
        return m

    @property
    def damping_matrix(self) -> np.ndarray:
        x = 2 * self.m_matrix.real
        return (x + x.T) / 2

    @property
    def fluctuation_matrix(self) -> np.ndarray:
        y = 4 * self.m_matrix.imag
        return (y - y.T) / 2


def wire_jumps(n_modes: int, theta: float, boundary: str = "open",
               kappa: float = 1.0) -> MajoranaSystem:
    """Deformed pairing-wire jump operators
    j_i = (sin t (a_i+ - a_{i+1}) + cos t (a_i + a_{i+1}+)) / sqrt(2);
    t = pi/4 is the undeformed wire.  Open wires carry N-1 operators,
    periodic ones N.
    """
    if n_modes < 2:
        raise ValueError("need at least two modes")
    s, c = np.sin(theta), np.cos(theta)
    n_ops = n_modes - 1 if boundary == "open" else n_modes
    vectors = []
    for i in range(n_ops):
        l = np.zeros(2 * n_modes, dtype=complex)
        nxt = (i + 1) % n_modes
        z = 1 / (2 * np.sqrt(2))
        l[2 * i] = 1j * (s - c) * z            # y_i
        l[2 * i + 1] = (s + c) * z             # x_i
        l[2 * nxt] = 1j * (s + c) * z          # y_{i+1}
        l[2 * nxt + 1] = (c - s) * z           # x_{i+1}
        vectors.append(l)
    return MajoranaSystem(n_modes, vectors, kappa * np.ones(n_ops))


def damping_spectrum(sys: MajoranaSystem) -> np.ndarray:
    return np.linalg.eigvalsh(sys.damping_matrix)


def evolve_covariance(sys: MajoranaSystem, gamma0: np.ndarray, t: float,
                      dt: float) -> np.ndarray:
    """RK4 integration of dGamma = -{X, Gamma} + Y; antisymmetry is
    re-imposed every step and i*Gamma eigenvalues stay within [-1, 1]."""
    x = sys.damping_matrix
    y = sys.fluctuation_matrix
    g = np.array(gamma0, dtype=float)
    if np.abs(g + g.T).max() > 1e-10:
        raise ValueError("initial covariance must be antisymmetric")

    def rhs(m):
        return -(x @ m + m @ x) + y

    steps = max(int(round(t / dt)), 1)
    h = t / steps
    for _ in range(steps):
        k1 = rhs(g)
        k2 = rhs(g + h / 2 * k1)
        k3 = rhs(g + h / 2 * k2)
        k4 = rhs(g + h * k3)
        g = g + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        g = (g - g.T) / 2
    top = np.abs(np.linalg.eigvalsh(1j * g)).max()
    if top > 1 + 1e-8:
        raise RuntimeError(f"covariance left the physical ball: {top:.3e}")
    return g


def steady_covariance(sys: MajoranaSystem, gamma0: Optional[np.ndarray] = None,
                      kernel_tol: float = 1e-10) -> np.ndarray:
    """Solve {X, G} = Y on the complement of ker X.

    The kernel block (undamped edge sector) is not fixed by the equation;
    it is carried over from gamma0's projection (zero when absent).
    """
    x = sys.damping_matrix
    y = sys.fluctuation_matrix
    evals, q = np.linalg.eigh(x)
    yt = q.T @ y @ q
    denom = evals[:, None] + evals[None, :]
    gt = np.zeros_like(yt)
    solvable = denom > kernel_tol
    gt[solvable] = yt[solvable] / denom[solvable]
    kernel = evals < kernel_tol
    if kernel.any():
        if np.abs(yt[np.ix_(kernel, kernel)]).max() > 1e-9:
            raise RuntimeError("fluctuations act inside ker X; no steady state")
        if gamma0 is not None:
            g0t = q.T @ gamma0 @ q
            gt[np.ix_(kernel, kernel)] = g0t[np.ix_(kernel, kernel)]
    g = q @ gt @ q.T
    return (g - g.T) / 2


def steady_residual(sys: MajoranaSystem, gamma: np.ndarray) -> float:
    x = sys.damping_matrix
    return float(np.abs(x @ gamma + gamma @ x - sys.fluctuation_matrix).max())


# ------------------------------------------------------------ Bloch field


@dataclass
class BlochField:
    k_grid: np.ndarray
    n_vectors: np.ndarray              # (K, 3) real
    chiral_axis: Optional[np.ndarray]  # unit 3-vector with a.n_k = 0
    chiral_residual: float

    @property
    def purity_gap(self) -> float:
        return float(np.linalg.norm(self.n_vectors, axis=1).min())


def _mode_vectors(n_sites: int, k: float):
    """Majorana coefficient vector of the momentum annihilation operator."""
    r = np.arange(n_sites)
    w = np.zeros(2 * n_sites, dtype=complex)
    phase = np.exp(-1j * k * r) / (2 * np.sqrt(n_sites))
    w[0::2] = -1j * phase                 # y_r components
    w[1::2] = phase                       # x_r components
    return w


def bloch_field(theta: float, k_grid: Optional[np.ndarray] = None,
                n_sites: int = 64, kappa: float = 1.0) -> BlochField:
    """Even-parity Bloch vectors n_k of the periodic wire's steady state.

    For each momentum pair (k, -k) the steady Gaussian state is reduced to
    the two-dimensional even sector {|vac>, pair-created}, whose traceless
    part defines n_k.
    """
    if k_grid is None:
        k_grid = -np.pi + 2 * np.pi * np.arange(n_sites) / n_sites
    else:
        k_grid = np.asarray(k_grid)
        n_sites = len(k_grid)
    sys = wire_jumps(n_sites, theta, boundary="periodic", kappa=kappa)
    gamma = steady_covariance(sys, gamma0=np.zeros((2 * n_sites,) * 2))
    cc = np.eye(2 * n_sites, dtype=complex) - 1j * gamma   # <c_a c_b>

    def pair(v1, v2):
        return v1 @ cc @ v2

    sigma = [np.array([[0, 1], [1, 0]], dtype=complex),
             np.array([[0, -1j], [1j, 0]], dtype=complex),
             np.array([[1, 0], [0, -1]], dtype=complex)]

    n_vecs = np.zeros((len(k_grid), 3))
    for idx, k in enumerate(k_grid):
        w_k = _mode_vectors(n_sites, k)
        w_mk = _mode_vectors(n_sites, -k)
        a_k, adag_k = w_k, w_k.conj()
        a_mk, adag_mk = w_mk, w_mk.conj()

        def wick4(o1, o2, o3, o4):
            return (pair(o1, o2) * pair(o3, o4)
                    - pair(o1, o3) * pair(o2, o4)
                    + pair(o1, o4) * pair(o2, o3))

        n_k = pair(adag_k, a_k)
        n_mk = pair(adag_mk, a_mk)
        nn = wick4(adag_k, a_k, adag_mk, a_mk)
        rho11 = nn
        rho00 = 1 - n_k - n_mk + nn
        rho01 = pair(adag_k, adag_mk)          # <|pair><vac|>
        block = np.array([[rho00, rho01],
                          [np.conj(rho01), rho11]])
        tr = block[0, 0] + block[1, 1]
        block = block / tr
        for j in range(3):
            n_vecs[idx, j] = np.trace(sigma[j] @ block).real

    u, s, vh = np.linalg.svd(n_vecs, full_matrices=True)
    axis = vh[-1]
    # canonical orientation: largest-magnitude component positive
    lead = np.argmax(np.abs(axis))
    if axis[lead] < 0:
        axis = -axis
    residual = float(np.abs(n_vecs @ axis).max())
    if residual > 1e-6:
        axis = None
    return BlochField(k_grid, n_vecs, axis, residual)


@dataclass
class WindingResult:
    nu: Optional[int]
    purity_gap: float
    raw_angle: float = 0.0

    @property
    def defined(self):
        return self.nu is not None


def winding_number(fld: BlochField, gap_tol: float = 1e-6) -> WindingResult:
    """Integer revolution count of n_k in the plane orthogonal to the
    chiral axis; undefined when the purity gap closes."""
    gap = fld.purity_gap
    if gap < gap_tol or fld.chiral_axis is None:
        return WindingResult(None, gap)
    a = fld.chiral_axis
    # right-handed frame (u, v, a): a = u x v
    trial = np.array([1.0, 0.0, 0.0])
    if abs(trial @ a) > 0.9:
        trial = np.array([0.0, 1.0, 0.0])
    u = trial - (trial @ a) * a
    u /= np.linalg.norm(u)
    v = np.cross(a, u)
    if np.abs(np.cross(u, v) - a).max() > 1e-10:
        v = -v
    hat = fld.n_vectors / np.linalg.norm(fld.n_vectors, axis=1)[:, None]
    ang = np.arctan2(hat @ v, hat @ u)
    closed = np.append(ang, ang[0])
    deltas = np.diff(closed)
    deltas = (deltas + np.pi) % (2 * np.pi) - np.pi
    total = deltas.sum() / (2 * np.pi)
    nu = int(np.rint(total))
    if abs(total - nu) > 1e-6:
        return WindingResult(None, gap, float(total))
    return WindingResult(nu, gap, float(total))


def theta_scan(thetas: Sequence[float], n_sites: int = 64):
    """(theta, nu or nan, purity gap, damping gap) rows."""
    rows = []
    for th in thetas:
        fld = bloch_field(th, n_sites=n_sites)
        res = winding_number(fld)
        damp = damping_spectrum(wire_jumps(n_sites, th, "periodic")).min()
        rows.append((th, np.nan if res.nu is None else res.nu,
                     res.purity_gap, damp))
    return rows


# ----------------------------------------------------- dense Fock space


def majorana_matrices(n_modes: int):
    """Dense Jordan-Wigner Majorana matrices on the 2^N Fock space."""
    space = build_space("fermion", n_modes)
    out = []
    for i in range(n_modes):
        a = mode_operator(space, "annihilate", i).dense()
        out.append(1j * (a - a.conj().T))     # y_i = c[2i]
        out.append(a + a.conj().T)            # x_i = c[2i+1]
    return space, out


def braiding_unitary(i: int, j: int, n_modes: int) -> Operator:
    """B_ij = exp((pi/4) gamma_i gamma_j) on the dense Fock space."""
    if i == j:
        raise ValueError("braiding needs two distinct Majorana indices")
    space, gammas = majorana_matrices(n_modes)
    g = gammas[i] @ gammas[j]
    mat = scipy.linalg.expm((np.pi / 4) * g)
    defect = np.abs(mat @ mat.conj().T - np.eye(space.dim)).max()
    if defect > 1e-12:
        raise RuntimeError(f"braiding unitary defect {defect:.2e}")
    return Operator(mat, space, space)


def number_conserving_jumps(n_sites: int, kappa: float = 1.0,
                            boundary: str = "open") -> LindbladModel:
    """Quartic pairing channels J_i = C_i+ A_i with
    A_i = (a_i - a_{i+1})/2 and C_i+ = (a_i+ + a_{i+1}+)/2 on the full
    Fock space (exact checks only; dimension 2^N)."""
    if 2 ** n_sites > 2 ** 14:
        raise ValueError("Fock-space cap 2^14 exceeded")
    space = build_space("fermion", n_sites)
    ann = [mode_operator(space, "annihilate", m) for m in range(n_sites)]
    n_ops = n_sites - 1 if boundary == "open" else n_sites
    channels = []
    for i in range(n_ops):
        nxt = (i + 1) % n_sites
        a_part = 0.5 * (ann[i].dense() - ann[nxt].dense())
        c_part = 0.5 * (ann[i].dense() + ann[nxt].dense()).conj().T
        channels.append((kappa, Operator(c_part @ a_part, space, space)))
    return LindbladModel(space, None, channels)


def fixed_phase_jump(n_sites: int, i: int) -> np.ndarray:
    """j_i = C_i+ + A_i on the Fock space (equals the wire jump at
    theta = pi/4)."""
    space = build_space("fermion", n_sites)
    a_i = mode_operator(space, "annihilate", i).dense()
    a_n = mode_operator(space, "annihilate", i + 1).dense()
    return 0.5 * (a_i.conj().T + a_n.conj().T) + 0.5 * (a_i - a_n)


def kitaev_wire_hamiltonian(n_modes: int, j: float = 1.0,
                            boundary: str = "open") -> np.ndarray:
    """i J sum_bonds c[2i+1] c[2i+2] on the dense Fock space (the
    J = |Delta|, mu = 0 pairing wire)."""
    space, gammas = majorana_matrices(n_modes)
    h = np.zeros((space.dim, space.dim), dtype=complex)
    n_bonds = n_modes - 1 if boundary == "open" else n_modes
    for i in range(n_bonds):
        nxt = (i + 1) % n_modes
        h += 1j * j * gammas[2 * i + 1] @ gammas[2 * nxt]
    return h


def covariance_from_state(psi: np.ndarray, gammas) -> np.ndarray:
    """Gamma_ab = (i/2) <[c_a, c_b]> of a Fock-space vector."""
    n2 = len(gammas)
    g = np.zeros((n2, n2))
    for a in range(n2):
        va = gammas[a] @ psi
        for b in range(a + 1, n2):
            val = 1j * np.vdot(va, gammas[b] @ psi)
            g[a, b] = val.real
            g[b, a] = -val.real
    return g
