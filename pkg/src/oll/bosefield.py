"""Driven-dissipative Bose-Hubbard: exact small-system pair-locking
channels, Gutzwiller mean-field dynamics (homogeneous and real-space),
the analytic condensate fraction, adiabatically-eliminated linear
response, and the dynamical-instability/charge-density-wave machinery.

The mean-field dissipator couples a site to its neighbors through the
operator vector A = (1, b+, b, n) and the neighbor correlation matrix
Gamma^{rs} = sigma^r sigma^s <A^{(5-s)+} A^{(5-r)}>, sigma = (-1,-1,1,1),
which is the site-factorized form of the pair channels
c_ij = (b_i+ + b_j+)(b_i - b_j).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .hilbert import Operator, build_space, mode_operator
from .liouville import LindbladModel


@dataclass(frozen=True)
class BoseParams:
    j: float = 0.0          # hopping, units of kappa
    u: float = 0.0          # onsite interaction
    mu: float = 0.0         # chemical potential
    n: float = 1.0          # target filling
    z: int = 4              # coordination number (homogeneous mode)
    kappa: float = 1.0      # reference dissipative rate
    n_max: int = 6          # local occupation cutoff

    @property
    def u_tilde(self):
        return self.u / (4 * self.kappa * self.z)

    @property
    def j_tilde(self):
        return self.j / (4 * self.kappa)


# ---------------------------------------------------------- exact (small)


def bec_state(n_sites: int, n_particles: int) -> np.ndarray:
    """(sum_i b_i+ / sqrt(M))^N |vac> / sqrt(N!), normalized."""
    vec = None
    for k in range(n_particles):
        space = build_space("boson", n_sites, n_max=n_particles,
                            n_particles=k)
        if vec is None:
            vec = np.zeros(space.dim, dtype=complex)
            vec[space.index_of((0,) * n_sites)] = 1.0
        creator = None
        for i in range(n_sites):
            block = mode_operator(space, "create", i).mat
            creator = block if creator is None else creator + block
        vec = creator @ vec
    return vec / np.linalg.norm(vec)


def bec_jump_ops(n_sites: int, n_particles: int, kappa: float = 1.0,
                 hermitian_variant: bool = False) -> LindbladModel:
    """Phase-locking pair channels c_ij = (b_i+ + b_j+)(b_i - b_j) on a
    ring; the hermitian recycling variant (b_i+ - b_j+)(b_i - b_j)
    dephases instead of pumping."""
    space = build_space("boson", n_sites, n_max=n_particles,
                        n_particles=n_particles)
    lower = space.with_particles(n_particles - 1)
    ann = [mode_operator(space, "annihilate", i).mat for i in range(n_sites)]
    cre = [mode_operator(lower, "create", i).mat for i in range(n_sites)]
    channels = []
    for i in range(n_sites):
        jn = (i + 1) % n_sites
        sign = -1.0 if hermitian_variant else 1.0
        recycle = cre[i] + sign * cre[jn]
        drain = ann[i] - ann[jn]
        channels.append((kappa, Operator(recycle @ drain, space, space)))
    return LindbladModel(space, None, channels)


# ------------------------------------------------------------ mean field


@lru_cache(maxsize=8)
def local_ops(n_max: int):
    d = n_max + 1
    b = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    bdag = b.conj().T
    nmat = bdag @ b
    a_ops = [np.eye(d, dtype=complex), bdag, b, nmat]
    sigma = np.array([-1.0, -1.0, 1.0, 1.0])
    # trace kernels: K[r,s] = A^{(3-s)+} A^{(3-r)} (0-based)
    ktr = np.zeros((4, 4, d, d), dtype=complex)
    adag_a = np.zeros((4, 4, d, d), dtype=complex)
    for r in range(4):
        for s in range(4):
            ktr[r, s] = a_ops[3 - s].conj().T @ a_ops[3 - r]
            adag_a[s, r] = a_ops[s].conj().T @ a_ops[r]
    return b, bdag, nmat, a_ops, sigma, ktr, adag_a


@lru_cache(maxsize=8)
def _dissipator_superops(n_max: int):
    """kron-form bracket pieces for the single-site fast path (row-major
    vec convention)."""
    d = n_max + 1
    _, _, _, a_ops, _, _, _ = local_ops(n_max)
    eye = np.eye(d, dtype=complex)
    stack = np.zeros((4, 4, d * d, d * d), dtype=complex)
    for r in range(4):
        for s in range(4):
            asr = a_ops[s].conj().T @ a_ops[r]
            stack[r, s] = (2 * np.kron(a_ops[r], a_ops[s].conj())
                           - np.kron(asr, eye) - np.kron(eye, asr.T))
    return stack


def coherent_local(n_max: int, alpha: complex) -> np.ndarray:
    d = n_max + 1
    from math import factorial
    amps = np.array([alpha ** m / np.sqrt(factorial(m)) for m in range(d)],
                    dtype=complex)
    amps *= np.exp(-abs(alpha) ** 2 / 2)
    amps /= np.linalg.norm(amps)
    return np.outer(amps, amps.conj())


def thermal_local(n_max: int, filling: float) -> np.ndarray:
    m = np.arange(n_max + 1)
    p = filling ** m / (filling + 1) ** (m + 1)
    p /= p.sum()
    return np.diag(p).astype(complex)


@dataclass
class GutzwillerField:
    """Per-site density matrices with an adjacency rule.

    geometry 'homogeneous' treats a single site coupled to z copies of
    itself; 'ring' couples site l to l+-1.
    """

    rhos: np.ndarray              # (L, d, d)
    params: BoseParams
    geometry: str = "homogeneous"

    def __post_init__(self):
        self.rhos = np.asarray(self.rhos, dtype=complex)
        if self.rhos.ndim == 2:
            self.rhos = self.rhos[None]

    @property
    def n_sites(self):
        return self.rhos.shape[0]

    @property
    def order_parameter(self):
        b = local_ops(self.params.n_max)[0]
        return np.einsum("lij,ji->l", self.rhos, b)

    @property
    def filling(self):
        nmat = local_ops(self.params.n_max)[2]
        return np.einsum("lij,ji->l", self.rhos, nmat).real


def homogeneous_field(params: BoseParams, condensed: bool = True,
                      ) -> GutzwillerField:
    if condensed:
        rho = coherent_local(params.n_max, np.sqrt(params.n))
    else:
        rho = thermal_local(params.n_max, params.n)
    return GutzwillerField(rho[None], params, "homogeneous")


def _gamma_matrices(rhos, params):
    """(L,4,4) neighbor correlation matrices."""
    _, _, _, _, sigma, ktr, _ = local_ops(params.n_max)
    c = np.einsum("lij,rsji->lrs", rhos, ktr, optimize=True)
    return c * sigma[None, :, None] * sigma[None, None, :]


def gutzwiller_rhs(fld: GutzwillerField, mu: Optional[float] = None,
                   check_truncation: bool = False) -> np.ndarray:
    """Site-factorized equation of motion d rho_l / dt."""
    p = fld.params
    mu = p.mu if mu is None else mu
    b, bdag, nmat, a_ops, sigma, ktr, adag_a = local_ops(p.n_max)
    rhos = fld.rhos
    psi = np.einsum("lij,ji->l", rhos, b)

    gam = _gamma_matrices(rhos, p)
    if fld.geometry == "homogeneous":
        gam_tot = p.z * gam
        psi_nbr = p.z * psi
    elif fld.geometry == "ring":
        gam_tot = np.roll(gam, 1, axis=0) + np.roll(gam, -1, axis=0)
        psi_nbr = np.roll(psi, 1) + np.roll(psi, -1)
    else:
        raise ValueError(f"unknown geometry {fld.geometry!r}")

    # local Hamiltonian: -J (psi_nbr b+ + h.c.) - mu n + U/2 n(n-1)
    diag_part = -mu * nmat + 0.5 * p.u * (nmat @ nmat - nmat)
    out = np.empty_like(rhos)
    for ell in range(rhos.shape[0]):
        h = -p.j * (psi_nbr[ell] * bdag + np.conj(psi_nbr[ell]) * b) \
            + diag_part
        hr = h @ rhos[ell]
        out[ell] = -1j * (hr - hr.conj().T)
    for r in range(4):
        for s in range(4):
            w = (p.kappa * gam_tot[:, r, s])[:, None, None]
            ar_rho = np.matmul(a_ops[r], rhos)
            out += w * (2.0 * np.matmul(ar_rho, a_ops[s].conj().T)
                        - np.matmul(adag_a[s, r], rhos)
                        - np.matmul(rhos, adag_a[s, r]))
    if check_truncation:
        top = rhos[:, -1, -1].real.max()
        if top > 1e-4:
            warnings.warn(f"occupation cutoff population {top:.1e} > 1e-4",
                          RuntimeWarning)
    return out


def rhs_norm(fld: GutzwillerField, mu: Optional[float] = None) -> float:
    return float(np.abs(gutzwiller_rhs(fld, mu)).max())


def _rk4_step(fld, mu, dt):
    r = fld.rhos
    k1 = gutzwiller_rhs(fld, mu)
    fld.rhos = r + dt / 2 * k1
    k2 = gutzwiller_rhs(fld, mu)
    fld.rhos = r + dt / 2 * k2
    k3 = gutzwiller_rhs(fld, mu)
    fld.rhos = r + dt * k3
    k4 = gutzwiller_rhs(fld, mu)
    new = r + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    new = (new + np.conj(np.swapaxes(new, 1, 2))) / 2
    tr = np.einsum("lii->l", new).real
    if not np.isfinite(tr).all() or tr.min() < 0.5:
        raise RuntimeError("mean-field step unstable; reduce dt")
    fld.rhos = new / tr[:, None, None]


def gutzwiller_evolve(fld: GutzwillerField, t_final: float, dt: float,
                      mu: Optional[float] = None, sample_every: int = 0,
                      split_diagonal: bool = False):
    """Integrate the mean-field equations at fixed mu.

    split_diagonal uses a Strang split (exact local-Hamiltonian unitary
    around a dissipative RK4 substep); homogeneous mode only.  It removes
    the interaction-term stiffness, allowing ~5x larger steps in scans.
    Returns (times, mean |psi| samples).
    """
    p = fld.params
    mu_val = p.mu if mu is None else mu
    steps = max(int(round(t_final / dt)), 1)
    h = t_final / steps
    times, samples = [], []

    if split_diagonal and fld.geometry != "homogeneous":
        raise ValueError("split integrator supports homogeneous mode only")
    if split_diagonal:
        b, bdag, nmat, _, _, _, _ = local_ops(p.n_max)
        diag_part = -mu_val * nmat + 0.5 * p.u * (nmat @ nmat - nmat)

    for step in range(steps):
        if split_diagonal:
            psi = p.z * complex(fld.order_parameter[0])
            hmat = -p.j * (psi * bdag + np.conj(psi) * b) + diag_part
            evals, evecs = np.linalg.eigh(hmat)
            u_half = evecs @ (np.exp(-1j * evals * h / 2)[:, None]
                              * evecs.conj().T)
            fld.rhos = u_half[None] @ fld.rhos @ u_half.conj().T[None]
            r = fld.rhos
            k1 = _dissipator_only(fld)
            fld.rhos = r + h / 2 * k1
            k2 = _dissipator_only(fld)
            fld.rhos = r + h / 2 * k2
            k3 = _dissipator_only(fld)
            fld.rhos = r + h * k3
            k4 = _dissipator_only(fld)
            new = r + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            new = (new + np.conj(np.swapaxes(new, 1, 2))) / 2
            tr = np.einsum("lii->l", new).real
            if not np.isfinite(tr).all() or tr.min() < 0.5:
                raise RuntimeError("mean-field step unstable; reduce dt")
            fld.rhos = new / tr[:, None, None]
            fld.rhos = u_half[None] @ fld.rhos @ u_half.conj().T[None]
        else:
            _rk4_step(fld, mu_val, h)
        if sample_every and (step + 1) % sample_every == 0:
            times.append((step + 1) * h)
            samples.append(np.abs(fld.order_parameter).mean())
    return np.array(times), np.array(samples)


def _dissipator_only(fld: GutzwillerField) -> np.ndarray:
    p = fld.params
    rhos = fld.rhos
    gam = _gamma_matrices(rhos, p)
    if fld.geometry == "homogeneous":
        gam_tot = p.z * gam
    else:
        gam_tot = np.roll(gam, 1, axis=0) + np.roll(gam, -1, axis=0)
    if rhos.shape[0] == 1:
        # single-site fast path: contract the cached kron-form bracket
        d = p.n_max + 1
        stack = _dissipator_superops(p.n_max)
        super_op = np.tensordot(p.kappa * gam_tot[0], stack, axes=2)
        return (super_op @ rhos[0].reshape(-1)).reshape(1, d, d)
    _, _, _, a_ops, _, _, adag_a = local_ops(p.n_max)
    out = np.zeros_like(rhos)
    for r in range(4):
        for s in range(4):
            w = (p.kappa * gam_tot[:, r, s])[:, None, None]
            ar_rho = np.matmul(a_ops[r], rhos)
            out += w * (2.0 * np.matmul(ar_rho, a_ops[s].conj().T)
                        - np.matmul(adag_a[s, r], rhos)
                        - np.matmul(rhos, adag_a[s, r]))
    return out


@dataclass
class SteadyResult:
    field: GutzwillerField
    mu: float
    residual: float
    converged: bool
    psi: complex


def gutzwiller_steady(params: BoseParams, mode: str = "homogeneous",
                      n_sites: int = 1, rho0: Optional[np.ndarray] = None,
                      dt: float = 0.01, t_max: float = 400.0,
                      tol: float = 1e-9, control_every: float = 1.0,
                      eta: float = 0.5) -> SteadyResult:
    """Relax to a strict fixed point, steering mu.

    The filling is conserved by the equations, so the spec'd integral
    term mu -= eta (<n> - n) only corrects truncation drift; the phase
    of the order parameter keeps rotating unless mu is right, so a
    phase-rotation feedback term locks it.
    """
    p = params
    if rho0 is None:
        fld = homogeneous_field(p, condensed=True)
        if mode == "ring":
            fld = GutzwillerField(np.repeat(fld.rhos, n_sites, axis=0), p,
                                  "ring")
    else:
        fld = GutzwillerField(rho0, p, "homogeneous" if mode == "homogeneous"
                              else "ring")
    mu = p.mu
    t = 0.0
    inner = max(int(round(control_every / dt)), 1)
    psi_prev = complex(np.mean(fld.order_parameter))
    # filling is conserved by the equations, so target the achieved value
    # (the truncated initial state sits a hair off the requested n and the
    # offset cannot be corrected; leaving it in would fight the phase lock)
    n_target = float(np.mean(fld.filling))
    while t < t_max:
        for _ in range(inner):
            _rk4_step(fld, mu, dt)
        t += inner * dt
        psi = complex(np.mean(fld.order_parameter))
        mu -= eta * (float(np.mean(fld.filling)) - n_target)
        if abs(psi) > 1e-8 and abs(psi_prev) > 1e-8:
            omega = np.angle(psi / psi_prev) / (inner * dt)
            mu -= 1.0 * omega
        psi_prev = psi
        res = rhs_norm(fld, mu)
        if res < tol:
            return SteadyResult(fld, mu, res, True, psi)
    return SteadyResult(fld, mu, rhs_norm(fld, mu), False,
                        complex(np.mean(fld.order_parameter)))


# ----------------------------------------------------- analytic results


def condensate_fraction_analytic(u: float, j: float) -> float:
    """Low-density condensate fraction in the dimensionless couplings
    u = U/(4 kappa z), j = J/(4 kappa)."""
    num = 2 * u ** 2 * (1 + (j + u) ** 2)
    den = 1 + u ** 2 + j * (8 * u + 6 * j * (1 + 2 * u ** 2)
                            + 24 * j ** 2 * u + 8 * j ** 3)
    return 1 - num / den


def critical_u(j: float) -> float:
    """Root of the analytic condensate fraction in u at fixed j."""
    from scipy.optimize import brentq
    return brentq(lambda u: condensate_fraction_analytic(u, j), 1e-6, 50.0)


def instability_boundary(params: BoseParams) -> float:
    """Critical hopping J_c = 9 U n / (2 z)."""
    return 9 * params.u * params.n / (2 * params.z)


def linear_response_matrix(q: float, params: BoseParams) -> np.ndarray:
    p = params
    eps = p.j * q ** 2
    kq = 2 * (2 * p.n + 1) * p.kappa * q ** 2
    un = p.u * p.n
    off = un + (9 * un / (4 * p.kappa * p.z)) * kq
    return np.array([[un + eps - 1j * kq, off],
                     [-off, -un - eps - 1j * kq]])


def linear_response_spectrum(q_grid: Sequence[float], params: BoseParams):
    """Complex relaxation rates gamma(q) = i * eig(M_q); Re > 0 damps,
    Re < 0 grows.  Also returns the sound speed
    c = sqrt(2 U n (J - 9 U n / (2 z)))."""
    q_grid = np.asarray(q_grid, dtype=float)
    branches = np.zeros((len(q_grid), 2), dtype=complex)
    for k, q in enumerate(q_grid):
        evals = np.linalg.eigvals(linear_response_matrix(q, params))
        branches[k] = 1j * np.sort_complex(evals)
    arg = 2 * params.u * params.n * (params.j - instability_boundary(params))
    c = np.sqrt(complex(arg))
    return branches, c


# -------------------------------------------------------- CDW machinery


@dataclass
class CdwResult:
    profile: np.ndarray
    wavelength: Optional[float]
    contrast: float
    stationary: bool
    times: np.ndarray
    contrast_series: np.ndarray


def dominant_wavelength(profile: np.ndarray) -> float:
    l = len(profile)
    spec = np.abs(np.fft.rfft(profile - profile.mean()))
    k = int(np.argmax(spec[1:])) + 1
    return l / k


def cdw_simulation(n_sites: int, params: BoseParams,
                   perturbation: float = 1e-3, t_final: float = 60.0,
                   dt: float = 0.02, seed: int = 0,
                   n_checks: int = 12) -> CdwResult:
    """Real-space relaxation of a perturbed homogeneous condensate on a
    ring (z = 2); below the critical hopping the seed grows into a
    stationary density modulation."""
    p = replace(params, z=2)
    base = gutzwiller_steady(p, mode="homogeneous", dt=dt, t_max=200.0,
                             tol=1e-9)
    mu = base.mu
    rng = np.random.default_rng(seed)
    b, bdag = local_ops(p.n_max)[:2]
    rhos = np.repeat(base.field.rhos, n_sites, axis=0)
    # small site-dependent coherent displacement seeds every momentum
    for ell in range(n_sites):
        xi = perturbation * (rng.normal() + 1j * rng.normal())
        gen = xi * bdag - np.conj(xi) * b
        import scipy.linalg
        d = scipy.linalg.expm(gen)
        rhos[ell] = d @ rhos[ell] @ d.conj().T
    fld = GutzwillerField(rhos, p, "ring")

    steps = max(int(round(t_final / dt)), 1)
    check_every = max(steps // n_checks, 1)
    times, contrasts = [], []
    profile_prev = fld.filling
    for step in range(steps):
        _rk4_step(fld, mu, dt)
        if (step + 1) % check_every == 0:
            prof = fld.filling
            times.append((step + 1) * dt)
            contrasts.append(float(np.ptp(prof)))
    profile = fld.filling
    contrast = float(np.ptp(profile))
    # stationarity over the trailing ten percent of the run
    tail = max(int(len(contrasts) * 0.1), 2)
    recent = contrasts[-tail:]
    stationary = (max(recent) - min(recent)) < max(1e-5, 0.02 * contrast)
    wl = dominant_wavelength(profile) if contrast > 1e-8 else None
    return CdwResult(profile, wl, contrast, stationary,
                     np.array(times), np.array(contrasts))


# ------------------------------------------------ critical-point probe


@dataclass
class ProbeResult:
    times: np.ndarray
    psi_mag: np.ndarray
    log_derivative: np.ndarray
    plateau: Optional[tuple]        # (t_lo, t_hi, mean slope) or None


def critical_exponent_probe(params: BoseParams, t_final: float = 400.0,
                            dt: float = 0.02, n_samples: int = 240,
                            target: float = -0.5, tol: float = 0.1,
                            min_decade: float = 10.0) -> ProbeResult:
    """d log|psi| / d log t for a J=0 quench from the condensed state;
    at criticality the decay shows an alpha = 1/2 plateau."""
    if abs(params.j) > 1e-14:
        raise ValueError("the critical probe runs at J = 0")
    fld = homogeneous_field(params, condensed=True)
    steps = max(int(round(t_final / dt)), 1)
    sample_every = max(steps // n_samples, 1)
    times, mags = gutzwiller_evolve(fld, t_final, dt, mu=params.mu,
                                    sample_every=sample_every,
                                    split_diagonal=True)
    good = mags > 1e-12
    lt = np.log(times[good])
    lm = np.log(mags[good])
    dldt = np.gradient(lm, lt)
    plateau = None
    k = 0
    while k < len(lt):
        if abs(dldt[k] - target) <= tol:
            m = k
            while m + 1 < len(lt) and abs(dldt[m + 1] - target) <= tol:
                m += 1
            if times[good][m] / times[good][k] >= min_decade:
                plateau = (float(times[good][k]), float(times[good][m]),
                           float(dldt[k:m + 1].mean()))
                break
            k = m + 1
        else:
            k += 1
    return ProbeResult(times, mags, dldt, plateau)


def locate_critical_u(params: BoseParams, u_lo: float, u_hi: float,
                      t_final: float = 150.0, dt: float = 0.02,
                      iters: int = 18) -> float:
    """Bisect the J=0 order-parameter survival boundary in U."""
    def survives(u):
        p = replace(params, u=u, j=0.0)
        fld = homogeneous_field(p, condensed=True)
        _, mags = gutzwiller_evolve(fld, t_final, dt, mu=p.mu,
                                    sample_every=max(
                                        int(round(t_final / dt)) // 30, 1),
                                    split_diagonal=True)
        # thermal side: late-time exponential decay of |psi|
        tail = mags[-6:]
        rate = np.log(tail[-1] / tail[0]) if tail[0] > 1e-13 else -np.inf
        return rate > -0.5

    lo, hi = u_lo, u_hi
    if not survives(lo):
        raise ValueError("u_lo is already thermal")
    if survives(hi):
        raise ValueError("u_hi is still condensed")
    for _ in range(iters):
        mid = (lo + hi) / 2
        if survives(mid):
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def order_parameter_survives(u_tilde: float, j_tilde: float, n: float,
                             z: int = 4, n_max: int = 5,
                             t_final: float = 250.0, dt: float = 0.02,
                             rate_tol: float = 0.008) -> bool:
    """Classify (u, j) as condensed by the late-time decay rate of |psi|
    from the condensed field, with the chemical potential phase-locked
    (otherwise global phase rotation aliases into artificial decay)."""
    j_raw = 4 * j_tilde
    u_raw = 4 * z * u_tilde
    p = BoseParams(j=j_raw, u=u_raw, mu=-j_raw * z + 2 * u_raw * n, n=n,
                   z=z, n_max=n_max)
    fld = homogeneous_field(p, condensed=True)
    chunk = 0.5
    n_chunks = max(int(round(t_final / chunk)), 8)
    mu = p.mu
    psi_prev = complex(fld.order_parameter[0])
    mags, times = [], []
    for k in range(n_chunks):
        gutzwiller_evolve(fld, chunk, dt, mu=mu, split_diagonal=True)
        psi = complex(fld.order_parameter[0])
        if abs(psi) > 1e-10 and abs(psi_prev) > 1e-10:
            mu -= 0.8 * np.angle(psi / psi_prev) / chunk
        psi_prev = psi
        times.append((k + 1) * chunk)
        mags.append(abs(psi))
    tail_n = max(n_chunks // 5, 4)
    tail = np.array(mags[-tail_n:])
    if tail[-1] < 1e-12:
        return False
    rate = np.log(tail[-1] / tail[0]) / (times[-1] - times[-tail_n])
    return rate > -rate_tol


def locate_boundary_u(j_tilde: float, n: float, z: int = 4,
                      u_lo: float = 0.2, u_hi: float = 4.0,
                      resolution: float = 0.02, **kwargs) -> float:
    """Bisect the condensate-survival boundary in u_tilde at fixed j_tilde."""
    if not order_parameter_survives(u_lo, j_tilde, n, z, **kwargs):
        raise ValueError("u_lo already thermal")
    if order_parameter_survives(u_hi, j_tilde, n, z, **kwargs):
        raise ValueError("u_hi still condensed")
    lo, hi = u_lo, u_hi
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        if order_parameter_survives(mid, j_tilde, n, z, **kwargs):
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2
