"""Exact density-matrix evolution and stationary-state analysis.

Everything here works on the full density matrix, so it is limited to
small Hilbert spaces; the trajectory module covers the rest.  The
generator is

    d rho/dt = -i[H, rho] + sum_b (g_b/2) (2 c_b rho c_b+ - c_b+c_b rho
                                           - rho c_b+c_b)

with nonnegative rates g_b in units of the reference rate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .hilbert import Operator, SpaceDescriptor, as_matrix

STEADY_DENSE_CAP = 64
STEADY_SPARSE_CAP = 256


class DimensionCapError(RuntimeError):
    """Raised when an exact solver is asked for an infeasible dimension."""


@dataclass
class LindbladModel:
    """Hamiltonian plus (rate, jump operator) channels on one space."""

    space: SpaceDescriptor
    hamiltonian: Optional[Operator]
    channels: list = field(default_factory=list)

    def __post_init__(self):
        for rate, op in self.channels:
            if rate < 0:
                raise ValueError("negative channel rate")
            if as_matrix(op).shape[0] != self.space.dim:
                raise ValueError("channel dimension mismatch")
        if self.hamiltonian is not None and \
                as_matrix(self.hamiltonian).shape[0] != self.space.dim:
            raise ValueError("hamiltonian dimension mismatch")

    @property
    def dim(self):
        return self.space.dim

    def h_matrix(self):
        return as_matrix(self.hamiltonian) if self.hamiltonian is not None \
            else None


def _compiled(model: LindbladModel):
    """Matrices pulled out of the model once, for the inner loops."""
    h = model.h_matrix()
    chans = []
    for rate, op in model.channels:
        c = as_matrix(op)
        chans.append((float(rate), c, c.conj().T, c.conj().T @ c))
    return h, chans


def lindblad_rhs(model: LindbladModel, rho: np.ndarray,
                 compiled=None) -> np.ndarray:
    """Right-hand side of the master equation; trace(result) = 0."""
    if rho.shape[0] != model.dim:
        raise ValueError("density matrix dimension mismatch")
    h, chans = compiled if compiled is not None else _compiled(model)
    out = np.zeros_like(rho, dtype=complex)
    if h is not None:
        hrho = h @ rho
        out += -1j * (hrho - hrho.conj().T)
    for rate, c, cdag, cdc in chans:
        out += rate * ((c @ rho) @ cdag - 0.5 * (cdc @ rho + rho @ cdc))
    return np.asarray(out)


def density_matrix_checks(rho: np.ndarray, herm_tol=1e-10, trace_tol=1e-10,
                          eig_tol=1e-8) -> None:
    if np.abs(rho - rho.conj().T).max() > herm_tol:
        raise ValueError("density matrix not hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        raise ValueError("density matrix trace != 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -eig_tol:
        raise ValueError("density matrix has a significant negative eigenvalue")


@dataclass
class EvolutionResult:
    times: np.ndarray
    observables: np.ndarray          # (n_samples, n_obs) complex
    states: Optional[list]           # sampled density matrices, or None
    final_state: np.ndarray
    min_eigenvalue: float            # most negative eigenvalue seen at samples


def evolve_master(model: LindbladModel, rho0: np.ndarray, t_final: float,
                  dt: float, observables: Sequence = (),
                  n_samples: int = 101, store_states: Optional[bool] = None,
                  hamiltonian_t: Optional[Callable[[float], np.ndarray]] = None,
                  rate_scale_t: Optional[Callable[[float], float]] = None,
                  ) -> EvolutionResult:
    """Fixed-step RK4 integration of the master equation.

    The step is halved automatically when the trace drifts by more than
    1e-6 over one step; integration aborts if halving 10 times does not
    cure it.  Positivity is monitored at sample times, not enforced.
    hamiltonian_t overrides the model Hamiltonian; rate_scale_t scales
    every channel rate by a common time-dependent factor.
    """
    rho = np.array(rho0, dtype=complex)
    density_matrix_checks(rho, herm_tol=1e-8, trace_tol=1e-8, eig_tol=1e-6)
    h_static, chans = _compiled(model)
    obs_mats = [as_matrix(o) for o in observables]
    if store_states is None:
        store_states = model.dim <= 64

    def rhs(t, r):
        h = hamiltonian_t(t) if hamiltonian_t is not None else h_static
        out = np.zeros_like(r)
        if h is not None:
            hr = h @ r
            out += -1j * (hr - hr.conj().T)
        scale = 1.0 if rate_scale_t is None else rate_scale_t(t)
        for rate, c, cdag, cdc in chans:
            out += (rate * scale) * ((c @ r) @ cdag
                                     - 0.5 * (cdc @ r + r @ cdc))
        return out

    sample_times = np.linspace(0.0, t_final, n_samples)
    obs_out = np.zeros((n_samples, len(obs_mats)), dtype=complex)
    states = [] if store_states else None
    min_eig = 0.0

    def record(k, r):
        nonlocal min_eig
        for j, m in enumerate(obs_mats):
            prod = m @ r
            obs_out[k, j] = prod.diagonal().sum() if sp.issparse(prod) \
                else np.trace(prod)
        lam = np.linalg.eigvalsh((r + r.conj().T) / 2).min()
        min_eig = min(min_eig, lam)
        if lam < -1e-6:
            warnings.warn(f"density matrix eigenvalue {lam:.2e} < -1e-6",
                          RuntimeWarning)
        if store_states:
            states.append(r.copy())

    record(0, rho)
    t = 0.0
    halvings = 0
    for k in range(1, n_samples):
        t_target = sample_times[k]
        while t < t_target - 1e-12:
            step = min(dt, t_target - t)
            k1 = rhs(t, rho)
            k2 = rhs(t + step / 2, rho + step / 2 * k1)
            k3 = rhs(t + step / 2, rho + step / 2 * k2)
            k4 = rhs(t + step, rho + step * k3)
            new = rho + (step / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
            drift = abs(np.trace(new).real - 1.0) + abs(np.trace(new).imag)
            if drift > 1e-6:
                halvings += 1
                dt /= 2
                if halvings > 10:
                    raise RuntimeError(
                        f"step too large: trace drift {drift:.2e} persists "
                        f"after {halvings} halvings (t={t:.3g})")
                continue
            rho = (new + new.conj().T) / 2
            rho /= np.trace(rho).real
            t += step
        record(k, rho)
    return EvolutionResult(sample_times, obs_out, states, rho, min_eig)


def vectorized_generator(model: LindbladModel, sparse: bool = False):
    """Matrix form of the generator acting on row-major flattened rho."""
    d = model.dim
    h, chans = _compiled(model)
    eye = sp.identity(d, dtype=complex, format="csr") if sparse \
        else np.eye(d, dtype=complex)
    kron = sp.kron if sparse else np.kron

    def K(a, b):
        a = a.tocsr() if sp.issparse(a) and sparse else \
            (np.asarray(a.todense()) if sp.issparse(a) and not sparse else a)
        b = b.tocsr() if sp.issparse(b) and sparse else \
            (np.asarray(b.todense()) if sp.issparse(b) and not sparse else b)
        return kron(a, b)

    gen = None

    def acc(term):
        nonlocal gen
        gen = term if gen is None else gen + term

    if h is not None:
        acc(-1j * (K(h, eye) - K(eye, h.T)))
    for rate, c, cdag, cdc in chans:
        acc(rate * (K(c, c.conj()) - 0.5 * K(cdc, eye) - 0.5 * K(eye, cdc.T)))
    if gen is None:
        acc(0.0 * K(eye, eye))
    return gen.tocsr() if sparse else gen


def dark_subspace(model: LindbladModel, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the joint kernel of all channels.

    When a Hamiltonian is present, the kernel is additionally reduced to
    the subspace the Hamiltonian maps into itself (dark stationary states
    must be H eigenstates).
    """
    d = model.dim
    acc = np.zeros((d, d), dtype=complex)
    for rate, op in model.channels:
        c = as_matrix(op)
        c = np.asarray(c.todense()) if sp.issparse(c) else c
        acc += rate * (c.conj().T @ c)
    evals, evecs = np.linalg.eigh(acc)
    kernel = evecs[:, evals < max(tol, evals.max() * 1e-12)]
    h = model.h_matrix()
    if h is None or kernel.shape[1] == 0:
        return kernel
    h = np.asarray(h.todense()) if sp.issparse(h) else h
    # keep the H-invariant part of the kernel
    for _ in range(model.dim):
        hk = h @ kernel
        leak = hk - kernel @ (kernel.conj().T @ hk)
        norms = np.linalg.norm(leak, axis=0)
        keep = norms < 1e-8
        if keep.all():
            break
        hk_in = kernel @ (kernel.conj().T @ hk)
        # restrict to eigenvectors of the projected H with small leakage
        hproj = kernel.conj().T @ hk_in
        w, v = np.linalg.eigh((hproj + hproj.conj().T) / 2)
        cand = kernel @ v
        resid = np.linalg.norm(h @ cand - cand * w, axis=0)
        kernel = cand[:, resid < 1e-8]
        if kernel.shape[1] == 0:
            break
    return kernel


@dataclass
class SteadyStateResult:
    dimension: int                  # steady-register dimension (see below)
    states: list                    # trace-one hermitian stationary matrices
    raw_null_dimension: int         # kernel dimension of the vectorized generator
    dark_states: Optional[np.ndarray]   # columns, when a pure dark basis exists

    def __iter__(self):
        return iter(self.states)


def steady_states(model: LindbladModel, k_extra: int = 6,
                  tol: float = 1e-9) -> SteadyStateResult:
    """Stationary states from the kernel of the vectorized generator.

    The reported dimension counts independent pure dark states when the
    kernel is exactly their matrix algebra (kernel dim r^2 for r dark
    states, coherences included); otherwise it counts independent
    hermitian stationary matrices.
    """
    d = model.dim
    if d > STEADY_SPARSE_CAP:
        raise DimensionCapError(
            f"dimension {d} beyond the vectorized-generator cap "
            f"({STEADY_SPARSE_CAP}); use the trajectory module instead")
    if d <= STEADY_DENSE_CAP:
        gen = vectorized_generator(model, sparse=False)
        evals, evecs = np.linalg.eig(gen)
        null = evecs[:, np.abs(evals) < tol]
    else:
        gen = vectorized_generator(model, sparse=True)
        dark = dark_subspace(model)
        k = max(dark.shape[1] ** 2 + k_extra, k_extra)
        evals, evecs = spla.eigs(gen, k=min(k, d * d - 2), sigma=1e-7,
                                 which="LM")
        null = evecs[:, np.abs(evals) < 1e-7]
        # ARPACK vectors are only approximate; refine acceptance by residual
        keep = []
        for j in range(null.shape[1]):
            v = null[:, j]
            if np.linalg.norm(gen @ v) < 1e-6 * np.linalg.norm(v):
                keep.append(j)
        null = null[:, keep]
    # orthonormalize the kernel
    if null.shape[1]:
        q, _ = np.linalg.qr(null)
        null = q
    raw_dim = null.shape[1]

    mats = [null[:, j].reshape(d, d) for j in range(raw_dim)]
    # hermitian basis of the stationary matrix space
    herm = []
    for m in mats:
        for cand in (m + m.conj().T, 1j * (m - m.conj().T)):
            if np.abs(cand).max() < 1e-12:
                continue
            for prev in herm:
                cand = cand - prev * np.trace(prev.conj().T @ cand)
            nrm = np.linalg.norm(cand)
            if nrm > 1e-8:
                herm.append(cand / nrm)
    states = []
    for m in herm:
        tr = np.trace(m)
        if abs(tr) > 1e-8:
            states.append(m / tr)

    dark = dark_subspace(model)
    r = dark.shape[1]
    if r > 0:
        # degeneracy counted over pure dark states (coherences make the
        # raw kernel r^2-dimensional; extra mixed fixed points may exist
        # on invariant subspaces and are visible in raw_null_dimension)
        dimension = r
    elif raw_dim == 0:
        dimension = 0
    else:
        dimension = max(len(states), 1)
    return SteadyStateResult(dimension, states, raw_dim,
                             dark if r else None)


def dark_state_check(model: LindbladModel, psi: np.ndarray) -> dict:
    """Per-channel residual norms ||c_b psi||, plus ||(H - <H>) psi||."""
    psi = psi / np.linalg.norm(psi)
    residuals = []
    for rate, op in model.channels:
        residuals.append(float(np.linalg.norm(as_matrix(op) @ psi)))
    out = {"channel_residuals": np.array(residuals)}
    h = model.h_matrix()
    if h is not None:
        hpsi = h @ psi
        e = np.vdot(psi, hpsi)
        out["hamiltonian_residual"] = float(np.linalg.norm(hpsi - e * psi))
    return out


def purity(rho: np.ndarray) -> float:
    return float(np.trace(rho @ rho).real)


def fidelity_to_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    psi = psi / np.linalg.norm(psi)
    return float(np.vdot(psi, rho @ psi).real)
