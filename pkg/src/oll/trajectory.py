"""Stochastic wavefunction unraveling of Lindblad dynamics.

A single trajectory evolves under the non-hermitian drift generated by
H_eff = H - (i/2) sum_b g_b c_b+ c_b until the squared norm falls below a
uniform random threshold; the jump time is then bisected, a channel is
selected with probability proportional to g_b ||c_b psi||^2, and the state
is renormalized.  Ensemble members are seeded by counter-based streams
derived from (master_seed, trajectory_index), so results are bit-identical
regardless of execution order or thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .hilbert import Operator, as_matrix
from .liouville import LindbladModel


@dataclass
class TrajectoryConfig:
    dt: float
    t_final: float
    n_trajectories: int = 1
    master_seed: int = 0
    jump_resolution: float = 1e-8       # |norm^2 - u| bisection target
    observables: Sequence = ()
    n_samples: int = 101
    fidelity_target: Optional[np.ndarray] = None
    store_states: bool = False          # keep |psi> at sample times

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.n_trajectories < 1:
            raise ValueError("need at least one trajectory")

    @property
    def sample_times(self):
        return np.linspace(0.0, self.t_final, self.n_samples)


@dataclass
class TrajectoryRecord:
    index: int
    observables: np.ndarray             # (n_samples, n_obs) complex
    n_jumps: int
    dark_events: int
    final_state: np.ndarray
    jump_times: list = field(default_factory=list)
    final_fidelity: Optional[float] = None
    states: Optional[list] = None       # sampled states when requested


@dataclass
class EnsembleResult:
    times: np.ndarray
    mean: np.ndarray                    # (n_samples, n_obs)
    stderr: np.ndarray
    jump_counts: np.ndarray             # per trajectory
    final_fidelities: Optional[np.ndarray]
    records: Optional[list] = field(default=None, repr=False)


def effective_hamiltonian(model: LindbladModel) -> Operator:
    """H - (i/2) sum_b g_b c_b+ c_b as a (non-hermitian) operator."""
    acc = None
    for rate, op in model.channels:
        c = as_matrix(op)
        term = rate * (c.conj().T @ c)
        acc = term if acc is None else acc + term
    h = model.h_matrix()
    if acc is None:
        mat = h if h is not None else np.zeros((model.dim, model.dim),
                                               dtype=complex)
    else:
        mat = (-0.5j) * acc if h is None else h + (-0.5j) * acc
    return Operator(mat, model.space, model.space)


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based per-trajectory stream (Philox keyed by seed+index)."""
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(seq))


class RankOneProjector:
    """|u><u| as a mat-vec observable, avoiding the dense outer product."""

    def __init__(self, vec):
        self.vec = np.asarray(vec, dtype=complex)

    def __matmul__(self, v):
        return self.vec * np.vdot(self.vec, v)


def _apply_factory(mat):
    if sp.issparse(mat):
        m = mat.tocsr()
        return lambda v: m @ v
    return lambda v: mat @ v


def run_trajectory(model: LindbladModel, psi0: np.ndarray,
                   config: TrajectoryConfig, stream_index: int = 0,
                   ) -> TrajectoryRecord:
    heff = effective_hamiltonian(model).mat
    chans = [(rate, as_matrix(op)) for rate, op in model.channels]
    return _run_trajectory_generic(heff, chans, psi0, config, stream_index)


def _run_trajectory_generic(heff, channels, psi0: np.ndarray,
                            config: TrajectoryConfig, stream_index: int,
                            ) -> TrajectoryRecord:
    """Trajectory engine.

    heff is a matrix, a callable t -> matrix, or a list of
    (coefficient_fn, matrix) terms summed with time-dependent weights;
    channels is a list of (rate, c) with rate a float or callable of t.
    """
    rng = trajectory_rng(config.master_seed, stream_index)
    psi = np.array(psi0, dtype=complex)
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    psi /= nrm

    obs_mats = [as_matrix(o) for o in config.observables]
    obs_apply = [_apply_factory(m) for m in obs_mats]
    chan_apply = [(rate if callable(rate) else (lambda t, r=rate: r),
                   _apply_factory(as_matrix(c)))
                  for rate, c in channels]

    sample_times = config.sample_times
    out = np.zeros((len(sample_times), len(obs_mats)), dtype=complex)
    kept_states = [] if config.store_states else None

    if isinstance(heff, (list, tuple)):
        term_apply = [(f, _apply_factory(m)) for f, m in heff]

        def drift(t, v):
            acc = None
            for f, apply_m in term_apply:
                piece = f(t) * apply_m(v)
                acc = piece if acc is None else acc + piece
            return -1j * acc
    elif callable(heff):
        def drift(t, v):
            return -1j * (heff(t) @ v)
    else:
        apply_g = _apply_factory(-1j * heff)

        def drift(t, v):
            return apply_g(v)

    def rk4(t, v, h):
        k1 = drift(t, v)
        k2 = drift(t + h / 2, v + (h / 2) * k1)
        k3 = drift(t + h / 2, v + (h / 2) * k2)
        k4 = drift(t + h, v + h * k3)
        return v + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)

    def record(k, v):
        n2 = np.vdot(v, v).real
        for j, apply_o in enumerate(obs_apply):
            out[k, j] = np.vdot(v, apply_o(v)) / n2
        if kept_states is not None:
            kept_states.append(v / np.sqrt(n2))

    record(0, psi)
    t = 0.0
    u = rng.random()
    n_jumps = 0
    dark_events = 0
    jump_times = []

    def do_jump(t, v):
        nonlocal n_jumps, dark_events, u
        weights = []
        jumped = []
        for rate_fn, apply_c in chan_apply:
            cv = apply_c(v)
            jumped.append(cv)
            weights.append(rate_fn(t) * np.vdot(cv, cv).real)
        weights = np.array(weights)
        total = weights.sum()
        if total < 1e-28:
            dark_events += 1
            u = rng.random()
            return v / np.linalg.norm(v)
        pick = np.searchsorted(np.cumsum(weights) / total, rng.random())
        pick = min(pick, len(weights) - 1)
        new = jumped[pick]
        n_jumps += 1
        jump_times.append(t)
        u = rng.random()
        return new / np.linalg.norm(new)

    for k in range(1, len(sample_times)):
        t_target = sample_times[k]
        while t < t_target - 1e-12:
            h = min(config.dt, t_target - t)
            cand = rk4(t, psi, h)
            if np.vdot(cand, cand).real > u:
                psi = cand
                t += h
                continue
            # bisect the jump time inside [t, t+h]
            lo, hi = 0.0, h
            psi_lo = psi
            for _ in range(80):
                mid = (lo + hi) / 2
                cand_mid = rk4(t + lo, psi_lo, mid - lo)
                n2 = np.vdot(cand_mid, cand_mid).real
                if abs(n2 - u) <= config.jump_resolution:
                    lo = mid
                    psi_lo = cand_mid
                    break
                if n2 > u:
                    lo, psi_lo = mid, cand_mid
                else:
                    hi = mid
            t += lo
            psi = do_jump(t, psi_lo)
        record(k, psi)

    psi_n = psi / np.linalg.norm(psi)
    fid = None
    if config.fidelity_target is not None:
        fid = float(abs(np.vdot(config.fidelity_target, psi_n)) ** 2)
    return TrajectoryRecord(stream_index, out, n_jumps, dark_events,
                            psi_n, jump_times, fid, kept_states)


def ensemble_average(model: LindbladModel, psi0: np.ndarray,
                     config: TrajectoryConfig, threads: int = 1,
                     keep_records: bool = False) -> EnsembleResult:
    """Deterministic, index-ordered ensemble of trajectories."""
    heff = effective_hamiltonian(model).mat
    channels = [(rate, as_matrix(c)) for rate, c in model.channels]
    return _ensemble_generic(heff, channels, psi0, config,
                             threads, keep_records)


def _ensemble_generic(heff, channels, psi0, config: TrajectoryConfig,
                      threads: int = 1, keep_records: bool = False,
                      ) -> EnsembleResult:
    n = config.n_trajectories
    records = [None] * n

    def work(i):
        records[i] = _run_trajectory_generic(heff, channels, psi0,
                                             config, i)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(n)))
    else:
        for i in range(n):
            work(i)

    stack = np.stack([r.observables for r in records])   # (n, samples, obs)
    mean = stack.mean(axis=0)
    if n > 1:
        stderr = stack.std(axis=0, ddof=1) / np.sqrt(n)
    else:
        stderr = np.zeros_like(np.abs(stack[0]))
    jumps = np.array([r.n_jumps for r in records])
    fids = None
    if config.fidelity_target is not None:
        fids = np.array([r.final_fidelity for r in records])
    return EnsembleResult(config.sample_times, mean, np.abs(stderr), jumps,
                          fids, records if keep_records else None)


def ensemble_density_matrix(records, k: Optional[int] = None) -> np.ndarray:
    """Average |psi><psi| over trajectory final states."""
    dim = records[0].final_state.shape[0]
    rho = np.zeros((dim, dim), dtype=complex)
    for r in records:
        rho += np.outer(r.final_state, r.final_state.conj())
    return rho / len(records)
