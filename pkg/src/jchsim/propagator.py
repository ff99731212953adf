"""Time evolution of sector states and observable sampling.

Default path is short-iterate Lanczos approximation of exp(-iHt)v with
adaptive sub-stepping; a dense eigendecomposition oracle is available
for small sectors.  The mean of the diagonal is removed before
exponentiation and restored as a global phase afterwards (an allowed
constant shift), keeping the tridiagonal exponentials well scaled.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .constants import to_microseconds
from .hamiltonian import excitation_expectation, sigma_z_expectation

DENSE_ORACLE_CAP = 2000


class PropagationError(RuntimeError):
    """Adaptive stepping failed (step underflow or breakdown)."""


@dataclass
class EvolutionRequest:
    """What to evolve and how.

    Either excited_ions (1-based indices of spins prepared up, zero
    phonons) or an explicit amplitudes vector must be given.
    """

    total_time: float
    samples: int
    excited_ions: list = None
    amplitudes: np.ndarray = None
    method: str = "krylov"
    krylov_tol: float = 1e-9
    max_krylov_dim: int = 40
    dense_cap: int = DENSE_ORACLE_CAP
    store_states: bool = False

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        if self.samples < 2:
            raise ValueError("need at least 2 samples")
        if not 0.0 < self.krylov_tol <= 1e-3:
            raise ValueError("krylov_tol must lie in (0, 1e-3]")
        if self.method not in ("krylov", "dense-oracle"):
            raise ValueError(f"unknown method {self.method!r}")
        if (self.excited_ions is None) == (self.amplitudes is None):
            raise ValueError("give exactly one of excited_ions or amplitudes")


@dataclass
class TimeSeries:
    """Per-ion <sigma_z> sampled on a uniform time grid."""

    times: np.ndarray               # s
    sigma_z: np.ndarray             # (samples, N)
    norm_drift: np.ndarray          # |  ||v|| - 1  | per sample
    excitation_drift: np.ndarray    # | <exc> - M | per sample
    states: np.ndarray = None       # optional (samples, D) complex

    def to_csv(self, path):
        """CSV: time_us, sz_ion1..N, norm_drift, excitation_drift."""
        import os

        n = self.sigma_z.shape[1]
        header = (
            "time_us,"
            + ",".join(f"sz_ion{i + 1}" for i in range(n))
            + ",norm_drift,excitation_drift"
        )
        lines = [header]
        for k in range(self.times.size):
            cells = [f"{to_microseconds(self.times[k]):.17g}"]
            cells += [f"{v:.17g}" for v in self.sigma_z[k]]
            cells.append(f"{self.norm_drift[k]:.17g}")
            cells.append(f"{self.excitation_drift[k]:.17g}")
            lines.append(",".join(cells))
        tmp = f"{path}.tmp"
        with open(tmp, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        os.replace(tmp, path)


def prepare_initial_state(basis, excited_ions):
    """Product state: listed ions spin-up, all others down, zero phonons."""
    ions = list(excited_ions)
    if len(set(ions)) != len(ions):
        raise ValueError(f"duplicate ion index in {ions}")
    if any(i < 1 or i > basis.n_ions for i in ions):
        raise ValueError(f"ion indices must lie in 1..{basis.n_ions}")
    if len(ions) != basis.excitations:
        raise ValueError(
            f"{len(ions)} excited ions but the sector has M={basis.excitations}"
        )
    mask = 0
    for i in ions:
        mask |= 1 << (i - 1)
    packed = mask << (8 * basis.n_ions)
    v = np.zeros(basis.dimension, dtype=complex)
    v[basis.index_of_packed(packed)] = 1.0
    return v


def average_sigma_z(series):
    """Per-sample mean of <sigma_z> across ions."""
    return series.sigma_z.mean(axis=1)


def _lanczos_step(matvec, v, dt, err_budget, m_max):
    """One Lanczos exp(-i dt H) v attempt with full reorthogonalization.

    Returns (new_v, error_estimate) or (None, best_estimate) if the
    budget was not met within m_max iterations.
    """
    dim = v.size
    beta0 = np.linalg.norm(v)
    V = np.empty((m_max, dim), dtype=complex)
    V[0] = v / beta0
    alphas = np.empty(m_max)
    betas = np.empty(m_max)  # betas[k] couples V[k-1] and V[k]

    k = 0
    while True:
        w = matvec(V[k])
        if k > 0:
            w -= betas[k] * V[k - 1]
        alphas[k] = np.real(np.vdot(V[k], w))
        w -= alphas[k] * V[k]
        # Full reorthogonalization keeps the subspace orthonormal so the
        # propagated norm stays at machine precision.
        w -= V[: k + 1].T @ (np.conj(V[: k + 1]) @ w)
        beta = np.linalg.norm(w)

        happy = beta < 1e-13 * max(1.0, abs(alphas[: k + 1]).max())
        if k >= 1 or happy:
            u = _tridiag_expm_col(alphas[: k + 1], betas[1 : k + 1], dt)
            # Integrated-residual estimate: the ODE residual of the Krylov
            # approximant is beta * u_m(s) * v_{m+1}, so the step error is
            # bounded by roughly |dt| * beta * |u_m|.
            err = 0.0 if happy else abs(dt) * beta * abs(u[-1])
            if err <= err_budget or happy:
                return beta0 * (V[: k + 1].T @ u), err
        if k + 1 >= m_max or happy:
            return None, err if k >= 1 else np.inf
        betas[k + 1] = beta
        V[k + 1] = w / beta
        k += 1


def _tridiag_expm_col(alphas, offdiag, dt):
    """First column of exp(-i dt T) for symmetric tridiagonal T."""
    evals, evecs = sla.eigh_tridiagonal(alphas, offdiag)
    return evecs @ (np.exp(-1j * dt * evals) * evecs[0])


def propagate_krylov(h, v0, t_target, tol, m_max, time_scale=None):
    """Advance v0 by exp(-i H t_target) with adaptive Lanczos sub-steps.

    tol is an error budget for the whole evolution; each sub-step gets a
    share proportional to its duration relative to time_scale (defaults
    to |t_target|).  The mean-diagonal shift is restored as a phase.
    """
    if t_target == 0.0:
        return v0.copy()
    if time_scale is None:
        time_scale = abs(t_target)
    shift = float(np.mean(h.diagonal()))
    mat = h.matrix

    def matvec(x):
        # Two real matvecs beat letting scipy upcast the real CSR against
        # a complex vector on every call.
        y = (mat @ x.real).astype(complex)
        y += 1j * (mat @ x.imag)
        y -= shift * x
        return y

    v = v0.astype(complex, copy=True)
    t = 0.0
    direction = 1.0 if t_target > 0 else -1.0
    remaining = abs(t_target)
    dt = remaining
    min_dt = 1e-18 * time_scale

    while remaining > 0.0:
        dt = min(dt, remaining)
        budget = tol * dt / time_scale
        new_v, err = _lanczos_step(matvec, v, direction * dt, budget, m_max)
        if new_v is None:
            dt *= 0.5
            if dt < min_dt:
                raise PropagationError(
                    f"time step underflow at t={t:.3e}s (err estimate {err:.3e})"
                )
            continue
        v = new_v
        t += direction * dt
        remaining -= dt
        dt *= 1.5  # gentle growth; clipped to the remaining interval above

    return v * np.exp(-1j * shift * t_target)


def evolve(h, req, basis):
    """Sample per-ion <sigma_z> on a uniform grid under the Hamiltonian."""
    if req.amplitudes is not None:
        v0 = np.asarray(req.amplitudes, dtype=complex)
        if v0.shape != (basis.dimension,):
            raise ValueError("amplitude vector length does not match the sector")
        nrm = np.linalg.norm(v0)
        if abs(nrm - 1.0) > 1e-8:
            raise ValueError(f"initial state norm {nrm} is not 1")
    else:
        v0 = prepare_initial_state(basis, req.excited_ions)

    times = np.linspace(0.0, req.total_time, req.samples)

    if req.method == "dense-oracle":
        if basis.dimension > req.dense_cap:
            raise ValueError(
                f"dense oracle limited to D <= {req.dense_cap}, "
                f"got D = {basis.dimension}"
            )
        evals, evecs = np.linalg.eigh(h.dense())
        coeffs = evecs.conj().T @ v0
        states = [
            evecs @ (np.exp(-1j * evals * t) * coeffs) for t in times
        ]
    else:
        states = [v0.copy()]
        v = v0
        for k in range(1, req.samples):
            v = propagate_krylov(
                h,
                v,
                times[k] - times[k - 1],
                req.krylov_tol,
                req.max_krylov_dim,
                time_scale=req.total_time,
            )
            states.append(v)

    n = basis.n_ions
    m = basis.excitations
    sz = np.empty((req.samples, n))
    norm_drift = np.empty(req.samples)
    exc_drift = np.empty(req.samples)
    for k, v in enumerate(states):
        nrm = np.linalg.norm(v)
        norm_drift[k] = abs(nrm - 1.0)
        u = v / nrm
        sz[k] = sigma_z_expectation(basis, u)
        exc_drift[k] = abs(excitation_expectation(basis, u) - m)

    return TimeSeries(
        times=times,
        sigma_z=sz,
        norm_drift=norm_drift,
        excitation_drift=exc_drift,
        states=np.array(states) if req.store_states else None,
    )
