"""Sparse storage helpers, eigensolvers, time integration and exponent fits.

Operators are :class:`scipy.sparse.csr_matrix` objects in canonical form
(sorted indices, no duplicates, no stored entries below ``1e-15``).
Matrix-free application uses :class:`scipy.sparse.linalg.LinearOperator`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as sla
from scipy import stats

SparseOperator = sp.csr_matrix

DENSE_CAP = 4096
ZERO_TOL_REL = 1e-10
#: RK4 step is ``c / rho_est``; real-axis stability of RK4 ends near 2.785.
DEFAULT_STEP_C = 0.5
_TINY = np.finfo(float).tiny


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver fails; carries the residual reached."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


def canonicalize(op, drop_tol: float = 1e-15) -> sp.csr_matrix:
    """Return ``op`` as CSR with sorted, summed indices and tiny entries removed."""
    out = sp.csr_matrix(op, copy=True)
    out.sum_duplicates()
    if out.nnz:
        out.data[np.abs(out.data) <= drop_tol] = 0
        out.eliminate_zeros()
    out.sort_indices()
    return out


@dataclass
class SpectrumResult:
    """Eigenvalues sorted by real part (descending) with a classified kernel.

    ``gap`` is ``|Re lambda|`` of the leading eigenvalue outside the kernel,
    ``nan`` if none was found.
    """

    eigenvalues: np.ndarray
    kernel_dim: int
    gap: float
    zero_tol: float
    kernel_vectors: np.ndarray | None = None
    gap_vector: np.ndarray | None = None
    residual: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def nonzero(self) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues) >= self.zero_tol]


@dataclass
class TimeSeries:
    times: np.ndarray
    values: dict
    meta: dict = field(default_factory=dict)
    final_state: np.ndarray | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for k, v in self.values.items():
            if len(v) != len(self.times):
                raise ValueError(f"series {k!r} has the wrong length")


def _as_array(op):
    return op.toarray() if sp.issparse(op) else np.asarray(op)


def _sort_desc(w, v=None):
    order = np.lexsort((-w.imag, -w.real))
    return (w[order], None if v is None else v[:, order])


def eig_dense(op, cap: int = DENSE_CAP, zero_tol_rel: float = ZERO_TOL_REL,
              scaling: np.ndarray | None = None) -> SpectrumResult:
    """Full spectrum with a dense non-symmetric solver.

    Parameters
    ----------
    op : matrix or sparse matrix
    cap : int
        Largest dimension accepted.
    zero_tol_rel : float
        Eigenvalues with ``|lambda| < zero_tol_rel * max|lambda|`` form the kernel.
    scaling : array, optional
        Positive diagonal ``d``; the solver sees ``D op D^-1``, which has the
        same spectrum but can be far better conditioned. Eigenvectors are
        mapped back.
    """
    a = _as_array(op)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("operator must be square")
    if n > cap:
        raise ValueError(f"dimension {n} exceeds dense cap {cap}")
    if not np.all(np.isfinite(a)):
        raise ValueError("operator has non-finite entries")
    if scaling is not None:
        d = np.asarray(scaling, dtype=float)
        a = a * d[:, None] / d[None, :]
    w, v = np.linalg.eig(a)
    if scaling is not None:
        v = v / d[:, None]
    w, v = _sort_desc(w, v)
    scale = np.abs(w).max() if n else 0.0
    tol = zero_tol_rel * scale
    ker = np.abs(w) < tol
    if scale == 0:
        ker[:] = True
    outside = np.flatnonzero(~ker)
    gap = float(abs(w[outside[0]].real)) if len(outside) else math.nan
    return SpectrumResult(
        eigenvalues=w,
        kernel_dim=int(ker.sum()),
        gap=gap,
        zero_tol=float(tol),
        kernel_vectors=v[:, ker],
        gap_vector=v[:, outside[0]] if len(outside) else None,
    )


def estimate_spectral_bound(op, iters: int = 60, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral radius of ``op``.

    A 10% margin is added; the infinity norm caps it from above.
    """
    n = op.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = op @ x
        nrm = np.linalg.norm(y)
        if nrm == 0:
            break
        est = nrm
        x = y / nrm
    inf_norm = float(abs(op).sum(axis=1).max()) if sp.issparse(op) else float(np.abs(op).sum(axis=1).max())
    return float(min(1.1 * est, inf_norm)) if est > 0 else inf_norm


def _deflator(known_kernel, n, dtype):
    if not known_kernel:
        return np.zeros((n, 0), dtype=dtype)
    vecs = np.column_stack([np.asarray(k, dtype=dtype) for k in known_kernel])
    q, _ = np.linalg.qr(vecs)
    return q


def eig_gap_arnoldi(op, known_kernel=(), k: int = 6, ncv: int | None = None,
                    tol: float = 1e-12, maxiter: int | None = None, seed: int = 0,
                    zero_tol_rel: float = ZERO_TOL_REL) -> SpectrumResult:
    """Leading eigenvalues outside the known kernel by deflated Arnoldi iteration.

    The iteration runs on ``P op P`` with ``P = I - Q Q^dagger``, ``Q`` an
    orthonormal basis of ``known_kernel``. Eigenvectors that fall back into
    ``span(Q)`` are discarded. Returned eigenvalues exclude the known kernel;
    additional near-zero modes are counted into ``kernel_dim``.

    Raises
    ------
    ConvergenceError
        If ARPACK does not converge.
    ValueError
        If every computed eigenvalue lies in the kernel.
    """
    n = op.shape[0]
    dtype = np.result_type(op.dtype, np.float64)
    q = _deflator(list(known_kernel), n, dtype)
    qh = q.conj().T

    def proj(x):
        return x - q @ (qh @ x) if q.shape[1] else x

    def matvec(x):
        return proj(op @ proj(x))

    lin = sla.LinearOperator((n, n), matvec=matvec, dtype=dtype)
    scale = estimate_spectral_bound(op, seed=seed)
    zero_tol = zero_tol_rel * scale
    rng = np.random.default_rng(seed)
    v0 = proj(rng.standard_normal(n).astype(dtype))
    if scale == 0 or not np.any(v0):
        raise ValueError("operator is entirely kernel; nothing to compute")
    k_eff = min(k + q.shape[1], n - 2)
    if k_eff < 1:
        raise ValueError("operator too small for Arnoldi; use eig_dense")
    ncv = ncv or min(n, max(2 * k_eff + 1, 40))
    try:
        w, v = sla.eigs(lin, k=k_eff, which="LR", v0=v0, ncv=ncv, tol=tol,
                        maxiter=maxiter or 50 * n)
    except sla.ArpackNoConvergence as exc:
        raise ConvergenceError(f"Arnoldi did not converge ({len(exc.eigenvalues)} of {k_eff} modes)") from exc
    w, v = _sort_desc(w, v)
    overlap = np.linalg.norm(qh @ v, axis=0) if q.shape[1] else np.zeros(len(w))
    leaked = overlap > 0.5
    w, v, overlap = w[~leaked], v[:, ~leaked], overlap[~leaked]
    resid = max((np.linalg.norm(matvec(v[:, i]) - w[i] * v[:, i]) for i in range(len(w))), default=0.0)
    ker = np.abs(w) < zero_tol
    outside = np.flatnonzero(~ker)
    if not len(outside):
        raise ValueError("all computed eigenvalues lie in the kernel")
    return SpectrumResult(
        eigenvalues=w,
        kernel_dim=q.shape[1] + int(ker.sum()),
        gap=float(abs(w[outside[0]].real)),
        zero_tol=float(zero_tol),
        kernel_vectors=np.column_stack([q, v[:, ker]]) if ker.any() else q,
        gap_vector=v[:, outside[0]],
        residual=float(resid),
        info={"kernel_overlap": float(overlap[outside].max()), "n_leaked": int(leaked.sum())},
    )


def _rk4_step(op, y, h):
    k1 = op @ y
    k2 = op @ (y + 0.5 * h * k1)
    k3 = op @ (y + 0.5 * h * k2)
    k4 = op @ (y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def evolve(op, v0, t_grid, observables: dict | None = None, c: float = DEFAULT_STEP_C,
           max_step: float | None = None, trace_functional=None,
           drift_tol: float = 1e-9, rho_est: float | None = None) -> TimeSeries:
    """Integrate ``dv/dt = op v`` with fixed-step classical RK4.

    Parameters
    ----------
    op : sparse matrix
    v0 : array
        Initial state; ``t_grid[0]`` is its time.
    t_grid : array
        Strictly increasing output times.
    observables : dict of name -> functional
        Each functional ``f`` is recorded as ``f @ v`` at every grid time.
    c : float
        Step-size factor, ``h <= c / rho_est``.
    max_step : float, optional
        Additional upper bound on the step.
    trace_functional : array, optional
        Monitored; the drift per unit time is stored in ``meta`` and a warning
        is issued when it exceeds ``drift_tol``. The state is never renormalized.

    Subnormal entries are flushed to zero after every step: they carry no
    usable information and slow sparse products by an order of magnitude.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    v = np.array(v0, dtype=np.result_type(op.dtype, np.asarray(v0).dtype, np.float64))
    if v.shape != (op.shape[1],):
        raise ValueError("initial state dimension mismatch")
    observables = observables or {}
    rho = estimate_spectral_bound(op) if rho_est is None else rho_est
    h_max = c / rho if rho > 0 else np.inf
    if max_step is not None:
        h_max = min(h_max, max_step)
    span = t_grid[-1] - t_grid[0]
    if span > 0 and h_max < 1e-14 * span:
        raise FloatingPointError("step size underflow")
    rec = {k: np.empty(len(t_grid)) for k in observables}
    tr0 = None if trace_functional is None else trace_functional @ v
    drift = 0.0
    steps = 0

    def record(i):
        for k, f in observables.items():
            rec[k][i] = np.real(f @ v)

    record(0)
    for i in range(1, len(t_grid)):
        dt = t_grid[i] - t_grid[i - 1]
        m = max(1, math.ceil(dt / h_max - 1e-12)) if np.isfinite(h_max) else 1
        h = dt / m
        for _ in range(m):
            v = _rk4_step(op, v, h)
            v[np.abs(v) < _TINY] = 0
        steps += m
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"non-finite state at t={t_grid[i]}")
        if tr0 is not None:
            drift = max(drift, abs(trace_functional @ v - tr0))
        record(i)
    drift_rate = drift / span if span > 0 else 0.0
    meta = {"rho_est": rho, "h_max": h_max, "steps": steps, "step_c": c,
            "trace_drift": drift, "trace_drift_per_time": drift_rate}
    if tr0 is not None and drift_rate > drift_tol:
        warnings.warn(f"trace drift {drift_rate:.3g} per unit time exceeds {drift_tol:g}",
                      RuntimeWarning, stacklevel=2)
    return TimeSeries(t_grid, rec, meta, final_state=v)


def propagate_dense(op, v0, t: float, scaling: np.ndarray | None = None,
                    cap: int = DENSE_CAP) -> np.ndarray:
    """Return ``exp(t op) v0`` from a dense matrix exponential.

    Meant for long horizons where the stiffness bound on RK4 steps makes
    explicit integration impractical. ``scaling`` is a positive diagonal
    similarity as in :func:`eig_dense`.
    """
    a = _as_array(op)
    if a.shape[0] > cap:
        raise ValueError(f"dimension {a.shape[0]} exceeds dense cap {cap}")
    if t < 0:
        raise ValueError("t must be nonnegative")
    v0 = np.asarray(v0)
    if scaling is None:
        return la.expm(t * a) @ v0
    d = np.asarray(scaling, dtype=float)
    return (la.expm(t * (a * d[:, None] / d[None, :])) @ (v0 * d)) / d


def fit_power_law(ns, gaps) -> tuple[float, float]:
    """Fit ``gap ~ N^-z``; returns ``(z, stderr)``."""
    ns = np.asarray(ns, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if len(ns) != len(gaps) or len(ns) < 3:
        raise ValueError("need at least three (N, gap) points")
    if np.any(ns <= 0) or np.any(gaps <= 0):
        raise ValueError("sizes and gaps must be positive")
    r = stats.linregress(np.log(ns), np.log(gaps))
    return float(-r.slope), float(r.stderr)


def fit_decay_exponent(series: TimeSeries, window, mode: str = "power",
                       observable: str = "M", asymptote: float = 0.0) -> tuple[float, float]:
    """Fit the decay of ``observable - asymptote`` inside ``window``.

    ``mode="exponential"`` fits ``log(v) = a - rate * t`` and returns the rate;
    ``mode="power"`` fits ``log(v) = a - delta * log(t)`` and returns delta.
    """
    lo, hi = window
    if lo >= hi:
        raise ValueError("empty fit window")
    t = series.times
    if lo < t[0] or hi > t[-1]:
        raise ValueError("fit window outside the series range")
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 5:
        raise ValueError("fit window holds fewer than 5 samples")
    y = np.asarray(series.values[observable])[sel] - asymptote
    if np.any(y <= 0):
        raise ValueError("nonpositive residuals inside the fit window")
    if mode == "exponential":
        x = t[sel]
    elif mode == "power":
        if lo <= 0:
            raise ValueError("power fits need t > 0")
        x = np.log(t[sel])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    r = stats.linregress(x, np.log(y))
    return float(-r.slope), float(r.stderr)
