"""Desk-scale invariant suite shared by the ``verify`` subcommand and the tests."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import exact, fullspace as fs, gdicke as gd, spectral
from .twosite import JumpRates


@dataclass(frozen=True)
class Check:
    name: str
    tolerance: float
    observed: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.observed) and self.observed <= self.tolerance)


def _rel_inf(row, op) -> float:
    dense = op.toarray() if hasattr(op, "toarray") else np.asarray(op)
    return float(np.abs(row @ dense).max() / np.abs(dense).max())


def check_trace_annihilation() -> list[Check]:
    out = []
    lop = fs.build_nn_superoperator(5, JumpRates.chain(0.8, 1.3, 0.6), block=None)
    out.append(Check("trace annihilation (chain N=5)", 1e-10,
                     _rel_inf(lop.trace_functional(), lop.matrix)))
    basis, op = gd.build_alltoall_lindbladian(20, JumpRates.alltoall(1, 1, 0.1), sector=None)
    out.append(Check("trace annihilation (Dicke N=20)", 1e-10,
                     _rel_inf(gd.trace_functional(basis), op)))
    return out


def check_dark_states() -> list[Check]:
    rates = JumpRates.chain(1, 1, 0.7)
    lop = fs.build_nn_superoperator(6, rates, block=0)
    res = max(float(np.abs(lop.matrix @ lop.vectorize(fs.density(psi))).max())
              for psi in (fs.vacuum_state(6), fs.w_state(6)))
    basis, op = gd.build_alltoall_lindbladian(20, JumpRates.alltoall(1, 1, 0.1), sector=0)
    res_d = max(float(np.abs(op @ v).max()) for v in gd.kernel_vectors(20, basis))
    return [Check("dark states annihilated (chain N=6)", 1e-12, res),
            Check("dark states annihilated (Dicke N=20)", 1e-10, res_d)]


def check_kernel_dims() -> list[Check]:
    basis, op = gd.build_alltoall_lindbladian(12, JumpRates.alltoall(1, 1, 0.3), sector=0)
    r = spectral.eig_dense(op, scaling=gd.similarity_scaling(basis))
    lop = fs.build_nn_superoperator(5, JumpRates.chain(1, 1, 0.5), block=0)
    r2 = spectral.eig_dense(lop.matrix)
    return [Check("Dicke sigma_z=0 kernel dimension is 2 (N=12)", 0, abs(r.kernel_dim - 2)),
            Check("chain Delta S_z=0 kernel dimension is 2 (N=5)", 0, abs(r2.kernel_dim - 2))]


def check_arnoldi_vs_dense(seed: int = 0) -> list[Check]:
    out = []
    basis, op = gd.build_alltoall_lindbladian(20, JumpRates.alltoall(1, 1, 0.1), sector=0)
    dense = spectral.eig_dense(op, scaling=gd.similarity_scaling(basis))
    arn = spectral.eig_gap_arnoldi(op, gd.kernel_vectors(20, basis), seed=seed)
    out.append(Check("Arnoldi = dense gap (Dicke N=20)", 1e-8, abs(arn.gap - dense.gap)))
    lop = fs.build_nn_superoperator(6, JumpRates.chain(1, 1, 0.5), block=0)
    dense = spectral.eig_dense(lop.matrix)
    arn = spectral.eig_gap_arnoldi(lop.matrix, fs.known_kernel(lop), seed=seed)
    out.append(Check("Arnoldi = dense gap (chain N=6)", 1e-8, abs(arn.gap - dense.gap)))
    out.append(Check("Arnoldi gap vector outside kernel", 1e-8, arn.info["kernel_overlap"]))
    return out


def check_integrator_drift() -> list[Check]:
    basis, op = gd.build_alltoall_lindbladian(30, JumpRates.alltoall(1, 1, 0.05), sector=0)
    tr = gd.trace_functional(basis)
    ts = spectral.evolve(op, gd.polarized_up_vector(30, basis).coeffs, np.linspace(0, 10, 11),
                         {"trace": tr}, trace_functional=tr)
    return [Check("RK4 trace drift per unit time (Dicke N=30)", 1e-9,
                  ts.meta["trace_drift_per_time"])]


def check_closed_forms() -> list[Check]:
    out = []
    lop = fs.build_single_spinup(8, JumpRates.chain(1, 1, 0))
    g = spectral.eig_dense(lop.matrix).gap
    ref = exact.single_spinup_gap(8)
    out.append(Check("single-excitation gap vs closed form (N=8)", 1e-8, abs(g - ref) / ref))
    g = fs.offdiag_block_gap(5, JumpRates.chain(1, 1, 0.5))
    ref = exact.offdiag_gap(5, 1, 0.5)
    out.append(Check("off-diagonal gap vs closed form (N=5)", 1e-8, abs(g - ref) / ref))
    worst = 0.0
    for k in exact.momentum_grid(8):
        if abs(math.cos(k)) < 1e-12:
            continue
        m = np.sort(np.linalg.eigvals(exact.impurity_matrix(exact.ImpurityProblem(8, k))).real)
        worst = max(worst, float(np.abs(exact.transfer_roots(8, k) - m).max()))
    out.append(Check("transfer roots = impurity eigenvalues (N=8)", 1e-10, worst))
    return out


def check_observables() -> list[Check]:
    basis = gd.enumerate_basis(80, 0)
    xx = gd.xx_correlator(gd.w_state_vector(80, basis))
    d = gd.alpha_sz_distribution(gd.mixed_steady_vector(12, gd.enumerate_basis(12, 0)))
    ref = exact.mixed_distribution(12)
    err = max(abs(d[sz] - float(w)) for sz, w in ref.items())
    return [Check("W-state <XX> = 2/N (N=80)", 1e-10, abs(xx - 2 / 80)),
            Check("mixed steady vector sector weights (N=12)", 1e-12, err)]


def check_dicke_vs_fullspace() -> list[Check]:
    n = 4
    rates = JumpRates.alltoall(1, 0.7, 0.4)
    basis, op = gd.build_alltoall_lindbladian(n, rates, sector=0)
    lop = fs.build_alltoall_superoperator(n, rates, block=0)
    times = np.linspace(0, 5, 11)
    a = spectral.evolve(op, gd.polarized_up_vector(n, basis).coeffs, times, gd.observables(basis))
    b = spectral.evolve(lop.matrix, lop.vectorize(fs.density(fs.polarized_up_state(n))), times,
                        fs.observables(lop))
    err = max(float(np.abs(a.values[k] - b.values[k]).max()) for k in a.values)
    return [Check("Dicke = full-space trajectories (N=4)", 1e-8, err)]


def check_order_parameter(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    rates = JumpRates.chain(1, 1, 0.3)
    worst = 0.0
    idx = 1 << np.arange(6)
    for _ in range(5):
        psi = np.zeros(1 << 6, dtype=complex)
        psi[idx] = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        psi /= np.linalg.norm(psi)
        rho = fs.density(psi)
        lhs, rhs = fs.check_dPdt_identity(rho, rates)
        worst = max(worst, abs(lhs - rhs - fs.dPdt_coherence_correction(rho, rates)))
    mix = np.zeros((1 << 6, 1 << 6))
    w = rng.dirichlet(np.ones(6))
    mix[idx, idx] = w
    lhs, rhs = fs.check_dPdt_identity(mix, rates)
    return [Check("order-parameter rate identity with coherence term (chain N=6)", 1e-9, worst),
            Check("order-parameter rate identity, incoherent state (chain N=6)", 1e-9, abs(lhs - rhs))]


SUITE: tuple[Callable[[], list[Check]], ...] = (
    check_trace_annihilation,
    check_dark_states,
    check_kernel_dims,
    check_arnoldi_vs_dense,
    check_integrator_drift,
    check_closed_forms,
    check_observables,
    check_dicke_vs_fullspace,
    check_order_parameter,
)


def run_suite() -> list[Check]:
    out: list[Check] = []
    for fn in SUITE:
        out.extend(fn())
    return out
