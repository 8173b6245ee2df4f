"""Generalized Dicke basis and the all-to-all Lindbladian.

A basis element is labelled by doubled quantum numbers ``(q2, qz2, sz2)``.
Per site, a density-matrix element is one of four single-site operators:

=====  ===========  =================
name   ket, bra     count
=====  ===========  =================
u      up, up       ``(q2 + qz2)/2``
d      down, down   ``(q2 - qz2)/2``
s      up, down     ``(N - q2 + sz2)/2``
c      down, up     ``(N - q2 - sz2)/2``
=====  ===========  =================

Coefficients are stored in the renormalized convention: the value of any one
density-matrix element belonging to the symmetrized class. Multiply by
:func:`multiplicity` to get the class total.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .spectral import canonicalize
from .twosite import Geometry, JumpRates


class GDickeIndex(NamedTuple):
    q2: int
    qz2: int
    sz2: int

    @property
    def q(self) -> float:
        return self.q2 / 2

    @property
    def qz(self) -> float:
        return self.qz2 / 2

    @property
    def sz(self) -> float:
        return self.sz2 / 2

    def counts(self, n: int) -> tuple[int, int, int, int]:
        """Site counts ``(u, d, s, c)``."""
        q2, qz2, sz2 = self
        return (q2 + qz2) // 2, (q2 - qz2) // 2, (n - q2 + sz2) // 2, (n - q2 - sz2) // 2

    def is_valid(self, n: int) -> bool:
        q2, qz2, sz2 = self
        return (
            0 <= q2 <= n
            and abs(qz2) <= q2
            and (q2 - qz2) % 2 == 0
            and abs(sz2) <= n - q2
            and (n - q2 - sz2) % 2 == 0
        )


def multiplicity(idx: GDickeIndex, n: int) -> int:
    """Number of density-matrix elements in the class ``idx`` (exact integer)."""
    idx = GDickeIndex(*idx)
    if not idx.is_valid(n):
        raise ValueError(f"{tuple(idx)} is not a valid index for N={n}")
    u, d, s, _ = idx.counts(n)
    return comb(n, u) * comb(n - u, d) * comb(n - u - d, s)


@dataclass(frozen=True)
class GDickeBasis:
    """Enumerated basis ordered by ``q2`` descending, then ``qz2``, then ``sz2`` ascending."""

    n_sites: int
    sector: int | None
    entries: tuple
    index_of: dict = field(repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self):
        return len(self.entries)

    @property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        e = np.array(self.entries, dtype=np.int64).reshape(-1, 3)
        return e[:, 0], e[:, 1], e[:, 2]

    def multiplicities(self) -> list[int]:
        return [multiplicity(e, self.n_sites) for e in self.entries]

    def multiplicity_array(self) -> np.ndarray:
        """Multiplicities as floats (exact integers converted once)."""
        if "mult" not in self._cache:
            arr = np.array([float(m) for m in self.multiplicities()])
            arr.setflags(write=False)
            self._cache["mult"] = arr
        return self._cache["mult"]

    def find(self, q2: int, qz2: int, sz2: int) -> int:
        try:
            return self.index_of[GDickeIndex(q2, qz2, sz2)]
        except KeyError:
            raise KeyError(f"({q2}, {qz2}, {sz2}) not in basis") from None


def enumerate_basis(n: int, sector: int | None = None) -> GDickeBasis:
    """Enumerate all generalized Dicke indices for ``n`` sites.

    Parameters
    ----------
    n : int
        Number of sites.
    sector : int, optional
        Keep only entries with this doubled ``sigma_z``.
    """
    if n < 1:
        raise ValueError("N must be positive")
    if sector is not None and abs(sector) > n:
        raise ValueError(f"sector sz2={sector} out of range for N={n}")
    out = []
    for q2 in range(n, -1, -1):
        for qz2 in range(-q2, q2 + 1, 2):
            if sector is None:
                out.extend(GDickeIndex(q2, qz2, s) for s in range(-(n - q2), n - q2 + 1, 2))
            elif abs(sector) <= n - q2 and (n - q2 - sector) % 2 == 0:
                out.append(GDickeIndex(q2, qz2, sector))
    return GDickeBasis(n, sector, tuple(out), {e: i for i, e in enumerate(out)})


def build_alltoall_lindbladian(
    n: int, rates: JumpRates, sector: int | None = 0, basis: GDickeBasis | None = None
) -> tuple[GDickeBasis, sp.csr_matrix]:
    """Assemble the all-to-all Lindbladian in the renormalized Dicke basis.

    The sum runs over ordered pairs ``a != b``. Elements whose target lies
    outside the basis are dropped.

    Returns
    -------
    basis : GDickeBasis
    op : scipy.sparse.csr_matrix
        Real generator acting on renormalized coefficient vectors.
    """
    if rates.geometry is not Geometry.ALL_TO_ALL:
        raise ValueError("build_alltoall_lindbladian needs all-to-all geometry")
    if rates.gamma3 != rates.gamma3prime:
        raise ValueError("the Dicke-basis assembly requires gamma3 == gamma3prime")
    rates.check_sites(n)
    if basis is None:
        basis = enumerate_basis(n, sector)
    elif basis.n_sites != n:
        raise ValueError("basis size mismatch")
    g1, g2, g3 = rates.gamma1, rates.gamma2, rates.gamma3
    q2, qz2, sz2 = basis.arrays
    q, qz, sz = q2 / 2, qz2 / 2, sz2 / 2
    h = n / 2
    hop = (h - q + 1) ** 2 - sz**2
    # (dq2, dqz2, value) per source entry
    terms = [
        (-2, 0, 2 * g1 * hop),
        (0, 0, -2 * g1 * ((h - q) ** 2 - sz**2)),
        (0, -2, g2 * (q + qz - 1) * (q - qz + 1)),
        (-2, -2, g2 * hop),
        (0, 0, -g2 * (h + qz) * (h + qz - 1) - g2 * sz**2),
        (0, 2, g3 * (q + qz) * (q + qz + 1)),
        (0, -2, g3 * (q + qz - 1) * (q - qz + 1)),
        (2, 2, -g3 * (q + qz + 2) * (q + qz + 1)),
        (-2, -2, -g3 * hop),
        (2, 0, g3 * (q + qz + 1) * (q - qz + 1)),
        (-2, 0, g3 * hop),
        (0, 0, -g3 * ((n - 1) * (h + qz) - 2 * q * (h - q))),
    ]
    cols = np.arange(len(basis))
    rows_l, cols_l, vals_l = [], [], []
    lookup = basis.index_of
    for dq2, dqz2, val in terms:
        val = np.broadcast_to(val, cols.shape)
        if dq2 == 0 and dqz2 == 0:
            rows_l.append(cols)
            cols_l.append(cols)
            vals_l.append(val)
            continue
        tgt = np.array(
            [lookup.get((a + dq2, b + dqz2, c), -1) for a, b, c in zip(q2, qz2, sz2)],
            dtype=np.int64,
        )
        keep = (tgt >= 0) & (val != 0)
        rows_l.append(tgt[keep])
        cols_l.append(cols[keep])
        vals_l.append(val[keep])
    op = sp.csr_matrix(
        (np.concatenate(vals_l), (np.concatenate(rows_l), np.concatenate(cols_l))),
        shape=(len(basis), len(basis)),
    )
    return basis, canonicalize(op)


@dataclass
class GDickeVector:
    basis: GDickeBasis
    coeffs: np.ndarray

    def totals(self) -> np.ndarray:
        """Class totals (renormalized coefficient times multiplicity)."""
        return self.coeffs * self.basis.multiplicity_array()


def _basis_for(n: int, basis: GDickeBasis | None) -> GDickeBasis:
    if basis is None:
        return enumerate_basis(n, 0)
    if basis.n_sites != n:
        raise ValueError("basis size mismatch")
    return basis


def _unit(basis: GDickeBasis, entries: dict) -> GDickeVector:
    v = np.zeros(len(basis))
    for key, val in entries.items():
        v[basis.find(*key)] = val
    return GDickeVector(basis, v)


def vacuum_vector(n: int, basis: GDickeBasis | None = None) -> GDickeVector:
    basis = _basis_for(n, basis)
    return _unit(basis, {(n, -n, 0): 1.0})


def polarized_up_vector(n: int, basis: GDickeBasis | None = None) -> GDickeVector:
    basis = _basis_for(n, basis)
    return _unit(basis, {(n, n, 0): 1.0})


def w_state_vector(n: int, basis: GDickeBasis | None = None) -> GDickeVector:
    """``|W><W|`` in renormalized coefficients: ``1/N`` on two entries."""
    if n < 2:
        raise ValueError("the W-state needs N >= 2")
    basis = _basis_for(n, basis)
    return _unit(basis, {(n - 2, -(n - 2), 0): 1.0 / n, (n, -n + 2, 0): 1.0 / n})


def mixed_vector(n: int, basis: GDickeBasis | None = None) -> GDickeVector:
    """Identity minus vacuum, normalized: ``1/(2^N - 1)`` on diagonal classes."""
    if n < 2:
        raise ValueError("N must be at least 2")
    basis = _basis_for(n, basis)
    w = 1.0 / (2.0**n - 1.0)
    return _unit(basis, {(n, qz2, 0): w for qz2 in range(-n + 2, n + 1, 2)})


def mixed_steady_vector(n: int, basis: GDickeBasis | None = None) -> GDickeVector:
    """Identity minus vacuum minus ``|W><W|``, normalized by ``2^N - 2``."""
    if n < 2:
        raise ValueError("N must be at least 2")
    basis = _basis_for(n, basis)
    norm = 2.0**n - 2.0
    out = mixed_vector(n, basis)
    out.coeffs *= (2.0**n - 1.0) / norm
    w = w_state_vector(n, basis)
    out.coeffs -= w.coeffs / norm
    return out


def trace_functional(basis: GDickeBasis) -> np.ndarray:
    """Row vector ``t`` with ``t @ coeffs = Tr rho``."""
    q2, _, sz2 = basis.arrays
    mult = basis.multiplicity_array()
    return np.where((q2 == basis.n_sites) & (sz2 == 0), mult, 0.0)


def _diag_mask(basis: GDickeBasis) -> np.ndarray:
    q2, _, sz2 = basis.arrays
    return (q2 == basis.n_sites) & (sz2 == 0)


def alpha_sz_functionals(basis: GDickeBasis) -> dict[float, np.ndarray]:
    """Linear functionals giving the weight of each total-``S_z`` sector."""
    n = basis.n_sites
    mult = basis.multiplicity_array()
    out = {}
    for qz2 in range(-n, n + 1, 2):
        key = (n, qz2, 0)
        if key in basis.index_of:
            f = np.zeros(len(basis))
            f[basis.index_of[key]] = mult[basis.index_of[key]]
            out[qz2 / 2] = f
    return out


def magnetization_functional(basis: GDickeBasis) -> np.ndarray:
    """Functional for the excitation density ``(1/N) sum_a n_a``."""
    n = basis.n_sites
    q2, qz2, _ = basis.arrays
    ups = (q2 + qz2) / 2
    return np.where(_diag_mask(basis), basis.multiplicity_array() * ups / n, 0.0)


def xx_functional(basis: GDickeBasis) -> np.ndarray:
    """Functional for the pair average of ``<X_a X_b>``.

    Every class with exactly two off-diagonal sites contributes its total;
    the average runs over ``binom(N, 2)`` pairs.
    """
    n = basis.n_sites
    q2, _, _ = basis.arrays
    return np.where(q2 == n - 2, basis.multiplicity_array(), 0.0) / comb(n, 2)


def _check_trace(v: GDickeVector, tol: float = 1e-9) -> None:
    tr = trace_functional(v.basis) @ v.coeffs
    if abs(tr - 1.0) > tol:
        raise ValueError(f"vector is not trace one (trace={tr})")


def alpha_sz_distribution(v: GDickeVector) -> dict[float, float]:
    """Weights ``alpha_Sz`` of each total-``S_z`` sector of a physical vector."""
    _check_trace(v)
    return {k: float(f @ v.coeffs) for k, f in alpha_sz_functionals(v.basis).items()}


def xx_correlator(v: GDickeVector) -> float:
    return float(xx_functional(v.basis) @ v.coeffs)


def magnetization_density(v: GDickeVector) -> float:
    _check_trace(v)
    return float(magnetization_functional(v.basis) @ v.coeffs)


def observables(basis: GDickeBasis) -> dict[str, np.ndarray]:
    """Named functionals used for trajectories: ``trace``, ``M``, ``XX``, ``alpha[Sz]``."""
    out = {
        "trace": trace_functional(basis),
        "M": magnetization_functional(basis),
        "XX": xx_functional(basis),
    }
    for sz, f in alpha_sz_functionals(basis).items():
        out[f"alpha[{sz:g}]"] = f
    return out


def kernel_vectors(n: int, basis: GDickeBasis) -> list[np.ndarray]:
    """Vacuum and ``|W><W|`` coefficient vectors, the known steady states."""
    return [vacuum_vector(n, basis).coeffs, w_state_vector(n, basis).coeffs]


def similarity_scaling(basis: GDickeBasis) -> np.ndarray:
    """Square-root multiplicities, a diagonal similarity that tames conditioning."""
    return np.sqrt(basis.multiplicity_array())
