"""Brute-force Lindbladians on the vectorized ``2^N x 2^N`` Liouville space.

A density matrix ``rho`` is vectorized row-major: element ``(i, j)`` sits at
key ``i * 2^N + j``. The superoperator is then

    sum_l gamma_l [ L (x) L* - 1/2 (L^dag L (x) I + I (x) (L^dag L)^T) ].

Operators may be restricted to index subsets (a block of fixed ket-minus-bra
excitation number, optionally with fixed ket excitation number). The subset is
kept in ascending key order and stored on :class:`LiouvilleOperator`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from math import comb

import numpy as np
import scipy.sparse as sp

from . import spectral
from .spectral import canonicalize
from .twosite import Geometry, JumpFamily, JumpRates, embed_pair_operator, jump_matrix, two_site_state, TwoSiteLabel

#: Default cap on N for assembling full-space blocks.
MAX_SITES = 10
#: All-to-all brute force is an oracle for small N only.
MAX_ALLTOALL_SITES = 6


def popcounts(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    out = np.zeros(1 << n, dtype=np.int64)
    for a in range(n):
        out += (idx >> a) & 1
    return out


@dataclass
class LiouvilleOperator:
    """Superoperator restricted to the index set ``(kets[i], bras[i])``."""

    matrix: sp.csr_matrix
    kets: np.ndarray
    bras: np.ndarray
    n_sites: int
    delta: int | None = None
    geometry: Geometry = Geometry.CHAIN
    pairs: tuple = ()
    meta: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.kets)

    @property
    def keys(self) -> np.ndarray:
        return self.kets * (1 << self.n_sites) + self.bras

    def locate(self, kets, bras) -> np.ndarray:
        """Positions of ``(kets, bras)`` in this operator, ``-1`` if absent."""
        want = np.asarray(kets) * (1 << self.n_sites) + np.asarray(bras)
        keys = self.keys
        pos = np.searchsorted(keys, want)
        pos = np.minimum(pos, len(keys) - 1)
        return np.where(keys[pos] == want, pos, -1)

    def vectorize(self, rho) -> np.ndarray:
        """Restrict a dense ``2^N`` density matrix to this index set."""
        rho = np.asarray(rho)
        return rho[self.kets, self.bras]

    def unvectorize(self, v) -> np.ndarray:
        d = 1 << self.n_sites
        out = np.zeros((d, d), dtype=np.result_type(v, np.float64))
        out[self.kets, self.bras] = v
        return out

    def functional(self, obs) -> np.ndarray:
        """Row vector ``f`` with ``f @ v = Tr(rho O)``; entries are ``O[j, i]``."""
        if sp.issparse(obs):
            obs = obs.tocsr()
            return np.asarray(obs[self.bras, self.kets]).ravel()
        return np.asarray(obs)[self.bras, self.kets]

    def trace_functional(self) -> np.ndarray:
        return (self.kets == self.bras).astype(float)


def chain_pairs(n: int, periodic: bool) -> list[tuple[int, int]]:
    """Bonds ``(a, a+1)``, each once; periodic adds ``(N-1, 0)`` when ``N > 2``."""
    bonds = [(a, a + 1) for a in range(n - 1)]
    if periodic and n > 2:
        bonds.append((n - 1, 0))
    return bonds


def _index_set(n: int, delta: int | None, ket_counts) -> tuple[np.ndarray, np.ndarray]:
    d = 1 << n
    pc = popcounts(n)
    keys = []
    for k_n in range(n + 1):
        if ket_counts is not None and k_n not in ket_counts:
            continue
        kets = np.flatnonzero(pc == k_n)
        bras = np.arange(d) if delta is None else np.flatnonzero(pc == k_n - delta)
        if len(kets) and len(bras):
            keys.append((kets[:, None] * d + bras[None, :]).ravel())
    keys = np.sort(np.concatenate(keys)) if keys else np.zeros(0, dtype=np.int64)
    return keys // d, keys % d


def _assemble(n, pair_ops, kets, bras, delta, hamiltonian=None):
    """Sum the Lindblad terms of ``(rate, L)`` pairs restricted to the index set."""
    d = 1 << n
    pc = popcounts(n)
    keys = kets * d + bras
    dim = len(keys)
    ket_vals, bra_vals = np.unique(kets), np.unique(bras)
    kets_by = [ket_vals[pc[ket_vals] == m] for m in range(n + 1)]
    bras_by = [bra_vals[pc[bra_vals] == m] for m in range(n + 1)]
    empty = np.zeros(0, dtype=np.int64)

    def partner_bras(m):
        if delta is None:
            return bra_vals
        return bras_by[m - delta] if 0 <= m - delta <= n else empty

    def partner_kets(m):
        if delta is None:
            return ket_vals
        return kets_by[m + delta] if 0 <= m + delta <= n else empty

    ket_set = np.zeros(d, dtype=bool)
    ket_set[ket_vals] = True
    rows_l, cols_l, vals_l = [], [], []

    def emit(rk, ck, v):
        pos_r = np.minimum(np.searchsorted(keys, rk), dim - 1)
        pos_c = np.minimum(np.searchsorted(keys, ck), dim - 1)
        ok = (keys[pos_r] == rk) & (keys[pos_c] == ck) & (v != 0)
        rows_l.append(pos_r[ok])
        cols_l.append(pos_c[ok])
        vals_l.append(v[ok])

    ktot = sp.csr_matrix((d, d))
    for rate, lmat in pair_ops:
        ktot = ktot + rate * (lmat.T @ lmat)
        coo = lmat.tocoo()
        r, c, v = coo.row, coo.col, coo.data
        pcc = pc[c]
        for m in range(n + 1):
            i1 = np.flatnonzero((pcc == m) & ket_set[c])
            if not len(i1):
                continue
            i2 = np.arange(len(c)) if delta is None else np.flatnonzero(pcc == m - delta)
            if not len(i2):
                continue
            rk = (r[i1][:, None] * d + r[i2][None, :]).ravel()
            ck = (c[i1][:, None] * d + c[i2][None, :]).ravel()
            emit(rk, ck, (rate * v[i1][:, None] * v[i2][None, :]).ravel())
    # generator part  eff rho + rho eff^dag  with  eff = -K/2 - iH
    eff = -0.5 * ktot
    if hamiltonian is not None:
        eff = eff - 1j * hamiltonian
    eco = eff.tocoo()
    x, y, w = eco.row, eco.col, eco.data
    for m in range(n + 1):
        # (eff rho)(x, j) += eff(x, y) rho(y, j)
        sel = np.flatnonzero((pc[y] == m) & ket_set[y])
        js = partner_bras(m)
        if len(sel) and len(js):
            rk = (x[sel][:, None] * d + js[None, :]).ravel()
            ck = (y[sel][:, None] * d + js[None, :]).ravel()
            emit(rk, ck, np.repeat(w[sel], len(js)))
        # (rho eff^dag)(i, x) += rho(i, y) conj(eff(x, y))
        sel = np.flatnonzero(pc[y] == m)
        is_ = partner_kets(m)
        if len(sel) and len(is_):
            rk = (is_[:, None] * d + x[sel][None, :]).ravel()
            ck = (is_[:, None] * d + y[sel][None, :]).ravel()
            emit(rk, ck, np.tile(np.conj(w[sel]), len(is_)))
    if not rows_l:
        return sp.csr_matrix((dim, dim))
    rows, cols, vals = np.concatenate(rows_l), np.concatenate(cols_l), np.concatenate(vals_l)
    return canonicalize(sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim)))


def _pair_ops(n, rates, pairs):
    ops = []
    for kind in JumpFamily:
        g = rates.rate(kind)
        if g == 0:
            continue
        m = jump_matrix(kind)
        for a, b in pairs:
            ops.append((g, embed_pair_operator(m, a, b, n)))
    return ops


def coherent_hamiltonian(n: int) -> sp.csr_matrix:
    """``(1/sqrt2)(X_0 Pi - Pi X_{N-1})`` with ``Pi = (1/2)[sum_{i=1}^{N-2} z_i - (N-4)]``.

    Here ``z_i = 1 - 2 n_i`` is ``+1`` on spin down, the sign convention under
    which the term annihilates the W-state.
    """
    if n < 3:
        raise ValueError("the coherent term needs N >= 3")
    d = 1 << n
    idx = np.arange(d)
    z = np.zeros(d)
    for i in range(1, n - 1):
        z += 1 - 2 * ((idx >> i) & 1)
    pi = sp.diags(0.5 * (z - (n - 4)))

    def x(site):
        return sp.csr_matrix((np.ones(d), (idx ^ (1 << site), idx)), shape=(d, d))

    return canonicalize((x(0) @ pi - pi @ x(n - 1)) / np.sqrt(2))


def build_superoperator(n: int, rates: JumpRates, pairs, block: int | None = 0,
                        ket_counts=None, coherent: bool = False,
                        geometry: Geometry = Geometry.CHAIN, cap: int = MAX_SITES) -> LiouvilleOperator:
    """Lindbladian for jump operators on ``pairs`` restricted to an index set.

    Parameters
    ----------
    block : int or None
        Ket-minus-bra excitation difference; ``None`` keeps the whole space.
    ket_counts : iterable of int, optional
        Further restrict to kets with these excitation numbers. Terms leaving
        the set are dropped (a projection, exact when the set is invariant).
    coherent : bool
        Add the coherent term of :func:`coherent_hamiltonian`. It does not
        conserve the excitation difference, so it needs ``block=None``.
    """
    if n > cap:
        raise ValueError(f"N={n} exceeds the full-space cap {cap}")
    if n < 2:
        raise ValueError("need at least two sites")
    if block is not None and abs(block) > n:
        raise ValueError(f"invalid block {block}")
    if coherent and block is not None:
        raise ValueError("the coherent term mixes blocks; use block=None")
    rates.check_sites(n)
    kc = None if ket_counts is None else set(int(k) for k in ket_counts)
    kets, bras = _index_set(n, block, kc)
    ham = coherent_hamiltonian(n) if coherent else None
    mat = _assemble(n, _pair_ops(n, rates, pairs), kets, bras, block, ham)
    return LiouvilleOperator(mat, kets, bras, n, block, geometry, tuple(pairs),
                             {"coherent": coherent, "rates": rates})


def build_nn_superoperator(n: int, rates: JumpRates, boundary: str | None = None,
                           block: int | None = 0, coherent: bool = False,
                           cap: int = MAX_SITES) -> LiouvilleOperator:
    """Nearest-neighbour chain Lindbladian, optionally a single ``Delta S_z`` block.

    ``boundary`` is ``"periodic"`` or ``"open"``; by default it follows
    ``rates.periodic``.
    """
    if rates.geometry is not Geometry.CHAIN:
        raise ValueError("build_nn_superoperator needs chain geometry")
    periodic = rates.periodic if boundary is None else _periodic(boundary)
    return build_superoperator(n, rates, chain_pairs(n, periodic), block=block,
                               coherent=coherent, geometry=Geometry.CHAIN, cap=cap)


def build_alltoall_superoperator(n: int, rates: JumpRates, block: int | None = None) -> LiouvilleOperator:
    """All-to-all brute force over ordered pairs ``a != b``, for ``N <= 6``."""
    if rates.geometry is not Geometry.ALL_TO_ALL:
        raise ValueError("build_alltoall_superoperator needs all-to-all geometry")
    if n > MAX_ALLTOALL_SITES:
        raise ValueError(f"N={n} exceeds the all-to-all oracle cap {MAX_ALLTOALL_SITES}")
    return build_superoperator(n, rates, list(permutations(range(n), 2)), block=block,
                               geometry=Geometry.ALL_TO_ALL, cap=MAX_ALLTOALL_SITES)


def _periodic(boundary: str) -> bool:
    if boundary not in ("periodic", "open"):
        raise ValueError(f"boundary must be 'periodic' or 'open', got {boundary!r}")
    return boundary == "periodic"


def build_single_spinup(n: int, rates: JumpRates, boundary: str | None = None) -> LiouvilleOperator:
    """Chain Lindbladian restricted to single-excitation kets and bras.

    The restriction is invariant when ``gamma3 = gamma3' = 0``. Works for
    ``N`` beyond the block cap because only ``N^2`` entries are kept.
    """
    if rates.geometry is not Geometry.CHAIN:
        raise ValueError("single spin-up sector needs chain geometry")
    periodic = rates.periodic if boundary is None else _periodic(boundary)
    return build_superoperator(n, rates, chain_pairs(n, periodic), block=0, ket_counts={1},
                               cap=16)


def project_single_spinup(lop: LiouvilleOperator) -> LiouvilleOperator:
    """Restrict a chain superoperator to single-excitation kets and bras."""
    if lop.geometry is not Geometry.CHAIN:
        raise ValueError("single spin-up projection needs chain geometry")
    pc = popcounts(lop.n_sites)
    sel = np.flatnonzero((pc[lop.kets] == 1) & (pc[lop.bras] == 1))
    mat = canonicalize(lop.matrix[sel][:, sel])
    return LiouvilleOperator(mat, lop.kets[sel], lop.bras[sel], lop.n_sites, 0,
                             lop.geometry, lop.pairs, dict(lop.meta))


# ---------------------------------------------------------------- states

def basis_state(n: int, index: int) -> np.ndarray:
    v = np.zeros(1 << n)
    v[index] = 1.0
    return v


def vacuum_state(n: int) -> np.ndarray:
    return basis_state(n, 0)


def polarized_up_state(n: int) -> np.ndarray:
    return basis_state(n, (1 << n) - 1)


def w_state(n: int, phases=None) -> np.ndarray:
    """Equal superposition of single excitations, optionally with site phases."""
    v = np.zeros(1 << n, dtype=complex if phases is not None else float)
    amp = np.ones(n) if phases is None else np.exp(1j * np.asarray(phases, dtype=float))
    v[1 << np.arange(n)] = amp / np.sqrt(n)
    return v


def haar_state(n: int, rng: np.random.Generator, exclude_vacuum: bool = True) -> np.ndarray:
    """Haar-random pure state.

    Draws ``2^N`` real parts then ``2^N`` imaginary parts from
    ``rng.standard_normal``; with ``exclude_vacuum`` the vacuum amplitude is
    zeroed before normalizing.
    """
    d = 1 << n
    re = rng.standard_normal(d)
    im = rng.standard_normal(d)
    psi = re + 1j * im
    if exclude_vacuum:
        psi[0] = 0
    return psi / np.linalg.norm(psi)


def density(psi) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())


# ----------------------------------------------------------- observables

def number_operator(n: int) -> sp.csr_matrix:
    return sp.diags(popcounts(n).astype(float)).tocsr()


def magnetization_operator(n: int) -> sp.csr_matrix:
    """Excitation density ``(1/N) sum_a n_a``."""
    return number_operator(n) / n


def pauli_x(n: int, site: int) -> sp.csr_matrix:
    d = 1 << n
    idx = np.arange(d)
    return sp.csr_matrix((np.ones(d), (idx ^ (1 << site), idx)), shape=(d, d))


def xx_operator(n: int, a: int, b: int) -> sp.csr_matrix:
    return (pauli_x(n, a) @ pauli_x(n, b)).tocsr()


def xx_average_operator(n: int) -> sp.csr_matrix:
    """Average of ``X_a X_b`` over unordered pairs."""
    tot = sp.csr_matrix((1 << n, 1 << n))
    for a, b in combinations(range(n), 2):
        tot = tot + xx_operator(n, a, b)
    return (tot / comb(n, 2)).tocsr()


def sector_projector(n: int, ups: int) -> sp.csr_matrix:
    return sp.diags((popcounts(n) == ups).astype(float)).tocsr()


def observables(lop: LiouvilleOperator) -> dict[str, np.ndarray]:
    """Functionals matching :func:`wlindblad.gdicke.observables`."""
    n = lop.n_sites
    out = {
        "trace": lop.trace_functional(),
        "M": lop.functional(magnetization_operator(n)),
        "XX": lop.functional(xx_average_operator(n)),
    }
    for k in range(n + 1):
        out[f"alpha[{k - n / 2:g}]"] = lop.functional(sector_projector(n, k))
    return out


def _projector(label: TwoSiteLabel) -> np.ndarray:
    u = two_site_state(label).amplitudes
    return np.outer(u, u)


def _bond_sum(n, boundary, local):
    bonds = chain_pairs(n, _periodic(boundary))
    tot = sp.csr_matrix((1 << n, 1 << n))
    for a, b in bonds:
        tot = tot + embed_pair_operator(local, a, b, n)
    return (tot / (n - 1)).tocsr()


def order_parameter_operator(n: int, boundary: str = "periodic") -> sp.csr_matrix:
    """``(1/(N-1)) sum_bonds (|1,0><1,0| + |1,-1><1,-1|)``."""
    loc = _projector(TwoSiteLabel.TRIPLET_ZERO) + _projector(TwoSiteLabel.TRIPLET_MINUS)
    return _bond_sum(n, boundary, loc)


def singlet_density_operator(n: int, boundary: str = "periodic") -> sp.csr_matrix:
    return _bond_sum(n, boundary, _projector(TwoSiteLabel.SINGLET))


def upup_density_operator(n: int, boundary: str = "periodic") -> sp.csr_matrix:
    return _bond_sum(n, boundary, _projector(TwoSiteLabel.TRIPLET_PLUS))


def _n_from_rho(rho) -> int:
    d = np.asarray(rho).shape[0]
    n = d.bit_length() - 1
    if 1 << n != d:
        raise ValueError("density matrix dimension is not a power of two")
    return n


def _expect(op, rho) -> float:
    return float(np.real(np.sum(op.multiply(np.asarray(rho).T))))


def order_parameter_P(rho, boundary: str = "periodic") -> float:
    return _expect(order_parameter_operator(_n_from_rho(rho), boundary), rho)


def singlet_density_P00(rho, boundary: str = "periodic") -> float:
    return _expect(singlet_density_operator(_n_from_rho(rho), boundary), rho)


def upup_density_P11(rho, boundary: str = "periodic") -> float:
    return _expect(upup_density_operator(_n_from_rho(rho), boundary), rho)


def check_dPdt_identity(rho, rates: JumpRates, z: int = 2,
                        boundary: str = "periodic") -> tuple[float, float]:
    """Return ``(d<P>/dt, (gamma1 - gamma3 (Z-1)/2) <P00>)`` for a single-excitation ``rho``.

    The left side applies the chain superoperator once and traces against
    the order-parameter operator.
    """
    rho = np.asarray(rho)
    n = _n_from_rho(rho)
    pc = popcounts(n)
    outside = pc != 1
    if np.abs(rho[outside, :]).max(initial=0) > 1e-12 or np.abs(rho[:, outside]).max(initial=0) > 1e-12:
        raise ValueError("rho is not supported on the single-excitation sector")
    chain = rates.with_(geometry=Geometry.CHAIN, periodic=_periodic(boundary))
    lop = build_superoperator(n, chain, chain_pairs(n, chain.periodic), block=0,
                              ket_counts={0, 1, 2}, cap=16)
    drho = lop.matrix @ lop.vectorize(rho)
    lhs = float(np.real(lop.functional(order_parameter_operator(n, boundary)) @ drho))
    rhs = (rates.gamma1 - rates.gamma3prime * (z - 1) / 2) * singlet_density_P00(rho, boundary)
    return lhs, rhs


def dPdt_coherence_correction(rho, rates: JumpRates) -> float:
    """Term missing from the rate identity for coherent single-excitation states.

    On a periodic chain with ``N >= 5``,
    ``lhs = rhs + (gamma1 + gamma3') / (4 (N-1)) * (C_2 - C_1)`` holds exactly,
    with ``C_d = sum_a 2 Re rho[a, a+d]`` over single-excitation amplitudes.
    It vanishes for incoherent mixtures and for the W-state.
    """
    rho = np.asarray(rho)
    n = _n_from_rho(rho)
    if n < 5:
        raise ValueError("the correction needs N >= 5 so that distances 1 and 2 differ")
    site = 1 << np.arange(n)

    def c(d):
        return float(2 * np.real(rho[site, np.roll(site, -d)]).sum())

    return (rates.gamma1 + rates.gamma3prime) / (4 * (n - 1)) * (c(2) - c(1))


# --------------------------------------------------------------- kernels

def known_kernel(lop: LiouvilleOperator) -> list[np.ndarray]:
    """Exact steady states present in the operator's index set.

    ``Delta S_z = 0``: vacuum and ``|W><W|``; ``Delta S_z = +1``: ``|W><vac|``;
    ``Delta S_z = -1``: ``|vac><W|``.
    """
    n = lop.n_sites
    pc = popcounts(n)
    one_k, one_b = pc[lop.kets] == 1, pc[lop.bras] == 1
    zero_k, zero_b = lop.kets == 0, lop.bras == 0
    out = []
    for mask, val in (
        (zero_k & zero_b, 1.0),
        (one_k & one_b, 1.0 / n),
        (one_k & zero_b, 1.0 / np.sqrt(n)),
        (zero_k & one_b, 1.0 / np.sqrt(n)),
    ):
        if mask.any():
            out.append(np.where(mask, val, 0.0))
    return out


def relevant_gap(n: int, rates: JumpRates, n_quasi: int = 0, k: int = 6,
                 seed: int = 0) -> spectral.SpectrumResult:
    """Leading decay rate of the ``Delta S_z = 0`` block after deflating steady states.

    ``n_quasi`` modes closest to zero are treated as part of the steady
    manifold (the finite-size remnant of the mixed steady state) and skipped.
    """
    lop = build_nn_superoperator(n, rates, block=0)
    res = spectral.eig_gap_arnoldi(lop.matrix, known_kernel(lop), k=k + n_quasi, seed=seed)
    nz = res.nonzero
    if len(nz) <= n_quasi:
        raise spectral.ConvergenceError("not enough modes to skip the quasi-steady ones")
    res.info["skipped"] = nz[:n_quasi].tolist()
    res.gap = float(abs(nz[n_quasi].real))
    return res


def offdiag_block_gap(n: int, rates: JumpRates, k: int = 4, seed: int = 0) -> float:
    """Leading decay rate of the ``Delta S_z = 1`` block (off-diagonal modes)."""
    lop = build_nn_superoperator(n, rates, block=1)
    if lop.dim <= 600:
        res = spectral.eig_dense(lop.matrix.toarray())
        return res.gap
    return spectral.eig_gap_arnoldi(lop.matrix, known_kernel(lop), k=k, seed=seed).gap


def quasi_steady_mode(lop: LiouvilleOperator, seed: int = 0) -> tuple[complex, np.ndarray]:
    """Slowest mode of ``lop`` outside its exact steady states, with its eigenvalue."""
    known = known_kernel(lop)
    res = spectral.eig_gap_arnoldi(lop.matrix, known, k=2, seed=seed)
    if res.kernel_dim > len(known):
        return 0.0, res.kernel_vectors[:, len(known)]
    lead = np.flatnonzero(np.abs(res.eigenvalues) >= res.zero_tol)[0]
    return complex(res.eigenvalues[lead]), res.gap_vector


def constrained_mixed_state(lop: LiouvilleOperator, seed: int = 0, psd_tol: float = 1e-8):
    """Combine vacuum, ``|W><W|`` and the quasi-steady mode into the mixed state.

    Solves for the combination with unit trace and zero overlap with both the
    vacuum and the W-state. The slow mode also carries small coherences
    between the W-state and its complement, which make the combination
    indefinite; these are removed by pinching onto the complement of
    ``span{vac, W}``, after which the state is positive semidefinite.

    Returns
    -------
    rho : ndarray
        Dense ``2^N`` density matrix.
    info : dict
        ``eigenvalue`` of the quasi-steady mode, ``min_eig_raw`` before and
        ``min_eig`` after pinching, ``pinched_norm`` (Frobenius norm of the
        removed coherences) and the ``psd`` flag.
    """
    n = lop.n_sites
    if lop.delta != 0:
        raise ValueError("needs the Delta S_z = 0 block")
    lam, q = quasi_steady_mode(lop, seed)
    vecs = known_kernel(lop)[:2] + [np.real(q)]
    psi_w, psi_vac = w_state(n), vacuum_state(n)
    w = lop.functional(density(psi_w))
    vac = lop.functional(density(psi_vac))
    tr = lop.trace_functional()
    a = np.array([[f @ v for v in vecs] for f in (tr, w, vac)])
    c = np.linalg.solve(a, np.array([1.0, 0.0, 0.0]))
    v = sum(ci * vi for ci, vi in zip(c, vecs))
    raw = lop.unvectorize(v)
    raw = 0.5 * (raw + raw.conj().T)
    comp = np.eye(1 << n) - density(psi_w) - density(psi_vac)
    rho = comp @ raw @ comp
    rho /= np.trace(rho).real
    min_raw = float(np.linalg.eigvalsh(raw).min())
    min_eig = float(np.linalg.eigvalsh(rho).min())
    info = {"eigenvalue": complex(lam), "min_eig_raw": min_raw, "min_eig": min_eig,
            "pinched_norm": float(np.linalg.norm(raw - comp @ raw @ comp)),
            "psd": min_eig >= -psd_tol}
    return rho, info


def mixed_offset_xx(n: int) -> float:
    """``<X_a X_b>`` of ``(I - vac - W)/(2^N - 2)``: the uniform floor ``-2 / (N (2^N - 2))``."""
    return -2.0 / (n * (2.0**n - 2.0))


def xx_distance_profile(rho, boundary: str = "open") -> np.ndarray:
    """``<X_a X_{a+m}>`` for ``m = 1..N-1``, averaged over valid ``a``."""
    rho = np.asarray(rho)
    n = _n_from_rho(rho)
    out = np.zeros(n - 1)
    for m in range(1, n):
        starts = range(n - m) if boundary == "open" else range(n)
        vals = [_expect(xx_operator(n, a, (a + m) % n), rho) for a in starts]
        out[m - 1] = np.mean(vals)
    return out
