"""Closed-form spectra: XX-model modes, the single-excitation impurity problem,
its transfer-matrix quantization condition, and the mixed-state distribution.

Single-excitation sector (``gamma3 = 0``), in units of ``gamma1``
----------------------------------------------------------------------
Writing ``|x><x'|`` in centre-of-mass and relative coordinates and Fourier
transforming the centre of mass leaves, for each total momentum ``k``, an
``N``-site hopping problem in the relative coordinate ``r``. Momenta are
``k = pi b / N`` for ``b = 0..N-1``. The relative coordinate lives on the
window ``r = -1..N-2``, and hopping off the window wraps by ``N`` with the
twist ``(-1)^b``. Rows of the eigenproblem ``E psi_r = sum_s H[r, s] psi_s``::

    r = 1:    ( c/2 ) psi_2  - 5/4 psi_1 - 1/4 psi_-1
    r = 0:    c psi_1 + (c^2 - 1) psi_0 + c psi_-1
    r = -1:   -1/4 psi_1 - 5/4 psi_-1 + ( c/2 ) psi_-2
    bulk:     ( c/2 )(psi_{r+1} + psi_{r-1}) - psi_r

with ``c = cos k``. For even ``b`` this reduces to the periodic grid
``k = 2 pi a / N``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq


# ------------------------------------------------------------- XX model

def xx_momenta(n: int, parity: str) -> np.ndarray:
    """Momentum grid ``2 pi m / N`` (odd fermion number) or ``2 pi (m + 1/2) / N`` (even)."""
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    shift = 0.0 if parity == "odd" else 0.5
    return 2 * np.pi * (np.arange(n) + shift) / n


def xx_mode_energy(k, gamma1: float, gamma3: float):
    return -0.5 * (gamma1 + gamma3) * (1 - np.cos(k))


def xx_spectrum(n: int, gamma1: float, gamma3: float, parity: str = "odd",
                n_fermions: int = 1) -> np.ndarray:
    """Eigenvalues of ``n_fermions``-fermion modes (valid for ``gamma1 = gamma2``, ``gamma3 = gamma3'``).

    For ``n_fermions > 1`` the energies of distinct momenta on the grid of
    ``parity`` are added. Returned sorted in descending order.
    """
    if n < 2:
        raise ValueError("N must be at least 2")
    e = xx_mode_energy(xx_momenta(n, parity), gamma1, gamma3)
    if n_fermions == 1:
        out = e
    else:
        out = np.array([sum(c) for c in combinations(e, n_fermions)])
    return np.sort(out)[::-1]


def offdiag_gap(n: int, gamma1: float, gamma3: float) -> float:
    """Slowest off-diagonal decay rate ``(gamma1 + gamma3)(1 - cos(pi/N))``."""
    if n < 2:
        raise ValueError("N must be at least 2")
    return (gamma1 + gamma3) * (1 - np.cos(np.pi / n))


# ---------------------------------------------------- impurity problem

@dataclass(frozen=True)
class ImpurityProblem:
    """Relative-coordinate problem at total momentum ``k_plus = pi b / N``."""

    n: int
    k_plus: float
    gamma1: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("the impurity problem needs N >= 3")
        b = self.n * self.k_plus / np.pi
        if abs(b - round(b)) > 1e-9:
            raise ValueError("k_plus must be an integer multiple of pi/N")

    @property
    def b(self) -> int:
        return int(round(self.n * self.k_plus / np.pi))

    @property
    def twist(self) -> int:
        return -1 if self.b % 2 else 1


def momentum_grid(n: int) -> list[float]:
    """Total momenta ``pi b / N``, ``b = 0..N-1``, covering the sector once."""
    return [np.pi * b / n for b in range(n)]


def _rows(n: int, c: float):
    for r in range(-1, n - 1):
        if r == 1:
            yield r, ((1, 0.5 * c), (0, -1.25), (-2, -0.25))
        elif r == 0:
            yield r, ((1, c), (0, c * c - 1), (-1, c))
        elif r == -1:
            yield r, ((2, -0.25), (0, -1.25), (-1, 0.5 * c))
        else:
            yield r, ((1, 0.5 * c), (-1, 0.5 * c), (0, -1.0))


def impurity_matrix(prob: ImpurityProblem) -> np.ndarray:
    """``N x N`` real matrix whose eigenvalues are the sector spectrum at ``k_plus``.

    Row and column ``r`` of the window ``-1..N-2`` is stored at ``r mod N``.
    """
    n, c, tw = prob.n, np.cos(prob.k_plus), prob.twist
    m = np.zeros((n, n))
    for r, terms in _rows(n, c):
        for d, v in terms:
            s, f = r + d, 1.0
            if s > n - 2:
                s, f = s - n, tw
            elif s < -1:
                s, f = s + n, tw
            m[r % n, s % n] += f * v
    return prob.gamma1 * m


def impurity_spectrum(n: int, gamma1: float = 1.0) -> np.ndarray:
    """Union of impurity spectra over the momentum grid (complex, unsorted)."""
    return np.concatenate([np.linalg.eigvals(impurity_matrix(ImpurityProblem(n, k, gamma1)))
                           for k in momentum_grid(n)])


# ------------------------------------------------------ transfer matrix

def chebyshev_u(m: int, x):
    """Chebyshev polynomial of the second kind by three-term recurrence.

    ``U_-1 = 0``, ``U_0 = 1``, ``U_m = 2x U_{m-1} - U_{m-2}``.
    """
    if m < -1:
        raise ValueError("degree must be >= -1")
    x = np.asarray(x, dtype=float)
    prev, cur = np.zeros_like(x), np.ones_like(x)
    if m == -1:
        return prev[()]
    for _ in range(m):
        prev, cur = cur, 2 * x * cur - prev
    return cur[()]


def chebyshev_u_coeffs(m: int) -> np.ndarray:
    """Power-basis coefficients (ascending) of ``U_m``."""
    prev, cur = np.array([0.0]), np.array([1.0])
    if m == -1:
        return prev
    for _ in range(m):
        prev, cur = cur, P.polysub(P.polymulx(2 * cur), prev)
    return cur


def transfer_matrices(e: float, k_plus: float, n: int):
    """Transfer matrices ``(T_1, T_0, T_N, T_bulk)`` and their product ``T``.

    ``T = T_0 T_N T_bulk^(N-3) T_1`` with ``A = (E + 1 - c^2)/c`` and
    ``B = 2(E + 1)/c``. ``det(T - twist)`` equals twice the Chebyshev form of
    :func:`chebyshev_condition` up to a sign, so both vanish together.
    """
    c = np.cos(k_plus)
    if abs(c) < 1e-12:
        raise ValueError("cos(k_plus) = 0: use impurity_matrix")
    a, b = (e + 1 - c * c) / c, 2 * (e + 1) / c
    t1 = np.array([[b, a / (b - 2 * a)], [1.0, 0.0]])
    t0 = np.array([[a, -1.0], [1.0, 0.0]])
    tn = np.array([[(2 * a * b - b * b) / a, (b - 2 * a) / a], [1.0, 0.0]])
    tb = np.array([[b, -1.0], [1.0, 0.0]])
    return (t1, t0, tn, tb), t0 @ tn @ np.linalg.matrix_power(tb, n - 3) @ t1


def _twist_of(k_plus: float, n: int) -> int:
    b = n * k_plus / np.pi
    if abs(b - round(b)) > 1e-9:
        raise ValueError("k_plus must be an integer multiple of pi/N")
    return -1 if int(round(b)) % 2 else 1


def quantization_polynomial(n: int, k_plus: float) -> np.ndarray:
    """Ascending coefficients in ``y = E + 1`` of ``c^(N-2) (twist + U_{N-2}(y/c) + c U_{N-1}(y/c))``.

    The factor ``c^(N-2)`` clears all negative powers of ``c``, so the
    polynomial stays valid at ``cos k = 0``, where it is ``(2y)^(N-2) (1 + 2y)``.
    Its ``N - 1`` roots plus :func:`bound_extra_root` give the spectrum at ``k_plus``.
    """
    c = float(np.cos(k_plus))
    if abs(c) < 1e-15:
        c = 0.0
    tw = _twist_of(k_plus, n)
    out = np.zeros(n)
    out[0] += tw * c ** (n - 2)
    for m, scale in ((n - 2, 1.0), (n - 1, 1.0)):
        # c^m U_m(y/c) = sum_j (-1)^j binom(m-j, j) (2y)^(m-2j) c^(2j)
        for j in range(m // 2 + 1):
            out[m - 2 * j] += scale * (-1) ** j * comb(m - j, j) * 2.0 ** (m - 2 * j) * c ** (2 * j)
    return out


def chebyshev_condition(e, k_plus: float, n: int):
    """Branch-free form ``twist + U_{N-2}(x) + c U_{N-1}(x)``, ``x = (E+1)/c``."""
    c = np.cos(k_plus)
    if abs(c) < 1e-12:
        raise ValueError("cos(k_plus) = 0: the condition degenerates")
    tw = _twist_of(k_plus, n)
    x = (np.asarray(e, dtype=float) + 1) / c
    return tw + chebyshev_u(n - 2, x) + c * chebyshev_u(n - 1, x)


def transfer_condition(e, k_plus: float, n: int):
    """Quantization residual at energy ``e``.

    In the band ``|E+1| <= |c|`` this is
    ``twist sin(theta) + sin((N-1) theta) + c sin(N theta)`` with
    ``cos(theta) = (E+1)/c``. Outside it is the Chebyshev form, which equals
    the in-band form divided by ``sin(theta)``.
    """
    c = np.cos(k_plus)
    if abs(c) < 1e-12:
        raise ValueError("cos(k_plus) = 0: the condition degenerates")
    tw = _twist_of(k_plus, n)
    e = np.asarray(e, dtype=float)
    x = (e + 1) / c
    inband = np.abs(x) <= 1
    th = np.arccos(np.clip(x, -1, 1))
    sine = tw * np.sin(th) + np.sin((n - 1) * th) + c * np.sin(n * th)
    return np.where(inband, sine, chebyshev_condition(e, k_plus, n))[()]


def bound_extra_root(k_plus: float) -> float:
    """``-sin^2 k``: the eigenvalue the impurity matrix has beyond the polynomial roots."""
    return -np.sin(k_plus) ** 2


def transfer_roots(n: int, k_plus: float, lo: float = -2.5, hi: float = 0.1,
                   grid: int = 10_000, xtol: float = 1e-14) -> np.ndarray:
    """Eigenvalues at ``k_plus`` from the quantization condition, sorted ascending.

    Sign changes of :func:`quantization_polynomial` on a uniform grid are
    refined with Brent's method. Double roots, which touch zero without a sign
    change, are found as sign changes of the derivative where the polynomial
    itself vanishes. A root at ``y = 0`` of higher multiplicity (``cos k = 0``)
    is read off the vanishing low-order coefficients. The result is completed
    by :func:`bound_extra_root` and checked against the companion-matrix roots.
    """
    poly = quantization_polynomial(n, k_plus)
    zero_mult = 0
    while zero_mult < len(poly) - 1 and poly[zero_mult] == 0:
        zero_mult += 1
    poly = poly[zero_mult:]
    dpoly = P.polyder(poly)
    es = np.linspace(lo, hi, grid + 1)

    def f(e):
        return P.polyval(e + 1, poly)

    def df(e):
        return P.polyval(e + 1, dpoly)

    vals = f(es)
    eps = 4 * np.finfo(float).eps
    roots = [brentq(f, es[i], es[i + 1], xtol=xtol, rtol=eps)
             for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)]
    roots.extend(es[np.flatnonzero(vals == 0)])
    dvals = df(es)
    for i in np.flatnonzero(np.sign(dvals[:-1]) * np.sign(dvals[1:]) < 0):
        e = brentq(df, es[i], es[i + 1], xtol=xtol, rtol=eps)
        size = P.polyval(abs(e + 1), np.abs(poly))
        if abs(f(e)) < 1e-10 * size and all(abs(e - r) > 1e-6 for r in roots):
            roots.extend([e, e])
    roots.extend([-1.0] * zero_mult)
    roots.append(bound_extra_root(k_plus))
    roots = np.sort(np.array(roots))
    if len(roots) != n:
        raise RuntimeError(f"found {len(roots)} roots, expected {n}")
    companion = np.sort(np.concatenate([P.polyroots(poly).real - 1, [-1.0] * zero_mult,
                                        [bound_extra_root(k_plus)]]))
    if np.abs(companion - roots).max() > 1e-6:
        raise RuntimeError("bracketed roots disagree with the companion matrix")
    return roots


def k0_closed_form(n: int) -> np.ndarray:
    """Zero-momentum eigenvalues: ``-(1 - cos(a pi/(N-1)))`` for odd ``a`` and
    ``-(1 - cos(a pi/N))`` for even ``a``, ``a = 0..N-1``."""
    a = np.arange(n)
    return np.where(a % 2, -(1 - np.cos(a * np.pi / (n - 1))), -(1 - np.cos(a * np.pi / n)))


def even_branch_energy(n: int, a: int, k_plus: float) -> float:
    """``-(1 - cos(a pi / N) cos k)``.

    With ``k = b pi / N`` this is an eigenvalue for every ``1 <= a <= N-1``
    with ``a = b (mod 2)``; ``a = 0`` only qualifies at ``k = 0``.
    """
    return -(1 - np.cos(a * np.pi / n) * np.cos(k_plus))


def single_spinup_gap(n: int, gamma1: float = 1.0) -> float:
    """W-state preparation gap ``gamma1 (1 - cos(pi/(N-1)))``."""
    if n < 3:
        raise ValueError("N must be at least 3")
    return gamma1 * (1 - np.cos(np.pi / (n - 1)))


# ---------------------------------------------------------- mixed state

def mixed_distribution(n: int, literal: bool = False) -> dict:
    """Sector weights of the maximally mixed state without vacuum and W-state.

    Default: weight ``(binom(N, N/2+Sz) - [Sz = -N/2+1]) / (2^N - 2)`` for
    ``Sz > -N/2`` and zero at ``Sz = -N/2``; the weights sum to one.
    ``literal=True`` applies the same expression to every sector, including
    ``Sz = -N/2`` (these weights sum to ``(2^N - 1)/(2^N - 2)``).

    Keys are ``Sz`` as floats; values are :class:`fractions.Fraction` for
    ``N <= 64`` and floats beyond.
    """
    if n < 2:
        raise ValueError("N must be at least 2")
    exact = n <= 64
    denom = 2**n - 2
    out = {}
    for ups in range(n + 1):
        sz = ups - n / 2
        num = comb(n, ups) - (1 if ups == 1 else 0)
        if ups == 0 and not literal:
            num = 0
        out[sz] = Fraction(num, denom) if exact else num / denom
    return out
