"""Two-site total-spin states, the four jump-operator families and the gauge map.

Conventions shared by every module:

* single site: ``0`` is spin down, ``1`` is spin up (an excitation);
* two sites ``(a, b)``: local index ``2*up_a + up_b``, so the ordered basis is
  ``(dd, du, ud, uu)``;
* ``n`` sites: computational index ``sum_a up_a << a`` (site 0 in the lowest bit).
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

#: Largest number of sites accepted by :func:`embed_pair_operator`.
MAX_EMBED_SITES = 16

_S = 1.0 / np.sqrt(2.0)


class TwoSiteLabel(enum.Enum):
    """Total-spin eigenstates ``|S, m>`` of a pair of spin-1/2 sites."""

    SINGLET = "|0,0>"
    TRIPLET_MINUS = "|1,-1>"
    TRIPLET_ZERO = "|1,0>"
    TRIPLET_PLUS = "|1,1>"


_AMPLITUDES = {
    TwoSiteLabel.SINGLET: (0.0, _S, -_S, 0.0),
    TwoSiteLabel.TRIPLET_MINUS: (1.0, 0.0, 0.0, 0.0),
    TwoSiteLabel.TRIPLET_ZERO: (0.0, _S, _S, 0.0),
    TwoSiteLabel.TRIPLET_PLUS: (0.0, 0.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class TwoSiteState:
    label: TwoSiteLabel
    amplitudes: np.ndarray = field(repr=False)


def two_site_state(label: TwoSiteLabel) -> TwoSiteState:
    """Return the amplitude vector of ``label`` over ``(dd, du, ud, uu)``."""
    amp = np.array(_AMPLITUDES[label])
    amp.setflags(write=False)
    return TwoSiteState(label, amp)


class JumpFamily(enum.Enum):
    """The four jump families as ``(target, source, rate attribute)``."""

    L1 = (TwoSiteLabel.TRIPLET_ZERO, TwoSiteLabel.SINGLET, "gamma1")
    L2 = (TwoSiteLabel.TRIPLET_ZERO, TwoSiteLabel.TRIPLET_PLUS, "gamma2")
    L3 = (TwoSiteLabel.SINGLET, TwoSiteLabel.TRIPLET_PLUS, "gamma3")
    L3PRIME = (TwoSiteLabel.TRIPLET_PLUS, TwoSiteLabel.SINGLET, "gamma3prime")

    @property
    def target(self) -> TwoSiteLabel:
        return self.value[0]

    @property
    def source(self) -> TwoSiteLabel:
        return self.value[1]

    @property
    def rate_symbol(self) -> str:
        return self.value[2]


def jump_matrix(kind: JumpFamily) -> np.ndarray:
    """Return the real 4x4 matrix ``|target><source|`` of a jump family."""
    u = two_site_state(kind.target).amplitudes
    v = two_site_state(kind.source).amplitudes
    return np.outer(u, v)


class Geometry(enum.Enum):
    ALL_TO_ALL = "alltoall"
    CHAIN = "chain"


@dataclass(frozen=True)
class JumpRates:
    """Jump rates plus the pair geometry they act on.

    ``gamma3prime`` defaults to ``gamma3``. Unequal values are allowed but
    emit a :class:`UserWarning` and are listed in :attr:`flags`.
    """

    gamma1: float = 1.0
    gamma2: float = 1.0
    gamma3: float = 0.0
    gamma3prime: float | None = None
    geometry: Geometry = Geometry.CHAIN
    periodic: bool = True
    n_sites: int | None = None

    def __post_init__(self):
        if self.gamma3prime is None:
            object.__setattr__(self, "gamma3prime", self.gamma3)
        for name in ("gamma1", "gamma2", "gamma3", "gamma3prime"):
            g = getattr(self, name)
            if not np.isfinite(g) or g < 0:
                raise ValueError(f"{name} must be finite and nonnegative, got {g}")
        if self.n_sites is not None and self.n_sites < 1:
            raise ValueError("n_sites must be positive")
        if self.gamma3 != self.gamma3prime:
            warnings.warn("gamma3 != gamma3prime", UserWarning, stacklevel=3)

    @classmethod
    def alltoall(cls, gamma1=1.0, gamma2=1.0, gamma3=0.0, **kw) -> "JumpRates":
        return cls(gamma1, gamma2, gamma3, geometry=Geometry.ALL_TO_ALL, **kw)

    @classmethod
    def chain(cls, gamma1=1.0, gamma2=1.0, gamma3=0.0, periodic=True, **kw) -> "JumpRates":
        return cls(gamma1, gamma2, gamma3, geometry=Geometry.CHAIN, periodic=periodic, **kw)

    def rate(self, kind: JumpFamily) -> float:
        return float(getattr(self, kind.rate_symbol))

    def with_(self, **changes) -> "JumpRates":
        return replace(self, **changes)

    @property
    def flags(self) -> list[str]:
        return ["gamma3 != gamma3prime"] if self.gamma3 != self.gamma3prime else []

    def check_sites(self, n: int) -> None:
        if self.n_sites is not None and self.n_sites != n:
            raise ValueError(f"rates declare n_sites={self.n_sites}, got {n}")


def embed_pair_operator(m: np.ndarray, a: int, b: int, n: int) -> sp.csr_matrix:
    """Embed a 4x4 pair operator on sites ``(a, b)`` of an ``n``-site register.

    Parameters
    ----------
    m : (4, 4) array
        Operator in the local basis ``(dd, du, ud, uu)`` with ``a`` as the
        high bit.
    a, b : int
        Distinct site indices.
    n : int
        Number of sites, at most :data:`MAX_EMBED_SITES`.

    Returns
    -------
    scipy.sparse.csr_matrix
        ``2**n`` square operator acting as identity on the other sites.
    """
    m = np.asarray(m)
    if m.shape != (4, 4):
        raise ValueError("pair operator must be 4x4")
    if n > MAX_EMBED_SITES:
        raise ValueError(f"n={n} exceeds the cap of {MAX_EMBED_SITES} sites")
    if not (0 <= a < n and 0 <= b < n) or a == b:
        raise IndexError(f"invalid site pair ({a}, {b}) for n={n}")
    dim = 1 << n
    cols = np.arange(dim)
    local = 2 * ((cols >> a) & 1) + ((cols >> b) & 1)
    rest = cols & ~(1 << a) & ~(1 << b)
    rows_l, cols_l, vals_l = [], [], []
    for p in range(4):
        v = m[p, local]
        nz = v != 0
        rows_l.append((rest | (((p >> 1) & 1) << a) | ((p & 1) << b))[nz])
        cols_l.append(cols[nz])
        vals_l.append(v[nz])
    out = sp.csr_matrix(
        (np.concatenate(vals_l), (np.concatenate(rows_l), np.concatenate(cols_l))),
        shape=(dim, dim),
    )
    out.sort_indices()
    return out


@dataclass(frozen=True)
class GaugePhaseProfile:
    """Per-site phases ``phi_a`` of the local gauge ``prod_a exp(i phi_a n_a)``."""

    phases: tuple

    def __init__(self, phases: Sequence[float]):
        object.__setattr__(self, "phases", tuple(float(p) for p in phases))

    def __len__(self):
        return len(self.phases)

    def diagonal(self) -> np.ndarray:
        """Diagonal of the gauge unitary in the computational basis."""
        n = len(self.phases)
        idx = np.arange(1 << n)
        theta = np.zeros(1 << n)
        for a, phi in enumerate(self.phases):
            theta += phi * ((idx >> a) & 1)
        return np.exp(1j * theta)


def apply_gauge(profile: GaugePhaseProfile | Sequence[float], op) -> sp.csr_matrix:
    """Return ``U op U^dagger`` for the gauge unitary of ``profile``."""
    if not isinstance(profile, GaugePhaseProfile):
        profile = GaugePhaseProfile(profile)
    op = sp.csr_matrix(op)
    n = len(profile)
    if op.shape != (1 << n, 1 << n):
        raise ValueError(f"profile of length {n} does not match operator of shape {op.shape}")
    u = profile.diagonal()
    coo = op.tocoo()
    data = coo.data * u[coo.row] * np.conj(u[coo.col])
    return sp.csr_matrix((data, (coo.row, coo.col)), shape=op.shape)
