"""Truncated Fock-space builders: bosons, coherent states and regular pseudo-bosons.

Everything lives on span{|0>, ..., |N-1>}.  Canonical relations such as
[c, c^dagger] = 1 then hold everywhere except in the top-level corner entry,
so identities are checked on the block that drops level N-1
(see ``lower_block``).
"""
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .errors import TruncationTooSmall
from .linalg import adjoint, as_operator, mat_exp
from .metric import metric_from_inverse

DEFAULT_N = 80
TAIL_TOL = 1e-20
TRANSFORM_COND_CAP = 1e8
CANONICAL_THETA = 0.3


def _check_n(n):
    if int(n) != n or n < 2:
        raise ValueError(f"truncation N must be an integer >= 2, got {n!r}")
    return int(n)


def ladder(n):
    """Truncated annihilation and creation operators, c|k> = sqrt(k)|k-1>."""
    n = _check_n(n)
    c = np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)
    return c, adjoint(c)


def number_operator(n):
    return np.diag(np.arange(_check_n(n), dtype=float)).astype(complex)


def position_momentum(n):
    c, cd = ladder(n)
    x0 = (c + cd) / np.sqrt(2)
    p0 = (c - cd) / (np.sqrt(2) * 1j)
    return x0, p0


def lower_block(x):
    """Drop the top Fock level; the truncation corner lives there."""
    return x[:-1, :-1]


def tail_mass(z, n):
    """Poisson weight of levels >= n in the untruncated coherent state |z>."""
    return float(poisson.sf(n - 1, abs(z) ** 2))


def minimal_truncation(z, tol=TAIL_TOL):
    n = 2
    while tail_mass(z, n) > tol:
        n += 1
    return n


def coherent_state(z, n=DEFAULT_N):
    """Normalized truncated coherent state sum_k z^k / sqrt(k!) |k>.

    Raises TruncationTooSmall when the discarded Poisson tail exceeds 1e-20.
    """
    n = _check_n(n)
    z = complex(z)
    if tail_mass(z, n) > TAIL_TOL:
        need = minimal_truncation(z)
        raise TruncationTooSmall(
            f"N = {n} too small for |z| = {abs(z):.4g}; need N >= {need}", minimal_n=need
        )
    coef = np.empty(n, dtype=complex)
    coef[0] = 1.0
    for k in range(1, n):
        coef[k] = coef[k - 1] * z / np.sqrt(k)
    return coef / np.linalg.norm(coef)


def coherent_residual(z, phi):
    """||(c - z) phi|| on the truncated space."""
    c, _ = ladder(phi.size)
    return float(np.linalg.norm(c @ phi - z * phi))


@dataclass(frozen=True)
class RegularTransform:
    """Bounded invertible R relating pseudo-bosons to bosons: a = R c R^-1, b = R c^dagger R^-1."""

    R: np.ndarray
    R_inv: np.ndarray
    cond: float

    @classmethod
    def from_matrix(cls, r, cond_cap=TRANSFORM_COND_CAP):
        r = as_operator(r)
        cond = float(np.linalg.cond(r))
        if not np.isfinite(cond) or cond > cond_cap:
            raise ValueError(f"transform condition number {cond:.3g} exceeds cap {cond_cap:.3g}")
        r_inv = np.linalg.inv(r)
        if np.linalg.norm(r @ r_inv - np.eye(r.shape[0])) > 1e-10:
            raise ValueError("transform inverse is inaccurate")
        return cls(r, r_inv, cond)

    @property
    def dim(self):
        return self.R.shape[0]

    def s_inverse(self):
        """R R^dagger, the inverse metric attached to the pseudo-boson pair."""
        return self.R @ adjoint(self.R)

    def metric(self):
        return metric_from_inverse(self.s_inverse())


def identity_transform(n):
    return RegularTransform.from_matrix(np.eye(_check_n(n), dtype=complex))


def shift(n):
    """Unit lowering shift s|k> = |k-1>; bounded with ||s|| = 1 for every N."""
    return np.diag(np.ones(_check_n(n) - 1), 1).astype(complex)


def canonical_transform(n=DEFAULT_N, theta=CANONICAL_THETA):
    """R = exp(-theta (s + s^dagger) / 2), a Hermitian positive hopping map.

    Its spectrum lies in [exp(-theta), exp(theta)] whatever N is, so R and R^-1
    stay bounded, and R is not unitary, so b^dagger != a.
    """
    s = shift(n)
    return RegularTransform.from_matrix(mat_exp(-theta * (s + adjoint(s)) / 2))


def pseudo_boson_pair(transform, n=None):
    if n is not None and _check_n(n) != transform.dim:
        raise ValueError(f"transform acts on dimension {transform.dim}, not {n}")
    c, cd = ladder(transform.dim)
    r, ri = transform.R, transform.R_inv
    return r @ c @ ri, r @ cd @ ri


def bi_coherent(z, transform, n=None):
    """(phi(z), psi(z)) = (R Phi(z), (R^-1)^dagger Phi(z)), eigenvectors of a and b^dagger."""
    n = transform.dim if n is None else _check_n(n)
    if n != transform.dim:
        raise ValueError(f"transform acts on dimension {transform.dim}, not {n}")
    big_phi = coherent_state(z, n)
    return transform.R @ big_phi, adjoint(transform.R_inv) @ big_phi


def xp_pair(a, b):
    if a.shape != b.shape:
        raise ValueError("a and b must have the same shape")
    return (a + b) / np.sqrt(2), (a - b) / (np.sqrt(2) * 1j)


def number_hamiltonian(a, b, omega=1.0):
    """H = omega b a, non-Hermitian unless b = a^dagger."""
    return omega * (b @ a)
