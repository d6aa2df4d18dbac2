"""Dense complex linear algebra used by every other module.

Operators are plain ``numpy`` arrays of shape ``(n, n)`` and dtype ``complex128``;
states are 1-d arrays of length ``n``.  Scalar products follow the physics
convention: conjugate-linear in the first argument, linear in the second.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateSpectrum, MatrixOverflow, NotNormalized

EXP_NORM_CAP = 1e3
DEGENERACY_TOL = 1e-8
RESIDUAL_TOL = 1e-9
NORMALIZATION_TOL = 1e-12


def as_operator(x):
    """Validate ``x`` as a finite square complex matrix and return it as ``complex128``."""
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise ValueError(f"operator must be a non-empty square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("operator has non-finite entries")
    return m


def as_vector(x):
    v = np.asarray(x, dtype=complex)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"vector must be 1-d and non-empty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def as_state(x, tol=NORMALIZATION_TOL):
    """Validate ``x`` as a state normalized in the standard product."""
    v = as_vector(x)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > tol:
        raise NotNormalized(f"state norm is {norm!r}, expected 1")
    return v


def normalize(x):
    v = as_vector(x)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return v / norm


def inner(f, g):
    """Standard product <f, g> = sum conj(f_i) g_i."""
    return complex(np.vdot(f, g))


def adjoint(x):
    return np.conj(np.transpose(x))


def commutator(x, y):
    return x @ y - y @ x


def anticommutator(x, y):
    return x @ y + y @ x


def op_norm(x):
    """Spectral (largest singular value) norm."""
    return float(np.linalg.norm(x, 2))


def is_hermitian(x, tol=1e-10):
    return bool(np.linalg.norm(x - adjoint(x)) <= tol * max(1.0, np.linalg.norm(x)))


def mat_exp(x, cap=EXP_NORM_CAP):
    """Matrix exponential by Pade scaling-and-squaring.

    Raises MatrixOverflow when the spectral norm of ``x`` exceeds ``cap``.
    """
    x = as_operator(x)
    norm = op_norm(x)
    if norm > cap:
        raise MatrixOverflow(f"||X|| = {norm:.6g} exceeds exponential cap {cap:.6g}")
    return scipy.linalg.expm(x)


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues with right and left eigenvectors stored as matrix columns.

    ``right[:, k]`` is phi_k with ``H phi_k = E_k phi_k`` and unit norm;
    ``left[:, k]`` is psi_k with ``H^dagger psi_k = conj(E_k) psi_k`` and
    ``<psi_k, phi_k> = 1``.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    biorthonormal: bool

    @property
    def dim(self):
        return self.eigenvalues.size

    def overlap(self):
        """Matrix of <psi_j, phi_k>."""
        return adjoint(self.left) @ self.right

    def reconstruct(self):
        return (self.right * self.eigenvalues) @ adjoint(self.left)

    def residuals(self, h):
        """Largest eigen-equation residual over right and left vectors."""
        r = np.linalg.norm(h @ self.right - self.right * self.eigenvalues, axis=0)
        l = np.linalg.norm(adjoint(h) @ self.left - self.left * np.conj(self.eigenvalues), axis=0)
        return float(max(r.max(), l.max()))


def _sorted_eig(h):
    w, v = np.linalg.eig(h)
    order = np.lexsort((w.imag, w.real))
    return w[order], v[:, order]


def min_gap(values):
    values = np.asarray(values)
    if values.size < 2:
        return np.inf
    d = np.abs(values[:, None] - values[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def spectral(h, tol=DEGENERACY_TOL):
    """Biorthonormal eigensystem of a diagonalizable operator.

    Left vectors come from an independent decomposition of ``H^dagger`` and are
    only rescaled (never mixed) so that the eigen-equations hold by construction.
    Raises DegenerateSpectrum when two eigenvalues are closer than ``tol``.
    """
    h = as_operator(h)
    n = h.shape[0]
    if is_hermitian(h, tol=1e-14):
        w, v = np.linalg.eigh((h + adjoint(h)) / 2)
        gap = min_gap(w)
        if gap < tol:
            raise DegenerateSpectrum(f"eigenvalue gap {gap:.3g} below {tol:.3g}")
        return EigenSystem(w.astype(complex), v.astype(complex), v.astype(complex).copy(), True)

    w, right = _sorted_eig(h)
    gap = min_gap(w)
    if gap < tol:
        raise DegenerateSpectrum(f"eigenvalue gap {gap:.3g} below {tol:.3g}")
    right = right / np.linalg.norm(right, axis=0)

    mu, left = np.linalg.eig(adjoint(h))
    # pair each E_k with the eigenvalue of H^dagger closest to conj(E_k)
    dist = np.abs(np.conj(mu)[None, :] - w[:, None])
    match = np.argmin(dist, axis=1)
    if len(set(match.tolist())) != n:
        raise DegenerateSpectrum("could not pair left and right eigenvectors")
    left = left[:, match]

    overlaps = np.einsum("ij,ij->j", np.conj(left), right)
    if np.any(np.abs(overlaps) < np.finfo(float).eps * n):
        raise DegenerateSpectrum("left and right eigenvectors are orthogonal (defective operator)")
    left = left / np.conj(overlaps)

    g = adjoint(left) @ right
    biorth = bool(np.max(np.abs(g - np.eye(n))) <= 1e-6 and np.linalg.cond(g) < 1e8)
    return EigenSystem(w, right, left, biorth)


def gram(vectors, product=None):
    """Gram matrix G[i, j] = <f_i, f_j> under ``product`` (standard when None).

    Only the upper triangle is evaluated; the rest is mirrored so that the
    result equals its own adjoint exactly.
    """
    vs = [as_vector(v) for v in vectors]
    if len({v.size for v in vs}) > 1:
        raise ValueError("all vectors must have the same dimension")
    ip = inner if product is None else product.inner
    k = len(vs)
    g = np.zeros((k, k), dtype=complex)
    for i in range(k):
        g[i, i] = ip(vs[i], vs[i]).real
        for j in range(i + 1, k):
            g[i, j] = ip(vs[i], vs[j])
            g[j, i] = np.conj(g[i, j])
    return g


def leading_minors(m):
    """Real parts of the leading principal minors det(m[:k, :k]), k = 1..n."""
    return [float(np.linalg.det(m[:k, :k]).real) for k in range(1, m.shape[0] + 1)]


def random_operator(rng, n, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def random_hermitian(rng, n, scale=1.0):
    x = random_operator(rng, n, scale)
    return (x + adjoint(x)) / 2


def random_state(rng, n):
    return normalize(rng.standard_normal(n) + 1j * rng.standard_normal(n))
