"""Metric operators and the scalar products they induce.

A metric S is a Hermitian positive-definite operator; it defines
<f, g>_S = <S f, g> and the sharp adjoint X# = S^-1 X^dagger S.
"""
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ComplexSpectrumWarning, IllConditionedMetric, NotHermitian
from .linalg import (
    DEGENERACY_TOL,
    adjoint,
    as_operator,
    inner,
    is_hermitian,
    spectral,
)

COND_CAP = 1e12
REAL_SPECTRUM_TOL = 1e-8


@dataclass(frozen=True)
class Metric:
    S: np.ndarray
    S_half: np.ndarray
    S_half_inv: np.ndarray
    S_inv: np.ndarray
    cond: float
    # filled only by metric_from_hamiltonian
    real_spectrum: bool | None = None
    intertwining_residual: float | None = None
    eigen_residual: float | None = None

    @property
    def dim(self):
        return self.S.shape[0]

    def inverse(self):
        """The metric S^-1, used for the adjoint pair (X^dagger, P^dagger) and psi(z)."""
        return make_metric(self.S_inv)


def make_metric(s, cond_cap=COND_CAP, **info):
    """Build a Metric from a Hermitian positive-definite ``s``.

    Square roots come from the Hermitian eigendecomposition, which realizes the
    unique positive root.
    """
    s = as_operator(s)
    if not is_hermitian(s, tol=1e-10):
        raise NotHermitian("metric operator must be Hermitian")
    s = (s + adjoint(s)) / 2
    w, u = np.linalg.eigh(s)
    if w[0] <= 0:
        raise IllConditionedMetric(f"metric is not positive definite (min eigenvalue {w[0]:.3g})")
    cond = float(w[-1] / w[0])
    if cond > cond_cap:
        raise IllConditionedMetric(f"cond(S) = {cond:.3g} exceeds cap {cond_cap:.3g}")
    ud = adjoint(u)
    root = np.sqrt(w)
    return Metric(
        S=s,
        S_half=(u * root) @ ud,
        S_half_inv=(u / root) @ ud,
        S_inv=(u / w) @ ud,
        cond=cond,
        **info,
    )


def metric_from_inverse(s_inv, cond_cap=COND_CAP):
    """Metric whose inverse is ``s_inv``, e.g. S^-1 = R R^dagger for regular pseudo-bosons."""
    return make_metric(np.linalg.inv(as_operator(s_inv)), cond_cap=cond_cap)


def identity_metric(n):
    return make_metric(np.eye(n, dtype=complex))


class ScalarProduct:
    """The standard product, or the weighted one when a metric is supplied."""

    def __init__(self, metric=None):
        self.metric = metric

    @property
    def tag(self):
        return "standard" if self.metric is None else "weighted"

    def inner(self, f, g):
        if self.metric is None:
            return inner(f, g)
        return inner(self.metric.S @ f, g)

    def norm(self, f):
        return float(np.sqrt(max(self.inner(f, f).real, 0.0)))

    def adjoint(self, x):
        """Adjoint with respect to this product."""
        if self.metric is None:
            return adjoint(x)
        return sharp_adjoint(self.metric, x)

    def projector(self, phi):
        """Orthogonal projector onto span(phi) for this product: f -> <phi, f> phi."""
        if self.metric is None:
            return np.outer(phi, np.conj(phi))
        return np.outer(phi, np.conj(self.metric.S @ phi))

    def __repr__(self):
        return f"ScalarProduct({self.tag})"


STANDARD = ScalarProduct()


def weighted(metric):
    return ScalarProduct(metric)


def weighted_inner(metric, f, g):
    return inner(metric.S @ np.asarray(f), np.asarray(g))


def sharp_adjoint(metric, x):
    return metric.S_inv @ adjoint(x) @ metric.S


def metric_from_eigensystem(es, h=None, scales=None, cond_cap=COND_CAP):
    """S = sum_k |psi_k><psi_k| from a biorthonormal eigensystem.

    The eigensystem fixes S only up to rescaling phi_k -> lam_k phi_k,
    psi_k -> psi_k / conj(lam_k); ``scales`` sets the norms ||phi_k||
    (unit norms by default).
    """
    right, left = es.right, es.left
    if scales is not None:
        lam = np.asarray(scales, dtype=float) / np.linalg.norm(right, axis=0)
        right = right * lam
        left = left / lam
    s = left @ adjoint(left)
    info = {}
    if h is not None:
        real = bool(np.all(np.abs(es.eigenvalues.imag) <= REAL_SPECTRUM_TOL))
        info["real_spectrum"] = real
        info["eigen_residual"] = float(np.linalg.norm(s @ right - left, axis=0).max())
        if real:
            info["intertwining_residual"] = float(np.linalg.norm(s @ h - adjoint(h) @ s))
        else:
            warnings.warn(
                "Hamiltonian has complex eigenvalues; SH = H^dagger S is not checked",
                ComplexSpectrumWarning,
                stacklevel=3,
            )
    return make_metric(s, cond_cap=cond_cap, **info)


def metric_from_hamiltonian(h, tol=DEGENERACY_TOL, scales=None, cond_cap=COND_CAP):
    """Metric built from the biorthonormal eigenbasis of a non-degenerate ``h``.

    Raises DegenerateSpectrum if two eigenvalues are closer than ``tol``.
    """
    h = as_operator(h)
    es = spectral(h, tol)
    if not es.biorthonormal:
        raise IllConditionedMetric("eigenvectors are not numerically biorthonormal")
    return metric_from_eigensystem(es, h=h, scales=scales, cond_cap=cond_cap)


def hermitian_partner(metric, h):
    """H0 = S^1/2 H S^-1/2, Hermitian whenever SH = H^dagger S."""
    return metric.S_half @ h @ metric.S_half_inv


def good_observable(metric, b0, tol=1e-10):
    """Deform a Hermitian ``b0`` into B = S^-1/2 B0 S^1/2, which satisfies SB = B^dagger S."""
    b0 = as_operator(b0)
    if not is_hermitian(b0, tol=tol):
        raise NotHermitian("good_observable requires B0 = B0^dagger")
    return metric.S_half_inv @ b0 @ metric.S_half


def intertwining_residual(metric, b):
    """||S B - B^dagger S||."""
    return float(np.linalg.norm(metric.S @ b - adjoint(b) @ metric.S))
