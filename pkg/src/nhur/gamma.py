"""Heisenberg-type dynamics generated by a non-Hermitian Hamiltonian.

gamma^t(X) = exp(i H^dagger t) X exp(-i H t) is not multiplicative unless
H = H^dagger, while alpha^t(X) = exp(i H t) X exp(-i H t) always is.  A
gamma-symmetry is an X with H^dagger X = X H, i.e. a fixed point of gamma^t.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import BadCoefficients, PreconditionFailed
from .linalg import adjoint, as_operator, as_state, commutator, mat_exp, op_norm, random_operator
from .metric import STANDARD
from .uncertainty import SATURATION_TOL, saturation_test

SYMMETRY_TOL = 1e-8
LATTICE_TOL = 1e-9
SAMPLE_TIMES = (0.1, 1.0, 5.0)
DEFAULT_SEED = 20240611


@dataclass(frozen=True)
class GammaFlow:
    """The pair of propagators defining gamma^t for one (H, t)."""

    H: np.ndarray
    t: float
    forward: np.ndarray
    co_forward: np.ndarray

    @classmethod
    def build(cls, h, t):
        h = as_operator(h)
        return cls(h, float(t), mat_exp(-1j * t * h), mat_exp(1j * t * adjoint(h)))

    def __call__(self, x):
        return self.co_forward @ x @ self.forward


def gamma_evolve(h, x, t):
    return GammaFlow.build(h, t)(x)


def alpha_evolve(h, x, t):
    """exp(iHt) X exp(-iHt); a similarity, hence multiplicative and spectrum preserving."""
    h = as_operator(h)
    return mat_exp(1j * t * h) @ x @ mat_exp(-1j * t * h)


def gamma_derivation(h, x):
    return 1j * (adjoint(h) @ x - x @ h)


def gamma_series(h, x, t, k):
    """Partial sum of sum_j t^j delta^j(X) / j! up to j = k."""
    if k < 0:
        raise ValueError("series order must be non-negative")
    term = np.array(x, dtype=complex)
    total = term.copy()
    for j in range(1, k + 1):
        term = gamma_derivation(h, term) * (t / j)
        total = total + term
    return total


@dataclass(frozen=True)
class EquivalenceReport:
    """Residuals of the equivalent characterizations of a gamma-symmetry."""

    residuals: dict
    verdicts: dict
    threshold: float
    verdict: bool
    agree: bool


def is_gamma_symmetry(h, metric, x, tol=SYMMETRY_TOL, times=SAMPLE_TIMES):
    """Evaluate [H, S^-1 X] = 0 together with its equivalent forms.

    The forms are [H^dagger, X^dagger S^-1] = 0, H^dagger X = X H,
    delta(X) = 0, and gamma^t(X) = X at each sampled t.  Each is compared with
    ``tol * ||X|| * (1 + ||H||)``; ``agree`` is False if the forms disagree.
    """
    h = as_operator(h)
    x = as_operator(x)
    s_inv = metric.S_inv
    residuals = {
        "commutator": float(np.linalg.norm(commutator(h, s_inv @ x))),
        "adjoint_commutator": float(np.linalg.norm(commutator(adjoint(h), adjoint(x) @ s_inv))),
        "intertwining": float(np.linalg.norm(adjoint(h) @ x - x @ h)),
        "derivation": float(np.linalg.norm(gamma_derivation(h, x))),
    }
    residuals["fixed_point"] = max(
        float(np.linalg.norm(gamma_evolve(h, x, t) - x)) for t in times
    )
    threshold = tol * op_norm(x) * (1.0 + op_norm(h))
    verdicts = {k: v <= threshold for k, v in residuals.items()}
    values = set(verdicts.values())
    return EquivalenceReport(
        residuals=residuals,
        verdicts=verdicts,
        threshold=threshold,
        verdict=verdicts["commutator"],
        agree=len(values) == 1,
    )


def symmetry_product(h, metric, x, y, tol=SYMMETRY_TOL):
    """XY for a gamma-symmetry X and an operator Y commuting with H."""
    h, x, y = as_operator(h), as_operator(x), as_operator(y)
    if not is_gamma_symmetry(h, metric, x, tol).verdict:
        raise PreconditionFailed("X is not a gamma-symmetry", hypothesis="gamma_symmetry")
    if np.linalg.norm(commutator(y, h)) > tol * op_norm(y) * (1.0 + op_norm(h)):
        raise PreconditionFailed("Y does not commute with H", hypothesis="commutes_with_H")
    xy = x @ y
    if not is_gamma_symmetry(h, metric, xy, tol).verdict:
        raise ArithmeticError("XY failed the gamma-symmetry test despite valid hypotheses")
    return xy


def v_phi(phi, coeffs):
    """sum_n c_n |e_n><e_n| over an orthonormal basis with e_1 = phi.

    The basis is the Householder reflection sending the first standard basis
    vector onto phi (up to a phase absorbed in e_1), so V phi = phi.
    """
    phi = as_state(phi, tol=1e-10)
    coeffs = np.asarray(coeffs, dtype=complex)
    n = phi.size
    if coeffs.shape != (n,):
        raise BadCoefficients(f"need {n} coefficients, got shape {coeffs.shape}")
    if abs(coeffs[0] - 1) > 1e-14:
        raise BadCoefficients("first coefficient must equal 1")
    phase = phi[0] / abs(phi[0]) if abs(phi[0]) > 0 else 1.0
    w = phi / phase
    v = -w
    v[0] += 1.0
    vnorm = np.linalg.norm(v)
    basis = np.eye(n, dtype=complex)
    if vnorm > 1e-15:
        v = v / vnorm
        basis = basis - 2.0 * np.outer(v, np.conj(v))
    basis[:, 0] = phi
    return (basis * coeffs) @ adjoint(basis)


def prop3_check(h, metric, a, b, phi, times=SAMPLE_TIMES, product=STANDARD, tol=SATURATION_TOL,
                symmetry_tol=SYMMETRY_TOL):
    """Check that saturation by (A, B; phi) survives gamma-evolution of A and B.

    Requires A and B to be gamma-symmetries and (A, B; phi) to saturate the
    Schwarz bound; raises PreconditionFailed naming the hypothesis otherwise.
    """
    for name, op in (("A", a), ("B", b)):
        if not is_gamma_symmetry(h, metric, op, symmetry_tol).verdict:
            raise PreconditionFailed(f"{name} is not a gamma-symmetry", hypothesis=f"{name}_symmetry")
    if not saturation_test(a, b, phi, product, tol).saturated:
        raise PreconditionFailed("(A, B; phi) does not saturate the bound", hypothesis="saturation")
    for t in times:
        flow = GammaFlow.build(h, t)
        if not saturation_test(flow(a), flow(b), phi, product, tol).saturated:
            return False
    return True


@dataclass(frozen=True)
class LatticeReport:
    """Truth values of the five statements equivalent to H = H^dagger."""

    properties: dict
    residuals: dict
    seed: int
    agree: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "agree", len(set(self.properties.values())) == 1)


def equivalence_lattice(h, t=1.0, n_pairs=20, seed=DEFAULT_SEED, tol=LATTICE_TOL):
    """Evaluate the five equivalent statements on random witness pairs.

    Universal quantifiers over all operators are replaced by ``n_pairs`` random
    pairs drawn from ``seed``; every residual is made relative before comparing
    with ``tol``.
    """
    h = as_operator(h)
    n = h.shape[0]
    rng = np.random.default_rng(seed)
    eye = np.eye(n, dtype=complex)
    hn = 1.0 + op_norm(h)
    flow = GammaFlow.build(h, t)

    star, mult = 0.0, 0.0
    for _ in range(n_pairs):
        x = random_operator(rng, n)
        y = random_operator(rng, n)
        scale = op_norm(x) * op_norm(y)
        leibniz = gamma_derivation(h, x @ y) - gamma_derivation(h, x) @ y - x @ gamma_derivation(h, y)
        star_part = gamma_derivation(h, adjoint(x)) - adjoint(gamma_derivation(h, x))
        star = max(star, np.linalg.norm(leibniz) / (scale * hn), np.linalg.norm(star_part) / (op_norm(x) * hn))
        mult = max(mult, np.linalg.norm(flow(x @ y) - flow(x) @ flow(y)) / scale)

    residuals = {
        "star_derivation": float(star),
        "derivation_of_identity": float(np.linalg.norm(gamma_derivation(h, eye)) / hn),
        "hermitian": float(np.linalg.norm(h - adjoint(h)) / hn),
        "identity_fixed": float(np.linalg.norm(flow(eye) - eye)),
        "multiplicative": float(mult),
    }
    properties = {k: v <= tol for k, v in residuals.items()}
    return LatticeReport(properties, residuals, seed)


def automorphism_defect(h, t=1.0, n_pairs=20, seed=DEFAULT_SEED):
    """Largest ||gamma^t(XY) - gamma^t(X) gamma^t(Y)|| over random unit-scale pairs, with the witness."""
    h = as_operator(h)
    n = h.shape[0]
    rng = np.random.default_rng(seed)
    flow = GammaFlow.build(h, t)
    best = (-1.0, None, None)
    for _ in range(n_pairs):
        x = random_operator(rng, n)
        y = random_operator(rng, n)
        x, y = x / op_norm(x), y / op_norm(y)
        d = float(np.linalg.norm(flow(x @ y) - flow(x) @ flow(y)))
        if d > best[0]:
            best = (d, x, y)
    return best
