"""Variances, uncertainty bounds and saturation tests for possibly non-Hermitian operators.

Every function takes a ``ScalarProduct``; with the standard product the
adjoint is the usual dagger, with a weighted product it is the sharp adjoint.
For a normalized state phi and centered operators A^ = A - <A>:

* ``bound23``  = |<A^ phi, B^ phi>|                    (Schwarz bound)
* ``bound210`` = max(|Re <B^ phi, A^ phi>|, |Im ...|)  (weaker bound)
"""
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NotNormalized
from .linalg import anticommutator, commutator, gram, leading_minors
from .metric import STANDARD

NORM_TOL = 1e-10
SATURATION_TOL = 1e-8


def _check_normalized(phi, product):
    norm = product.norm(phi)
    if abs(norm - 1.0) > NORM_TOL:
        raise NotNormalized(f"state has {product.tag} norm {norm!r}, expected 1")


def mean(x, phi, product=STANDARD):
    """<phi, X phi> under ``product``."""
    _check_normalized(phi, product)
    return product.inner(phi, x @ phi)


def centered(x, phi, product=STANDARD):
    m = mean(x, phi, product)
    return x - m * np.eye(x.shape[0])


def variance(x, phi, product=STANDARD):
    """Delta X = ||(X - <X>) phi||, the uncertainty of X on phi (not its square)."""
    m = mean(x, phi, product)
    return product.norm(x @ phi - m * phi)


@dataclass(frozen=True)
class UncertaintyReport:
    mean_A: complex
    mean_B: complex
    delta_A: float
    delta_B: float
    cross: complex
    bound23: float
    C: float
    D: float
    bound210: float
    commutator_term: complex
    anticommutator_term: complex
    projector_residual: float
    product_tag: str

    @property
    def delta_product(self):
        return self.delta_A * self.delta_B

    @property
    def slack23(self):
        return self.delta_product - self.bound23

    @property
    def slack210(self):
        return self.delta_product - self.bound210

    def as_dict(self):
        d = asdict(self)
        d["delta_product"] = self.delta_product
        return d


def ur_report(a, b, phi, product=STANDARD):
    """All two-operator uncertainty quantities for (A, B; phi)."""
    ma = mean(a, phi, product)
    mb = mean(b, phi, product)
    a_phi, b_phi = a @ phi, b @ phi
    fa = a_phi - ma * phi
    fb = b_phi - mb * phi
    cross = product.inner(fa, fb)
    ba = np.conj(cross)

    n = a.shape[0]
    eye = np.eye(n)
    a_adj = product.adjoint(a)
    a_hat_adj = a_adj - np.conj(ma) * eye
    b_hat = b - mb * eye
    comm = product.inner(phi, commutator(a_adj, b) @ phi)
    anti = product.inner(phi, anticommutator(a_hat_adj, b_hat) @ phi)

    q = eye - product.projector(phi)
    proj_cross = product.inner(a_phi, q @ b_phi)

    c_val = -2.0 * ba.imag
    d_val = 2.0 * ba.real
    return UncertaintyReport(
        mean_A=ma,
        mean_B=mb,
        delta_A=product.norm(fa),
        delta_B=product.norm(fb),
        cross=cross,
        bound23=abs(cross),
        C=c_val,
        D=d_val,
        bound210=0.5 * max(abs(c_val), abs(d_val)),
        commutator_term=comm,
        anticommutator_term=anti,
        projector_residual=abs(proj_cross - cross),
        product_tag=product.tag,
    )


def hermitian_terms(a, b, phi, product=STANDARD):
    """(<-i[A,B]>, <{A,B}> - 2<A><B>), the textbook forms of C and D for Hermitian A, B."""
    ma = mean(a, phi, product)
    mb = mean(b, phi, product)
    c_term = product.inner(phi, -1j * commutator(a, b) @ phi)
    d_term = product.inner(phi, anticommutator(a, b) @ phi) - 2 * ma * mb
    return c_term, d_term


def lemma1_check(report, tol=1e-10):
    """bound23 >= bound210 always, with equality when C * D vanishes."""
    ok = report.bound23 >= report.bound210 - tol
    if abs(report.C * report.D) <= tol:
        ok = ok and abs(report.bound23 - report.bound210) <= tol
    return bool(ok)


@dataclass(frozen=True)
class SaturationResult:
    saturated: bool
    case: str
    gamma: complex | None
    residual: float
    gap: float
    saturated210: bool
    consistent: bool

    def as_dict(self):
        return asdict(self)


def saturation_test(a, b, phi, product=STANDARD, tol=SATURATION_TOL):
    """Classify (A, B; phi) against the eigenstate conditions for saturating the Schwarz bound.

    c1: A^ phi = 0; c2: B^ phi = 0; c3: A^ phi = -gamma B^ phi for some complex gamma.
    Ties are resolved c1 > c2 > c3.  ``saturated`` is judged independently from
    the bound itself, and ``consistent`` records whether the two verdicts agree.
    ``saturated210`` reports equality in the weaker max-of-parts bound.
    """
    ma = mean(a, phi, product)
    mb = mean(b, phi, product)
    fa = a @ phi - ma * phi
    fb = b @ phi - mb * phi
    na, nb = product.norm(fa), product.norm(fb)
    cross = product.inner(fa, fb)

    gamma = None
    if na <= tol:
        case, residual = "c1_eigenA", na
    elif nb <= tol:
        case, residual = "c2_eigenB", nb
    else:
        g = -product.inner(fb, fa) / nb**2
        residual = product.norm(fa + g * fb)
        if residual <= tol * (na + nb):
            case, gamma = "c3_combination", complex(g)
        else:
            case = "none"

    prod = na * nb
    scale = tol * max(1.0, prod)
    gap = prod - abs(cross)
    bound210 = max(abs(cross.real), abs(cross.imag))
    saturated = abs(gap) <= scale
    return SaturationResult(
        saturated=bool(saturated),
        case=case,
        gamma=gamma,
        residual=float(residual),
        gap=float(gap),
        saturated210=bool(abs(prod - bound210) <= scale),
        consistent=bool(saturated == (case != "none")),
    )


@dataclass(frozen=True)
class TripleReport:
    gram3: np.ndarray
    minors: list
    ineq220_lhs: float
    ineq220_rhs: float
    ineq221_lhs: float
    ineq221_rhs: float

    @property
    def det_form(self):
        """ineq220_lhs - ineq220_rhs, which equals det(gram3)."""
        return self.ineq220_lhs - self.ineq220_rhs

    def as_dict(self):
        return {
            "gram3": self.gram3,
            "minors": list(self.minors),
            "ineq220_lhs": self.ineq220_lhs,
            "ineq220_rhs": self.ineq220_rhs,
            "ineq221_lhs": self.ineq221_lhs,
            "ineq221_rhs": self.ineq221_rhs,
        }


def triple_report(a, b, c, phi, product=STANDARD):
    """Gram-matrix bounds for three operators on one state.

    With f_i the centered vectors, positivity of the 3x3 Gram matrix gives
    n1 n2 n3 + 2 Re(g12 g23 g31) >= n1 |g23|^2 + n2 |g13|^2 + n3 |g12|^2
    and, by three Schwarz steps, n1 n2 n3 >= |g12 g23 g31|.
    """
    fs = []
    for x in (a, b, c):
        m = mean(x, phi, product)
        fs.append(x @ phi - m * phi)
    g = gram(fs, product)
    n1, n2, n3 = (float(g[i, i].real) for i in range(3))
    g12, g23, g31 = g[0, 1], g[1, 2], g[2, 0]
    triple = g12 * g23 * g31
    return TripleReport(
        gram3=g,
        minors=leading_minors(g),
        ineq220_lhs=float(n1 * n2 * n3 + 2 * triple.real),
        ineq220_rhs=float(n1 * abs(g23) ** 2 + n2 * abs(g31) ** 2 + n3 * abs(g12) ** 2),
        ineq221_lhs=float(n1 * n2 * n3),
        ineq221_rhs=float(abs(triple)),
    )
