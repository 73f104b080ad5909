"""State-side local-unitary invariants and the quantities derived from them."""
from dataclasses import dataclass, fields
from itertools import product

import numpy as np

from .errors import InconsistentInvariantsError, NonPhysicalInvariantsError
from .states import (
    BlochTwoQubit,
    TwoQubitState,
    as_state,
    bloch_decompose,
    check_density,
    partial_trace,
    partial_transpose,
)

DISCRIMINANT_TOL = 1e-10
ROOT_TOL = 1e-8
NEGATIVITY_IMAG_TOL = 1e-6

INVARIANT_KEYS = ("I1", "I2", "I3", "I4", "I5", "I6", "I7", "I8", "I9", "I12", "I13", "I14")


@dataclass(frozen=True)
class InvariantSet:
    """The twelve Makhlin invariants of a two-qubit state."""

    I1: float = 0.0
    I2: float = 0.0
    I3: float = 0.0
    I4: float = 0.0
    I5: float = 0.0
    I6: float = 0.0
    I7: float = 0.0
    I8: float = 0.0
    I9: float = 0.0
    I12: float = 0.0
    I13: float = 0.0
    I14: float = 0.0

    def as_dict(self):
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}

    def as_array(self):
        return np.array([getattr(self, k) for k in INVARIANT_KEYS])

    @classmethod
    def from_mapping(cls, data):
        missing = [k for k in INVARIANT_KEYS if k not in data]
        if missing:
            raise KeyError(f"invariant set is missing {', '.join(missing)}")
        unknown = set(data) - set(INVARIANT_KEYS)
        if unknown:
            raise KeyError(f"unknown invariant keys: {', '.join(sorted(unknown))}")
        return cls(**{k: float(data[k]) for k in INVARIANT_KEYS})

    def __getitem__(self, key):
        if key not in INVARIANT_KEYS:
            raise KeyError(key)
        return getattr(self, key)


@dataclass(frozen=True)
class SingularTriple:
    """Squared singular values of T (descending) together with sign(det T)."""

    lam_sq: tuple
    det_sign: int

    def __post_init__(self):
        lam = tuple(sorted((float(x) for x in self.lam_sq), reverse=True))
        if len(lam) != 3:
            raise ValueError("need exactly three squared singular values")
        object.__setattr__(self, "lam_sq", lam)
        object.__setattr__(self, "det_sign", int(np.sign(self.det_sign)))

    @property
    def singular_values(self):
        return np.sqrt(np.clip(self.lam_sq, 0.0, None))

    @classmethod
    def from_matrix(cls, T):
        s = np.linalg.svd(np.asarray(T, dtype=float), compute_uv=False)
        return cls(tuple(s ** 2), int(np.sign(np.linalg.det(T))))


def star(v):
    """Hodge star: (*v)_ij = sum_k eps_ijk v_k."""
    return np.array([[0.0, v[2], -v[1]], [-v[2], 0.0, v[0]], [v[1], -v[0], 0.0]])


def compute_all(b):
    if isinstance(b, TwoQubitState) or not isinstance(b, BlochTwoQubit):
        b = bloch_decompose(b)
    a, be, T = b.alpha, b.beta, b.T
    TT = T @ T.T
    aT = a @ T
    Tb = T @ be
    aTT = a @ TT
    TtTb = T.T @ Tb
    return InvariantSet(
        I1=float(np.linalg.det(T)),
        I2=float(np.trace(TT)),
        I3=float(np.trace(TT @ TT)),
        I4=float(a @ a),
        I5=float(aT @ aT),
        I6=float(aTT @ aTT),
        I7=float(be @ be),
        I8=float(Tb @ Tb),
        I9=float(TtTb @ TtTb),
        I12=float(a @ Tb),
        I13=float(aTT @ Tb),
        I14=float(np.trace(star(a) @ T @ star(be).T @ T.T)),
    )


# --- characteristic polynomial of T T^T -------------------------------------------

def char_poly(inv):
    """Coefficients (1, c2, c1, c0) of x^3 - I2 x^2 - (I3 - I2^2)/2 x - I1^2."""
    I1, I2, I3 = inv.I1, inv.I2, inv.I3
    return np.array([1.0, -I2, -0.5 * (I3 - I2 * I2), -I1 * I1])


def cubic_discriminant(coeffs):
    a, b, c, d = coeffs
    return 18 * a * b * c * d - 4 * b ** 3 * d + b * b * c * c - 4 * a * c ** 3 - 27 * a * a * d * d


def _real_cubic_roots(coeffs):
    """Trigonometric solution for a monic cubic with three real roots."""
    _, b, c, d = coeffs
    shift = -b / 3
    p = c - b * b / 3
    q = 2 * b ** 3 / 27 - b * c / 3 + d
    if p > -1e-15:
        # (near) triple root
        return np.full(3, shift)
    m = 2 * np.sqrt(-p / 3)
    arg = np.clip(3 * q / (p * m), -1.0, 1.0)
    theta = np.arccos(arg) / 3
    k = np.arange(3)
    return shift + m * np.cos(theta - 2 * np.pi * k / 3)


def singular_triple(inv, tol=ROOT_TOL):
    """Squared singular values of T recovered from (I1, I2, I3) alone."""
    coeffs = char_poly(inv)
    disc = cubic_discriminant(coeffs)
    if disc < -DISCRIMINANT_TOL:
        roots = np.roots(coeffs)
        raise NonPhysicalInvariantsError(
            f"characteristic cubic has complex roots (discriminant {disc:.3g})",
            discriminant=disc, roots=roots,
        )
    roots = _real_cubic_roots(coeffs)
    if roots.min() < -tol or roots.max() > 1 + tol:
        raise NonPhysicalInvariantsError(
            f"squared singular values {np.round(roots, 6).tolist()} outside [0, 1]",
            discriminant=disc, roots=roots,
        )
    lam = np.sort(np.clip(roots, 0.0, 1.0))[::-1]
    return SingularTriple(tuple(lam), int(np.sign(inv.I1)))


def chsh_value(s):
    return float(2 * np.sqrt(s.lam_sq[0] + s.lam_sq[1]) - 2)


def fmax_lower_bound(s):
    """Best singlet fraction reachable by local unitaries.

    The singular values enter with signs (eps_1, eps_2, eps_3) whose product
    must equal sign(det T); proper rotations can only flip signs in pairs.
    """
    lam = s.singular_values
    if s.det_sign == 0:
        patterns = list(product((1, -1), repeat=3))
    else:
        patterns = [e for e in product((1, -1), repeat=3) if np.prod(e) == s.det_sign]
    # fidelities with the four Bell states for diagonal T = diag(t1, t2, t3)
    brackets = np.array([[-1, -1, -1], [-1, 1, 1], [1, -1, 1], [1, 1, -1]])
    best = -np.inf
    for eps in patterns:
        t = lam * np.array(eps)
        best = max(best, float(np.max(1 + brackets @ t)) / 4)
    return best


def teleport_fidelity(F):
    if not 0.0 <= F <= 1.0:
        raise ValueError(f"fidelity {F} outside [0, 1]")
    return (2 * F + 1) / 3


# --- negativity -----------------------------------------------------------------------

def pt_moments(inv):
    """p_k = Tr[(rho^{T_B})^k] for k = 2, 3, 4, written in the invariants of rho."""
    x1 = inv.I2 + inv.I4 + inv.I7
    x2 = inv.I1 + inv.I12
    x3 = inv.I2 ** 2 - inv.I3
    x4 = inv.I5 + inv.I8 + inv.I14 + inv.I4 * inv.I7
    p2 = (1 + x1) / 4
    p3 = (1 + 3 * x1 + 6 * x2) / 16
    p4 = (1 + 6 * x1 + 24 * x2 + x1 * x1 + 2 * x3 + 4 * x4) / 64
    return p2, p3, p4


def negativity_quartic(inv):
    """Coefficients (highest first) of the quartic whose roots are -2 mu_i."""
    p2, p3, p4 = pt_moments(inv)
    det_pt = (1 - 6 * p4 + 8 * p3 + 3 * p2 * p2 - 6 * p2) / 24
    return np.array([3.0, 6.0, -6 * (p2 - 1), -4 * (3 * p2 - 2 * p3 - 1), 48 * det_pt])


def negativity_from_invariants(inv, tol=1e-7, clip=False):
    """Negativity from the invariants alone.

    The quartic's roots are -2 times the eigenvalues of the partial transpose,
    so the largest real root is -2 * (smallest eigenvalue).  Separable states
    have no positive root and get N = 0.  ``clip`` caps a root above 1 at 1
    instead of raising, for invariants that carry estimation noise.
    """
    roots = np.roots(negativity_quartic(inv))
    if roots.real.max() <= 0:
        # separable: clustered negative roots may pick up spurious imaginary parts
        return 0.0
    real = roots[(np.abs(roots.imag) <= NEGATIVITY_IMAG_TOL) & (roots.real > 0)].real
    if real.size == 0:
        raise InconsistentInvariantsError("negativity quartic has no real positive root")
    top = float(real.max())
    if top > 1 + tol and not clip:
        raise InconsistentInvariantsError(f"negativity root {top:.6g} exceeds 1")
    return min(max(0.0, top), 1.0)


def negativity_direct(rho):
    lowest = float(np.linalg.eigvalsh(partial_transpose(as_state(rho)).matrix)[0])
    return -2 * min(0.0, lowest)


# --- three qubits -------------------------------------------------------------------------

def kempe_invariant(b):
    a, be, g = b.alpha, b.beta, b.gamma
    return float(
        1 + a @ a + be @ be + g @ g
        + a @ b.T_AB @ be + a @ b.T_AC @ g + be @ b.T_BC @ g
        + np.trace(b.T_AB @ b.T_BC @ b.T_AC.T)
    ) / 8


def kempe_direct(rho8):
    """Tr[(rho_AB x 1)(rho_AC x 1)(rho_BC x 1)] with each factor on its own qubit pair."""
    m = np.asarray(rho8, dtype=complex)
    check_density(m, 8)
    eye = np.eye(2)
    ab = np.kron(partial_trace(m, [0, 1], 3), eye)
    # rho_AC acts on qubits 0, 2: build on (A, C, B) then permute to (A, B, C)
    ac = np.kron(partial_trace(m, [0, 2], 3), eye).reshape((2,) * 6)
    ac = ac.transpose(0, 2, 1, 3, 5, 4).reshape(8, 8)
    bc = np.kron(eye, partial_trace(m, [1, 2], 3))
    return float(np.trace(ab @ ac @ bc).real)


