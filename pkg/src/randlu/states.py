"""Density matrices, Bloch coordinates, partial transposition and test states.

Pauli order is fixed to (sigma_1, sigma_2, sigma_3) = (X, Y, Z) everywhere.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import InvalidStateError, NonPhysicalStateError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = -1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (X, Y, Z)
PAULI4 = (I2, X, Y, Z)

# Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS[_i, _j, _k] = 1.0
    EPS[_i, _k, _j] = -1.0

for _m in (I2, X, Y, Z, EPS):
    _m.setflags(write=False)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


def kron(*ops):
    return reduce(np.kron, ops)


def check_density(matrix, dim=None):
    """Raise :class:`InvalidStateError` unless ``matrix`` is a valid density matrix.

    Returns the smallest eigenvalue so callers can report it.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or (dim is not None and m.shape[0] != dim):
        raise InvalidStateError(f"expected a square {dim}x{dim} matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise InvalidStateError("matrix is not Hermitian")
    if abs(np.trace(m) - 1) > TRACE_TOL:
        raise InvalidStateError(f"trace is {np.trace(m).real:.3g}, not 1")
    lowest = float(np.linalg.eigvalsh(m)[0])
    if lowest < PSD_TOL:
        raise NonPhysicalStateError(f"matrix has negative eigenvalue {lowest:.3g}")
    return lowest


class TwoQubitState:
    """Immutable 4x4 density matrix.

    Construction validates Hermiticity, unit trace and positivity.  Matrices
    produced by noisy or formal operations (partial transposition, Bloch data
    that is not positive) are built with ``allow_nonphysical=True`` and carry
    ``physical=False`` instead of raising.
    """

    __slots__ = ("matrix", "physical")

    def __init__(self, matrix, *, allow_nonphysical=False):
        m = np.array(matrix, dtype=complex)
        if allow_nonphysical:
            if m.shape != (4, 4):
                raise InvalidStateError(f"expected a 4x4 matrix, got shape {m.shape}")
            physical = bool(np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= PSD_TOL)
        else:
            check_density(m, 4)
            physical = True
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "physical", physical)

    def __setattr__(self, name, value):
        raise AttributeError("TwoQubitState is immutable")

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        flag = "" if self.physical else ", physical=False"
        return f"TwoQubitState({np.round(self.matrix, 4).tolist()}{flag})"

    def __eq__(self, other):
        if not isinstance(other, TwoQubitState):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def purity(self):
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def as_state(rho):
    if isinstance(rho, TwoQubitState):
        return rho
    return TwoQubitState(rho)


@dataclass(frozen=True, eq=False)
class BlochTwoQubit:
    """Bloch coordinates (alpha, beta, T) of a two-qubit operator."""

    alpha: np.ndarray
    beta: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frozen(self.alpha))
        object.__setattr__(self, "beta", _frozen(self.beta))
        object.__setattr__(self, "T", _frozen(self.T))
        if self.alpha.shape != (3,) or self.beta.shape != (3,) or self.T.shape != (3, 3):
            raise ValueError("alpha, beta must be 3-vectors and T a 3x3 matrix")

    @classmethod
    def zeros(cls):
        return cls(np.zeros(3), np.zeros(3), np.zeros((3, 3)))

    def rotated(self, R_A, R_B):
        """Coordinates after local rotations: alpha -> R_A alpha, T -> R_A T R_B^T."""
        return BlochTwoQubit(R_A @ self.alpha, R_B @ self.beta, R_A @ self.T @ R_B.T)

    def partial_transpose(self):
        flip = np.diag([1.0, -1.0, 1.0])
        return BlochTwoQubit(self.alpha, flip @ self.beta, self.T @ flip)

    def allclose(self, other, atol=1e-12):
        return (np.allclose(self.alpha, other.alpha, atol=atol)
                and np.allclose(self.beta, other.beta, atol=atol)
                and np.allclose(self.T, other.T, atol=atol))


@dataclass(frozen=True, eq=False)
class ThreeQubitBloch:
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    T_AB: np.ndarray
    T_AC: np.ndarray
    T_BC: np.ndarray
    W: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "T_AB", "T_AC", "T_BC", "W"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def marginal_AB(self):
        return BlochTwoQubit(self.alpha, self.beta, self.T_AB)

    def marginal_AC(self):
        return BlochTwoQubit(self.alpha, self.gamma, self.T_AC)

    def marginal_BC(self):
        return BlochTwoQubit(self.beta, self.gamma, self.T_BC)


def bloch_decompose(rho):
    """(alpha, beta, T) with alpha_i = Tr[rho s_i x 1], beta_j = Tr[rho 1 x s_j], T_ij = Tr[rho s_i x s_j]."""
    m = as_state(rho).matrix
    return _decompose_matrix(m)


def _decompose_matrix(m):
    # Tr[rho (s_a x s_b)] for all a, b in 0..3 at once
    C = np.einsum("aij,bkl,jlik->ab",
                  np.array(PAULI4), np.array(PAULI4), m.reshape(2, 2, 2, 2)).real
    return BlochTwoQubit(C[1:, 0], C[0, 1:], C[1:, 1:])


def correlation_block(b):
    """4x4 matrix [[1, beta^T], [alpha, T]] indexed by Pauli labels 0..3."""
    C = np.empty((4, 4))
    C[0, 0] = 1.0
    C[0, 1:] = b.beta
    C[1:, 0] = b.alpha
    C[1:, 1:] = b.T
    return C


def bloch_compose(b):
    """Inverse of :func:`bloch_decompose`; non-positive results come back flagged."""
    C = correlation_block(b)
    P = np.array(PAULI4)
    m = np.einsum("ab,aij,bkl->ikjl", C, P, P).reshape(4, 4) / 4
    return TwoQubitState(m, allow_nonphysical=True)


def partial_transpose(rho):
    """Transpose on the second qubit."""
    m = rho.matrix if isinstance(rho, TwoQubitState) else np.asarray(rho, dtype=complex)
    pt = m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)
    return TwoQubitState(pt, allow_nonphysical=True)


def rotation_from_unitary(U):
    """Adjoint map SU(2) -> SO(3): R_ij = Tr[s_i U s_j U^dagger] / 2.

    Accepts a single 2x2 unitary or a stack of shape (n, 2, 2).
    """
    U = np.asarray(U, dtype=complex)
    P = np.array(PAULIS)
    return 0.5 * np.einsum("iab,...bc,jcd,...ad->...ij", P, U, P, U.conj()).real


def apply_local(rho, U_A, U_B):
    m = rho.matrix if isinstance(rho, TwoQubitState) else np.asarray(rho)
    U = np.kron(U_A, U_B)
    return TwoQubitState(U @ m @ U.conj().T, allow_nonphysical=not getattr(rho, "physical", True))


def partial_trace(m, keep, n_qubits):
    """Reduced density matrix on the qubits listed in ``keep`` (in increasing order)."""
    keep = sorted(keep)
    t = np.asarray(m).reshape((2,) * (2 * n_qubits))
    traced = [q for q in range(n_qubits) if q not in keep]
    # trace out from the highest index down so axis numbers stay valid
    for q in reversed(traced):
        n_left = t.ndim // 2
        t = np.trace(t, axis1=q, axis2=q + n_left)
    d = 2 ** len(keep)
    return t.reshape(d, d)


# --- state generators --------------------------------------------------------

def random_density(seed, rank, dim=4):
    """Random density matrix of the given rank, from a Gaussian purification."""
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must be in 1..{dim}, got {rank}")
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = G @ G.conj().T
    return m / np.trace(m).real


def random_state(seed, rank=4):
    if not 1 <= rank <= 4:
        raise ValueError(f"rank must be in 1..4, got {rank}")
    return TwoQubitState(random_density(seed, rank, 4))


def pure(vec):
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


_BELL = {
    "phi+": np.array([1, 0, 0, 1]) / np.sqrt(2),
    "phi-": np.array([1, 0, 0, -1]) / np.sqrt(2),
    "psi+": np.array([0, 1, 1, 0]) / np.sqrt(2),
    "psi-": np.array([0, 1, -1, 0]) / np.sqrt(2),
}


def bell_state(name="psi-"):
    return TwoQubitState(pure(_BELL[name]))


def singlet():
    return bell_state("psi-")


def maximally_mixed(n_qubits=2):
    d = 2 ** n_qubits
    m = np.eye(d, dtype=complex) / d
    return TwoQubitState(m) if n_qubits == 2 else m


def werner(p):
    """p |psi-><psi-| + (1 - p) 1/4."""
    if not -1 / 3 <= p <= 1:
        raise ValueError(f"Werner visibility {p} outside [-1/3, 1]")
    return TwoQubitState(p * pure(_BELL["psi-"]) + (1 - p) * np.eye(4) / 4)


def with_white_noise(rho, visibility):
    m = as_state(rho).matrix
    return TwoQubitState(visibility * m + (1 - visibility) * np.eye(4) / 4)


def schmidt_state(c):
    """c|00> + sqrt(1 - c^2)|11>."""
    return TwoQubitState(pure([c, 0, 0, np.sqrt(1 - c * c)]))


def product_state(rho_A, rho_B):
    return TwoQubitState(np.kron(rho_A, rho_B))


# Rank-2 Bell-diagonal stand-in for the photon source:
# T = diag(-q, -q, -1) with q^2 = 0.705 gives I1 = -0.705, I2 = 2.41, I3 = 1.994.
SOURCE_Q2 = 0.705


def reference_source():
    p = 0.5 * (1 + np.sqrt(SOURCE_Q2))
    return TwoQubitState(p * pure(_BELL["psi-"]) + (1 - p) * pure(_BELL["phi-"]))


def ghz(n_qubits=3):
    v = np.zeros(2 ** n_qubits)
    v[0] = v[-1] = 1
    return pure(v)


def basis_product(n_qubits=3):
    v = np.zeros(2 ** n_qubits)
    v[0] = 1
    return pure(v)


# --- three qubits ---------------------------------------------------------------

def three_qubit_bloch(rho8):
    m = np.asarray(rho8, dtype=complex)
    check_density(m, 8)
    P = np.array(PAULI4)
    # C[a, b, c] = Tr[rho s_a x s_b x s_c]
    C = np.einsum("aij,bkl,cmn,jlnikm->abc", P, P, P, m.reshape((2,) * 6)).real
    return ThreeQubitBloch(
        alpha=C[1:, 0, 0], beta=C[0, 1:, 0], gamma=C[0, 0, 1:],
        T_AB=C[1:, 1:, 0], T_AC=C[1:, 0, 1:], T_BC=C[0, 1:, 1:], W=C[1:, 1:, 1:],
    )


def three_qubit_compose(b):
    C = np.zeros((4, 4, 4))
    C[0, 0, 0] = 1.0
    C[1:, 0, 0] = b.alpha
    C[0, 1:, 0] = b.beta
    C[0, 0, 1:] = b.gamma
    C[1:, 1:, 0] = b.T_AB
    C[1:, 0, 1:] = b.T_AC
    C[0, 1:, 1:] = b.T_BC
    C[1:, 1:, 1:] = b.W
    P = np.array(PAULI4)
    return np.einsum("abc,aij,bkl,cmn->ikmjln", C, P, P, P).reshape(8, 8) / 8
