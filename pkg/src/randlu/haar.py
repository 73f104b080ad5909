"""Haar sampling on U(2) and randomness certification through frame potentials."""
from dataclasses import dataclass
from math import comb, erf, sqrt

import numpy as np

from . import kernels
from .errors import InsufficientSetError

UNITARY_TOL = 1e-12
NORM_TOL = 1e-12
DIM = 2

# one-sided bands labelled by their Gaussian-equivalent coverage
SIGMA_CONFIDENCE = {1: erf(1 / sqrt(2)), 2: erf(2 / sqrt(2))}


@dataclass(frozen=True, eq=False)
class UnitarySet:
    members: np.ndarray

    def __post_init__(self):
        m = np.array(self.members, dtype=complex)
        if m.ndim != 3 or m.shape[1:] != (2, 2) or len(m) < 1:
            raise ValueError(f"expected an (N, 2, 2) array of unitaries, got shape {m.shape}")
        dev = np.abs(m @ np.conj(np.swapaxes(m, 1, 2)) - np.eye(2)).max()
        if dev > UNITARY_TOL:
            raise ValueError(f"member deviates from unitarity by {dev:.2g}")
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    @property
    def N(self):
        return len(self.members)

    def __len__(self):
        return self.N

    def apply_to(self, psi=(1, 0)):
        """States U|psi> for every member."""
        return StateSet(self.members @ np.asarray(psi, dtype=complex))


@dataclass(frozen=True, eq=False)
class StateSet:
    members: np.ndarray

    def __post_init__(self):
        m = np.array(self.members, dtype=complex)
        if m.ndim != 2 or m.shape[1] != 2 or len(m) < 1:
            raise ValueError(f"expected an (N, 2) array of states, got shape {m.shape}")
        dev = np.abs(np.linalg.norm(m, axis=1) - 1).max()
        if dev > NORM_TOL:
            raise ValueError(f"member deviates from unit norm by {dev:.2g}")
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    @property
    def N(self):
        return len(self.members)

    def __len__(self):
        return self.N

    @classmethod
    def from_bloch(cls, vectors):
        """Pure states pointing along the given Stokes/Bloch directions."""
        v = np.asarray(vectors, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("Bloch vectors must have shape (N, 3)")
        norms = np.linalg.norm(v, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero-length Bloch vector has no direction")
        v = v / norms[:, None]
        theta = np.arccos(np.clip(v[:, 2], -1, 1))
        phi = np.arctan2(v[:, 1], v[:, 0])
        psi = np.stack([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], axis=1)
        return cls(psi)

    def bloch_vectors(self):
        a, b = self.members[:, 0], self.members[:, 1]
        ab = np.conj(a) * b
        return np.stack([2 * ab.real, 2 * ab.imag, np.abs(a) ** 2 - np.abs(b) ** 2], axis=1)


@dataclass(frozen=True)
class RandomnessVerdict:
    t: int
    kind: str
    N: int
    G_t: float
    expected: float
    band_1s: float
    band_2s: float
    pass_1s: bool
    pass_2s: bool

    @property
    def passed(self):
        return self.pass_2s


# --- sampling ------------------------------------------------------------------------

def haar_unitaries(rng, n, dim=DIM):
    """QR of a complex Ginibre matrix with the phases of R's diagonal divided out."""
    z = (rng.standard_normal((n, dim, dim)) + 1j * rng.standard_normal((n, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=1, axis2=2)
    return q * (d / np.abs(d))[:, None, :]


def sample_haar(seed, N):
    if N < 1:
        raise ValueError("N must be at least 1")
    return UnitarySet(haar_unitaries(np.random.default_rng(seed), N))


def _closure(generators):
    """Group generated by ``generators``, one representative per global phase."""

    def canonical(U):
        k = np.flatnonzero(np.abs(U.ravel()) > 1e-9)[0]
        ph = U.ravel()[k] / abs(U.ravel()[k])
        return U / ph

    def key(U):
        return tuple(np.round(canonical(U), 8).ravel())

    found = {key(np.eye(2)): np.eye(2, dtype=complex)}
    frontier = [np.eye(2, dtype=complex)]
    while frontier:
        nxt = []
        for U in frontier:
            for g in generators:
                V = canonical(g @ U)
                k = key(V)
                if k not in found:
                    found[k] = V
                    nxt.append(V)
        frontier = nxt
    return UnitarySet(np.array(list(found.values())))


def _axis_rotation(axis, angle):
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    X, Y, Z = (np.array(m, dtype=complex) for m in ([[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]))
    return np.cos(angle / 2) * np.eye(2) - 1j * np.sin(angle / 2) * (n[0] * X + n[1] * Y + n[2] * Z)


def clifford_group():
    """The 24 single-qubit Cliffords (an exact unitary 3-design)."""
    H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    S = np.diag([1, 1j])
    return _closure((H, S))


def icosahedral_group():
    """The 60 rotations of the icosahedron lifted to SU(2); an exact unitary 5-design."""
    phi = (1 + np.sqrt(5)) / 2
    return _closure((_axis_rotation([0, 1, phi], 2 * np.pi / 5), _axis_rotation([0, -1, phi], 2 * np.pi / 5)))


# --- frame potentials ------------------------------------------------------------------

def _vectors(x):
    if isinstance(x, UnitarySet):
        # |Tr(U V^dagger)| is the Frobenius overlap of the flattened matrices
        return x.members.reshape(1, x.N, 4)
    if isinstance(x, StateSet):
        return x.members.reshape(1, x.N, 2)
    raise TypeError(f"expected UnitarySet or StateSet, got {type(x).__name__}")


def frame_potential(u, t):
    """(1/N^2) sum_{U,V} |Tr U V^dagger|^{2t}, diagonal included."""
    if t < 1:
        raise ValueError("t must be at least 1")
    return float(kernels.frame_potentials(np.ascontiguousarray(_vectors(u)), t)[0])


def spherical_frame_potential(s, t):
    if not isinstance(s, StateSet):
        raise TypeError("spherical frame potential needs a StateSet")
    return frame_potential(s, t)


def frame_potential_batch(vecs, t):
    """Frame potentials for a stack of sets given as (B, N, D) overlap vectors."""
    return kernels.frame_potentials(np.ascontiguousarray(vecs, dtype=complex), t)


def haar_minimum(t):
    """Catalan number (2t)! / (t! (t+1)!)."""
    if t < 1:
        raise ValueError("t must be at least 1")
    return comb(2 * t, t) / (t + 1)


def spherical_haar_minimum(t):
    """t! (d-1)! / (t+d-1)! with d = 2."""
    if t < 1:
        raise ValueError("t must be at least 1")
    return 1.0 / (t + 1)


def _minimum(t, kind):
    if kind == "unitary":
        return haar_minimum(t)
    if kind == "spherical":
        return spherical_haar_minimum(t)
    raise ValueError(f"kind must be 'unitary' or 'spherical', got {kind!r}")


def excess_stats(N, t, kind="unitary"):
    """Mean and variance of G_t = F_t / F_t^Haar for N independent Haar draws."""
    if N < 1:
        raise ValueError("N must be at least 1")
    F_t = _minimum(t, kind)
    F_2t = _minimum(2 * t, kind)
    self_overlap = DIM ** (2 * t) if kind == "unitary" else 1.0
    mean = self_overlap / (N * F_t) + (N - 1) / N
    var = 2 * N * (N - 1) / N ** 4 * (F_2t / F_t ** 2 - 1)
    return mean, var


def cantelli_band(variance, confidence):
    """Smallest delta with Var / (delta^2 + Var) <= 1 - confidence."""
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    return float(np.sqrt(variance * confidence / (1 - confidence)))


def certify(x, t, confidence=None):
    """One-sided test of a finite set against Haar randomness.

    ``confidence`` overrides the 2-sigma band level; the 1-sigma band always
    uses its Gaussian-equivalent coverage.
    """
    kind = "unitary" if isinstance(x, UnitarySet) else "spherical"
    if x.N < 2:
        raise InsufficientSetError(f"need at least 2 members to certify, got {x.N}")
    G = frame_potential(x, t) / _minimum(t, kind)
    mean, var = excess_stats(x.N, t, kind)
    c2 = SIGMA_CONFIDENCE[2] if confidence is None else confidence
    band_1s = mean + cantelli_band(var, SIGMA_CONFIDENCE[1])
    band_2s = max(band_1s, mean + cantelli_band(var, c2))
    return RandomnessVerdict(
        t=t, kind=kind, N=x.N, G_t=G, expected=mean,
        band_1s=band_1s, band_2s=band_2s,
        pass_1s=bool(G <= band_1s), pass_2s=bool(G <= band_2s),
    )
