"""Randomized-measurement moments: closed forms, Monte-Carlo and exact quadrature.

The moment of order t of an observable M is the Haar average over local
unitaries of Tr[(U_A x U_B) rho (U_A x U_B)^dagger M]^t.
"""
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import kernels
from .errors import IncompleteInputError, UnsupportedMomentError
from .haar import haar_unitaries
from .invariants import InvariantSet, compute_all
from .states import PAULI4, BlochTwoQubit, ThreeQubitBloch, TwoQubitState, bloch_decompose, kron

_LABEL = {"I": PAULI4[0], "X": PAULI4[1], "Y": PAULI4[2], "Z": PAULI4[3]}

KINDS = ("LocalZ_A", "LocalZ_B", "ZZ", "KL", "Mdet", "MHodge", "MHodgePrime",
         "PsiMinusProj", "NuZProj", "NuXProj", "MKempe")

# difference R4(MHodge) - R4(MHodge') equals -4/3 * I14
HODGE_FACTOR = -0.75

MC_BLOCK = 1 << 15


@dataclass(frozen=True, eq=False)
class ObservableSpec:
    kind: str
    pauli_terms: tuple
    params: tuple = ()
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown observable kind {self.kind!r}")
        m = sum(c * kron(*(_LABEL[ch] for ch in lab)) for c, lab in self.pauli_terms)
        m = np.asarray(m, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n_qubits(self):
        return len(self.pauli_terms[0][1])

    @property
    def norm(self):
        return float(np.abs(np.linalg.eigvalsh(self.matrix)).max())

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "KL":
            d.update(zip(("k_A", "l_A", "k_B", "l_B"), self.params))
        return d

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "KL":
            return kl(d["k_A"], d["l_A"], d["k_B"], d["l_B"])
        if kind not in _CATALOG:
            raise ValueError(f"unknown observable kind {kind!r}")
        return _CATALOG[kind]()


@dataclass(frozen=True)
class MomentValue:
    value: float
    t: int
    observable: ObservableSpec


def pauli_decompose(matrix, n_qubits=2):
    """Nonzero Pauli coefficients c_P = Tr[M P] / 2^n."""
    from itertools import product

    terms = []
    for lab in product("IXYZ", repeat=n_qubits):
        lab = "".join(lab)
        c = np.trace(matrix @ kron(*(_LABEL[ch] for ch in lab))) / 2 ** n_qubits
        if abs(c) > 1e-14:
            terms.append((float(c.real), lab))
    return tuple(terms)


# --- catalog -------------------------------------------------------------------------

def local_z_a():
    return ObservableSpec("LocalZ_A", ((1.0, "ZI"),))


def local_z_b():
    return ObservableSpec("LocalZ_B", ((1.0, "IZ"),))


def zz():
    return ObservableSpec("ZZ", ((1.0, "ZZ"),))


def kl(k_A, l_A, k_B, l_B):
    """(k_A 1 + l_A Z) x (k_B 1 + l_B Z)."""
    terms = ((k_A * k_B, "II"), (k_A * l_B, "IZ"), (l_A * k_B, "ZI"), (l_A * l_B, "ZZ"))
    terms = tuple((float(c), lab) for c, lab in terms if c != 0) or ((0.0, "II"),)
    return ObservableSpec("KL", terms, params=(float(k_A), float(l_A), float(k_B), float(l_B)))


def mdet():
    return ObservableSpec("Mdet", ((1.0, "XX"), (1.0, "YY"), (1.0, "ZZ")))


def mhodge():
    return ObservableSpec("MHodge", ((1.0, "IX"), (1.0, "XI"), (1.0, "YZ"), (1.0, "ZY")))


def mhodge_prime():
    return ObservableSpec("MHodgePrime", ((1.0, "IX"), (1.0, "XI"), (1.0, "YZ"), (-1.0, "ZY")))


def _projector_spec(kind, vec):
    v = np.asarray(vec, dtype=complex)
    return ObservableSpec(kind, pauli_decompose(np.outer(v, v.conj())))


def psi_minus_proj():
    return _projector_spec("PsiMinusProj", np.array([0, 1, -1, 0]) / np.sqrt(2))


NU_Z_A = np.cos(np.pi / 8)


def nu_z_proj():
    return _projector_spec("NuZProj", [NU_Z_A, 0, 0, np.sqrt(1 - NU_Z_A ** 2)])


def nu_x_proj():
    e = np.exp(1j * np.pi / 4)
    return _projector_spec("NuXProj", np.array([1, e, e, 1]) / 2)


def m_kempe():
    return ObservableSpec("MKempe", ((1.0, "ZZI"), (1.0, "ZIZ"), (1.0, "IZZ")))


_CATALOG = {
    "LocalZ_A": local_z_a, "LocalZ_B": local_z_b, "ZZ": zz, "Mdet": mdet,
    "MHodge": mhodge, "MHodgePrime": mhodge_prime, "PsiMinusProj": psi_minus_proj,
    "NuZProj": nu_z_proj, "NuXProj": nu_x_proj, "MKempe": m_kempe,
}


# --- closed forms ------------------------------------------------------------------------

def _zz_moment(inv, T, t):
    if t % 2:
        return 0.0
    if t == 2:
        return inv.I2 / 9
    if t == 4:
        return (2 * inv.I3 + inv.I2 ** 2) / 75
    if t == 6:
        TT = T @ T.T
        tr3 = np.trace(TT @ TT @ TT)
        return (8 * tr3 + 6 * inv.I2 * inv.I3 + inv.I2 ** 3) / 735
    raise UnsupportedMomentError(f"ZZ moment of order {t} is not available")


def _kl_moment(inv, T, k, l, t):
    A2, B2, I2, I3, I12 = inv.I4, inv.I7, inv.I2, inv.I3, inv.I12
    I5, I8, I13, I6, I9 = inv.I5, inv.I8, inv.I13, inv.I6, inv.I9
    S2 = A2 + B2
    S4 = A2 ** 2 + B2 ** 2
    if t == 1:
        return k ** 2
    if t == 2:
        return k ** 4 + k ** 2 * l ** 2 * S2 / 3 + l ** 4 * I2 / 9
    if t == 3:
        return k ** 6 + k ** 4 * l ** 2 * S2 + k ** 2 * l ** 4 * (I2 + 2 * I12) / 3
    if t == 4:
        return (k ** 8 + 2 * k ** 6 * l ** 2 * S2
                + 2 / 3 * k ** 4 * l ** 4 * (0.3 * S4 + A2 * B2 + I2 + 4 * I12)
                + 2 / 15 * k ** 2 * l ** 6 * (S2 * I2 + 2 * (I5 + I8))
                + l ** 8 * (2 * I3 + I2 ** 2) / 75)
    if t == 5:
        return (k ** 10 + 10 / 3 * k ** 8 * l ** 2 * S2
                + 10 / 3 * k ** 6 * l ** 4 * (0.3 * S4 + A2 * B2 + I2 / 3 + 2 * I12)
                + 2 / 3 * k ** 4 * l ** 6 * (S2 * (I2 + 2 * I12) + 2 * (I5 + I8))
                + 1 / 15 * k ** 2 * l ** 8 * (2 * I3 + I2 * (I2 + 4 * I12) + 8 * I13))
    if t == 6:
        return (k ** 12 + 5 * k ** 10 * l ** 2 * S2
                + 1 / 3 * k ** 8 * l ** 4 * (9 * S4 + 30 * A2 * B2 + 5 * I2 + 40 * I12)
                + k ** 6 * l ** 6 * (S2 * (A2 * B2 + 2 * I2 + 8 * I12) + 4 * (I5 + I8)
                                     + (A2 ** 3 + B2 ** 3) / 7)
                + 1 / 5 * k ** 4 * l ** 8 * (2 * I3 + I2 * (I2 + 8 * I12 + 5 / 7 * S4 + 2 * A2 * B2))
                + 1 / 5 * k ** 4 * l ** 8 * (16 * I13 + (20 / 7 * A2 + 4 * B2) * I5
                                             + (20 / 7 * B2 + 4 * A2) * I8 + 8 * I12 ** 2)
                + 1 / 35 * k ** 2 * l ** 10 * (S2 * (2 * I3 + I2 ** 2) + 4 * (I5 + I8) * I2)
                + 8 / 35 * k ** 2 * l ** 10 * (I6 + I9)
                + l ** 12 * _zz_moment(inv, T, 6))
    raise UnsupportedMomentError(f"KL moment of order {t} is not available")


def _mdet_moment(inv, t):
    table = {1: 0.0, 2: inv.I2 / 3, 3: inv.I1, 4: (2 * inv.I2 ** 2 - inv.I3) / 5}
    if t not in table:
        raise UnsupportedMomentError(f"Mdet moment of order {t} is not available")
    return table[t]


def _psi_minus_moment(inv, t):
    # Mdet = 1 - 4 P, so <P> = (1 - <Mdet>) / 4
    if t not in (1, 2, 3, 4):
        raise UnsupportedMomentError(f"singlet-projector moment of order {t} is not available")
    total = sum(comb(t, j) * (-1) ** j * (1.0 if j == 0 else _mdet_moment(inv, j)) for j in range(t + 1))
    return total / 4 ** t


def _hodge_common(inv):
    A2, B2 = inv.I4, inv.I7
    return ((A2 ** 2 + B2 ** 2) / 5 + 2 / 3 * A2 * B2 + 8 / 15 * (A2 + B2) * inv.I2
            + 11 / 75 * inv.I2 ** 2 - inv.I3 / 25 - 4 / 15 * (inv.I5 + inv.I8))


def _nu_moment(inv):
    A2, B2 = inv.I4, inv.I7
    return (300 * (1 + A2 + B2) + 400 * inv.I2 - 600 * inv.I1 + 400 * inv.I12
            + 15 * (A2 ** 2 + B2 ** 2) + 50 * A2 * B2 + 60 * (A2 + B2) * inv.I2
            + 20 * (inv.I5 + inv.I8) - 23 * inv.I3 + 51 * inv.I2 ** 2 - 50 * inv.I14) / (75 * 2 ** 10)


def _local_z_moment(v, t):
    # (v . n)^t over the unit sphere
    if t % 2:
        return 0.0
    return float(v @ v) ** (t // 2) / (t + 1)


def analytic_moment(b, obs, t):
    """Closed-form moment for the supported (observable, t) pairs."""
    if obs.kind == "MKempe":
        if not isinstance(b, ThreeQubitBloch):
            raise TypeError("MKempe needs three-qubit Bloch data")
        if t != 3:
            raise UnsupportedMomentError(f"MKempe moment of order {t} is not available")
        return MomentValue(kempe_moment(b), t, obs)
    if isinstance(b, ThreeQubitBloch):
        raise TypeError(f"{obs.kind} is a two-qubit observable")
    if not isinstance(b, BlochTwoQubit):
        b = bloch_decompose(b)
    if t < 1:
        raise UnsupportedMomentError("moment order must be positive")
    inv = compute_all(b)
    kind = obs.kind
    if kind == "LocalZ_A" and t <= 6:
        val = _local_z_moment(b.alpha, t)
    elif kind == "LocalZ_B" and t <= 6:
        val = _local_z_moment(b.beta, t)
    elif kind == "ZZ":
        val = _zz_moment(inv, b.T, t)
    elif kind == "KL":
        k_A, l_A, k_B, l_B = obs.params
        if (k_A, l_A) != (k_B, l_B):
            raise UnsupportedMomentError("KL closed forms need k_A = k_B and l_A = l_B")
        val = _kl_moment(inv, b.T, k_A, l_A, t)
    elif kind == "Mdet":
        val = _mdet_moment(inv, t)
    elif kind == "PsiMinusProj":
        val = _psi_minus_moment(inv, t)
    elif kind in ("MHodge", "MHodgePrime") and t == 4:
        sign = -1 if kind == "MHodge" else 1
        val = _hodge_common(inv) + sign * 2 / 3 * inv.I14
    elif kind in ("NuZProj", "NuXProj") and t == 4:
        val = _nu_moment(inv)
    else:
        raise UnsupportedMomentError(f"no closed form for {kind} at t={t}")
    return MomentValue(float(val), t, obs)


def hodge_extract(b):
    """I14 from the fourth moments of the two Hodge observables."""
    diff = analytic_moment(b, mhodge(), 4).value - analytic_moment(b, mhodge_prime(), 4).value
    return HODGE_FACTOR * diff


def kempe_moment(b):
    return 2 / 9 * float(np.trace(b.T_AB @ b.T_BC @ b.T_AC.T))


# --- numerical oracles --------------------------------------------------------------------

def _density(rho):
    if isinstance(rho, TwoQubitState):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def _joint(locals_):
    out = locals_[0]
    for u in locals_[1:]:
        n, a, _ = out.shape
        b = u.shape[1]
        out = np.einsum("sij,skl->sikjl", out, u).reshape(n, a * b, a * b)
    return out


def mc_expectations(rho, obs, samples, seed):
    """Tr[rho_U M] for ``samples`` independent Haar draws, generated in seeded blocks."""
    m = _density(rho)
    n_q = obs.n_qubits
    M = np.ascontiguousarray(obs.matrix)
    out = np.empty(samples)
    n_blocks = -(-samples // MC_BLOCK)
    for i, ss in enumerate(np.random.SeedSequence(seed).spawn(n_blocks)):
        rng = np.random.default_rng(ss)
        lo, hi = i * MC_BLOCK, min(samples, (i + 1) * MC_BLOCK)
        U = _joint([haar_unitaries(rng, hi - lo) for _ in range(n_q)])
        out[lo:hi] = kernels.conjugated_expectations(np.ascontiguousarray(U), m, M)
    return out


def mc_moments(rho, obs, ts, samples=100_000, seed=0):
    """{t: (estimate, std_error)} from one shared set of Haar draws."""
    if samples < 1000:
        raise ValueError("Monte-Carlo moments need at least 1000 samples")
    e = mc_expectations(rho, obs, samples, seed)
    res = {}
    for t in ts:
        x = e ** t
        res[t] = (float(x.mean()), float(x.std(ddof=1) / np.sqrt(samples)))
    return res


def mc_moment(rho, obs, t, samples=100_000, seed=0):
    return mc_moments(rho, obs, (t,), samples, seed)[t]


def su2_quadrature(t):
    """Nodes and weights integrating every SU(2) polynomial of degree <= t exactly.

    Euler angles U = Rz(phi) Ry(theta) Rz(psi): uniform grids in phi and psi,
    Gauss-Legendre in cos(theta).
    """
    n = t + 1
    x, w = np.polynomial.legendre.leggauss(t // 2 + 2)
    ang = 2 * np.pi * np.arange(n) / n
    phi, psi, c = np.meshgrid(ang, ang, np.arange(len(x)), indexing="ij")
    phi, psi, c = phi.ravel(), psi.ravel(), c.ravel()
    half = np.arccos(x[c]) / 2
    cos, sin = np.cos(half), np.sin(half)
    ep, es = np.exp(-0.5j * (phi + psi)), np.exp(-0.5j * (phi - psi))
    U = np.empty((len(phi), 2, 2), dtype=complex)
    U[:, 0, 0] = ep * cos
    U[:, 0, 1] = -es * sin
    U[:, 1, 0] = np.conj(es) * sin
    U[:, 1, 1] = np.conj(ep) * cos
    return U, w[c] / (2 * n * n)


def quadrature_moment(rho, obs, t):
    """Exact Haar moment by product quadrature (independent of every closed form)."""
    m = _density(rho)
    U, w = su2_quadrature(t)
    n_q = obs.n_qubits
    idx = np.stack(np.meshgrid(*[np.arange(len(w))] * n_q, indexing="ij"), -1).reshape(-1, n_q)
    weights = np.prod(w[idx], axis=1)
    total = 0.0
    for lo in range(0, len(idx), MC_BLOCK):
        sel = idx[lo:lo + MC_BLOCK]
        J = _joint([U[sel[:, q]] for q in range(n_q)])
        e = kernels.conjugated_expectations_np(J, m, obs.matrix)
        total += float(weights[lo:lo + MC_BLOCK] @ e ** t)
    return total


# --- inversion -----------------------------------------------------------------------------

def _lookup(moments, kind, t):
    v = moments.get((kind, t))
    return v.value if isinstance(v, MomentValue) else v


def normalize_moments(moments):
    """Accept a mapping keyed by (kind, t) or an iterable of MomentValue."""
    if isinstance(moments, dict):
        return dict(moments)
    return {(m.observable.kind, m.t): m for m in moments}


def invert_moments(moments, want=("I1", "I2", "I3")):
    """Invariants recoverable from the given moments.

    Returns a dict holding every invariant that can be formed; names listed in
    ``want`` but not formable raise :class:`IncompleteInputError`.
    """
    mom = normalize_moments(moments)
    g = lambda kind, t: _lookup(mom, kind, t)  # noqa: E731
    out = {}
    needs = {}
    r2 = g("ZZ", 2)
    if r2 is not None:
        out["I2"] = 9 * r2
    else:
        needs["I2"] = ["ZZ t=2"]
    r4 = g("ZZ", 4)
    if r2 is not None and r4 is not None:
        out["I3"] = (75 * r4 - out["I2"] ** 2) / 2
    else:
        needs["I3"] = [n for n, v in (("ZZ t=2", r2), ("ZZ t=4", r4)) if v is None]
    if g("Mdet", 3) is not None:
        out["I1"] = g("Mdet", 3)
    elif all(g("PsiMinusProj", j) is not None for j in (1, 2, 3)):
        # <Mdet>^3 = sum_j C(3, j) (-4)^j <P>^j
        out["I1"] = sum(comb(3, j) * (-4) ** j * (1.0 if j == 0 else g("PsiMinusProj", j))
                        for j in range(4))
    else:
        needs["I1"] = ["Mdet t=3 (or PsiMinusProj t=1..3)"]
    for name, kind in (("I4", "LocalZ_A"), ("I7", "LocalZ_B")):
        if g(kind, 2) is not None:
            out[name] = 3 * g(kind, 2)
        else:
            needs[name] = [f"{kind} t=2"]
    missing = [f"{k}: {', '.join(needs[k])}" for k in want if k in needs]
    if missing:
        raise IncompleteInputError(missing)
    return out


def partial_invariants(values):
    """InvariantSet with absent entries as NaN."""
    return InvariantSet(**{k: values.get(k, float("nan")) for k in InvariantSet.__dataclass_fields__})
