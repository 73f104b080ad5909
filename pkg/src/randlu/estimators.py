"""Unbiased estimators of moment powers from multinomial counts.

For counts N_i out of N shots, prod_i p_i^{a_i} is estimated without bias by
prod_i (N_i)_{a_i} / (N)_{sum a}, with (x)_a the falling factorial.  Powers of
E = sum_i X_i p_i follow by multinomial expansion.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import IncompleteInputError, InsufficientShotsError

BASES = ("ZZ", "XX", "YY")
# outcome order (++, +-, -+, --) and the product value of each
PRODUCT_VALUES = (1.0, -1.0, -1.0, 1.0)
SIDE_A = (1.0, 1.0, -1.0, -1.0)
SIDE_B = (1.0, -1.0, 1.0, -1.0)


@dataclass(frozen=True, eq=False)
class OutcomeTable:
    values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        c = np.array(self.counts, dtype=np.int64)
        if v.shape != c.shape or v.ndim != 1:
            raise ValueError("values and counts must be 1-d arrays of equal length")
        if len(np.unique(v)) != len(v):
            raise ValueError("outcome values must be distinct; use OutcomeTable.merged")
        if np.any(c < 0):
            raise ValueError("counts must be nonnegative")
        v.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "counts", c)

    @property
    def N(self):
        return int(self.counts.sum())

    @classmethod
    def merged(cls, values, counts):
        """Table with equal outcome values pooled."""
        v = np.asarray(values, dtype=float)
        c = np.asarray(counts, dtype=np.int64)
        uniq, inv = np.unique(v, return_inverse=True)
        return cls(uniq, np.bincount(inv, weights=c, minlength=len(uniq)).astype(np.int64))

    def frequencies(self):
        return self.counts / self.N


def falling(x, a):
    """Falling factorial (x)_a = x (x-1) ... (x-a+1), elementwise."""
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for j in range(a):
        out = out * (x - j)
    return out


def unbiased_p_monomial(table, exponents):
    """Unbiased estimate of prod_i p_i^{a_i}."""
    a = np.asarray(exponents, dtype=int)
    if a.shape != table.counts.shape or np.any(a < 0):
        raise ValueError("need one nonnegative exponent per outcome")
    degree = int(a.sum())
    N = table.N
    if N < max(degree, 1):
        raise InsufficientShotsError(N, max(degree, 1))
    num = 1.0
    for n_i, a_i in zip(table.counts, a):
        num *= float(falling(n_i, a_i))
    return num / float(falling(N, degree))


@lru_cache(maxsize=None)
def compositions(t, k):
    """Exponent vectors of length k summing to t, with their multinomial coefficients."""
    if k == 1:
        return (((t,), 1),)
    out = []
    for first in range(t, -1, -1):
        for rest, _ in compositions(t - first, k - 1):
            a = (first,) + rest
            coef = factorial(t)
            for ai in a:
                coef //= factorial(ai)
            out.append((a, coef))
    return tuple(out)


def e_power_batch(values, counts, t):
    """Unbiased E^t for many count vectors at once.

    ``counts`` has shape (M, k) against a shared set of k outcome values.
    """
    X = np.asarray(values, dtype=float)
    C = np.asarray(counts, dtype=float)
    if C.ndim == 1:
        C = C[None, :]
    N = C.sum(axis=1)
    if t == 0:
        return np.ones(len(C))
    if np.any(N < t):
        raise InsufficientShotsError(int(N.min()), t)
    total = np.zeros(len(C))
    for a, coef in compositions(t, len(X)):
        term = coef * np.prod(X ** np.array(a))
        if term == 0:
            continue
        num = np.ones(len(C))
        for i, ai in enumerate(a):
            if ai:
                num = num * falling(C[:, i], ai)
        total += term * num
    return total / falling(N, t)


def unbiased_E_power(table, t):
    if t not in (1, 2, 3, 4):
        raise ValueError("t must be 1, 2, 3 or 4")
    return float(e_power_batch(table.values, table.counts, t)[0])


# --- experiment records ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SettingRecord:
    """Counts (N++, N+-, N-+, N--) per joint basis for one unitary setting."""

    setting_id: int
    counts: dict

    def __post_init__(self):
        fixed = {}
        for basis, c in self.counts.items():
            if basis not in BASES:
                raise ValueError(f"unknown basis {basis!r}")
            arr = np.array(c, dtype=np.int64)
            if arr.shape != (4,) or np.any(arr < 0):
                raise ValueError(f"{basis} counts must be four nonnegative integers")
            arr.setflags(write=False)
            fixed[basis] = arr
        object.__setattr__(self, "counts", fixed)

    def table(self, basis, values=PRODUCT_VALUES):
        if basis not in self.counts:
            raise IncompleteInputError([f"setting {self.setting_id}: {basis}"])
        return OutcomeTable.merged(values, self.counts[basis])


@dataclass(frozen=True, eq=False)
class RunDataset:
    records: tuple
    metadata: dict = field(default_factory=dict)
    unitaries: np.ndarray = None  # (M, 2, 2, 2): U_A, U_B per setting, when logged

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        if len(self.records) < 1:
            raise ValueError("a run needs at least one setting")

    @property
    def M(self):
        return len(self.records)

    def count_matrix(self, basis):
        """(M, 4) array of counts for one basis."""
        missing = [r.setting_id for r in self.records if basis not in r.counts]
        if missing:
            raise IncompleteInputError([f"{basis} table for settings {missing[:5]}"])
        return np.array([r.counts[basis] for r in self.records], dtype=np.int64)


def _powers(values, counts, t):
    """Unbiased E^t per setting after pooling equal outcome values."""
    uniq, inv = np.unique(np.asarray(values, dtype=float), return_inverse=True)
    pooled = np.zeros((len(counts), len(uniq)))
    for j, g in enumerate(inv):
        pooled[:, g] += counts[:, j]
    return e_power_batch(uniq, pooled, t)


def setting_E_powers(data, basis="ZZ", values=PRODUCT_VALUES, ts=(1, 2, 3, 4)):
    C = data.count_matrix(basis)
    return {t: _powers(values, C, t) for t in ts}


def i2_terms(data):
    """Per-setting unbiased 9 E^2 on the ZZ table."""
    return 9 * _powers(PRODUCT_VALUES, data.count_matrix("ZZ"), 2)


def estimate_I2(data):
    return float(i2_terms(data).mean())


def estimate_I3(data):
    if data.M < 2:
        raise InsufficientShotsError(data.M, 2)
    C = data.count_matrix("ZZ")
    e2 = _powers(PRODUCT_VALUES, C, 2)
    e4 = _powers(PRODUCT_VALUES, C, 4)
    M = data.M
    # cross-setting products only: (sum e2)^2 - sum e2^2 over m != m'
    cross = (e2.sum() ** 2 - (e2 ** 2).sum()) / (M * (M - 1))
    i2_sq = 81 * cross
    return float((75 * e4.mean() - i2_sq) / 2)


def i1_terms(data):
    """Per-setting unbiased (E_xx + E_yy + E_zz)^3 from three independent tables."""
    pw = {b: setting_E_powers(data, b, ts=(1, 2, 3)) for b in BASES}
    out = sum(pw[b][3] for b in BASES)
    for i in BASES:
        for j in BASES:
            if i != j:
                out = out + 3 * pw[i][2] * pw[j][1]
    out = out + 6 * pw["XX"][1] * pw["YY"][1] * pw["ZZ"][1]
    return out


def estimate_I1(data):
    return float(i1_terms(data).mean())


def kl_values(k, l):
    """Outcome values of (k + l a)(k + l b) in the (++, +-, -+, --) order."""
    a = np.array(SIDE_A)
    b = np.array(SIDE_B)
    return tuple((k + l * a) * (k + l * b))


def estimate_extras(data, k=1.0, l=1.0):
    """Plug-in estimates of I4, I7, I12 and I5 + I8 from ZZ counts.

    I4 and I7 come from the local second moments, I12 and I5 + I8 from the
    third and fourth moments of (k 1 + l Z) x (k 1 + l Z).
    """
    C = data.count_matrix("ZZ")
    a2 = 3 * _powers(SIDE_A, C, 2).mean()
    b2 = 3 * _powers(SIDE_B, C, 2).mean()
    i2 = estimate_I2(data)
    i3 = estimate_I3(data)
    vals = kl_values(k, l)
    r3 = _powers(vals, C, 3).mean()
    r4 = _powers(vals, C, 4).mean()
    s2 = a2 + b2
    i12 = (3 * (r3 - k ** 6 - k ** 4 * l ** 2 * s2) / (k ** 2 * l ** 4) - i2) / 2
    rest = (r4 - k ** 8 - 2 * k ** 6 * l ** 2 * s2
            - 2 / 3 * k ** 4 * l ** 4 * (0.3 * (a2 ** 2 + b2 ** 2) + a2 * b2 + i2 + 4 * i12)
            - l ** 8 * (2 * i3 + i2 ** 2) / 75)
    i5_i8 = (15 * rest / (2 * k ** 2 * l ** 6) - s2 * i2) / 2
    return {"I4": float(a2), "I7": float(b2), "I12": float(i12), "I5+I8": float(i5_i8)}
