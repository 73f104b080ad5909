"""Confidence intervals for the invariants and certified CHSH / fidelity bounds.

The certificate is the minimum of the target quantity over every physical
correlation matrix whose (I1, I2, I3) lies inside the three intervals.  The
scan runs over a fixed lattice of squared singular values a >= b >= c in
[0, 1] (plus the sign of det T), which contains only physical points, so no
projection of complex cubic roots is ever needed.
"""
from dataclasses import dataclass, field
from math import erf, sqrt

import numpy as np
from scipy.stats import norm

from . import kernels
from .errors import InconsistentRegionError, NonPhysicalInvariantsError
from .invariants import InvariantSet, SingularTriple, chsh_value, fmax_lower_bound, singular_triple, teleport_fidelity

METHODS = ("gauss", "hoeffding")
QUANTITIES = ("CHSH", "Fmax", "fmax")
DEFAULT_GRID = 401
SCAN_TOL = 1e-9


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    gamma: float
    method: str = "gauss"

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"empty interval [{self.lower}, {self.upper}]")
        if not 0 < self.gamma < 1:
            raise ValueError(f"confidence {self.gamma} outside (0, 1)")
        object.__setattr__(self, "method", self.method.lower())
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")

    @classmethod
    def around(cls, center, half_width, gamma, method="gauss"):
        return cls(center - half_width, center + half_width, gamma, method)

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self):
        return 0.5 * (self.upper - self.lower)

    def as_dict(self):
        return {"lower": self.lower, "upper": self.upper, "gamma": self.gamma, "method": self.method}


@dataclass(frozen=True)
class CertifiedBound:
    quantity: str
    value: float
    combined_confidence: float
    inputs: tuple
    grid_resolution: int = DEFAULT_GRID
    i3_mode: str = "measured"
    argmin: tuple = field(default=(), compare=False)
    n_feasible: int = 0
    det_sign: int = None

    def as_dict(self):
        return {
            "quantity": self.quantity,
            "value": self.value,
            "combined_confidence": self.combined_confidence,
            "grid_resolution": self.grid_resolution,
            "i3_mode": self.i3_mode,
            "det_sign_constraint": self.det_sign,
            "n_feasible": self.n_feasible,
            "argmin_lam_sq": list(self.argmin[:3]) if self.argmin else [],
            "argmin_det_sign": int(self.argmin[3]) if self.argmin else 0,
            "inputs": {name: ci.as_dict() for name, ci in zip(("I1", "I2", "I3"), self.inputs)},
        }


def gamma_from_sigma(k):
    """Two-sided Gaussian coverage of +-k sigma."""
    return erf(k / sqrt(2))


def sigma_from_gamma(gamma):
    return float(norm.ppf((1 + gamma) / 2))


def hoeffding_delta(range_width, n, gamma):
    """Half-width (b - a) / sqrt(2n) * sqrt(ln(2 / (1 - gamma)))."""
    if range_width < 0:
        raise ValueError("range width must be nonnegative")
    if n < 1:
        raise ValueError("need at least one sample")
    if not 0 < gamma < 1:
        raise ValueError(f"confidence {gamma} outside (0, 1)")
    return range_width / np.sqrt(2 * n) * np.sqrt(np.log(2 / (1 - gamma)))


def hoeffding_interval(samples, range_width, gamma):
    x = np.asarray(samples, dtype=float)
    d = hoeffding_delta(range_width, len(x), gamma)
    return ConfidenceInterval.around(float(x.mean()), d, gamma, "hoeffding")


def gaussian_interval(run_estimates, sigma_multiplier=3.0, standard_error=True, gamma=None):
    """mean +- k * spread of the per-run estimates.

    With ``standard_error`` (default) the spread is the standard error of the
    mean, s / sqrt(n_runs); otherwise the raw sample standard deviation.
    """
    x = np.asarray(run_estimates, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two runs for a Gaussian interval")
    if sigma_multiplier < 0:
        raise ValueError("sigma multiplier must be nonnegative")
    s = x.std(ddof=1)
    if standard_error:
        s /= np.sqrt(len(x))
    if gamma is None:
        # keep gamma inside (0, 1); k = 0 gives a degenerate interval
        gamma = min(max(gamma_from_sigma(sigma_multiplier), 1e-300), np.nextafter(1.0, 0.0))
    return ConfidenceInterval.around(float(x.mean()), sigma_multiplier * s, gamma, "gauss")


def combine_confidence(n, gamma):
    if n < 1:
        raise ValueError("n must be at least 1")
    return max(0.0, 1 - n * (1 - gamma))


def _max_quartic_sum(s):
    """Largest sum of lam^4 with sum lam^2 = s and each lam^2 in [0, 1]."""
    if s <= 1:
        return s * s
    if s <= 2:
        return 1 + (s - 1) ** 2
    return 2 + (s - 2) ** 2


def i3_range_from_i2(i2):
    """Physical range of Tr(TT^T TT^T) implied by an interval on Tr(TT^T)."""
    lo, hi = max(i2.lower, 0.0), min(i2.upper, 3.0)
    if lo > hi:
        raise InconsistentRegionError(f"I2 interval [{i2.lower}, {i2.upper}] misses [0, 3]")
    return ConfidenceInterval(lo * lo / 3, _max_quartic_sum(hi), i2.gamma, i2.method)


def e3_range(K):
    """Attainable range of the per-setting unbiased (E_xx + E_yy + E_zz)^3 at K shots per basis."""
    from .estimators import PRODUCT_VALUES, e_power_batch

    if K < 3:
        raise ValueError("need at least 3 shots per basis")
    if K <= 40:
        n = np.arange(K + 1)
    else:
        n = np.unique(np.concatenate([np.arange(9), K - np.arange(9), np.linspace(0, K, 61).round()]))
    n = n.astype(int)
    # n counts the +1 outcome, K - n the -1 outcome
    c = np.zeros((len(n), 4))
    c[:, 0] = n
    c[:, 1] = K - n
    e1, e2, e3 = (e_power_batch(PRODUCT_VALUES, c, t) for t in (1, 2, 3))
    x1, y1, z1 = np.ix_(e1, e1, e1)
    x2, y2, z2 = np.ix_(e2, e2, e2)
    x3, y3, z3 = np.ix_(e3, e3, e3)
    total = (x3 + y3 + z3 + 3 * (x2 * (y1 + z1) + y2 * (x1 + z1) + z2 * (x1 + y1))
             + 6 * x1 * y1 * z1)
    return float(total.min()), float(total.max())


# --- region scan -----------------------------------------------------------------------

def _vertex_candidates(box):
    """Physical corners of the box, used only when the lattice misses a thin box."""
    out = []
    for i1 in box[0:2]:
        for i2 in box[2:4]:
            for i3 in box[4:6]:
                try:
                    out.append(singular_triple(InvariantSet(I1=i1, I2=i2, I3=i3)))
                except NonPhysicalInvariantsError:
                    pass
    return out


def _evaluate(quantity, s):
    return chsh_value(s) if quantity == "CHSH" else fmax_lower_bound(s)


def scan_certify(i1, i2, i3, quantity="CHSH", grid_resolution=DEFAULT_GRID, i3_mode="measured",
                 det_sign=None, tol=SCAN_TOL):
    """Sound lower bound on CHSH, F_max^U or f_max over the compatible region.

    ``i3_mode="from_i2"`` replaces the I3 interval by the physical range
    implied by the I2 interval.  ``det_sign`` (-1 or +1) restricts the scan to
    one sign of det T, for use when that sign is known from elsewhere.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    if i3_mode not in ("measured", "from_i2"):
        raise ValueError("i3_mode must be 'measured' or 'from_i2'")
    if grid_resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    gammas = {i1.gamma, i2.gamma, i3.gamma}
    if len(gammas) != 1:
        raise ValueError(f"intervals carry different confidences {sorted(gammas)}")
    gamma = gammas.pop()
    i3_used = i3_range_from_i2(i2) if i3_mode == "from_i2" else i3
    lo1, hi1 = i1.lower, i1.upper
    if det_sign is not None:
        if det_sign not in (-1, 1):
            raise ValueError("det_sign must be -1, +1 or None")
        lo1, hi1 = (lo1, min(hi1, 0.0)) if det_sign < 0 else (max(lo1, 0.0), hi1)
        if lo1 > hi1:
            raise InconsistentRegionError(f"I1 interval excludes det T of sign {det_sign:+d}")
    box = np.array([lo1, hi1, i2.lower, i2.upper, i3_used.lower, i3_used.upper])
    code = kernels.CHSH if quantity == "CHSH" else kernels.FMAX
    best, a, b, c, sign, count = kernels.lattice_min(int(grid_resolution), box, code, tol)
    argmin = (a, b, c, int(sign))
    if count == 0:
        cands = _vertex_candidates(box)
        if not cands:
            raise InconsistentRegionError(
                "no physical correlation matrix is compatible with "
                f"I1 in [{i1.lower:.4g}, {i1.upper:.4g}], I2 in [{i2.lower:.4g}, {i2.upper:.4g}], "
                f"I3 in [{i3_used.lower:.4g}, {i3_used.upper:.4g}]"
            )
        vals = [_evaluate(quantity, s) for s in cands]
        k = int(np.argmin(vals))
        best = vals[k]
        argmin = (*cands[k].lam_sq, cands[k].det_sign or 1)
        count = len(cands)
    value = float(best)
    if quantity == "fmax":
        value = teleport_fidelity(value)
    return CertifiedBound(
        quantity=quantity, value=value, combined_confidence=combine_confidence(3, gamma),
        inputs=(i1, i2, i3), grid_resolution=int(grid_resolution), i3_mode=i3_mode,
        argmin=argmin, n_feasible=int(count), det_sign=det_sign,
    )


def triple_quantity(quantity, lam_sq, det_sign):
    """Quantity at an explicit singular triple; handy for soundness checks."""
    s = SingularTriple(tuple(lam_sq), det_sign)
    v = _evaluate("CHSH" if quantity == "CHSH" else "Fmax", s)
    return teleport_fidelity(v) if quantity == "fmax" else v
