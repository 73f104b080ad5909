"""From count datasets (or injected intervals) to a certification report."""
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .bounds import (
    DEFAULT_GRID,
    CertifiedBound,
    ConfidenceInterval,
    combine_confidence,
    e3_range,
    gaussian_interval,
    hoeffding_delta,
    hoeffding_interval,
    i3_range_from_i2,
    scan_certify,
    sigma_from_gamma,
)
from .errors import RandLUError
from .estimators import estimate_extras, estimate_I1, estimate_I2, estimate_I3, i1_terms, i2_terms
from .haar import UnitarySet, certify
from .invariants import InvariantSet, negativity_from_invariants, teleport_fidelity

# reference 3-sigma intervals (center, half-width)
REFERENCE_GAUSS_3SIGMA = {"I1": (-0.62, 0.15), "I2": (2.41, 0.15), "I3": (2.21, 0.21)}
REFERENCE_HOEFFDING_3SIGMA = {"I1": (-0.62, 1.09), "I2": (2.41, 0.24)}
GAMMA_3SIGMA = 0.9973


@dataclass(frozen=True)
class CertificationReport:
    intervals: dict
    bounds: dict
    randomness: tuple = ()
    negativity: dict = None
    estimates: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        F, f = self.bounds.get("Fmax"), self.bounds.get("fmax")
        if F is not None and f is not None and f.value != teleport_fidelity(F.value):
            raise ValueError("fmax must equal (2 Fmax + 1) / 3")

    def as_dict(self):
        return {
            "intervals": {k: ci.as_dict() for k, ci in self.intervals.items()},
            "bounds": {k: b.as_dict() for k, b in self.bounds.items()},
            "randomness": [dict(v) for v in self.randomness],
            "negativity": self.negativity,
            "estimates": self.estimates,
            "provenance": self.provenance,
        }


def _with_context(exc, where):
    exc.args = (f"{where}: {exc.args[0] if exc.args else exc}",) + tuple(exc.args[1:])
    return exc


def _bounds(i1, i2, i3, grid, i3_mode, det_sign=None):
    chsh = scan_certify(i1, i2, i3, "CHSH", grid, i3_mode, det_sign)
    F = scan_certify(i1, i2, i3, "Fmax", grid, i3_mode, det_sign)
    f = CertifiedBound("fmax", teleport_fidelity(F.value), F.combined_confidence, F.inputs,
                       F.grid_resolution, F.i3_mode, F.argmin, F.n_feasible, F.det_sign)
    return {"CHSH": chsh, "Fmax": F, "fmax": f}


def _negativity(datasets, per_run):
    values = []
    for data, (i1, i2, i3) in zip(datasets, per_run):
        try:
            ex = estimate_extras(data)
            inv = InvariantSet(I1=i1, I2=i2, I3=i3, I4=ex["I4"], I7=ex["I7"], I12=ex["I12"],
                               I5=ex["I5+I8"] / 2, I8=ex["I5+I8"] / 2, I14=0.0)
            values.append(negativity_from_invariants(inv, clip=True))
        except RandLUError:
            continue
    if not values:
        return None
    v = np.array(values)
    se = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else float("nan")
    return {"mean": float(v.mean()), "std_error": se, "runs_used": len(v), "assumes_I14_zero": True}


def _randomness(datasets, ts=(2, 4)):
    data = next((d for d in datasets if d.unitaries is not None), None)
    if data is None or len(data.unitaries) < 2:
        return ()
    out = []
    for p, party in enumerate("AB"):
        u = UnitarySet(data.unitaries[:, p])
        for x in (u, u.apply_to()):
            for t in ts:
                out.append({"party": party, **asdict(certify(x, t))})
    return tuple(out)


def analyze(datasets, gamma=GAMMA_3SIGMA, method="gauss", grid=DEFAULT_GRID, i3_mode=None,
            i1_range_width=None):
    """Certify CHSH and teleportation bounds from one or more runs of count data."""
    datasets = list(datasets)
    method = method.lower()
    if method not in ("gauss", "hoeffding"):
        raise ValueError("method must be gauss or hoeffding")
    if not datasets:
        raise ValueError("no datasets given")
    per_run = []
    for r, data in enumerate(datasets):
        try:
            per_run.append((estimate_I1(data), estimate_I2(data), estimate_I3(data)))
        except RandLUError as e:
            raise _with_context(e, f"run {data.metadata.get('run_id', r)}")
    est = np.array(per_run)
    if method == "gauss":
        if len(datasets) < 2:
            raise ValueError("the Gaussian method needs at least two runs")
        k = sigma_from_gamma(gamma)
        i1, i2, i3 = (gaussian_interval(est[:, j], k, gamma=gamma) for j in range(3))
        i3_mode = i3_mode or "measured"
    else:
        K = min(int(d.count_matrix("ZZ").sum(axis=1).min()) for d in datasets)
        t2 = np.concatenate([i2_terms(d) for d in datasets])
        t1 = np.concatenate([i1_terms(d) for d in datasets])
        # 9 E~^2 lies in [-9 / (K - 1), 9]
        i2 = hoeffding_interval(t2, 9 * K / (K - 1), gamma)
        if i1_range_width is None:
            lo, hi = e3_range(K)
            i1_range_width = hi - lo
        i1 = hoeffding_interval(t1, i1_range_width, gamma)
        i3 = i3_range_from_i2(i2)
        i3_mode = i3_mode or "from_i2"
    bounds = _bounds(i1, i2, i3, grid, i3_mode)
    meta0 = datasets[0].metadata
    return CertificationReport(
        intervals={"I1": i1, "I2": i2, "I3": i3},
        bounds=bounds,
        randomness=_randomness(datasets),
        negativity=_negativity(datasets, per_run),
        estimates={
            "I1": est[:, 0].tolist(), "I2": est[:, 1].tolist(), "I3": est[:, 2].tolist(),
        },
        provenance={
            "mode": "analyze", "method": method, "gamma": gamma, "grid": grid, "i3_mode": i3_mode,
            "runs": len(datasets), "M": datasets[0].M, "K": meta0.get("K"), "seed": meta0.get("seed"),
            "state": meta0.get("state"), "version": __version__,
        },
    )


def reference_intervals(gamma=GAMMA_3SIGMA, method="gauss"):
    """Reference intervals, rescaled from 3 sigma to ``gamma`` by each method's own law."""
    method = method.lower()
    if method == "gauss":
        scale = sigma_from_gamma(gamma) / 3
        out = {k: ConfidenceInterval.around(c, h * scale, gamma, "gauss")
               for k, (c, h) in REFERENCE_GAUSS_3SIGMA.items()}
        return out
    if method == "hoeffding":
        scale = hoeffding_delta(1, 1, gamma) / hoeffding_delta(1, 1, GAMMA_3SIGMA)
        out = {k: ConfidenceInterval.around(c, h * scale, gamma, "hoeffding")
               for k, (c, h) in REFERENCE_HOEFFDING_3SIGMA.items()}
        out["I3"] = i3_range_from_i2(out["I2"])
        return out
    raise ValueError("method must be gauss or hoeffding")


def replay_reference(gamma=GAMMA_3SIGMA, method="gauss", grid=DEFAULT_GRID):
    """Bounds from the built-in reference intervals.

    I3 is taken from the physical range implied by the I2 interval, and the
    Hoeffding fidelity is evaluated on the det T < 0 branch singled out by the
    Gaussian analysis.
    """
    iv = reference_intervals(gamma, method)
    det_sign = -1 if method.lower() == "hoeffding" else None
    bounds = _bounds(iv["I1"], iv["I2"], iv["I3"], grid, "from_i2", det_sign)
    return CertificationReport(
        intervals=iv,
        bounds=bounds,
        provenance={
            "mode": "replay", "method": method.lower(), "gamma": gamma, "grid": grid,
            "i3_mode": "from_i2", "det_sign": det_sign,
            "combined_confidence": combine_confidence(3, gamma), "version": __version__,
        },
    )
