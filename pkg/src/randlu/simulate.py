"""Shot-level simulation of the randomized-measurement experiment."""
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .estimators import BASES, RunDataset, SettingRecord
from .haar import haar_unitaries
from .states import (
    TwoQubitState,
    as_state,
    bell_state,
    maximally_mixed,
    reference_source,
    schmidt_state,
    singlet,
    werner,
    with_white_noise,
)

MIN_SHOTS = 4

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# V with V sigma V^dagger = Z, so a Z-basis readout after V measures sigma
BASIS_ROTATION = {
    "Z": np.eye(2, dtype=complex),
    "X": _H,
    "Y": _H @ np.diag([1, -1j]),
}


def resolve_state(spec):
    """Named presets: singlet, mixed, paper-source, werner(p), bell(psi+), schmidt(c)."""
    if isinstance(spec, TwoQubitState):
        return spec
    if not isinstance(spec, str):
        return as_state(spec)
    name = spec.strip().lower()
    simple = {"singlet": singlet, "psi-": singlet, "mixed": maximally_mixed, "paper-source": reference_source}
    if name in simple:
        return simple[name]()
    m = re.fullmatch(r"(werner|bell|schmidt)\s*[(:]\s*([^)]*?)\s*\)?", name)
    if m:
        kind, arg = m.groups()
        if kind == "bell":
            return bell_state(arg)
        return werner(float(arg)) if kind == "werner" else schmidt_state(float(arg))
    raise ValueError(f"unknown state preset {spec!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    state: object = "singlet"
    M: int = 200
    K: int = 1500
    runs: int = 25
    bases: tuple = BASES
    seed: int = 0
    gamma: float = 0.9973
    method: str = "gauss"
    visibility: float = 1.0
    misalignment: bool = False
    state_label: str = field(default=None, compare=False)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if self.K < MIN_SHOTS:
            raise ValueError(f"K must be at least {MIN_SHOTS} (fourth-moment estimator minimum), got {self.K}")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        bases = tuple(self.bases)
        bad = [b for b in bases if b not in BASES]
        if bad or not bases:
            raise ValueError(f"bases must be drawn from {BASES}, got {bases}")
        object.__setattr__(self, "bases", bases)
        if self.method.lower() not in ("gauss", "hoeffding"):
            raise ValueError("method must be gauss or hoeffding")
        object.__setattr__(self, "method", self.method.lower())
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 <= self.visibility <= 1:
            raise ValueError("visibility must lie in [0, 1]")
        if self.state_label is None:
            label = self.state if isinstance(self.state, str) else "custom"
            object.__setattr__(self, "state_label", label)

    def density(self):
        rho = resolve_state(self.state)
        if self.visibility < 1:
            rho = with_white_noise(rho, self.visibility)
        return rho

    def with_(self, **kw):
        return replace(self, **kw)


def _rotate(rho, UA, UB):
    """(U_A x U_B) rho (U_A x U_B)^dagger for stacks of unitaries."""
    U = np.einsum("sij,skl->sikjl", UA, UB).reshape(len(UA), 4, 4)
    return U @ rho @ np.conj(np.swapaxes(U, 1, 2))


def born_probabilities(rho, U_A, U_B, basis):
    """(p++, p+-, p-+, p--) for a joint basis such as "ZZ" after the local unitaries.

    Accepts single 2x2 unitaries or stacks of shape (n, 2, 2).
    """
    m = rho.matrix if isinstance(rho, TwoQubitState) else np.asarray(rho, dtype=complex)
    single = np.ndim(U_A) == 2
    UA = np.asarray(U_A, dtype=complex).reshape(-1, 2, 2)
    UB = np.asarray(U_B, dtype=complex).reshape(-1, 2, 2)
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r}")
    VA, VB = BASIS_ROTATION[basis[0]], BASIS_ROTATION[basis[1]]
    rotated = _rotate(m, VA @ UA, VB @ UB)
    p = np.clip(np.einsum("sii->si", rotated).real, 0.0, None)
    p /= p.sum(axis=1, keepdims=True)
    return p[0] if single else p


def _misalignment(seed):
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6D15]))
    return haar_unitaries(rng, 2)


def simulate_run(cfg, run_index=0):
    """One run of M settings, each measured with K shots per basis."""
    rho = cfg.density()
    run_seq = np.random.SeedSequence(cfg.seed).spawn(run_index + 1)[run_index]
    u_seq, shot_seq = run_seq.spawn(2)
    urng = np.random.default_rng(u_seq)
    UA = haar_unitaries(urng, cfg.M)
    UB = haar_unitaries(urng, cfg.M)
    WA, WB = (np.eye(2), np.eye(2)) if not cfg.misalignment else _misalignment(cfg.seed)
    counts = {}
    for basis, ss in zip(cfg.bases, shot_seq.spawn(len(cfg.bases))):
        p = born_probabilities(rho, WA @ UA, WB @ UB, basis)
        counts[basis] = np.random.default_rng(ss).multinomial(cfg.K, p)
    records = [
        SettingRecord(m, {b: counts[b][m] for b in cfg.bases}) for m in range(cfg.M)
    ]
    meta = {"run_id": run_index, "M": cfg.M, "K": cfg.K, "seed": cfg.seed, "state": cfg.state_label,
            "visibility": cfg.visibility}
    return RunDataset(records, meta, unitaries=np.stack([UA, UB], axis=1))


def simulate_experiment(cfg):
    return [simulate_run(cfg, r) for r in range(cfg.runs)]
