"""File formats: JSON state / invariant / set files, JSONL datasets, key = value configs."""
import configparser
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from .errors import InvalidStateError, NonPhysicalStateError
from .estimators import RunDataset, SettingRecord
from .haar import StateSet, UnitarySet
from .invariants import InvariantSet
from .states import BlochTwoQubit, TwoQubitState, bloch_compose


def _complex(arr):
    a = np.asarray(arr, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError("complex entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _pairs(z):
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def _read_json(source):
    if hasattr(source, "read"):
        return json.load(source)
    return json.loads(Path(source).read_text())


def dumps(obj):
    """Deterministic JSON: sorted keys, fixed indentation."""
    return json.dumps(obj, indent=2, sort_keys=True, default=_default) + "\n"


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


# --- states ----------------------------------------------------------------------------

def state_from_obj(obj):
    """Bloch form {alpha, beta, T} or a 4x4 matrix of [re, im] pairs (bare or under "matrix")."""
    if isinstance(obj, dict) and {"alpha", "beta", "T"} <= set(obj):
        b = BlochTwoQubit(obj["alpha"], obj["beta"], obj["T"])
        rho = bloch_compose(b)
        if not rho.physical:
            raise NonPhysicalStateError("Bloch data does not describe a positive semidefinite state")
        return TwoQubitState(rho.matrix)
    m = obj["matrix"] if isinstance(obj, dict) and "matrix" in obj else obj
    try:
        z = _complex(m)
    except (ValueError, TypeError) as e:
        raise InvalidStateError(f"unreadable state file: {e}") from None
    if z.shape != (4, 4):
        raise InvalidStateError(f"state matrix must be 4x4, got {z.shape}")
    return TwoQubitState(z)


def load_state(source):
    return state_from_obj(_read_json(source))


def state_to_obj(rho, form="matrix"):
    if form == "bloch":
        from .states import bloch_decompose

        b = bloch_decompose(rho)
        return {"alpha": b.alpha.tolist(), "beta": b.beta.tolist(), "T": b.T.tolist()}
    return {"matrix": _pairs(rho.matrix)}


# --- invariants --------------------------------------------------------------------------

def invariants_to_obj(inv):
    return inv.as_dict()


def load_invariants(source):
    return InvariantSet.from_mapping(_read_json(source))


# --- unitary and state sets -----------------------------------------------------------------

def set_from_obj(obj):
    """UnitarySet from 2x2 [re, im] matrices, StateSet from Stokes 3-vectors or [re, im] 2-vectors."""
    if isinstance(obj, dict):
        for key in ("unitaries", "states", "bloch", "stokes"):
            if key in obj:
                obj = obj[key]
                break
        else:
            raise ValueError("set file needs one of the keys unitaries, states, bloch, stokes")
    a = np.asarray(obj, dtype=float)
    if a.ndim == 4 and a.shape[1:] == (2, 2, 2):
        return UnitarySet(_complex(a))
    if a.ndim == 3 and a.shape[1:] == (2, 2):
        psi = _complex(a)
        return StateSet(psi / np.linalg.norm(psi, axis=1, keepdims=True))
    if a.ndim == 2 and a.shape[1] == 3:
        return StateSet.from_bloch(a)
    raise ValueError(f"cannot interpret array of shape {a.shape} as a unitary or state set")


def load_set(source):
    return set_from_obj(_read_json(source))


def set_to_obj(x):
    if isinstance(x, UnitarySet):
        return {"unitaries": _pairs(x.members)}
    return {"states": _pairs(x.members)}


# --- datasets ------------------------------------------------------------------------------------

def dataset_lines(datasets):
    """JSONL lines for one or more runs: a header per run, then counts and unitary logs."""
    for r, data in enumerate(datasets):
        run_id = data.metadata.get("run_id", r)
        yield json.dumps({"header": {**data.metadata, "run_id": run_id}}, sort_keys=True, default=_default)
        for rec in data.records:
            for basis, c in rec.counts.items():
                yield json.dumps({"run_id": run_id, "setting_id": rec.setting_id, "basis": basis,
                                  "counts": [int(x) for x in c]}, sort_keys=True)
        if data.unitaries is not None:
            for rec, (ua, ub) in zip(data.records, data.unitaries):
                yield json.dumps({"run_id": run_id, "setting_id": rec.setting_id,
                                  "unitaries": {"A": _pairs(ua), "B": _pairs(ub)}}, sort_keys=True)


def write_datasets(datasets, stream):
    for line in dataset_lines(datasets):
        stream.write(line + "\n")


def read_datasets(stream):
    """Parse JSONL records into one RunDataset per run_id (records without run_id go to run 0)."""
    headers = {}
    counts = defaultdict(lambda: defaultdict(dict))
    unitaries = defaultdict(dict)
    for n, line in enumerate(stream, 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"line {n}: invalid JSON ({e.msg})") from None
        if "header" in obj:
            h = obj["header"]
            headers[h.get("run_id", 0)] = h
            continue
        run = obj.get("run_id", 0)
        try:
            sid = int(obj["setting_id"])
            if "unitaries" in obj:
                unitaries[run][sid] = (_complex(obj["unitaries"]["A"]), _complex(obj["unitaries"]["B"]))
                continue
            basis, c = obj["basis"], obj["counts"]
        except (KeyError, TypeError) as e:
            raise ValueError(f"line {n}: missing field {e}") from None
        if basis in counts[run][sid]:
            raise ValueError(f"line {n}: duplicate {basis} record for setting {sid}")
        if len(c) != 4:
            raise ValueError(f"line {n}: counts must be [N++, N+-, N-+, N--]")
        counts[run][sid][basis] = c
    if not counts:
        raise ValueError("dataset contains no count records")
    out = []
    for run in sorted(counts):
        sids = sorted(counts[run])
        records = [SettingRecord(s, counts[run][s]) for s in sids]
        U = None
        if unitaries.get(run) and set(unitaries[run]) >= set(sids):
            U = np.array([np.stack(unitaries[run][s]) for s in sids])
        meta = dict(headers.get(run, {}))
        meta.setdefault("run_id", run)
        meta.setdefault("M", len(records))
        out.append(RunDataset(records, meta, unitaries=U))
    return out


def load_datasets(paths):
    out = []
    for p in paths:
        with open(p) as fh:
            out.extend(read_datasets(fh))
    return out


# --- config --------------------------------------------------------------------------------------

_CONFIG_TYPES = {"M": int, "K": int, "runs": int, "seed": int, "gamma": float, "visibility": float,
                 "misalignment": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
                 "bases": lambda s: tuple(b.strip().upper() for b in s.split(",") if b.strip()),
                 "state": str, "method": str, "grid": int}


def parse_config(text):
    """Flat ``key = value`` lines; '#' starts a comment."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    cp.optionxform = str
    cp.read_string("[randlu]\n" + text)
    out = {}
    for key, raw in cp["randlu"].items():
        if key not in _CONFIG_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = _CONFIG_TYPES[key](raw)
    return out


def load_config(path):
    return parse_config(Path(path).read_text())


# --- human-readable report -----------------------------------------------------------------------

def _fmt(x, nd=4):
    return "n/a" if x is None else f"{x:.{nd}f}"


def render_report(d):
    """Plain-text summary of a report dictionary (as produced by ``as_dict``)."""
    prov = d.get("provenance", {})
    lines = [f"randlu report  mode={prov.get('mode', '?')}  method={prov.get('method', '?')}  "
             f"gamma={prov.get('gamma', '?')}  grid={prov.get('grid', '?')}"]
    if prov.get("mode") == "analyze":
        lines.append(f"  state={prov.get('state')}  runs={prov.get('runs')}  M={prov.get('M')}  "
                     f"K={prov.get('K')}  seed={prov.get('seed')}")
    lines.append("")
    lines.append("invariant intervals")
    for k, ci in d.get("intervals", {}).items():
        lines.append(f"  {k:<3} [{_fmt(ci['lower'])}, {_fmt(ci['upper'])}]")
    lines.append("")
    lines.append("certified lower bounds")
    for k, b in d.get("bounds", {}).items():
        lines.append(f"  {k:<5} >= {_fmt(b['value'])}   combined confidence {_fmt(b['combined_confidence'])}"
                     f"   i3 {b['i3_mode']}")
    neg = d.get("negativity")
    if neg:
        lines.append("")
        lines.append(f"negativity  {_fmt(neg['mean'])} +- {_fmt(neg['std_error'])}  ({neg['runs_used']} runs, I14 = 0)")
    rnd = d.get("randomness") or []
    if rnd:
        lines.append("")
        lines.append("randomness (frame potential vs. Cantelli band)")
        for v in rnd:
            status = "pass" if v["pass_2s"] else "FAIL"
            lines.append(f"  {v['party']} {v['kind']:<9} t={v['t']}  N={v['N']}  G={_fmt(v['G_t'])}  "
                         f"expected {_fmt(v['expected'])}  2sigma band {_fmt(v['band_2s'])}  {status}")
    return "\n".join(lines) + "\n"
