"""JSON interchange for matrices, states, POVMs, instruments, ensembles and blueprints.

A matrix is ``{"dim": d, "re": [[...]], "im": [[...]]}`` (row major). Other
objects are tagged with ``"kind"``. Floats are written with ``repr`` precision,
so a load after a dump reproduces every array bit for bit.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import MalformedJSONError
from .games import GameBlueprint
from .linalg import ChannelEnsemble, Povm, Subchannel, SubchannelSet, density_matrix


def _need(obj, key, where):
    if not isinstance(obj, dict):
        raise MalformedJSONError(f"{where}: expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise MalformedJSONError(f"{where}: missing field {key!r}")
    return obj[key]


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"dim": int(m.shape[0]), "re": m.real.tolist(), "im": m.imag.tolist()}


def matrix_from_json(obj, where="matrix") -> np.ndarray:
    if isinstance(obj, list):
        # bare real nested list
        try:
            arr = np.array(obj, dtype=complex)
        except (TypeError, ValueError) as exc:
            raise MalformedJSONError(f"{where}: not a numeric matrix ({exc})") from exc
    else:
        d = _need(obj, "dim", where)
        re = _need(obj, "re", where)
        im = obj.get("im")
        try:
            arr = np.array(re, dtype=float) + 1j * (np.array(im, dtype=float) if im is not None else 0.0)
        except (TypeError, ValueError) as exc:
            raise MalformedJSONError(f"{where}.re/.im: not numeric ({exc})") from exc
        if arr.shape != (d, d):
            raise MalformedJSONError(f"{where}: field 'dim' is {d} but 're' has shape {arr.shape}")
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MalformedJSONError(f"{where}: matrix must be square, got shape {arr.shape}")
    return arr


def state_to_json(rho) -> dict:
    return {"kind": "state", "matrix": matrix_to_json(rho)}


def state_from_json(obj, where="state") -> np.ndarray:
    if isinstance(obj, dict) and obj.get("kind") == "state":
        return density_matrix(matrix_from_json(_need(obj, "matrix", where), f"{where}.matrix"))
    return density_matrix(matrix_from_json(obj, where))


def povm_to_json(povm) -> dict:
    els = povm.elements if isinstance(povm, Povm) else np.asarray(povm)
    return {"kind": "povm", "elements": [matrix_to_json(m) for m in els]}


def povm_from_json(obj, where="povm") -> Povm:
    els = _need(obj, "elements", where)
    if not isinstance(els, list) or not els:
        raise MalformedJSONError(f"{where}.elements: expected a nonempty list")
    return Povm(np.stack([matrix_from_json(e, f"{where}.elements[{i}]") for i, e in enumerate(els)]))


def subchannel_to_json(sub: Subchannel) -> dict:
    return {"d_in": sub.d_in, "d_out": sub.d_out, "choi": matrix_to_json(sub.choi)}


def subchannel_from_json(obj, where="subchannel") -> Subchannel:
    d_in = _need(obj, "d_in", where)
    d_out = _need(obj, "d_out", where)
    return Subchannel(matrix_from_json(_need(obj, "choi", where), f"{where}.choi"), int(d_in), int(d_out))


def instrument_to_json(inst: SubchannelSet) -> dict:
    """Consecutive repeats of the same object collapse into one entry with ``"repeat"``."""
    runs = []
    for s in inst:
        if runs and runs[-1][0] is s:
            runs[-1][1] += 1
        else:
            runs.append([s, 1])
    subs = []
    for s, count in runs:
        entry = subchannel_to_json(s)
        if count > 1:
            entry["repeat"] = count
        subs.append(entry)
    return {"kind": "instrument", "d_in": inst.d_in, "d_out": inst.d_out, "subchannels": subs}


def instrument_from_json(obj, where="instrument") -> SubchannelSet:
    subs = _need(obj, "subchannels", where)
    if not isinstance(subs, list):
        raise MalformedJSONError(f"{where}.subchannels: expected a list")
    out = []
    for i, e in enumerate(subs):
        s = subchannel_from_json(e, f"{where}.subchannels[{i}]")
        rep = e.get("repeat", 1)
        if not isinstance(rep, int) or rep < 1:
            raise MalformedJSONError(f"{where}.subchannels[{i}].repeat: must be a positive integer")
        out.extend([s] * rep)
    return SubchannelSet(tuple(out))


def ensemble_to_json(ens: ChannelEnsemble) -> dict:
    return {"kind": "ensemble", "prior": ens.prior.tolist(),
            "channels": [subchannel_to_json(c) for c in ens.channels]}


def ensemble_from_json(obj, where="ensemble") -> ChannelEnsemble:
    chans = _need(obj, "channels", where)
    prior = _need(obj, "prior", where)
    return ChannelEnsemble(tuple(subchannel_from_json(c, f"{where}.channels[{i}]") for i, c in enumerate(chans)),
                           np.array(prior, dtype=float))


def blueprint_to_json(bp: GameBlueprint) -> dict:
    return {
        "kind": "blueprint",
        "game": bp.kind,
        "coefficient": bp.coefficient,
        "n": bp.n,
        "state_witness": matrix_to_json(bp.state_witness),
        "measurement_witnesses": [matrix_to_json(z) for z in bp.measurement_witnesses],
        "completion_state": matrix_to_json(bp.completion_state),
        "prior": None if bp.prior is None else np.asarray(bp.prior).tolist(),
        "instrument": instrument_to_json(bp.instrument),
    }


def blueprint_from_json(obj, where="blueprint") -> GameBlueprint:
    kind = _need(obj, "game", where)
    if kind not in ("discrimination", "exclusion"):
        raise MalformedJSONError(f"{where}.game: must be 'discrimination' or 'exclusion', got {kind!r}")
    zm = _need(obj, "measurement_witnesses", where)
    prior = obj.get("prior")
    return GameBlueprint(
        kind,
        instrument_from_json(_need(obj, "instrument", where), f"{where}.instrument"),
        float(_need(obj, "coefficient", where)),
        obj.get("n"),
        matrix_from_json(_need(obj, "state_witness", where), f"{where}.state_witness"),
        np.stack([matrix_from_json(z, f"{where}.measurement_witnesses[{i}]") for i, z in enumerate(zm)]),
        matrix_from_json(_need(obj, "completion_state", where), f"{where}.completion_state"),
        None if prior is None else np.array(prior, dtype=float),
    )


def game_from_json(obj, where="game") -> SubchannelSet:
    """An instrument, or the instrument inside a blueprint."""
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "blueprint":
        return blueprint_from_json(obj, where).instrument
    if kind == "ensemble":
        return ensemble_from_json(obj, where).as_game()
    if kind == "instrument":
        return instrument_from_json(obj, where)
    raise MalformedJSONError(f"{where}.kind: expected 'instrument', 'blueprint' or 'ensemble', got {kind!r}")


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedJSONError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def to_jsonable(obj):
    """Numpy arrays, complex matrices and extended reals to plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if obj.ndim == 2 and obj.shape[0] == obj.shape[1] and np.iscomplexobj(obj):
            return matrix_to_json(obj)
        if obj.ndim == 3 and np.iscomplexobj(obj):
            return [matrix_to_json(m) for m in obj]
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        return f
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_text(path, text):
    Path(path).write_text(text)
