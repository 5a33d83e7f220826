"""Command-line front end.

Exit codes: 0 success, 1 input or solver error, 2 a certified inequality failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys

import numpy as np

from . import games, infotheory, oracles
from . import quantifiers as qf
from . import sampling
from . import serialize as ser
from .errors import MalformedJSONError, ResourceGamesError
from .freesets import FreeMeasurementSet, FreeStateSet, free_set_from_descriptor
from .linalg import maximally_coherent, projector

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2
ORACLE_TOL = 2e-4


class Violation(Exception):
    """Carries a report whose certification failed."""

    def __init__(self, report):
        super().__init__("certification failed")
        self.report = report


def _load_state(path):
    return ser.state_from_json(ser.load_json(path), f"{path}")


def _load_povm(path):
    return ser.povm_from_json(ser.load_json(path), f"{path}")


def _free_desc(value):
    """Kind name or path to a descriptor file."""
    if value is None:
        return None
    if os.path.exists(value):
        return ser.load_json(value)
    return {"kind": value}


def _state_set(args, dim) -> FreeStateSet:
    desc = _free_desc(args.free)
    if desc is None:
        raise MalformedJSONError("--free is required for this command")
    return free_set_from_descriptor(desc, dim=dim, measurement=False)


def _povm_set(args, dim, outcomes) -> FreeMeasurementSet:
    desc = _free_desc(args.mfree)
    if desc is None:
        raise MalformedJSONError("--mfree is required for this command")
    return free_set_from_descriptor(desc, dim=dim, outcomes=outcomes, measurement=True)


def _solver_opts(args):
    return {"gap_tol": args.tol_gap, "feas_tol": args.tol_feas}


def _quant_entry(obj, name, res):
    return {
        "object": obj, "quantifier": name, "value": res.value, "parameter": res.decomposition["parameter"],
        "duality_gap": res.gap, "dual_value": res.dual_value, "residuals": res.residuals,
        "general": res.decomposition["general"], "free": res.decomposition["free"], "witness": res.witness,
    }


def cmd_quantify(args):
    opts = _solver_opts(args)
    which = ("robustness", "weight") if args.quantifier == "all" else (args.quantifier,)
    report = {"command": "quantify", "inputs": {}, "results": []}
    if args.state is None and args.povm is None:
        raise MalformedJSONError("quantify needs --state and/or --povm")
    if args.state is not None:
        rho = _load_state(args.state)
        fs = _state_set(args, rho.shape[0])
        report["inputs"]["state"] = ser.state_to_json(rho)
        report["inputs"]["free"] = fs.descriptor()
        for q in which:
            fn = qf.robustness_state if q == "robustness" else qf.weight_state
            report["results"].append(_quant_entry("state", q, fn(rho, fs, **opts)))
    if args.povm is not None:
        povm = _load_povm(args.povm)
        fm = _povm_set(args, povm.dim, povm.outcomes)
        report["inputs"]["povm"] = ser.povm_to_json(povm)
        report["inputs"]["mfree"] = fm.descriptor()
        for q in which:
            fn = qf.robustness_measurement if q == "robustness" else qf.weight_measurement
            report["results"].append(_quant_entry("povm", q, fn(povm, fm, **opts)))
    return report


def _pair(args):
    if args.state is None or args.povm is None:
        raise MalformedJSONError("this command needs --state and --povm")
    rho, povm = _load_state(args.state), _load_povm(args.povm)
    return rho, povm, _state_set(args, rho.shape[0]), _povm_set(args, povm.dim, povm.outcomes)


def _pair_inputs(rho, povm, fs, fm):
    return {"state": ser.state_to_json(rho), "povm": ser.povm_to_json(povm),
            "free": fs.descriptor(), "mfree": fm.descriptor()}


def cmd_build_game(args):
    rho, povm, fs, fm = _pair(args)
    opts = _solver_opts(args)
    if args.kind == "discrimination":
        zr = qf.robustness_state(rho, fs, **opts).witness
        zm = qf.robustness_measurement(povm, fm, **opts).witness
        bp = games.build_discrimination_game(zr, zm, n=args.n)
    else:
        yr = qf.weight_state(rho, fs, **opts).witness
        ym = qf.weight_measurement(povm, fm, **opts).witness
        bp = games.build_exclusion_game(yr, ym)
    return ser.blueprint_to_json(bp)


def cmd_evaluate(args):
    if args.game is None or args.state is None or args.povm is None:
        raise MalformedJSONError("evaluate needs --game, --state and --povm")
    game = ser.game_from_json(ser.load_json(args.game), args.game)
    rho, povm = _load_state(args.state), _load_povm(args.povm)
    value, gmap = games.evaluate(game, rho, povm, args.kind)
    return {"command": "evaluate", "kind": args.kind, "value": value, "map": list(gmap),
            "inputs": {"state": ser.state_to_json(rho), "povm": ser.povm_to_json(povm)}}


def cmd_certify1(args):
    rho, povm, fs, fm = _pair(args)
    r = games.certify_result1(rho, povm, fs, fm, n=args.n, solver_opts=_solver_opts(args))
    report = {
        "command": "certify-result1", "inputs": _pair_inputs(rho, povm, fs, fm),
        "quantifiers": r.quantifiers, "alpha": r.alpha, "beta": r.beta, "n": r.n,
        "discrimination": {"value": r.discrimination_value, "free_bound": r.discrimination_free_bound,
                           "gap": r.discrimination_gap, "gap_normalised": r.discrimination_gap_normalised},
        "exclusion": {"value": r.exclusion_value, "free_bound": r.exclusion_free_bound,
                      "gap": r.exclusion_gap, "gap_normalised": r.exclusion_gap_normalised},
        "certified": r.certified,
    }
    if not r.certified:
        raise Violation(report)
    return report


def cmd_certify2(args):
    rho, povm, fs, fm = _pair(args)
    rng = np.random.default_rng(args.seed)
    r = games.certify_result2(rho, povm, fs, fm, n=args.n, random_games=args.games, rng=rng,
                              solver_opts=_solver_opts(args))
    report = {
        "command": "certify-result2", "inputs": _pair_inputs(rho, povm, fs, fm), "seed": args.seed,
        "quantifiers": r.quantifiers,
        "robustness_product": r.robustness_product, "weight_product": r.weight_product,
        "discrimination": {"value": r.discrimination_value, "alpha": r.alpha, "n": r.n,
                           "ratio_interval": list(r.discrimination_ratio_interval),
                           "ratio_limit": r.discrimination_ratio_limit,
                           "interval_contains_product": r.interval_contains_product,
                           "interval_width_relative": r.interval_width_relative},
        "exclusion": {"value": r.exclusion_value, "beta": r.beta, "ratio": r.exclusion_ratio,
                      "ratio_error": abs(r.exclusion_ratio - r.weight_product)},
        "random_games": r.random_games,
        "certified": r.certified,
    }
    if not r.certified:
        raise Violation(report)
    return report


def _load_ensembles(path):
    obj = ser.load_json(path)
    items = obj.get("ensembles") if isinstance(obj, dict) else obj
    if isinstance(obj, dict) and obj.get("kind") == "ensemble":
        items = [obj]
    if not isinstance(items, list):
        raise MalformedJSONError(f"{path}: expected a list of ensembles or an object with field 'ensembles'")
    return [ser.ensemble_from_json(e, f"{path}[{i}]") for i, e in enumerate(items)]


def cmd_certify3(args):
    rho, povm, fs, fm = _pair(args)
    rng = np.random.default_rng(args.seed)
    if args.ensembles:
        ens = _load_ensembles(args.ensembles)
    else:
        ens = [sampling.random_ensemble(rho.shape[0], int(rng.integers(2, 5)), rng)
               for _ in range(args.n_ensembles)]
    r = infotheory.certify_result3(rho, povm, fs, fm, ens, solver_opts=_solver_opts(args))
    rows = []
    for e in r.ensembles:
        rows.append({
            "index": e.index, "k": e.k,
            "i_plus": e.i_plus, "i_plus_free": e.i_plus_free, "gap_plus": e.gap_plus,
            "bound_plus": e.bound_plus, "ok_plus": e.ok_plus,
            "i_minus": e.i_minus, "i_minus_free": e.i_minus_free,
            "gap_minus": infotheory.fmt_ext(e.gap_minus), "bound_minus": e.bound_minus,
            "ok_minus": e.ok_minus, "status_minus": e.status_minus,
            "identity_plus_error": e.identity_plus_error, "identity_minus_error": e.identity_minus_error,
        })
    report = {
        "command": "certify-result3", "inputs": _pair_inputs(rho, povm, fs, fm), "seed": args.seed,
        "ensembles_source": args.ensembles or "random",
        "robustness_bound": r.robustness_bound, "weight_bound": r.weight_bound,
        "max_saturation_plus": r.max_saturation, "ensembles": rows, "certified": r.bounds_hold,
    }
    if not r.bounds_hold:
        raise Violation(report)
    return report


def _known_value_checks():
    """Reference values recomputed by the oracles and by the SDP path."""
    plus = projector(np.array([1.0, 1.0]))
    mixed = np.array([[0.5, 0.25], [0.25, 0.5]], dtype=complex)
    proj = np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]).astype(complex)
    noisy = np.stack([np.diag([0.75, 0.25]), np.diag([0.25, 0.75])]).astype(complex)
    f2, f3 = FreeStateSet("incoherent", 2), FreeStateSet("incoherent", 3)
    triv = FreeMeasurementSet("trivial", 2, 2)
    return [
        ("R_state(|+>)", 1.0, oracles.grid_robustness_state_qubit_incoherent(plus),
         qf.robustness_state(plus, f2).value),
        ("R_state(qutrit max coherent)", 2.0, oracles.grid_robustness_state_qutrit_incoherent(maximally_coherent(3)),
         qf.robustness_state(maximally_coherent(3), f3).value),
        ("W_state([[.5,.25],[.25,.5]])", 0.5, oracles.grid_weight_state_qubit_incoherent(mixed),
         qf.weight_state(mixed, f2).value),
        ("R_povm(projective)", 1.0, oracles.grid_robustness_measurement_qubit_trivial(proj),
         qf.robustness_measurement(proj, triv).value),
        ("W_povm(projective)", 1.0, oracles.grid_weight_measurement_qubit_trivial(proj),
         qf.weight_measurement(proj, triv).value),
        ("W_povm(noisy)", 0.5, oracles.grid_weight_measurement_qubit_trivial(noisy),
         qf.weight_measurement(noisy, triv).value),
    ]


def cmd_verify(args):
    if not args.oracle:
        raise MalformedJSONError("verify runs the brute-force oracles; pass --oracle")
    checks = []
    if args.state is None and args.povm is None and args.game is None:
        for name, expected, oracle, sdp in _known_value_checks():
            checks.append({"check": name, "expected": expected, "oracle": oracle, "sdp": sdp,
                           "ok": abs(oracle - sdp) <= ORACLE_TOL and abs(sdp - expected) <= 1e-6})
    if args.state is not None:
        rho = _load_state(args.state)
        fs = FreeStateSet("incoherent", rho.shape[0])
        if rho.shape[0] == 2:
            pairs = [("robustness_state", oracles.grid_robustness_state_qubit_incoherent(rho),
                      qf.robustness_state(rho, fs).value),
                     ("weight_state", oracles.grid_weight_state_qubit_incoherent(rho), qf.weight_state(rho, fs).value)]
        elif rho.shape[0] == 3:
            pairs = [("robustness_state", oracles.grid_robustness_state_qutrit_incoherent(rho),
                      qf.robustness_state(rho, fs).value)]
        else:
            raise ResourceGamesError("state oracles exist for d = 2 and 3 only")
        for name, o, s in pairs:
            checks.append({"check": name, "oracle": o, "sdp": s, "ok": abs(o - s) <= ORACLE_TOL})
    if args.povm is not None and args.game is None:
        povm = _load_povm(args.povm)
        fm = FreeMeasurementSet("trivial", povm.dim, povm.outcomes)
        for name, o, s in [
            ("robustness_measurement", oracles.grid_robustness_measurement_qubit_trivial(povm),
             qf.robustness_measurement(povm, fm).value),
            ("weight_measurement", oracles.grid_weight_measurement_qubit_trivial(povm),
             qf.weight_measurement(povm, fm).value),
        ]:
            checks.append({"check": name, "oracle": o, "sdp": s, "ok": abs(o - s) <= ORACLE_TOL})
    if args.game is not None:
        if args.state is None or args.povm is None:
            raise MalformedJSONError("verifying a game needs --state and --povm")
        game = ser.game_from_json(ser.load_json(args.game), args.game)
        rho, povm = _load_state(args.state), _load_povm(args.povm)
        for kind in ("discrimination", "exclusion"):
            v, g = games.evaluate(game, rho, povm, kind)
            ov, og = oracles.enumerate_post_processings(game, rho, povm, kind)
            checks.append({"check": f"enumeration_{kind}", "value": v, "oracle": ov, "map": list(g),
                           "oracle_map": list(og), "ok": abs(v - ov) <= 1e-12})
    report = {"command": "verify", "checks": checks, "certified": all(c["ok"] for c in checks)}
    if not report["certified"]:
        raise Violation(report)
    return report


COMMANDS = {
    "quantify": cmd_quantify,
    "build-game": cmd_build_game,
    "evaluate": cmd_evaluate,
    "certify-result1": cmd_certify1,
    "certify-result2": cmd_certify2,
    "certify-result3": cmd_certify3,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resource-games",
                                description="Resource quantifiers and subchannel games for state-measurement pairs.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--state", help="state JSON file")
    p.add_argument("--povm", help="POVM JSON file")
    p.add_argument("--game", help="instrument, blueprint or ensemble JSON file")
    p.add_argument("--free", help="free state set: kind name (incoherent) or descriptor JSON file")
    p.add_argument("--mfree", help="free measurement set: trivial, incoherent-povm or descriptor JSON file")
    p.add_argument("--kind", choices=["discrimination", "exclusion"], default="discrimination")
    p.add_argument("--quantifier", choices=["robustness", "weight", "all"], default="all")
    p.add_argument("--n", type=int, help="number of filler subchannels in a discrimination blueprint")
    p.add_argument("--games", type=int, default=20, help="random games per certify-result2 run")
    p.add_argument("--ensembles", help="ensemble list JSON for certify-result3 (default: random)")
    p.add_argument("--n-ensembles", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol-gap", type=float, default=1e-8)
    p.add_argument("--tol-feas", type=float, default=1e-9)
    p.add_argument("--oracle", action="store_true", help="verify: run the brute-force oracles")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    return p


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}.{i}" if prefix else str(i))
    else:
        yield prefix, obj


def render(report, fmt) -> str:
    if fmt == "json":
        return ser.dumps(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flatten(ser.to_jsonable(report)):
        w.writerow([k, repr(v) if isinstance(v, float) else v])
    return buf.getvalue()


def _emit(text, out):
    if out:
        ser.write_text(out, text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        report = COMMANDS[args.command](args)
    except Violation as v:
        _emit(render(v.report, args.format), args.out)
        print(f"{args.command}: certification FAILED", file=sys.stderr)
        return EXIT_VIOLATION
    except (ResourceGamesError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit(render(report, args.format), args.out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
