"""Command-line front end: ``quantify``, ``verify`` and ``play``.

Exit codes: 0 success, 1 a check failed, 2 malformed input, 3 solver failure.
Set ``RESOURCE_WEIGHT_LOG`` (e.g. ``DEBUG``) to change log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .exclusion import Povm, StateEnsemble, sample_play
from .free_sets import free_set_from_json, free_set_to_json, parse_free_set
from .linalg import SolverError, as_density, matrix_from_json
from .quantifiers import RobustnessCertificate, WeightCertificate, robustness, weight
from .subchannels import SubchannelEnsemble, build_binary_dual_game, build_dual_game, ensemble_of_states
from .verify import SUITES, canonical_json, run_suite, summarize

log = logging.getLogger("resource_weight")

EXIT_OK, EXIT_FAILED, EXIT_PARSE, EXIT_SOLVER = 0, 1, 2, 3
_NEEDS_FREE_SET = {"result1", "result2", "result3", "result4", "result5", "montecarlo"}


class InputError(Exception):
    pass


def _load_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_state(path: str) -> np.ndarray:
    obj = _load_json(path)
    try:
        return as_density(matrix_from_json(obj.get("state", obj)))
    except (ValueError, AttributeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _load_free_set(text: str):
    try:
        if Path(text).is_file():
            return free_set_from_json(_load_json(text))
        return parse_free_set(text)
    except (ValueError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc


def _dump(obj, fmt: str) -> str:
    if fmt == "json":
        return canonical_json(obj) + "\n"
    return _records_csv(obj.get("records", [obj]))


def _records_csv(records: list) -> str:
    cols = sorted({k for r in records for k in r if not isinstance(r[k], (dict, list))})
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in records:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in cols})
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- quantify -----------------------------------------------------------------

def _check_json(cert, tol: float | None = None) -> dict:
    chk = cert.check() if tol is None else cert.check(tol_dual=tol)
    return {k: (bool(v) if k == "pass" else float(v)) for k, v in chk.items()}


def cmd_quantify(args) -> int:
    if args.revalidate:
        obj = _load_json(args.revalidate)
        results = []
        for c in obj.get("certificates", [obj]):
            try:
                cls = WeightCertificate if c.get("kind") == "weight" else RobustnessCertificate
                cert = cls.from_json(c)
            except (KeyError, ValueError, TypeError) as exc:
                raise InputError(f"malformed certificate: {exc}") from exc
            chk = _check_json(cert, args.tol)
            log.info("revalidated %s certificate: %s", c.get("kind"), chk)
            results.append(chk["pass"])
        return EXIT_OK if all(results) else EXIT_FAILED
    if not args.state or not args.free_set:
        raise InputError("quantify needs --state and --free-set")
    rho = _load_state(args.state)
    f = _load_free_set(args.free_set)
    kinds = ["weight", "robustness"] if args.kind == "both" else [args.kind]
    certs = []
    for kind in kinds:
        cert = weight(rho, f) if kind == "weight" else robustness(rho, f)
        body = cert.to_json()
        body["checks"] = _check_json(cert, args.tol)
        certs.append((cert, body))
    out = {"certificates": [b for _, b in certs]}
    ok = all(b["checks"]["pass"] for _, b in certs)
    if args.format == "csv":
        rows = [{"kind": b["kind"], "value": b.get("w", b.get("r")), "gap": b["gap"],
                 **{f"check_{k}": v for k, v in b["checks"].items()}} for _, b in certs]
        _emit(_records_csv(rows), args.out)
    else:
        _emit(canonical_json(out) + "\n", args.out)
    if args.game_out:
        wc = next((c for c, _ in certs if isinstance(c, WeightCertificate)), None)
        if wc is None:
            raise InputError("--game-out needs the weight certificate")
        g, m = build_binary_dual_game(wc) if args.construction == "binary" else build_dual_game(rho, wc)
        Path(args.game_out).write_text(canonical_json({"game": g.to_json(), "povm": m.to_json()}) + "\n")
    return EXIT_OK if ok else EXIT_FAILED


# -- verify -------------------------------------------------------------------

def _verify_report(target: str, trials: int, seed: int, free_set, tol, construction) -> dict:
    kw = {}
    if tol is not None:
        kw["tol"] = tol
    if construction is not None:
        kw["construction"] = construction
    rep = run_suite(target, trials, seed, free_set, **kw)
    cfg = {"target": target, "trials": trials, "seed": seed, "tol": tol, "construction": construction,
           "free_set": free_set_to_json(free_set) if free_set is not None else None}
    return {"command": "verify", "config": cfg, "target": target, "records": rep.records, "summary": rep.summary}


def cmd_verify(args) -> int:
    if args.revalidate:
        obj = _load_json(args.revalidate)
        try:
            cfg = obj["config"]
            fs = free_set_from_json(cfg["free_set"]) if cfg.get("free_set") else None
            if summarize(obj["records"]) != obj["summary"]:
                log.error("summary is not recomputable from the records")
                return EXIT_FAILED
            fresh = _verify_report(cfg["target"], cfg["trials"], cfg["seed"], fs, cfg.get("tol"), cfg.get("construction"))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed report: {exc}") from exc
        if canonical_json(fresh) != canonical_json(obj):
            log.error("re-run does not reproduce the stored report")
            return EXIT_FAILED
        return EXIT_OK if fresh["summary"]["failed"] == 0 else EXIT_FAILED
    if args.target is None:
        raise InputError("verify needs a target")
    if args.seed is None:
        raise InputError("verify is randomized: --seed is required")
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    fs = None
    if args.target in _NEEDS_FREE_SET:
        fs = _load_free_set(args.free_set or "incoherent:2")
    report = _verify_report(args.target, args.trials, args.seed, fs, args.tol, args.construction)
    _emit(_dump(report, args.format), args.out)
    s = report["summary"]
    if s["failed"]:
        bad = report["records"][s["first_failure"]]
        log.error("%d failed check(s); first: %s", s["failed"], canonical_json(bad))
        return EXIT_FAILED
    return EXIT_OK


# -- play ---------------------------------------------------------------------

def _load_game(args) -> tuple[StateEnsemble, Povm]:
    obj = _load_json(args.game)
    try:
        povm_obj = _load_json(args.povm) if args.povm else obj.get("povm")
        if povm_obj is None:
            raise InputError("play needs --povm (or a game file carrying a 'povm' entry)")
        m = Povm.from_json(povm_obj)
        g = obj.get("game", obj)
        if "chois" in g:
            if not args.state:
                raise InputError("a subchannel game needs --state")
            e = ensemble_of_states(SubchannelEnsemble.from_json(g), _load_state(args.state))
        else:
            e = StateEnsemble.from_json(g)
    except (ValueError, TypeError, AttributeError) as exc:
        raise InputError(str(exc)) from exc
    return e, m


def cmd_play(args) -> int:
    if args.seed is None:
        raise InputError("play is randomized: --seed is required")
    if args.trials < 1:
        raise InputError("--trials must be >= 1")
    e, m = _load_game(args)
    if e.dim != m.dim:
        raise InputError(f"game dimension {e.dim} does not match POVM dimension {m.dim}")
    rows = sample_play(e, m, args.trials, args.seed, args.mode)
    if args.format == "json":
        obj = {"command": "play", "mode": args.mode, "seed": args.seed, "shots": args.trials,
               "errors": int(rows[:, 3].sum()), "error_rate": float(rows[:, 3].mean()),
               "rows": rows.tolist()}
        _emit(canonical_json(obj) + "\n", args.out)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "x", "g", "error"])
        w.writerows(rows.tolist())
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resource-weight", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--out")
        sp.add_argument("--revalidate", metavar="FILE", help="re-check a previously written artifact")

    q = sub.add_parser("quantify", help="weight / robustness with certificates")
    common(q)
    q.add_argument("--state")
    q.add_argument("--free-set")
    q.add_argument("--kind", choices=("weight", "robustness", "both"), default="both")
    q.add_argument("--tol", type=float, help="duality tolerance of the certificate check")
    q.add_argument("--game-out", help="also write the constructed exclusion game and measurement")
    q.add_argument("--construction", choices=("rotation", "binary"), default="rotation")

    v = sub.add_parser("verify", help="run a randomized verification suite")
    common(v)
    v.add_argument("target", nargs="?", choices=sorted(SUITES))
    v.add_argument("--free-set")
    v.add_argument("--trials", type=int, default=50)
    v.add_argument("--tol", type=float)
    v.add_argument("--construction", choices=("rotation", "identity", "binary"))

    g = sub.add_parser("play", help="shot-level simulation of a game")
    common(g)
    g.add_argument("--game", required=True)
    g.add_argument("--povm")
    g.add_argument("--state")
    g.add_argument("--trials", type=int, default=10_000, help="number of shots")
    g.add_argument("--mode", choices=("exclusion", "discrimination"), default="exclusion")
    g.set_defaults(format="csv")
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("RESOURCE_WEIGHT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"quantify": cmd_quantify, "verify": cmd_verify, "play": cmd_play}[args.command]
    try:
        return handler(args)
    except (InputError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
