"""Batch front end: experiment configs in, reports and figures out.

Every run writes a canonical JSON report (plus CSV for tabular commands
and SVG figures unless --no-plot); identical config + seed reproduces the
files byte for byte.  Exit codes: 0 ok, 2 assumption violated (report is
still written), 3 solver did not converge, 4 bad configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from importlib import resources
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import plots
from .approx import bound_check, depolarize
from .entropy import (conditional_mutual_information, trace_distance,
                      von_neumann_entropy)
from .errors import (AssumptionViolated, ConfigError, ConvergenceFailure,
                     TopocorrError)
from .layout import FactorLayout
from .markov import (decomposition_to_json_dict, markov_decompose,
                     random_qms, reconstruct)
from .maxent import (distance_Dk, merge_annulus, tee_dense)
from .secret import rate_report
from .states import (DensityMatrix, bell_pair, ghz, load_json,
                     parity_flux_state, partial_trace,
                     random_density_matrix, tensor, w_state)
from .toric import (RegionMask, ToricCodeSpec, load_mask, rdm_dense,
                    region_entropy, tee, toric_ground_state)

LN2 = math.log(2.0)

BUILTIN_MASKS = {
    "kp-disk": "kp_disk_4x4.json",
    "kp-annulus": "kp_annulus_4x4.json",
    "lw-annulus": "lw_annulus_4x4.json",
    "ring-annulus": "ring_annulus_4x4.json",
}

_COMMON_KEYS = {"command", "seed", "out_dir", "plot", "bits", "tolerances"}
_KNOWN_KEYS = {
    "tee": _COMMON_KEYS | {"model", "Lx", "Ly", "mask", "dense"},
    "irrcorr": _COMMON_KEYS | {"model", "mask", "k"},
    "markov": _COMMON_KEYS | {"model", "block_dims", "save_decomposition"},
    "merge": _COMMON_KEYS | {"model", "mask"},
    "secret-rate": _COMMON_KEYS | {"model", "mask"},
    "approx-sweep": _COMMON_KEYS | {"model", "mask", "p_list"},
}
_RANDOM_MODELS = {"random-qms", "product"}

DEFAULT_TOLERANCES = {
    "merge": 1e-7,
    "solver": 1e-9,
    "solver_max_iter": 5000,
    "qms": 1e-7,
    "group_rel_tol": 1e-9,
}


def _validate_config(cfg: dict) -> dict:
    cmd = cfg.get("command")
    if cmd not in _KNOWN_KEYS:
        raise ConfigError(f"unknown command {cmd!r}")
    unknown = set(cfg) - _KNOWN_KEYS[cmd]
    if unknown:
        raise ConfigError(f"unknown config keys for {cmd}: {sorted(unknown)}")
    tols = dict(DEFAULT_TOLERANCES)
    extra = cfg.get("tolerances") or {}
    bad = set(extra) - set(tols)
    if bad:
        raise ConfigError(f"unknown tolerance keys: {sorted(bad)}")
    tols.update(extra)
    cfg = dict(cfg)
    cfg["tolerances"] = tols
    model = cfg.get("model")
    needs_seed = (model in _RANDOM_MODELS
                  or cmd in ("markov", "merge", "secret-rate")
                  or (cmd == "tee" and cfg.get("dense")))
    if needs_seed and cfg.get("seed") is None:
        raise ConfigError(f"--seed is required for this {cmd} run")
    return cfg


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _resolve_mask(name: Optional[str]) -> RegionMask:
    name = name or "lw-annulus"
    if name in BUILTIN_MASKS:
        ref = resources.files("topocorr").joinpath("masks", BUILTIN_MASKS[name])
        return load_mask(json.loads(ref.read_text()))
    return load_mask(name)


def _toric_dense(mask: RegionMask):
    tab = toric_ground_state(mask.lattice)
    rho = rdm_dense(tab, mask.abc)
    lab = lambda qs: [f"q{q}" for q in qs]
    regions = {"A": lab(mask.A), "B": lab(mask.B), "C": lab(mask.C)}
    split = None
    if mask.split is not None:
        split = (lab(mask.split["B1"]), lab(mask.split["B2"]))
    ring = None
    if mask.ring is not None:
        ring = [lab(part) for part in mask.ring]
    return rho, regions, split, ring


def _build_model(cfg: dict, rng: Optional[np.random.Generator]):
    """Returns (rho, regions, split, ring) for dense-path commands."""
    model = cfg.get("model", "ghz3")
    abc = {"A": ["A"], "B": ["B"], "C": ["C"]}
    if model == "ghz3":
        return ghz(3), abc, None, None
    if model == "w3":
        return w_state(3), abc, None, None
    if model == "bell":
        return bell_pair(), {"A": ["A"], "B": ["B"]}, None, None
    if model == "parity-toy":
        return parity_flux_state(), abc, None, None
    if model == "product":
        parts = [random_density_matrix(FactorLayout.qubits([lab]), rng)
                 for lab in "ABC"]
        rho = tensor(tensor(parts[0], parts[1]), parts[2])
        return rho, abc, None, None
    if model == "random-qms":
        dims = _parse_block_dims(cfg.get("block_dims", "2x1,1x2"))
        rho, _ = random_qms(rng, block_dims=dims)
        return rho, abc, None, None
    if model == "toric":
        mask = _resolve_mask(cfg.get("mask"))
        return _toric_dense(mask)
    if model == "file":
        return load_json(cfg["mask"]), None, None, None
    raise ConfigError(f"unknown model {model!r}")


def _parse_block_dims(text: str):
    try:
        return tuple(tuple(int(x) for x in part.split("x"))
                     for part in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad block dims {text!r}") from exc


def _out_dir(cfg: dict) -> str:
    d = cfg.get("out_dir") or os.environ.get("TOPOCORR_OUTDIR") or "."
    os.makedirs(d, exist_ok=True)
    return d


def _write_report(cfg: dict, name: str, payload: dict,
                  csv_rows: Optional[List[List[str]]] = None,
                  csv_header: Optional[Sequence[str]] = None) -> str:
    out = _out_dir(cfg)
    report = {
        "command": cfg["command"],
        "config_hash": _config_hash({k: v for k, v in cfg.items()
                                     if k not in ("out_dir", "plot")}),
        "tolerances": cfg["tolerances"],
        "results": payload,
    }
    path = os.path.join(out, f"{name}.json")
    with open(path, "w") as f:
        json.dump(report, f, sort_keys=True, indent=1)
        f.write("\n")
    if csv_rows is not None:
        with open(os.path.join(out, f"{name}.csv"), "w", newline="") as f:
            w = csv.writer(f)
            if csv_header:
                w.writerow(csv_header)
            w.writerows(csv_rows)
    return path


def _maybe_bits(cfg: dict, value: float) -> float:
    return value / LN2 if cfg.get("bits") else value


# ----------------------------------------------------------------------
# commands

def run_tee(cfg: dict) -> int:
    if cfg.get("model", "toric") != "toric":
        raise ConfigError("tee runs on the toric model; use irrcorr otherwise")
    mask = _resolve_mask(cfg.get("mask"))
    if cfg.get("Lx") or cfg.get("Ly"):
        want = (cfg.get("Lx", mask.lattice.Lx), cfg.get("Ly", mask.lattice.Ly))
        if want != (mask.lattice.Lx, mask.lattice.Ly):
            raise ConfigError(f"mask is for lattice {mask.lattice}, got {want}")
    tab = toric_ground_state(mask.lattice)
    gamma = tee(tab, mask)
    s = lambda qs: region_entropy(tab, qs)
    s_values = {
        "A": s(mask.A), "B": s(mask.B), "C": s(mask.C),
        "AB": s(list(mask.A) + list(mask.B)),
        "BC": s(list(mask.B) + list(mask.C)),
        "CA": s(list(mask.C) + list(mask.A)),
        "ABC": s(mask.abc),
    }
    payload = {
        "geometry": mask.geometry,
        "lattice": {"Lx": mask.lattice.Lx, "Ly": mask.lattice.Ly},
        "gamma": _maybe_bits(cfg, gamma),
        "gamma_over_ln2": gamma / LN2,
        "S_values": {k: _maybe_bits(cfg, v) for k, v in s_values.items()},
        "path": "stabilizer",
    }
    code = 0
    if cfg.get("dense"):
        rng = np.random.default_rng(cfg["seed"])
        rho, regions, split, ring = _toric_dense(mask)
        rep = tee_dense(rho, regions, split=split, ring=ring, rng=rng,
                        tol=cfg["tolerances"]["merge"],
                        solver_tol=cfg["tolerances"]["solver"],
                        max_iter=cfg["tolerances"]["solver_max_iter"])
        payload["dense"] = rep.to_json_dict()
        payload["stab_vs_dense_gamma_gap"] = abs(rep.gamma - gamma)
    rows = [[f"{gamma!r}", mask.geometry, "stabilizer"]]
    _write_report(cfg, "tee_report", payload, rows,
                  ("gamma_nats", "geometry", "path"))
    if cfg.get("plot", True):
        plots.entropy_bars(os.path.join(_out_dir(cfg), "tee_entropies.svg"),
                           s_values)
    return code


def run_irrcorr(cfg: dict) -> int:
    rng = np.random.default_rng(cfg.get("seed", 0))
    rho, regions, split, ring = _build_model(cfg, rng)
    if regions is None or len(regions) != 3:
        raise ConfigError("irrcorr needs a tripartite model")
    rep = tee_dense(rho, regions, split=split, ring=ring, rng=rng,
                    tol=cfg["tolerances"]["merge"],
                    solver_tol=cfg["tolerances"]["solver"],
                    max_iter=cfg["tolerances"]["solver_max_iter"])
    parts = [regions[x] for x in "ABC"]
    payload = rep.to_json_dict()
    payload["C_k"] = {"C2": rep.C2, "C3": rep.C3}
    payload["sum_Ck_minus_CT"] = rep.C2 + rep.C3 - rep.CT
    _write_report(cfg, "irrcorr_report", payload,
                  [rep.csv_row()], rep.CSV_FIELDS)
    if cfg.get("plot", True):
        plots.entropy_bars(os.path.join(_out_dir(cfg), "irrcorr_entropies.svg"),
                           rep.S_values)
    return 0


def run_markov(cfg: dict) -> int:
    rng = np.random.default_rng(cfg["seed"])
    rho, regions, _, _ = _build_model(cfg, rng)
    dec = markov_decompose(rho, regions["B"], rng=rng,
                           tol=cfg["tolerances"]["qms"],
                           a_labels=regions["A"], c_labels=regions["C"])
    err = trace_distance(reconstruct(dec), rho.permuted(
        regions["A"] + regions["B"] + regions["C"]))
    payload = {
        "block_dims": dec.block_dims,
        "probs": list(dec.probs),
        "reconstruction_error": err,
    }
    if cfg.get("save_decomposition"):
        path = os.path.join(_out_dir(cfg), "decomposition.json")
        with open(path, "w") as f:
            json.dump(decomposition_to_json_dict(dec), f, sort_keys=True)
        payload["decomposition_file"] = "decomposition.json"
    _write_report(cfg, "markov_report", payload)
    return 0


def run_merge(cfg: dict) -> int:
    rng = np.random.default_rng(cfg["seed"])
    model = cfg.get("model", "random-qms")
    if model == "toric":
        rho, regions, split, _ = _toric_dense(_resolve_mask(cfg.get("mask")))
        if split is None:
            raise ConfigError("mask has no B1|B2 split")
        b1, b2 = split
        a, c = regions["A"], regions["C"]
    elif model == "random-qms":
        from .markov import random_chain_qms
        rho, b1, b2, a, c = random_chain_qms(rng)
    else:
        raise ConfigError("merge supports models toric and random-qms")
    merged = merge_annulus(rho, b1, b2, a_labels=a, c_labels=c,
                           tol=cfg["tolerances"]["merge"])
    resid = {}
    b = list(b1) + list(b2)
    for name, labs in (("AB", a + b), ("BC", b + c), ("CA", c + a)):
        resid[name] = trace_distance(partial_trace(merged, labs),
                                     partial_trace(rho, labs))
    s = von_neumann_entropy
    ent_gap = s(merged) - (s(partial_trace(rho, a + b))
                           + s(partial_trace(rho, b + c))
                           - s(partial_trace(rho, b)))
    payload = {
        "marginal_residuals": resid,
        "max_marginal_residual": max(resid.values()),
        "entropy_vs_ssa_identity": ent_gap,
        "S_merged": s(merged),
        "S_input": s(rho),
    }
    _write_report(cfg, "merge_report", payload)
    return 0


def run_secret_rate(cfg: dict) -> int:
    rng = np.random.default_rng(cfg["seed"])
    model = cfg.get("model", "toric")
    if model == "toric":
        rho, regions, split, _ = _toric_dense(_resolve_mask(cfg.get("mask")))
        rep = rate_report(rho, regions["B"], split=split,
                          a_labels=regions["A"], c_labels=regions["C"],
                          rng=rng, rel_tol=cfg["tolerances"]["group_rel_tol"],
                          tol=cfg["tolerances"]["merge"],
                          solver_tol=cfg["tolerances"]["solver"],
                          max_iter=cfg["tolerances"]["solver_max_iter"])
    else:
        rho, regions, split, _ = _build_model(cfg, rng)
        rep = rate_report(rho, regions["B"], split=split,
                          a_labels=regions["A"], c_labels=regions["C"],
                          rng=rng, rel_tol=cfg["tolerances"]["group_rel_tol"],
                          solver_tol=cfg["tolerances"]["solver"],
                          max_iter=cfg["tolerances"]["solver_max_iter"])
    _write_report(cfg, "secret_rate_report", rep.to_json_dict())
    return 0


def run_approx_sweep(cfg: dict) -> int:
    rng = np.random.default_rng(cfg.get("seed", 0))
    model = cfg.get("model", "toric")
    if model != "toric":
        raise ConfigError("approx-sweep runs on the toric model")
    rho, regions, split, _ = _toric_dense(_resolve_mask(cfg.get("mask")))
    if split is None:
        raise ConfigError("mask has no B1|B2 split")
    p_list = cfg.get("p_list") or [0.0, 1e-4, 1e-3]
    rows = []
    points = []
    for p in p_list:
        noisy = depolarize(rho, p) if p > 0 else rho
        br = bound_check(noisy, split[0], split[1],
                         a_labels=regions["A"], c_labels=regions["C"])
        d = br.to_json_dict()
        d["p"] = p
        points.append(d)
        rows.append([f"{p!r}", f"{br.epsilon!r}", f"{br.delta!r}",
                     f"{br.delta_achieved!r}", f"{br.C_hat!r}", f"{br.cmi!r}",
                     f"{br.f_delta!r}", str(br.lower_ok), str(br.upper_ok)])
    payload = {"points": points, "all_lower_ok": all(pt["lower_ok"] for pt in points),
               "all_upper_ok": all(pt["upper_ok"] for pt in points)}
    _write_report(cfg, "approx_sweep_report", payload, rows,
                  ("p", "epsilon", "delta", "delta_achieved", "C_hat", "cmi",
                   "f_delta", "lower_ok", "upper_ok"))
    if cfg.get("plot", True):
        xs = [pt["p"] for pt in points]
        plots.sweep_plot(
            os.path.join(_out_dir(cfg), "approx_sweep.svg"), xs,
            {"C_hat": [pt["C_hat"] for pt in points],
             "I(A:C|B)": [pt["cmi"] for pt in points],
             "cmi - f/2": [pt["cmi"] - 0.5 * pt["f_delta"] for pt in points],
             "C_hat - f": [pt["C_hat"] - pt["f_delta"] for pt in points]},
            xlabel="depolarizing p", ylabel="nats", logx=True)
    return 0


_RUNNERS = {
    "tee": run_tee,
    "irrcorr": run_irrcorr,
    "markov": run_markov,
    "merge": run_merge,
    "secret-rate": run_secret_rate,
    "approx-sweep": run_approx_sweep,
}


# ----------------------------------------------------------------------
# argument parsing

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="topocorr",
        description="Topological entanglement entropy / irreducible "
                    "correlation / secret-sharing rate toolkit")
    ap.add_argument("--config", help="JSON config file ('-' for stdin); "
                                     "flags are ignored when given")
    sub = ap.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--seed", type=int)
        p.add_argument("--out", dest="out_dir")
        p.add_argument("--no-plot", dest="plot", action="store_false")
        p.add_argument("--bits", action="store_true",
                       help="report entropic quantities in bits")
        p.set_defaults(plot=True)

    p = sub.add_parser("tee", help="topological entanglement entropy of a mask")
    p.add_argument("--model", default="toric")
    p.add_argument("--Lx", type=int)
    p.add_argument("--Ly", type=int)
    p.add_argument("--mask", help="builtin mask name or JSON path")
    p.add_argument("--dense", action="store_true",
                   help="also run the dense merge/solver cross-check")
    common(p)

    p = sub.add_parser("irrcorr", help="irreducible correlation report")
    p.add_argument("--model", default="ghz3")
    p.add_argument("--mask")
    common(p)

    p = sub.add_parser("markov", help="Markov block decomposition")
    p.add_argument("--model", default="random-qms")
    p.add_argument("--block-dims", dest="block_dims", default="2x1,1x2")
    p.add_argument("--save-decomposition", dest="save_decomposition",
                   action="store_true")
    common(p)

    p = sub.add_parser("merge", help="annulus merge with residuals")
    p.add_argument("--model", default="random-qms")
    p.add_argument("--mask")
    common(p)

    p = sub.add_parser("secret-rate", help="achievable-rate report")
    p.add_argument("--model", default="toric")
    p.add_argument("--mask")
    common(p)

    p = sub.add_parser("approx-sweep", help="delta-bracket sweep over noise")
    p.add_argument("--model", default="toric")
    p.add_argument("--mask")
    p.add_argument("--p-list", dest="p_list",
                   help="comma-separated depolarizing strengths")
    common(p)
    return ap


def _config_from_args(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items()
           if k not in ("config",) and v is not None}
    if "p_list" in cfg and isinstance(cfg["p_list"], str):
        try:
            cfg["p_list"] = [float(x) for x in cfg["p_list"].split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad p list {cfg['p_list']!r}") from exc
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        if args.config:
            raw = sys.stdin.read() if args.config == "-" else \
                open(args.config).read()
            cfg = json.loads(raw)
        else:
            if not args.command:
                ap.print_help()
                return 4
            cfg = _config_from_args(args)
        cfg = _validate_config(cfg)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    runner = _RUNNERS[cfg["command"]]
    try:
        return runner(cfg)
    except AssumptionViolated as exc:
        _write_report(cfg, f"{cfg['command'].replace('-', '_')}_report", {
            "error": "AssumptionViolated",
            "message": str(exc),
            "quantities": exc.quantities,
        })
        print(f"assumption violated: {exc}", file=sys.stderr)
        return 2
    except ConvergenceFailure as exc:
        _write_report(cfg, f"{cfg['command'].replace('-', '_')}_report", {
            "error": "ConvergenceFailure",
            "message": str(exc),
            "diagnostics": {k: v for k, v in exc.diagnostics.items()},
        })
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
