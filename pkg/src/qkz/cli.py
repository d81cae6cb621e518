"""Command-line front end: configuration, dispatch and serialization.

Structured results are JSON with complex numbers as ``[re, im]``; function
grids are CSV. Every output carries a header with the version, the resolved
conventions, the seed and the tolerances. Exit codes: 0 success, 1 failed
check, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from importlib import resources
from typing import Any, Callable, Sequence

import numpy as np

from . import CONVENTIONS, __version__
from . import specfn as sf
from .errors import EXIT_CODES, ConfigInvalid, NotConvergent, PoleOrZero, QkzError, exit_code_for
from .forms import WeightProfile, enumerate_assignments
from .pairing import build_contours, convergence_witness, min_tail_slope, pair, shifted_pair
from .rmat import inversion_residual, r_modified, rbar, ybe_residual
from .specfn import ModelParams
from .verify import (
    check_convergence_condition,
    check_lemma1,
    check_lemma2,
    check_skew_annihilation,
    check_solution_exchange,
    check_varphi_shift,
    check_w_shift_sign,
    fit_decay_rate,
    qkz_residual,
    solve,
)

__all__ = ["main", "load_config", "RunConfig", "dumps", "BUNDLED"]

BUNDLED = ("n2", "n3", "n2_three_sites")

# ---------------------------------------------------------------------------
# serialization


def _plain(obj: Any) -> Any:
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    if dataclasses.is_dataclass(obj):
        return _plain(dataclasses.asdict(obj))
    return obj


def dumps(obj: Any) -> str:
    """JSON text with complex values as ``[re, im]``."""
    return json.dumps(_plain(obj), indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# configuration

_TOP = {"model", "profile", "betas", "pair", "solve", "verify", "seed", "jobs"}
_FLAT = {"n", "rho", "nu", "wJ", "WJ", "eps", "offsets", "offset", "leg", "mode"}
_MODEL = {"n", "rho"}
_PROFILE = {"nu"}
_PAIR = {"wJ", "WJ", "eps", "offset", "leg", "mode"}
_SOLVE = {"W", "eps"}
_VERIFY = {"W", "beta_sets", "lemma1", "lemma2", "qkz", "convergence", "tol"}
_VERIFY_SUB = {
    "lemma1": {"trials", "rho"},
    "lemma2": {"eps"},
    "qkz": {"eps", "r"},
    "convergence": {"n_max", "N_max"},
}


def _reject_unknown(block: dict, allowed: set, where: str) -> None:
    if not isinstance(block, dict):
        raise ConfigInvalid(f"{where} must be an object")
    extra = sorted(set(block) - allowed)
    if extra:
        raise ConfigInvalid(f"unknown key(s) in {where}: {', '.join(extra)}")


def _complex(v: Any, where: str) -> complex:
    if isinstance(v, bool):
        raise ConfigInvalid(f"{where}: expected a number or [re, im]")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return complex(v[0], v[1])
    raise ConfigInvalid(f"{where}: expected a number or [re, im], got {v!r}")


def _form_spec(v: Any, where: str) -> list:
    """Assignment ``[j_1, ..., j_N]`` or coefficient list ``[[c, [j_1, ...]], ...]``."""
    if not isinstance(v, list) or not v:
        raise ConfigInvalid(f"{where}: expected an assignment or a coefficient list")
    if all(isinstance(j, int) and not isinstance(j, bool) for j in v):
        return [(1.0, tuple(v))]
    out = []
    for item in v:
        if not (isinstance(item, list) and len(item) == 2 and isinstance(item[1], list)):
            raise ConfigInvalid(f"{where}: coefficient entries must be [coef, assignment]")
        out.append((_complex(item[0], where), tuple(item[1])))
    return out


def _positive(v: Any, where: str, upper: float | None = None) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0 or (upper is not None and not v < upper):
        raise ConfigInvalid(f"{where} must be a number in (0, {upper if upper else 'inf'})")
    return float(v)


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated configuration."""

    raw: dict
    p: ModelParams
    wp: WeightProfile
    betas: tuple[complex, ...]
    seed: int

    def block(self, name: str) -> dict:
        return dict(self.raw.get(name, {}))


def _normalize(raw: dict) -> dict:
    # the flat pair layout {n, rho, nu, betas, wJ, WJ, eps, offsets} maps onto the nested one
    _reject_unknown(raw, _TOP | _FLAT, "config")
    cfg = {k: v for k, v in raw.items() if k in _TOP}
    flat = {k: v for k, v in raw.items() if k in _FLAT}
    if flat:
        model = dict(cfg.get("model", {}))
        for k in ("n", "rho"):
            if k in flat:
                model[k] = flat.pop(k)
        cfg["model"] = model
        if "nu" in flat:
            cfg["profile"] = {**cfg.get("profile", {}), "nu": flat.pop("nu")}
        if "offsets" in flat:
            flat["offset"] = flat.pop("offsets")
        if flat:
            cfg["pair"] = {**cfg.get("pair", {}), **flat}
    return cfg


def load_config(source: dict | str | None) -> RunConfig:
    """Parse and validate a configuration (dict, file path or bundled name)."""
    if source is None:
        source = "n2"
    if isinstance(source, str):
        if source in BUNDLED:
            text = resources.files("qkz").joinpath("configs", f"{source}.json").read_text(encoding="utf-8")
        else:
            try:
                with open(source, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigInvalid(f"cannot read config {source!r}: {exc}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config is not valid JSON: {exc}") from exc
    else:
        raw = source
    if not isinstance(raw, dict):
        raise ConfigInvalid("config must be a JSON object")
    cfg = _normalize(raw)
    model = cfg.get("model")
    if model is None:
        raise ConfigInvalid("config needs a model block with n and rho")
    _reject_unknown(model, _MODEL, "model")
    if not isinstance(model.get("n"), int) or isinstance(model.get("n"), bool):
        raise ConfigInvalid("model.n must be an integer >= 2")
    p = ModelParams(model["n"], _positive(model.get("rho"), "model.rho"))
    if "betas" not in cfg or not isinstance(cfg["betas"], list) or not cfg["betas"]:
        raise ConfigInvalid("config needs a non-empty betas list")
    betas = tuple(_complex(b, "betas") for b in cfg["betas"])
    prof = cfg.get("profile", {})
    _reject_unknown(prof, _PROFILE, "profile")
    nu = prof.get("nu")
    if nu is None:
        raise ConfigInvalid("profile.nu is required")
    if not isinstance(nu, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in nu):
        raise ConfigInvalid("profile.nu must be a list of integers")
    wp = WeightProfile(p.n, len(betas), tuple(nu))
    if not wp.weyl_positive:
        raise NotConvergent(
            f"profile nu={list(nu)} violates the convergence condition "
            f"nu_(j-1) + nu_(j+1) >= 2 nu_j at j={wp.weyl_violations}"
        )
    for name, allowed in (("pair", _PAIR), ("solve", _SOLVE), ("verify", _VERIFY)):
        if name in cfg:
            _reject_unknown(cfg[name], allowed, name)
    for sub, allowed in _VERIFY_SUB.items():
        if sub in cfg.get("verify", {}):
            _reject_unknown(cfg["verify"][sub], allowed, f"verify.{sub}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigInvalid("seed must be a non-negative integer")
    if "jobs" in cfg and (not isinstance(cfg["jobs"], int) or cfg["jobs"] < 1):
        raise ConfigInvalid("jobs must be a positive integer")
    return RunConfig(cfg, p, wp, betas, seed)


def _check_spec(spec: list, cfg: RunConfig, where: str) -> list:
    for _, J in spec:
        if len(J) != cfg.wp.N or any(not (isinstance(j, int) and 0 <= j < cfg.p.n) for j in J):
            raise ConfigInvalid(f"{where}: assignment {list(J)} must have {cfg.wp.N} entries in 0..{cfg.p.n - 1}")
        if WeightProfile.of(J, cfg.p.n) != cfg.wp:
            raise ConfigInvalid(f"{where}: assignment {list(J)} does not have profile nu={list(cfg.wp.nu)}")
    return spec


def _jobs(arg: int | None, cfg: RunConfig | None = None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("QKZ_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigInvalid(f"QKZ_JOBS must be an integer, got {env!r}") from exc
    if cfg is not None and "jobs" in cfg.raw:
        return int(cfg.raw["jobs"])
    return 1


def _header(cfg: RunConfig | None, seed: int | None, tolerances: dict, command: str) -> dict:
    h = {
        "tool": "qkz",
        "version": __version__,
        "command": command,
        "conventions": dict(CONVENTIONS),
        "seed": seed,
        "tolerances": tolerances,
    }
    if cfg is not None:
        h["model"] = {"n": cfg.p.n, "rho": cfg.p.rho, "lambda": cfg.p.lam}
        h["profile"] = {"nu": list(cfg.wp.nu), "N": cfg.wp.N}
        h["betas"] = list(cfg.betas)
    return h


# ---------------------------------------------------------------------------
# subcommands


def _grid(spec: str) -> np.ndarray:
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ConfigInvalid(f"grid must be start:stop:step, got {spec!r}") from exc
    if not step > 0 or b < a:
        raise ConfigInvalid("grid needs step > 0 and stop >= start")
    count = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(count)


def _periods(arg: str | None, default: tuple[float, ...]) -> tuple[float, ...]:
    if arg is None:
        return default
    try:
        return sf.PeriodTriple(tuple(float(x) for x in arg.split(","))).omega
    except ValueError as exc:
        raise ConfigInvalid(f"periods must be comma-separated numbers, got {arg!r}") from exc


def _specfn_function(name: str, p: ModelParams, periods: str | None) -> Callable:
    om2 = _periods(periods if name == "S2" else None, (p.rho, p.lam))
    om3 = _periods(periods if name == "S3" else None, (p.rho, p.lam, 2 * math.pi))
    table = {
        "S2": lambda x: sf.double_sine(x, om2),
        "S3": lambda x: sf.triple_sine(x, om3),
        "varphi": lambda x: sf.varphi(x, p),
        "s": lambda x: sf.s_factor(x, p),
        "psi": lambda x: sf.psi_level0(x, p),
        "psi_generic": lambda x: sf.psi_generic(x, p),
        "E": lambda x: sf.e_lambda(x, p),
        "h": lambda x: sf.h_factor(x, p),
    }
    return table[name]


def cmd_specfn(args) -> int:
    cfg = load_config(args.config) if args.config else None
    p = cfg.p if cfg else ModelParams(args.n, args.rho)
    if args.periods and args.fn in ("S2", "S3"):
        need = 2 if args.fn == "S2" else 3
        if len(args.periods.split(",")) != need:
            raise ConfigInvalid(f"{args.fn} needs {need} periods")
    f = _specfn_function(args.fn, p, args.periods)
    x = _grid(args.grid)
    z = x + 1j * args.im
    vals = np.empty(z.size, dtype=complex)
    for i, zi in enumerate(z):
        try:
            vals[i] = complex(f(zi))
        except PoleOrZero:
            vals[i] = complex(math.nan, math.nan)
    buf = io.StringIO()
    head = _header(None, None, {}, "specfn")
    buf.write(f"# tool=qkz version={head['version']} fn={args.fn} n={p.n} rho={p.rho!r} im={args.im!r}")
    buf.write(f" exponent={CONVENTIONS['exponent']} measure={CONVENTIONS['measure']}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "re", "im"])
    for xi, v in zip(x, vals):
        w.writerow([repr(float(xi)), repr(float(v.real)), repr(float(v.imag))])
    _emit(buf.getvalue(), args.out)
    return EXIT_CODES["ok"]


def cmd_rmat(args) -> int:
    cfg = load_config(args.config) if args.config else None
    p = cfg.p if cfg else ModelParams(args.n, args.rho)
    b1, b2 = _complex_arg(args.b1), _complex_arg(args.b2)
    make = r_modified if args.variant == "modified" else rbar
    R = make(b1, b2, p)
    n = p.n
    entries = {
        f"{j1}{k1},{j2}{k2}": R.entries[j1 * n + k1, j2 * n + k2]
        for j1 in range(n) for k1 in range(n) for j2 in range(n) for k2 in range(n)
        if R.entries[j1 * n + k1, j2 * n + k2] != 0
    }
    result: dict = {"variant": args.variant, "b1": b1, "b2": b2, "entries": entries}
    if args.b3 is not None:
        result["ybe_residual"] = ybe_residual(b1, b2, _complex_arg(args.b3), p, modified=args.variant == "modified")
    result["inversion_residual"] = inversion_residual(b1, b2, p, modified=args.variant == "modified")
    head = _header(None, None, {}, "rmat")
    head["model"] = {"n": p.n, "rho": p.rho, "lambda": p.lam}
    _emit(dumps({"header": head, "result": result}), args.out)
    return EXIT_CODES["ok"]


def cmd_forms(args) -> int:
    cfg = load_config(args.config)
    wp = cfg.wp
    result = {
        "nu_full": list(wp.full),
        "weight": list(wp.weight),
        "dimension": wp.dimension,
        "weyl_positive": wp.weyl_positive,
        "min_tail_slope": min_tail_slope(wp),
        "witness": convergence_witness(wp),
        "assignments": [
            {"J": list(a.J), "nested_sets": [list(s) for s in a.nested_sets]} for a in enumerate_assignments(wp)
        ],
    }
    _emit(dumps({"header": _header(cfg, cfg.seed, {}, "forms"), "result": result}), args.out)
    return EXIT_CODES["ok"]


def cmd_pair(args) -> int:
    cfg = load_config(args.config)
    blk = cfg.block("pair")
    default_J = [a.J for a in enumerate_assignments(cfg.wp)][0]
    wJ = _check_spec(_form_spec(blk.get("wJ", list(default_J)), "pair.wJ"), cfg, "pair.wJ")
    WJ = _check_spec(_form_spec(blk.get("WJ", list(default_J)), "pair.WJ"), cfg, "pair.WJ")
    eps = _positive(args.eps if args.eps is not None else blk.get("eps", 1e-6), "pair.eps", 1.0)
    mode = blk.get("mode", "reduced")
    if mode not in ("reduced", "w"):
        raise ConfigInvalid("pair.mode must be 'reduced' or 'w'")
    offset = _complex(blk.get("offset", 0.0), "pair.offset")
    leg = blk.get("leg")
    if leg is not None and (not isinstance(leg, int) or not 1 <= leg <= cfg.wp.N):
        raise ConfigInvalid(f"pair.leg must be in 1..{cfg.wp.N}")
    plan = build_contours(cfg.wp, [b.real for b in cfg.betas], cfg.p, eps)
    if offset:
        res = shifted_pair(wJ, WJ, cfg.betas, plan, cfg.p, offset, leg, wp=cfg.wp, mode=mode)
    else:
        res = pair(wJ, WJ, cfg.betas, plan, cfg.p, wp=cfg.wp, mode=mode)
    out = {"header": _header(cfg, cfg.seed, {"eps": eps}, "pair"), "result": res.to_json()}
    out["result"]["offset"] = offset
    out["result"]["leg"] = leg if leg is not None else cfg.wp.N
    _emit(dumps(out), args.out)
    return EXIT_CODES["ok"]


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    blk = cfg.block("solve")
    W = _check_spec(_form_spec(blk.get("W", list(enumerate_assignments(cfg.wp)[0].J)), "solve.W"), cfg, "solve.W")
    eps = _positive(args.eps if args.eps is not None else blk.get("eps", 1e-6), "solve.eps", 1.0)
    sol = solve(cfg.wp, cfg.betas, W, cfg.p, eps, jobs=_jobs(args.jobs, cfg))
    result = {
        "weight": list(sol.weight),
        "W": [[c, list(J)] for c, J in sol.W_choice],
        "components": {J: r.to_json() for J, r in sol.components.items()},
        "max_error": sol.max_error(),
    }
    _emit(dumps({"header": _header(cfg, cfg.seed, {"eps": eps}, "solve"), "result": result}), args.out)
    return EXIT_CODES["ok"]


def _verify_reports(cfg: RunConfig, checks: Sequence[str], tol: float | None, seed: int, jobs: int) -> tuple[list, dict]:
    v = cfg.block("verify")
    p, wp = cfg.p, cfg.wp
    W = _check_spec(_form_spec(v.get("W", list(enumerate_assignments(wp)[0].J)), "verify.W"), cfg, "verify.W")
    sets = v.get("beta_sets", [list(cfg.betas)])
    if not isinstance(sets, list) or not sets:
        raise ConfigInvalid("verify.beta_sets must be a non-empty list")
    beta_sets = []
    for s in sets:
        if not isinstance(s, list) or len(s) != wp.N:
            raise ConfigInvalid(f"verify.beta_sets entries must have {wp.N} values")
        bs = tuple(_complex(b, "verify.beta_sets").real for b in s)
        beta_sets.append(bs)
    default_tol = 1e-4 if wp.N <= 2 else 1e-3
    tol = float(tol if tol is not None else v.get("tol", default_tol))
    l1 = dict(v.get("lemma1", {}))
    l2 = dict(v.get("lemma2", {}))
    qk = dict(v.get("qkz", {}))
    cv = dict(v.get("convergence", {}))
    tols = {"lemma1": 1e-9, "lemma2": tol, "qkz": tol, "decay": 1e-2,
            "lemma2_eps": float(l2.get("eps", 1e-8)), "qkz_eps": float(qk.get("eps", 1e-6))}
    reports = []
    if "lemma1" in checks:
        reports.append(check_lemma1(p.n, trials=int(l1.get("trials", 20)), rho=float(l1.get("rho", p.rho)), seed=seed))
        reports.append(check_skew_annihilation(p.n, rho=p.rho, seed=seed))
    if "lemma2" in checks:
        reports.append(check_w_shift_sign(ns=(p.n,), Ns=tuple(range(1, min(wp.N, 3) + 1)), rho=p.rho, seed=seed))
        reports.append(check_varphi_shift(p, seed=seed))
        for bs in beta_sets:
            for a in enumerate_assignments(wp):
                reports.append(check_lemma2(wp, bs, a.J, W, p, eps=tols["lemma2_eps"], tol=tol))
    if "qkz" in checks:
        rs = qk.get("r", list(range(1, wp.N + 1)))
        rs = [rs] if isinstance(rs, int) else list(rs)
        for bs in beta_sets:
            for r in rs:
                if not isinstance(r, int) or not 1 <= r <= wp.N:
                    raise ConfigInvalid(f"verify.qkz.r entries must lie in 1..{wp.N}")
                reports.append(qkz_residual(wp, bs, W, p, r=r, eps=tols["qkz_eps"], tol=tol, jobs=jobs))
            if wp.N == 2:
                reports.append(check_solution_exchange(bs, W, p, eps=tols["qkz_eps"], tol=tol))
    if "convergence" in checks:
        reports.append(check_convergence_condition(int(cv.get("n_max", 4)), int(cv.get("N_max", 5))))
        if wp.dimension == 1:
            reports.append(fit_decay_rate(p, wp, W[0][1], W[0][1], beta_sets[0]))
    return reports, tols


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    checks = ["lemma1", "lemma2", "qkz", "convergence"] if args.check == "all" else [args.check]
    reports, tols = _verify_reports(cfg, checks, args.tol, seed, _jobs(args.jobs, cfg))
    ok = all(r["pass"] for r in reports)
    out = {
        "header": _header(cfg, seed, tols, "verify"),
        "checks": checks,
        "pass": ok,
        "reports": reports,
    }
    _emit(dumps(out), args.out)
    return EXIT_CODES["ok"] if ok else EXIT_CODES["check_failed"]


def _complex_arg(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ConfigInvalid(f"cannot parse {text!r} as a number") from exc


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qkz", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"qkz {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, config_required=False):
        sp.add_argument("--config", default=None if not config_required else "n2",
                        help=f"JSON config file or bundled name ({', '.join(BUNDLED)}); default n2")
        sp.add_argument("--out", help="write the output to this file instead of stdout")

    sp = sub.add_parser("specfn", help="tabulate a special function on a horizontal line (CSV)")
    sp.add_argument("--fn", required=True, choices=["S2", "S3", "varphi", "s", "psi", "psi_generic", "E", "h"])
    sp.add_argument("--grid", required=True, help="start:stop:step along the real direction")
    sp.add_argument("--im", type=float, default=0.0, help="imaginary part of the line")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--rho", type=float, default=2.0)
    sp.add_argument("--periods", help="comma-separated periods for S2/S3")
    common(sp)
    sp.set_defaults(func=cmd_specfn)

    sp = sub.add_parser("rmat", help="R-matrix entries and algebraic residuals (JSON)")
    sp.add_argument("--b1", required=True)
    sp.add_argument("--b2", required=True)
    sp.add_argument("--b3", help="third spectral parameter for the Yang-Baxter residual")
    sp.add_argument("--variant", choices=["modified", "rbar"], default="modified")
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--rho", type=float, default=2.0)
    common(sp)
    sp.set_defaults(func=cmd_rmat)

    sp = sub.add_parser("forms", help="assignments and convergence data of the profile (JSON)")
    common(sp, True)
    sp.set_defaults(func=cmd_forms)

    sp = sub.add_parser("pair", help="one pairing value (JSON)")
    sp.add_argument("--eps", type=float)
    common(sp, True)
    sp.set_defaults(func=cmd_pair)

    sp = sub.add_parser("solve", help="all components of the solution vector (JSON)")
    sp.add_argument("--eps", type=float)
    sp.add_argument("--jobs", type=int)
    common(sp, True)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="run checks; exit 0 iff all pass (JSON report)")
    sp.add_argument("--check", choices=["lemma1", "lemma2", "qkz", "convergence", "all"], default="all")
    sp.add_argument("--tol", type=float, help="relative tolerance for the integrated identities")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--jobs", type=int)
    common(sp, True)
    sp.set_defaults(func=cmd_verify)
    return ap


def _join_negative_values(argv: list[str]) -> list[str]:
    # "--grid -5:5:0.1" would otherwise be read as an option
    out: list[str] = []
    it = iter(argv)
    for a in it:
        if a in ("--grid", "--b1", "--b2", "--b3"):
            nxt = next(it, None)
            out.append(a if nxt is None else f"{a}={nxt}")
        else:
            out.append(a)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except QkzError as exc:
        sys.stderr.write(f"qkz: {type(exc).__name__}: {exc}\n")
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
