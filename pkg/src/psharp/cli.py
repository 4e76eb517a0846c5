"""Command-line entry point: ``psharp {eval,norms,modulus,experiment,classify}``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from .besov import modulus_sweep, write_samples_csv
from .construction import (DIVERGENT, BumpParams, Phase, _locate_arrays, _window_args, eval_u,
                           eval_v, eval_v_prime, eval_w, eval_w_prime, w_lp_norm, w_prime_lp_norm)
from .errors import PsharpError
from .harness import (ExperimentConfig, SpaceKind, case_table, classify_A, classify_u, fmt_num,
                      parse_real, render_case_table, render_w1_table, run_experiment,
                      savare_compare, w1_table)
from .oracles import relative_error, w_lp_norm_oracle, w_prime_lp_norm_oracle
from .radial import RadialFieldSpec, eval_A, eval_f_strong

# flag name -> config key; every config key is accepted under its own name
CONFIG_FLAGS = ("p", "lambda", "mu", "epsilon", "mode", "rho_list", "h_exponents", "d_list",
                "tolerances", "seed", "theta", "workers", "block_factor", "n_split")


def _split(text: str) -> list[str]:
    return [t for t in text.replace(" ", "").split(",") if t]


def parse_int_list(text: str) -> list[int]:
    """``"6..14"`` (inclusive) or ``"6,8,10"``."""
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in _split(text)]


def parse_tolerances(text: str) -> dict:
    """JSON object or ``key=value`` pairs separated by commas."""
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    out = {}
    for item in _split(text):
        key, _, value = item.partition("=")
        if not _:
            raise argparse.ArgumentTypeError(f"expected key=value, got {item!r}")
        out[key] = float(value)
    return out


def _add_config_flags(ap: argparse.ArgumentParser):
    g = ap.add_argument_group("configuration (overrides keys of --config)")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--p", type=float)
    g.add_argument("--lambda", dest="lambda_", type=float)
    g.add_argument("--mu", type=parse_real, help="number or inf")
    g.add_argument("--epsilon", type=float)
    g.add_argument("--mode", choices=("main", "L"))
    g.add_argument("--rho_list", "--rho-list", type=lambda s: [parse_real(t) for t in _split(s)],
                   help="comma separated, e.g. 1,2,4,inf")
    g.add_argument("--h_exponents", "--h-exponents", type=parse_int_list,
                   help="j values for h = 2^-j, e.g. 6..14 or 6,8,10")
    g.add_argument("--d_list", "--d-list", type=parse_int_list)
    g.add_argument("--tolerances", type=parse_tolerances,
                   help='JSON object or key=value list, e.g. slope=0.05')
    g.add_argument("--seed", type=int)
    g.add_argument("--theta", type=float)
    g.add_argument("--workers", type=int)
    g.add_argument("--block_factor", "--block-factor", type=float)
    g.add_argument("--n_split", "--n-split", type=int)


def build_config(args) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            data = json.load(fh)
    for key in CONFIG_FLAGS:
        value = getattr(args, "lambda_" if key == "lambda" else key, None)
        if value is None:
            continue
        if key == "tolerances":
            value = {**data.get("tolerances", {}), **value}
        data[key] = value
    return ExperimentConfig.from_dict(data)


def _bump_from_args(args) -> BumpParams:
    """Explicit ``--sigma/--theta`` or the selected bump (``--bump sigma|dual``) of the config."""
    if args.sigma is not None or args.bump_theta is not None:
        if args.sigma is None or args.bump_theta is None:
            raise PsharpError("--sigma and --bump-theta must be given together")
        return BumpParams(args.sigma, args.bump_theta)
    cfg = build_config(args).select()
    return cfg.dual_bump() if args.bump == "dual" else cfg.bump()


def _add_bump_flags(ap):
    ap.add_argument("--sigma", type=float, help="bump exponent (with --bump-theta)")
    ap.add_argument("--bump-theta", dest="bump_theta", type=float,
                    help="bump width exponent (with --sigma)")
    ap.add_argument("--bump", choices=("sigma", "dual"), default="sigma",
                    help="which bump of the selected configuration")


def _note_saturation(params: BumpParams, xi) -> None:
    """Tell the user when a value comes from the truncated part of the bump train."""
    phase = _locate_arrays(np.atleast_1d(np.asarray(xi, dtype=float)), params)[1]
    if np.any(phase == Phase.Saturated):
        print(f"note: blocks >= {params.n_cap} are truncated; values there are set to 0 "
              f"(true heights <= {params.tail_height_bound:.3g})", file=sys.stderr)


def _g17(x: float) -> str:
    x = float(x) + 0.0  # no negative zero
    return ("inf" if x > 0 else "-inf") if math.isinf(x) else format(x, ".17g")


# ---------------------------------------------------------------------------
# subcommands

def cmd_eval(args) -> int:
    field = args.field
    if field in ("A", "f"):
        cfg = build_config(args)
        sel = cfg.select()
        bump = BumpParams(args.sigma, args.bump_theta) if args.sigma is not None else sel.bump()
        d = args.d
        spec = RadialFieldSpec(bump, cfg.p, d)
        for point in args.points:
            coords = [float(t) for t in _split(point)]
            _note_saturation(spec.dual_bump, _window_args(math.hypot(*coords), spec.dual_bump))
            if field == "A":
                if len(coords) != d:
                    raise PsharpError(f"point {point!r} must have {d} coordinates")
                val = eval_A(np.array(coords), spec)
                print(point, " ".join(_g17(v) for v in np.atleast_1d(val)))
            else:
                print(point, _g17(eval_f_strong(coords[0], spec)))
        return 0
    params = _bump_from_args(args)
    fn = {"w": eval_w, "w_prime": lambda x, p: eval_w_prime(x, p),
          "v": eval_v, "v_prime": lambda x, p: eval_v_prime(x, p), "u": eval_u}[field]
    for point in args.points:
        x = float(point)
        _note_saturation(params, x if field.startswith("w") else _window_args(x, params))
        print(point, _g17(fn(x, params)))
    return 0


def cmd_norms(args) -> int:
    if args.sigma is not None:
        bumps = [("given", _bump_from_args(args))]
        rho_list = build_config(args).rho_list
    else:
        cfg = build_config(args)
        sel = cfg.select()
        bumps = [("sigma", sel.bump()), ("dual", sel.dual_bump())]
        rho_list = cfg.rho_list
    print(f"{'bump':>6} {'sigma':>10} {'rho':>5} {'norm':>6} {'closed form':>24} "
          f"{'oracle':>24} {'rel err':>9}")
    for label, params in bumps:
        for rho in rho_list:
            for name, closed_fn, oracle_fn in (("w", w_lp_norm, w_lp_norm_oracle),
                                               ("w'", w_prime_lp_norm, w_prime_lp_norm_oracle)):
                closed = closed_fn(rho, params)
                if closed is DIVERGENT:
                    c_txt, o_txt, e_txt = "divergent", "-", "-"
                elif math.isinf(rho):
                    c_txt, o_txt, e_txt = _g17(closed), "-", "-"
                else:
                    oracle = oracle_fn(rho, params)
                    c_txt, o_txt = _g17(closed), _g17(oracle)
                    e_txt = f"{relative_error(float(closed), oracle):.2e}"
                print(f"{label:>6} {params.sigma:>10.6g} {fmt_num(rho):>5} {name:>6} {c_txt:>24} "
                      f"{o_txt:>24} {e_txt:>9}")
    return 0


def cmd_modulus(args) -> int:
    cfg = build_config(args)
    params = _bump_from_args(args)
    samples = modulus_sweep(params, cfg.rho_list, cfg.h_list, workers=cfg.workers,
                            block_factor=cfg.block_factor)
    text = write_samples_csv(samples, args.output)
    if args.output is None:
        sys.stdout.write(text)
    return 0


def cmd_experiment(args) -> int:
    cfg = build_config(args)
    report = run_experiment(cfg, args.out)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(report.to_json())
    print(report.to_text())
    return 0 if report.passed else 1


def cmd_classify(args) -> int:
    cfg = build_config(args)
    sel = cfg.select()
    if args.rho is not None:
        q = args.q
        for case in (classify_u(args.rho, q, sel), classify_A(args.rho, q, sel)):
            name = "u" if case.space_kind is SpaceKind.SolutionU else "A"
            out = "(no exclusion)" if case.excluded is None else f"not in {case.excluded.render()}"
            print(f"{name}: row {case.row}: in {case.contained.render()}, {out}")
        return 0
    print(render_case_table(case_table(SpaceKind.SolutionU, sel), "membership of u"))
    print(render_case_table(case_table(SpaceKind.FieldA, sel), "membership of A"))
    print("shift comparison: " + savare_compare(sel.p, sel.lam, sel.epsilon).text)
    if sel.mode == "L":
        print(render_w1_table(w1_table(sel)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psharp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="pointwise values of w, w', v, v', u, A or f")
    p.add_argument("field", choices=("w", "w_prime", "v", "v_prime", "u", "A", "f"))
    p.add_argument("points", nargs="+", help="scalars; for A comma separated coordinates")
    p.add_argument("--d", type=int, default=1, help="dimension for A and f")
    _add_bump_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("norms", help="closed-form norms against quadrature oracles")
    _add_bump_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("modulus", help="modulus of smoothness sweep as CSV")
    _add_bump_flags(p)
    _add_config_flags(p)
    p.add_argument("--output", "-o", help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_modulus)

    p = sub.add_parser("experiment", help="full run with report; exit code 1 on failed checks")
    _add_config_flags(p)
    p.add_argument("--out", help="directory for CSV and report artifacts")
    p.add_argument("--json", help="write the JSON report here")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("classify", help="membership tables")
    _add_config_flags(p)
    p.add_argument("--rho", type=parse_real, help="classify a single integrability index")
    p.add_argument("--q", type=parse_real, default=math.inf)
    p.set_defaults(func=cmd_classify)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (PsharpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
