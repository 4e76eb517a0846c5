"""Modulus sweep for explicit (sigma, theta) with the fitted slope per rho.

Usage: python scripts/modulus_sweep.py --sigma 0.1 --theta 1.5 --rho 1,2,inf --j 6..16 [--csv out.csv]
"""
import argparse
import math
import sys

from psharp.besov import fit_exponent, modulus_sweep, predicted_exponent, write_samples_csv
from psharp.cli import parse_int_list
from psharp.construction import BumpParams
from psharp.errors import OutOfValidity
from psharp.harness import parse_real


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, required=True)
    ap.add_argument("--theta", type=float, required=True)
    ap.add_argument("--rho", default="1,2,inf")
    ap.add_argument("--j", default="6..16", help="h = 2^-j")
    ap.add_argument("--block-factor", type=float, default=16)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--csv")
    args = ap.parse_args(argv)
    params = BumpParams(args.sigma, args.theta)
    rhos = [parse_real(t) for t in args.rho.split(",")]
    hs = [2.0 ** -j for j in parse_int_list(args.j)]
    samples = modulus_sweep(params, rhos, hs, workers=args.workers, block_factor=args.block_factor)
    if args.csv:
        write_samples_csv(samples, args.csv)
    for rho in rhos:
        fit = fit_exponent([s for s in samples if s.rho == rho])
        try:
            pred = f"{predicted_exponent(rho, params):.6f}"
        except OutOfValidity:
            pred = "n/a"
        rho_txt = "inf" if math.isinf(rho) else f"{rho:g}"
        print(f"rho={rho_txt:>4}  slope={fit.slope:.6f}  predicted={pred}  residual={fit.residual:.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
