"""Spectral-vs-grid moment error as a function of Hermite order M and wavenumber.

The truncated Hermite system resolves free streaming only while k(2 pi/L)
stays moderate; this sweep shows where a given M stops agreeing with the
velocity-grid oracle.
"""

import argparse
import math

from bgkmix.cli import PRESETS, RunConfig, apply_settings
from bgkmix.grid_oracle import compare, default_grids
from bgkmix.spectral_galerkin import random_field


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--preset", default="asymmetric", choices=sorted(PRESETS))
    ap.add_argument("--L", type=float, default=2 * math.pi)
    ap.add_argument("--orders", type=int, nargs="+", default=[8, 16, 24, 40])
    ap.add_argument("--modes", type=int, nargs="+", default=[1, 2, 4, 6, 8])
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--n-v", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    p = apply_settings(RunConfig(), PRESETS[args.preset]).params
    p = type(p)(**{**p.as_dict(), "L": args.L})
    grids = default_grids(p, args.n_v)
    K = max(args.modes)
    print(f"L = {args.L:.4f}, t = {args.t}, N_v = {args.n_v}")
    print("   M " + "".join(f"  k={k} (kappa={2 * math.pi * k / args.L:.2f})" for k in args.modes))
    for M in args.orders:
        fld = random_field(p, M, K, seed=args.seed, m_max=min(7, M), k_max=K)
        errs = [compare(fld, p, k, args.t, grids).moment_error for k in args.modes]
        print(f"{M:4d} " + "".join(f"  {e:>20.2e}" for e in errs))


if __name__ == "__main__":
    main()
