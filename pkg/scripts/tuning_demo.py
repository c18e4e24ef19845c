"""Regularization grid search on data from a known stable quadratic model.

Prints the candidate table (training error, growth constraint, divergence)
and shows the growth test rejecting a deliberately destabilized model.

    OPINF_THREADS=4 python scripts/tuning_demo.py --r 8
"""

import argparse
import time

import numpy as np

from liftlearn import opinf, rom
from liftlearn.tuning import RegularizationPlan, growth_constraint, tune


def stable_model(r, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    A = Q @ np.diag(-rng.uniform(1, 3, r)) @ Q.T + 0.3 * rng.standard_normal((r, r))
    H = 0.1 * rng.standard_normal((r, r * (r + 1) // 2))
    form = opinf.ModelForm(True, True, True, 1)
    return opinf.ReducedModel(r, form, A=A, H=H, G=0.1 * rng.standard_normal(r),
                              B=rng.standard_normal((r, 1)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--csv", help="write the candidate ledger here")
    args = ap.parse_args()

    true = stable_model(args.r, args.seed)
    forcing = rom.ForcingSignal("sinusoid", 1.0, 0.7)
    x0 = np.random.default_rng(args.seed + 1).standard_normal(args.r)
    tr = rom.integrate(true, x0, 0.0, 6.0, 0.005, "rk4", forcing, save_every=4)
    S, t = tr.coefficients, tr.times
    Sd = np.column_stack([rom.rom_rhs(true, S[:, k], t[k], forcing) for k in range(t.size)])

    plan = RegularizationPlan(6.0, 7.0, (1e-14, 1e-2), args.count, (1e-14, 1e-2), args.count)
    start = time.perf_counter()
    result = tune(plan, S, Sd, t, true.form, forcing, "rk4", substeps=4)
    print(f"{len(result.records)} candidates in {time.perf_counter() - start:.2f}s")
    print(f"{'gamma1':>9} {'gamma2':>9} {'train err':>10} {'feasible':>9}")
    for c in result.records:
        print(f"{c.gamma1:>9.0e} {c.gamma2:>9.0e} {c.training_error:>10.2e} "
              f"{str(c.constraint_pass):>9}")
    print("chosen:", result.chosen)
    if args.csv:
        result.write_csv(args.csv)

    bad = opinf.ReducedModel(args.r, true.form, A=true.A + 5 * np.eye(args.r), H=true.H,
                             G=true.G, B=true.B)
    trial = rom.integrate(bad, S[:, 0], 0.0, 7.0, 0.005, "rk4", forcing, save_every=4)
    print("destabilized model passes growth test:", growth_constraint(trial, S))


if __name__ == "__main__":
    main()
