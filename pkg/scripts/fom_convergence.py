"""Grid convergence of the finite-difference Burgers solver.

Integrates to steady state from the exact profile s = -2 nu b tanh(b x) and
reports the max-norm error; halving dx should divide it by about 4.
"""

import numpy as np

from liftlearn import fom


def main(nu=0.1, b=2.0, T=20.0):
    exact = lambda x: -2 * nu * b * np.tanh(b * x)  # noqa: E731
    prev = None
    for n in (17, 33, 65, 129):
        x = np.linspace(-1, 1, n)
        p = fom.FomProblem("viscous_burgers", n, nu, (-1.0, 1.0), (exact(-1.0), exact(1.0)),
                           exact(x))
        steps = int(np.ceil(T / (0.5 * fom.stable_dt(p))))
        traj = fom.solve(p, T, T / steps, save_every=steps)
        err = np.max(np.abs(traj.states[:, -1] - exact(x)))
        ratio = f"{prev / err:.3f}" if prev else "-"
        print(f"n={n:4d}  max error {err:.3e}  ratio {ratio}")
        prev = err


if __name__ == "__main__":
    main()
