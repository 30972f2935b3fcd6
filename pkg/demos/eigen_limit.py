"""Heat flow with projection onto the unit sphere converges to the first eigenpair.

With a = 0 the non-local multiplier reduces to the Dirichlet energy, and the
normalized flow is the classical inverse-power iteration in continuous time.
The limiting multiplier should match the discrete eigenvalue 4/h^2 sin^2(pi h/2)
to round-off, and those eigenvalues approach pi^2 at second order.
"""
import math

import numpy as np

from nonlocal_logistic import (
    DomainSpec,
    InitialSpec,
    SolverConfig,
    build_grid,
    build_initial,
    discrete_eigenvalue_1d,
    make_params,
    run_to_steady,
)


def main():
    previous = None
    for cells in (32, 64, 128):
        grid = build_grid(DomainSpec(dim=1, extent=1.0, n=cells - 1))
        params = make_params(grid, 3.0, np.zeros(grid.size))
        g = build_initial(InitialSpec("gaussian-bump", center=(0.35,), width=0.1), grid)
        ss = run_to_steady(grid, g, params, SolverConfig(dt=1e-3, t_end=20.0),
                           steady_tol=1e-9, t_max=20.0)
        mu = discrete_eigenvalue_1d(cells - 1)
        err = abs(ss.lambda_inf - math.pi**2)
        order = "" if previous is None else f"  order {math.log2(previous / err):.3f}"
        print(f"N={cells:4d}  t={ss.t_reached:.3f}  lambda={ss.lambda_inf:.12f}  "
              f"|lambda-mu1|={abs(ss.lambda_inf - mu):.1e}  |lambda-pi^2|={err:.3e}{order}")
        previous = err


if __name__ == "__main__":
    main()
