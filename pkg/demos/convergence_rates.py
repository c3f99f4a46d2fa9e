"""How fast the estimator bracket closes, and what sets the speed.

The width q_upper - q_lower is driven by the chance of two barrier
events landing in the same interval.  That chance, and therefore the
decay law, depends on the geometry:

* distinct barriers (table2): both assets must cross in the same
  interval, which dies off exponentially in M;
* independent assets (table3_rho0): the width falls like a power of M
  with slope near -2;
* perfectly correlated assets with equal spots (table3_rho1): the two
  crossings are the same event, slope near -1/2;
* perfectly correlated but asymmetric spots (fig5): one barrier shields
  the other and the rate flips back to exponential.

Run:  python demos/convergence_rates.py   (about a minute)
"""

from __future__ import annotations

from bridgebound import SweepSpec, fit_convergence, run_sweep


def sweep(config: str, m_values: tuple[int, ...], n_paths: int):
    return run_sweep(
        SweepSpec(config=config, m_values=m_values, n_paths=n_paths, seed=0)
    )


def main() -> None:
    print("fitting bracket-width decay laws\n")

    reports = sweep("table2", (1, 2, 3, 4), 400_000)
    fit = fit_convergence(reports, "exponential")
    print(
        f"table2        exponential  slope {fit.slope:+.3f}  r2 {fit.r_squared:.4f}"
        f"  (points used: {fit.m_used})"
    )

    # the quadratic decay buries M = 16 in noise unless N is generous
    reports = sweep("table3_rho0", (4, 8, 16), 4_000_000)
    fit = fit_convergence(reports, "power")
    print(
        f"table3_rho0   power        slope {fit.slope:+.3f}  r2 {fit.r_squared:.4f}"
        f"  (points used: {fit.m_used})"
    )

    reports = sweep("table3_rho1", (4, 8, 16, 32, 64), 200_000)
    fit = fit_convergence(reports, "power")
    print(
        f"table3_rho1   power        slope {fit.slope:+.3f}  r2 {fit.r_squared:.4f}"
        f"  (points used: {fit.m_used})"
    )

    reports = sweep("fig5", (1, 2, 3, 4, 5), 400_000)
    exp_fit = fit_convergence(reports, "exponential")
    pow_fit = fit_convergence(reports, "power")
    print(
        f"fig5          exponential  slope {exp_fit.slope:+.3f}  r2 {exp_fit.r_squared:.4f}"
    )
    print(
        f"fig5          power        slope {pow_fit.slope:+.3f}  r2 {pow_fit.r_squared:.4f}"
    )
    winner = "exponential" if exp_fit.r_squared > pow_fit.r_squared else "power"
    print(f"\nasymmetric spots at rho = 1: {winner} decay fits better")


if __name__ == "__main__":
    main()
