"""Simulate default times from a solved barrier and compare with the target law."""
import numpy as np

from ifpt import (GaussianDensity, IfptProblem, McConfig, build_fejer, empirical_survival,
                  make_exponential, make_grid, sample_default_times, solve_barrier, survival_mc)

L, NU = 16.0, 0.25


def main():
    density = GaussianDensity(0.0, 0.25)
    kernel = build_fejer(64, L)
    problem = IfptProblem(make_exponential(NU), density, 1.0, kernel, make_grid(1024, L),
                          dt=1 / 64, T=8.0)
    sol = solve_barrier(problem)

    cfg = McConfig(paths=50_000, dt_sim=1 / 256, seed=2024)
    est = survival_mc(sol, density, 1.0, kernel, 8.0, cfg)
    taus = sample_default_times(sol, density, 1.0, kernel, 8.0, cfg)
    t = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    emp = empirical_survival(taus, t)
    print(f"{'t':>5} {'target':>9} {'E[exp(-Lambda)]':>16} {'se':>9} {'P(tau > t)':>11}")
    for ti, e in zip(t, emp):
        S, se = est.at(ti)
        print(f"{ti:5.1f} {np.exp(-NU * ti):9.5f} {S:16.5f} {se:9.5f} {e:11.5f}")
    # The smoothed estimator has visibly smaller standard errors than the
    # indicator frequencies in the last column would.
    print(f"censored at T: {taus.censored.mean():.4f} of {taus.tau.size} paths")


if __name__ == "__main__":
    main()
