"""Divergence-tuned Weibull fits of the veteran trial arms.

Sweeps the robustness tuning constant from 0 (product-limit weighted
likelihood) to 1 and prints the fitted (scale, shape) with standard errors
from the censoring-free sandwich.  Arm B carries three large uncensored
outliers (999, 991, 587 days): watch its shape estimate climb from 0.76
toward 1 as the tuning constant grows, while the clean arm A barely moves.
"""

from robustsurv import WEIBULL, datasets, fit_grid

GRID = [0.0, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0]


def main():
    arms = datasets.load_veteran()
    for name in ("A", "B", "combined"):
        print(f"\narm {name}:")
        print(f"  {'alpha':>5s}  {'scale':>8s} {'(se)':>7s}  {'shape':>7s} {'(se)':>7s}")
        for result in fit_grid(arms[name], WEIBULL, GRID):
            se = result.se
            print(
                f"  {result.alpha:5.1f}  {result.theta_hat[0]:8.1f} "
                f"({se[0]:5.1f})  {result.theta_hat[1]:7.3f} ({se[1]:5.3f})"
            )


if __name__ == "__main__":
    main()
