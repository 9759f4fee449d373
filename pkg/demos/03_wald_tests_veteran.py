"""Robust Wald-type tests on the veteran trial.

Two published analyses:

1. Exponentiality of arm B (shape = 1, scale free).  The likelihood-based
   test (tuning 0) rejects because three outliers drag the shape estimate
   down; the robust tests stabilize above tuning ~0.3.
2. One-sided comparison of the arm shapes (is arm A's shape larger?).  The
   classical test calls the difference significant; the robust tests
   attribute it to the outliers.
"""

from robustsurv import (
    FitConfig,
    LinearRestriction,
    LinearTwoSampleRestriction,
    WEIBULL,
    datasets,
    fit,
    fit_grid,
    one_sided_wald,
    wald_statistic,
)

GRID = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]


def main():
    arms = datasets.load_veteran()

    print("H0: shape = 1 on arm B (exponentiality), p-value vs tuning constant")
    exponentiality = LinearRestriction.component(1, 1.0, 2, name="shape")
    for result in fit_grid(arms["B"], WEIBULL, GRID):
        report = wald_statistic(result, exponentiality)
        flag = "reject" if report.p_value < 0.05 else "      "
        print(f"  alpha={result.alpha:3.1f}  p={report.p_value:7.4f}  {flag}"
              f"   shape_hat={result.theta_hat[1]:.3f}")

    print("\nH0: shape_A = shape_B vs H1: shape_A > shape_B (one-sided)")
    shape_eq = LinearTwoSampleRestriction.component_equal(1, 2, name="shape")
    for alpha in (0.0, 0.2, 0.5, 1.0):
        fit_a = fit(arms["A"], WEIBULL, FitConfig(alpha=alpha))
        fit_b = fit(arms["B"], WEIBULL, FitConfig(alpha=alpha))
        report = one_sided_wald(fit_a, fit_b, shape_eq)
        print(f"  alpha={alpha:3.1f}  statistic={report.statistic:7.3f}  "
              f"p={report.p_value:7.4f}")
    print("\nthe tuning-0 rejection evaporates once the outliers are downweighted")


if __name__ == "__main__":
    main()
