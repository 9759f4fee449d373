"""Product-limit estimation and the log-log hazard diagnostic.

Walks the bundled veteran lung-cancer trial: fits the product-limit CDF per
arm, prints the censoring structure, and writes the (log time, log cumulative
hazard) pairs whose straight-line shape motivates the Weibull model for these
data.  Feed the CSVs to any plotting tool.
"""

import os

import numpy as np

from robustsurv import datasets, kmpl_fit

OUT = os.path.join(os.path.dirname(__file__), "output")


def main():
    os.makedirs(OUT, exist_ok=True)
    arms = datasets.load_veteran()
    for name, sample in arms.items():
        fit = kmpl_fit(sample)
        print(f"arm {name}: n={sample.n}, events={sample.n_events}, "
              f"distinct event times={fit.support.size}, "
              f"defective tail mass={fit.residual_mass:.4f}")
        path = os.path.join(OUT, f"kmpl_{name}.csv")
        fit.write_csv(path)
        print(f"  wrote {path}")

        # the straight-line check behind the Weibull choice: regress
        # log(-log S) on log t and report the fit quality
        mask = (fit.cdf_values > 0) & (fit.cdf_values < 1)
        x = np.log(fit.support[mask])
        y = np.log(-np.log1p(-fit.cdf_values[mask]))
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        print(f"  log-log hazard line: slope (shape) ~ {slope:.3f}, "
              f"scale ~ {np.exp(-intercept / slope):.1f} days, "
              f"rms residual {np.sqrt(np.mean(resid**2)):.3f}")


if __name__ == "__main__":
    main()
