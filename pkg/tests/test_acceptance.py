"""Acceptance suite.

One test per criterion; each prints a single PASS/FAIL line (plus the
numbers behind it) before asserting, so a red run still shows every
criterion's outcome.  Run with `pytest tests/test_acceptance.py -v -s`.

The heavy criteria are full 1000-replication Monte Carlo reproductions of
the published simulation study; expect a few minutes total on one core.
"""

import numpy as np
from scipy import integrate, optimize, special, stats

from robustsurv import (
    CensoredSample,
    EXPONENTIAL,
    ExperimentSpec,
    FamilySpec,
    FitConfig,
    LinearRestriction,
    LinearTwoSampleRestriction,
    SyntheticDesign,
    WEIBULL,
    c_hat,
    fit,
    if2_two_sample,
    if2_wald,
    if_estimator,
    kmpl_fit,
    lambda_model,
    mdpde_psi,
    noncentral_chi2_sf,
    noncentral_weights,
    one_sided_wald,
    pif,
    run_level_power,
    run_variance_ratio,
    sigma_model,
    simulate,
    two_sample_wald,
    wald_statistic,
)
from conftest import ks_distance_uniform

WEIBULL_TRUTH = (2.0, 5.0)
CENSORING_MEAN = 17.4
LEVEL = 0.05

H0_1 = ("H0_1 simple (2,5)", LinearRestriction.simple(WEIBULL_TRUTH))
H0_2 = ("H0_2 simple (2.2,2.3)", LinearRestriction.simple((2.2, 2.3)))
H0_3 = ("H0_3 shape=5", LinearRestriction.component(1, 5.0, 2, name="shape"))
H0_4 = ("H0_4 shape=2", LinearRestriction.component(1, 2.0, 2, name="shape"))


def announce(number, name, ok, detail):
    print(f"\n[ACCEPTANCE {number}] {name}: {'PASS' if ok else 'FAIL'}  ({detail})")


def rates_by(report):
    return {
        (row["alpha"], row["hypothesis"]): row["rejection_rate"]
        for row in report.rows
    }


def test_criterion_1_table2_pure_data():
    spec = ExperimentSpec(
        design=SyntheticDesign(
            lifetime=FamilySpec("weibull", WEIBULL_TRUTH),
            censoring_mean=CENSORING_MEAN,
            seed=101,
        ),
        n=100,
        replications=1000,
        alpha_grid=(0.0, 0.3, 1.0),
        hypotheses=(H0_1, H0_2, H0_4),
        level=LEVEL,
        kind="level_power",
    )
    report = run_level_power(spec)
    rates = rates_by(report)
    published_level = {0.0: 0.070, 0.3: 0.054, 1.0: 0.063}
    checks = []
    for alpha, target in published_level.items():
        got = rates[(alpha, H0_1[0])]
        checks.append((f"H0_1 a={alpha:g}: {got:.3f} vs {target:.3f}", abs(got - target) <= 0.03))
    for alpha in (0.0, 0.3, 1.0):
        for name in (H0_2[0], H0_4[0]):
            got = rates[(alpha, name)]
            checks.append((f"{name} a={alpha:g}: power {got:.3f}", got >= 0.99))
    ok = all(flag for _, flag in checks) and not report.invalid
    announce(1, "Table 2 pure-data reproduction", ok, "; ".join(c for c, _ in checks))
    assert ok


def test_criterion_2_table2_contaminated():
    spec = ExperimentSpec(
        design=SyntheticDesign(
            lifetime=FamilySpec("weibull", WEIBULL_TRUTH),
            censoring_mean=CENSORING_MEAN,
            contamination_fraction=0.05,
            contamination=FamilySpec("exp", (5.0,)),
            seed=102,
        ),
        n=100,
        replications=1000,
        alpha_grid=(0.0, 0.5),
        hypotheses=(H0_1, H0_3),
        level=LEVEL,
        kind="level_power",
    )
    report = run_level_power(spec)
    rates = rates_by(report)
    checks = [
        (
            f"H0_1 a=0 breakdown: {rates[(0.0, H0_1[0])]:.3f} >= 0.80 (paper 0.901)",
            rates[(0.0, H0_1[0])] >= 0.80,
        ),
        (
            f"H0_1 a=0.5 stability: {rates[(0.5, H0_1[0])]:.3f} vs 0.074",
            abs(rates[(0.5, H0_1[0])] - 0.074) <= 0.03,
        ),
        (
            f"H0_3 a=0 breakdown: {rates[(0.0, H0_3[0])]:.3f} >= 0.80 (paper 0.917)",
            rates[(0.0, H0_3[0])] >= 0.80,
        ),
        (
            f"H0_3 a=0.5 stability: {rates[(0.5, H0_3[0])]:.3f} vs 0.075",
            abs(rates[(0.5, H0_3[0])] - 0.075) <= 0.03,
        ),
    ]
    ok = all(flag for _, flag in checks) and not report.invalid
    announce(2, "Table 2 contaminated reproduction", ok, "; ".join(c for c, _ in checks))
    assert ok


def test_criterion_3_variance_ratio():
    spec = ExperimentSpec(
        design=SyntheticDesign(
            lifetime=FamilySpec("weibull", WEIBULL_TRUTH),
            censoring_mean=CENSORING_MEAN,
            seed=103,
        ),
        n=200,
        replications=1000,
        alpha_grid=(0.0, 0.5, 1.0),
        kind="variance_ratio",
    )
    report = run_variance_ratio(spec)
    checks = []
    for row in report.rows:
        label = f"a={row['alpha']:g} {row['parameter']}: R={row['ratio']:.3f}"
        checks.append((label, 0.75 <= row["ratio"] <= 1.3))
    ok = all(flag for _, flag in checks) and not report.invalid
    announce(3, "variance-ratio consistency at n=200", ok, "; ".join(c for c, _ in checks))
    assert ok


def test_criterion_4_closed_form_oracles():
    worst_psi = worst_lambda = worst_if = worst_if0 = 0.0
    for theta in (0.5, 1.0, 2.5):
        for alpha in (0.1, 0.3, 0.5, 1.0):
            t = np.geomspace(0.02, 30.0 * theta, 30)
            psi = mdpde_psi(EXPONENTIAL, [theta], alpha, t)[:, 0]
            psi_ref = (theta - t) / theta ** (alpha + 2) * np.exp(-alpha * t / theta) - (
                alpha / ((1 + alpha) ** 2 * theta ** (alpha + 1))
            )
            worst_psi = max(worst_psi, np.max(np.abs(psi - psi_ref) / (np.abs(psi_ref) + 1.0)))

            lam = lambda_model(EXPONENTIAL, [theta], alpha, method="quadrature")[0, 0]
            lam_ref = (1 + alpha**2) * (1 + alpha) ** -3 * theta ** -(alpha + 2)
            worst_lambda = max(worst_lambda, abs(lam - lam_ref) / lam_ref)

            iv = if_estimator(EXPONENTIAL, [theta], alpha, t)[:, 0]
            iv_ref = (1 + alpha) ** 3 / (1 + alpha**2) * (
                (theta - t) * np.exp(-alpha * t / theta)
                - alpha * theta / (1 + alpha) ** 2
            )
            worst_if = max(worst_if, np.max(np.abs(iv - iv_ref) / (np.abs(iv_ref) + 1.0)))
        t = np.geomspace(0.02, 30.0 * theta, 30)
        iv0 = if_estimator(EXPONENTIAL, [theta], 0.0, t)[:, 0]
        worst_if0 = max(worst_if0, np.max(np.abs(iv0 - (theta - t))))
    ok = worst_psi < 1e-8 and worst_lambda < 1e-8 and worst_if < 1e-8 and worst_if0 < 1e-12
    announce(
        4,
        "exponential closed-form oracle suite",
        ok,
        f"max rel err: psi {worst_psi:.2e}, lambda(quadrature) {worst_lambda:.2e}, "
        f"IF {worst_if:.2e}; alpha=0 IF abs err {worst_if0:.2e}",
    )
    assert ok


def test_criterion_5_amle_mle_reduction():
    rng = np.random.default_rng(2024)
    z_exp = rng.exponential(1.6, 800)
    exp_sample = CensoredSample(z_exp, np.ones(z_exp.size, dtype=np.int8))
    exp_fit = fit(exp_sample, EXPONENTIAL, FitConfig(alpha=0.0))
    exp_gap = abs(exp_fit.theta_hat[0] - z_exp.mean())

    z_wei = 2.0 * rng.weibull(5.0, 800)
    wei_sample = CensoredSample(z_wei, np.ones(z_wei.size, dtype=np.int8))
    wei_fit = fit(wei_sample, WEIBULL, FitConfig(alpha=0.0))
    oracle = optimize.minimize(
        lambda eta: -np.sum(WEIBULL.logpdf(np.exp(eta), z_wei)),
        np.log(wei_fit.theta_hat) + 0.03,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-12, "maxiter": 5000},
    )
    wei_gap = float(np.max(np.abs(wei_fit.theta_hat - np.exp(oracle.x))))

    km = kmpl_fit(wei_sample)
    ecdf = np.searchsorted(np.sort(z_wei), km.support, side="right") / z_wei.size
    km_gap = float(np.max(np.abs(km.cdf_values - ecdf)))

    ok = exp_gap < 1e-10 and wei_gap < 1e-6 and km_gap < 1e-12
    announce(
        5,
        "AMLE/MLE and KMPL/ECDF reduction on uncensored data",
        ok,
        f"exp |theta-mean|={exp_gap:.2e} (<1e-10), weibull |fit-MLE|={wei_gap:.2e} (<1e-6), "
        f"KMPL-ECDF sup={km_gap:.2e}",
    )
    assert ok


def test_criterion_6_null_calibration():
    design = SyntheticDesign(
        lifetime=FamilySpec("weibull", WEIBULL_TRUTH),
        censoring_mean=CENSORING_MEAN,
        seed=7200,
    )
    simple = LinearRestriction.simple(WEIBULL_TRUTH)
    homogeneity = LinearTwoSampleRestriction.homogeneity(2)
    n = 200
    checks = []
    for alpha in (0.0, 0.5):
        one_sample, two_sample = [], []
        for rep in range(1000):
            fit1 = fit(simulate(design, n, replication=rep), WEIBULL, FitConfig(alpha=alpha))
            if fit1.converged:
                one_sample.append(wald_statistic(fit1, simple).p_value)
            fit2 = fit(
                simulate(design, n, replication=50_000 + rep), WEIBULL, FitConfig(alpha=alpha)
            )
            if fit1.converged and fit2.converged:
                two_sample.append(two_sample_wald(fit1, fit2, homogeneity).p_value)
        ks1 = ks_distance_uniform(one_sample)
        ks2 = ks_distance_uniform(two_sample)
        checks.append((f"a={alpha:g}: one-sample KS={ks1:.4f}", ks1 < 0.06))
        checks.append((f"a={alpha:g}: two-sample KS={ks2:.4f}", ks2 < 0.06))
    ok = all(flag for _, flag in checks)
    announce(6, "null p-value uniformity (KS < 0.06)", ok, "; ".join(c for c, _ in checks))
    assert ok


def test_criterion_7_veteran_soft_reproduction(veteran):
    arm_a, arm_b = veteran["A"], veteran["B"]
    checks = []

    fit_a0 = fit(arm_a, WEIBULL, FitConfig(alpha=0.0))
    fit_a1 = fit(arm_a, WEIBULL, FitConfig(alpha=1.0))
    for label, fitted, target in (
        ("armA a=0", fit_a0, (123.0, 0.99)),
        ("armA a=1", fit_a1, (122.0, 0.97)),
    ):
        got = fitted.theta_hat
        close = abs(got[0] - target[0]) <= 3.0 and abs(got[1] - target[1]) <= 0.05
        checks.append(
            (f"{label}: ({got[0]:.1f},{got[1]:.3f}) vs {target} +-(3,0.05)", close)
        )

    shape_eq = LinearTwoSampleRestriction.component_equal(1, 2, name="shape")
    published = {0.2: 0.14, 0.5: 0.39, 1.0: 0.56}
    for alpha, target in published.items():
        report = one_sided_wald(
            fit(arm_a, WEIBULL, FitConfig(alpha=alpha)),
            fit(arm_b, WEIBULL, FitConfig(alpha=alpha)),
            shape_eq,
        )
        deviation = abs(report.p_value - target)
        checks.append(
            (
                f"one-sided b_A=b_B a={alpha:g}: p={report.p_value:.4f} vs {target:.2f} "
                f"(dev {deviation:.4f})",
                deviation <= 0.05,
            )
        )
    ok = all(flag for _, flag in checks)
    announce(
        7,
        "veteran trial soft reproduction",
        ok,
        "; ".join(c for c, _ in checks)
        + ("" if ok else " -- deviations reported, not masked (criterion flagged soft)"),
    )
    assert ok


def test_criterion_8_influence_property_suite():
    checks = []
    simple_exp = LinearRestriction.simple((1.0,))
    simple_wei = LinearRestriction.simple(WEIBULL_TRUTH)
    grid = np.geomspace(1e-3, 1e6, 1500)
    finer = np.geomspace(1e-3, 1e6, 3500)

    for family, theta0, restriction in (
        (EXPONENTIAL, (1.0,), simple_exp),
        (WEIBULL, WEIBULL_TRUTH, simple_wei),
    ):
        d = np.ones(family.dim)
        for alpha in (0.5, 1.0):
            sigma = sigma_model(family, theta0, alpha)
            sup_if = np.max(np.linalg.norm(if_estimator(family, theta0, alpha, grid), axis=1))
            sup_if_f = np.max(np.linalg.norm(if_estimator(family, theta0, alpha, finer), axis=1))
            sup_if2 = np.max(if2_wald(family, theta0, alpha, restriction, grid, sigma=sigma))
            sup_if2_f = np.max(if2_wald(family, theta0, alpha, restriction, finer, sigma=sigma))
            sup_pif = np.max(np.abs(pif(family, theta0, alpha, restriction, d, grid, sigma=sigma)))
            sup_pif_f = np.max(np.abs(pif(family, theta0, alpha, restriction, d, finer, sigma=sigma)))
            stable = (
                np.isfinite([sup_if, sup_if2, sup_pif]).all()
                and abs(sup_if_f - sup_if) <= 0.01 * sup_if
                and abs(sup_if2_f - sup_if2) <= 0.01 * sup_if2
                and abs(sup_pif_f - sup_pif) <= 0.01 * sup_pif
            )
            checks.append(
                (
                    f"{family.family_id} a={alpha:g}: sup IF {sup_if:.3g}, "
                    f"IF2 {sup_if2:.3g}, |PIF| {sup_pif:.3g} finite+grid-stable",
                    bool(stable),
                )
            )
        # alpha = 0: all three diverge along the grid
        tail = slice(-200, None)
        if_tail = np.linalg.norm(if_estimator(family, theta0, 0.0, grid), axis=1)[tail]
        sigma0 = sigma_model(family, theta0, 0.0)
        if2_tail = if2_wald(family, theta0, 0.0, restriction, grid, sigma=sigma0)[tail]
        pif_tail = np.abs(pif(family, theta0, 0.0, restriction, d, grid, sigma=sigma0))[tail]
        diverges = (
            np.all(np.diff(if_tail) > 0)
            and np.all(np.diff(if2_tail) > 0)
            and np.all(np.diff(pif_tail) > 0)
        )
        checks.append((f"{family.family_id} a=0: IF/IF2/PIF grow unboundedly", bool(diverges)))

    cancel = if2_two_sample(
        WEIBULL, WEIBULL_TRUTH, WEIBULL_TRUTH, 0.5,
        LinearTwoSampleRestriction.homogeneity(2), t1=3.0, t2=3.0,
    )
    checks.append((f"two-sample IF2 identical contamination = {cancel:.1e}", cancel == 0.0))

    norm_err = max(
        abs(noncentral_weights(s).sum() - 1.0) for s in (0.5, 5.0, 50.0)
    )
    checks.append((f"sum C_v = 1 to {norm_err:.1e}", norm_err < 1e-12))

    series_err = 0.0
    for df, ncp in ((1, 5.0), (2, 1.3), (3, 20.0)):
        q = special.chdtri(df, LEVEL)
        series = noncentral_chi2_sf(q, df, ncp)
        quadrature, _ = integrate.quad(
            lambda x: stats.ncx2.pdf(x, df, ncp), q, np.inf, epsabs=1e-13, epsrel=1e-13
        )
        series_err = max(series_err, abs(series - quadrature))
    checks.append((f"noncentral series vs quadrature {series_err:.1e}", series_err < 1e-8))

    ok = all(flag for _, flag in checks)
    announce(8, "influence property suite", ok, "; ".join(c for c, _ in checks))
    assert ok


def test_criterion_9_variance_estimator_oracle():
    theta0, alpha, n = 1.0, 0.3, 2000
    censoring_mean = 9.0
    design = SyntheticDesign(
        lifetime=FamilySpec("exp", (theta0,)), censoring_mean=censoring_mean, seed=904
    )

    # population transformation built from the known censoring law:
    # gamma0(z) = exp(z/9), gamma(z) = (exp(10z/9) - 1)/10,
    # dG_{Z,1} = e^{-10z/9} dz, dG_{Z,0} = (1/9) e^{-10z/9} dz, so the
    # phi*gamma0 weights against dG_{Z,1} collapse to phi(z) e^{-z} dz
    lam_total = 1.0 / theta0 + 1.0 / censoring_mean

    def phi(z):
        return mdpde_psi(EXPONENTIAL, [theta0], alpha, z)[:, 0]

    zgrid = np.linspace(1e-9, 60.0, 120_001)
    integrand_a = phi(zgrid) * np.exp(-zgrid / theta0)
    a_tail = integrate.cumulative_trapezoid(integrand_a[::-1], -zgrid[::-1], initial=0.0)[::-1]
    gamma_grid = (np.exp(lam_total * zgrid) - 1.0) / (lam_total * censoring_mean)
    b_prefix = integrate.cumulative_trapezoid(integrand_a * gamma_grid, zgrid, initial=0.0)

    def u_population(z, delta):
        a = np.interp(z, zgrid, a_tail)
        b = np.interp(z, zgrid, b_prefix)
        gamma0 = np.exp(z / censoring_mean)
        gamma = np.interp(z, zgrid, gamma_grid)
        gamma1 = np.exp(lam_total * z) * a
        gamma2 = gamma * a + b
        return phi(z) * gamma0 * delta + gamma1 * (1 - delta) - gamma2

    rng = np.random.default_rng(555)
    m = 400_000
    x = rng.exponential(theta0, m)
    c = rng.exponential(censoring_mean, m)
    z = np.minimum(x, c)
    delta = (x <= c).astype(float)
    u = u_population(z, delta)
    oracle_mc = float(np.mean(u**2))
    oracle_se = float(np.std(u**2) / np.sqrt(m))

    # deterministic cross-check of the same population integrals
    u1 = u_population(zgrid, np.ones_like(zgrid))
    u0 = u_population(zgrid, np.zeros_like(zgrid))
    density = np.exp(-lam_total * zgrid)
    oracle_quad = float(
        integrate.trapezoid((u1**2 + u0**2 / censoring_mean) * density, zgrid)
    )

    sample = simulate(design, n)
    fitted = fit(sample, EXPONENTIAL, FitConfig(alpha=alpha))
    c_value = c_hat(sample, lambda zz, th: mdpde_psi(EXPONENTIAL, th, alpha, zz), fitted.theta_hat)[0, 0]

    rel = abs(c_value - oracle_mc) / oracle_mc
    consistency = abs(oracle_mc - oracle_quad) <= 4 * oracle_se + 1e-4 * oracle_quad
    ok = rel < 0.10 and consistency
    announce(
        9,
        "C-hat vs known-censoring population oracle",
        ok,
        f"C_hat={c_value:.5f}, oracle MC={oracle_mc:.5f} (se {oracle_se:.5f}), "
        f"oracle quadrature={oracle_quad:.5f}, rel dev {rel:.3f} (<0.10)",
    )
    assert ok
