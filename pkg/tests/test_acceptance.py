"""End-to-end acceptance suite.

Eleven numbered criteria, each printed as a PASS/FAIL line (collected in
the terminal summary). Every expected value is either a closed form
derived independently of the code path it checks, a pre-verified
constant, or a property-level bound; tolerances are pinned here and not
tuned at runtime. Criterion 4 is asserted exactly as specified even
though the measured constant sits outside the stated band; the analysis
lives in the repo notes, and the test prints the measured values next to
the independent oracle so the discrepancy is auditable.
"""

import time

import numpy as np
import pytest

from conftest import record_acceptance
from gafsim.config import parse_config
from gafsim.experiments import (hole_probability_experiment,
                                normality_experiment,
                                poisson_baseline_experiment,
                                run_mean_variance_experiment)
from gafsim.fock import (build_basis, fast_decay_integral, kernel_eval,
                         kernel_log_diag, kernel_log_laplacian,
                         make_basis_kernel)
from gafsim.geometry import Disc
from gafsim.pointprocess import combine_seed, sample_basis_gaf
from gafsim.stats import variance_theoretical, wls_line
from gafsim.zeros import (count_zeros_argument, locate_zeros,
                          locate_zeros_polyroots, winding_counts_batch)

MASTER = 20240817


def _verdict(num, ok, detail):
    line = "ACCEPTANCE %2d [%s] %s" % (num, "PASS" if ok else "FAIL", detail)
    record_acceptance(line)
    return ok


# ---------------------------------------------------------------------------
# Shared heavy runs
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def mv_run():
    """2000-trial mean/variance study, flat weight, L in {10,20,40,80}."""
    cfg = parse_config({
        "experiment": "mean_variance",
        "weight": {"kind": "radial_power", "alpha": 2.0},
        "gaf_form": "basis",
        "L_grid": [10.0, 20.0, 40.0, 80.0],
        "trials": 2000,
        "region": {"xmin": -1.05, "xmax": 1.05, "ymin": -1.05, "ymax": 1.05},
        "psi": {"kind": "poly_bump", "center": [0.0, 0.0], "radius": 1.0,
                "height": 1.0},
        "seeds": {"master": MASTER, "trial_offset": 0},
    })
    t0 = time.time()
    rep = run_mean_variance_experiment(cfg)
    rep.notes["runtime_s"] = time.time() - t0
    return cfg, rep


@pytest.fixture(scope="module")
def frame_runs():
    """Frame-construction means at L in {10, 40}, same test function."""
    cfg = parse_config({
        "experiment": "mean_variance",
        "weight": {"kind": "radial_power", "alpha": 2.0},
        "gaf_form": "frame",
        "L_grid": [10.0, 40.0],
        "trials": 1500,
        "region": {"xmin": -1.05, "xmax": 1.05, "ymin": -1.05, "ymax": 1.05},
        "psi": {"kind": "poly_bump", "center": [0.0, 0.0], "radius": 1.0,
                "height": 1.0},
        "seeds": {"master": MASTER + 1, "trial_offset": 0},
    })
    return cfg, run_mean_variance_experiment(cfg)


# ---------------------------------------------------------------------------
# 1. Poisson calibration
# ---------------------------------------------------------------------------


def test_criterion_01_poisson_calibration():
    t0 = time.time()
    w = 0.12
    cfg = parse_config({
        "experiment": "poisson_baseline",
        "weight": {"kind": "radial_power", "alpha": 2.0},
        "L_grid": [20.0],
        "trials": 10_000,
        "region": {"xmin": -1.0, "xmax": 1.0, "ymin": -1.0, "ymax": 1.0},
        "psi": {"kind": "gaussian_bump", "center": [0.0, 0.0], "width": w},
        "seeds": {"master": MASTER},
        "intensity_scale": 1.0,
    })
    rep = poisson_baseline_experiment(cfg)
    row = rep.per_L[0]
    # exact laws, density 2: mean = 2 * 2 pi w^2, var = 2 pi w^2 h^2 / L
    mean_exact = 2.0 * 2.0 * np.pi * w**2
    var_exact = 2.0 * np.pi * w**2 / 20.0
    dm = abs(row["mean"] / mean_exact - 1.0)
    dv = abs(row["var"] / var_exact - 1.0)
    elapsed = time.time() - t0
    ok = dm <= 0.05 and dv <= 0.05 and elapsed <= 60.0
    assert _verdict(1, ok, "poisson mean/var within 5%%: |dmean|=%.3f%% "
                    "|dvar|=%.3f%% (10k trials, %.0fs)"
                    % (100 * dm, 100 * dv, elapsed))


# ---------------------------------------------------------------------------
# 2. Expected zero count, flat weight
# ---------------------------------------------------------------------------


def test_criterion_02_expected_count_and_bias_trend():
    t0 = time.time()
    # (a) zero count in the unit disc at L = 20 is exactly L
    L = 20.0
    km = make_basis_kernel(build_basis(2.0, L, 1.5))
    disc = Disc(0.0, 1.0)
    trials = 500
    rows = np.empty((trials, km.basis.n_max + 1), dtype=complex)
    for t in range(trials):
        rows[t] = sample_basis_gaf(km, combine_seed(MASTER + 2, t)).basis_coeffs
    got, ok_mask = winding_counts_batch(km.basis, rows, disc)
    for t in np.flatnonzero(~ok_mask):
        s = sample_basis_gaf(km, combine_seed(MASTER + 2, int(t)))
        got[t] = count_zeros_argument(s, disc)
    counts = got.astype(float)
    se = np.std(counts, ddof=1) / np.sqrt(trials)
    dev_count = abs(np.mean(counts) - L)
    ok_a = dev_count <= 3.0 * se

    # (b) deviation from the limit mean shrinks like 1/L: every deviation
    # sits inside 3 SE plus the certified 1/L envelope, and the envelope
    # itself scales exactly inversely with L
    cfg = parse_config({
        "experiment": "mean_variance",
        "weight": {"kind": "radial_power", "alpha": 2.0},
        "gaf_form": "basis",
        "L_grid": [10.0, 20.0, 40.0, 80.0],
        "trials": 500,
        "region": {"xmin": -1.05, "xmax": 1.05, "ymin": -1.05, "ymax": 1.05},
        "psi": {"kind": "poly_bump", "center": [0.0, 0.0], "radius": 1.0,
                "height": 1.0},
        "seeds": {"master": MASTER, "trial_offset": 0},
    })
    rep = run_mean_variance_experiment(cfg)
    limit = rep.per_L[0]["limit_mean"]
    ok_b = True
    for row in rep.per_L:
        bound = 3.0 * row["se_mean"] + row["mean_bias_envelope"]
        ok_b &= abs(row["mean"] - limit) <= bound
    env = [r["mean_bias_envelope"] for r in rep.per_L]
    ok_env = env[0] / env[-1] == pytest.approx(8.0, rel=0.05)
    elapsed = time.time() - t0
    ok = ok_a and ok_b and bool(ok_env) and elapsed <= 600.0
    assert _verdict(2, ok, "count mean %.3f vs %g (3SE=%.3f); bias within "
                    "3SE+envelope at all L: %s; envelope ratio %.2f~8 "
                    "(%.0fs)" % (np.mean(counts), L, 3 * se, ok_b,
                                 env[0] / env[-1], elapsed))


# ---------------------------------------------------------------------------
# 3. Variance decay exponent
# ---------------------------------------------------------------------------


def test_criterion_03_variance_exponent(mv_run):
    cfg, rep = mv_run
    Ls = np.array([r["L"] for r in rep.per_L])
    vs = np.array([r["var"] for r in rep.per_L])
    fit = wls_line(np.log(Ls), np.log(vs), np.ones(Ls.size))
    ok = -3.3 <= fit["slope"] <= -2.7
    assert _verdict(3, ok, "fitted variance exponent %.3f in [-3.3, -2.7] "
                    "(2000 trials/L, runtime %.0fs)"
                    % (fit["slope"], rep.notes["runtime_s"]))


# ---------------------------------------------------------------------------
# 4. Variance double integral vs closed-form surrogate
# ---------------------------------------------------------------------------


def test_criterion_04_variance_theory_band(mv_run):
    """Asserts the stated factor-3 band between the correlation double
    integral and the surrogate. The flat-weight constant is zeta(3)/8 ~
    0.15 in the large-L limit and smaller at finite L, so this criterion
    cannot pass as written; the independent closed-form oracle printed
    alongside shows the double integral itself is computed correctly.
    """
    cfg, rep = mv_run
    ratios = []
    for row in rep.per_L:
        ratios.append(row["theory_var"] / row["theory_var_surrogate"])
    # independent oracle for a Gaussian bump, where each series term has
    # a closed Fourier form
    w, L0 = 0.35, 20.0
    from gafsim.stats import GaussianBump
    psi_g = GaussianBump(0.0, w, 1.0)
    km = make_basis_kernel(build_basis(2.0, L0, psi_g.support_radius * 1.45))
    got = variance_theoretical(km, psi_g, points_per_rho=4.0)["exact"]
    n = np.arange(1, 400)
    a = w**2 + 1.0 / (4 * n * L0)
    oracle = (w**4 / (8.0 * L0**3)) * np.sum(1.0 / (n**3 * a**3))
    oracle_ok = abs(got / oracle - 1.0) < 2e-3
    band_ok = all(1.0 / 3.0 <= r <= 3.0 for r in ratios)
    stable = max(ratios) / min(ratios)
    ok = band_ok and oracle_ok
    assert _verdict(4, ok, "exact/surrogate ratios %s (band [1/3,3]: %s; "
                    "L-stability %.2fx; quadrature vs closed-form oracle "
                    "agrees to %.1e)"
                    % (["%.4f" % r for r in ratios], band_ok, stable,
                       abs(got / oracle - 1.0)))


# ---------------------------------------------------------------------------
# 5. Hole probabilities
# ---------------------------------------------------------------------------


def test_criterion_05_hole_probability_flat():
    t0 = time.time()
    r = 0.4
    cfg = parse_config({
        "experiment": "hole",
        "weight": {"kind": "radial_power", "alpha": 2.0},
        "L_grid": [7.5, 10.0, 12.5, 14.7, 16.9],
        "trials": 5000,
        "region": {"xmin": -0.8, "xmax": 0.8, "ymin": -0.8, "ymax": 0.8},
        "psi": {"kind": "poly_bump", "center": [0.0, 0.0], "radius": 0.5},
        "hole_disc": {"center": [0.0, 0.0], "radius": r},
        "seeds": {"master": 5},
        "poisson_trials": 30_000,
    })
    rep = hole_probability_experiment(
        cfg, trials_per_L=[5000, 10_000, 30_000, 100_000, 320_000])
    fit = rep.fits["log_p_vs_L2"]
    sharp = np.e**2 * r**4 / 4.0
    ratio = -fit["slope"] / sharp
    pois = rep.notes["poisson_hole"]
    pois_dev = abs(pois["empirical"] - pois["theory"]) / pois["sigma"]
    elapsed = time.time() - t0
    ok = (fit["r2"] >= 0.9 and 0.5 <= ratio <= 2.0 and pois_dev <= 3.0
          and elapsed <= 7200.0)
    assert _verdict(5, ok, "flat hole fit: R2=%.4f, c/(e^2 r^4/4)=%.3f in "
                    "[0.5,2]; Poisson holes %.1f sigma (%.0fs)"
                    % (fit["r2"], ratio, pois_dev, elapsed))


def test_criterion_05b_hole_quartic_weight():
    # general radial weights carry no verified sharp constant; the
    # property-level substitute is super-linear decay consistent with a
    # quadratic law in L
    t0 = time.time()
    cfg = parse_config({
        "experiment": "hole",
        "weight": {"kind": "radial_power", "alpha": 4.0},
        "L_grid": [3.0, 4.5, 6.0, 7.5, 9.0],
        "trials": 3000,
        "region": {"xmin": -1.0, "xmax": 1.0, "ymin": -1.0, "ymax": 1.0},
        "psi": {"kind": "poly_bump", "center": [0.0, 0.0], "radius": 0.5},
        "hole_disc": {"center": [0.0, 0.0], "radius": 0.65},
        "seeds": {"master": 6},
        "poisson_trials": 4000,
    })
    rep = hole_probability_experiment(
        cfg, trials_per_L=[3000, 5000, 12_000, 40_000, 120_000])
    kept = [row for row in rep.per_L if row["holes"] >= 10]
    Ls = np.array([row["L"] for row in kept])
    logp = np.log([row["holes"] / row["trials"] for row in kept])
    wts = np.array([row["holes"] * (1 - row["holes"] / row["trials"]) ** -1
                    for row in kept], dtype=float)
    fit_sq = wls_line(Ls**2, logp, wts)
    fit_lin = wls_line(Ls, logp, wts)
    accelerating = (1 - fit_sq["r2"]) < (1 - fit_lin["r2"])
    elapsed = time.time() - t0
    ok = fit_sq["r2"] >= 0.9 and fit_sq["slope"] < 0 and accelerating
    assert _verdict(5, ok, "quartic-weight hole decay: quadratic-model "
                    "R2=%.4f >= 0.9, slope %.4f < 0, beats linear model "
                    "(R2=%.4f) (%.0fs)"
                    % (fit_sq["r2"], fit_sq["slope"], fit_lin["r2"], elapsed))


# ---------------------------------------------------------------------------
# 6. Asymptotic normality
# ---------------------------------------------------------------------------


def test_criterion_06_normality():
    t0 = time.time()
    cfg = parse_config({
        "experiment": "normality",
        "weight": {"kind": "radial_power", "alpha": 2.0},
        "gaf_form": "frame",
        "L_grid": [10.0, 25.0, 50.0],
        "trials": 2000,
        "region": {"xmin": -0.8, "xmax": 0.8, "ymin": -0.8, "ymax": 0.8},
        "psi": {"kind": "poly_bump", "center": [0.0, 0.0], "radius": 0.5},
        "seeds": {"master": MASTER + 3},
    })
    rep = normality_experiment(cfg, trials_per_L=[1200, 1200, 2000])
    ks_p = rep.per_L[-1]["ks_p"]
    ok_ks = ks_p > 0.01

    def shrinks(key):
        vals = [abs(row[key]) for row in rep.per_L]
        ses = [row[key + "_se"] for row in rep.per_L]
        inversions = 0
        for i in range(len(vals) - 1):
            if vals[i + 1] > vals[i] + 2.0 * ses[i + 1]:
                return False       # a clear increase, beyond error bars
            if vals[i + 1] > vals[i]:
                inversions += 1
        return inversions <= 1

    ok_trend = shrinks("skew") and shrinks("kurtosis")
    elapsed = time.time() - t0
    ok = ok_ks and ok_trend
    assert _verdict(6, ok, "KS p=%.3f at L=50 (2000 trials); |skew| %s, "
                    "|kurt| %s shrink along the grid (%.0fs)"
                    % (ks_p, ["%.3f" % abs(r["skew"]) for r in rep.per_L],
                       ["%.3f" % abs(r["kurtosis"]) for r in rep.per_L],
                       elapsed))


# ---------------------------------------------------------------------------
# 7. Zero-finder oracle equivalence
# ---------------------------------------------------------------------------


def test_criterion_07_oracle_equivalence():
    t0 = time.time()
    km = make_basis_kernel(build_basis(2.0, 10.0, 1.5, n_max=60))
    disc = Disc(0.0, 1.0)
    exact = 0
    for seed in range(200):
        s = sample_basis_gaf(km, combine_seed(MASTER + 4, seed))
        n_arg = count_zeros_argument(s, disc)
        n_poly = len(locate_zeros_polyroots(s, disc))
        exact += int(n_arg == n_poly)
    elapsed = time.time() - t0
    ok = exact == 200
    assert _verdict(7, ok, "argument-principle vs companion-matrix counts: "
                    "%d/200 exact integer matches (%.0fs)" % (exact, elapsed))


# ---------------------------------------------------------------------------
# 8. Kernel closed form
# ---------------------------------------------------------------------------


def test_criterion_08_kernel_closed_form():
    L = 10.0
    km = make_basis_kernel(build_basis(2.0, L, 0.8, tail_target=1e-13))
    g = np.linspace(-0.4, 0.4, 20)
    zs = (g[None, :] + 1j * g[:, None]).ravel()
    ws = zs[::-1]
    got = kernel_eval(km, zs, ws)
    exact = np.exp(L * zs * np.conj(ws)) / (2 * np.pi**2)
    rel = float(np.max(np.abs(got / exact - 1.0)))
    ok = rel <= 1e-8
    assert _verdict(8, ok, "truncated kernel vs exp(Lzw*)/2pi^2 on 20x20 "
                    "grid: max rel err %.2e <= 1e-8" % rel)


# ---------------------------------------------------------------------------
# 9. Size sandwiches, uniform in L
# ---------------------------------------------------------------------------


def test_criterion_09_kernel_sandwiches():
    t0 = time.time()
    radii = np.array([0.15, 0.35, 0.6, 0.85, 1.1])
    angles = np.exp(1j * np.linspace(0.0, 2 * np.pi, 7)[:-1])
    grid = np.concatenate([r * angles for r in radii])
    summary = []
    ok = True
    for alpha in (2.0, 3.0, 4.0):
        diag_bands, lap_bands = [], []
        for L in (5.0, 20.0, 80.0):
            b = build_basis(alpha, L, 1.35)
            km = make_basis_kernel(b)
            diag = np.exp(kernel_log_diag(km, grid) - 2.0 * b.phi_L(grid))
            lap = kernel_log_laplacian(km, grid) * \
                b.rho_field.rho_many(grid) ** 2
            diag_bands.append((diag.min(), diag.max()))
            lap_bands.append((lap.min(), lap.max()))
        for bands in (diag_bands, lap_bands):
            lo = min(b[0] for b in bands)
            hi = max(b[1] for b in bands)
            worst_single = max(b[1] / b[0] for b in bands)
            ok &= lo > 0
            ok &= hi / lo <= 2.0 * worst_single
            summary.append("a=%g global %.2fx vs single %.2fx"
                           % (alpha, hi / lo, worst_single))
    elapsed = time.time() - t0
    assert _verdict(9, ok, "diag/laplacian sandwiches L-uniform within 2x: "
                    "%s (%.0fs)" % ("; ".join(summary[:6]), elapsed))


# ---------------------------------------------------------------------------
# 10. Fast off-diagonal decay
# ---------------------------------------------------------------------------


def test_criterion_10_fast_decay():
    t0 = time.time()
    Ls = np.array([10.0, 20.0, 40.0, 80.0])
    slopes = []
    for R in (2.0, 3.0, 4.0):
        vals = []
        for L in Ls:
            km = make_basis_kernel(build_basis(2.0, L, 1.7))
            vals.append(fast_decay_integral(km, 0.0, 0.5, R))
        fit = wls_line(Ls, np.log(vals), np.ones(Ls.size))
        slopes.append(fit["slope"])
    increasing = all(b < a for a, b in zip(slopes, slopes[1:]))
    ok = all(s < 0 for s in slopes) and increasing
    elapsed = time.time() - t0
    assert _verdict(10, ok, "log fast-decay slope vs L: %s (negative, "
                    "magnitude increasing in R) (%.0fs)"
                    % (["%.3f" % s for s in slopes], elapsed))


# ---------------------------------------------------------------------------
# 11. Basis and frame constructions agree
# ---------------------------------------------------------------------------


def test_criterion_11_basis_frame_agreement(mv_run, frame_runs):
    _, rep_b = mv_run
    _, rep_f = frame_runs
    by_L = {row["L"]: row for row in rep_b.per_L}
    ok = True
    details = []
    for row_f in rep_f.per_L:
        row_b = by_L[row_f["L"]]
        gap = abs(row_b["mean"] - row_f["mean"])
        tol = 3.0 * np.hypot(row_b["se_mean"], row_f["se_mean"])
        ok &= gap <= tol
        details.append("L=%g |basis-frame|=%.5f tol=%.5f"
                       % (row_f["L"], gap, tol))
    assert _verdict(11, ok, "smoothed-count means agree within overlapping "
                    "3-sigma intervals: %s" % "; ".join(details))
