"""Acceptance gate: one test per criterion, each printing a single pass/fail line."""

import math
import time

import numpy as np
import pytest

from qmpemba import analysis, cli, hydro, models
from qmpemba.initial_states import FLOQUET_A_GRID, floquet_initial
from qmpemba.persistence import OUTPUT_ROOT_ENV
from qmpemba.quench import QuenchConfig
from qmpemba.statevector import hamming_weights, new_product_state
from qmpemba import validation

pytestmark = pytest.mark.slow


def test_criterion_1_conservation(criterion):
    p_drift, q_drift = validation.floquet_conservation(12, 10_000, seed=1)
    ratios = [validation.mfi_drift_ratio(10, 50.0, 0.05, seed=s)[2] for s in range(4)]
    ok = p_drift < 1e-9 and q_drift < 1e-9 and all(3.8 <= r <= 4.2 for r in ratios)
    criterion(1, "conservation", ok,
              f"Floquet N=12, 1e4 periods: sector drift {p_drift:.1e}, <Q> drift {q_drift:.1e}; "
              f"MFI N=10 drift ratios {', '.join(f'{r:.3f}' for r in ratios)}")


def test_criterion_2_oracle_equivalence(criterion):
    worst_fl = max(validation.floquet_oracle_error(n, 20, steps=3, seed=n) for n in (4, 6))
    mfi = [validation.mfi_oracle_errors(n, 5.0, 0.05, 20, seed=n) for n in (4, 6)]
    bounds = [(validation.strang_error_bound(n, 5.0, 0.05), validation.strang_error_bound(n, 5.0, 0.025)) for n in (4, 6)]
    ratios = [e1 / e2 for e1, e2 in mfi]
    within = all(e1 <= b1 and e2 <= b2 for (e1, e2), (b1, b2) in zip(mfi, bounds))
    ok = worst_fl < 1e-10 and within and all(3.8 <= r <= 4.2 for r in ratios)
    criterion(2, "oracle equivalence", ok,
              f"Floquet max deviation {worst_fl:.1e} (N=4,6; 20 states each); MFI t=5, dt=0.05 errors "
              f"{mfi[0][0]:.2e}/{mfi[1][0]:.2e} vs second-order bounds {bounds[0][0]:.2e}/{bounds[1][0]:.2e}, "
              f"halving ratios {ratios[0]:.3f}/{ratios[1]:.3f}")


def test_criterion_3_witness_fixed_points(criterion):
    worst = 0.0
    for l in range(1, 7):
        w = validation.product_state_witnesses(12, l)
        p = np.array([math.comb(l, k) for k in range(l + 1)]) / 2**l
        shannon = float(-np.sum(p * np.log(p)))
        worst = max(worst, abs(w.D_A - (1 - 2**-l)), abs(w.dS_A - l * math.log(2)), abs(w.asym - shannon))
    w2 = validation.product_state_witnesses(12, 2)
    ok = worst < 1e-10 and abs(w2.asym - 1.5 * math.log(2)) < 1e-10
    criterion(3, "witness fixed points", ok,
              f"l=1..6 max deviation {worst:.1e}; l=2 asym {w2.asym:.10f} vs (3/2)ln2 {1.5 * math.log(2):.10f}")


def test_criterion_4_fluctuation_matching(criterion):
    worst = 0.0
    for n in (8, 12, 14):
        for a in FLOQUET_A_GRID:
            _, q2 = models.total_magnetization(new_product_state(floquet_initial(n, a)))
            worst = max(worst, abs(q2 - n * (1 - a * a)))
    n = 12
    q = n - 2.0 * hamming_weights(n)
    tr_q2_lambda = float(np.mean(q**2))
    _, q2_zero = models.total_magnetization(new_product_state(floquet_initial(n, 0.0)))
    ok = worst <= 1e-12 and abs(q2_zero - tr_q2_lambda) <= 1e-12 and abs(tr_q2_lambda - n) <= 1e-12
    criterion(4, "fluctuation matching", ok,
              f"max |<Q^2>_0 - N(1-a^2)| = {worst:.1e}; a=0: <Q^2>_0 = {q2_zero:.12f}, Tr Q^2 Lambda = {tr_q2_lambda:.12f}")


def test_criterion_5_hydro_exponents(criterion):
    t0 = time.perf_counter()
    mismatched = hydro.HydroConfig(L=4096, n_real=200, D=0.5, chi_eq=1.0, chi0=2.0, seed=11)
    matched = hydro.HydroConfig(L=4096, n_real=200, D=0.5, chi_eq=1.0, chi0=1.0, grad_amp=10.0, seed=12)
    p1, p1sq, _ = validation.hydro_exponent(mismatched)
    p2, p2sq, _ = validation.hydro_exponent(matched)
    wall = time.perf_counter() - t0
    ok = (abs(p1 + 0.5) <= 0.1 and abs(p1sq + 1.0) <= 0.2 and abs(p2 + 1.5) <= 0.25
          and abs(p2sq + 3.0) <= 0.5 and wall <= 600)
    criterion(5, "hydro exponents", ok,
              f"chi0!=chi_eq: {p1:.3f} (squared {p1sq:.3f}); matched + gradient: {p2:.3f} (squared {p2sq:.3f}); "
              f"{wall:.0f}s")


def test_criterion_6_hydro_vs_analytic(criterion):
    cfg = hydro.HydroConfig(L=256, n_real=400, t_max=200.0, dt=0.4, chi0=2.0, grad_amp=0.7,
                            stagger_a=0.3, n_samples=12, seed=7)
    z, count = validation.hydro_max_zscore(cfg)
    criterion(6, "hydro Monte Carlo vs Gaussian oracle", z < 3.0, f"max |z| = {z:.2f} over {count} (r, t) points")


def test_criterion_7_mpemba_crossing(criterion):
    n, t_max = 14, 300
    curves = {a: validation.witness_curve(QuenchConfig(N=n, l=3, a=a, t_max=t_max)) for a in (0.0, 0.6)}
    zero, stag = curves[0.0], curves[0.6]
    crossings = analysis.detect_crossings(zero, stag)
    t_long = n**2
    first = [t for t in crossings if t < t_long]
    t_m = first[0] if first else math.nan
    t = zero.times
    # a=0 lies mostly above a=0.6 before t_M and mostly below after it
    before = (t >= 3) & (t < t_m)
    after = (t > t_m) & (t <= 3 * t_m)
    frac_above = float(np.mean(zero.values[before] > stag.values[before])) if first else 0.0
    frac_below = float(np.mean(zero.values[after] < stag.values[after])) if first else 0.0
    above_early = frac_above > 0.5
    below_after = frac_below > 0.5
    plateau = t > t_long / 2

    theta = {k: validation.witness_curve(QuenchConfig(model="mfi", N=12, l=3, theta=k * math.pi / 8, t_max=40))
             for k in (3, 5)}
    mfi_cross = analysis.detect_crossings(theta[5], theta[3])
    ok = bool(first) and above_early and below_after and bool(mfi_cross)
    criterion(7, "qualitative Mpemba crossing", ok,
              f"Floquet N=14 l=3 a=0 vs 0.6: t_M = {', '.join(f'{t:.1f}' for t in first) or 'none'} (< N^2 = {t_long}), "
              f"a=0 above on {frac_above:.0%} of [3, t_M), below on {frac_below:.0%} of (t_M, 3 t_M], "
              f"plateau means {zero.values[plateau].mean():.4f} vs {stag.values[plateau].mean():.4f}; "
              f"MFI N=12 5pi/8 vs 3pi/8: t_M = {', '.join(f'{t:.2f}' for t in mfi_cross) or 'none'}")


def test_criterion_8_plateau_monotone(criterion):
    plateaus = []
    for n in (8, 10, 12, 14):
        s = validation.witness_curve(QuenchConfig(N=n, l=3, a=0.5, t_max=1000))
        plateaus.append(analysis.plateau_estimate(s)[0])
    ok = all(a > b for a, b in zip(plateaus, plateaus[1:]))
    criterion(8, "finite-size plateau monotonicity", ok,
              "plateau(D_A) at N=8,10,12,14: " + ", ".join(f"{p:.4f}" for p in plateaus))


def test_criterion_9_trotter_robustness(criterion):
    devs = {k: validation.trotter_deviation(12, 3, k * math.pi / 8) for k in (3, 4, 5, 6)}
    worst = max(devs.values())
    window = analysis.default_fit_window(12)
    criterion(9, "Trotter robustness", worst < 0.05,
              f"N=12, window [{window[0]:g}, {window[1]:g}]: max relative D_A deviation dt=0.1 vs 0.05 "
              + ", ".join(f"theta={k}pi/8 {d:.2%}" for k, d in devs.items()))


def test_criterion_10_determinism(criterion, tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    hydro_args = ["hydro", "--L", "256", "--n-real", "64", "--block-size", "8", "--t-max", "100",
                  "--chi0", "2", "--grad-amp", "0.5", "--seed", "21"]
    for w in (1, 2, 4):
        assert cli.main(hydro_args + ["--workers", str(w), "--output", f"h{w}"]) == 0
    sweep_args = ["sweep", "--N", "8", "--t-max", "30", "--grid-a", "0,0.4,0.8", "--seed", "5"]
    for w in (1, 3):
        assert cli.main(sweep_args + ["--workers", str(w), "--output", f"s{w}"]) == 0
    h = {w: (tmp_path / f"h{w}" / "moments.csv").read_bytes() for w in (1, 2, 4)}
    s = {w: b"".join((tmp_path / f"s{w}" / d / "witness.csv").read_bytes()
                     for d in ("000_a=0", "001_a=0.4", "002_a=0.8")) for w in (1, 3)}
    ok = h[1] == h[2] == h[4] and s[1] == s[3]
    criterion(10, "determinism", ok,
              f"hydro moments.csv identical for 1/2/4 workers: {h[1] == h[2] == h[4]}; "
              f"sweep witness.csv identical for 1/3 workers: {s[1] == s[3]}")
