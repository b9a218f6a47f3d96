"""Invariant suites behind ``qmpemba validate`` and the acceptance tests.

Each experiment returns plain numbers so callers decide on tolerances; the
suite runner pairs them with the pinned thresholds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import analysis, hydro, models, observables
from .initial_states import floquet_initial, mfi_initial
from .models import FloquetParams, MFIParams
from .quench import QuenchConfig, run_quench
from .statevector import (
    BlochAngles,
    QuantumState,
    apply_hopping,
    apply_single_qubit,
    apply_zz_phase,
    new_product_state,
    random_state,
    reduced_density_matrix,
)


# ---------------------------------------------------------------------------
# dense references


def dense_partial_trace(psi: np.ndarray, n: int, l: int) -> np.ndarray:
    """Trace out sites ``l..N-1`` of ``|psi><psi|`` from the full density matrix."""
    rho = np.outer(psi, psi.conj()).reshape(1 << (n - l), 1 << l, 1 << (n - l), 1 << l)
    return np.einsum("iaib->ab", rho)


def jacobi_eigenvalues(h: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100) -> np.ndarray:
    """Cyclic complex Jacobi rotations for a small Hermitian matrix."""
    a = np.array(h, dtype=np.complex128)
    n = a.shape[0]
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a - np.diag(np.diag(a))) ** 2))
        if off < tol * max(1.0, np.linalg.norm(a)):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * math.atan2(2 * abs(apq), aqq - app)
                c, s = math.cos(theta), math.sin(theta)
                g = np.eye(n, dtype=np.complex128)
                g[p, p] = c
                g[q, q] = c
                g[p, q] = s * phase
                g[q, p] = -s * np.conj(phase)
                a = g.conj().T @ a @ g
    return np.sort(np.diag(a).real)


def _hermitian_log(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 1e-300, None)
    return (v * np.log(w)) @ v.conj().T


def dense_witnesses(rho: np.ndarray) -> tuple[float, float, float]:
    """Witnesses by a separate route: Jacobi spectrum and relative-entropy asymmetry."""
    dim = rho.shape[0]
    l = dim.bit_length() - 1
    evals = jacobi_eigenvalues(rho)
    d_a = 0.5 * np.sum(np.abs(evals - 1.0 / dim))
    p = evals[evals > 1e-300]
    d_s = l * math.log(2) + float(np.sum(p * np.log(p)))
    weights = np.array([bin(a).count("1") for a in range(dim)])
    projectors = [np.diag((weights == q).astype(float)) for q in range(l + 1)]
    pinched = sum(pq @ rho @ pq for pq in projectors)
    asym = float(np.trace(rho @ (_hermitian_log(rho) - _hermitian_log(pinched))).real)
    return float(d_a), float(d_s), asym


# ---------------------------------------------------------------------------
# experiments


def floquet_conservation(n: int, periods: int, seed: int = 0) -> tuple[float, float]:
    """Max drift of sector probabilities and of <Q> for a random state."""
    state = random_state(n, np.random.default_rng(seed))
    p0 = models.sector_probabilities(state)
    q0, _ = models.total_magnetization(state)
    p_drift = q_drift = 0.0
    for k in range(periods):
        models.floquet_step(state)
        if (k + 1) % 100 == 0 or k == periods - 1:
            p_drift = max(p_drift, float(np.max(np.abs(models.sector_probabilities(state) - p0))))
            q_drift = max(q_drift, abs(models.total_magnetization(state)[0] - q0))
    return p_drift, q_drift


def random_product_angles(n: int, rng: np.random.Generator) -> BlochAngles:
    return BlochAngles(rng.uniform(0, math.pi, n), rng.uniform(0, 2 * math.pi, n))


def mfi_drift_ratio(n: int, t: float, dt: float, seed: int = 0) -> tuple[float, float, float]:
    """Energy drift at time ``t`` for step ``dt`` and ``dt/2``, and their ratio."""
    angles = random_product_angles(n, np.random.default_rng(seed))
    drifts = []
    for step in (dt, dt / 2):
        p = MFIParams(dt=step)
        state = new_product_state(angles)
        e0 = models.mfi_energy(state, p)
        models.mfi_evolve(state, p, int(round(t / step)))
        drifts.append(abs(models.mfi_energy(state, p) - e0))
    return drifts[0], drifts[1], drifts[0] / drifts[1]


def norm_drift(n: int, steps: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    s = random_state(n, rng)
    for _ in range(steps):
        models.floquet_step(s)
    worst = max(worst, s.norm_error())
    s = random_state(n, rng)
    models.mfi_evolve(s, MFIParams(), steps)
    return max(worst, s.norm_error())


def gate_oracle_error(n: int, seed: int = 0) -> float:
    """Max deviation of each gate kernel from the dense exponential of its generator."""
    from scipy.linalg import expm

    rng = np.random.default_rng(seed)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    y = np.array([[0, -1j], [1j, 0]])
    z = np.diag([1.0 + 0j, -1.0])
    worst = 0.0
    for i in range(n):
        j = (i + 1 + int(rng.integers(n - 1))) % n
        ang = float(rng.uniform(-3, 3))
        psi = random_state(n, rng)
        ref = expm(1j * ang * models._pauli_dense(n, {i: z, j: z})) @ psi.amplitudes
        apply_zz_phase(psi, i, j, ang)
        worst = max(worst, float(np.max(np.abs(psi.amplitudes - ref))))
        psi = random_state(n, rng)
        gen = models._pauli_dense(n, {i: x, j: x}) + models._pauli_dense(n, {i: y, j: y})
        ref = expm(1j * ang * gen) @ psi.amplitudes
        apply_hopping(psi, i, j, ang)
        worst = max(worst, float(np.max(np.abs(psi.amplitudes - ref))))
        psi = random_state(n, rng)
        hx, hz = rng.normal(size=2)
        u = expm(-1j * (hx * x + hz * z))
        ref = models._pauli_dense(n, {i: u}) @ psi.amplitudes
        apply_single_qubit(psi, i, u)
        worst = max(worst, float(np.max(np.abs(psi.amplitudes - ref))))
    return worst


def floquet_oracle_error(n: int, n_states: int, steps: int = 3, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    p = FloquetParams()
    worst = 0.0
    for _ in range(n_states):
        s = random_state(n, rng)
        ref = models.dense_step_oracle(s, "floquet", p, steps)
        for _ in range(steps):
            models.floquet_step(s, p)
        worst = max(worst, float(np.max(np.abs(s.amplitudes - ref.amplitudes))))
    return worst


def mfi_oracle_errors(n: int, t: float, dt: float, n_states: int, seed: int = 0) -> tuple[float, float]:
    """Max-norm Trotter error at time ``t`` for ``dt`` and ``dt/2`` over random states."""
    rng = np.random.default_rng(seed)
    errs = [0.0, 0.0]
    states = [random_state(n, rng) for _ in range(n_states)]
    for k, step in enumerate((dt, dt / 2)):
        p = MFIParams(dt=step)
        n_steps = int(round(t / step))
        evals, evecs = np.linalg.eigh(models.dense_mfi_hamiltonian(n, p))
        u_t = (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T
        for s0 in states:
            s = s0.copy()
            models.mfi_evolve(s, p, n_steps)
            errs[k] = max(errs[k], float(np.max(np.abs(s.amplitudes - u_t @ s0.amplitudes))))
    return errs[0], errs[1]


def strang_error_bound(n: int, t: float, dt: float, p: MFIParams = MFIParams()) -> float:
    """Rigorous 2-norm bound on the symmetric-split error after time ``t``.

    With outer field term ``A`` and inner ZZ term ``B`` one step deviates by at
    most ``dt**3 (|[B,[B,A]]|/12 + |[A,[A,B]]|/24)``; errors add over steps.
    """
    x = models._pauli_dense
    h_f = sum(p.h_x * x(n, {i: models._X}) + p.h_z * x(n, {i: models._Z}) for i in range(n))
    h_zz = sum(p.J * x(n, {i: models._Z, (i + 1) % n: models._Z}) for i in range(n))

    def comm(a, b):
        return a @ b - b @ a

    c1 = np.linalg.norm(comm(h_zz, comm(h_zz, h_f)), 2)
    c2 = np.linalg.norm(comm(h_f, comm(h_f, h_zz)), 2)
    steps = int(round(t / dt))
    return float(steps * dt**3 * (c1 / 12 + c2 / 24))


def dense_witness_deviation(n: int = 6, l: int = 2, steps: int = 100, seed: int = 0) -> float:
    """Max deviation between fast witnesses and the dense route along a Floquet trajectory."""
    s = random_state(n, np.random.default_rng(seed))
    worst = 0.0
    for k in range(steps + 1):
        if k:
            models.floquet_step(s)
        fast = observables.witnesses(reduced_density_matrix(s, 0, l))
        ref_rho = dense_partial_trace(s.amplitudes, n, l)
        worst = max(worst, float(np.max(np.abs(reduced_density_matrix(s, 0, l) - ref_rho))))
        ref = dense_witnesses(ref_rho)
        worst = max(worst, abs(fast.D_A - ref[0]), abs(fast.dS_A - ref[1]), abs(fast.asym - ref[2]))
    return worst


def product_state_witnesses(n: int, l: int) -> observables.Witnesses:
    state = new_product_state(floquet_initial(n, 0.0))
    return observables.witnesses(reduced_density_matrix(state, 0, l))


def hydro_max_zscore(cfg: hydro.HydroConfig, workers: int = 1) -> tuple[float, int]:
    """Largest |MC - analytic| / stderr over all sampled (r, t), and the number of points."""
    ms = hydro.run_ensemble(cfg, workers=workers)
    worst, count = 0.0, 0
    for i, t in enumerate(ms.times):
        checks = [(ms.var_excess[i] + ms.chi_stationary, ms.var_excess_se[i], 0)]
        checks += [(ms.two_point[i, r - 1], ms.two_point_se[i, r - 1], r) for r in range(1, cfg.r_max + 1)]
        for value, se, r in checks:
            expected = hydro.analytic_correlator(cfg, r, t)
            worst = max(worst, abs(value - expected) / se)
            count += 1
    return worst, count


def hydro_exponent(cfg: hydro.HydroConfig, t_min: float = 10.0, t_max: float | None = None,
                   workers: int = 1) -> tuple[float, float, hydro.MomentSeries]:
    """Fitted exponents of var_excess and var_excess**2 over ``[t_min, t_max]``."""
    ms = hydro.run_ensemble(cfg, workers=workers)
    hi = cfg.t_max / 10 if t_max is None else t_max
    s = analysis.Series.positive_times("var_excess", ms.times, ms.var_excess)
    s2 = analysis.Series.positive_times("var_excess^2", ms.times, ms.var_excess**2)
    return (analysis.fit_power_law(s, t_min, hi).exponent,
            analysis.fit_power_law(s2, t_min, hi).exponent, ms)


def witness_curve(cfg: QuenchConfig, column: str = "D_A") -> analysis.Series:
    ws = run_quench(cfg)
    return analysis.Series.positive_times(f"{cfg.model}", ws.column("t"), ws.column(column))


def trotter_deviation(n: int, l: int, theta: float, t_window: tuple[float, float] | None = None) -> float:
    """Max relative D_A deviation between dt=0.1 and dt=0.05 over the fit window."""
    window = t_window or analysis.default_fit_window(n)
    curves = []
    for dt in (0.1, 0.05):
        cfg = QuenchConfig(model="mfi", N=n, l=l, theta=theta, mfi=MFIParams(dt=dt),
                           t_max=window[1], sample_every=int(round(0.5 / dt)))
        curves.append(witness_curve(cfg))
    a, b = curves
    if not np.allclose(a.times, b.times):
        raise RuntimeError("Trotter comparison grids differ")
    w = (b.times >= window[0]) & (b.times <= window[1])
    return float(np.max(np.abs(a.values[w] - b.values[w]) / np.abs(b.values[w])))


# ---------------------------------------------------------------------------
# suite runner


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _check(name: str, fn: Callable[[], tuple[bool, str]]) -> CheckResult:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing suite is a failed suite
        ok, detail = False, f"error: {type(exc).__name__}: {exc}"
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t0)


def suite(scale: str = "quick") -> list[tuple[str, Callable[[], tuple[bool, str]]]]:
    if scale not in ("quick", "full"):
        raise ValueError(f"scale must be 'quick' or 'full', got {scale!r}")
    full = scale == "full"
    n_cons, periods = (12, 10_000) if full else (10, 2000)
    n_drift, t_drift = 10, 50.0
    hydro_cfg = hydro.HydroConfig(L=256 if full else 128, n_real=400 if full else 200, t_max=200.0,
                                  dt=0.4, chi0=2.0, grad_amp=0.7, stagger_a=0.3, n_samples=10, seed=7)

    def conservation():
        p, q = floquet_conservation(n_cons, periods)
        return p < 1e-9 and q < 1e-9, f"N={n_cons}, {periods} periods: sector drift {p:.2e}, <Q> drift {q:.2e}"

    def drift_ratio():
        d1, d2, r = mfi_drift_ratio(n_drift, t_drift, 0.05)
        return 3.8 <= r <= 4.2, f"N={n_drift}, t={t_drift:g}: drift {d1:.3e} / {d2:.3e} = {r:.3f}"

    def unitarity():
        d = norm_drift(8 if not full else 10, 1000)
        return d < 1e-10, f"norm drift {d:.2e} after 1000 steps"

    def gates():
        e = gate_oracle_error(4 if not full else 6)
        return e < 1e-10, f"max gate error {e:.2e}"

    def floquet_oracle():
        e = floquet_oracle_error(6, 20)
        return e < 1e-10, f"max deviation {e:.2e} over 20 random states"

    def mfi_oracle():
        e1, e2 = mfi_oracle_errors(6, 5.0, 0.05, 20)
        b1, b2 = strang_error_bound(6, 5.0, 0.05), strang_error_bound(6, 5.0, 0.025)
        ok = e1 <= b1 and e2 <= b2 and 3.8 <= e1 / e2 <= 4.2
        return ok, f"N=6 error {e1:.2e} (dt=0.05, bound {b1:.2e}), {e2:.2e} (dt=0.025), ratio {e1 / e2:.3f}"

    def fixed_points():
        w = product_state_witnesses(8, 2)
        ok = (abs(w.D_A - 0.75) < 1e-10 and abs(w.dS_A - 2 * math.log(2)) < 1e-10
              and abs(w.asym - 1.5 * math.log(2)) < 1e-10)
        return ok, f"D_A={w.D_A:.12f}, dS_A={w.dS_A:.12f}, asym={w.asym:.12f}"

    def dense_witness():
        e = dense_witness_deviation(6, 2, 100 if full else 30)
        return e < 1e-10, f"max deviation from dense reference {e:.2e}"

    def hydro_oracle():
        z, count = hydro_max_zscore(hydro_cfg)
        return z < 3.0, f"max |z| = {z:.2f} over {count} (r, t) points"

    def analysis_props():
        t = np.geomspace(0.01, 100, 81)
        s1 = analysis.Series("a", t, t**-0.5)
        s2 = analysis.Series("b", t, 0.5 * t**-1.5)
        c12 = analysis.detect_crossings(s1, s2)
        c21 = analysis.detect_crossings(s2, s1)
        f1 = analysis.fit_power_law(s2, 1, 100)
        f2 = analysis.fit_power_law(analysis.Series("c", t, 7 * s2.values), 1, 100)
        ok = (len(c12) == 1 and abs(c12[0] - 0.5) < 1e-9 and len(c21) == 1
              and abs(c12[0] - c21[0]) < 1e-12
              and abs(f1.exponent - f2.exponent) < 1e-12 and abs(f2.amplitude / f1.amplitude - 7) < 1e-9)
        return ok, f"crossing {c12}, exponent {f1.exponent:.6f}"

    def trotter():
        n = 12 if full else 10
        thetas = (3 * math.pi / 8, math.pi / 2, 5 * math.pi / 8) if full else (math.pi / 2,)
        d = max(trotter_deviation(n, 3, th) for th in thetas)
        return d < 0.05, f"N={n}, {len(thetas)} theta values: max relative D_A deviation {d:.3%}"

    return [
        ("conservation", conservation),
        ("mfi-energy-drift", drift_ratio),
        ("unitarity", unitarity),
        ("gate-oracle", gates),
        ("floquet-oracle", floquet_oracle),
        ("mfi-oracle", mfi_oracle),
        ("witness-fixed-points", fixed_points),
        ("witness-dense-reference", dense_witness),
        ("hydro-vs-analytic", hydro_oracle),
        ("analysis-properties", analysis_props),
        ("trotter-robustness", trotter),
    ]


def run_suite(scale: str = "quick") -> list[CheckResult]:
    return [_check(name, fn) for name, fn in suite(scale)]
