"""Power-law fits, local exponents, plateaus and crossing times of relaxation curves."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

MIN_FIT_POINTS = 5
FLOOR_FACTOR = 10.0 * np.finfo(float).eps


@dataclass(frozen=True)
class Series:
    label: str
    times: np.ndarray
    values: np.ndarray
    errors: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape:
            raise ValueError(f"series {self.label!r}: times and values must be equal-length 1-d arrays")
        if t.size < 2:
            raise ValueError(f"series {self.label!r} needs at least 2 samples")
        if np.any(t <= 0):
            raise ValueError(f"series {self.label!r}: times must be positive for log-log analysis")
        if np.any(np.diff(t) <= 0):
            raise ValueError(f"series {self.label!r}: times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.errors is not None:
            object.__setattr__(self, "errors", np.asarray(self.errors, dtype=float))

    @classmethod
    def positive_times(cls, label, times, values, errors=None) -> "Series":
        """Build a series keeping only the samples with ``t > 0``."""
        t = np.asarray(times, dtype=float)
        keep = t > 0
        err = None if errors is None else np.asarray(errors, dtype=float)[keep]
        return cls(label, t[keep], np.asarray(values, dtype=float)[keep], err)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    amplitude: float
    r_squared: float
    window: tuple[float, float]
    n_points: int
    n_excluded: int = 0
    exponent_stderr: float = 0.0


def _log_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """OLS line through (x, y); returns slope, intercept, r^2, slope stderr."""
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot <= 1e-300:
        r2 = 1.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    stderr = math.sqrt(ss_res / (n - 2) / sxx) if n > 2 else float("inf")
    return slope, intercept, r2, stderr


def fit_power_law(s: Series, t_min: float, t_max: float) -> PowerLawFit:
    """Least-squares line of ``ln v`` against ``ln t`` over ``[t_min, t_max]``.

    Values that are nonpositive or below ``10 eps * max|v|`` are dropped and
    counted in ``n_excluded``.
    """
    if not t_min < t_max:
        raise ValueError(f"fit window needs t_min < t_max, got [{t_min}, {t_max}]")
    in_window = (s.times >= t_min) & (s.times <= t_max)
    t, v = s.times[in_window], s.values[in_window]
    if v.size and np.all(v <= 0):
        raise ValueError(f"series {s.label!r}: all values in [{t_min}, {t_max}] are nonpositive")
    floor = FLOOR_FACTOR * (np.max(np.abs(v)) if v.size else 0.0)
    ok = v > floor
    if ok.sum() < MIN_FIT_POINTS:
        raise ValueError(
            f"series {s.label!r}: {int(ok.sum())} usable points in [{t_min}, {t_max}], "
            f"need {MIN_FIT_POINTS}"
        )
    slope, intercept, r2, se = _log_fit(np.log(t[ok]), np.log(v[ok]))
    return PowerLawFit(
        exponent=slope,
        amplitude=math.exp(intercept),
        r_squared=r2,
        window=(float(t_min), float(t_max)),
        n_points=int(ok.sum()),
        n_excluded=int((~ok).sum()),
        exponent_stderr=se,
    )


def default_fit_window(n_sites: int, z: float = 2.0, t_short: float = 5.0) -> tuple[float, float]:
    """Heuristic hydrodynamic window ``[t_short, 0.1 N**z]``."""
    return t_short, 0.1 * n_sites**z


def local_exponent(s: Series, window_points: int) -> Series:
    """Sliding log-log slope over ``window_points`` consecutive samples.

    Each slope is placed at the geometric mean time of its window; windows
    containing nonpositive values are skipped.  ``errors`` holds the
    regression standard error of each slope.
    """
    if window_points < 3:
        raise ValueError(f"local exponent window needs >= 3 points, got {window_points}")
    if window_points > len(s):
        raise ValueError(f"series {s.label!r} shorter than window ({len(s)} < {window_points})")
    lt = np.log(s.times)
    centers, slopes, errs = [], [], []
    for start in range(len(s) - window_points + 1):
        sl = slice(start, start + window_points)
        v = s.values[sl]
        if np.any(v <= 0):
            continue
        slope, _, _, se = _log_fit(lt[sl], np.log(v))
        centers.append(math.exp(lt[sl].mean()))
        slopes.append(slope)
        errs.append(se)
    if len(centers) < 2:
        raise ValueError(f"series {s.label!r}: fewer than 2 admissible local-exponent windows")
    return Series(f"{s.label}:local_exponent", np.array(centers), np.array(slopes), np.array(errs))


def _resample(s: Series, grid: np.ndarray) -> np.ndarray:
    # log-log when the values allow it (exact for power laws), else linear in ln t
    if np.all(s.values > 0):
        return np.exp(np.interp(np.log(grid), np.log(s.times), np.log(s.values)))
    return np.interp(np.log(grid), np.log(s.times), s.values)


def common_grid(s1: Series, s2: Series) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if s1.times.shape == s2.times.shape and np.array_equal(s1.times, s2.times):
        return s1.times, s1.values, s2.values
    lo = max(s1.times[0], s2.times[0])
    hi = min(s1.times[-1], s2.times[-1])
    if lo >= hi:
        raise ValueError(f"series {s1.label!r} and {s2.label!r} have non-overlapping time grids")
    grid = np.union1d(s1.times, s2.times)
    grid = grid[(grid >= lo) & (grid <= hi)]
    return grid, _resample(s1, grid), _resample(s2, grid)


def _crossing_time(t0, t1, a0, a1, b0, b1) -> float:
    if min(a0, a1, b0, b1) > 0:
        u0, u1 = math.log(a0 / b0), math.log(a1 / b1)
    else:
        u0, u1 = a0 - b0, a1 - b1
    lt0, lt1 = math.log(t0), math.log(t1)
    return math.exp(lt0 + u0 / (u0 - u1) * (lt1 - lt0))


def detect_crossings(
    s1: Series, s2: Series, t_start: Optional[float] = None, persistence: int = 3
) -> list[float]:
    """Times where ``s1 - s2`` changes sign and the new sign holds for ``persistence`` samples.

    Each crossing time is interpolated linearly in ``(ln t, ln s1 - ln s2)``
    between the bracketing samples.
    """
    if persistence < 1:
        raise ValueError(f"persistence must be >= 1, got {persistence}")
    t, a, b = common_grid(s1, s2)
    if t_start is not None:
        keep = t >= t_start
        t, a, b = t[keep], a[keep], b[keep]
    sign = np.sign(a - b)
    crossings = []
    current = 0
    k = 0
    n = t.size
    while k < n:
        sg = sign[k]
        if sg == 0:
            k += 1
            continue
        if current == 0:
            current = sg
            k += 1
            continue
        if sg != current:
            run = k
            while run < n and sign[run] == sg:
                run += 1
            if run - k >= persistence:
                j = k - 1
                if sign[j] == 0:
                    # touched exactly on a sample
                    crossings.append(float(t[j]))
                else:
                    crossings.append(_crossing_time(t[j], t[k], a[j], a[k], b[j], b[k]))
                current = sg
            k = run
            continue
        k += 1
    return crossings


def plateau_estimate(s: Series, tail_fraction: float = 0.25) -> tuple[float, float]:
    """Mean and standard deviation of the last ``tail_fraction`` of the samples."""
    if not 0 < tail_fraction <= 0.5:
        raise ValueError(f"tail_fraction must lie in (0, 0.5], got {tail_fraction}")
    n_tail = int(math.ceil(tail_fraction * len(s)))
    if n_tail < MIN_FIT_POINTS:
        raise ValueError(f"series {s.label!r}: only {n_tail} tail points, need {MIN_FIT_POINTS}")
    tail = s.values[-n_tail:]
    return float(tail.mean()), float(tail.std(ddof=1))
