"""Product initial states that relax to infinite temperature.

Floquet family: staggered magnetization ``<Z_i> = (-1)**i * a`` with zero
total charge.  MFI family: uniform ``(theta, phi)`` with ``phi`` chosen so the
energy density vanishes.
"""

from __future__ import annotations

import math

import numpy as np

from .models import MFIParams
from .statevector import BlochAngles

FLOQUET_A_GRID = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
# pi/4 has no energy-zeroing phase for the default MFI fields
MFI_THETA_GRID = (3 * math.pi / 8, math.pi / 2, 5 * math.pi / 8, 3 * math.pi / 4)


def floquet_initial(n_sites: int, a: float) -> BlochAngles:
    """Angles with ``cos^2(theta_i/2) = (1 + (-1)**i a)/2`` and ``phi_i = 0``."""
    if n_sites < 2 or n_sites % 2:
        raise ValueError(f"staggered state needs even N >= 2, got {n_sites}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"stagger amplitude a must lie in [0, 1], got {a}")
    signs = np.where(np.arange(n_sites) % 2 == 0, 1.0, -1.0)
    theta = np.arccos(signs * a)
    return BlochAngles(theta, np.zeros(n_sites))


def mfi_phase(theta: float, p: MFIParams = MFIParams()) -> float:
    """Azimuth making the per-site energy ``J cos^2 + h_x sin cos(phi) + h_z cos`` vanish.

    Principal branch of arccos, ``phi`` in ``[0, pi]``.
    """
    if not 0.0 < theta < math.pi:
        raise ValueError(f"theta must lie strictly inside (0, pi), got {theta}")
    if p.h_x == 0.0:
        raise ValueError("no energy-zeroing phase exists for h_x = 0")
    sin_t, cos_t = math.sin(theta), math.cos(theta)
    arg = -(p.J * cos_t + p.h_z) * cos_t / (p.h_x * sin_t)
    if abs(arg) > 1.0:
        raise ValueError(
            f"no energy-zeroing phase exists for this theta={theta:.6g} "
            f"(arccos argument {arg:.6g})"
        )
    return math.acos(arg)


def mfi_initial(n_sites: int, theta: float, p: MFIParams = MFIParams()) -> BlochAngles:
    phi = mfi_phase(theta, p)
    return BlochAngles(np.full(n_sites, float(theta)), np.full(n_sites, phi))
