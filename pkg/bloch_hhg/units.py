"""
Internal unit system: Hartree atomic units (hbar = m = 1, e0 = -1).

Lab quantities (nm, eV, fs, GV/m, um) are converted once at the
configuration boundary; every kernel works in atomic units.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from bloch_hhg.errors import UnitError


@dataclass(frozen=True)
class Constants:
    hbar: float = 1.0
    m_e: float = 1.0
    # electron charge, negative
    e0: float = -1.0
    # CODATA 2018
    bohr_per_nm: float = 1.0 / 0.0529177210903
    hartree_per_eV: float = 1.0 / 27.211386245988
    au_time_per_fs: float = 1.0 / 0.024188843265857
    au_field_per_GVm: float = 1.0e9 / 5.14220674763e11
    speed_of_light: float = 137.035999084


CONSTANTS = Constants()

# multiply a lab value by the factor to get atomic units
_FACTORS = {
    "nm": CONSTANTS.bohr_per_nm,
    "um": 1.0e3 * CONSTANTS.bohr_per_nm,
    "μm": 1.0e3 * CONSTANTS.bohr_per_nm,
    "eV": CONSTANTS.hartree_per_eV,
    "fs": CONSTANTS.au_time_per_fs,
    "GV/m": CONSTANTS.au_field_per_GVm,
}

UNIT_TAGS = frozenset(_FACTORS)


def _factor(unit: str) -> float:
    try:
        return _FACTORS[unit]
    except KeyError:
        raise UnitError(
            f"unknown unit tag '{unit}' (expected one of {sorted(UNIT_TAGS)})"
        ) from None


def to_internal(value: ArrayLike, unit: str) -> ArrayLike:
    """Convert a lab-unit value (scalar or array) to atomic units."""
    factor = _factor(unit)
    if np.isscalar(value):
        return float(value) * factor  # type: ignore[arg-type]
    return np.asarray(value, dtype=float) * factor


def from_internal(value: ArrayLike, unit: str) -> ArrayLike:
    """Convert an atomic-unit value back to the given lab unit."""
    factor = _factor(unit)
    if np.isscalar(value):
        return float(value) / factor  # type: ignore[arg-type]
    return np.asarray(value, dtype=float) / factor


def photon_energy(wavelength: float) -> float:
    """Carrier angular frequency omega = 2 pi c / lambda (lambda in Bohr)."""
    return 2.0 * np.pi * CONSTANTS.speed_of_light / wavelength
