"""Built-in warp, potential and profile families.

Scenario files refer to these by name.  Every family is a factory that
takes keyword parameters and returns a vectorized callable of the radial
coordinate (or of the distance-from-base-point on graph manifolds), so the
scenario format stays declarative: no expression parsing anywhere.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def _tabulated(radii, values):
    radii = np.asarray(radii, dtype=float)
    values = np.asarray(values, dtype=float)
    if radii.ndim != 1 or radii.shape != values.shape:
        raise ValidationError("tabulated family needs matching 1-d radii/values")
    if np.any(np.diff(radii) <= 0):
        raise ValidationError("tabulated radii must be strictly increasing")
    return lambda r: np.interp(r, radii, values)


# ---------------------------------------------------------------------------
# warps: phi(r) > 0 controls the sphere factor of the metric dr^2 + phi^2 g_S

def _warp_power(exponent=1.0):
    return lambda r: np.asarray(r, dtype=float) ** float(exponent)


def _warp_constant(value=1.0):
    value = float(value)
    return lambda r: np.full_like(np.asarray(r, dtype=float), value)


def _warp_sinh(curvature=1.0):
    k = float(curvature)
    if k <= 0:
        raise ValidationError("sinh warp needs curvature > 0")
    s = np.sqrt(k)
    return lambda r: np.sinh(s * np.asarray(r, dtype=float)) / s


WARPS = {
    "power": _warp_power,
    "constant": _warp_constant,
    "sinh": _warp_sinh,
    "tabulated": _tabulated,
}


# ---------------------------------------------------------------------------
# potentials: V as a function of the distance from the base point

def _pot_constant(value=0.0):
    value = float(value)
    return lambda r: np.full_like(np.asarray(r, dtype=float), value)


def _pot_harmonic(coefficient=1.0, offset=0.0):
    a, b = float(coefficient), float(offset)
    return lambda r: b + a * np.asarray(r, dtype=float) ** 2


def _pot_gaussian_well(v_infinity=1.0, depth=2.0, width=1.0):
    v_inf, dep, w = float(v_infinity), float(depth), float(width)
    if w <= 0:
        raise ValidationError("gaussian_well width must be > 0")
    return lambda r: v_inf - dep * np.exp(-((np.asarray(r, dtype=float) / w) ** 2))


def _pot_power(coefficient=1.0, exponent=1.0):
    a, p = float(coefficient), float(exponent)
    return lambda r: a * np.asarray(r, dtype=float) ** p


POTENTIALS = {
    "constant": _pot_constant,
    "harmonic": _pot_harmonic,
    "gaussian_well": _pot_gaussian_well,
    "power": _pot_power,
    "tabulated": _tabulated,
}


# ---------------------------------------------------------------------------
# profiles: u used to manufacture divergence-form potentials V = -lap(u).
# All shipped profiles have bounded gradient.

def _profile_log1p(scale=1.0):
    s = float(scale)
    return lambda r: s * np.log1p(np.asarray(r, dtype=float))


def _profile_gaussian(width=1.0, height=1.0):
    w, a = float(width), float(height)
    if w <= 0:
        raise ValidationError("gaussian profile width must be > 0")
    return lambda r: a * np.exp(-((np.asarray(r, dtype=float) / w) ** 2))


def _profile_linear(slope=1.0):
    s = float(slope)
    return lambda r: s * np.asarray(r, dtype=float)


PROFILES = {
    "log1p": _profile_log1p,
    "gaussian": _profile_gaussian,
    "linear": _profile_linear,
    "tabulated": _tabulated,
}


def resolve(catalog, name, params=None, what="family"):
    """Look up ``name`` in one of the catalogs and build its callable."""
    if name not in catalog:
        known = ", ".join(sorted(catalog))
        raise ValidationError(f"unknown {what} '{name}' (known: {known})")
    try:
        return catalog[name](**(params or {}))
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {what} '{name}': {exc}") from None
