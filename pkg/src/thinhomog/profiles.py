"""Periodic profiles, the cut-off nonlinearity and homogenized data.

The thin domain is bounded above by ``g(x/eps)`` and the reaction strip has
width ``eps * h(x/eps**beta)``. Both profiles are positive periodic functions
described by a :class:`ProfileSpec`; the reaction term is a
:class:`Nonlinearity` made globally bounded by a C^2 clamp of its argument.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ConfigError, ProfileError

PROFILE_KINDS = ("constant", "cosine", "sine", "table")


@dataclass(frozen=True)
class ProfileSpec:
    """A periodic profile ``p(y)``.

    ``cosine`` is ``offset + amplitude*cos(2*pi*y/period)``, ``sine`` the same
    with ``sin``; ``table`` interpolates ``samples`` (taken at
    ``k*period/len(samples)``) by a periodic cubic spline. ``role`` is ``"g"``
    (strictly positive domain profile) or ``"h"`` (nonnegative strip profile).
    """

    kind: str = "constant"
    offset: float = 1.0
    amplitude: float = 0.0
    period: float = 1.0
    samples: Optional[Tuple[float, ...]] = None
    role: str = "g"
    _spline: Optional[CubicSpline] = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        if self.role not in ("g", "h"):
            raise ProfileError(f"profile role must be 'g' or 'h', got {self.role!r}")
        if not (np.isfinite(self.period) and self.period > 0):
            raise ProfileError("profile period must be positive")
        if self.kind == "table":
            if self.samples is None or len(self.samples) < 2:
                raise ProfileError("table profile needs at least 2 samples")
            y = np.asarray(self.samples, dtype=float)
            if not np.all(np.isfinite(y)):
                raise ProfileError("table samples must be finite")
            object.__setattr__(self, "samples", tuple(float(v) for v in y))
            knots = np.linspace(0.0, self.period, len(y) + 1)
            spline = CubicSpline(knots, np.append(y, y[0]), bc_type="periodic")
            object.__setattr__(self, "_spline", spline)
        lo, hi = self.bounds()
        if self.role == "g" and lo <= 0.0:
            raise ProfileError(f"g-profile must be strictly positive (min {lo:.6g})")
        if self.role == "h" and lo < 0.0:
            raise ProfileError(f"h-profile must be nonnegative (min {lo:.6g})")

    @classmethod
    def constant(cls, value: float, role: str = "g") -> "ProfileSpec":
        return cls("constant", offset=value, role=role)

    @classmethod
    def cosine(cls, offset: float, amplitude: float, period: float = 1.0, role: str = "g"):
        return cls("cosine", offset=offset, amplitude=amplitude, period=period, role=role)

    @classmethod
    def sine(cls, offset: float, amplitude: float, period: float = 1.0, role: str = "g"):
        return cls("sine", offset=offset, amplitude=amplitude, period=period, role=role)

    @classmethod
    def table(cls, samples, period: float = 1.0, role: str = "g") -> "ProfileSpec":
        return cls("table", samples=tuple(samples), period=period, role=role)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.offset)
        w = 2.0 * np.pi / self.period
        if self.kind == "cosine":
            return self.offset + self.amplitude * np.cos(w * x)
        if self.kind == "sine":
            return self.offset + self.amplitude * np.sin(w * x)
        return self._spline(np.mod(x, self.period))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(x)
        w = 2.0 * np.pi / self.period
        if self.kind == "cosine":
            return -self.amplitude * w * np.sin(w * x)
        if self.kind == "sine":
            return self.amplitude * w * np.cos(w * x)
        return self._spline(np.mod(x, self.period), 1)

    def bounds(self) -> Tuple[float, float]:
        """Lower and upper bounds ``(p0, p1)`` of the profile over one period."""
        if self.kind == "constant":
            return self.offset, self.offset
        if self.kind in ("cosine", "sine"):
            a = abs(self.amplitude)
            return self.offset - a, self.offset + a
        crit = self._spline.derivative().roots(extrapolate=False)
        crit = crit[np.isfinite(crit)]  # flat pieces report NaN roots
        pts = np.concatenate([crit, np.linspace(0.0, self.period, len(self.samples) + 1)])
        vals = self._spline(pts)
        return float(vals.min()), float(vals.max())

    def derivative_bound(self) -> float:
        """sup |p'|, finite for every supported kind."""
        if self.kind == "constant":
            return 0.0
        if self.kind in ("cosine", "sine"):
            return 2.0 * np.pi * abs(self.amplitude) / self.period
        d = self._spline.derivative()
        crit = d.derivative().roots(extrapolate=False)
        crit = crit[np.isfinite(crit)]
        pts = np.concatenate([crit, np.linspace(0.0, self.period, len(self.samples) + 1)])
        return float(np.max(np.abs(d(pts))))

    def mean(self) -> float:
        return mean_value(self)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "period": self.period}
        if self.kind == "table":
            d["samples"] = list(self.samples)
        else:
            d["offset"] = self.offset
            d["amplitude"] = self.amplitude
        return d

    @classmethod
    def from_dict(cls, d: dict, role: str = "g") -> "ProfileSpec":
        d = dict(d)
        kind = d.pop("kind", "constant")
        samples = d.pop("samples", None)
        unknown = set(d) - {"offset", "amplitude", "period"}
        if unknown:
            raise ProfileError(f"unknown profile keys: {sorted(unknown)}")
        if samples is not None:
            samples = tuple(samples)
        return cls(kind, samples=samples, role=role, **{k: float(v) for k, v in d.items()})


def eval_profile(p: ProfileSpec, x):
    """Evaluate ``p`` at ``x`` (periodically)."""
    return p(x)


def mean_value(p: ProfileSpec) -> float:
    """Average ``(1/L) * int_0^L p``.

    Exact for analytic kinds; for tables the periodic trapezoid sum over the
    samples, i.e. their arithmetic mean.
    """
    if p.kind in ("constant", "cosine", "sine"):
        return float(p.offset)
    return float(np.mean(p.samples))


# --- nonlinearity -----------------------------------------------------------

NONLINEARITY_KINDS = ("constant", "cubic", "logistic", "custom")


def _smoothstep(t):
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_d(t):
    return 30.0 * t * t * (1.0 - t) ** 2


def _smoothstep_int(t):
    # int_0^t of the quintic smoothstep
    return t**4 * (2.5 + t * (-3.0 + t))


@dataclass(frozen=True)
class Nonlinearity:
    """Reaction ``f = f_base o s`` where ``s`` clamps its argument.

    ``s`` is the identity on ``[-R, R]``, has derivative ``1 - S(|u| - R)``
    on the transition band ``R < |u| < R + 1`` (``S`` the quintic smoothstep)
    and is constant beyond, so ``f`` is C^2, bounded, and unchanged on the
    working ball ``|u| <= R``. The tail value is ``f_base(+-(R + 1/2))``.
    """

    base: str = "cubic"
    R: float = 2.0
    c: float = 1.0
    coeffs: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.base not in NONLINEARITY_KINDS:
            raise ConfigError(f"unknown nonlinearity {self.base!r}")
        if not (np.isfinite(self.R) and self.R > 0):
            raise ConfigError("cutoff radius R must be positive")
        if self.base == "custom" and len(self.coeffs) == 0:
            raise ConfigError("custom nonlinearity needs polynomial coefficients")
        object.__setattr__(self, "coeffs", tuple(float(a) for a in self.coeffs))

    @property
    def is_constant(self) -> bool:
        return self.base == "constant" or (self.base == "custom" and not any(self.coeffs[1:]))

    # base function and its derivatives
    def base_f(self, u):
        u = np.asarray(u, dtype=float)
        if self.base == "constant":
            return np.full_like(u, self.c)
        if self.base == "cubic":
            return u - u**3
        if self.base == "logistic":
            return u * (1.0 - u)
        return np.polynomial.polynomial.polyval(u, self.coeffs)

    def base_df(self, u):
        u = np.asarray(u, dtype=float)
        if self.base == "constant":
            return np.zeros_like(u)
        if self.base == "cubic":
            return 1.0 - 3.0 * u**2
        if self.base == "logistic":
            return 1.0 - 2.0 * u
        return np.polynomial.polynomial.polyval(u, np.polynomial.polynomial.polyder(self.coeffs))

    def base_d2f(self, u):
        u = np.asarray(u, dtype=float)
        if self.base == "constant":
            return np.zeros_like(u)
        if self.base == "cubic":
            return -6.0 * u
        if self.base == "logistic":
            return np.full_like(u, -2.0)
        return np.polynomial.polynomial.polyval(u, np.polynomial.polynomial.polyder(self.coeffs, 2))

    def clamp(self, u):
        """Return ``(s(u), s'(u), s''(u))``."""
        u = np.asarray(u, dtype=float)
        a = np.abs(u)
        sg = np.where(u < 0.0, -1.0, 1.0)
        t = np.clip(a - self.R, 0.0, 1.0)
        s = np.where(a <= self.R, u, sg * (self.R + t - _smoothstep_int(t)))
        ds = 1.0 - _smoothstep(t)
        d2s = -sg * _smoothstep_d(t)
        return s, ds, d2s

    def __call__(self, u):
        s, _, _ = self.clamp(u)
        return self.base_f(s)

    def df(self, u):
        s, ds, _ = self.clamp(u)
        return self.base_df(s) * ds

    def d2f(self, u):
        s, ds, d2s = self.clamp(u)
        return self.base_d2f(s) * ds**2 + self.base_df(s) * d2s

    def sup_abs(self, samples: int = 20001) -> float:
        """sup |f| over the real line (``f`` is constant beyond R + 1)."""
        u = np.linspace(-self.R - 1.0, self.R + 1.0, samples)
        return float(np.max(np.abs(self(u))))

    def to_dict(self) -> dict:
        d = {"base": self.base, "R": self.R}
        if self.base == "constant":
            d["c"] = self.c
        if self.base == "custom":
            d["coeffs"] = list(self.coeffs)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Nonlinearity":
        d = dict(d)
        base = d.pop("base", "cubic")
        R = float(d.pop("R", 2.0))
        c = float(d.pop("c", 1.0))
        coeffs = tuple(d.pop("coeffs", ()))
        if d:
            raise ConfigError(f"unknown nonlinearity keys: {sorted(d)}")
        return cls(base, R=R, c=c, coeffs=coeffs)


def make_cutoff(base: str, R: float, c: float = 1.0, coeffs=()) -> Nonlinearity:
    """Build the clamped nonlinearity for ``base`` with working radius ``R``."""
    return Nonlinearity(base, R=R, c=c, coeffs=tuple(coeffs))


@dataclass(frozen=True)
class HomogenizedData:
    """Coefficients of the 1D limit problem ``-q0 u'' + u = f0_scale * f(u)``."""

    q0: float
    mu_g: float
    mu_h: float
    cell_area: float
    f0_scale: float

    @classmethod
    def from_profiles(cls, g: ProfileSpec, h: ProfileSpec, q0: float) -> "HomogenizedData":
        mu_g = mean_value(g)
        mu_h = mean_value(h)
        cell_area = g.period * mu_g
        return cls(q0=float(q0), mu_g=mu_g, mu_h=mu_h, cell_area=cell_area,
                   f0_scale=g.period * mu_h / cell_area)

    @classmethod
    def direct(cls, q0: float = 1.0, f0_scale: float = 1.0) -> "HomogenizedData":
        """Limit data with prescribed ``q0`` and ``f0_scale`` (unit cell, mu_g = 1)."""
        return cls(q0=float(q0), mu_g=1.0, mu_h=float(f0_scale), cell_area=1.0,
                   f0_scale=float(f0_scale))
