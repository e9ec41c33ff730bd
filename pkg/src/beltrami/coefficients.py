"""Beltrami coefficients, radial profiles and distortion diagnostics.

A radial map ``f(z) = (z/|z|) rho(|z|)`` has complex dilatation
``(z/zbar) gamma(|z|)`` with ``gamma = (t rho' - rho) / (t rho' + rho)``.
Profiles are described on (0, 1]; beyond the unit circle every profile is
linear, ``rho(t) = rho(1) t``, so the map is conformal outside the disk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .field import ComplexField, Grid, RegionMask, measure, read_field

MU_CLAMP = 1.0 - 1e-12
QUAD_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


# ---------------------------------------------------------------------------
# coefficients on the grid

@dataclass(frozen=True, eq=False)
class BeltramiCoefficient:
    mu: ComplexField
    support_radius: float = 1.0

    def __post_init__(self):
        a = self.mu.abs()
        if a.max(initial=0.0) >= 1.0:
            raise ValueError(f"|mu| must be < 1 everywhere, max is {a.max()}")
        if self.support_radius > 1.0:
            raise ValueError("support radius must be <= 1")
        outside = self.mu.grid.r > self.support_radius
        if np.any(a[outside] != 0):
            raise ValueError("mu must vanish outside its support radius")

    @property
    def grid(self) -> Grid:
        return self.mu.grid

    @property
    def samples(self) -> np.ndarray:
        return self.mu.samples

    @property
    def sup_norm(self) -> float:
        return float(self.mu.abs().max())

    def distortion(self) -> np.ndarray:
        a = self.mu.abs()
        return (1.0 + a) / (1.0 - a)

    def scaled(self, lam: complex) -> "BeltramiCoefficient":
        if abs(lam) > 1:
            raise ValueError("|lambda| must be <= 1")
        return BeltramiCoefficient(self.mu * lam, self.support_radius)


def clamp_mu(samples: np.ndarray, limit: float = MU_CLAMP) -> np.ndarray:
    a = np.abs(samples)
    over = a > limit
    if np.any(over):
        samples = np.where(over, samples * (limit / np.where(over, a, 1.0)), samples)
    return samples


def zero_coefficient(grid: Grid) -> BeltramiCoefficient:
    return BeltramiCoefficient(ComplexField.zeros(grid))


def truncate(mu: BeltramiCoefficient, m: int) -> BeltramiCoefficient:
    """Cap |mu| at 1 - 1/m, keeping the argument."""
    if m < 1:
        raise ValueError("m must be >= 1")
    cap = 1.0 - 1.0 / m
    s = mu.samples
    a = np.abs(s)
    # rescaled samples land within a few ulps of cap; leave those alone on a second pass
    over = a > cap * (1 + 4 * np.finfo(float).eps)
    out = np.where(over, cap * s / np.where(over, a, 1.0), s)
    return BeltramiCoefficient(ComplexField(mu.grid, out), mu.support_radius)


def coefficient_from_distortion(K: np.ndarray, grid: Grid) -> BeltramiCoefficient:
    """Radial-type phase: mu = (K-1)/(K+1) z/zbar inside the unit disk."""
    K = np.asarray(K, dtype=float)
    if np.any(K < 1):
        raise ValueError("distortion must be >= 1")
    z = grid.z
    k = (K - 1.0) / (K + 1.0)
    mu = np.where(grid.r <= 1.0, k * z / np.conj(z), 0.0)
    return BeltramiCoefficient(ComplexField(grid, clamp_mu(mu)))


# ---------------------------------------------------------------------------
# radial profiles

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    rho: ArrayFn
    drho: ArrayFn
    gamma: ArrayFn
    label: str = "profile"
    meta: dict = field(default_factory=dict)
    # optional closed form of the distortion, more accurate than going through gamma when |gamma| ~ 1
    kfun: ArrayFn | None = None

    def stretch(self, t) -> np.ndarray:
        """Logarithmic derivative t rho'/rho = (1 + gamma)/(1 - gamma)."""
        t = np.asarray(t, dtype=float)
        return t * self.drho(t) / self.rho(t)

    def distortion(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kfun is not None:
            return self.kfun(t)
        g = np.abs(self.gamma(t))
        return (1.0 + g) / (1.0 - g)

    def dz(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return 0.5 * (self.drho(t) + self.rho(t) / t)

    def dzbar_abs(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return 0.5 * np.abs(self.drho(t) - self.rho(t) / t)

    def df_norm(self, t) -> np.ndarray:
        """Operator norm |f_z| + |f_zbar| of the radial map at |z| = t."""
        return np.abs(self.dz(t)) + self.dzbar_abs(t)

    def jacobian(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.real(self.drho(t) * np.conj(self.rho(t))) / t

    def scaled_parts(self, t) -> tuple[np.ndarray, np.ndarray]:
        """(rho, t rho'), from which t |Df| and t^2 J follow without overflow."""
        t = np.asarray(t, dtype=float)
        return self.rho(t), t * self.drho(t)

    def at_one(self) -> complex:
        v = complex(np.asarray(self.rho(np.array([1.0])))[0])
        return v.real if v.imag == 0 else v

    def normalized(self) -> "RadialProfile":
        """The principal-solution profile rho / rho(1)."""
        c = self.at_one()
        if c == 1:
            return self
        return RadialProfile(
            rho=lambda t, c=c, r=self.rho: r(t) / c,
            drho=lambda t, c=c, d=self.drho: d(t) / c,
            gamma=self.gamma,
            label=self.label + " (normalized)",
            meta=dict(self.meta),
            kfun=self.kfun,
        )

    def is_increasing(self, samples: int = 200, lo: float = 1e-12) -> bool:
        t = np.geomspace(lo, 1.0, samples)
        r = np.abs(self.rho(t))
        return bool(np.all(np.diff(r) > 0))

    def inverse(self, s, tol: float = 1e-14) -> np.ndarray:
        """Inverse of a real increasing profile by bracketed root finding."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty_like(s)
        top = float(np.real(self.at_one()))
        for k, sk in enumerate(s):
            if sk <= 0:
                out[k] = 0.0
                continue
            if sk >= top:
                out[k] = sk / top
                continue
            lo = 1e-300
            f = lambda t: float(np.real(self.rho(np.array([t]))[0])) - sk
            if f(lo) > 0:
                raise ValueError("profile does not reach the requested value")
            out[k] = optimize.brentq(f, lo, 1.0, xtol=1e-300, rtol=tol, maxiter=500)
        return out


def _outside(t: np.ndarray, inside: np.ndarray, outside: np.ndarray) -> np.ndarray:
    return np.where(t <= 1.0, inside, outside)


def identity_profile() -> RadialProfile:
    return RadialProfile(
        rho=lambda t: np.asarray(t, dtype=float) * 1.0,
        drho=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        gamma=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        label="identity",
    )


def stretch_profile(gamma: float, lam: complex = 1.0) -> RadialProfile:
    """Constant dilatation lam*gamma: rho(t) = t**a, a = (1+lam*gamma)/(1-lam*gamma)."""
    g = lam * gamma
    if abs(g) >= 1:
        raise ValueError("|lambda * gamma| must be < 1")
    a = (1 + g) / (1 - g)
    if isinstance(a, complex) and a.imag == 0:
        a = a.real
    zero = 0j if isinstance(a, complex) else 0.0

    def rho(t):
        t = np.asarray(t, dtype=float)
        tt = np.minimum(t, 1.0)
        return _outside(t, tt ** a, t + zero)

    def drho(t):
        t = np.asarray(t, dtype=float)
        tt = np.minimum(t, 1.0)
        return _outside(t, a * tt ** (a - 1), np.ones_like(t) + zero)

    def gam(t):
        t = np.asarray(t, dtype=float)
        return _outside(t, np.full(t.shape, g), np.zeros(t.shape) + zero)

    return RadialProfile(rho, drho, gam, label=f"stretch(gamma={gamma}, lambda={lam})",
                         meta={"family": "stretch", "gamma": gamma, "lambda": lam, "exponent": a})


def power_profile(a: float) -> RadialProfile:
    """rho(t) = t**a, the radial stretch with gamma = (a - 1)/(a + 1)."""
    return stretch_profile((a - 1.0) / (a + 1.0))


def _gp_parts(t: np.ndarray, p: float):
    with np.errstate(divide="ignore", over="ignore"):
        L = np.log(np.e + 1.0 / t)
    ll = np.log(L)
    rho = L ** (-p / 2.0) * ll ** -0.5
    s = (p / 2.0 + 1.0 / (2.0 * ll)) / (L * (np.e * t + 1.0))
    return rho, s


def gp_profile(p: float) -> RadialProfile:
    """The sharpness family g_p; c0 = rho(1) makes the map continuous at |z| = 1."""
    if p <= 0:
        raise ValueError("p must be positive")
    c0 = float(_gp_parts(np.array([1.0]), p)[0][0])

    def rho(t):
        t = np.asarray(t, dtype=float)
        tt = np.minimum(t, 1.0)
        r, _ = _gp_parts(tt, p)
        return _outside(t, r, c0 * t)

    def drho(t):
        t = np.asarray(t, dtype=float)
        tt = np.minimum(t, 1.0)
        r, s = _gp_parts(tt, p)
        return _outside(t, r * s / tt, np.full(t.shape, c0))

    def gam(t):
        t = np.asarray(t, dtype=float)
        tt = np.minimum(t, 1.0)
        _, s = _gp_parts(tt, p)
        return _outside(t, (s - 1.0) / (s + 1.0), np.zeros(t.shape))

    def kfun(t):
        t = np.asarray(t, dtype=float)
        _, s = _gp_parts(np.minimum(t, 1.0), p)
        return _outside(t, np.maximum(s, 1.0 / s), np.ones(t.shape))

    return RadialProfile(rho, drho, gam, label=f"g_p(p={p})", meta={"family": "gp", "p": p, "c0": c0},
                         kfun=kfun)


def log_rho_from_stretch(a_of_u: Callable[[float], complex], u: np.ndarray,
                         breakpoints: Sequence[float] = (), tol: float = QUAD_TOL) -> np.ndarray:
    """-int_0^u a(v) dv for each entry of u >= 0, by adaptive quadrature.

    ``a`` is the stretch (1+gamma)/(1-gamma) written in u = log(1/t); the
    integrand is smooth in u where it is singular in t.
    """
    u = np.asarray(u, dtype=float)
    order = np.argsort(u, kind="stable")
    knots = sorted(set(float(b) for b in breakpoints if b > 0))
    out = np.empty(u.shape, dtype=complex)
    acc = 0j
    err = 0.0
    prev = 0.0

    def segment(lo, hi):
        nonlocal err
        if hi <= lo:
            return 0j
        cuts = [lo] + [k for k in knots if lo < k < hi] + [hi]
        total = 0j
        for x0, x1 in zip(cuts[:-1], cuts[1:]):
            re, e1 = integrate.quad(lambda v: np.real(a_of_u(v)), x0, x1,
                                    epsabs=tol * 1e-2, epsrel=1e-13, limit=400)
            im, e2 = integrate.quad(lambda v: np.imag(a_of_u(v)), x0, x1,
                                    epsabs=tol * 1e-2, epsrel=1e-13, limit=400)
            total += re + 1j * im
            err += e1 + e2
        return total

    for idx in order.ravel():
        ui = float(u.flat[idx])
        if ui < prev:
            raise ValueError("u must be nonnegative")
        acc += segment(prev, ui)
        prev = ui
        out.flat[idx] = -acc
    if err > tol * max(1.0, abs(acc)):
        raise QuadratureError(f"quadrature error estimate {err:.2e} exceeds tolerance {tol:.0e}")
    return out


def profile_from_gamma(gamma_fn: ArrayFn, label: str = "from_gamma",
                       breakpoints_t: Sequence[float] = (), meta: dict | None = None) -> RadialProfile:
    """rho(t) = exp(-int_t^1 (1+gamma)/(1-gamma) ds/s) on (0, 1], rho(t) = t beyond."""

    def stretch_u(v):
        g = complex(np.asarray(gamma_fn(np.array([math.exp(-v)])))[0])
        return (1 + g) / (1 - g)

    bu = [-math.log(b) for b in breakpoints_t if 0 < b < 1]

    def rho(t):
        t = np.asarray(t, dtype=float)
        tt = np.minimum(t, 1.0)
        logr = log_rho_from_stretch(stretch_u, -np.log(tt), bu)
        val = np.exp(logr)
        if np.all(np.imag(val) == 0):
            val = val.real
        return _outside(t, val, t)

    def drho(t):
        t = np.asarray(t, dtype=float)
        tt = np.minimum(t, 1.0)
        g = gamma_fn(tt)
        a = (1 + g) / (1 - g)
        return _outside(t, rho(tt) * a / tt, np.ones_like(t))

    def gam(t):
        t = np.asarray(t, dtype=float)
        return _outside(t, gamma_fn(np.minimum(t, 1.0)), np.zeros(t.shape))

    return RadialProfile(rho, drho, gam, label=label, meta=meta or {})


def alpha_base_gamma(alpha: float) -> ArrayFn:
    def g(t):
        t = np.asarray(t, dtype=float)
        lg = np.log(5.0 / t)
        return (alpha - lg) / (alpha + lg)
    return g


def alpha_profile(alpha: float, lam: complex = 1.0) -> RadialProfile:
    """Holomorphic family rho_lambda built from rho(t) = (log(5/t))**(-alpha)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if abs(lam) > 1:
        raise ValueError("|lambda| must be <= 1")
    base = alpha_base_gamma(alpha)
    lam_c = complex(lam)
    if lam_c.imag == 0:
        lam_c = lam_c.real

    def gamma_fn(t):
        return lam_c * base(t)

    return profile_from_gamma(gamma_fn, label=f"alpha(alpha={alpha}, lambda={lam})",
                              meta={"family": "alpha", "alpha": alpha, "lambda": lam})


def radial_to_coefficient(profile: RadialProfile, grid: Grid) -> BeltramiCoefficient:
    """mu(z) = (z/zbar) gamma(|z|) inside the unit disk, 0 outside."""
    z = grid.z
    r = grid.r
    inside = r <= 1.0
    g = np.zeros(r.shape, dtype=complex)
    g[inside] = profile.gamma(r[inside])
    mu = np.where(inside, g * z / np.conj(z), 0.0)
    return BeltramiCoefficient(ComplexField(grid, clamp_mu(mu)))


# ---------------------------------------------------------------------------
# distortion diagnostics

@dataclass(frozen=True, eq=False)
class DistortionField:
    grid: Grid
    K: np.ndarray = field(repr=False)
    p_exponent: float | None = None

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.shape != (self.grid.n, self.grid.n):
            raise ValueError("distortion array does not match grid")
        if np.any(K < 1 - 1e-12):
            raise ValueError("distortion must be >= 1")
        object.__setattr__(self, "K", K)


def distortion_field(mu: BeltramiCoefficient, p: float | None = None) -> DistortionField:
    return DistortionField(mu.grid, mu.distortion(), p)


def exp_integral(K: DistortionField, p: float) -> float:
    """h^2 sum over samples in the unit disk of exp(p K); inf on overflow."""
    if p <= 0:
        raise ValueError("p must be positive")
    inside = K.grid.r <= 1.0
    with np.errstate(over="ignore"):
        vals = np.exp(p * K.K[inside])
        total = K.grid.cell_area * vals.sum()
    return float(total) if np.isfinite(total) else math.inf


def bad_set_threshold(n: int, beta: float) -> float:
    return 1.0 - beta / (2.0 * n + beta)


def bad_set(mu: BeltramiCoefficient, n: int, beta: float) -> RegionMask:
    if n < 1 or beta <= 0:
        raise ValueError("need n >= 1 and beta > 0")
    return RegionMask(mu.grid, mu.mu.abs() > bad_set_threshold(n, beta))


def bad_set_measure(mu: BeltramiCoefficient, n: int, beta: float) -> float:
    return measure(bad_set(mu, n, beta))


def chebyshev_bound(mu: BeltramiCoefficient, n: int, beta: float, p: float) -> float:
    """e^{-p} int_D e^{pK} e^{-4np/beta}, the bound on |B_n|."""
    c1 = math.exp(-p) * exp_integral(distortion_field(mu), p)
    return c1 * math.exp(-4.0 * n * p / beta)


# ---------------------------------------------------------------------------
# coefficient spec text format

SPEC_KEYS = {"family", "p", "alpha", "lambda_re", "lambda_im", "gamma", "file", "grid_n", "grid_L"}
FAMILIES = ("gp", "alpha", "stretch", "file")


class SpecError(ValueError):
    """Malformed coefficient spec."""


def parse_coefficient_spec(text: str) -> dict:
    spec: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SPEC_KEYS:
            raise SpecError(f"line {lineno}: unknown key {key!r}")
        if key in ("family", "file"):
            spec[key] = value
        elif key == "grid_n":
            try:
                spec[key] = int(value)
            except ValueError:
                raise SpecError(f"line {lineno}: grid_n must be an integer") from None
        else:
            try:
                spec[key] = float(value)
            except ValueError:
                raise SpecError(f"line {lineno}: {key} must be a real number") from None
    validate_spec(spec)
    return spec


def validate_spec(spec: dict) -> None:
    fam = spec.get("family")
    if fam not in FAMILIES:
        raise SpecError(f"family must be one of {FAMILIES}, got {fam!r}")
    need = {"gp": ["p"], "alpha": ["alpha"], "stretch": ["gamma"], "file": ["file"]}[fam]
    for key in need:
        if spec.get(key) is None:
            raise SpecError(f"family {fam} requires {key}")
    if fam == "gp" and spec["p"] <= 0:
        raise SpecError("p must be positive")
    if fam == "alpha" and spec["alpha"] <= 0:
        raise SpecError("alpha must be positive")
    lam = complex(spec.get("lambda_re", 1.0 if fam == "alpha" else 1.0), spec.get("lambda_im", 0.0))
    if abs(lam) > 1:
        raise SpecError("|lambda| must be <= 1")
    if fam == "stretch" and abs(lam * spec["gamma"]) >= 1:
        raise SpecError("|lambda * gamma| must be < 1")


def spec_lambda(spec: dict) -> complex:
    lam = complex(spec.get("lambda_re", 1.0), spec.get("lambda_im", 0.0))
    return lam.real if lam.imag == 0 else lam


def profile_for_spec(spec: dict) -> RadialProfile | None:
    fam = spec["family"]
    lam = spec_lambda(spec)
    if fam == "gp":
        prof = gp_profile(spec["p"])
        if lam != 1:
            base = prof.gamma
            return profile_from_gamma(lambda t: lam * base(t), label=f"g_p(p={spec['p']}) x lambda={lam}")
        return prof
    if fam == "alpha":
        return alpha_profile(spec["alpha"], lam)
    if fam == "stretch":
        return stretch_profile(spec["gamma"], lam)
    return None


def coefficient_for_spec(spec: dict, grid: Grid) -> BeltramiCoefficient:
    prof = profile_for_spec(spec)
    if prof is not None:
        return radial_to_coefficient(prof, grid)
    f = read_field(spec["file"])
    if f.grid != grid:
        raise SpecError(f"coefficient file grid {f.grid} does not match run grid {grid}")
    mu = np.where(grid.r <= 1.0, f.samples, 0.0)
    return BeltramiCoefficient(ComplexField(grid, clamp_mu(mu)))
