"""Splitting a coefficient along hyperbolic geodesics, f = g o F.

For each sample, nu is the point on the segment [0, mu] at hyperbolic
distance log(K_mu / M) from the origin (or nu = 0 when K_mu <= M). F solves
the equation with nu and g the one with kappa, where
kappa = (mu - nu) / (1 - mu conj(nu)) up to a unimodular factor, so that the
distortion of g never exceeds M while the part of K_mu above M is moved into
F at the reduced scale K_mu / M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import logsumexp

from .coefficients import (BeltramiCoefficient, RadialProfile, log_rho_from_stretch)
from .field import ComplexField
from .report import ReportTable


def hyperbolic_distance(a) -> np.ndarray:
    """Distance from 0 to a point of modulus |a| in the disk metric, 2 artanh|a|."""
    a = np.abs(np.asarray(a))
    return np.log1p(a) - np.log1p(-a)


def modulus_from_distance(d) -> np.ndarray:
    return np.tanh(np.asarray(d, dtype=float) / 2.0)


def compose_dilatation(mu_f, mu_F, phase=1.0):
    """Dilatation of g where f = g o F, pulled back to the source: (mu_f - mu_F)/(1 - mu_f conj(mu_F)) phase^2."""
    mu_f = np.asarray(mu_f)
    mu_F = np.asarray(mu_F)
    out = (mu_f - mu_F) / (1.0 - mu_f * np.conj(mu_F)) * np.asarray(phase) ** 2
    return out[()] if out.ndim == 0 else out


def recover_dilatation(kappa, mu_F, phase=1.0):
    """Inverse of compose_dilatation in its first argument."""
    k = np.asarray(kappa) / np.asarray(phase) ** 2
    mu_F = np.asarray(mu_F)
    out = (k + mu_F) / (1.0 + k * np.conj(mu_F))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class SplitResult:
    nu: BeltramiCoefficient
    kappa_tilde: ComplexField
    M: float
    K_nu: np.ndarray = field(repr=False)
    K_mu: np.ndarray = field(repr=False)
    mu: BeltramiCoefficient | None = None

    @property
    def K_kappa(self) -> np.ndarray:
        k = self.kappa_tilde.abs()
        return (1.0 + k) / (1.0 - k)


def _split_moduli(a: np.ndarray, M: float):
    d = hyperbolic_distance(a)
    logM = math.log(M)
    d_nu = np.where(d > logM, d - logM, 0.0)
    return d, d_nu


def hyperbolic_split(mu: BeltramiCoefficient, M: float) -> SplitResult:
    if not M > 1:
        raise ValueError("M must exceed 1")
    s = mu.samples
    a = np.abs(s)
    d, d_nu = _split_moduli(a, M)
    nu_abs = modulus_from_distance(d_nu)
    # via the angle: complex division overflows for subnormal samples
    phase = np.where(a > 0, np.exp(1j * np.angle(s)), 0.0)
    nu = nu_abs * phase
    kappa = compose_dilatation(s, nu)
    K_mu = np.exp(d)
    K_nu = np.exp(d_nu)
    return SplitResult(
        nu=BeltramiCoefficient(ComplexField(mu.grid, nu), mu.support_radius),
        kappa_tilde=ComplexField(mu.grid, kappa),
        M=float(M),
        K_nu=K_nu,
        K_mu=K_mu,
        mu=mu,
    )


def split_identities(split: SplitResult) -> dict[str, float]:
    """Worst-case deviations of the exact split identities over all samples.

    ``kappa_cap``: relative error of K_kappa = min(K_mu, M); ``budget``:
    max of M K_nu - K_mu - M (must be <= 0); ``additivity``: distance
    defect d(0, nu) + d(nu, mu) - d(0, mu); ``roundtrip``: | |recovered mu| - |mu| |;
    ``phase``: deviation of arg nu from arg mu where nu != 0.
    """
    mu = split.mu.samples
    a = np.abs(mu)
    M = split.M
    k = split.kappa_tilde.abs()
    d_mu = hyperbolic_distance(a)
    d_nu = hyperbolic_distance(split.nu.samples)
    d_kappa = hyperbolic_distance(k)
    cap = np.minimum(d_mu, math.log(M))
    # compared in log form: K_kappa = min(K_mu, M)  <=>  d_kappa = min(d_mu, log M)
    kappa_cap = float(np.max(np.abs(np.expm1(d_kappa - cap)), initial=0.0))
    budget = float(np.max(M * split.K_nu - split.K_mu - M, initial=-math.inf))
    active = np.abs(split.nu.samples) > 0
    add = d_nu + d_kappa - d_mu
    additivity = float(np.max(np.abs(add[active]) / np.maximum(1.0, d_mu[active]), initial=0.0))
    back = recover_dilatation(split.kappa_tilde.samples, split.nu.samples)
    roundtrip = float(np.max(np.abs(np.abs(back) - a), initial=0.0))
    nu = split.nu.samples
    phase = float(np.max(np.abs(nu[active] / np.abs(nu[active]) - mu[active] / a[active]), initial=0.0))
    return dict(kappa_cap=kappa_cap, budget=budget, additivity=additivity, roundtrip=roundtrip, phase=phase)


def exp_bound_check(split: SplitResult, p: float) -> ReportTable:
    """Compare int_D e^{p M K_nu} with e^{p M} int_D e^{p K_mu}, in logarithms.

    The inequality already holds pointwise, M K_nu <= K_mu + M, so the
    pointwise slack is reported alongside.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    grid = split.nu.grid
    inside = grid.r <= 1.0
    log_area = 2 * math.log(grid.h)
    M = split.M
    log_lhs = float(logsumexp(p * M * split.K_nu[inside])) + log_area
    log_rhs = p * M + float(logsumexp(p * split.K_mu[inside])) + log_area
    slack = float(np.max(M * split.K_nu[inside] - split.K_mu[inside] - M, initial=-math.inf))
    table = ReportTable("exponential budget", ["p", "M", "log_lhs", "log_rhs", "pointwise_excess"])
    ok = log_lhs <= log_rhs + 1e-12 * abs(log_rhs) and slack <= 0
    table.add([p, M, log_lhs, log_rhs, slack], ok)
    return table


def factorization_report(split: SplitResult, p: float, tol: float = 1e-12) -> ReportTable:
    """Per-identity violations; each column must be <= 0."""
    ids = split_identities(split)
    table = ReportTable("factorization", ["kappa_cap", "budget", "additivity", "roundtrip", "phase", "exp_bound"])
    exp = exp_bound_check(split, p)
    r = exp.rows[0]
    row = [ids["kappa_cap"] - tol, ids["budget"], ids["additivity"] - tol, ids["roundtrip"] - tol,
           ids["phase"] - 1e-12, r[2] - r[3]]
    table.add(row, all(v <= 0 for v in row))
    table.footer.update({"p": p, "M": split.M})
    return table


# --- radial split ---------------------------------------------------------------

def _real_gamma(profile: RadialProfile, t) -> np.ndarray:
    g = np.asarray(profile.gamma(t))
    if np.iscomplexobj(g):
        if np.any(np.abs(g.imag) > 1e-14):
            raise ValueError("radial split needs a real dilatation profile")
        g = g.real
    return g.astype(float)


def distortion_crossings(profile: RadialProfile, M: float, u_max: float = 690.0, samples: int = 6000) -> list[float]:
    """Radii in (0, 1) where the distortion of the profile crosses M."""
    logM = math.log(M)

    def excess(u):
        t = np.exp(-np.atleast_1d(u))
        return hyperbolic_distance(_real_gamma(profile, t)) - logM

    u = np.concatenate([np.linspace(0.0, 10.0, samples // 2), np.geomspace(10.0, u_max, samples // 2)[1:]])
    e = excess(u)
    out = []
    for k in np.nonzero(np.sign(e[:-1]) * np.sign(e[1:]) < 0)[0]:
        r = optimize.brentq(lambda v: float(excess(v)[0]), u[k], u[k + 1], xtol=1e-14)
        out.append(math.exp(-r))
    return sorted(out)


@dataclass(frozen=True, eq=False)
class RadialSplit:
    F: RadialProfile
    g: RadialProfile
    M: float
    crossings: tuple[float, ...]


def split_radial_profile(profile: RadialProfile, M: float) -> RadialSplit:
    """Radial version of the hyperbolic split.

    F has stretch s_mu M^{-sign(gamma)} where K_mu > M and stretch 1 elsewhere, so
    log rho_F is a piecewise combination of log rho_mu and log t. g is then
    built by quadrature of s_kappa s_F along the source radius.
    """
    if not M > 1:
        raise ValueError("M must exceed 1")
    if abs(complex(profile.at_one()) - 1) > 1e-12:
        raise ValueError("profile must satisfy rho(1) = 1")
    logM = math.log(M)
    cross = distortion_crossings(profile, M)
    knots = [0.0] + cross + [1.0]

    def gamma_mu(t):
        return _real_gamma(profile, t)

    def gamma_F(t):
        g = gamma_mu(t)
        d = hyperbolic_distance(g)
        return np.sign(g) * modulus_from_distance(np.where(d > logM, d - logM, 0.0))

    def gamma_kappa(t):
        g = gamma_mu(t)
        return np.sign(g) * modulus_from_distance(np.minimum(hyperbolic_distance(g), logM))

    # piece table from t = 1 inward: (lo, hi, active, sign)
    pieces = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        if lo == 0.0:
            mid = hi * 1e-3 if hi < 1 else 0.5 * hi
        else:
            mid = math.sqrt(lo * hi)
        g = float(gamma_mu(np.array([mid]))[0])
        pieces.append((lo, hi, bool(hyperbolic_distance(g) > logM), math.copysign(1.0, g)))

    def log_rho_mu(t):
        return np.log(np.real(profile.rho(t)))

    def log_rho_F_scalar(t: float) -> float:
        total = 0.0
        for lo, hi, active, sgn in pieces:
            if hi <= t:
                continue
            a = max(lo, t)
            if active:
                delta = float(log_rho_mu(np.array([hi]))[0] - log_rho_mu(np.array([a]))[0])
                total -= delta * M ** (-sgn)
            else:
                total -= math.log(hi) - math.log(a)
        return total

    def rho_F(t):
        t = np.asarray(t, dtype=float)
        out = np.array([math.exp(log_rho_F_scalar(x)) if x < 1 else x for x in t.ravel()])
        return out.reshape(t.shape)

    def stretch_F(t):
        g = gamma_F(t)
        return (1 + g) / (1 - g)

    def drho_F(t):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 1, rho_F(t) * stretch_F(np.minimum(t, 1.0)) / t, 1.0)

    F = RadialProfile(rho_F, drho_F, lambda t: np.where(np.asarray(t) <= 1, gamma_F(np.minimum(t, 1.0)), 0.0),
                      label=f"F(M={M})")

    u_knots = [-math.log(c) for c in cross]

    def s_product(v):
        t = np.array([math.exp(-v)])
        gk = gamma_kappa(t)
        return float(((1 + gk) / (1 - gk) * stretch_F(t))[0])

    def tau_of(sigma: np.ndarray) -> np.ndarray:
        return F.inverse(sigma)

    def rho_g(sig):
        sig = np.asarray(sig, dtype=float)
        tau = tau_of(np.minimum(sig, 1.0).ravel())
        vals = np.exp(np.real(log_rho_from_stretch(s_product, -np.log(tau), u_knots)))
        return np.where(sig.ravel() <= 1, vals, sig.ravel()).reshape(sig.shape)

    def gamma_g(sig):
        sig = np.asarray(sig, dtype=float)
        tau = tau_of(np.minimum(sig, 1.0).ravel())
        return np.where(sig.ravel() <= 1, gamma_kappa(tau), 0.0).reshape(sig.shape)

    def drho_g(sig):
        sig = np.asarray(sig, dtype=float)
        gk = gamma_g(sig)
        return np.where(sig <= 1, rho_g(sig) * (1 + gk) / (1 - gk) / sig, 1.0)

    g = RadialProfile(rho_g, drho_g, gamma_g, label=f"g(M={M})")
    return RadialSplit(F, g, float(M), tuple(cross))


def compose_radial(F: RadialProfile, g: RadialProfile) -> RadialProfile:
    """Profile of g o F for radial maps, rho_g(rho_F(t))."""
    for prof in (F, g):
        if abs(complex(prof.at_one()) - 1) > 1e-10:
            raise ValueError(f"{prof.label}: composition needs rho(1) = 1")
    if not F.is_increasing(60):
        raise ValueError(f"{F.label}: profile is not increasing")
    # g only needs to be monotone on the range of F
    lo = float(np.real(F.rho(np.array([1e-12])))[0])
    if not g.is_increasing(60, lo=lo):
        raise ValueError(f"{g.label}: profile is not increasing")

    def rho(t):
        return g.rho(np.real(F.rho(t)))

    def drho(t):
        return g.drho(np.real(F.rho(t))) * F.drho(t)

    def gamma(t):
        t = np.asarray(t, dtype=float)
        s = g.stretch(np.real(F.rho(t))) * F.stretch(t)
        return (s - 1) / (s + 1)

    return RadialProfile(rho, drho, gamma, label=f"{g.label} o {F.label}")
