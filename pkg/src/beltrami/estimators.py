"""Numerical checks of the quantitative estimates for maps of exponentially
integrable distortion.

Radial maps are handled by 1-D quadrature in u = log(1/t), where the
integrands are smooth; grid solutions are handled by midpoint sums.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize

from .coefficients import BeltramiCoefficient, RadialProfile, bad_set_measure, chebyshev_bound
from .field import Grid, RegionMask, l2_norm, restrict
from .neumann import NeumannRun, PrincipalSolution
from .report import ReportTable
from .transforms import SpectralPlan

QUAD_TOL = 1e-10
EPS_SWEEP = tuple(10.0 ** -k for k in range(3, 13))
CONVERGENCE_TOL = 0.01
GROWTH_TARGET = 2.0
BOUNDED_RATIO = 2.0
# t = e^{-U_MAX} is the smallest radius that stays a normal double
U_MAX = 700.0


def _scalar(fn: Callable, t: float) -> float:
    return float(np.real(np.asarray(fn(np.array([t])))[0]))


def radial_integral(fn: Callable[[float], float], u0: float, u1: float, tol: float = QUAD_TOL) -> float:
    """2 pi int over e^{-u1} < t < e^{-u0} of fn(t) t dt, integrated in u."""
    return radial_integral_u(lambda u: fn(math.exp(-u)) * math.exp(-2 * u), u0, u1, tol)


def radial_integral_u(fn_u: Callable[[float], float], u0: float, u1: float, tol: float = QUAD_TOL) -> float:
    """2 pi int_{u0}^{u1} fn_u(u) du, where fn_u already carries the factor t^2."""
    if u1 <= u0:
        return 0.0
    val, _ = integrate.quad(fn_u, u0, u1, epsabs=tol * 1e-2, epsrel=1e-11, limit=500)
    return 2 * math.pi * val


def _parts(profile: RadialProfile, u: float) -> tuple[complex, complex]:
    r, d = profile.scaled_parts(np.array([math.exp(-u)]))
    return complex(r[0]), complex(d[0])


def _scaled_df(r: complex, d: complex) -> float:
    """t |Df| for a radial map, |f_z| + |f_zbar| = (|rho' + rho/t| + |rho' - rho/t|)/2."""
    return 0.5 * (abs(d + r) + abs(d - r))


def _log_e_plus(log_x: float) -> float:
    """log(e + x) given log x."""
    return float(np.logaddexp(1.0, log_x))


# --- rearrangement ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RearrangedField:
    values: np.ndarray = field(repr=False)
    cell_measure: float
    cumulative: np.ndarray = field(repr=False)

    @property
    def total_measure(self) -> float:
        return self.values.size * self.cell_measure

    def integral_up_to(self, t: float) -> float:
        """int_0^t J*, exact for the step function J*."""
        if t <= 0:
            return 0.0
        k = min(int(t // self.cell_measure), self.values.size)
        base = self.cumulative[k - 1] if k > 0 else 0.0
        if k < self.values.size:
            base += (t - k * self.cell_measure) * self.values[k]
        return float(base)

    def maximal_bound_holds(self, tol: float = 1e-12) -> bool:
        """J*(t) <= (1/t) int_0^t J* at every step end."""
        t = self.cell_measure * np.arange(1, self.values.size + 1)
        return bool(np.all(self.values <= self.cumulative / t * (1 + tol) + tol))


def rearrange(J: np.ndarray, region: RegionMask, tol: float = 1e-9) -> RearrangedField:
    J = np.asarray(J, dtype=float)
    if J.shape != region.bits.shape:
        raise ValueError("field does not match mask grid")
    vals = J[region.bits]
    if vals.size and vals.min() < -tol:
        raise ValueError(f"rearrangement needs J >= 0, found {vals.min():.3e}")
    vals = np.sort(np.maximum(vals, 0.0))[::-1]
    h2 = region.grid.cell_area
    cum = h2 * np.cumsum(vals)
    vals.setflags(write=False)
    cum.setflags(write=False)
    return RearrangedField(vals, h2, cum)


# --- modulus of continuity -----------------------------------------------------------

def _gradient(u: np.ndarray, grid: Grid, method: str, plan: SpectralPlan | None):
    if method == "spectral":
        return (plan or SpectralPlan(grid)).gradient(u)
    if method == "central":
        gx, gy = np.gradient(u, grid.h, edge_order=2)
        return gx, gy
    raise ValueError(f"unknown gradient method {method!r}")


def monotonicity_heuristic(u: np.ndarray, grid: Grid, rng: np.random.Generator,
                           disks: int = 50, tol: float = 1e-10) -> int:
    """Count subdisks where an interior value escapes the boundary range."""
    bad = 0
    z, h = grid.z, grid.h
    for _ in range(disks):
        r = rng.uniform(4 * h, 0.5)
        c = complex(*rng.uniform(-1, 1, 2))
        while abs(c) + r > 1:
            c *= 0.5
            r *= 0.9
        d = np.abs(z - c)
        inner = d < r - h
        ring = (d >= r - h) & (d < r + h)
        if not inner.any() or not ring.any():
            continue
        lo, hi = u[ring].min(), u[ring].max()
        span = max(hi - lo, 1.0) * tol
        if u[inner].max() > hi + span or u[inner].min() < lo - span:
            bad += 1
    return bad


def modulus_check(u: np.ndarray, grid: Grid, pairs: Sequence[tuple[complex, complex]],
                  gradient: str = "spectral", plan: SpectralPlan | None = None, seed: int = 0) -> ReportTable:
    """|u(a) - u(b)|^2 <= pi int_{3D} |grad u|^2 / log(e + 1/|a - b|) on snapped pairs."""
    if grid.L < 3:
        raise ValueError("the energy over the disk of radius 3 needs L >= 3")
    u = np.asarray(u, dtype=float)
    gx, gy = _gradient(u, grid, gradient, plan)
    energy = grid.cell_area * float(np.sum((gx ** 2 + gy ** 2)[grid.r < 3.0]))
    bad = monotonicity_heuristic(u, grid, np.random.default_rng(seed))
    if bad:
        warnings.warn(f"{bad} of 50 subdisks break the max/min principle; u may not be monotone", stacklevel=2)
    table = ReportTable("modulus of continuity", ["pair", "distance", "lhs", "rhs", "ratio"])
    for k, (a, b) in enumerate(pairs):
        if abs(a) >= 1 or abs(b) >= 1:
            raise ValueError(f"pair {k} leaves the unit disk")
        ia, ib = grid.nearest_index(complex(a)), grid.nearest_index(complex(b))
        if ia == ib:
            continue
        dist = abs(grid.z[ia] - grid.z[ib])
        lhs = (u[ia] - u[ib]) ** 2
        rhs = math.pi * energy / math.log(math.e + 1 / dist)
        table.add([k, dist, lhs, rhs, lhs / rhs], lhs <= rhs)
    table.footer["energy"] = energy
    table.footer["nonmonotone_disks"] = bad
    if table.rows:
        table.footer["worst_ratio"] = max(table.column("ratio"))
    return table


def smooth_cutoff(grid: Grid, inner: float, outer: float) -> np.ndarray:
    """1 for |z| <= inner, 0 for |z| >= outer, C^1 smoothstep between.

    Multiplying a non-periodic field by it makes spectral derivatives
    meaningful inside the disk of radius ``inner``.
    """
    s = np.clip((outer - grid.r) / (outer - inner), 0.0, 1.0)
    return s * s * (3 - 2 * s)


def random_pairs(count: int, seed: int = 0, radius: float = 0.999) -> list[tuple[complex, complex]]:
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, (count, 2)))
    th = rng.uniform(0, 2 * math.pi, (count, 2))
    pts = r * np.exp(1j * th)
    return [(complex(a), complex(b)) for a, b in pts]


# --- inverse maps ------------------------------------------------------------

def _check_invertible(profile: RadialProfile) -> RadialProfile:
    prof = profile.normalized()
    if np.iscomplexobj(np.asarray(prof.rho(np.array([0.5])))) or not prof.is_increasing():
        raise ValueError(f"{profile.label}: profile is not a real increasing function")
    return prof


def distortion_integral(profile: RadialProfile) -> float:
    """int_D K for a radial map."""
    return radial_integral(lambda t: _scalar(profile.distortion, t), 0.0, U_MAX)


def inverse_energy_check(profile: RadialProfile) -> ReportTable:
    """int (|g_wbar|^2 + |g_w - 1|^2) <= 2 int_D K for g the inverse of f.

    The left side is pulled back through s = rho(t), so the inverse profile
    never has to be tabulated: g_w and g_wbar become 1/rho' and t/rho.
    """
    prof = _check_invertible(profile)

    def integrand(u):
        r, d = (c.real for c in _parts(prof, u))
        if r * d == 0:
            # rho decays faster than t; the pulled-back density is below t^2 here
            return 0.0
        t = math.exp(-u)
        return 0.25 * ((t * (r - d)) ** 2 + (t * (r + d) - 2 * r * d) ** 2) / (r * d)

    lhs = radial_integral_u(integrand, 0.0, U_MAX)
    rhs = 2 * distortion_integral(prof)
    table = ReportTable("inverse energy", ["lhs", "rhs"])
    table.add([lhs, rhs], lhs <= rhs)
    return table


def continuity_bound_check(profile: RadialProfile, R: float, pairs: Sequence[tuple[complex, complex]]) -> ReportTable:
    """|g(a) - g(b)|^2 <= (4 pi)^2 (R^2 + int_D K) / log(e + 1/|a - b|) for a, b in D(R)."""
    if R < 1:
        raise ValueError("R must be >= 1")
    prof = _check_invertible(profile)
    kint = distortion_integral(prof)
    table = ReportTable("inverse continuity", ["pair", "distance", "lhs", "rhs", "ratio"])

    def inv(w: complex) -> complex:
        s = abs(w)
        if s == 0:
            return 0j
        return w / s * float(prof.inverse([s])[0])

    for k, (a, b) in enumerate(pairs):
        if abs(a) > R or abs(b) > R:
            raise ValueError(f"pair {k} leaves the disk of radius {R}")
        dist = abs(a - b)
        if dist == 0:
            continue
        lhs = abs(inv(a) - inv(b)) ** 2
        rhs = (4 * math.pi) ** 2 * (R ** 2 + kint) / math.log(math.e + 1 / dist)
        table.add([k, dist, lhs, rhs, lhs / rhs], lhs <= rhs)
    table.footer["distortion_integral"] = kint
    return table


# --- restricted norms and area distortion ------------------------------------------

def restricted_norm_curve(run: NeumannRun, masks: Sequence[RegionMask], beta: float) -> ReportTable:
    """||chi_E sigma|| + ||chi_E S sigma|| against log^{1 - beta/2}(e + 1/|E|)."""
    if beta <= 2:
        raise ValueError("beta must exceed 2")
    table = ReportTable("restricted norms", ["measure", "lhs", "ratio"])
    for E in masks:
        m = E.count * E.grid.cell_area
        if m == 0:
            continue
        lhs = l2_norm(restrict(run.sigma, E)) + l2_norm(restrict(run.s_sigma, E))
        table.add([m, lhs, lhs / math.log(math.e + 1 / m) ** (1 - beta / 2)])
    ratios = np.array(table.column("ratio"))
    med = float(np.median(ratios)) if ratios.size else 0.0
    table.checks["bounded"] = bool(ratios.size == 0 or ratios.max() <= BOUNDED_RATIO * med or ratios.max() == 0)
    return table


def area_distortion_curve(profile: RadialProfile, radii: Sequence[float], beta: float, p: float) -> ReportTable:
    """|f(D_r)| = pi rho(r)^2 weighted by log^beta(e + 1/|D_r|).

    For beta < p the weighted column must stay bounded (max <= 2 median);
    for beta >= p it is expected to grow by a factor 2 across the sweep.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any((radii <= 0) | (radii >= 1)):
        raise ValueError("radii must lie in (0, 1)")
    radii = np.sort(radii)[::-1]
    table = ReportTable("area distortion", ["r", "measure", "image_measure", "weighted"])
    for r in radii:
        E = math.pi * r * r
        fE = math.pi * abs(complex(np.asarray(profile.rho(np.array([r])))[0])) ** 2
        table.add([r, E, fE, fE * math.log(math.e + 1 / E) ** beta])
    w = np.array(table.column("weighted"))
    table.footer["max_over_median"] = float(w.max() / np.median(w))
    table.footer["last_over_first"] = float(w[-1] / w[0])
    if beta < p:
        table.checks["bounded"] = bool(w.max() <= BOUNDED_RATIO * np.median(w))
    else:
        table.checks["growth"] = bool(w[-1] >= GROWTH_TARGET * w[0])
    table.footer.update({"beta": beta, "p": p})
    return table


def quasiconformal_area_bound(profile: RadialProfile, radii: Sequence[float], M: float) -> ReportTable:
    """|f(D_r)| <= pi M |D_r|^{1/M} for an M-quasiconformal radial map."""
    table = ReportTable("quasiconformal area", ["r", "image_measure", "bound"])
    for r in radii:
        E = math.pi * r * r
        fE = math.pi * abs(complex(np.asarray(profile.rho(np.array([r])))[0])) ** 2
        bound = math.pi * M * E ** (1 / M)
        table.add([r, fE, bound], fE <= bound * (1 + 1e-12))
    return table


# --- regularity integrals -------------------------------------------------------

def _profile_densities(profile: RadialProfile, beta: float):
    """Integrands in u for the two regularity integrals, t^2 included."""

    def energy(u):
        dt = _scaled_df(*_parts(profile, u))
        if dt == 0:
            return 0.0
        return dt * dt * _log_e_plus(math.log(dt) + u) ** (beta - 1)

    def jac(u):
        r, d = _parts(profile, u)
        jt = (d * r.conjugate()).real
        if jt <= 0:
            return 0.0
        return jt * _log_e_plus(math.log(jt) + 2 * u) ** beta

    return energy, jac


def regularity_integrals(source, beta: float, eps: Sequence[float] = EPS_SWEEP, p: float | None = None) -> ReportTable:
    """int |Df|^2 log^{beta-1}(e + |Df|) and int J log^beta(e + J) over the disk.

    For a radial profile the integrals run over eps < |z| < 1 for each eps
    in the sweep; convergence (last two within 1%) is asserted when
    beta < p and growth by a factor 2 when beta >= p. For a grid solution
    the two integrals are single midpoint sums over the unit disk.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if isinstance(source, PrincipalSolution):
        g = source.grid
        inside = g.r <= 1.0
        d = (np.abs(source.fz.samples) + np.abs(source.fzbar.samples))[inside]
        J = np.maximum(source.jacobian[inside], 0.0)
        table = ReportTable("regularity integrals", ["energy", "jacobian"])
        table.add([g.cell_area * float(np.sum(d * d * np.log(np.e + d) ** (beta - 1))),
                   g.cell_area * float(np.sum(J * np.log(np.e + J) ** beta))])
        return table
    energy, jac = _profile_densities(source, beta)
    eps = sorted(eps, reverse=True)
    table = ReportTable("regularity integrals", ["eps", "energy", "jacobian"])
    u_prev, e_acc, j_acc = 0.0, 0.0, 0.0
    for e in eps:
        u = -math.log(e)
        e_acc += radial_integral_u(energy, u_prev, u)
        j_acc += radial_integral_u(jac, u_prev, u)
        u_prev = u
        table.add([e, e_acc, j_acc])
    if p is not None and len(eps) >= 2:
        en, ja = table.column("energy"), table.column("jacobian")
        if beta < p:
            table.checks["converged"] = all(abs(c[-1] - c[-2]) <= CONVERGENCE_TOL * abs(c[-1]) for c in (en, ja))
        else:
            table.checks["growth"] = all(c[-1] >= GROWTH_TARGET * c[0] and c[-1] > c[-2] for c in (en, ja))
        table.footer["energy_growth"] = en[-1] / en[0]
        table.footer["jacobian_growth"] = ja[-1] / ja[0]
        table.footer.update({"beta": beta, "p": p})
    return table


# --- Orlicz inequality --------------------------------------------------------------

def orlicz_bound_check(source, p: float, coefficient: BeltramiCoefficient | None = None) -> ReportTable:
    """int |Df|^2 / log(e + |Df|) <= (2/p) int J + (2/p) int (e^{pK} - 1) over the disk."""
    if p <= 0:
        raise ValueError("p must be positive")
    if isinstance(source, PrincipalSolution):
        g = source.grid
        inside = g.r <= 1.0
        mu = coefficient or source.coefficient
        d = (np.abs(source.fz.samples) + np.abs(source.fzbar.samples))[inside]
        K = mu.distortion()[inside]
        with np.errstate(over="ignore"):
            lhs = g.cell_area * float(np.sum(d * d / np.log(np.e + d)))
            jint = g.cell_area * float(np.sum(source.jacobian[inside]))
            kint = g.cell_area * float(np.sum(np.expm1(p * K)))
    else:
        prof = source

        def lhs_density(u):
            dt = _scaled_df(*_parts(prof, u))
            if dt == 0:
                return 0.0
            return dt * dt / _log_e_plus(math.log(dt) + u)

        def jac(u):
            r, d = _parts(prof, u)
            return (d * r.conjugate()).real

        def kexp(u):
            # e^{pK} t^2 - t^2, kept in exponent form so large K cannot overflow
            K = _scalar(prof.distortion, math.exp(-u))
            if p * K - 2 * u > 700:
                raise OverflowError
            return math.exp(p * K - 2 * u) - math.exp(-2 * u)

        lhs = radial_integral_u(lhs_density, 0.0, U_MAX)
        jint = radial_integral_u(jac, 0.0, U_MAX)
        try:
            kint = radial_integral_u(kexp, 0.0, U_MAX)
        except OverflowError:
            kint = math.inf
    rhs = (2 / p) * jint + (2 / p) * kint
    table = ReportTable("orlicz bound", ["lhs", "jacobian_integral", "exp_integral", "rhs"])
    table.add([lhs, jint, kint, rhs], lhs <= rhs)
    return table


# --- elementary inequality ----------------------------------------------------------

def _log_lhs(x, y, beta):
    return np.log(x) + np.log(y) + (beta - 1) * np.log(np.log(np.e + np.sqrt(x * y)))


def elementary_constants(beta: float, p: float) -> tuple[float, float]:
    """Constants for x y log^{beta-1}(e + sqrt(xy)) <= C1 x log^beta(e + x) + C2 e^{py}.

    Split at x = e^{py/2}. Above it y <= (2/p) log x, which gives C1; below
    it the left side is at most e^{py/2} y log^{beta-1}(e + e^{py/4} sqrt(y)),
    and C2 is the supremum of that against e^{py}.
    """
    if beta <= 0 or p <= 0:
        raise ValueError("beta and p must be positive")
    if beta < 1:
        return max(1.0, (2 / p) * 2 ** (1 - beta)), 2 / (p * math.e)
    c1 = (2 / p) * (1 + math.log(max(1.0, math.sqrt(2 / (p * math.e))))) ** (beta - 1)
    c1 = max(c1, 2 / p)

    def neg(log_y):
        y = math.exp(log_y)
        inner = math.log(math.e + math.exp(p * y / 4) * math.sqrt(y)) if p * y / 4 < 700 else p * y / 4 + 0.5 * log_y
        return -(log_y + (beta - 1) * math.log(inner) - p * y / 2)

    grid = np.linspace(-20, math.log(2000 / p), 4000)
    k = int(np.argmin([neg(v) for v in grid]))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    best = optimize.minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    c2 = math.exp(-min(best.fun, neg(grid[k])))
    return c1, c2 * (1 + 1e-6)


def elementary_inequality_check(beta: float, p: float, size: int = 200,
                                x_range=(1e-12, 1e12), y_range=(1e-12, 100.0)) -> tuple[float, float, ReportTable]:
    c1, c2 = elementary_constants(beta, p)
    x = np.geomspace(*x_range, size)[:, None]
    y = np.geomspace(*y_range, size)[None, :]
    log_l = _log_lhs(x, y, beta)
    log_r = np.logaddexp(math.log(c1) + np.log(x) + beta * np.log(np.log(np.e + x)),
                         math.log(c2) + p * y)
    excess = log_l - log_r
    worst = float(excess.max())
    table = ReportTable("elementary inequality", ["beta", "p", "C1", "C2", "worst_log_ratio", "violations"])
    violations = int(np.count_nonzero(excess > 1e-12))
    table.add([beta, p, c1, c2, worst, violations], violations == 0)
    return c1, c2, table


# --- grid checks ----------------------------------------------------------------

def bieberbach_check(solution: PrincipalSolution, radii: Sequence[float] = (1.0, 1.25, 1.5, 2.0)) -> ReportTable:
    """int_{D(r)} J <= pi r^2 + 10 h r for r >= 1."""
    g = solution.grid
    table = ReportTable("area theorem", ["r", "jacobian_integral", "bound"])
    for r in radii:
        if r < 1:
            raise ValueError("radii must be >= 1")
        val = g.cell_area * float(np.sum(solution.jacobian[g.r < r]))
        bound = math.pi * r * r + 10 * g.h * r
        table.add([r, val, bound], val <= bound)
    return table


def bad_set_check(mu: BeltramiCoefficient, beta: float, p: float, ns: Sequence[int] = range(1, 7)) -> ReportTable:
    """|{|mu| > 1 - beta/(2n + beta)}| against the Chebyshev bound."""
    table = ReportTable("bad sets", ["n", "measure", "bound"])
    for n in ns:
        m = bad_set_measure(mu, n, beta)
        b = chebyshev_bound(mu, n, beta, p)
        table.add([n, m, b], m <= b * (1 + 1e-12))
    return table


def image_area_consistency(profile: RadialProfile, solution: PrincipalSolution, radii: Sequence[float]) -> ReportTable:
    """pi rho(r)^2 against the grid integral of J over D_r."""
    g = solution.grid
    table = ReportTable("image area", ["r", "exact", "grid"])
    for r in radii:
        exact = math.pi * abs(complex(np.asarray(profile.rho(np.array([r])))[0])) ** 2
        grid_val = g.cell_area * float(np.sum(solution.jacobian[g.r < r]))
        table.add([r, exact, grid_val])
    return table
