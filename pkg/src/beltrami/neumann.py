"""Neumann-series solution of f_zbar = mu f_z for the principal solution.

The density omega = f_zbar is the sum of the terms psi_0 = mu and
psi_n = mu S(psi_{n-1}); then f_z = 1 + S(omega) and f = z + C(omega).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.signal import lfilter

from .coefficients import BeltramiCoefficient, RadialProfile
from .field import ComplexField, RegionMask, l2_norm, restrict
from .report import ReportTable
from .transforms import SpectralPlan, thread_cap

STALL_STEPS = 8


@dataclass(frozen=True, eq=False)
class NeumannRun:
    coefficient: BeltramiCoefficient
    terms_computed: int
    psi: ComplexField
    s_psi: ComplexField
    sigma: ComplexField
    s_sigma: ComplexField
    norms: tuple[float, ...]
    stalled: int = 0
    diverging: bool = False

    @property
    def converged(self) -> bool:
        return not self.diverging


def start_run(mu: BeltramiCoefficient, plan: SpectralPlan) -> NeumannRun:
    psi = mu.mu
    s_psi = plan.beurling(psi)
    return NeumannRun(mu, 1, psi, s_psi, psi, s_psi, (l2_norm(psi),))


def step(run: NeumannRun, plan: SpectralPlan) -> NeumannRun:
    psi = run.coefficient.mu * run.s_psi
    s_psi = plan.beurling(psi)
    norm = l2_norm(psi)
    stalled = run.stalled + 1 if norm >= run.norms[-1] and norm > 0 else 0
    return replace(
        run,
        terms_computed=run.terms_computed + 1,
        psi=psi,
        s_psi=s_psi,
        sigma=run.sigma + psi,
        s_sigma=run.s_sigma + s_psi,
        norms=run.norms + (norm,),
        stalled=stalled,
        diverging=run.diverging or stalled >= STALL_STEPS,
    )


def run_terms(mu: BeltramiCoefficient, plan: SpectralPlan, n_terms: int) -> NeumannRun:
    """Compute psi_0 .. psi_{n_terms - 1}."""
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    run = start_run(mu, plan)
    while run.terms_computed < n_terms:
        run = step(run, plan)
    return run


@dataclass(frozen=True, eq=False)
class PrincipalSolution:
    displacement: ComplexField
    fz: ComplexField
    fzbar: ComplexField
    jacobian: np.ndarray = field(repr=False)
    coefficient: BeltramiCoefficient | None = None
    norms: tuple[float, ...] = ()
    converged: bool = True
    offset: complex = 0j

    @property
    def grid(self):
        return self.fz.grid

    @property
    def terms(self) -> int:
        return len(self.norms)

    def values(self) -> np.ndarray:
        """Samples of f; the offset restores f(z) - z -> 0 at infinity."""
        return self.grid.z + self.displacement.samples + self.offset

    def residual(self) -> float:
        """Relative L2 residual of the Beltrami equation."""
        if self.coefficient is None:
            raise ValueError("solution carries no coefficient")
        top = l2_norm(self.fzbar - self.coefficient.mu * self.fz)
        bottom = l2_norm(self.fzbar)
        return top / bottom if bottom > 0 else top

    def truncation_bound(self) -> float:
        if self.coefficient is None:
            return math.inf
        k = self.coefficient.sup_norm
        if k >= 1:
            return math.inf
        return k ** (self.terms + 1) * math.sqrt(math.pi) / (1 - k)


def assemble(run: NeumannRun, plan: SpectralPlan) -> PrincipalSolution:
    """Build f from the partial sums of a run.

    The periodic Cauchy transform drops the mean of the density, which on
    the torus turns into a spurious conj(z) drift; adding mean * conj(z)
    back cancels that to leading order while keeping the displacement mean
    free on the symmetric grid.
    """
    grid = run.sigma.grid
    sigma = run.sigma
    m = sigma.mean()
    zb = np.conj(grid.z)
    disp = plan.cauchy(sigma).samples + m * zb
    disp = disp - disp.mean()
    # mean of the planar transform over the box, to leading order in 1/L
    offset = -grid.cell_area * complex(np.sum(sigma.samples * zb)) / (4.0 * grid.L ** 2)
    fz = ComplexField(grid, 1.0 + run.s_sigma.samples)
    jac = np.abs(fz.samples) ** 2 - np.abs(sigma.samples) ** 2
    jac.setflags(write=False)
    return PrincipalSolution(
        displacement=ComplexField(grid, disp),
        fz=fz,
        fzbar=sigma,
        jacobian=jac,
        coefficient=run.coefficient,
        norms=run.norms,
        converged=run.converged,
        offset=offset,
    )


def solve(mu: BeltramiCoefficient, plan: SpectralPlan, n_terms: int) -> PrincipalSolution:
    return assemble(run_terms(mu, plan, n_terms), plan)


def solve_lambda(mu: BeltramiCoefficient, plan: SpectralPlan, lam: complex, n_terms: int) -> PrincipalSolution:
    if abs(lam) >= 1:
        raise ValueError("|lambda| must be < 1")
    return solve(BeltramiCoefficient(mu.mu * lam, mu.support_radius), plan, n_terms)


def lambda_terms_needed(k: float, tol: float = 1e-16, cap: int = 400) -> int:
    if k <= 0:
        return 1
    if k >= 1:
        return cap
    return min(cap, max(1, int(math.ceil(math.log(tol) / math.log(k)))))


def contour_term(mu: BeltramiCoefficient, plan: SpectralPlan, n: int, E: RegionMask | None = None,
                 rho: float = 0.5, nodes: int = 64, n_terms: int | None = None,
                 workers: int | None = None) -> ComplexField:
    """Extract the term (mu S)^n mu restricted to E from the family f^lambda.

    f^lambda_zbar = sum_k lambda^{k+1} psi_k, so the coefficient of
    lambda^{n+1} is the trapezoid sum (1/N) sum_j lambda_j^{-(n+1)} f^{lambda_j}_zbar
    over N equispaced nodes on |lambda| = rho. Node solves run concurrently
    and are reduced in node order.
    """
    if nodes < 16:
        raise ValueError("need at least 16 nodes")
    if not 0 < rho < 1:
        raise ValueError("contour radius must lie in (0, 1)")
    if n < 0:
        raise ValueError("n must be >= 0")
    grid = mu.grid
    if E is None:
        E = grid.full()
    if n_terms is None:
        # the series in lambda must stay below the aliasing order n + 1 + nodes
        n_terms = min(lambda_terms_needed(rho * mu.sup_norm), n + nodes)
    lams = rho * np.exp(2j * np.pi * np.arange(nodes) / nodes)

    def node(lam):
        run = run_terms(BeltramiCoefficient(mu.mu * lam, mu.support_radius), plan, n_terms)
        return lam ** (-(n + 1)) * run.sigma.samples

    w = workers if workers is not None else thread_cap()
    if w > 1:
        with ThreadPoolExecutor(max_workers=w) as pool:
            parts = list(pool.map(node, lams))
    else:
        parts = [node(lam) for lam in lams]
    total = np.zeros((grid.n, grid.n), dtype=complex)
    for part in parts:
        total += part
    return restrict(ComplexField(grid, total / nodes), E)


# --- radial reduction ------------------------------------------------------------

@dataclass(frozen=True)
class RadialSeries:
    """Term norms of the series for mu = (z/zbar) gamma(|z|), computed in 1-D.

    Every term has the form a_n(t) e^{2 i theta}. Writing u = log(1/t) and
    ahat = a e^{-u}, the Beurling transform of a e^{2 i theta} is the radial
    function a(t) - 2 int_t^1 a(s) ds/s, and ||a e^{2 i theta}||^2 = 2 pi int |ahat|^2 du.
    """

    norms: tuple[float, ...]
    u_max: float
    du: float
    label: str = ""


def radial_series(profile: RadialProfile, n_terms: int, u_max: float = 300.0, du: float = 1e-3) -> RadialSeries:
    if n_terms < 1:
        raise ValueError("n_terms must be >= 1")
    u = np.arange(0.0, u_max + du / 2, du)
    t = np.exp(-u)
    g = np.asarray(profile.gamma(t), dtype=complex)
    e = math.exp(-du)
    b = [du / 2, du / 2 * e]
    a = [1.0, -e]
    decay = np.exp(-u)  # homogeneous response, removes the spurious start value

    def norm(x):
        return math.sqrt(2 * math.pi * np.trapezoid(np.abs(x) ** 2, dx=du))

    ahat = g * decay
    norms = [norm(ahat)]
    for _ in range(n_terms - 1):
        integral = lfilter(b, a, ahat) - (du / 2) * ahat[0] * decay
        ahat = g * (ahat - 2.0 * integral)
        norms.append(norm(ahat))
    return RadialSeries(tuple(norms), u_max, du, profile.label)


# --- decay report ------------------------------------------------------------

GROWTH_FACTOR = 1.1


def tail_slope(norms: Sequence[float]) -> float:
    """Decay rate dhat from a least squares fit of log norm against log n on [N/2, N]."""
    N = len(norms) - 1
    n = np.arange(max(1, N // 2), N + 1)
    y = np.asarray(norms, dtype=float)[n]
    keep = y > 0
    if keep.sum() < 2:
        return math.inf
    slope = np.polyfit(np.log(n[keep]), np.log(y[keep]), 1)[0]
    return float(-slope)


def decay_report(source, beta: float, p: float | None = None) -> ReportTable:
    """Envelope (n+1)^{beta/2} ||psi_n|| and tail decay rate for a run.

    ``source`` is a NeumannRun, a RadialSeries or a plain sequence of norms
    indexed from n = 0.
    """
    norms = list(getattr(source, "norms", source))
    if len(norms) < 16:
        raise ValueError("decay report needs at least 16 terms")
    N = len(norms) - 1
    table = ReportTable("term decay", ["n", "norm", "envelope"])
    env = []
    for n, v in enumerate(norms):
        a_n = (n + 1) ** (beta / 2) * v
        env.append(a_n)
        table.add([n, v, a_n])
    half = N // 2
    head = max(env[1:half + 1])
    tail = max(env[half:N + 1])
    dhat = tail_slope(norms)
    table.checks["envelope_bounded"] = bool(tail <= GROWTH_FACTOR * head)
    table.footer["dhat"] = dhat
    table.footer["beta"] = beta
    if p is not None:
        table.footer["p"] = p
    table.footer["envelope_ratio"] = tail / head if head > 0 else 0.0
    return table
