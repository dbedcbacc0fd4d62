"""Entropies, Fisher informations, free energies and best-matching scales."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import (
    LOG_FLOOR,
    Grid,
    GridFunction,
    gaussian_density,
    gradient,
    quad,
    quad_abs,
    xlogx,
)
from .profiles import (
    ProfileError,
    ProfileSpec,
    barenblatt_mass,
    barenblatt_source,
    check_exponent,
    scaling_alpha,
)

SUPPORT_FLOOR = 1e-10
MATCH_SWEEPS = 3


class FunctionalError(ValueError):
    pass


@dataclass(frozen=True)
class GaussianParams:
    mass: float
    temperature: float
    d: int

    def __post_init__(self):
        if self.mass <= 0 or self.temperature <= 0:
            raise FunctionalError("Gaussian parameters must be positive")

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.mass * (2 * np.pi * self.temperature) ** (-self.d / 2) * np.exp(
            -(x ** 2) / (2 * self.temperature)
        )


@dataclass(frozen=True)
class MomentReport:
    mass: float
    second_moment: float
    temperature: float


def moments(f: GridFunction) -> MomentReport:
    g = f.grid
    mass = quad(g, f.values)
    if mass <= 0:
        raise FunctionalError("zero mass")
    m2 = quad(g, g.r2 * f.values)
    return MomentReport(mass, m2, m2 / (g.d * mass))


# --- Gaussian-measure functionals ---------------------------------------------

def l2_mu_sq(u: GridFunction) -> float:
    return quad(u.grid, u.values ** 2 * gaussian_density(u.grid))


def gaussian_entropy(u: GridFunction) -> float:
    """Normalized entropy E[u] = int |u|^2/|u|_2^2 log(|u|^2/|u|_2^2) d mu."""
    nrm2 = l2_mu_sq(u)
    if nrm2 <= 0:
        raise FunctionalError("zero norm")
    w = u.values ** 2 / nrm2
    return quad(u.grid, xlogx(w) * gaussian_density(u.grid))


def dirichlet_density(grid: Grid, values: np.ndarray) -> np.ndarray:
    """|grad v|^2 at the nodes.

    For strictly positive v this is v^2 |grad log v|^2: log-concave profiles
    have nearly polynomial logarithms, which the stencil differentiates far
    more accurately than v itself (exactly, for Gaussians).
    """
    v = np.asarray(values, dtype=float)
    if np.all(v > 0):
        return v ** 2 * gradient(grid, np.log(v)) ** 2
    return gradient(grid, v) ** 2


def gaussian_fisher(u: GridFunction) -> float:
    """int |grad u|^2 d mu."""
    return quad(u.grid, dirichlet_density(u.grid, u.values) * gaussian_density(u.grid))


def lp_norm_mu(u: GridFunction, p: float) -> float:
    if not 1 <= p <= 2:
        raise FunctionalError(f"p={p} outside [1, 2]")
    return quad(u.grid, np.abs(u.values) ** p * gaussian_density(u.grid)) ** (1 / p)


def density_to_u(f: GridFunction) -> GridFunction:
    """u = sqrt(f / mu): the Gaussian-space function whose |u|^2 mu is f."""
    d = f.grid.d

    def conv(x, vals):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.maximum(vals, 0.0) * (2 * np.pi) ** (d / 2)) * np.exp(x ** 2 / 4)

    src = None
    if f.source is not None:
        s0 = f.source
        src = lambda x: conv(x, s0(x))  # noqa: E731
    return GridFunction(f.grid, conv(f.grid.nodes, f.values), True, src)


# --- Lebesgue functionals --------------------------------------------------------

def best_gaussian(f: GridFunction) -> GaussianParams:
    m = moments(f)
    return GaussianParams(m.mass, m.temperature, f.grid.d)


def relative_entropy(f: GridFunction, g: GaussianParams) -> float:
    """e[f|mu] = int f log(f/mu) - (f - mu)."""
    x = f.grid.nodes
    mu = g.density(x)
    fv = f.values
    ratio = np.where(fv > 0, fv / np.maximum(mu, LOG_FLOOR), 1.0)
    integrand = np.where(fv > 0, fv * np.log(ratio), 0.0) - (fv - mu)
    return quad(f.grid, integrand)


def euclidean_fisher(f: GridFunction) -> float:
    """int |grad f|^2 / f, via grad log f when f > 0 everywhere, else 4 |grad sqrt f|^2."""
    g = f.grid
    if np.all(f.values > 0):
        dl = gradient(g, np.log(f.values))
        return quad(g, f.values * dl ** 2)
    ds = gradient(g, np.sqrt(np.maximum(f.values, 0.0)))
    return 4.0 * quad(g, ds ** 2)


def euclidean_entropy_deficit(f: GridFunction) -> float:
    """(theta/2) int |grad f|^2/f - int f log(f/M) - (d/2) log(2 pi e^2 theta) M.

    Subtracting M log M makes the deficit 1-homogeneous in the mass; at M = 1
    it is the unnormalized expression.
    """
    m = moments(f)
    d = f.grid.d
    ent = quad(f.grid, xlogx(f.values / m.mass)) * m.mass
    return (
        0.5 * m.temperature * euclidean_fisher(f)
        - ent
        - 0.5 * d * np.log(2 * np.pi * np.e ** 2 * m.temperature) * m.mass
    )


def l1_distance(f: GridFunction, g: GaussianParams) -> float:
    return quad_abs(f.grid, f.values - g.density(f.grid.nodes))


# --- Barenblatt reference constants ---------------------------------------------

@dataclass(frozen=True)
class BarenblattConstants:
    """Mass, second moment and temperature of the reference Barenblatt on a grid."""

    case: str
    p: float
    d: int
    mass: float
    second_moment: float
    temperature: float
    p_bar_p: float  # int B^p

    @property
    def alpha(self) -> float:
        return scaling_alpha(self.p, self.d)

    @property
    def p_c(self) -> float:
        return (self.d - 2) / self.d

    @property
    def k(self) -> float:
        """Exponent of sigma in the relative Fisher information: (d/2)(p - p_c)."""
        return 0.5 * self.d * (self.p - self.p_c)


@lru_cache(maxsize=256)
def _constants(case: str, p: float, d: int, kind: str, extent: float, n: int, stretch) -> BarenblattConstants:
    from .numerics import build_grid

    g = build_grid(kind, d, extent, n, stretch=stretch)
    b = barenblatt_source(p, d)(g.nodes)
    mass = quad(g, b)
    m2 = quad(g, g.r2 * b)
    return BarenblattConstants(case, p, d, mass, m2, m2 / (d * mass), quad(g, b ** p))


def barenblatt_constants(p: float, grid: Grid, case: str | None = None) -> BarenblattConstants:
    """Quadrature constants of the reference profile on ``grid`` (memoized, read-only)."""
    case = case or ("fd" if p < 1 else "pm")
    check_exponent(p, grid.d, case)
    return _constants(case, float(p), grid.d, grid.kind, grid.extent, grid.n, grid.stretch)


def _check_case(p: float, d: int, case: str) -> None:
    try:
        check_exponent(p, d, case)
    except ProfileError as exc:
        raise FunctionalError(str(exc)) from None


# --- free energies and generalized Fisher information ----------------------------

def free_energy(v: GridFunction, p: float, case: str) -> float:
    """Free energy of v relative to the reference Barenblatt profile."""
    g = v.grid
    _check_case(p, g.d, case)
    b = barenblatt_source(p, g.d)(g.nodes)
    vv = np.maximum(v.values, 0.0)
    if case == "fd":
        integrand = vv ** p - b ** p - p * b ** (p - 1) * (vv - b)
    else:
        integrand = vv ** p - b ** p + p * g.r2 * (vv - b)
    return quad(g, integrand) / (p - 1)


def _pressure_gradient(v: np.ndarray, grid: Grid, p: float, case: str) -> tuple[np.ndarray, np.ndarray]:
    """grad v^{p-1} on {v > floor}, with support-aware stencils in the pm case."""
    support = v > SUPPORT_FLOOR
    pres = np.where(support, np.maximum(v, SUPPORT_FLOOR) ** (p - 1), 0.0)
    if case == "fd" and np.all(support):
        return gradient(grid, pres), support
    return gradient(grid, pres, support=support), support


def generalized_fisher(v: GridFunction, p: float, case: str) -> float:
    """fd: p/(1-p) int v |grad v^{p-1} - 2x|^2; pm: p/(p-1) int v |grad v^{p-1} + 2x|^2."""
    g = v.grid
    _check_case(p, g.d, case)
    return _fisher_sigma(v, p, case, 1.0)


def _fisher_sigma(v: GridFunction, p: float, case: str, sigma: float) -> float:
    g = v.grid
    k = 0.5 * g.d * (p - (g.d - 2) / g.d)
    dp, support = _pressure_gradient(v.values, g, p, case)
    drift = 2.0 * g.nodes * sigma ** (-k)
    if case == "fd":
        res = dp - drift
        pref = p / (1 - p)
    else:
        res = dp + drift
        pref = p / (p - 1)
    integrand = np.where(support, v.values * res ** 2, 0.0)
    return pref * sigma ** k * quad(g, integrand)


def deficit(v: GridFunction, p: float, case: str) -> float:
    """J[v] = I[v] - 4 F[v]."""
    return generalized_fisher(v, p, case) - 4.0 * free_energy(v, p, case)


# --- best matching Barenblatt and relative functionals -----------------------------

@dataclass(frozen=True)
class RescaleContext:
    case: str
    p: float
    d: int
    M: float
    sigma: float
    lam: float
    alpha: float
    p_c: float
    h: float
    M_star: float
    theta_star: float

    @property
    def k(self) -> float:
        return 0.5 * self.d * (self.p - self.p_c)

    def barenblatt_spec(self) -> ProfileSpec:
        """The best-matching profile B_{M,sigma} as a ProfileSpec."""
        fam = "barenblatt_fd" if self.case == "fd" else "barenblatt_pm"
        # ProfileSpec masses are measured against the closed-form reference mass
        return ProfileSpec(fam, p=self.p, mass=self.lam * barenblatt_mass(self.p, self.d), scale=self.sigma)

    def barenblatt_values(self, grid: Grid) -> np.ndarray:
        return barenblatt_source(self.p, self.d, self.lam * barenblatt_mass(self.p, self.d), self.sigma)(grid.nodes)


def h_factor(M: float, theta: float, p: float, d: int, M_star: float, theta_star: float) -> float:
    """Homogeneity factor: J_{M,sigma[u]}[u] = h(M, Theta[u]) J[v].

    Equals lambda^{(2p - d(1-p))/(2 - d(1-p))} sigma^{d(1-p)/2} evaluated at the
    best-matching sigma = lambda^{2 alpha} Theta / Theta_star.
    """
    lam = M / M_star
    alpha = scaling_alpha(p, d)
    sigma = lam ** (2 * alpha) * theta / theta_star
    return lam ** ((2 * p - d * (1 - p)) / (2 - d * (1 - p))) * sigma ** (0.5 * d * (1 - p))


def context_for(p: float, case: str, grid: Grid, M: float, sigma: float, theta: float | None = None) -> RescaleContext:
    """RescaleContext for explicit (M, sigma)."""
    c = barenblatt_constants(p, grid, case)
    lam = M / c.mass
    alpha = scaling_alpha(p, grid.d)
    if theta is None:
        theta = lam ** (-2 * alpha) * sigma * c.temperature
    return RescaleContext(
        case, p, grid.d, M, sigma, lam, alpha, c.p_c,
        h_factor(M, theta, p, grid.d, c.mass, c.temperature), c.mass, c.temperature,
    )


def sigma_best(u: GridFunction, p: float, case: str) -> RescaleContext:
    """Best-matching scale: the Barenblatt of mass M with the second moment of u."""
    g = u.grid
    _check_case(p, g.d, case)
    m = moments(u)
    c = barenblatt_constants(p, g, case)
    lam = m.mass / c.mass
    alpha = scaling_alpha(p, g.d)
    sigma = lam ** (2 * alpha - 1) * m.second_moment / c.second_moment
    # Match mass and second moment under this grid's own quadrature, so the
    # terms of F linear in u - B vanish to roundoff rather than to O(h^2).
    ref_mass = barenblatt_mass(p, g.d)
    for _ in range(MATCH_SWEEPS):
        b = barenblatt_source(p, g.d, lam * ref_mass, sigma)(g.nodes)
        lam *= m.mass / quad(g, b)
        b = barenblatt_source(p, g.d, lam * ref_mass, sigma)(g.nodes)
        sigma *= m.second_moment / quad(g, g.r2 * b)
    return RescaleContext(
        case, p, g.d, m.mass, sigma, lam, alpha, c.p_c,
        h_factor(m.mass, m.temperature, p, g.d, c.mass, c.temperature), c.mass, c.temperature,
    )


def relative_free_energy(u: GridFunction, ctx: RescaleContext) -> float:
    g = u.grid
    p = ctx.p
    b = ctx.barenblatt_values(g)
    uu = np.maximum(u.values, 0.0)
    if ctx.case == "fd":
        integrand = uu ** p - b ** p - p * b ** (p - 1) * (uu - b)
    else:
        integrand = uu ** p - b ** p + p * ctx.sigma ** (-ctx.k) * g.r2 * (uu - b)
    return quad(g, integrand) / (p - 1)


def relative_fisher(u: GridFunction, ctx: RescaleContext) -> float:
    return _fisher_sigma(u, ctx.p, ctx.case, ctx.sigma)


def relative_deficit(u: GridFunction, ctx: RescaleContext) -> float:
    return relative_fisher(u, ctx) - 4.0 * relative_free_energy(u, ctx)


def to_reference_frame(u: GridFunction, ctx: RescaleContext) -> GridFunction:
    """v with u(x) = lam^{1+alpha d} sigma^{-d/2} v(lam^alpha x / sqrt(sigma))."""
    d = ctx.d
    amp = ctx.lam ** (1 + ctx.alpha * d) * ctx.sigma ** (-d / 2)
    stretch = ctx.lam ** ctx.alpha / np.sqrt(ctx.sigma)
    inv = 1.0 / stretch
    src0 = u.source
    if src0 is None:
        src = lambda x: u.evaluate(inv * np.asarray(x)) / amp  # noqa: E731
    else:
        src = lambda x: src0(inv * np.asarray(x)) / amp  # noqa: E731
    return GridFunction(u.grid, src(u.grid.nodes), True, src)


def lp_distance_p(u: GridFunction, other: np.ndarray, p: float) -> float:
    """int |u - other|^p dx."""
    return quad(u.grid, np.abs(u.values - other) ** p)
