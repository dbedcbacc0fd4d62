"""Test profiles: Gaussians, Barenblatt profiles, perturbations, and the standard corpus."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from numpy.polynomial.hermite_e import hermeval
from scipy.special import eval_genlaguerre, gammaln

from .numerics import Grid, GridFunction, build_grid, quad

FAMILIES = (
    "gaussian",
    "gaussian_offcenter",
    "gaussian_mixture",
    "barenblatt_fd",
    "barenblatt_pm",
    "perturbed_gaussian",
    "perturbed_barenblatt",
    "bump",
)
LINE_ONLY = ("gaussian_offcenter", "gaussian_mixture")


class ProfileError(ValueError):
    pass


@dataclass(frozen=True)
class ProfileSpec:
    """A closed-form test profile.

    Barenblatt families read ``p`` and optionally ``mass`` (default: the
    mass of the reference profile) and ``scale`` (the characteristic scale
    sigma). ``perturbed_barenblatt`` picks fd or pm from ``p``.
    """

    family: str
    mass: Optional[float] = None
    temperature: float = 1.0
    center: float = 0.0
    p: Optional[float] = None
    eps: float = 0.0
    k: int = 2
    scale: float = 1.0

    @classmethod
    def from_dict(cls, data: dict) -> "ProfileSpec":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ProfileError(f"unknown profile keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @property
    def label(self) -> str:
        parts = [self.family]
        for key in ("mass", "temperature", "center", "p", "eps", "k", "scale"):
            val = getattr(self, key)
            default = ProfileSpec.__dataclass_fields__[key].default
            if val is not None and val != default:
                parts.append(f"{key}={val:g}")
        return ":".join(parts)


# --- Barenblatt closed forms -------------------------------------------------

def case_of(p: float) -> str:
    return "fd" if p < 1 else "pm"


def check_exponent(p: float, d: int, case: str) -> None:
    if case == "fd":
        p1 = (d - 1) / d
        if not (p1 < p < 1):
            raise ProfileError(f"fast diffusion exponent p={p} outside ({p1:g}, 1) for d={d}")
    elif case == "pm":
        if not p > 1:
            raise ProfileError(f"porous medium exponent p={p} must exceed 1")
    else:
        raise ProfileError(f"unknown case {case!r}")


def barenblatt_mass(p: float, d: int) -> float:
    """Mass of (1+|x|^2)^{1/(p-1)} (p < 1) or (1-|x|^2)_+^{1/(p-1)} (p > 1)."""
    if p < 1:
        s = 1.0 / (1.0 - p)
        if s <= d / 2:
            raise ProfileError("fast diffusion Barenblatt profile has infinite mass")
        return float(np.exp(d / 2 * np.log(np.pi) + gammaln(s - d / 2) - gammaln(s)))
    s = p / (p - 1.0)
    return float(np.exp(d / 2 * np.log(np.pi) + gammaln(s) - gammaln(s + d / 2)))


def barenblatt_temperature(p: float, d: int) -> float:
    """Closed-form temperature of the reference Barenblatt profile."""
    if p < 1:
        s = 1.0 / (1.0 - p)
        if s <= d / 2 + 1:
            return np.inf
        return 1.0 / (2.0 * (s - d / 2 - 1))
    s = 1.0 / (p - 1.0)
    return 1.0 / (2.0 * (s + 1 + d / 2))


def scaling_alpha(p: float, d: int) -> float:
    """Exponent making the rescaled profile of mass M a Barenblatt of scale 1."""
    if p < 1:
        return (1 - p) / (2 - d * (1 - p))
    return -(p - 1) / (2 + d * (p - 1))


def barenblatt_source(p: float, d: int, mass: Optional[float] = None, scale: float = 1.0):
    """Callable r -> B_{M,sigma}(r) with lambda = M / M_star."""
    m_star = barenblatt_mass(p, d)
    lam = 1.0 if mass is None else mass / m_star
    alpha = scaling_alpha(p, d)
    amp = lam ** (1 + alpha * d) * scale ** (-d / 2)
    stretch = lam ** alpha / np.sqrt(scale)
    expo = 1.0 / (p - 1.0)

    if p < 1:
        def src(x):
            y2 = (stretch * np.asarray(x)) ** 2
            return amp * (1.0 + y2) ** expo
    else:
        def src(x):
            y2 = (stretch * np.asarray(x)) ** 2
            return amp * np.maximum(1.0 - y2, 0.0) ** expo
    return src


def barenblatt_radius(p: float, d: int, mass: Optional[float] = None, scale: float = 1.0) -> float:
    """Support radius (pm) or core width (fd) of B_{M,sigma}."""
    lam = 1.0 if mass is None else mass / barenblatt_mass(p, d)
    return float(np.sqrt(scale) * lam ** (-scaling_alpha(p, d)))


def fd_extent(p: float, d: int = 1, tail: float = 1e-12, cap: float = 1e9) -> float:
    """Radius (in core units) beyond which the second-moment tail of the fd profile is below ``tail``.

    The integrand of int B |x|^2 decays like r^e with e = 2/(p-1) + d + 1, so
    the tail beyond R is about R^{e+1}/|e+1|.
    """
    e1 = 2.0 / (p - 1.0) + d + 2.0
    if e1 >= 0:
        raise ProfileError(f"fd profile with p={p} has no finite second moment in d={d}")
    return float(min(cap, max(20.0, (tail * abs(e1)) ** (1.0 / e1))))


def default_extent(spec: ProfileSpec, d: int = 1) -> float:
    if spec.family in ("barenblatt_fd", "barenblatt_pm", "perturbed_barenblatt"):
        rad = barenblatt_radius(spec.p, d, spec.mass, spec.scale)
        if spec.p < 1:
            return fd_extent(spec.p, d) * rad
        return rad + 1.5 / np.sqrt(spec.scale)
    return 12.0


def default_stretch(spec: ProfileSpec, d: int = 1) -> Optional[float]:
    """fd profiles live on sinh-stretched grids scaled to their core width."""
    if spec.family in ("barenblatt_fd", "perturbed_barenblatt") and spec.p is not None and spec.p < 1:
        return barenblatt_radius(spec.p, d, spec.mass, spec.scale)
    return None


# --- sampling ----------------------------------------------------------------

def _gaussian_source(d, mass, theta, center=0.0):
    c = mass * (2 * np.pi * theta) ** (-d / 2)
    return lambda x: c * np.exp(-((np.asarray(x) - center) ** 2) / (2 * theta))


def _raw_mode(grid: Grid, k: int, s: float, center: float = 0.0):
    if grid.kind == "line":
        coef = np.zeros(k + 1)
        coef[k] = 1.0

        def mode(x):
            z = (np.asarray(x) - center) / s
            return hermeval(z, coef) * np.exp(-z ** 2 / 4)
    else:
        a = grid.d / 2 - 1

        def mode(x):
            z2 = (np.asarray(x) / s) ** 2
            return eval_genlaguerre(k, a, z2 / 2) * np.exp(-z2 / 4)
    return mode


def _window(s: float, center: float = 0.0):
    return lambda x: np.exp(-((np.asarray(x) - center) / s) ** 2 / 4)


def perturbation_mode(grid: Grid, base: np.ndarray, k: int, s: float, center: float = 0.0):
    """Bounded mode orthogonal (under the base weight) to mass and second moment.

    Returns a callable with max |mode| = 1 on the grid.
    """
    raw = _raw_mode(grid, k, s, center)
    win = _window(s, center)
    x = grid.nodes
    r2 = grid.r2
    m0, g0 = raw(x), win(x)
    basis = [g0, r2 * g0]
    tests = [base, r2 * base]
    a = np.array([[quad(grid, t * b) for b in basis] for t in tests])
    rhs = np.array([quad(grid, t * m0) for t in tests])
    c0, c1 = np.linalg.solve(a, rhs)

    def unscaled(y):
        y = np.asarray(y)
        return raw(y) - (c0 + c1 * y ** 2) * win(y)

    peak = np.max(np.abs(unscaled(x)))
    if peak == 0:
        raise ProfileError("degenerate perturbation mode")
    return lambda y: unscaled(y) / peak


def _base_source(spec: ProfileSpec, grid: Grid):
    d = grid.d
    if spec.family in ("gaussian", "perturbed_gaussian"):
        if spec.center != 0.0 and grid.kind != "line":
            raise ProfileError("off-center profiles need a line grid")
        return _gaussian_source(d, spec.mass or 1.0, spec.temperature, spec.center)
    if spec.family == "gaussian_offcenter":
        return _gaussian_source(d, spec.mass or 1.0, spec.temperature, spec.center)
    if spec.family == "gaussian_mixture":
        g1 = _gaussian_source(d, 0.5 * (spec.mass or 1.0), spec.temperature, spec.center)
        g2 = _gaussian_source(d, 0.5 * (spec.mass or 1.0), spec.temperature, -spec.center)
        return lambda x: g1(x) + g2(x)
    if spec.family in ("barenblatt_fd", "barenblatt_pm", "perturbed_barenblatt"):
        if spec.p is None:
            raise ProfileError("Barenblatt profiles need p")
        case = case_of(spec.p)
        if spec.family == "barenblatt_fd" and case != "fd":
            raise ProfileError("barenblatt_fd requires p < 1")
        if spec.family == "barenblatt_pm" and case != "pm":
            raise ProfileError("barenblatt_pm requires p > 1")
        check_exponent(spec.p, d, case)
        return barenblatt_source(spec.p, d, spec.mass, spec.scale)
    if spec.family == "bump":
        s = spec.scale
        m = spec.mass or 1.0

        def bump(x):
            z2 = np.minimum((np.asarray(x) / s) ** 2, 1.0)
            with np.errstate(divide="ignore", over="ignore"):
                val = np.exp(1.0 - 1.0 / np.maximum(1.0 - z2, 1e-300))
            return m * np.where(z2 < 1.0, val, 0.0)
        return bump
    raise ProfileError(f"unknown family {spec.family!r}")


def sample(spec: ProfileSpec, grid: Grid) -> GridFunction:
    """Sample a profile on a grid; the result keeps its closed form as source."""
    if spec.family not in FAMILIES:
        raise ProfileError(f"unknown family {spec.family!r}")
    if spec.family in LINE_ONLY and grid.kind != "line":
        raise ProfileError(f"{spec.family} is only available on line grids")
    if (spec.mass is not None and spec.mass <= 0) or spec.temperature <= 0 or spec.scale <= 0:
        raise ProfileError("mass, temperature and scale must be positive")
    base = _base_source(spec, grid)
    if spec.family.startswith("perturbed") and spec.eps != 0.0:
        if spec.family == "perturbed_gaussian":
            s, c = np.sqrt(spec.temperature), spec.center
        else:
            rad = barenblatt_radius(spec.p, grid.d, spec.mass, spec.scale)
            s, c = (rad if spec.p < 1 else rad / 2), 0.0
        mode = perturbation_mode(grid, base(grid.nodes), spec.k, s, c)
        eps = spec.eps
        if abs(eps) >= 1:
            raise ProfileError("perturbation amplitude must satisfy |eps| < 1")

        def src(x, base=base, mode=mode):
            return np.maximum(base(x) * (1.0 + eps * mode(x)), 0.0)
    else:
        src = base
    values = src(grid.nodes)
    if np.any(values < 0):
        raise ProfileError("negative samples")
    return GridFunction(grid, values, True, src)


# --- normalization -------------------------------------------------------------

def dilate(f: GridFunction, lam: float, power: Optional[float] = None) -> GridFunction:
    """x -> lam^power f(lam x); power defaults to d (mass preserving)."""
    power = f.grid.d if power is None else power
    amp = lam ** power
    if f.source is not None:
        src0 = f.source
        src = lambda x: amp * src0(lam * np.asarray(x))  # noqa: E731
        return GridFunction(f.grid, src(f.grid.nodes), f.nonnegative, src)
    return GridFunction(f.grid, amp * f.evaluate(lam * f.grid.nodes), f.nonnegative)


def _gaussian_dilate(u: GridFunction, lam: float) -> GridFunction:
    # dilation of the density |u|^2 mu, written back in terms of u
    d = u.grid.d

    def transform(x, vals):
        return lam ** (d / 2) * np.abs(vals) * np.exp(-(lam ** 2 - 1) * np.asarray(x) ** 2 / 4)

    if u.source is not None:
        src0 = u.source
        src = lambda x: transform(x, src0(lam * np.asarray(x)))  # noqa: E731
        return GridFunction(u.grid, src(u.grid.nodes), True, src)
    x = u.grid.nodes
    return GridFunction(u.grid, transform(x, u.evaluate(lam * x)), True)


def temperature_of(f: GridFunction, measure: str = "lebesgue") -> float:
    g = f.grid
    if measure == "gaussian":
        from .numerics import gaussian_density
        dens = f.values ** 2 * gaussian_density(g)
    else:
        dens = f.values
    mass = quad(g, dens)
    if mass <= 0:
        raise ProfileError("zero mass")
    return quad(g, g.r2 * dens) / (g.d * mass)


def normalize(
    f: GridFunction,
    target: str,
    measure: str = "lebesgue",
    temperature: float = 1.0,
    tol: float = 1e-6,
) -> GridFunction:
    """Rescale a profile.

    ``unit_mass`` divides by the mass (against dx, or against d mu when
    ``measure="gaussian"``); ``unit_l2_mu`` makes the L2(d mu) norm 1;
    ``moment_constraint`` dilates so that the temperature equals
    ``temperature``. With ``measure="gaussian"`` the function is u and the
    constraint is on |u|^2 mu: int |x|^2 |u|^2 d mu = d int |u|^2 d mu.
    """
    from .numerics import gaussian_density

    g = f.grid
    if target == "unit_mass":
        w = gaussian_density(g) if measure == "gaussian" else 1.0
        m = quad(g, f.values * w)
        if m <= 0:
            raise ProfileError("zero mass")
        return f.scaled(1.0 / m)
    if target == "unit_l2_mu":
        nrm2 = quad(g, f.values ** 2 * gaussian_density(g))
        if nrm2 <= 0:
            raise ProfileError("zero norm")
        return f.scaled(1.0 / np.sqrt(nrm2))
    if target != "moment_constraint":
        raise ProfileError(f"unknown normalization target {target!r}")

    out = f
    for _ in range(4):
        theta = temperature_of(out, measure)
        lam = np.sqrt(theta / temperature)
        if abs(lam - 1.0) < 1e-14:
            break
        out = _gaussian_dilate(out, lam) if measure == "gaussian" else dilate(out, lam)
    resid = abs(temperature_of(out, measure) / temperature - 1.0)
    if resid > tol:
        raise ProfileError(f"moment constraint unreachable on this grid (residual {resid:.2e})")
    return out


def constraint_residual(f: GridFunction, measure: str = "lebesgue", temperature: float = 1.0) -> float:
    return abs(temperature_of(f, measure) / temperature - 1.0)


# --- standard corpus ---------------------------------------------------------

FD_EXPONENTS = {1: (0.6, 0.7, 0.8), 2: (0.65, 0.75, 0.85), 3: (0.7, 0.75, 0.85)}
PM_EXPONENTS = (1.25, 4.0 / 3.0, 1.5)
PM_CK_EXPONENTS = (2.0, 2.5, 3.0)
GAUSS_TEMPERATURES = (0.5, 0.8, 1.0, 1.25, 2.0)


def gaussian_corpus(d: int) -> list[tuple[str, ProfileSpec]]:
    """Gaussians, shifted Gaussians (d = 1) and perturbed Gaussians."""
    specs = [ProfileSpec("gaussian", mass=1.0, temperature=t) for t in GAUSS_TEMPERATURES]
    if d == 1:
        specs += [ProfileSpec("gaussian_offcenter", mass=1.0, center=c) for c in (0.5, 1.0)]
        specs.append(ProfileSpec("gaussian_mixture", mass=1.0, temperature=0.5, center=1.0))
    for theta in (1.0, 2.0):
        for k in (2, 3, 4):
            for eps in (0.05, 0.2):
                specs.append(ProfileSpec("perturbed_gaussian", mass=1.0, temperature=theta, eps=eps, k=k))
    return [(s.label, s) for s in specs]


def barenblatt_corpus(case: str, d: int, exponents=None, perturbed: bool = True) -> list[tuple[str, ProfileSpec]]:
    """Barenblatt profiles, rescaled variants and perturbations for one case."""
    if exponents is None:
        exponents = FD_EXPONENTS[d] if case == "fd" else PM_EXPONENTS
    fam = "barenblatt_fd" if case == "fd" else "barenblatt_pm"
    specs = []
    for p in exponents:
        m_star = barenblatt_mass(p, d)
        specs.append(ProfileSpec(fam, p=p))
        specs.append(ProfileSpec(fam, p=p, mass=2 * m_star, scale=1.5))
        if perturbed:
            for k in (2, 3):
                for eps in (0.05, 0.2):
                    specs.append(ProfileSpec("perturbed_barenblatt", p=p, eps=eps, k=k))
    return [(s.label, s) for s in specs]


def density_corpus(d: int) -> list[tuple[str, ProfileSpec]]:
    """Lebesgue densities with finite Fisher information, for Gaussian-type checks."""
    out = gaussian_corpus(d)
    for p in FD_EXPONENTS[d]:
        s = ProfileSpec("barenblatt_fd", p=p)
        out.append((s.label, s))
    for p in PM_EXPONENTS:
        s = ProfileSpec("barenblatt_pm", p=p)
        out.append((s.label, s))
    for sc in (1.0, 2.0):
        s = ProfileSpec("bump", scale=sc)
        out.append((s.label, s))
    return out


def grid_for(spec: ProfileSpec, d: int, n: int = 2048, kind: Optional[str] = None) -> Grid:
    """Grid with the default extent for a profile."""
    if kind is None:
        kind = "line" if (spec.family in LINE_ONLY or spec.center != 0.0) else "radial"
    stretch = default_stretch(spec, d) if kind == "radial" else None
    return build_grid(kind, d, default_extent(spec, d), n, stretch=stretch)
