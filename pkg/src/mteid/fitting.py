"""Construction of piecewise-exponential approximations to densities and curves.

Two fixed templates cover the recurring cases (a 2-piece/3-term bell curve for
normal densities and a 4-piece potential for the oil-price lognormal); a
least-squares fitter handles everything else.  The fitter uses variable
projection: a derivative-free simplex search over the exponents only, with the
linear coefficients solved exactly by least squares at every step, restarted
from several seeded random points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import BadSigmaError, FitDivergedError, MissingFitError
from .potentials import (
    CONTINUOUS,
    PROBABILITY,
    UTILITY,
    ExpTerm,
    MtePiece,
    MtePotential,
    Region,
    Variable,
    add,
    combine,
    constant_potential,
    marginalize_continuous,
    normalize_density,
    scale,
)

# 2-piece, 3-term bell template for the standard normal on [-3, 3]; the raw
# version integrates to NORMAL_TEMPLATE_MASS, the normalised one to ~1.
_BELL_CONSTANT = -0.0105643
_BELL_TERMS = (
    (197.0557202, 2.2568434),
    (-461.4392506, 2.3434117),
    (264.7930371, 2.4043270),
)
NORMAL_TEMPLATE_MASS = 0.9973

MULTISTART_COUNT = 8
EXPONENT_RANGE = (-5.0, 5.0)


def normal_template(
    mu: float, sigma: float, variable: str = "x", normalized: bool = True
) -> MtePotential:
    """Bell-shaped density approximation on ``[mu - 3*sigma, mu + 3*sigma]``.

    Two mirrored pieces of three exponential terms each; exponents are stored
    against plain ``x`` with the location shift folded into the coefficients.
    ``normalized=False`` returns the raw template whose mass is
    NORMAL_TEMPLATE_MASS instead of 1.
    """
    if not sigma > 0:
        raise BadSigmaError(f"sigma must be positive, got {sigma}")
    lo, hi = mu - 3.0 * sigma, mu + 3.0 * sigma
    var = Variable(variable, CONTINUOUS, support=(lo, hi))
    norm = NORMAL_TEMPLATE_MASS if normalized else 1.0
    pieces = []
    for sign, box in (( +1.0, (lo, mu)), (-1.0, (mu, hi))):
        terms = []
        for a, b in _BELL_TERMS:
            rate = sign * b / sigma
            coeff = a / sigma * math.exp(-rate * mu) / norm
            terms.append(ExpTerm(coeff, {variable: rate}))
        pieces.append(
            MtePiece(Region({}, {variable: box}), _BELL_CONSTANT / sigma / norm, terms)
        )
    return MtePotential((var,), tuple(pieces), PROBABILITY)


# 4-piece oil-price density: breakpoints, then per piece a constant plus
# (coefficient, rate) pairs written against (x - _PRICE_SHIFT).
_PRICE_BREAKS = (1.86706, 3.47531, 9.44687, 15.57526, 129.93107)
_PRICE_SHIFT = 9.44687
_PRICE_PIECES = (
    (-0.024921, ((0.186834, 0.249714), (0.101347, 1.419659))),
    (0.174804, ((-0.062119, -0.116729), (-0.066038, 0.116608))),
    (0.049064, ((0.000000154912, 1.480552), (-0.002427, 0.287079))),
    (-0.583002, ((0.057534, -0.079477), (0.584025, -0.000015))),
)


def lognormal_oil_price(variable: str = "x") -> MtePotential:
    """The fixed 4-piece lognormal price density on [1.86706, 129.93107].

    The shifted form ``exp(b * (x - 9.44687))`` is rewritten against plain
    ``x`` with ``exp(-b * 9.44687)`` folded into each coefficient.
    """
    var = Variable(variable, CONTINUOUS, support=(_PRICE_BREAKS[0], _PRICE_BREAKS[-1]))
    pieces = []
    for i, (constant, terms) in enumerate(_PRICE_PIECES):
        box = (_PRICE_BREAKS[i], _PRICE_BREAKS[i + 1])
        folded = tuple(
            ExpTerm(a * math.exp(-b * _PRICE_SHIFT), {variable: b}) for a, b in terms
        )
        pieces.append(MtePiece(Region({}, {variable: box}), constant, folded))
    return MtePotential((var,), tuple(pieces), PROBABILITY)


@dataclass(frozen=True)
class FitSpec:
    """What to fit: a target curve, a piece layout, and a term budget."""

    target: Callable[[float], float]
    interval: tuple[float, float]
    split_points: tuple[float, ...] = ()
    terms_per_piece: int = 3
    grid_n: int = 101
    normalize_after: bool = False
    variable: str = "x"
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.interval
        object.__setattr__(self, "interval", (float(lo), float(hi)))
        object.__setattr__(
            self, "split_points", tuple(float(s) for s in self.split_points)
        )
        if not lo < hi:
            raise BadSigmaError(f"fit interval needs lo < hi, got [{lo}, {hi}]")
        pts = (lo, *self.split_points, hi)
        if any(a >= b for a, b in zip(pts, pts[1:])):
            raise BadSigmaError("split points must be strictly increasing and interior")
        if self.terms_per_piece < 1:
            raise BadSigmaError("terms_per_piece must be >= 1")
        if self.grid_n < 2 * self.terms_per_piece + 1:
            raise BadSigmaError("grid_n must be >= 2 * terms_per_piece + 1")


@dataclass(frozen=True)
class FitResult:
    potential: MtePotential
    sse: float
    max_abs_error: float


def _design(xs: np.ndarray, rates: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones_like(xs)] + [np.exp(b * xs) for b in rates])


def _projected_sse(rates: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> float:
    design = _design(xs, rates)
    if not np.isfinite(design).all():
        return 1e300
    coeffs, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ coeffs
    return float(resid @ resid)


def _fit_piece(xs, ys, m, rng):
    """Best exponents for one piece via multi-start simplex over the rates."""
    best_rates, best_sse = None, math.inf
    for _ in range(MULTISTART_COUNT):
        start = rng.uniform(*EXPONENT_RANGE, size=m)
        res = minimize(
            _projected_sse, start, args=(xs, ys), method="Nelder-Mead",
            options={"maxiter": 2000, "xatol": 1e-10, "fatol": 1e-14},
        )
        res = minimize(  # restart from the local optimum to escape flat simplexes
            _projected_sse, res.x, args=(xs, ys), method="Nelder-Mead",
            options={"maxiter": 2000, "xatol": 1e-12, "fatol": 1e-16},
        )
        sse = _projected_sse(res.x, xs, ys)
        if sse < best_sse:
            best_rates, best_sse = res.x, sse
    if best_rates is None or not math.isfinite(best_sse):
        raise FitDivergedError("no start converged to a finite residual")
    coeffs, *_ = np.linalg.lstsq(_design(xs, best_rates), ys, rcond=None)
    return coeffs, best_rates


def fit_pdf(spec: FitSpec) -> FitResult:
    """Least-squares piecewise-exponential approximation of a target curve.

    Each piece minimises the sum of squared errors on its own evenly spaced
    sample grid; with ``normalize_after`` the assembled potential is rescaled
    to unit mass.  Reported residuals are recomputed for the returned
    potential on the same grids.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.interval
    bounds = (lo, *spec.split_points, hi)
    var = Variable(spec.variable, CONTINUOUS, support=(lo, hi))
    pieces = []
    for a, b in zip(bounds, bounds[1:]):
        xs = np.linspace(a, b, spec.grid_n)
        ys = np.array([float(spec.target(x)) for x in xs])
        if not np.isfinite(ys).all():
            raise FitDivergedError("target is not finite on the fit interval")
        coeffs, rates = _fit_piece(xs, ys, spec.terms_per_piece, rng)
        constant = float(coeffs[0])
        terms = []
        for coeff, rate in zip(coeffs[1:], rates):
            if round(rate / 1e-12) == 0:
                constant += float(coeff)  # exp(0*x) duplicates the constant basis
            else:
                terms.append(ExpTerm(float(coeff), {spec.variable: float(rate)}))
        pieces.append(MtePiece(Region({}, {spec.variable: (a, b)}), constant, terms))
    potential = MtePotential((var,), tuple(pieces), PROBABILITY)
    if spec.normalize_after:
        potential = normalize_density(potential, spec.variable)
    sse = 0.0
    max_abs = 0.0
    for a, b in zip(bounds, bounds[1:]):
        for x in np.linspace(a, b, spec.grid_n):
            err = potential.evaluate({spec.variable: float(x)}) - float(spec.target(x))
            sse += err * err
            max_abs = max(max_abs, abs(err))
    if not math.isfinite(sse):
        raise FitDivergedError("fit residual is not finite")
    return FitResult(potential, sse, max_abs)


def fit_linear_mte(
    interval: tuple[float, float],
    grid_n: int = 101,
    variable: str = "x",
    seed: int = 0,
) -> FitResult:
    """Fit ``a0 + a1 * exp(a2 * x)`` to the identity curve ``g(x) = x``.

    The building block for polynomial utility composition: once each
    coordinate is written in this form, products and powers stay inside the
    representable class.
    """
    if grid_n < 3:
        raise BadSigmaError("grid_n must be >= 3")
    spec = FitSpec(
        target=lambda x: x,
        interval=interval,
        terms_per_piece=1,
        grid_n=grid_n,
        variable=variable,
        seed=seed,
    )
    result = fit_pdf(spec)
    return replace(result, potential=replace(result.potential, kind=UTILITY))


def compose_polynomial_utility(
    poly: Sequence[tuple[float, dict[str, int]]],
    fits: dict[str, MtePotential],
) -> MtePotential:
    """Assemble a polynomial utility from per-variable single-term fits.

    ``poly`` lists monomials as ``(coefficient, {variable: power})``.  Each
    variable is replaced by its fitted exponential form and the polynomial is
    expanded with the potential algebra (powers and products via combination,
    the final sum via addition).
    """
    used: dict[str, Variable] = {}
    for _, powers in poly:
        for name, power in powers.items():
            if power <= 0:
                continue
            if name not in fits:
                raise MissingFitError(f"no fit supplied for variable {name}")
            used[name] = fits[name].variable(name)
    domain = tuple(used.values())
    total: MtePotential | None = None
    for coefficient, powers in poly:
        mono: MtePotential | None = None
        for name, power in powers.items():
            for _ in range(power):
                factor = fits[name]
                mono = factor if mono is None else combine(mono, factor)
        missing = [v for v in domain if mono is None or name_absent(mono, v.name)]
        if mono is None:
            mono = constant_potential(domain, 1.0, UTILITY)
        elif missing:
            mono = combine(mono, constant_potential(missing, 1.0, UTILITY))
        mono = scale(mono, coefficient)
        mono = replace(mono, kind=UTILITY)
        total = mono if total is None else add(total, mono)
    if total is None:
        raise MissingFitError("empty polynomial")
    return replace(total, kind=UTILITY)


def name_absent(potential: MtePotential, name: str) -> bool:
    return all(v.name != name for v in potential.domain)


def template_mass(potential: MtePotential, variable: str) -> float:
    """Total mass of a univariate potential (for checks and normalisation)."""
    return marginalize_continuous(potential, variable).evaluate({})
