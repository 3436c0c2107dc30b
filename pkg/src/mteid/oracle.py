"""Independent numerical cross-checks: adaptive quadrature and simulation.

``quad_integrate`` is an adaptive Simpson integrator used to verify the
closed-form marginalisation.  ``monte_carlo_eu`` plays out a diagram forward
in time under a fixed strategy; by default it samples the named generative
distributions and scores with the exact utility where one is registered, so
it measures total (fit + solver) error end to end.  ``mode="mte"`` samples
and scores the fitted potentials themselves, isolating solver error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .diagram import ChanceFactor, InfluenceDiagram
from .errors import (
    DomainError,
    MaxDepthError,
    UncoveredObservationError,
)
from .potentials import (
    CONTINUOUS,
    DECISION,
    MtePiece,
    MtePotential,
    PolicyRule,
    Variable,
    restrict,
)

MAX_QUAD_DEPTH = 50


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int


def quad_integrate(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    breakpoints: Sequence[float] = (),
) -> QuadResult:
    """Adaptive Simpson integration with Richardson extrapolation.

    Splits at the supplied breakpoints first so discontinuities are never
    straddled, then refines each segment until the local error estimate
    |S2 - S1| / 15 drops below its share of ``tol``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if hi == lo:
        return QuadResult(0.0, 0.0, 0)
    if hi < lo:
        inner = quad_integrate(f, hi, lo, tol, breakpoints)
        return QuadResult(-inner.value, inner.error_estimate, inner.evaluations)
    cuts = sorted({lo, hi, *(b for b in breakpoints if lo < b < hi)})
    evaluations = 0

    def ev(x: float) -> float:
        nonlocal evaluations
        evaluations += 1
        return f(x)

    def simpson(fa, fm, fb, h):
        return h / 6.0 * (fa + 4.0 * fm + fb)

    def refine(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = ev(lm), ev(rm)
        left = simpson(fa, flm, fm, m - a)
        right = simpson(fm, frm, fb, b - m)
        delta = left + right - whole
        if abs(delta) / 15.0 <= tol:
            return left + right + delta / 15.0, abs(delta) / 15.0
        if depth >= MAX_QUAD_DEPTH:
            raise MaxDepthError(
                f"tolerance {tol:.3g} unreachable on [{a}, {b}] at depth {depth}"
            )
        lv, le = refine(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
        rv, re = refine(m, b, fm, frm, fb, right, tol / 2.0, depth + 1)
        return lv + rv, le + re

    total, err = 0.0, 0.0
    seg_tol = tol / (len(cuts) - 1)
    for a, b in zip(cuts, cuts[1:]):
        fa, fb = ev(a), ev(b)
        m = 0.5 * (a + b)
        fm = ev(m)
        whole = simpson(fa, fm, fb, b - a)
        value, estimate = refine(a, b, fa, fm, fb, whole, seg_tol, 0)
        total += value
        err += estimate
    return QuadResult(total, err, evaluations)


# ---------------------------------------------------------------------------
# Monte Carlo simulation
# ---------------------------------------------------------------------------

# exact utility functions addressable from model files, vectorised over samples
# (discrete variables arrive as state-index arrays)
def _oil_wildcatter_payoff(assign: Mapping[str, np.ndarray]) -> np.ndarray:
    drill = assign["D"] == 1
    test = assign["T"] == 1
    gross = assign["V"] * assign["P"] - assign["C"]
    return np.where(drill, gross - 10.0 * test, np.where(test, -10.0, 0.0))


EXACT_UTILITIES: dict[str, Callable] = {
    "oil_wildcatter_u1": _oil_wildcatter_payoff,
}


def monte_carlo_eu(
    diagram: InfluenceDiagram,
    strategy: Iterable[PolicyRule],
    n: int,
    seed: int,
    mode: str = "true",
) -> tuple[float, float]:
    """Mean and standard error of realised utility under a fixed strategy.

    Scenarios are simulated in temporal order (parents before children,
    observations before the decisions they inform).  ``mode="true"`` draws
    chance variables from their named generative distributions, truncated to
    the declared supports, and applies registered exact utilities;
    ``mode="mte"`` draws from and scores the fitted potentials.
    """
    if mode not in ("true", "mte"):
        raise DomainError(f"unknown mode {mode!r}")
    rules = {r.decision: r for r in strategy}
    rng = np.random.default_rng(seed)
    assign: dict[str, np.ndarray] = {}
    for var in _temporal_order(diagram):
        if var.kind == DECISION:
            if var.name not in rules:
                raise UncoveredObservationError(f"no policy for decision {var.name}")
            assign[var.name] = _apply_policy(rules[var.name], var, assign, diagram, n)
        else:
            factor = next(
                f for f in diagram.prob_potentials if f.child == var.name
            )
            assign[var.name] = _sample_chance(factor, var, assign, diagram, rng, n, mode)
    utility = np.ones(n)
    for factor in diagram.utility_factors:
        exact = EXACT_UTILITIES.get(factor.exact_key) if mode == "true" else None
        if exact is not None:
            utility = utility * exact(assign)
        else:
            utility = utility * evaluate_many(factor.potential, assign, diagram)
    mean = float(np.mean(utility))
    se = float(np.std(utility, ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return mean, se


def _temporal_order(diagram: InfluenceDiagram) -> list[Variable]:
    """Kahn topological sort: potential parents before children, observations
    before their decisions; name order breaks ties deterministically."""
    after: dict[str, set[str]] = {v.name: set() for v in diagram.variables}
    for factor in diagram.prob_potentials:
        for v in factor.potential.domain:
            if v.name != factor.child:
                after[factor.child].add(v.name)
    for source, target in diagram.info_arcs:
        after[target].add(source)
    order: list[Variable] = []
    done: set[str] = set()
    pending = dict(after)
    while pending:
        ready = sorted(n for n, deps in pending.items() if deps <= done)
        if not ready:
            raise DomainError("cyclic dependencies in the diagram")
        for name in ready:
            order.append(diagram.variable(name))
            done.add(name)
            del pending[name]
    return order


def _apply_policy(rule: PolicyRule, var: Variable, assign, diagram, n) -> np.ndarray:
    out = np.full(n, -1, dtype=np.int64)
    for closed_top in (False, True):
        for region, action in rule.rules:
            mask = out == -1
            if not mask.any():
                break
            for name, state in region.discrete_config.items():
                idx = diagram.variable(name).state_index(state)
                mask &= assign[name] == idx
            for name, (lo, hi) in region.box.items():
                x = assign[name]
                mask &= (x >= lo) & ((x <= hi) if closed_top else (x < hi))
            out[mask] = var.state_index(action)
    if (out == -1).any():
        raise UncoveredObservationError(
            f"strategy for {var.name} leaves observations uncovered"
        )
    return out


def _sample_chance(
    factor: ChanceFactor, var, assign, diagram, rng, n: int, mode: str
) -> np.ndarray:
    potential = factor.potential
    parents = [v for v in potential.domain if v.name != var.name]
    if any(p.is_continuous for p in parents):
        raise DomainError(
            f"simulating {var.name}: continuous parents are not supported"
        )
    out = np.empty(n, dtype=float if var.is_continuous else np.int64)
    for mask, cfg in _parent_groups(parents, assign, n):
        dist = _matching_dist(factor, cfg) if mode == "true" else None
        k = int(mask.sum())
        if dist is not None:
            out[mask] = _sample_named(dist, var, rng, k)
            continue
        conditional = restrict(potential, cfg) if cfg else potential
        if var.is_continuous:
            out[mask] = _sample_univariate(conditional, var, rng, k)
        else:
            probs = np.array(
                [conditional.evaluate({var.name: s}) for s in var.states]
            )
            probs = np.clip(probs, 0.0, None)
            cum = np.cumsum(probs)
            u = rng.random(k) * cum[-1]
            out[mask] = np.searchsorted(cum, u, side="right").clip(
                0, len(var.states) - 1
            )
    return out


def _matching_dist(factor: ChanceFactor, cfg: Mapping[str, str]):
    for dist_cfg, dist in factor.true_dists:
        if all(cfg.get(name) == state for name, state in dist_cfg.items()):
            return dist
    return None


def _sample_named(dist, var, rng, n: int) -> np.ndarray:
    kind, params = dist.kind, dist.params
    if kind == "constant":
        return np.full(n, float(params["value"]))
    if kind == "beta":
        return rng.beta(params["a"], params["b"], size=n)
    if kind in ("normal", "lognormal"):
        lo, hi = params.get("support", var.support)
        out = np.empty(n)
        todo = np.arange(n)
        while todo.size:  # rejection against the declared support
            draw = rng.normal(params["mu"], params["sigma"], size=todo.size)
            if kind == "lognormal":
                draw = np.exp(draw)
            good = (draw >= lo) & (draw <= hi)
            out[todo[good]] = draw[good]
            todo = todo[~good]
        return out
    raise DomainError(f"unknown generative distribution {kind!r}")


def _parent_groups(parents, assign, n):
    if not parents:
        yield np.ones(n, dtype=bool), {}
        return
    for combo in itertools.product(*(range(len(p.states)) for p in parents)):
        mask = np.ones(n, dtype=bool)
        for p, idx in zip(parents, combo):
            mask &= assign[p.name] == idx
        if mask.any():
            yield mask, {p.name: p.states[idx] for p, idx in zip(parents, combo)}


def _sample_univariate(potential: MtePotential, var, rng, k: int) -> np.ndarray:
    """Inverse-CDF sampling of a univariate potential by vector bisection."""
    pieces = sorted(potential.pieces, key=lambda p: p.region.box[var.name][0])
    masses = np.array([_piece_mass(p, var.name) for p in pieces])
    masses = np.clip(masses, 0.0, None)
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    total = cum[-1]
    u = rng.random(k) * total
    idx = (np.searchsorted(cum, u, side="right") - 1).clip(0, len(pieces) - 1)
    lo = np.array([pieces[i].region.box[var.name][0] for i in idx])
    hi = np.array([pieces[i].region.box[var.name][1] for i in idx])
    residual = u - cum[idx]
    a, b = lo.copy(), hi.copy()
    for _ in range(60):  # bisect F(x) - F(lo) = residual inside each piece
        mid = 0.5 * (a + b)
        fmid = _partial_mass_vec(pieces, idx, lo, mid, var.name)
        high = fmid >= residual
        b[high] = mid[high]
        a[~high] = mid[~high]
    return 0.5 * (a + b)


def _piece_mass(piece: MtePiece, name: str) -> float:
    lo, hi = piece.region.box[name]
    total = piece.constant * (hi - lo)
    for term in piece.terms:
        b = term.exponents.get(name)
        if b is None:
            total += term.coefficient * (hi - lo)
        elif abs(b * (hi - lo)) < 1e-10:
            total += term.coefficient * math.exp(b * lo) * (hi - lo) * (1 + 0.5 * b * (hi - lo))
        else:
            total += term.coefficient * math.exp(b * lo) * math.expm1(b * (hi - lo)) / b
    return total


def _partial_mass_vec(pieces, idx, lo, x, name) -> np.ndarray:
    out = np.zeros_like(x)
    for i, piece in enumerate(pieces):
        mask = idx == i
        if not mask.any():
            continue
        xl, xm = lo[mask], x[mask]
        acc = piece.constant * (xm - xl)
        for term in piece.terms:
            b = term.exponents.get(name, 0.0)
            if b == 0.0:
                acc = acc + term.coefficient * (xm - xl)
            else:
                acc = acc + term.coefficient * (np.exp(b * xm) - np.exp(b * xl)) / b
        out[mask] = acc
    return out


def evaluate_many(
    potential: MtePotential, assign: Mapping[str, np.ndarray], diagram: InfluenceDiagram
) -> np.ndarray:
    """Vectorised evaluation; discrete variables arrive as state indices."""
    n = len(next(iter(assign.values())))
    out = np.zeros(n)
    claimed = np.zeros(n, dtype=bool)
    for closed_top in (False, True):
        for piece in potential.pieces:
            mask = ~claimed
            for name, state in piece.region.discrete_config.items():
                idx = diagram.variable(name).state_index(state)
                mask &= assign[name] == idx
            for name, (lo, hi) in piece.region.box.items():
                x = assign[name]
                mask &= (x >= lo) & ((x <= hi) if closed_top else (x < hi))
            if not mask.any():
                continue
            value = np.full(mask.sum(), piece.constant)
            for term in piece.terms:
                arg = np.zeros(mask.sum())
                for name, b in term.exponents.items():
                    arg += b * assign[name][mask]
                value += term.coefficient * np.exp(arg)
            out[mask] = value
            claimed |= mask
    return out
