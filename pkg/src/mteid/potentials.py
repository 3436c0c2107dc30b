"""Algebra of piecewise constant-plus-exponential potentials on mixed domains.

A potential maps each point of a mixed discrete/continuous domain to
``a0 + sum_i a_i * exp(sum_j b_ij * x_j)``, with a separate formula on each
cell of an axis-aligned partition (one formula per discrete configuration and
per hypercube of the continuous coordinates).  Points outside every cell
evaluate to 0.  The class is closed under pointwise product, sum, scaling,
restriction, integration of a continuous variable, summation of a discrete
variable and maximisation over a discrete decision variable, which is all a
variable-elimination solver needs.

Boundary convention: continuous intervals are half open ``[lo, hi)`` except
that the last cell along each axis (per discrete configuration) is closed at
its upper end, so every in-support point belongs to exactly one cell.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

from .errors import (
    BadIntervalError,
    DomainError,
    DomainMismatchError,
    NonConstantMassError,
    NonPositiveMassError,
    NotContinuousError,
    NotDiscreteError,
    NotUtilityError,
    UnsupportedMaxDimError,
)

DISCRETE = "discrete"
CONTINUOUS = "continuous"
DECISION = "decision"

PROBABILITY = "probability"
UTILITY = "utility"

# Exponent vectors agreeing to this resolution are merged into one term.
TERM_MERGE_RESOLUTION = 1e-12
# |b*(hi-lo)| below this switches the closed-form integral to a 2-term series.
INTEGRATION_SERIES_CUTOFF = 1e-10
# |f-g| below this at a grid point counts as touching, not crossing.
TOUCH_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Variable:
    """A named coordinate: discrete chance, continuous chance, or decision.

    Discrete and decision variables carry an ordered tuple of state labels;
    continuous variables carry a closed support interval.  A decision declared
    with a support instead of states is constructible (so model validation can
    report it) but unusable in solver operations.
    """

    name: str
    kind: str
    states: tuple[str, ...] | None = None
    support: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.name:
            raise DomainError("variable name must be non-empty")
        if self.kind not in (DISCRETE, CONTINUOUS, DECISION):
            raise DomainError(f"unknown variable kind {self.kind!r}")
        if self.states is not None:
            object.__setattr__(self, "states", tuple(self.states))
        if self.support is not None:
            lo, hi = self.support
            object.__setattr__(self, "support", (float(lo), float(hi)))
        if self.kind == CONTINUOUS:
            if self.states is not None:
                raise DomainError(f"{self.name}: continuous variables have no states")
            if self.support is None or not self.support[0] < self.support[1]:
                raise DomainError(f"{self.name}: continuous support needs lo < hi")
        elif self.kind == DISCRETE:
            if not self.states:
                raise DomainError(f"{self.name}: discrete variables need >= 1 state")
        elif not self.states and self.support is None:
            raise DomainError(f"{self.name}: decision needs states (or a support)")

    @property
    def is_continuous(self) -> bool:
        return self.kind == CONTINUOUS

    @property
    def is_decision(self) -> bool:
        return self.kind == DECISION

    def state_index(self, label: str) -> int:
        if self.states is None or label not in self.states:
            raise DomainError(f"{label!r} is not a state of {self.name}")
        return self.states.index(label)


@dataclass(frozen=True)
class ExpTerm:
    """One ``coefficient * exp(sum_j exponents[j] * x_j)`` summand.

    Variables absent from ``exponents`` have exponent 0.  A term with an empty
    exponent map is forbidden; fold its coefficient into the piece constant.
    """

    coefficient: float
    exponents: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "coefficient", float(self.coefficient))
        exps = {n: float(b) for n, b in sorted(self.exponents.items())}
        object.__setattr__(self, "exponents", exps)
        if not exps:
            raise DomainError("term with empty exponents; fold into the constant")
        if not math.isfinite(self.coefficient):
            raise DomainError("term coefficient must be finite")
        if any(not math.isfinite(b) for b in exps.values()):
            raise DomainError("term exponents must be finite")


@dataclass(frozen=True)
class Region:
    """A cell: full assignment of the discrete variables plus a hypercube."""

    discrete_config: Mapping[str, str]
    box: Mapping[str, tuple[float, float]]

    def __post_init__(self):
        cfg = dict(sorted(self.discrete_config.items()))
        object.__setattr__(self, "discrete_config", cfg)
        box = {
            n: (float(lo), float(hi)) for n, (lo, hi) in sorted(self.box.items())
        }
        object.__setattr__(self, "box", box)
        for name, (lo, hi) in box.items():
            if not lo < hi:
                raise BadIntervalError(f"{name}: interval needs lo < hi, got [{lo}, {hi})")


@dataclass(frozen=True)
class MtePiece:
    region: Region
    constant: float
    terms: tuple[ExpTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "terms", tuple(self.terms))

    def value_at(self, point: Mapping[str, float]) -> float:
        """Evaluate the piece formula; the caller checks region membership."""
        total = self.constant
        for term in self.terms:
            arg = sum(b * point[n] for n, b in term.exponents.items())
            total += term.coefficient * math.exp(arg)
        return total


@dataclass(frozen=True)
class CrossingSet:
    """Interior points where two univariate potentials change sign order."""

    variable: str
    roots: tuple[float, ...]
    tolerance: float


@dataclass(frozen=True)
class PolicyRule:
    """For one decision: observed-context regions mapped to chosen states."""

    decision: str
    rules: tuple[tuple[Region, str], ...]

    def action_for(self, observation: Mapping[str, float | str]) -> str:
        """Return the chosen state for an observed context (first match wins)."""
        for closed_top in (False, True):
            for region, action in self.rules:
                if _region_matches(region, observation, closed_top):
                    return action
        raise DomainError(
            f"no rule of decision {self.decision} covers {dict(observation)!r}"
        )


def _region_matches(region: Region, observation, closed_top: bool) -> bool:
    for name, state in region.discrete_config.items():
        if name not in observation or observation[name] != state:
            return False
    for name, (lo, hi) in region.box.items():
        if name not in observation:
            return False
        x = observation[name]
        if x < lo or (x >= hi if not closed_top else x > hi):
            return False
    return True


@dataclass(frozen=True)
class MtePotential:
    """A piecewise potential over a fixed set of variables.

    ``kind`` distinguishes probability potentials from utility potentials;
    combination of anything with a utility yields a utility.
    """

    domain: tuple[Variable, ...]
    pieces: tuple[MtePiece, ...]
    kind: str = PROBABILITY

    def __post_init__(self):
        domain = tuple(sorted(self.domain, key=lambda v: v.name))
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if self.kind not in (PROBABILITY, UTILITY):
            raise DomainError(f"unknown potential kind {self.kind!r}")
        names = [v.name for v in domain]
        if len(set(names)) != len(names):
            raise DomainError("duplicate variable names in domain")
        self._check_pieces()

    def _check_pieces(self):
        disc = set(self.discrete_names())
        cont = set(self.continuous_names())
        for piece in self.pieces:
            cfg = piece.region.discrete_config
            if set(cfg) != disc:
                raise DomainError(
                    f"piece config {sorted(cfg)} does not cover discrete vars {sorted(disc)}"
                )
            for name, state in cfg.items():
                self.variable(name).state_index(state)
            if set(piece.region.box) != cont:
                raise DomainError(
                    f"piece box {sorted(piece.region.box)} does not cover "
                    f"continuous vars {sorted(cont)}"
                )
            for term in piece.terms:
                unknown = set(term.exponents) - cont
                if unknown:
                    raise DomainError(f"term exponents on non-continuous {sorted(unknown)}")
        self._check_disjoint()

    def _check_disjoint(self):
        by_cfg: dict[tuple, list[MtePiece]] = {}
        for piece in self.pieces:
            by_cfg.setdefault(_cfg_key(piece.region.discrete_config), []).append(piece)
        for group in by_cfg.values():
            for i, a in enumerate(group):
                for b in group[i + 1 :]:
                    if all(
                        max(a.region.box[n][0], b.region.box[n][0])
                        < min(a.region.box[n][1], b.region.box[n][1])
                        for n in a.region.box
                    ):
                        raise DomainError("pieces overlap with positive measure")

    # -- introspection -----------------------------------------------------

    def variable(self, name: str) -> Variable:
        for v in self.domain:
            if v.name == name:
                return v
        raise DomainError(f"{name!r} is not in the domain")

    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.domain)

    def continuous_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.domain if v.is_continuous)

    def discrete_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.domain if not v.is_continuous)

    # -- evaluation --------------------------------------------------------

    def evaluate(self, point: Mapping[str, float | str]) -> float:
        """Value at a full assignment of the domain; 0 outside all pieces."""
        self._check_point(point)
        piece = self._piece_at(point)
        if piece is None:
            return 0.0
        return piece.value_at(point)

    def _check_point(self, point):
        for v in self.domain:
            if v.name not in point:
                raise DomainError(f"point misses variable {v.name}")
            if v.is_continuous:
                x = point[v.name]
                if isinstance(x, str) or not math.isfinite(float(x)):
                    raise DomainError(f"{v.name} needs a finite real value")
            else:
                v.state_index(point[v.name])

    def _piece_at(self, point) -> MtePiece | None:
        candidates = [
            p
            for p in self.pieces
            if all(point[n] == s for n, s in p.region.discrete_config.items())
        ]
        for piece in candidates:
            if all(lo <= point[n] < hi for n, (lo, hi) in piece.region.box.items()):
                return piece
        # Closing rule: the last cell along each axis is closed at the top.
        tops = _axis_tops(candidates)
        for piece in candidates:
            ok = True
            for n, (lo, hi) in piece.region.box.items():
                x = point[n]
                if not (lo <= x <= hi) or (x == hi and hi != tops[n]):
                    ok = False
                    break
            if ok:
                return piece
        return None


def _axis_tops(pieces: Sequence[MtePiece]) -> dict[str, float]:
    tops: dict[str, float] = {}
    for piece in pieces:
        for n, (_, hi) in piece.region.box.items():
            tops[n] = max(tops.get(n, hi), hi)
    return tops


def _cfg_key(cfg: Mapping[str, str]) -> tuple:
    return tuple(sorted(cfg.items()))


# ---------------------------------------------------------------------------
# term bookkeeping
# ---------------------------------------------------------------------------


def _quantize(b: float) -> int:
    return round(b / TERM_MERGE_RESOLUTION)


def _merge_terms(raw: Iterable[tuple[float, Mapping[str, float]]]):
    """Merge equal exponent vectors; returns (constant_part, terms).

    Exponents within TERM_MERGE_RESOLUTION of zero are dropped; a term whose
    exponents all vanish folds into the constant part.
    """
    acc: dict[tuple, float] = {}
    rep: dict[tuple, dict[str, float]] = {}
    constant = 0.0
    for coeff, exps in raw:
        kept = {n: b for n, b in exps.items() if _quantize(b) != 0}
        if not kept:
            constant += coeff
            continue
        key = tuple(sorted((n, _quantize(b)) for n, b in kept.items()))
        if key in acc:
            acc[key] += coeff
        else:
            acc[key] = coeff
            rep[key] = kept
    terms = tuple(ExpTerm(c, rep[k]) for k, c in acc.items() if c != 0.0)
    return constant, terms


def _make_piece(cfg, box, constant, terms) -> MtePiece | None:
    if constant == 0.0 and not terms:
        return None  # identically zero; "0 elsewhere" already covers it
    return MtePiece(Region(cfg, box), constant, terms)


def _sum_piece_bag(bag, cont_names: Sequence[str]) -> list[MtePiece]:
    """Sum an arbitrary bag of (cfg, box, constant, terms) entries.

    Entries are grouped by configuration; within a group the boxes are refined
    to their common interval grid and co-located formulas are added.
    """
    groups: dict[tuple, list] = {}
    cfgs: dict[tuple, dict] = {}
    for cfg, box, constant, terms in bag:
        key = _cfg_key(cfg)
        groups.setdefault(key, []).append((box, constant, terms))
        cfgs[key] = dict(cfg)
    out: list[MtePiece] = []
    for key, entries in groups.items():
        cfg = cfgs[key]
        if not cont_names:
            raw = []
            constant = 0.0
            for _, c, terms in entries:
                constant += c
                raw.extend((t.coefficient, t.exponents) for t in terms)
            extra, merged = _merge_terms(raw)
            piece = _make_piece(cfg, {}, constant + extra, merged)
            if piece:
                out.append(piece)
            continue
        edges = {
            n: sorted({e for box, _, _ in entries for e in box[n]}) for n in cont_names
        }
        axes = [
            [(lo, hi) for lo, hi in zip(edges[n], edges[n][1:])] for n in cont_names
        ]
        for cell in itertools.product(*axes):
            box = dict(zip(cont_names, cell))
            mids = {n: (lo + hi) / 2.0 for n, (lo, hi) in box.items()}
            constant = 0.0
            raw = []
            covered = False
            for ebox, c, terms in entries:
                if all(ebox[n][0] < mids[n] < ebox[n][1] for n in cont_names):
                    covered = True
                    constant += c
                    raw.extend((t.coefficient, t.exponents) for t in terms)
            if not covered:
                continue
            extra, merged = _merge_terms(raw)
            piece = _make_piece(cfg, box, constant + extra, merged)
            if piece:
                out.append(piece)
    return out


def _union_domain(a: Sequence[Variable], b: Sequence[Variable]) -> tuple[Variable, ...]:
    merged: dict[str, Variable] = {v.name: v for v in a}
    for v in b:
        if v.name in merged and merged[v.name] != v:
            raise DomainError(f"conflicting declarations of variable {v.name}")
        merged.setdefault(v.name, v)
    return tuple(merged.values())


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def evaluate(potential: MtePotential, point: Mapping[str, float | str]) -> float:
    return potential.evaluate(point)


def combine(phi1: MtePotential, phi2: MtePotential) -> MtePotential:
    """Pointwise product; the workhorse of variable elimination.

    Pieces pair up when their configurations agree on shared discrete
    variables and their boxes overlap on shared continuous variables; each
    pair contributes one piece on the intersection carrying the algebraic
    product of the two formulas.  Yields at most ``k1 * k2`` pieces.
    """
    domain = _union_domain(phi1.domain, phi2.domain)
    kind = UTILITY if UTILITY in (phi1.kind, phi2.kind) else PROBABILITY
    pieces: list[MtePiece] = []
    for p in phi1.pieces:
        pcfg, pbox = p.region.discrete_config, p.region.box
        for q in phi2.pieces:
            qcfg, qbox = q.region.discrete_config, q.region.box
            if any(pcfg[n] != s for n, s in qcfg.items() if n in pcfg):
                continue
            box: dict[str, tuple[float, float]] = {}
            empty = False
            for n in set(pbox) | set(qbox):
                if n in pbox and n in qbox:
                    lo = max(pbox[n][0], qbox[n][0])
                    hi = min(pbox[n][1], qbox[n][1])
                    if not lo < hi:
                        empty = True
                        break
                    box[n] = (lo, hi)
                else:
                    box[n] = pbox.get(n) or qbox[n]
            if empty:
                continue
            raw: list[tuple[float, Mapping[str, float]]] = []
            if q.constant != 0.0:
                raw += [(t.coefficient * q.constant, t.exponents) for t in p.terms]
            if p.constant != 0.0:
                raw += [(t.coefficient * p.constant, t.exponents) for t in q.terms]
            for t in p.terms:
                for s in q.terms:
                    exps = dict(t.exponents)
                    for n, b in s.exponents.items():
                        exps[n] = exps.get(n, 0.0) + b
                    raw.append((t.coefficient * s.coefficient, exps))
            extra, terms = _merge_terms(raw)
            piece = _make_piece(
                {**pcfg, **qcfg}, box, p.constant * q.constant + extra, terms
            )
            if piece:
                pieces.append(piece)
    return MtePotential(domain, pieces, kind)


def add(phi1: MtePotential, phi2: MtePotential) -> MtePotential:
    """Pointwise sum of two potentials on the same domain."""
    if set(phi1.domain) != set(phi2.domain):
        raise DomainMismatchError(
            f"add needs identical domains, got {phi1.variable_names()} "
            f"vs {phi2.variable_names()}"
        )
    bag = [
        (p.region.discrete_config, p.region.box, p.constant, p.terms)
        for p in (*phi1.pieces, *phi2.pieces)
    ]
    kind = UTILITY if UTILITY in (phi1.kind, phi2.kind) else PROBABILITY
    return MtePotential(phi1.domain, _sum_piece_bag(bag, phi1.continuous_names()), kind)


def scale(phi: MtePotential, c: float) -> MtePotential:
    """Pointwise scalar multiple."""
    pieces = []
    for p in phi.pieces:
        piece = _make_piece(
            p.region.discrete_config,
            p.region.box,
            p.constant * c,
            tuple(replace(t, coefficient=t.coefficient * c) for t in p.terms)
            if c != 0.0
            else (),
        )
        if piece:
            pieces.append(piece)
    return MtePotential(phi.domain, pieces, phi.kind)


def restrict(
    potential: MtePotential, assignment: Mapping[str, float | str]
) -> MtePotential:
    """Fix some variables; they leave the domain.

    Discrete assignments keep only the matching pieces; continuous values are
    substituted into the exponentials, the factor ``exp(b * value)`` folding
    into the coefficients.
    """
    disc_part: dict[str, str] = {}
    cont_part: dict[str, float] = {}
    for name, value in assignment.items():
        var = potential.variable(name)
        if var.is_continuous:
            cont_part[name] = float(value)
        else:
            var.state_index(value)
            disc_part[name] = value
    keep = tuple(v for v in potential.domain if v.name not in assignment)
    cont_keep = [v.name for v in keep if v.is_continuous]
    pieces: list[MtePiece] = []
    for piece in potential.pieces:
        cfg = piece.region.discrete_config
        if any(cfg[n] != s for n, s in disc_part.items()):
            continue
        if not _box_contains(potential, piece, cont_part):
            continue
        raw = []
        for term in piece.terms:
            shift = sum(
                term.exponents[n] * x for n, x in cont_part.items() if n in term.exponents
            )
            exps = {n: b for n, b in term.exponents.items() if n not in cont_part}
            raw.append((term.coefficient * math.exp(shift), exps))
        extra, terms = _merge_terms(raw)
        new = _make_piece(
            {n: s for n, s in cfg.items() if n not in disc_part},
            {n: iv for n, iv in piece.region.box.items() if n not in cont_part},
            piece.constant + extra,
            terms,
        )
        if new:
            pieces.append(new)
    return MtePotential(keep, _dedupe_overlaps(pieces, cont_keep), potential.kind)


def _dedupe_overlaps(pieces: list[MtePiece], cont_names) -> list[MtePiece]:
    # Restriction at a shared boundary can select two adjacent source pieces;
    # keep the half-open winner only.
    out: list[MtePiece] = []
    for piece in pieces:
        clash = False
        for kept in out:
            if kept.region.discrete_config == piece.region.discrete_config and all(
                max(kept.region.box[n][0], piece.region.box[n][0])
                < min(kept.region.box[n][1], piece.region.box[n][1])
                for n in cont_names
            ):
                clash = True
                break
        if not clash:
            out.append(piece)
    return out


def _box_contains(potential, piece, values: Mapping[str, float]) -> bool:
    if not values:
        return True
    cfg = piece.region.discrete_config
    siblings = [p for p in potential.pieces if p.region.discrete_config == cfg]
    tops = _axis_tops(siblings)
    for n, x in values.items():
        lo, hi = piece.region.box[n]
        if not (lo <= x < hi or (x == hi and hi == tops[n])):
            return False
    return True


def marginalize_continuous(phi: MtePotential, z: str) -> MtePotential:
    """Integrate out a continuous chance variable in closed form.

    Per piece, over ``[l, u]``: the constant contributes ``constant * (u-l)``
    and a term with z-exponent ``b`` picks up the factor
    ``exp(b*l) * expm1(b*(u-l)) / b`` (series ``(u-l) * (1 + b*(u-l)/2)`` when
    ``|b*(u-l)|`` is tiny, avoiding cancellation).
    """
    var = phi.variable(z)
    if var.kind != CONTINUOUS:
        raise NotContinuousError(f"{z} is not a continuous chance variable")
    bag = []
    for piece in phi.pieces:
        lo, hi = piece.region.box[z]
        width = hi - lo
        constant = piece.constant * width
        raw = []
        for term in piece.terms:
            rest = {n: b for n, b in term.exponents.items() if n != z}
            b = term.exponents.get(z)
            if b is None:
                raw.append((term.coefficient * width, rest))
                continue
            bw = b * width
            if abs(bw) < INTEGRATION_SERIES_CUTOFF:
                integral = math.exp(b * lo) * width * (1.0 + 0.5 * bw)
            else:
                integral = math.exp(b * lo) * math.expm1(bw) / b
            raw.append((term.coefficient * integral, rest))
        extra, terms = _merge_terms(raw)
        box = {n: iv for n, iv in piece.region.box.items() if n != z}
        bag.append((piece.region.discrete_config, box, constant + extra, terms))
    keep = tuple(v for v in phi.domain if v.name != z)
    cont = [v.name for v in keep if v.is_continuous]
    return MtePotential(keep, _sum_piece_bag(bag, cont), phi.kind)


def marginalize_discrete(phi: MtePotential, y: str) -> MtePotential:
    """Sum out a discrete chance variable; missing states contribute 0."""
    var = phi.variable(y)
    if var.kind != DISCRETE:
        raise NotDiscreteError(f"{y} is not a discrete chance variable")
    bag = [
        (
            {n: s for n, s in p.region.discrete_config.items() if n != y},
            p.region.box,
            p.constant,
            p.terms,
        )
        for p in phi.pieces
    ]
    keep = tuple(v for v in phi.domain if v.name != y)
    cont = [v.name for v in keep if v.is_continuous]
    return MtePotential(keep, _sum_piece_bag(bag, cont), phi.kind)


def normalize_density(
    phi: MtePotential, z: str, *, rel_tol: float = 1e-6
) -> MtePotential:
    """Rescale so the integral over ``z`` is 1 for every other configuration.

    Division by a mass that varies with a continuous parent would leave the
    representable class, so the mass must be constant on each remaining cell
    (within ``rel_tol`` relative); otherwise E_NONCONSTANT_K is raised.
    """
    mass = marginalize_continuous(phi, z)
    cells: dict[tuple, list[tuple[dict, float]]] = {}
    for piece in mass.pieces:
        value = piece.constant
        if piece.terms:
            corners = [piece.region.box[n] for n in sorted(piece.region.box)]
            names = sorted(piece.region.box)
            samples = []
            for pt in itertools.product(*(_linspace(lo, hi, 5) for lo, hi in corners)):
                samples.append(piece.value_at(dict(zip(names, pt))))
            spread = max(samples) - min(samples)
            mean = sum(samples) / len(samples)
            if spread > rel_tol * max(abs(mean), 1e-300):
                raise NonConstantMassError(
                    f"mass over {z} varies with a continuous parent "
                    f"(spread {spread:.3g} around {mean:.3g})"
                )
            value = mean
        if value <= 0.0:
            raise NonPositiveMassError(f"mass over {z} is {value:.3g}")
        key = _cfg_key(piece.region.discrete_config)
        cells.setdefault(key, []).append((dict(piece.region.box), value))
    pieces: list[MtePiece] = []
    for piece in phi.pieces:
        key = _cfg_key(piece.region.discrete_config)
        if key not in cells:
            raise NonPositiveMassError(f"mass over {z} is 0 for {dict(piece.region.discrete_config)}")
        rest_box = {n: iv for n, iv in piece.region.box.items() if n != z}
        for cell_box, value in cells[key]:
            overlap = {}
            ok = True
            for n, (lo, hi) in rest_box.items():
                clo = max(lo, cell_box[n][0])
                chi = min(hi, cell_box[n][1])
                if not clo < chi:
                    ok = False
                    break
                overlap[n] = (clo, chi)
            if not ok:
                continue
            box = dict(overlap)
            box[z] = piece.region.box[z]
            new = _make_piece(
                piece.region.discrete_config,
                box,
                piece.constant / value,
                tuple(
                    replace(t, coefficient=t.coefficient / value) for t in piece.terms
                ),
            )
            if new:
                pieces.append(new)
    return MtePotential(phi.domain, pieces, phi.kind)


def _linspace(lo: float, hi: float, n: int) -> list[float]:
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def find_crossings(
    f: MtePotential,
    g: MtePotential,
    interval: tuple[float, float],
    grid_n: int = 512,
    tol: float = 1e-9,
) -> CrossingSet:
    """Locate sign changes of ``f - g`` on an interval by grid + bisection.

    The difference is sampled at ``grid_n + 1`` evenly spaced points; every
    sign change is bracketed and refined by bisection until the bracket is
    narrower than ``tol``.  Grid values within TOUCH_TOLERANCE of zero count
    as touching and do not create a crossing on their own.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo < hi:
        raise BadIntervalError(f"need lo < hi, got [{lo}, {hi}]")
    if grid_n < 2:
        raise BadIntervalError("grid_n must be >= 2")
    if not tol > 0:
        raise BadIntervalError("tol must be positive")
    names_f = f.continuous_names()
    names_g = g.continuous_names()
    if (
        len(f.domain) != 1
        or len(g.domain) != 1
        or names_f != names_g
        or len(names_f) != 1
    ):
        raise DomainError("find_crossings needs two potentials over one shared variable")
    name = names_f[0]

    def diff(x: float) -> float:
        return f.evaluate({name: x}) - g.evaluate({name: x})

    xs = _linspace(lo, hi, grid_n + 1)
    ds = [diff(x) for x in xs]
    signs = [0 if abs(d) < TOUCH_TOLERANCE else (1 if d > 0 else -1) for d in ds]
    roots: list[float] = []
    last = None  # index of the last grid point with a definite sign
    for i, s in enumerate(signs):
        if s == 0:
            continue
        if last is not None and s != signs[last]:
            a, b = xs[last], xs[i]
            da = ds[last]
            while b - a > tol:
                mid = 0.5 * (a + b)
                dm = diff(mid)
                if dm == 0.0:
                    a = b = mid
                    break
                if (dm > 0) == (da > 0):
                    a, da = mid, dm
                else:
                    b = mid
            roots.append(0.5 * (a + b))
        last = i
    return CrossingSet(name, tuple(roots), tol)


def max_marginalize_decision(
    u: MtePotential, d: str
) -> tuple[MtePotential, PolicyRule]:
    """Eliminate a decision by pointwise maximisation over its alternatives.

    The fragments obtained by fixing each alternative are refined to a common
    partition.  On cells with no continuous coordinate the maximum is a plain
    numeric max; with one continuous coordinate the cells are split at every
    pairwise crossing point and the winning fragment is read off at each
    sub-interval midpoint.  Ties break toward the lowest state index.  Returns
    the max-potential together with the argmax policy over the remaining
    variables.
    """
    if u.kind != UTILITY:
        raise NotUtilityError("max-marginalisation applies to utility potentials")
    var = u.variable(d)
    if not var.is_decision or not var.states:
        raise DomainError(f"{d} is not a discrete decision variable")
    keep = tuple(v for v in u.domain if v.name != d)
    cont = [v for v in keep if v.is_continuous]
    if len(cont) >= 2:
        raise UnsupportedMaxDimError(
            f"{len(cont)} continuous variables remain after fixing {d}; max "
            "over hypercubes is only exact for at most one"
        )
    fragments = [restrict(u, {d: state}) for state in var.states]
    disc = [v for v in keep if not v.is_continuous]
    pieces: list[MtePiece] = []
    rules: list[tuple[Region, str]] = []
    state_lists = [v.states for v in disc]
    for combo in itertools.product(*state_lists):
        cfg = {v.name: s for v, s in zip(disc, combo)}
        frag_pieces = [
            {_cfg_key(p.region.discrete_config): p for p in frag.pieces}.get(_cfg_key(cfg))
            for frag in fragments
        ]
        if not cont:
            values = [p.constant if p else 0.0 for p in frag_pieces]
            best = max(range(len(values)), key=lambda i: (values[i], -i))
            piece = _make_piece(cfg, {}, values[best], ())
            if piece:
                pieces.append(piece)
            rules.append((Region(cfg, {}), var.states[best]))
            continue
        z = cont[0]
        sub_pieces, sub_rules = _max_one_continuous(
            fragments, cfg, z, var.states
        )
        pieces.extend(sub_pieces)
        rules.extend(sub_rules)
    return MtePotential(keep, pieces, UTILITY), PolicyRule(d, tuple(rules))


def _max_one_continuous(fragments, cfg, z: Variable, states):
    """Argmax over fragments on one continuous axis for a fixed config."""
    zlo, zhi = z.support
    key = _cfg_key(cfg)
    per_frag: list[list[MtePiece]] = []
    edges = {zlo, zhi}
    for frag in fragments:
        mine = [p for p in frag.pieces if _cfg_key(p.region.discrete_config) == key]
        per_frag.append(mine)
        for p in mine:
            edges.update(p.region.box[z.name])
    grid = sorted(edges)
    pieces: list[MtePiece] = []
    runs: list[tuple[float, float, int]] = []  # argmax runs along the whole axis
    for lo, hi in zip(grid, grid[1:]):
        mid = 0.5 * (lo + hi)
        funcs = []
        for mine in per_frag:
            hit = next(
                (p for p in mine if p.region.box[z.name][0] < mid < p.region.box[z.name][1]),
                None,
            )
            funcs.append((hit.constant, hit.terms) if hit else (0.0, ()))
        cuts = {lo, hi}
        for i in range(len(funcs)):
            for j in range(i + 1, len(funcs)):
                fi = _univariate(z, lo, hi, *funcs[i])
                fj = _univariate(z, lo, hi, *funcs[j])
                cuts.update(find_crossings(fi, fj, (lo, hi)).roots)
        cells = sorted(cuts)
        # winners per sub-cell, merging adjacent sub-cells with the same winner
        local: list[tuple[float, float, int]] = []
        for a, b in zip(cells, cells[1:]):
            m = 0.5 * (a + b)
            vals = [
                c + sum(t.coefficient * math.exp(t.exponents[z.name] * m) for t in ts)
                for c, ts in funcs
            ]
            best = max(range(len(vals)), key=lambda i: (vals[i], -i))
            if local and local[-1][2] == best:
                local[-1] = (local[-1][0], b, best)
            else:
                local.append((a, b, best))
        for a, b, best in local:
            constant, terms = funcs[best]
            piece = _make_piece(cfg, {z.name: (a, b)}, constant, terms)
            if piece:
                pieces.append(piece)
            if runs and runs[-1][2] == best and runs[-1][1] == a:
                runs[-1] = (runs[-1][0], b, best)
            else:
                runs.append((a, b, best))
    rule_tuples = tuple(
        (Region(cfg, {z.name: (a, b)}), states[best]) for a, b, best in runs
    )
    return pieces, rule_tuples


def _univariate(z: Variable, lo: float, hi: float, constant, terms) -> MtePotential:
    piece = MtePiece(Region({}, {z.name: (lo, hi)}), constant, terms)
    return MtePotential((z,), (piece,), UTILITY)


def constant_potential(
    domain: Sequence[Variable], value: float, kind: str = PROBABILITY
) -> MtePotential:
    """A potential equal to ``value`` on the whole domain box."""
    disc = [v for v in domain if not v.is_continuous]
    box = {v.name: v.support for v in domain if v.is_continuous}
    pieces = []
    for combo in itertools.product(*(v.states for v in disc)):
        cfg = {v.name: s for v, s in zip(disc, combo)}
        piece = _make_piece(cfg, box, value, ())
        if piece:
            pieces.append(piece)
    return MtePotential(tuple(domain), pieces, kind)
