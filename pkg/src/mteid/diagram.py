"""Influence-diagram model: variables, arcs, factors, and validation.

A diagram couples chance variables (each the child of exactly one probability
potential), decision variables with informational parents, and one or more
multiplicative utility factors.  Validation checks the structural invariants
and that every probability potential is a conditional density in its child.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .errors import NotPermutationError
from .potentials import (
    CONTINUOUS,
    DECISION,
    DISCRETE,
    PROBABILITY,
    MtePotential,
    Variable,
    marginalize_continuous,
    restrict,
)


@dataclass(frozen=True)
class TrueDist:
    """Named generative distribution backing a factor, for simulation.

    ``kind`` is one of ``normal``, ``lognormal``, ``beta``, ``constant``;
    parameters live in ``params`` (plus an optional truncation ``support``).
    """

    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ChanceFactor:
    """A probability potential tagged with its child variable.

    ``true_dists`` pairs parent configurations (possibly empty or partial)
    with the generative distribution of the child under that configuration;
    fragments without one are simulated from the fitted potential itself.
    """

    child: str
    potential: MtePotential
    name: str = ""
    true_dists: tuple[tuple[dict, TrueDist], ...] = ()


@dataclass(frozen=True)
class UtilityFactor:
    """A multiplicative utility factor, optionally backed by an exact form."""

    potential: MtePotential
    name: str = ""
    exact_key: str | None = None


@dataclass(frozen=True)
class InfluenceDiagram:
    variables: tuple[Variable, ...]
    info_arcs: tuple[tuple[str, str], ...]
    prob_potentials: tuple[ChanceFactor, ...]
    utility_factors: tuple[UtilityFactor, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(
            self, "info_arcs", tuple((s, t) for s, t in self.info_arcs)
        )
        object.__setattr__(self, "prob_potentials", tuple(self.prob_potentials))
        object.__setattr__(self, "utility_factors", tuple(self.utility_factors))

    def variable(self, name: str) -> Variable | None:
        for v in self.variables:
            if v.name == name:
                return v
        return None

    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def decisions(self) -> tuple[Variable, ...]:
        return tuple(v for v in self.variables if v.kind == DECISION)

    def factor_named(self, name: str):
        for f in (*self.prob_potentials, *self.utility_factors):
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class Diagnostic:
    code: str
    subject: str
    detail: str = ""

    def __str__(self):
        text = f"{self.code}({self.subject})"
        return f"{text}: {self.detail}" if self.detail else text


def validate_model(
    diagram: InfluenceDiagram,
    *,
    density_tol: float = 1e-4,
    parent_grid: int = 16,
) -> list[Diagnostic]:
    """Check structure and density contracts; returns [] iff the model is valid."""
    out: list[Diagnostic] = []
    names = set()
    for v in diagram.variables:
        if v.name in names:
            out.append(Diagnostic("DUPLICATE_VARIABLE", v.name))
        names.add(v.name)
        if v.kind == DECISION and not v.states:
            out.append(
                Diagnostic("CONTINUOUS_DECISION", v.name, "decisions need discrete states")
            )
    for source, target in diagram.info_arcs:
        tvar = diagram.variable(target)
        if source not in names or tvar is None:
            out.append(Diagnostic("UNKNOWN_VARIABLE", f"{source}->{target}"))
        elif tvar.kind != DECISION:
            out.append(Diagnostic("BAD_INFO_ARC", f"{source}->{target}",
                                  "information arcs point at decisions"))
    for factor in diagram.prob_potentials:
        if factor.potential.kind != PROBABILITY:
            out.append(Diagnostic("NOT_A_PROBABILITY", factor.child))
        for v in factor.potential.domain:
            declared = diagram.variable(v.name)
            if declared is None or declared != v:
                out.append(Diagnostic("UNKNOWN_VARIABLE", v.name,
                                      f"in potential for {factor.child}"))
    for factor in diagram.utility_factors:
        for v in factor.potential.domain:
            declared = diagram.variable(v.name)
            if declared is None or declared != v:
                out.append(Diagnostic("UNKNOWN_VARIABLE", v.name,
                                      f"in utility {factor.name or '?'}"))
    if out:
        return out  # density checks need a structurally sound model

    children = [f.child for f in diagram.prob_potentials]
    for v in diagram.variables:
        if v.kind == DECISION:
            continue
        count = children.count(v.name)
        if count == 0:
            out.append(Diagnostic("MISSING_CPD", v.name))
        elif count > 1:
            out.append(Diagnostic("DUPLICATE_CPD", v.name))
    if not diagram.utility_factors:
        out.append(Diagnostic("NO_UTILITY", "-", "at least one utility factor required"))

    for factor in diagram.prob_potentials:
        child = diagram.variable(factor.child)
        if child is None or child.name not in factor.potential.variable_names():
            out.append(Diagnostic("MISSING_CHILD", factor.child))
            continue
        worst = _density_deviation(factor.potential, child, parent_grid)
        if worst > density_tol:
            out.append(
                Diagnostic("NOT_A_DENSITY", child.name,
                           f"mass deviates from 1 by {worst:.3g}")
            )
    return out


def _density_deviation(potential: MtePotential, child: Variable, grid: int) -> float:
    """Largest |mass - 1| over a grid of parent configurations."""
    parents = [v for v in potential.domain if v.name != child.name]
    axes = []
    for p in parents:
        if p.is_continuous:
            lo, hi = p.support
            step = (hi - lo) / grid
            axes.append([(p.name, lo + (i + 0.5) * step) for i in range(grid)])
        else:
            axes.append([(p.name, s) for s in p.states])
    worst = 0.0
    for combo in itertools.product(*axes):
        assignment = dict(combo)
        conditional = restrict(potential, assignment) if assignment else potential
        if child.is_continuous:
            mass = marginalize_continuous(conditional, child.name).evaluate({})
        else:
            mass = sum(
                conditional.evaluate({child.name: s}) for s in child.states
            )
        worst = max(worst, abs(mass - 1.0))
    return worst


def validate_order(
    diagram: InfluenceDiagram, order: Sequence[str]
) -> tuple[bool, list[str]]:
    """Check a deletion sequence against the information constraints.

    Valid iff every informational parent of a decision is deleted after that
    decision (equivalently: everything unobserved at a decision goes first).
    """
    names = diagram.variable_names()
    if sorted(order) != sorted(names):
        raise NotPermutationError(
            f"order {list(order)} is not a permutation of {sorted(names)}"
        )
    position = {name: i for i, name in enumerate(order)}
    problems = []
    for source, target in diagram.info_arcs:
        if position[source] < position[target]:
            problems.append(
                f"{source} is observed before deciding {target}, so it must be "
                f"deleted after {target}"
            )
    return (not problems), problems
