"""Sequential variable deletion over a pool of potentials.

Deleting a variable gathers every potential that mentions it, combines them,
and marginalises the variable out: integration for continuous chance,
summation for discrete chance, maximisation (with policy extraction) for
decisions.  After the last deletion the pool holds empty-domain constants
whose product is the maximum expected utility.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

from .diagram import InfluenceDiagram, validate_model, validate_order
from .errors import (
    DecisionInProbabilityError,
    DomainError,
    InvalidModelError,
    InvalidOrderError,
)
from .potentials import (
    CONTINUOUS,
    DECISION,
    PROBABILITY,
    MtePotential,
    PolicyRule,
    Variable,
    combine,
    marginalize_continuous,
    marginalize_discrete,
    max_marginalize_decision,
)


@dataclass(frozen=True)
class TraceEntry:
    """One deletion step: what was fused and what came out."""

    variable: str
    combined_domains: tuple[tuple[str, ...], ...]
    result_domain: tuple[str, ...]
    result_kind: str
    result_pieces: int

    def __str__(self):
        inputs = " ".join("{" + ",".join(d) + "}" for d in self.combined_domains)
        result = "{" + ",".join(self.result_domain) + "}"
        return (
            f"delete {self.variable}: fuse {inputs} -> {result} "
            f"[{self.result_kind}, {self.result_pieces} pieces]"
        )


@dataclass(frozen=True)
class SolveResult:
    meu: float
    policies: tuple[PolicyRule, ...]
    trace: tuple[TraceEntry, ...]

    def policy_for(self, decision: str) -> PolicyRule:
        for rule in self.policies:
            if rule.decision == decision:
                return rule
        raise DomainError(f"no policy recorded for {decision}")


def fuse_step(
    pool: Sequence[MtePotential], variable: Variable
) -> tuple[list[MtePotential], PolicyRule | None, TraceEntry]:
    """Delete one variable from the pool; returns the updated pool."""
    gathered = [p for p in pool if variable.name in p.variable_names()]
    rest = [p for p in pool if variable.name not in p.variable_names()]
    if not gathered:
        raise DomainError(f"{variable.name} appears in no pooled potential")
    if variable.kind == DECISION:
        bad = [p for p in gathered if p.kind == PROBABILITY]
        if bad:
            raise DecisionInProbabilityError(
                f"probability potential over {bad[0].variable_names()} still "
                f"contains decision {variable.name}; the order or model is invalid"
            )
    fused = reduce(combine, gathered)
    policy = None
    if variable.kind == DECISION:
        result, policy = max_marginalize_decision(fused, variable.name)
    elif variable.kind == CONTINUOUS:
        result = marginalize_continuous(fused, variable.name)
    else:
        result = marginalize_discrete(fused, variable.name)
    entry = TraceEntry(
        variable.name,
        tuple(p.variable_names() for p in gathered),
        result.variable_names(),
        result.kind,
        len(result.pieces),
    )
    rest.append(result)
    return rest, policy, entry


def solve(diagram: InfluenceDiagram, order: Sequence[str]) -> SolveResult:
    """Run the full deletion sequence and collect value, policies, and trace."""
    diagnostics = validate_model(diagram)
    if diagnostics:
        raise InvalidModelError(
            "model failed validation: " + "; ".join(str(d) for d in diagnostics)
        )
    ok, problems = validate_order(diagram, order)
    if not ok:
        raise InvalidOrderError("; ".join(problems))
    pool: list[MtePotential] = [f.potential for f in diagram.prob_potentials]
    pool += [f.potential for f in diagram.utility_factors]
    policies: list[PolicyRule] = []
    trace: list[TraceEntry] = []
    for name in order:
        variable = diagram.variable(name)
        pool, policy, entry = fuse_step(pool, variable)
        trace.append(entry)
        if policy is not None:
            policies.append(policy)
    meu = 1.0
    for leftover in pool:
        meu *= leftover.evaluate({})
    return SolveResult(meu, tuple(policies), tuple(trace))
