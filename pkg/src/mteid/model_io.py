"""Model files, policy files, and trace logs.

A model is a JSON document with four sections::

    {
      "variables": [{"name": "O", "kind": "discrete", "states": [...]},
                    {"name": "V", "kind": "continuous", "support": [lo, hi]},
                    {"name": "D", "kind": "decision", "states": [...]}],
      "info_arcs": [["R", "D"], ...],
      "potentials": [{"name": ..., "child": ..., <content>}, ...],
      "utilities":  [{"name": ..., <content>}, ...]
    }

Potential content is either inline pieces
(``"pieces": [{"region": {"config": {...}, "box": {...}},
"constant": c, "terms": [{"coefficient": a, "exponents": {...}}]}]``),
a template reference (``"template": {"kind": "normal" | "lognormal_oil_price"
| "fit", ...}``), or a ``"fragments"`` list pairing either of those with a
discrete ``"config"``.  Utilities may instead name a built-in
(``"builtin": "oil_wildcatter_u1"``).  A fragment can carry a ``"true_dist"``
declaring the generative distribution it stands for; named templates supply
one automatically.  Unknown numeric precision is never lost: floats are
serialised with full round-trip precision.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Mapping

from .diagram import ChanceFactor, InfluenceDiagram, TrueDist, UtilityFactor
from .errors import IoError, ParseError, UnknownTemplateError
from .fitting import FitSpec, fit_pdf, lognormal_oil_price, normal_template
from .fusion import SolveResult
from .potentials import (
    CONTINUOUS,
    DECISION,
    DISCRETE,
    PROBABILITY,
    UTILITY,
    ExpTerm,
    MtePiece,
    MtePotential,
    Region,
    Variable,
)

# --------------------------------------------------------------------------
# built-in utility: the oil-wildcatter drilling payoff in fitted form
# --------------------------------------------------------------------------

# Payoff of drilling in $000: volume * price - cost - 10 * tested, written as
# a constant plus four exponential terms (the identity curves for volume,
# price and cost each fitted by a0 + a1 * exp(a2 * x) and multiplied out).
WILDCATTER_CONSTANT = 600462529.9767685
WILDCATTER_COST_COEFF = 24504.975886
WILDCATTER_PRICE_COEFF = -600488161.2450081
WILDCATTER_PRICE_VOLUME_COEFF = 600488190.477144
WILDCATTER_VOLUME_COEFF = -600487073.8393291
WILDCATTER_COST_RATE = -0.00004109695
WILDCATTER_PRICE_RATE = 0.00004069868
WILDCATTER_VOLUME_RATE = 0.00004078953


def oil_wildcatter_u1(variables: Mapping[str, Variable]) -> MtePotential:
    """The built-in drilling payoff over {V, P, C, D, T}.

    Requires continuous V, P, C and two-state decisions D and T; state index 1
    means drill / test.  Not drilling costs the test fee when a test was run
    and nothing otherwise.
    """
    try:
        V, P, C, D, T = (variables[k] for k in ("V", "P", "C", "D", "T"))
    except KeyError as exc:
        raise UnknownTemplateError(
            f"oil_wildcatter_u1 needs variables V, P, C, D, T; missing {exc}"
        ) from exc
    box = {"V": V.support, "P": P.support, "C": C.support}
    terms = (
        ExpTerm(WILDCATTER_COST_COEFF, {"C": WILDCATTER_COST_RATE}),
        ExpTerm(WILDCATTER_PRICE_COEFF, {"P": WILDCATTER_PRICE_RATE}),
        ExpTerm(
            WILDCATTER_PRICE_VOLUME_COEFF,
            {"P": WILDCATTER_PRICE_RATE, "V": WILDCATTER_VOLUME_RATE},
        ),
        ExpTerm(WILDCATTER_VOLUME_COEFF, {"V": WILDCATTER_VOLUME_RATE}),
    )
    drill, test = D.states[1], T.states[1]
    no_drill, no_test = D.states[0], T.states[0]
    pieces = (
        MtePiece(Region({"D": drill, "T": test}, box), WILDCATTER_CONSTANT, terms),
        MtePiece(
            Region({"D": drill, "T": no_test}, box), WILDCATTER_CONSTANT + 10.0, terms
        ),
        MtePiece(Region({"D": no_drill, "T": test}, box), -10.0, ()),
        # not drilling and not testing pays exactly 0: no piece needed
    )
    return MtePotential((V, P, C, D, T), pieces, UTILITY)


BUILTIN_UTILITIES = {"oil_wildcatter_u1": oil_wildcatter_u1}

# --------------------------------------------------------------------------
# template expansion
# --------------------------------------------------------------------------

_fit_cache: dict[tuple, MtePotential] = {}


def _target_function(spec: str):
    kind, _, argstr = spec.partition(":")
    args = [float(a) for a in argstr.split(",")] if argstr else []
    if kind == "beta" and len(args) == 2:
        a, b = args
        lognorm = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)

        def beta_pdf(x: float) -> float:
            if not 0.0 <= x <= 1.0:
                return 0.0
            return math.exp((a - 1) * math.log(x) if x > 0 else 0.0) * math.exp(
                (b - 1) * math.log1p(-x) if x < 1 else 0.0
            ) / math.exp(lognorm)

        return beta_pdf
    if kind == "normal" and len(args) == 2:
        mu, sigma = args

        def normal_pdf(x: float) -> float:
            z = (x - mu) / sigma
            return math.exp(-0.5 * z * z) / (sigma * math.sqrt(2 * math.pi))

        return normal_pdf
    raise UnknownTemplateError(f"unknown fit target {spec!r}")


def _expand_template(spec: dict, variable: str) -> tuple[MtePotential, TrueDist | None]:
    kind = spec.get("kind")
    if kind == "normal":
        mu, sigma = float(spec["mu"]), float(spec["sigma"])
        potential = normal_template(mu, sigma, variable)
        dist = TrueDist(
            "normal", {"mu": mu, "sigma": sigma, "support": (mu - 3 * sigma, mu + 3 * sigma)}
        )
    elif kind == "lognormal_oil_price":
        potential = lognormal_oil_price(variable)
        lo, hi = potential.variable(variable).support
        dist = TrueDist("lognormal", {"mu": 2.75, "sigma": 0.7071, "support": (lo, hi)})
    elif kind == "fit":
        target = spec["target"]
        key = (
            target,
            tuple(float(x) for x in spec["interval"]),
            tuple(float(x) for x in spec.get("splits", ())),
            int(spec.get("terms", 3)),
            int(spec.get("grid_n", 101)),
            bool(spec.get("normalize", True)),
            int(spec.get("seed", 0)),
            variable,
        )
        if key not in _fit_cache:
            fit = fit_pdf(
                FitSpec(
                    target=_target_function(target),
                    interval=key[1],
                    split_points=key[2],
                    terms_per_piece=key[3],
                    grid_n=key[4],
                    normalize_after=key[5],
                    seed=key[6],
                    variable=variable,
                )
            )
            _fit_cache[key] = fit.potential
        potential = _fit_cache[key]
        name, _, argstr = target.partition(":")
        dist = None
        if name == "beta":
            a, b = (float(x) for x in argstr.split(","))
            dist = TrueDist("beta", {"a": a, "b": b})
        elif name == "normal":
            mu, sigma = (float(x) for x in argstr.split(","))
            lo, hi = key[1]
            dist = TrueDist("normal", {"mu": mu, "sigma": sigma, "support": (lo, hi)})
        return potential, dist
    else:
        raise UnknownTemplateError(f"unknown template kind {kind!r}")
    if spec.get("normalize", False):
        from .potentials import normalize_density

        potential = normalize_density(potential, variable)
    return potential, dist


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------


def load_model(path: str) -> InfluenceDiagram:
    """Parse a model file into a diagram, expanding template references."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return model_from_dict(doc)


def model_from_dict(doc: dict) -> InfluenceDiagram:
    if not isinstance(doc, dict):
        raise ParseError("model document must be a JSON object", 1, 1)
    for section in ("variables", "potentials", "utilities"):
        if section not in doc:
            raise ParseError(f"missing section {section!r}", 1, 1)
    variables: dict[str, Variable] = {}
    for entry in doc["variables"]:
        var = Variable(
            entry["name"],
            entry["kind"],
            states=tuple(entry["states"]) if "states" in entry else None,
            support=tuple(entry["support"]) if "support" in entry else None,
        )
        variables[var.name] = var
    arcs = tuple((s, t) for s, t in doc.get("info_arcs", []))
    chance = tuple(
        _parse_chance(entry, variables) for entry in doc["potentials"]
    )
    utilities = tuple(
        _parse_utility(entry, variables) for entry in doc["utilities"]
    )
    return InfluenceDiagram(tuple(variables.values()), arcs, chance, utilities)


def _fragments_of(entry: dict) -> list[dict]:
    if "fragments" in entry:
        return entry["fragments"]
    fragment = {k: entry[k] for k in ("template", "pieces", "true_dist") if k in entry}
    fragment["config"] = entry.get("config", {})
    return [fragment]


def _parse_chance(entry: dict, variables: Mapping[str, Variable]) -> ChanceFactor:
    child = entry["child"]
    if child not in variables:
        raise ParseError(f"potential {entry.get('name', '?')}: unknown child {child!r}")
    child_var = variables[child]
    pieces: list[MtePiece] = []
    dists: list[tuple[dict, TrueDist]] = []
    domain: dict[str, Variable] = {child: child_var}
    for fragment in _fragments_of(entry):
        config = dict(fragment.get("config", {}))
        for name in config:
            if name not in variables:
                raise ParseError(f"unknown variable {name!r} in fragment config")
            domain[name] = variables[name]
        dist = None
        if "template" in fragment:
            potential, dist = _expand_template(fragment["template"], child)
            frag_pieces = [
                MtePiece(
                    Region({**config, **p.region.discrete_config}, p.region.box),
                    p.constant,
                    p.terms,
                )
                for p in potential.pieces
            ]
        elif "pieces" in fragment:
            frag_pieces = []
            for raw in fragment["pieces"]:
                piece = _parse_piece(raw, variables, domain)
                frag_pieces.append(
                    MtePiece(
                        Region(
                            {**config, **piece.region.discrete_config},
                            piece.region.box,
                        ),
                        piece.constant,
                        piece.terms,
                    )
                )
        else:
            raise ParseError("fragment needs either 'template' or 'pieces'")
        if "true_dist" in fragment:
            raw = dict(fragment["true_dist"])
            if "support" in raw:
                raw["support"] = tuple(raw["support"])
            dist = TrueDist(raw.pop("kind"), raw)
        if dist is not None:
            dists.append((config, dist))
        pieces.extend(frag_pieces)
    dists.extend(_load_true_dists(entry))
    for piece in pieces:
        for name in (*piece.region.discrete_config, *piece.region.box):
            domain[name] = variables[name]
    potential = MtePotential(tuple(domain.values()), tuple(pieces), PROBABILITY)
    return ChanceFactor(child, potential, entry.get("name", child), tuple(dists))


def _parse_utility(entry: dict, variables: Mapping[str, Variable]) -> UtilityFactor:
    name = entry.get("name", "utility")
    if "builtin" in entry:
        key = entry["builtin"]
        if key not in BUILTIN_UTILITIES:
            raise UnknownTemplateError(f"unknown built-in utility {key!r}")
        return UtilityFactor(BUILTIN_UTILITIES[key](variables), name, key)
    if "pieces" not in entry:
        raise ParseError(f"utility {name!r} needs 'pieces' or 'builtin'")
    domain: dict[str, Variable] = {}
    pieces = []
    for raw in entry["pieces"]:
        pieces.append(_parse_piece(raw, variables, domain))
    for piece in pieces:
        for n in (*piece.region.discrete_config, *piece.region.box):
            domain[n] = variables[n]
    potential = MtePotential(tuple(domain.values()), tuple(pieces), UTILITY)
    return UtilityFactor(potential, name, entry.get("exact"))


def _parse_piece(raw: dict, variables, domain: dict) -> MtePiece:
    region = raw.get("region", raw)
    config = dict(region.get("config", {}))
    box = {n: tuple(iv) for n, iv in region.get("box", {}).items()}
    for name in (*config, *box):
        if name not in variables:
            raise ParseError(f"unknown variable {name!r} in piece region")
        domain[name] = variables[name]
    terms = tuple(
        ExpTerm(t["coefficient"], dict(t["exponents"])) for t in raw.get("terms", ())
    )
    return MtePiece(Region(config, box), float(raw.get("constant", 0.0)), terms)


# --------------------------------------------------------------------------
# saving
# --------------------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _variable_dict(v: Variable) -> dict:
    out: dict = {"name": v.name, "kind": v.kind}
    if v.states is not None:
        out["states"] = list(v.states)
    if v.support is not None:
        out["support"] = list(v.support)
    return out


def _piece_dict(piece: MtePiece) -> dict:
    out = {
        "region": {
            "config": dict(piece.region.discrete_config),
            "box": {n: list(iv) for n, iv in piece.region.box.items()},
        },
        "constant": piece.constant,
    }
    if piece.terms:
        out["terms"] = [
            {"coefficient": t.coefficient, "exponents": dict(t.exponents)}
            for t in piece.terms
        ]
    return out


def save_model(diagram: InfluenceDiagram, path: str) -> None:
    """Serialise a diagram in canonical inline-piece form."""
    doc = {
        "variables": [_variable_dict(v) for v in diagram.variables],
        "info_arcs": [list(arc) for arc in diagram.info_arcs],
        "potentials": [
            {
                "name": f.name,
                "child": f.child,
                "pieces": [_piece_dict(p) for p in f.potential.pieces],
                **(
                    {
                        "true_dists": [
                            {"config": cfg, "dist": {"kind": d.kind, **d.params}}
                            for cfg, d in f.true_dists
                        ]
                    }
                    if f.true_dists
                    else {}
                ),
            }
            for f in diagram.prob_potentials
        ],
        "utilities": [
            {
                "name": f.name,
                **({"exact": f.exact_key} if f.exact_key else {}),
                "pieces": [_piece_dict(p) for p in f.potential.pieces],
            }
            for f in diagram.utility_factors
        ],
    }
    _atomic_write(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _load_true_dists(entry: dict) -> tuple:
    out = []
    for item in entry.get("true_dists", ()):
        raw = dict(item["dist"])
        kind = raw.pop("kind")
        if "support" in raw:
            raw["support"] = tuple(raw["support"])
        out.append((dict(item["config"]), TrueDist(kind, raw)))
    return tuple(out)


def save_policy(result: SolveResult, path: str) -> None:
    """Write value and policies as JSON (interval endpoints to 6 decimals)."""
    doc = {
        "meu": result.meu,
        "policies": [
            {
                "decision": rule.decision,
                "rules": [
                    {
                        "region": {
                            "config": dict(region.discrete_config),
                            "box": {
                                n: [round(lo, 6), round(hi, 6)]
                                for n, (lo, hi) in region.box.items()
                            },
                        },
                        "action": action,
                    }
                    for region, action in rule.rules
                ],
            }
            for rule in result.policies
        ],
    }
    _atomic_write(path, json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_policy(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None


def save_trace(result: SolveResult, path: str) -> None:
    lines = [str(entry) for entry in result.trace]
    lines.append(f"value {result.meu!r}")
    _atomic_write(path, "\n".join(lines) + "\n")


def bundled_model_path(name: str) -> str:
    """Path of a model shipped with the package (e.g. 'oil_wildcatter_discrete')."""
    here = os.path.dirname(__file__)
    return os.path.join(here, "models", f"{name}.json")
