"""Exact evaluator for the torsion combination rules.

Values are carried as ``q + c/pi`` with exact rational q and c, so every rule
(alternating cell sums, graph-of-groups sums, scalings, the surface closed
form) is bit-exact and deterministic on rational inputs; the float view is
computed only on demand.  Provenance propagates pessimistically: combining
anything with an asserted or approximated input taints the result down to the
weakest tag involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ValidationFailure

CLOSED_FORM = "closed-form"
EXACT_ABELIAN = "exact-abelian"
ASSERTED = "asserted"
APPROXIMATED = "approximated"

_STRENGTH = {APPROXIMATED: 0, ASSERTED: 1, EXACT_ABELIAN: 2, CLOSED_FORM: 3}


def _weakest(tags: Iterable[str]) -> str:
    tags = list(tags)
    if not tags:
        return CLOSED_FORM
    return min(tags, key=lambda t: _STRENGTH[t])


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x)  # exact binary value of the float
    if isinstance(x, str):
        return Fraction(x)
    raise ValidationFailure(f"cannot interpret {x!r} as an exact number")


@dataclass(frozen=True)
class TorsionValue:
    """An exact torsion number ``rational + invpi / pi`` with provenance."""

    rational: Fraction
    invpi: Fraction = Fraction(0)
    provenance: str = ASSERTED
    note: str = ""

    def __post_init__(self):
        if self.provenance not in _STRENGTH:
            raise ValidationFailure(f"unknown provenance tag {self.provenance!r}")

    @property
    def value(self) -> float:
        out = float(self.rational)
        if self.invpi:
            out += float(self.invpi) / math.pi
        return out

    def is_rational(self) -> bool:
        return self.invpi == 0

    def scaled(self, factor: Fraction, provenance: str | None = None) -> "TorsionValue":
        return TorsionValue(
            self.rational * factor,
            self.invpi * factor,
            provenance or self.provenance,
            self.note,
        )

    def describe(self) -> str:
        if self.invpi == 0:
            body = str(self.rational)
        elif self.rational == 0:
            body = f"({self.invpi})/pi"
        else:
            body = f"{self.rational} + ({self.invpi})/pi"
        return f"{body} [{self.provenance}]"

    @staticmethod
    def closed_form(x, note: str = "") -> "TorsionValue":
        return TorsionValue(_as_fraction(x), Fraction(0), CLOSED_FORM, note)

    @staticmethod
    def asserted(x, note: str = "") -> "TorsionValue":
        return TorsionValue(_as_fraction(x), Fraction(0), ASSERTED, note)

    @staticmethod
    def approximated(x: float, note: str = "") -> "TorsionValue":
        return TorsionValue(Fraction(float(x)), Fraction(0), APPROXIMATED, note)

    @staticmethod
    def exact_abelian(x: float, note: str = "") -> "TorsionValue":
        return TorsionValue(Fraction(float(x)), Fraction(0), EXACT_ABELIAN, note)


def _sum_values(values: Sequence[TorsionValue], signs: Sequence[int], provenance_hint: str | None = None) -> TorsionValue:
    rational = Fraction(0)
    invpi = Fraction(0)
    for v, s in zip(values, signs):
        rational += s * v.rational
        invpi += s * v.invpi
    tag = _weakest(v.provenance for v in values)
    if provenance_hint is not None and _STRENGTH[provenance_hint] < _STRENGTH[tag]:
        tag = provenance_hint
    return TorsionValue(rational, invpi, tag)


def cell_sum(cells: Sequence[tuple[int, TorsionValue]]) -> TorsionValue:
    """Alternating sum over equivariant cells: sum of (-1)^dim * value."""
    values = [v for _, v in cells]
    signs = [(-1) ** int(dim) for dim, _ in cells]
    for dim, _ in cells:
        if dim < 0:
            raise ValidationFailure("cell dimension must be nonnegative")
    return _sum_values(values, signs)


def graph_of_groups(vertex_values: Sequence[TorsionValue], edge_values: Sequence[TorsionValue]) -> TorsionValue:
    """Sum over vertices minus sum over edges."""
    values = list(vertex_values) + list(edge_values)
    signs = [1] * len(vertex_values) + [-1] * len(edge_values)
    return _sum_values(values, signs)


def amalgam(g1: TorsionValue, g2: TorsionValue, g0: TorsionValue) -> TorsionValue:
    """Two vertices, one edge."""
    return graph_of_groups([g1, g2], [g0])


def product_rule(chi, v: TorsionValue) -> TorsionValue:
    """Scale by a rational Euler characteristic (cross with a finite complex)."""
    return v.scaled(_as_fraction(chi))


def restriction_rule(index: int, v: TorsionValue) -> TorsionValue:
    """Pass to a finite-index subgroup: multiply by the index."""
    if index < 1:
        raise ValidationFailure("restriction index must be positive")
    return v.scaled(Fraction(index))


def finite_quotient_rule(k: int, v: TorsionValue) -> TorsionValue:
    """Quotient by a finite normal subgroup of order k: divide by k."""
    if k < 1:
        raise ValidationFailure("finite-quotient order must be positive")
    return v.scaled(Fraction(1, k))


def power_rule(n: int, v: TorsionValue) -> TorsionValue:
    """Multiplicativity under taking powers of the automorphism."""
    if n < 1:
        raise ValidationFailure("power must be positive")
    return v.scaled(Fraction(n))


def scaling_rules(mode: str, v: TorsionValue, parameter) -> TorsionValue:
    if mode == "product":
        return product_rule(parameter, v)
    if mode == "restriction":
        return restriction_rule(int(parameter), v)
    if mode == "finite-quotient":
        return finite_quotient_rule(int(parameter), v)
    if mode == "power":
        return power_rule(int(parameter), v)
    raise ValidationFailure(f"unknown scaling mode {mode!r}")


INFINITE = "infinite"


@dataclass(frozen=True)
class OrbitCell:
    """An equivariant cell with its stabilizer order (or an infinite marker
    carrying the stabilizer's torsion value)."""

    dim: int
    order: int | None = 1
    value: TorsionValue | None = None

    def __post_init__(self):
        if self.dim < 0:
            raise ValidationFailure("cell dimension must be nonnegative")
        if self.order is not None and self.order < 1:
            raise ValidationFailure("finite stabilizer order must be >= 1")
        if self.order is None and self.value is None:
            raise ValidationFailure("infinite stabilizer requires an attached torsion value")


def orbifold_euler(cells: Sequence[OrbitCell]) -> Fraction:
    """Alternating sum of reciprocal stabilizer orders; exact rational."""
    total = Fraction(0)
    for cell in cells:
        if cell.order is None:
            raise ValidationFailure(
                "orbifold Euler characteristic is undefined with infinite stabilizers"
            )
        total += Fraction((-1) ** cell.dim, cell.order)
    return total


def surface_auto(volumes: Sequence) -> TorsionValue:
    """Closed form for mapping classes of hyperbolic surfaces:
    -(sum of hyperbolic piece volumes) / (6 pi); the empty list gives 0."""
    total = Fraction(0)
    for v in volumes:
        fv = _as_fraction(v)
        if fv < 0:
            raise ValidationFailure("volumes must be nonnegative")
        total += fv
    return TorsionValue(Fraction(0), -total / 6, CLOSED_FORM)


def jsj_auto(flexible_values: Sequence[TorsionValue]) -> TorsionValue:
    """Sum over flexible vertices only; rigid and polycyclic vertices
    contribute zero and are deliberately not representable as inputs."""
    return _sum_values(list(flexible_values), [1] * len(flexible_values), CLOSED_FORM)


@dataclass
class TraceEntry:
    path: str
    rule: str
    detail: str
    result: str


@dataclass
class Evaluation:
    value: TorsionValue
    trace: list[TraceEntry] = field(default_factory=list)

    def format_trace(self) -> str:
        lines = []
        for entry in self.trace:
            depth = entry.path.count("/")
            lines.append(f"{'  ' * depth}{entry.path or '.'}: {entry.rule} {entry.detail} -> {entry.result}")
        return "\n".join(lines)

    def trace_json(self) -> list[dict]:
        return [
            {"path": e.path, "rule": e.rule, "detail": e.detail, "result": e.result}
            for e in self.trace
        ]


def _node_error(path: str, message: str) -> ValidationFailure:
    return ValidationFailure(f"at node {path or '.'}: {message}")


def _require_keys(node: dict, path: str, *keys: str) -> None:
    for key in keys:
        if key not in node:
            raise _node_error(path, f"missing field {key!r}")


def evaluate_decomposition(node: dict) -> Evaluation:
    """Fold a decomposition tree bottom-up, recording one trace entry per rule."""
    trace: list[TraceEntry] = []

    def walk(node, path: str) -> TorsionValue:
        if not isinstance(node, dict):
            raise _node_error(path, f"expected an object, got {type(node).__name__}")
        if "leaf" in node:
            provenance = node.get("provenance", ASSERTED)
            value = TorsionValue(
                _as_fraction(node["leaf"]),
                _as_fraction(node.get("invpi", 0)),
                provenance,
                node.get("note", ""),
            )
            trace.append(TraceEntry(path, "leaf", node.get("note", ""), value.describe()))
            return value
        if "rule" not in node:
            raise _node_error(path, "node needs either 'leaf' or 'rule'")
        rule = node["rule"]
        if rule == "cell-sum":
            _require_keys(node, path, "cells")
            cells = []
            for i, cell in enumerate(node["cells"]):
                if not isinstance(cell, dict) or "dim" not in cell or "value" not in cell:
                    raise _node_error(f"{path}/cells[{i}]", "cell needs 'dim' and 'value'")
                cells.append((int(cell["dim"]), walk(cell["value"], f"{path}/cells[{i}]")))
            result = cell_sum(cells)
            detail = f"dims={[d for d, _ in cells]}"
        elif rule == "graph-of-groups":
            _require_keys(node, path, "vertices")
            vertices = [
                walk(child, f"{path}/vertices[{i}]")
                for i, child in enumerate(node.get("vertices", []))
            ]
            edges = [
                walk(child, f"{path}/edges[{i}]") for i, child in enumerate(node.get("edges", []))
            ]
            result = graph_of_groups(vertices, edges)
            detail = f"{len(vertices)} vertices, {len(edges)} edges"
        elif rule == "amalgam":
            _require_keys(node, path, "parts", "edge")
            parts = node["parts"]
            if len(parts) != 2:
                raise _node_error(path, "amalgam needs exactly two parts")
            g1 = walk(parts[0], f"{path}/parts[0]")
            g2 = walk(parts[1], f"{path}/parts[1]")
            g0 = walk(node["edge"], f"{path}/edge")
            result = amalgam(g1, g2, g0)
            detail = "two vertex groups over one edge group"
        elif rule == "product":
            _require_keys(node, path, "child")
            if "chi" in node:
                chi = _as_fraction(node["chi"])
                detail = f"chi={chi}"
            elif "chi_orbifold" in node:
                cells = [
                    OrbitCell(int(c["dim"]), int(c["order"]))
                    for c in node["chi_orbifold"]
                ]
                chi = orbifold_euler(cells)
                detail = f"chi_orb={chi} from {len(cells)} cells"
            else:
                raise _node_error(path, "product needs 'chi' or 'chi_orbifold'")
            result = product_rule(chi, walk(node["child"], f"{path}/child"))
        elif rule == "restriction":
            _require_keys(node, path, "index", "child")
            result = restriction_rule(int(node["index"]), walk(node["child"], f"{path}/child"))
            detail = f"index={node['index']}"
        elif rule == "finite-quotient":
            _require_keys(node, path, "k", "child")
            result = finite_quotient_rule(int(node["k"]), walk(node["child"], f"{path}/child"))
            detail = f"k={node['k']}"
        elif rule == "power":
            _require_keys(node, path, "n", "child")
            result = power_rule(int(node["n"]), walk(node["child"], f"{path}/child"))
            detail = f"n={node['n']}"
        elif rule == "surface-auto":
            _require_keys(node, path, "volumes")
            result = surface_auto([_as_fraction(v) for v in node["volumes"]])
            detail = f"{len(node['volumes'])} hyperbolic pieces"
        elif rule == "jsj-auto":
            flexible = [
                walk(child, f"{path}/flexible[{i}]")
                for i, child in enumerate(node.get("flexible", []))
            ]
            result = jsj_auto(flexible)
            annotations = []
            for key in ("rigid", "polycyclic"):
                names = node.get(key, [])
                if names:
                    annotations.append(f"{len(names)} {key} vertices contribute 0")
            detail = f"{len(flexible)} flexible vertices"
            if annotations:
                detail += "; " + "; ".join(annotations)
        else:
            raise _node_error(path, f"unknown rule {rule!r}")
        trace.append(TraceEntry(path, rule, detail, result.describe()))
        return result

    value = walk(node, "")
    return Evaluation(value=value, trace=trace)
