"""On-disk formats and deterministic report assembly.

Presentations are plain text in the documented grammar; towers, complexes,
automorphisms, decomposition specs, and Laurent polynomials are JSON.
Reports are emitted through one writer so that identical configurations
produce identical bytes; every report starts with a header embedding the
tool version and a hash of the resolved configuration.
"""

from __future__ import annotations

import hashlib
import json
import re
from fractions import Fraction
from pathlib import Path

from .abelian import LaurentPoly
from .complexes import ChainComplex
from .errors import ValidationFailure
from .presentation import AutomorphismSpec, GroupPresentation, parse_presentation, parse_word
from .ring import RingMatrix, parse_ring_element
from .towers import QuotientLevel, QuotientTower

TOOL_VERSION = "0.1.0"


def _load_json(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ValidationFailure(f"{path}: top-level JSON value must be an object")
    return data


def load_presentation(path: str | Path) -> GroupPresentation:
    return parse_presentation(Path(path).read_text())


def _presentation_from_field(value, base: Path) -> GroupPresentation:
    if isinstance(value, str):
        return parse_presentation(value)
    if isinstance(value, dict) and "file" in value:
        return load_presentation(base / value["file"])
    raise ValidationFailure("presentation field must be inline text or {'file': path}")


_CYCLE_RE = re.compile(r"\(([^()]*)\)")


def parse_permutation(value, degree: int) -> tuple[int, ...]:
    """Image notation (a list) or one-line cycle notation (a string)."""
    if isinstance(value, list):
        perm = tuple(int(v) for v in value)
        if sorted(perm) != list(range(degree)):
            raise ValidationFailure(f"not a permutation of 0..{degree - 1}: {value}")
        return perm
    if isinstance(value, str):
        images = list(range(degree))
        text = value.strip()
        if text in ("", "()", "id"):
            return tuple(images)
        if not _CYCLE_RE.search(text) or _CYCLE_RE.sub("", text).strip():
            raise ValidationFailure(f"malformed cycle notation: {value!r}")
        for cycle_text in _CYCLE_RE.findall(text):
            points = [int(tok) for tok in cycle_text.replace(",", " ").split()]
            if len(points) != len(set(points)):
                raise ValidationFailure(f"repeated point in cycle {cycle_text!r}")
            for a, b in zip(points, points[1:] + points[:1]):
                if not 0 <= a < degree:
                    raise ValidationFailure(f"cycle point {a} out of range 0..{degree - 1}")
                images[a] = b
        perm = tuple(images)
        if sorted(perm) != list(range(degree)):
            raise ValidationFailure(f"cycles do not define a permutation: {value!r}")
        return perm
    raise ValidationFailure("permutation must be an image list or a cycle string")


def load_tower(path: str | Path, presentation: GroupPresentation) -> QuotientTower:
    data = _load_json(path)
    if "levels" not in data:
        raise ValidationFailure(f"{path}: missing 'levels'")
    levels = []
    for i, item in enumerate(data["levels"]):
        if "degree" not in item or "images" not in item:
            raise ValidationFailure(f"{path}: level {i} needs 'degree' and 'images'")
        degree = int(item["degree"])
        images = []
        for name in presentation.generators:
            if name not in item["images"]:
                raise ValidationFailure(f"{path}: level {i} has no image for generator {name!r}")
            images.append(parse_permutation(item["images"][name], degree))
        extra = set(item["images"]) - set(presentation.generators)
        if extra:
            raise ValidationFailure(f"{path}: level {i} names undeclared generators {sorted(extra)}")
        levels.append(
            QuotientLevel(degree=degree, images=tuple(images), label=int(item.get("label", degree)))
        )
    connecting = None
    if "connecting_maps" in data:
        connecting = []
        for i, assignment in enumerate(data["connecting_maps"]):
            words = []
            for name in presentation.generators:
                if name not in assignment:
                    raise ValidationFailure(
                        f"{path}: connecting map {i} has no word for generator {name!r}"
                    )
                words.append(parse_word(assignment[name], presentation))
            connecting.append(tuple(words))
        connecting = tuple(connecting)
    return QuotientTower(tuple(levels), connecting)


def _load_sparse_matrix(
    entry_list, rows: int, cols: int, presentation: GroupPresentation, where: str
) -> RingMatrix:
    entries = {}
    for item in entry_list:
        if len(item) != 3:
            raise ValidationFailure(f"{where}: entries must be [row, col, literal]")
        r, c, literal = int(item[0]), int(item[1]), item[2]
        entries[(r, c)] = parse_ring_element(literal, presentation)
    return RingMatrix(rows, cols, entries)


def load_complex(path: str | Path) -> ChainComplex:
    data = _load_json(path)
    base = Path(path).parent
    for key in ("presentation", "ranks"):
        if key not in data:
            raise ValidationFailure(f"{path}: missing {key!r}")
    presentation = _presentation_from_field(data["presentation"], base)
    ranks = tuple(int(r) for r in data["ranks"])
    boundaries: dict[int, RingMatrix] = {}
    for item in data.get("boundaries", []):
        if "degree" not in item:
            raise ValidationFailure(f"{path}: boundary block needs 'degree'")
        n = int(item["degree"])
        if not 1 <= n < len(ranks):
            raise ValidationFailure(f"{path}: boundary degree {n} out of range")
        boundaries[n] = _load_sparse_matrix(
            item.get("entries", []), ranks[n - 1], ranks[n], presentation, f"{path} degree {n}"
        )
    ordered = tuple(
        boundaries.get(n, RingMatrix.zeros(ranks[n - 1], ranks[n]))
        for n in range(1, len(ranks))
    )
    stabilizers = None
    if "stabilizer_orders" in data:
        stabilizers = tuple(tuple(int(o) for o in orders) for orders in data["stabilizer_orders"])
    return ChainComplex(presentation, ranks, ordered, stabilizers)


def load_automorphism(
    path: str | Path, presentation: GroupPresentation, ranks: tuple[int, ...] | None = None
) -> tuple[AutomorphismSpec, tuple[RingMatrix, ...] | None]:
    """Returns the automorphism and, when present, the chain-map matrices."""
    data = _load_json(path)
    if "images" not in data:
        raise ValidationFailure(f"{path}: missing 'images'")
    images = []
    for name in presentation.generators:
        if name not in data["images"]:
            raise ValidationFailure(f"{path}: no image for generator {name!r}")
        images.append(parse_word(data["images"][name], presentation))
    order = data.get("order")
    spec = AutomorphismSpec(tuple(images), None if order is None else int(order))
    chain_map = None
    if "chain_map" in data:
        if ranks is None:
            raise ValidationFailure(f"{path}: chain map supplied but no complex ranks known")
        blocks: dict[int, RingMatrix] = {}
        for item in data["chain_map"]:
            n = int(item["degree"])
            if not 0 <= n < len(ranks):
                raise ValidationFailure(f"{path}: chain-map degree {n} out of range")
            blocks[n] = _load_sparse_matrix(
                item.get("entries", []), ranks[n], ranks[n], presentation, f"{path} chain map {n}"
            )
        chain_map = tuple(
            blocks.get(n, RingMatrix.identity(ranks[n])) for n in range(len(ranks))
        )
    return spec, chain_map


def load_decomposition(path: str | Path) -> dict:
    return _load_json(path)


def load_laurent(path: str | Path) -> LaurentPoly:
    """Either an element literal over an abelian presentation, or raw terms."""
    data = _load_json(path)
    if "element" in data:
        presentation = _presentation_from_field(
            data.get("presentation", "gens x; rels ;"), Path(path).parent
        )
        from .abelian import require_abelian, word_exponent

        require_abelian(presentation)
        element = parse_ring_element(data["element"], presentation)
        terms: dict[tuple[int, ...], Fraction] = {}
        for word, coeff in element.terms.items():
            key = word_exponent(word, presentation.rank)
            terms[key] = terms.get(key, Fraction(0)) + coeff
        return LaurentPoly(presentation.rank, terms)
    if "terms" in data:
        nvars = int(data.get("vars", 1))
        terms = {}
        for exps, coeff in data["terms"]:
            key = tuple(int(e) for e in exps)
            terms[key] = terms.get(key, Fraction(0)) + Fraction(str(coeff))
        return LaurentPoly(nvars, terms)
    raise ValidationFailure(f"{path}: need 'element' or 'terms'")


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def report_header(command: str, config: dict) -> list[str]:
    return [
        f"# tool: l2torsion {TOOL_VERSION}",
        f"# command: {command}",
        f"# config-hash: {config_hash(config)}",
    ]


def render_report(header: list[str], body: list[str]) -> str:
    return "\n".join(header + body) + "\n"


def fmt_float(x: float) -> str:
    return f"{x:.12e}"
