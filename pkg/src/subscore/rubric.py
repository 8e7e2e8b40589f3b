"""Writing skills tree: traits decomposed into subtraits with per-scorepoint rubrics.

Trees are loaded from a JSON document, validated, and then treated as
immutable; they are safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass


class RubricError(ValueError):
    """A rubric document that cannot be loaded. ``path`` names the offending node."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Violation:
    """One invariant breach found by :func:`validate_tree`."""

    path: str
    rule: str
    message: str


@dataclass(frozen=True)
class ScoreScale:
    """Inclusive integer scorepoint range, e.g. 0..3 for a four-level rubric."""

    min: int
    max: int

    @property
    def size(self) -> int:
        return self.max - self.min + 1

    def points(self) -> range:
        return range(self.min, self.max + 1)

    def contains(self, value: int) -> bool:
        return isinstance(value, int) and not isinstance(value, bool) and self.min <= value <= self.max

    def label(self) -> str:
        return f"{self.min}..{self.max}"


DEFAULT_SCALE = ScoreScale(0, 3)


@dataclass(frozen=True)
class SubtraitDef:
    id: str
    name: str
    description: str
    scale: ScoreScale
    rubric: tuple[str, ...]          # one descriptor per scorepoint, lowest first
    standards: tuple[str, ...] = ()  # opaque tags, carried but never interpreted

    def descriptor(self, scorepoint: int) -> str:
        if not self.scale.contains(scorepoint):
            raise ValueError(f"scorepoint {scorepoint} outside scale {self.scale.label()}")
        return self.rubric[scorepoint - self.scale.min]


@dataclass(frozen=True)
class TraitDef:
    id: str
    name: str
    subtraits: tuple[SubtraitDef, ...]
    scale: ScoreScale = DEFAULT_SCALE

    def subtrait(self, subtrait_id: str) -> SubtraitDef:
        for sub in self.subtraits:
            if sub.id == subtrait_id:
                return sub
        raise KeyError(subtrait_id)


@dataclass(frozen=True)
class SkillTree:
    version: str
    traits: tuple[TraitDef, ...]

    def trait(self, trait_id: str) -> TraitDef:
        for trait in self.traits:
            if trait.id == trait_id:
                return trait
        raise KeyError(trait_id)

    def trait_ids(self) -> tuple[str, ...]:
        return tuple(t.id for t in self.traits)

    def subtraits(self) -> tuple[SubtraitDef, ...]:
        return tuple(s for t in self.traits for s in t.subtraits)

    def subtrait_pairs(self) -> tuple[tuple[TraitDef, SubtraitDef], ...]:
        return tuple((t, s) for t in self.traits for s in t.subtraits)

    def subtrait_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.subtraits())

    def subtrait(self, subtrait_id: str) -> SubtraitDef:
        for trait in self.traits:
            for sub in trait.subtraits:
                if sub.id == subtrait_id:
                    return sub
        raise KeyError(subtrait_id)

    def trait_of(self, subtrait_id: str) -> TraitDef:
        for trait in self.traits:
            for sub in trait.subtraits:
                if sub.id == subtrait_id:
                    return trait
        raise KeyError(subtrait_id)


_TREE_KEYS = {"version", "traits"}
_TRAIT_KEYS = {"id", "name", "subtraits", "scale"}
_SUBTRAIT_KEYS = {"id", "name", "description", "scale", "rubric", "standards"}
_SCALE_KEYS = {"min", "max"}


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise RubricError(path, f"missing required key '{key}'")
    return obj[key]


def _check_keys(obj: dict, allowed: set[str], path: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise RubricError(path, f"unknown keys {unknown}")


def _parse_str(value, path: str, allow_empty: bool = False) -> str:
    if not isinstance(value, str):
        raise RubricError(path, f"expected string, got {type(value).__name__}")
    if not allow_empty and not value.strip():
        raise RubricError(path, "must be a non-empty string")
    return value


def _parse_scale(value, path: str) -> ScoreScale:
    if value is None:
        return DEFAULT_SCALE
    if not isinstance(value, dict):
        raise RubricError(path, "scale must be an object with 'min' and 'max'")
    _check_keys(value, _SCALE_KEYS, path)
    lo = _require(value, "min", path)
    hi = _require(value, "max", path)
    for name, v in (("min", lo), ("max", hi)):
        if not isinstance(v, int) or isinstance(v, bool):
            raise RubricError(f"{path}.{name}", "scorepoint bounds must be integers")
    if lo >= hi:
        raise RubricError(path, f"scale min must be below max, got {lo}..{hi}")
    return ScoreScale(lo, hi)


def _parse_subtrait(obj, path: str) -> SubtraitDef:
    if not isinstance(obj, dict):
        raise RubricError(path, "subtrait must be an object")
    _check_keys(obj, _SUBTRAIT_KEYS, path)
    sid = _parse_str(_require(obj, "id", path), f"{path}.id")
    scale = _parse_scale(obj.get("scale"), f"{path}.scale")
    rubric = _require(obj, "rubric", path)
    if not isinstance(rubric, list) or not all(isinstance(d, str) for d in rubric):
        raise RubricError(f"{path}.rubric", "rubric must be a list of descriptor strings")
    if len(rubric) != scale.size:
        raise RubricError(
            f"{path}.rubric",
            f"subtrait '{sid}' has {len(rubric)} descriptors but scale "
            f"{scale.label()} requires {scale.size}",
        )
    for i, descriptor in enumerate(rubric):
        if not descriptor.strip():
            raise RubricError(f"{path}.rubric[{i}]", f"subtrait '{sid}' has an empty descriptor at scorepoint {scale.min + i}")
    standards = obj.get("standards", [])
    if not isinstance(standards, list) or not all(isinstance(t, str) for t in standards):
        raise RubricError(f"{path}.standards", "standards must be a list of tag strings")
    return SubtraitDef(
        id=sid,
        name=_parse_str(_require(obj, "name", path), f"{path}.name"),
        description=_parse_str(_require(obj, "description", path), f"{path}.description"),
        scale=scale,
        rubric=tuple(rubric),
        standards=tuple(standards),
    )


def _parse_trait(obj, path: str) -> TraitDef:
    if not isinstance(obj, dict):
        raise RubricError(path, "trait must be an object")
    _check_keys(obj, _TRAIT_KEYS, path)
    tid = _parse_str(_require(obj, "id", path), f"{path}.id")
    subs_doc = _require(obj, "subtraits", path)
    if not isinstance(subs_doc, list):
        raise RubricError(f"{path}.subtraits", "subtraits must be a list")
    if not subs_doc:
        raise RubricError(f"{path}.subtraits", f"trait '{tid}' has no subtraits")
    subtraits = tuple(
        _parse_subtrait(sub, f"{path}.subtraits[{i}]") for i, sub in enumerate(subs_doc)
    )
    seen: set[str] = set()
    for i, sub in enumerate(subtraits):
        if sub.id in seen:
            raise RubricError(f"{path}.subtraits[{i}]", f"duplicate subtrait id '{sub.id}' in trait '{tid}'")
        seen.add(sub.id)
    return TraitDef(
        id=tid,
        name=_parse_str(_require(obj, "name", path), f"{path}.name"),
        subtraits=subtraits,
        scale=_parse_scale(obj.get("scale"), f"{path}.scale"),
    )


def load_skill_tree(document: bytes | str) -> SkillTree:
    """Parse and validate a rubric document; ordering is preserved from the document.

    Raises :class:`RubricError` naming the offending path on any schema or
    invariant failure. A tree returned from here always passes
    :func:`validate_tree` cleanly.
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise RubricError("", f"document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RubricError("", "document root must be an object")
    _check_keys(doc, _TREE_KEYS, "")
    version = _parse_str(_require(doc, "version", ""), "version")
    traits_doc = _require(doc, "traits", "")
    if not isinstance(traits_doc, list):
        raise RubricError("traits", "traits must be a list")
    if not traits_doc:
        raise RubricError("traits", "no traits")
    traits = tuple(_parse_trait(t, f"traits[{i}]") for i, t in enumerate(traits_doc))
    seen: set[str] = set()
    for i, trait in enumerate(traits):
        if trait.id in seen:
            raise RubricError(f"traits[{i}]", f"duplicate trait id '{trait.id}'")
        seen.add(trait.id)
    tree = SkillTree(version=version, traits=traits)
    violations = validate_tree(tree)
    if violations:
        first = violations[0]
        raise RubricError(first.path, f"[{first.rule}] {first.message}")
    return tree


def dump_skill_tree(tree: SkillTree) -> str:
    """Serialize to the canonical document form. load(dump(t)) reconstructs t."""
    doc = {
        "version": tree.version,
        "traits": [
            {
                "id": t.id,
                "name": t.name,
                "scale": {"min": t.scale.min, "max": t.scale.max},
                "subtraits": [
                    {
                        "id": s.id,
                        "name": s.name,
                        "description": s.description,
                        "scale": {"min": s.scale.min, "max": s.scale.max},
                        "rubric": list(s.rubric),
                        "standards": list(s.standards),
                    }
                    for s in t.subtraits
                ],
            }
            for t in tree.traits
        ],
    }
    return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"


def validate_tree(tree: SkillTree) -> list[Violation]:
    """Check every tree invariant; violations are data, not failures.

    Returns an empty list iff the tree is well formed. Each violation names
    the trait/subtrait path and the rule that was broken.
    """
    out: list[Violation] = []
    if not tree.traits:
        out.append(Violation("", "no-traits", "tree has no traits"))
    seen_traits: set[str] = set()
    for trait in tree.traits:
        path = trait.id
        if not trait.id.strip():
            out.append(Violation(path, "empty-id", "trait id is empty"))
        if trait.id in seen_traits:
            out.append(Violation(path, "duplicate-trait-id", f"trait id '{trait.id}' appears more than once"))
        seen_traits.add(trait.id)
        if trait.scale.min >= trait.scale.max:
            out.append(Violation(path, "invalid-scale", f"trait scale {trait.scale.label()} is not ascending"))
        if not trait.subtraits:
            out.append(Violation(path, "no-subtraits", f"trait '{trait.id}' has no subtraits"))
        seen_subs: set[str] = set()
        for sub in trait.subtraits:
            spath = f"{trait.id}/{sub.id}"
            if not sub.id.strip():
                out.append(Violation(spath, "empty-id", "subtrait id is empty"))
            if sub.id in seen_subs:
                out.append(Violation(spath, "duplicate-subtrait-id", f"subtrait id '{sub.id}' appears more than once in trait '{trait.id}'"))
            seen_subs.add(sub.id)
            if sub.scale.min >= sub.scale.max:
                out.append(Violation(spath, "invalid-scale", f"subtrait scale {sub.scale.label()} is not ascending"))
                continue
            if len(sub.rubric) != sub.scale.size:
                out.append(
                    Violation(
                        spath,
                        "rubric-arity",
                        f"subtrait '{sub.id}' has {len(sub.rubric)} descriptors but scale "
                        f"{sub.scale.label()} requires {sub.scale.size}",
                    )
                )
            for i, descriptor in enumerate(sub.rubric):
                if not descriptor.strip():
                    out.append(
                        Violation(
                            spath,
                            "empty-descriptor",
                            f"empty descriptor at scorepoint {sub.scale.min + i} of subtrait '{sub.id}'",
                        )
                    )
    return out
