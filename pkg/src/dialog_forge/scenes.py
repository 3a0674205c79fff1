"""Scene graphs: typed objects plus ground-plane spatial relations.

Every object carries four categorical attributes and a 3d position.
Spatial relations live on the ground plane: ``left``/``right`` order objects
along the x axis and ``front``/``behind`` along the depth axis y, where
larger y means closer to the viewer.  The height coordinate z never takes
part in relations.  Relations are read in the immediate sense: the neighbor
"to the right" of an object is the nearest object along +x.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

SHAPES = ("cube", "cylinder", "sphere")
COLORS = ("blue", "brown", "cyan", "gray", "green", "purple", "red", "yellow")
SIZES = ("large", "small")
MATERIALS = ("metal", "rubber")

# Canonical adjective order for noun phrases: size color material shape.
ATTRIBUTES = ("size", "color", "material", "shape")
ATTRIBUTE_VALUES = {
    "shape": SHAPES,
    "color": COLORS,
    "size": SIZES,
    "material": MATERIALS,
}

RELATIONS = ("left", "right", "front", "behind")
OPPOSITE = {"left": "right", "right": "left", "front": "behind", "behind": "front"}
EXTREMES = ("right", "left", "fore", "rear", "center")

# (axis index into (x, y), direction sign) per relation.
_AXIS = {"left": (0, -1.0), "right": (0, 1.0), "front": (1, 1.0), "behind": (1, -1.0)}

GROUND_MIN, GROUND_MAX = -3.0, 3.0
MIN_SEPARATION = 0.1
PLACEMENT_RETRIES = 50
_HEIGHT = {"large": 0.7, "small": 0.35}

IMAGE_WIDTH = 480
IMAGE_HEIGHT = 320


class SceneValidationError(ValueError):
    """A scene record violates the schema or the attribute enumerations."""


class SceneLoadError(IOError):
    """The scenes file is missing or not parseable as scene JSON."""


class SceneGenerationError(RuntimeError):
    """Random placement could not satisfy the separation constraint."""


@dataclass(frozen=True)
class Object:
    index: int
    shape: str
    color: str
    size: str
    material: str
    position3d: tuple[float, float, float]
    position2d: tuple[float, float] | None = None

    def attribute(self, name: str) -> str:
        return getattr(self, name)


def project_to_pixels(position3d) -> tuple[float, float]:
    """Fixed linear projection of ground coordinates onto image pixels.

    Objects closer to the viewer (larger y) land lower in the image.
    """
    x, y = position3d[0], position3d[1]
    px = (x + 4.0) / 8.0 * IMAGE_WIDTH
    py = (y + 4.0) / 8.0 * IMAGE_HEIGHT
    return (px, py)


class Scene:
    """Immutable scene graph with precomputed relation tables.

    ``relation_index[rel][i]`` lists the other objects in that direction from
    object ``i``, nearest first.  Derived lookups (attribute bitmasks,
    immediate neighbors) are computed once here so that answering programs
    over the scene stays cheap.
    """

    __slots__ = (
        "scene_id",
        "objects",
        "relation_index",
        "_immediate",
        "_attr_mask",
        "_dir_mask",
        "all_mask",
    )

    def __init__(self, scene_id: str, objects: tuple[Object, ...]):
        if not objects:
            raise SceneValidationError(f"scene {scene_id!r}: no objects")
        for pos, obj in enumerate(objects):
            if obj.index != pos:
                raise SceneValidationError(
                    f"scene {scene_id!r}: object ids must be contiguous from 0"
                )
            for attr in ATTRIBUTES:
                value = obj.attribute(attr)
                if value not in ATTRIBUTE_VALUES[attr]:
                    raise SceneValidationError(
                        f"scene {scene_id!r}, object {pos}: {attr} {value!r} "
                        f"is not one of {ATTRIBUTE_VALUES[attr]}"
                    )
        for axis in (0, 1):
            seen: dict[float, int] = {}
            for obj in objects:
                coord = obj.position3d[axis]
                if coord in seen:
                    raise SceneValidationError(
                        f"scene {scene_id!r}: objects {seen[coord]} and {obj.index} "
                        f"share coordinate {coord} on axis {axis}; orderings must be strict"
                    )
                seen[coord] = obj.index
        self.scene_id = scene_id
        self.objects = objects
        index: dict[str, tuple[tuple[int, ...], ...]] = {}
        immediate: dict[tuple[str, int], int | None] = {}
        dir_mask: dict[tuple[str, int], int] = {}
        for rel in RELATIONS:
            axis, sign = _AXIS[rel]
            per_object = []
            for obj in objects:
                base = obj.position3d[axis]
                ahead = [
                    (sign * (other.position3d[axis] - base), other.index)
                    for other in objects
                    if other.index != obj.index
                    and sign * (other.position3d[axis] - base) > 0
                ]
                ahead.sort()
                ordered = tuple(idx for _, idx in ahead)
                per_object.append(ordered)
                immediate[(rel, obj.index)] = ordered[0] if ordered else None
                mask = 0
                for idx in ordered:
                    mask |= 1 << idx
                dir_mask[(rel, obj.index)] = mask
            index[rel] = tuple(per_object)
        self.relation_index = index
        self._immediate = immediate
        self._dir_mask = dir_mask
        attr_mask: dict[tuple[str, str], int] = {}
        for attr in ATTRIBUTES:
            for value in ATTRIBUTE_VALUES[attr]:
                attr_mask[(attr, value)] = 0
        for obj in objects:
            for attr in ATTRIBUTES:
                attr_mask[(attr, obj.attribute(attr))] |= 1 << obj.index
        self._attr_mask = attr_mask
        self.all_mask = (1 << len(objects)) - 1

    def __len__(self) -> int:
        return len(self.objects)

    def attribute_mask(self, attr: str, value: str) -> int:
        return self._attr_mask[(attr, value)]

    def direction_mask(self, relation: str, obj: int) -> int:
        return self._dir_mask[(relation, obj)]

    def conjunction_ids(self, conj: dict[str, str]) -> tuple[int, ...]:
        """Objects matching every attribute constraint, in id order."""
        mask = self.all_mask
        for attr, value in conj.items():
            mask &= self._attr_mask[(attr, value)]
        return mask_to_ids(mask)


def mask_to_ids(mask: int) -> tuple[int, ...]:
    ids = []
    idx = 0
    while mask:
        if mask & 1:
            ids.append(idx)
        mask >>= 1
        idx += 1
    return tuple(ids)


def immediate_neighbor(scene: Scene, obj: int, relation: str) -> int | None:
    """Nearest object from ``obj`` along the relation's direction, if any."""
    if not 0 <= obj < len(scene.objects):
        raise ValueError(f"object {obj} not in scene {scene.scene_id!r}")
    if relation not in RELATIONS:
        raise ValueError(f"unknown relation {relation!r}")
    return scene._immediate[(relation, obj)]


def extreme_object(scene: Scene, extreme: str) -> int:
    """Object at a positional extreme; ``center`` is nearest the centroid."""
    if extreme not in EXTREMES:
        raise ValueError(f"unknown extreme {extreme!r}")
    objs = scene.objects
    if extreme == "right":
        return max(objs, key=lambda o: o.position3d[0]).index
    if extreme == "left":
        return min(objs, key=lambda o: o.position3d[0]).index
    if extreme == "fore":
        return max(objs, key=lambda o: o.position3d[1]).index
    if extreme == "rear":
        return min(objs, key=lambda o: o.position3d[1]).index
    cx = sum(o.position3d[0] for o in objs) / len(objs)
    cy = sum(o.position3d[1] for o in objs) / len(objs)
    return min(
        objs,
        key=lambda o: ((o.position3d[0] - cx) ** 2 + (o.position3d[1] - cy) ** 2, o.index),
    ).index


def _object_from_record(scene_id: str, pos: int, record: dict) -> Object:
    try:
        coords = record["3d_coords"]
        shape, color = record["shape"], record["color"]
        size, material = record["size"], record["material"]
    except (KeyError, TypeError) as exc:
        raise SceneValidationError(
            f"scene {scene_id!r}, object {pos}: missing field {exc}"
        ) from exc
    if not isinstance(coords, (list, tuple)) or len(coords) != 3:
        raise SceneValidationError(
            f"scene {scene_id!r}, object {pos}: 3d_coords must have three numbers"
        )
    pixel = record.get("pixel_coords")
    position2d = None
    if pixel is not None:
        if not isinstance(pixel, (list, tuple)) or len(pixel) < 2:
            raise SceneValidationError(
                f"scene {scene_id!r}, object {pos}: pixel_coords must have two numbers"
            )
        position2d = (float(pixel[0]), float(pixel[1]))
    return Object(
        index=pos,
        shape=shape,
        color=color,
        size=size,
        material=material,
        position3d=(float(coords[0]), float(coords[1]), float(coords[2])),
        position2d=position2d,
    )


def load_scenes(path) -> list[Scene]:
    """Load scenes from a CLEVR-format JSON file.

    Any relation lists present in the file are ignored; relations are
    recomputed from the 3d positions.
    """
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise SceneLoadError(f"cannot read scenes file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SceneLoadError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "scenes" not in data:
        raise SceneLoadError(f"{path}: expected a top-level object with a 'scenes' list")
    scenes = []
    seen_ids = set()
    for n, record in enumerate(data["scenes"]):
        if not isinstance(record, dict) or "objects" not in record:
            raise SceneLoadError(f"{path}: scene record {n} has no 'objects' list")
        image_index = record.get("image_index", n)
        scene_id = f"{int(image_index):06d}"
        if scene_id in seen_ids:
            raise SceneValidationError(f"{path}: duplicate image_index {image_index}")
        seen_ids.add(scene_id)
        objects = tuple(
            _object_from_record(scene_id, pos, obj_record)
            for pos, obj_record in enumerate(record["objects"])
        )
        scenes.append(Scene(scene_id, objects))
    return scenes


def synthesize_scene(
    rng: random.Random,
    min_objects: int,
    max_objects: int,
    scene_id: str = "synthetic",
) -> Scene:
    """Sample a scene: uniform attributes, separated ground positions.

    Pure function of the rng state; rerunning with an equally seeded rng
    yields an identical scene.
    """
    if not 1 <= min_objects <= max_objects:
        raise ValueError("need 1 <= min_objects <= max_objects")
    count = rng.randint(min_objects, max_objects)
    objects = []
    positions: list[tuple[float, float]] = []
    for idx in range(count):
        placed = False
        for _ in range(PLACEMENT_RETRIES):
            x = rng.uniform(GROUND_MIN, GROUND_MAX)
            y = rng.uniform(GROUND_MIN, GROUND_MAX)
            if all(
                abs(x - px) >= MIN_SEPARATION and abs(y - py) >= MIN_SEPARATION
                for px, py in positions
            ):
                placed = True
                break
        if not placed:
            raise SceneGenerationError(
                f"scene {scene_id!r}: no separated position for object {idx} "
                f"after {PLACEMENT_RETRIES} retries"
            )
        positions.append((x, y))
        size = rng.choice(SIZES)
        pos3d = (x, y, _HEIGHT[size])
        objects.append(
            Object(
                index=idx,
                shape=rng.choice(SHAPES),
                color=rng.choice(COLORS),
                size=size,
                material=rng.choice(MATERIALS),
                position3d=pos3d,
                position2d=project_to_pixels(pos3d),
            )
        )
    return Scene(scene_id, tuple(objects))
