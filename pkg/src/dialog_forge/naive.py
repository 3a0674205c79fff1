"""Brute-force re-evaluation of serialized question programs.

This module deliberately shares no code with the dataflow interpreter: every
step is an exhaustive scan over raw object records (plain dicts), so the two
implementations can cross-check each other.  The dataset validator re-answers
every question through this path.
"""

from __future__ import annotations


class NaiveError(RuntimeError):
    """The program cannot be evaluated against these objects."""


def objects_from_scene(scene) -> list[dict]:
    """Flatten a Scene (or a scene payload dict) into raw object records."""
    out = []
    if isinstance(scene, dict):
        for record in scene["objects"]:
            out.append(
                {
                    "shape": record["shape"],
                    "color": record["color"],
                    "size": record["size"],
                    "material": record["material"],
                    "x": record["position3d"][0],
                    "y": record["position3d"][1],
                }
            )
        return out
    for obj in scene.objects:
        out.append(
            {
                "shape": obj.shape,
                "color": obj.color,
                "size": obj.size,
                "material": obj.material,
                "x": obj.position3d[0],
                "y": obj.position3d[1],
            }
        )
    return out


def _ahead(objects, anchor, relation):
    ax, ay = objects[anchor]["x"], objects[anchor]["y"]
    found = []
    for idx, obj in enumerate(objects):
        if idx == anchor:
            continue
        if relation == "right" and obj["x"] > ax:
            found.append((obj["x"] - ax, idx))
        elif relation == "left" and obj["x"] < ax:
            found.append((ax - obj["x"], idx))
        elif relation == "front" and obj["y"] > ay:
            found.append((obj["y"] - ay, idx))
        elif relation == "behind" and obj["y"] < ay:
            found.append((ay - obj["y"], idx))
    found.sort()
    return [idx for _, idx in found]


def _extreme_index(objects, which):
    if which == "right":
        return max(range(len(objects)), key=lambda i: objects[i]["x"])
    if which == "left":
        return min(range(len(objects)), key=lambda i: objects[i]["x"])
    if which == "fore":
        return max(range(len(objects)), key=lambda i: objects[i]["y"])
    if which == "rear":
        return min(range(len(objects)), key=lambda i: objects[i]["y"])
    if which == "center":
        cx = sum(o["x"] for o in objects) / len(objects)
        cy = sum(o["y"] for o in objects) / len(objects)
        return min(
            range(len(objects)),
            key=lambda i: ((objects[i]["x"] - cx) ** 2 + (objects[i]["y"] - cy) ** 2, i),
        )
    raise NaiveError(f"unknown extreme {which!r}")


def naive_eval(steps: list[dict], objects: list[dict]):
    """Evaluate serialized program steps by exhaustive scanning."""
    values = []
    for step in steps:
        kind = step["kind"]
        param = step.get("param")
        arg = step.get("arg")
        inputs = [values[ref] for ref in step.get("inputs", ())]
        current = inputs[0] if inputs else list(range(len(objects)))
        if kind == "Filter":
            if param in ("shape", "color", "size", "material"):
                result = [i for i in current if objects[i][param] == arg]
            elif param == "extreme":
                target = _extreme_index(objects, arg)
                result = [i for i in current if i == target]
            elif param == "exclude":
                dropped = {int(p) for p in arg.split(",") if p}
                result = [i for i in current if i not in dropped]
            elif param == "ids":
                wanted = {int(p) for p in arg.split(",") if p}
                missing = wanted - set(current)
                if missing:
                    raise NaiveError(f"ids {sorted(missing)} not present")
                result = [i for i in current if i in wanted]
            else:
                raise NaiveError(f"unknown Filter parameter {param!r}")
            values.append(result)
        elif kind == "Unique":
            attrs = [a for a in (param or "").split(",") if a]
            if not attrs:
                raise NaiveError("Unique without attributes")
            result = []
            for i in current:
                signature = tuple(objects[i][a] for a in attrs)
                matches = 0
                for j in current:
                    if tuple(objects[j][a] for a in attrs) == signature:
                        matches += 1
                if matches == 1:
                    result.append(i)
            values.append(result)
        elif kind == "Group":
            attrs = [a for a in (param or "").split(",") if a]
            if not attrs:
                raise NaiveError("Group without attributes")
            keys = sorted({tuple(objects[i][a] for a in attrs) for i in current})
            values.append(
                [
                    [i for i in current if tuple(objects[i][a] for a in attrs) == key]
                    for key in keys
                ]
            )
        elif kind == "Relate":
            if len(current) != 1:
                raise NaiveError(f"Relate over {len(current)} objects")
            anchor = current[0]
            if param in (None, "relation"):
                ahead = _ahead(objects, anchor, arg)
                values.append(ahead[:1])
            elif param == "all":
                values.append(_ahead(objects, anchor, arg))
            elif param == "same":
                values.append(
                    [
                        i
                        for i in range(len(objects))
                        if i != anchor and objects[i][arg] == objects[anchor][arg]
                    ]
                )
            else:
                raise NaiveError(f"unknown Relate mode {param!r}")
        elif kind == "Count":
            values.append(len(current))
        elif kind == "Exist":
            values.append(bool(current))
        elif kind == "Sample":
            if param != "attribute" or arg is None:
                raise NaiveError("only deterministic attribute reads are supported")
            if not current:
                values.append("none")
            elif len(current) > 1:
                raise NaiveError("attribute read over several objects")
            else:
                values.append(objects[current[0]][arg])
        else:
            raise NaiveError(f"unknown primitive {kind!r}")
    return values[-1]


def naive_answer(steps: list[dict], objects: list[dict]) -> str:
    """Answer token for a serialized question program."""
    value = naive_eval(steps, objects)
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return value
    raise NaiveError(f"program terminated in a {type(value).__name__}, not an answer")
