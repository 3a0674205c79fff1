import random

import pytest

from dialog_forge.scenes import Object, Scene, synthesize_scene


def make_object(index, shape, color, size, material, x, y):
    z = 0.7 if size == "large" else 0.35
    return Object(
        index=index, shape=shape, color=color, size=size, material=material,
        position3d=(x, y, z),
    )


@pytest.fixture
def figure_scene():
    """Three objects arranged so the green cylinder is the immediate front
    neighbor of the (unique) gray cylinder."""
    return Scene(
        "figure",
        (
            make_object(0, "cylinder", "gray", "large", "metal", 0.0, 0.0),
            make_object(1, "cylinder", "green", "small", "rubber", 0.5, 1.0),
            make_object(2, "cube", "red", "large", "rubber", -2.0, -1.5),
        ),
    )


@pytest.fixture
def six_scene():
    rng = random.Random(123)
    return synthesize_scene(rng, 6, 6, "six")


def random_scene(seed, lo=3, hi=10, name=None):
    rng = random.Random(seed)
    return synthesize_scene(rng, lo, hi, name or f"rand-{seed}")
