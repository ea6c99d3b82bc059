"""Single registry and dispatcher over every corruption kind.

Downstream code (pipeline, CLI, reports) addresses corruptions by name
only; this module owns the name -> kernel mapping so the three kernel
families stay interchangeable behind one call.
"""

from __future__ import annotations

from .core import PointCloud, RandomStream
from .objects import (
    CorruptedFrame,
    CorruptionSpec,
    LABEL_MUTATING,
    OBJECT_KINDS,
    corrupt_objects,
)
from .scene import SCENE_KERNELS
from .weather import WEATHER_KERNELS

#: Whole-scene geometric corruptions, in catalog order.
SCENE_KINDS = (
    "uniform_rad", "gaussian_rad", "impulse_rad", "background", "upsample",
    "cutout", "local_dec", "local_inc", "beam_del", "layer_del",
)

#: Atmospheric corruptions.
WEATHER_KINDS = ("fog", "rain", "snow")

#: Every corruption kind the toolkit can synthesize.
ALL_KINDS = SCENE_KINDS + WEATHER_KINDS + OBJECT_KINDS


def kind_module(kind: str) -> str:
    """Which kernel family owns a kind: 'scene', 'weather', or 'object'."""
    if kind in SCENE_KERNELS:
        return "scene"
    if kind in WEATHER_KERNELS:
        return "weather"
    if kind in OBJECT_KINDS:
        return "object"
    raise ValueError(f"unknown corruption kind {kind!r}; valid kinds: {ALL_KINDS}")


def apply_corruption(cloud: PointCloud, boxes, kind: str, severity: int,
                     stream: RandomStream, classes=None, counters=None,
                     n_layers=None) -> CorruptedFrame:
    """Apply any corruption kind to one frame.

    `classes` restricts object-level kinds to the given class labels and
    is ignored by scene and weather kinds, which have no object notion.
    `n_layers` overrides the sensor layer count for layer deletion only.
    Returns a CorruptedFrame; boxes pass through unchanged except for the
    label-mutating object kinds.
    """
    family = kind_module(kind)
    if family == "object":
        return corrupt_objects(cloud, boxes, kind, severity, stream,
                               classes=classes, counters=counters)
    if counters is None:
        counters = {}
    if family == "scene":
        if kind == "layer_del" and n_layers is not None:
            out = SCENE_KERNELS[kind](cloud, severity, stream,
                                      n_layers=n_layers, counters=counters)
        else:
            out = SCENE_KERNELS[kind](cloud, severity, stream, counters=counters)
    else:
        out = WEATHER_KERNELS[kind](cloud, severity, stream, counters=counters)
    return CorruptedFrame(
        cloud=out,
        boxes=tuple(boxes),
        provenance=CorruptionSpec(kind, severity, stream.seed),
        fallbacks=counters,
    )
