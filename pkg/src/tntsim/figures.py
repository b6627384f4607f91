"""The six stock figures and the JSON figure-library format.

Each figure uses all seven tans exactly once with pairwise disjoint
interiors.  The library file is versioned JSON so experiments can reference
figures by id.
"""

from __future__ import annotations

import json
from pathlib import Path

from .geometry import FigureSpec, PlacedTan, TanKind, validate_figure

SCHEMA_VERSION = 1
FIGURE_COUNT = 6

_K = TanKind


def _fig(fid, name, pieces):
    return FigureSpec(id=fid, name=name, pieces=tuple(PlacedTan(*p) for p in pieces))


def default_figures() -> list[FigureSpec]:
    """Six hand-placed figures: a diamond block, a house, an arrow, a bird,
    a sailboat and a fish."""
    return [
        _fig(0, "block", [
            (_K.LARGE_TRIANGLE_A, (2.0, 2.0), 6),
            (_K.LARGE_TRIANGLE_B, (2.0, 2.0), 0),
            (_K.MEDIUM_TRIANGLE, (0.0, 2.0), 7),
            (_K.SMALL_TRIANGLE_A, (2.0, 1.0), 4),
            (_K.SMALL_TRIANGLE_B, (2.0, 2.0), 2),
            (_K.SQUARE, (1.0, 1.0), 0),
            (_K.PARALLELOGRAM, (1.0, 2.0), 6, True),
        ]),
        _fig(1, "house", [
            (_K.LARGE_TRIANGLE_A, (2.0, 0.0), 2),
            (_K.LARGE_TRIANGLE_B, (0.0, 2.0), 6),
            (_K.MEDIUM_TRIANGLE, (1.0, 3.0), 5),
            (_K.SQUARE, (2.0, 0.0), 0),
            (_K.SMALL_TRIANGLE_A, (2.0, 1.0), 0),
            (_K.SMALL_TRIANGLE_B, (3.0, 1.0), 6),
            (_K.PARALLELOGRAM, (2.0, 2.0), 2),
        ]),
        _fig(2, "arrow", [
            (_K.LARGE_TRIANGLE_A, (4.0, 2.0), 6),
            (_K.LARGE_TRIANGLE_B, (4.0, 2.0), 0),
            (_K.SQUARE, (3.0, 1.5), 0),
            (_K.SMALL_TRIANGLE_A, (2.0, 1.5), 0),
            (_K.SMALL_TRIANGLE_B, (3.0, 2.5), 4),
            (_K.MEDIUM_TRIANGLE, (1.0, 1.5), 7),
            (_K.PARALLELOGRAM, (1.5, 2.5), 0),
        ]),
        _fig(3, "bird", [
            (_K.SQUARE, (0.0, 1.0), 0),
            (_K.SMALL_TRIANGLE_A, (1.0, 1.0), 0),
            (_K.SMALL_TRIANGLE_B, (2.0, 2.0), 4),
            (_K.MEDIUM_TRIANGLE, (-1.0, 1.5), 7),
            (_K.LARGE_TRIANGLE_A, (0.0, 2.0), 0),
            (_K.LARGE_TRIANGLE_B, (2.0, 1.0), 4),
            (_K.PARALLELOGRAM, (2.0, 1.0), 6, True),
        ]),
        _fig(4, "boat", [
            (_K.SMALL_TRIANGLE_A, (1.0, 1.0), 4),
            (_K.SQUARE, (1.0, 0.0), 0),
            (_K.SMALL_TRIANGLE_B, (2.0, 0.0), 0),
            (_K.PARALLELOGRAM, (4.0, 0.0), 0, True),
            (_K.MEDIUM_TRIANGLE, (4.0, 0.0), 1),
            (_K.LARGE_TRIANGLE_A, (2.0, 1.0), 2),
            (_K.LARGE_TRIANGLE_B, (3.0, 1.0), 0),
        ]),
        _fig(5, "fish", [
            (_K.LARGE_TRIANGLE_A, (3.0, 0.0), 2),
            (_K.LARGE_TRIANGLE_B, (1.0, 2.0), 6),
            (_K.MEDIUM_TRIANGLE, (4.0, 1.0), 3),
            (_K.SQUARE, (0.0, 0.5), 0),
            (_K.SMALL_TRIANGLE_A, (0.0, 1.5), 0),
            (_K.SMALL_TRIANGLE_B, (0.0, 0.5), 6),
            (_K.PARALLELOGRAM, (-1.0, -0.5), 6, True),
        ]),
    ]


def figure_to_dict(spec: FigureSpec) -> dict:
    return {
        "id": spec.id,
        "name": spec.name,
        "pieces": [
            {
                "kind": p.kind.value,
                "translation": list(p.translation),
                "rotation_steps": p.rotation_steps,
                "mirrored": p.mirrored,
            }
            for p in spec.pieces
        ],
    }


def figure_from_dict(d: dict) -> FigureSpec:
    pieces = tuple(
        PlacedTan(
            kind=TanKind(p["kind"]),
            translation=tuple(p["translation"]),
            rotation_steps=int(p["rotation_steps"]),
            mirrored=bool(p.get("mirrored", False)),
        )
        for p in d["pieces"]
    )
    return FigureSpec(id=int(d["id"]), name=str(d["name"]), pieces=pieces)


def dump_figures(figures: list[FigureSpec]) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "figures": [figure_to_dict(f) for f in figures],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_figures(figures: list[FigureSpec], path) -> None:
    Path(path).write_text(dump_figures(figures), encoding="utf-8")


def load_figures(path) -> list[FigureSpec]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported figure library schema: {doc.get('schema_version')!r}")
    figures = [figure_from_dict(d) for d in doc["figures"]]
    for fig in figures:
        report = validate_figure(fig)
        if not report.ok:
            raise ValueError(f"figure {fig.id} ({fig.name}) invalid: {report.violations}")
    return figures
