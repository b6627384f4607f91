"""Figure library serialization and schema validation."""

import dataclasses
import json

import pytest

from tntsim.figures import (
    FIGURE_COUNT,
    SCHEMA_VERSION,
    default_figures,
    dump_figures,
    figure_from_dict,
    figure_to_dict,
    load_figures,
    save_figures,
)
from tntsim.geometry import PlacedTan


def test_default_figures_ids_and_names():
    figs = default_figures()
    assert len(figs) == FIGURE_COUNT
    assert [f.id for f in figs] == list(range(6))
    assert [f.name for f in figs] == ["block", "house", "arrow", "bird",
                                      "boat", "fish"]


def test_figure_dict_round_trip():
    for fig in default_figures():
        assert figure_from_dict(figure_to_dict(fig)) == fig


def test_save_load_round_trip(tmp_path):
    path = tmp_path / "library.json"
    save_figures(default_figures(), path)
    assert load_figures(path) == default_figures()


def test_dump_is_deterministic_text():
    a = dump_figures(default_figures())
    assert a == dump_figures(default_figures())
    assert a.endswith("\n")
    doc = json.loads(a)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert len(doc["figures"]) == 6


def test_load_rejects_wrong_schema(tmp_path):
    path = tmp_path / "old.json"
    doc = json.loads(dump_figures(default_figures()))
    doc["schema_version"] = 0
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="schema"):
        load_figures(path)


def test_load_rejects_invalid_geometry(tmp_path):
    figs = default_figures()
    # move one piece onto another: overlapping interiors must be refused
    bad_piece = dataclasses.replace(figs[0].pieces[0],
                                    translation=figs[0].pieces[1].translation,
                                    rotation_steps=figs[0].pieces[1].rotation_steps)
    bad = dataclasses.replace(figs[0], pieces=(bad_piece,) + figs[0].pieces[1:])
    doc = {"schema_version": SCHEMA_VERSION,
           "figures": [figure_to_dict(bad)]}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="invalid"):
        load_figures(path)


def test_mirrored_flag_defaults_false():
    d = figure_to_dict(default_figures()[1])
    for p in d["pieces"]:
        del p["mirrored"]
    fig = figure_from_dict(d)
    assert all(not p.mirrored for p in fig.pieces)
