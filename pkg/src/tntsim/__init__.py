"""tntsim: a deterministic simulator of common-ground building between two
model agents playing a tangram naming game."""

__version__ = "0.1.0"
