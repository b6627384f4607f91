"""One-shot communication episodes and 48-episode trials.

An episode: the sender privately views one figure at one angle, runs
perceive -> imagine -> describe, and the resulting token message is the
only thing handed to the receiver, who runs interpret -> identify over the
six candidate figures rendered at its own private angles. A trial iterates
figure 0..5 x sender angle 0..7 in fixed order; the receiver's angles are
drawn once per trial.

Backend failures never abort a trial: the episode is recorded with an
error cause and excluded from the confusion matrix.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import pipeline, seeds
from .figures import FIGURE_COUNT
from .geometry import rotate_view, to_polygons
from .nn import LabelDistribution, ParameterSet
from .pipeline import (BackendBinding, BackendUnavailableError, Message,
                       PipelineError, StageContext)
from .raster import RasterView, rasterize

EPISODE_LOG_SCHEMA = 1
ANGLE_STEPS = 8
EPISODES_PER_TRIAL = FIGURE_COUNT * ANGLE_STEPS
CHANCE_LEVEL = 1.0 / FIGURE_COUNT


@dataclass(frozen=True)
class EpisodeRecord:
    """Everything observable about one communication attempt."""

    figure_id: int
    sender_angle: int
    receiver_angles: tuple[int, ...]
    label_dist: LabelDistribution | None
    message: Message | None
    chosen_id: int
    success: bool
    scores: tuple[float, ...]
    sender_raster_hash: str
    candidate_hashes: tuple[str, ...]
    error_cause: str | None = None
    # in-memory handle for calibration; logs carry only the hash above
    sender_raster: RasterView | None = field(
        default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.error_cause is not None and self.success:
            raise ValueError("errored episode cannot be a success")
        if self.error_cause is None:
            ok = self.chosen_id == self.figure_id
            if self.success != ok:
                raise ValueError("success flag contradicts chosen_id")


@dataclass(frozen=True)
class ConfusionMatrix:
    """6x6 counts; rows are intended figures, columns chosen figures."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.ascontiguousarray(np.asarray(self.counts, dtype=np.int64))
        if c.shape != (FIGURE_COUNT, FIGURE_COUNT):
            raise ValueError(f"confusion matrix must be "
                             f"{FIGURE_COUNT}x{FIGURE_COUNT}, got {c.shape}")
        if np.any(c < 0):
            raise ValueError("confusion counts must be nonnegative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def trace(self) -> int:
        return int(np.trace(self.counts))


@dataclass(frozen=True)
class TrialResult:
    episodes: tuple[EpisodeRecord, ...]
    confusion: ConfusionMatrix
    accuracy: float
    error_count: int = 0


def accuracy(cm: ConfusionMatrix) -> float:
    """Fraction of correct identifications: trace over total count."""
    if cm.total == 0:
        raise ValueError("empty confusion matrix has no accuracy")
    return cm.trace / cm.total


def render_figure_view(figure, angle_steps: int, width: int = 64,
                       height: int = 64) -> RasterView:
    """Rasterize one figure rotated by `angle_steps` 45-degree steps."""
    polys = rotate_view(to_polygons(figure), angle_steps)
    return rasterize(polys, width, height, figure_id=figure.id,
                     angle_steps=angle_steps)


def _sender_emit(sender_params: ParameterSet, view: RasterView,
                 bindings: BackendBinding, ctx: StageContext, seed: int,
                 transport) -> tuple[LabelDistribution, Message]:
    """perceive -> imagine -> describe on the sender's side."""
    dist = features = None
    sel = bindings.selector("perceive")
    if "perceive" in bindings.overrides:
        dist = bindings.overrides["perceive"](sender_params, view, ctx)
    elif sel == "mock":
        dist = pipeline.mock_stage(
            "perceive", {"view": view, "num_classes": len(ctx.emb.vocab)}, seed)
    else:
        dist, features = pipeline._perceive_full(sender_params, view,
                                                 ctx.netspec)
    top_label = ctx.emb.vocab.labels[dist.top_index]

    imagined_view = None
    sel = bindings.selector("imagine")
    if "imagine" in bindings.overrides:
        rep = bindings.overrides["imagine"](top_label, view, sender_params, ctx)
    elif sel == "mock":
        rep = pipeline.mock_stage(
            "imagine", {"top_label": top_label, "view": view,
                        "dim": ctx.emb.dim}, seed)
    elif sel == "remote":
        rep, imagined_view = pipeline.remote_stage(
            "imagine", {"prompt": top_label, "view": view,
                        "strength": 1.0 - ctx.alpha, "seed": seed & 0x7FFFFFFF,
                        "params": sender_params, "ctx": ctx},
            bindings.endpoint, transport or pipeline._http_transport)
    else:
        rep = pipeline.imagine(top_label, view, sender_params, ctx.emb,
                               ctx.alpha, ctx, _dist=dist, _features=features)

    sel = bindings.selector("describe")
    if "describe" in bindings.overrides:
        msg = bindings.overrides["describe"](rep, ctx)
    elif sel == "mock":
        msg = pipeline.mock_stage(
            "describe", {"representation": rep, "labels": ctx.emb.vocab.labels,
                         "k": ctx.describe_k}, seed)
    elif sel == "remote":
        caption_image = imagined_view if imagined_view is not None else view
        msg = pipeline.remote_stage(
            "describe", {"image": caption_image,
                         "message_len": ctx.message_len},
            bindings.endpoint, transport or pipeline._http_transport)
    else:
        msg = pipeline.describe(rep, ctx.emb, ctx.describe_k)
    return dist, msg


def _receiver_choose(msg: Message, candidates: tuple[RasterView, ...],
                     receiver_params: ParameterSet, bindings: BackendBinding,
                     ctx: StageContext, seed: int, cand_vectors,
                     intended: int) -> tuple[int, tuple[float, ...]]:
    """interpret -> identify; sees only the message and its own rasters.

    `intended` is forwarded to identify overrides only, for oracle and
    instrumentation hooks in tests; no real backend receives it.
    """
    sel = bindings.selector("interpret")
    if "interpret" in bindings.overrides:
        rep = bindings.overrides["interpret"](msg, ctx)
    elif sel == "mock":
        rep = pipeline.mock_stage(
            "interpret", {"message": msg, "dim": ctx.emb.dim}, seed)
    else:
        rep = pipeline.interpret(msg, ctx.emb)

    sel = bindings.selector("identify")
    if "identify" in bindings.overrides:
        return bindings.overrides["identify"](rep, candidates,
                                              receiver_params, ctx,
                                              intended=intended)
    if sel == "mock":
        return pipeline.mock_stage(
            "identify", {"representation": rep,
                         "num_candidates": len(candidates)}, seed)
    return pipeline.identify(rep, candidates, receiver_params, ctx,
                             _vectors=cand_vectors)


def oracle_identify(rep, candidates, params, ctx, intended: int):
    """Identify override that always picks the intended figure; test rig."""
    scores = tuple(1.0 if c.figure_id == intended else 0.0
                   for c in candidates)
    return scores.index(1.0), scores


def run_episode(sender_params: ParameterSet, receiver_params: ParameterSet,
                figure_id: int, sender_angle: int,
                receiver_angles: tuple[int, ...], bindings: BackendBinding,
                seed: int, *, figures, ctx: StageContext,
                transport: Callable | None = None,
                raster_hw: tuple[int, int] = (64, 64),
                _sender_view: RasterView | None = None,
                _candidates: tuple[RasterView, ...] | None = None,
                _cand_vectors=None) -> EpisodeRecord:
    """Run one one-shot communication and record every observable.

    The channel is message-only by construction: the receiver half is
    called with nothing derived from the sender but the Message itself.
    Backend failures are recorded in error_cause, not raised.
    """
    if not 0 <= figure_id < FIGURE_COUNT:
        raise ValueError(f"figure_id out of range: {figure_id}")
    if not 0 <= sender_angle < ANGLE_STEPS:
        raise ValueError(f"sender_angle out of range: {sender_angle}")
    height, width = raster_hw[1], raster_hw[0]
    view = _sender_view
    if view is None:
        view = render_figure_view(figures[figure_id], sender_angle,
                                  width, height)
    candidates = _candidates
    if candidates is None:
        candidates = tuple(
            render_figure_view(fig, receiver_angles[fig.id], width, height)
            for fig in figures)
    cand_hashes = tuple(c.content_hash() for c in candidates)

    dist = msg = None
    chosen_id, scores, error_cause = -1, (), None
    try:
        dist, msg = _sender_emit(sender_params, view, bindings, ctx, seed,
                                 transport)
        idx, scores = _receiver_choose(msg, candidates, receiver_params,
                                       bindings, ctx, seed, _cand_vectors,
                                       figure_id)
        chosen_id = int(candidates[idx].figure_id)
    except (BackendUnavailableError, PipelineError) as err:
        error_cause = str(err)

    return EpisodeRecord(
        figure_id=figure_id, sender_angle=sender_angle,
        receiver_angles=tuple(int(a) for a in receiver_angles),
        label_dist=dist, message=msg, chosen_id=chosen_id,
        success=error_cause is None and chosen_id == figure_id,
        scores=tuple(float(s) for s in scores),
        sender_raster_hash=view.content_hash(),
        candidate_hashes=cand_hashes, error_cause=error_cause,
        sender_raster=view)


def draw_receiver_angles(seed: int) -> tuple[int, ...]:
    """One private angle per figure, drawn from the trial's seed."""
    rng = seeds.generator(seeds.derive(seed, "receiver-angles"))
    return tuple(int(a) for a in rng.integers(0, ANGLE_STEPS,
                                              size=FIGURE_COUNT))


def run_trial(sender_params: ParameterSet, receiver_params: ParameterSet,
              figures, bindings: BackendBinding, seed: int, *,
              ctx: StageContext, transport: Callable | None = None,
              raster_hw: tuple[int, int] = (64, 64),
              _sender_views: dict | None = None) -> TrialResult:
    """48 episodes in fixed order: figure 0..5 x sender angle 0..7.

    Receiver angles are drawn once per trial. Candidate views and their
    shared-space vectors are computed once and reused across episodes;
    `_sender_views` optionally caches sender rasters across trials.
    """
    if len(figures) != FIGURE_COUNT:
        raise ValueError(f"exactly {FIGURE_COUNT} figures required")
    height, width = raster_hw[1], raster_hw[0]
    receiver_angles = draw_receiver_angles(seed)
    candidates = tuple(
        render_figure_view(fig, receiver_angles[fig.id], width, height)
        for fig in figures)
    cand_vectors = None
    if bindings.selector("identify") == "builtin" \
            and "identify" not in bindings.overrides:
        cand_vectors = pipeline.candidate_vectors(receiver_params,
                                                  candidates, ctx)

    episodes = []
    counts = np.zeros((FIGURE_COUNT, FIGURE_COUNT), dtype=np.int64)
    errors = 0
    for figure_id in range(FIGURE_COUNT):
        for angle in range(ANGLE_STEPS):
            index = figure_id * ANGLE_STEPS + angle
            ep_seed = seeds.derive(seed, "episode", index)
            sender_view = None
            if _sender_views is not None:
                sender_view = _sender_views.get((figure_id, angle))
            if sender_view is None:
                sender_view = render_figure_view(figures[figure_id], angle,
                                                 width, height)
                if _sender_views is not None:
                    _sender_views[(figure_id, angle)] = sender_view
            rec = run_episode(
                sender_params, receiver_params, figure_id, angle,
                receiver_angles, bindings, ep_seed, figures=figures,
                ctx=ctx, transport=transport, raster_hw=raster_hw,
                _sender_view=sender_view, _candidates=candidates,
                _cand_vectors=cand_vectors)
            episodes.append(rec)
            if rec.error_cause is None:
                counts[rec.figure_id, rec.chosen_id] += 1
            else:
                errors += 1

    cm = ConfusionMatrix(counts)
    return TrialResult(episodes=tuple(episodes), confusion=cm,
                       accuracy=accuracy(cm) if cm.total else 0.0,
                       error_count=errors)


# ---------------------------------------------------------------- exports

def episode_to_dict(rec: EpisodeRecord) -> dict:
    return {
        "figure_id": rec.figure_id,
        "sender_angle": rec.sender_angle,
        "receiver_angles": list(rec.receiver_angles),
        "label_probs": None if rec.label_dist is None
        else [float(p) for p in rec.label_dist.probs],
        "message": None if rec.message is None else list(rec.message.tokens),
        "chosen_id": rec.chosen_id,
        "success": rec.success,
        "scores": list(rec.scores),
        "sender_raster_hash": rec.sender_raster_hash,
        "candidate_hashes": list(rec.candidate_hashes),
        "error_cause": rec.error_cause,
    }


def write_episode_log(trial: TrialResult, path) -> None:
    """JSONL: one header object, then one object per episode; rasters are
    referenced by content hash only."""
    with open(path, "w", encoding="utf-8") as fh:
        header = {"schema_version": EPISODE_LOG_SCHEMA,
                  "kind": "episode-log",
                  "episodes": len(trial.episodes),
                  "accuracy": trial.accuracy,
                  "error_count": trial.error_count}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in trial.episodes:
            fh.write(json.dumps(episode_to_dict(rec), sort_keys=True) + "\n")


def read_episode_log(path) -> tuple[dict, list[dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("kind") != "episode-log":
        raise ValueError("not an episode log")
    if lines[0]["schema_version"] != EPISODE_LOG_SCHEMA:
        raise ValueError(f"unsupported schema {lines[0]['schema_version']}")
    return lines[0], lines[1:]


def write_confusion_csv(cm: ConfusionMatrix, names, path) -> None:
    """6x6 counts with a header row and column of figure names."""
    if len(names) != FIGURE_COUNT:
        raise ValueError("need one name per figure")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("," + ",".join(names) + "\n")
        for i, name in enumerate(names):
            row = ",".join(str(int(v)) for v in cm.counts[i])
            fh.write(f"{name},{row}\n")


def read_confusion_csv(path) -> tuple[ConfusionMatrix, list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    names = rows[0][1:]
    counts = np.array([[int(v) for v in row[1:]] for row in rows[1:]],
                      dtype=np.int64)
    return ConfusionMatrix(counts), names
