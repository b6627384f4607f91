"""Episode and trial mechanics on a small fast world.

The oracle receiver pins the bookkeeping (a receiver that always picks the
intended figure must score 1.0), overrides probe the channel, and injected
failures exercise the error accounting.
"""

import numpy as np
import pytest

from tntsim import pipeline
from tntsim.episode import (
    ANGLE_STEPS,
    CHANCE_LEVEL,
    EPISODES_PER_TRIAL,
    ConfusionMatrix,
    EpisodeRecord,
    TrialResult,
    accuracy,
    draw_receiver_angles,
    episode_to_dict,
    oracle_identify,
    read_confusion_csv,
    read_episode_log,
    render_figure_view,
    run_episode,
    run_trial,
    write_confusion_csv,
    write_episode_log,
)
from tntsim.figures import FIGURE_COUNT, default_figures
from tntsim.nn import LabelDistribution, default_netspec, init_params
from tntsim.pipeline import (
    BackendBinding,
    BackendUnavailableError,
    EmbeddingTable,
    Message,
    PipelineError,
    Vocabulary,
    default_context,
)

RASTER_HW = (16, 16)


@pytest.fixture(scope="module")
def world():
    vocab = Vocabulary(tuple(f"tok{i}" for i in range(8)))
    emb = EmbeddingTable.seeded(vocab, dim=8, seed=3)
    spec = default_netspec(num_classes=8, hidden=4, input_hw=(16, 16),
                           conv_widths=(2, 2, 3, 3))
    ctx = default_context(spec, emb, seed=3)
    sender = init_params(spec, seed=21)
    receiver = init_params(spec, seed=22)
    return ctx, sender, receiver, default_figures()


def _trial(world, bindings, seed=5, **kwargs):
    ctx, sender, receiver, figures = world
    return run_trial(sender, receiver, figures, bindings, seed, ctx=ctx,
                     raster_hw=RASTER_HW, **kwargs)


# ------------------------------------------------------------ value types

def test_episode_record_invariants():
    base = dict(figure_id=1, sender_angle=2, receiver_angles=(0,) * 6,
                label_dist=None, message=None, scores=(),
                sender_raster_hash="h", candidate_hashes=("h",) * 6)
    EpisodeRecord(chosen_id=1, success=True, **base)
    EpisodeRecord(chosen_id=3, success=False, **base)
    EpisodeRecord(chosen_id=-1, success=False, error_cause="boom", **base)
    with pytest.raises(ValueError):
        EpisodeRecord(chosen_id=1, success=True, error_cause="boom", **base)
    with pytest.raises(ValueError):
        EpisodeRecord(chosen_id=3, success=True, **base)
    with pytest.raises(ValueError):
        EpisodeRecord(chosen_id=1, success=False, **base)


def test_confusion_matrix_validation():
    with pytest.raises(ValueError):
        ConfusionMatrix(np.zeros((3, 3), dtype=np.int64))
    with pytest.raises(ValueError):
        ConfusionMatrix(np.full((6, 6), -1, dtype=np.int64))
    cm = ConfusionMatrix(np.eye(6, dtype=np.int64) * 2)
    assert cm.total == 12 and cm.trace == 12
    assert accuracy(cm) == 1.0
    with pytest.raises(ValueError, match="empty"):
        accuracy(ConfusionMatrix(np.zeros((6, 6), dtype=np.int64)))


def test_constants():
    assert EPISODES_PER_TRIAL == 48
    assert ANGLE_STEPS == 8
    assert CHANCE_LEVEL == pytest.approx(1.0 / 6.0)


# -------------------------------------------------------------- rendering

def test_render_figure_view_metadata_and_rotation():
    fig = default_figures()[4]
    v0 = render_figure_view(fig, 0, 16, 16)
    v3 = render_figure_view(fig, 3, 16, 16)
    assert v0.figure_id == 4 and v0.angle_steps == 0
    assert v3.angle_steps == 3
    assert v0.content_hash() != v3.content_hash()
    assert render_figure_view(fig, 3, 16, 16).content_hash() \
        == v3.content_hash()


def test_draw_receiver_angles():
    a = draw_receiver_angles(5)
    assert a == draw_receiver_angles(5)
    assert len(a) == FIGURE_COUNT
    assert all(0 <= s < ANGLE_STEPS for s in a)
    assert a != draw_receiver_angles(6)


# ------------------------------------------------------------ trial shape

def test_oracle_receiver_scores_perfectly(world):
    trial = _trial(world, BackendBinding(overrides={
        "identify": oracle_identify}))
    assert trial.accuracy == 1.0
    assert trial.error_count == 0
    assert trial.confusion.trace == EPISODES_PER_TRIAL
    assert np.array_equal(np.diag(trial.confusion.counts), [8] * 6)


def test_trial_structure_and_order(world):
    trial = _trial(world, BackendBinding())
    assert len(trial.episodes) == EPISODES_PER_TRIAL
    expected_angles = draw_receiver_angles(5)
    for i, ep in enumerate(trial.episodes):
        assert ep.figure_id == i // ANGLE_STEPS
        assert ep.sender_angle == i % ANGLE_STEPS
        assert ep.receiver_angles == expected_angles
        assert ep.candidate_hashes == trial.episodes[0].candidate_hashes
        assert len(ep.scores) == FIGURE_COUNT
        assert ep.message is not None and ep.label_dist is not None
        assert ep.sender_raster is not None
        assert ep.sender_raster.content_hash() == ep.sender_raster_hash
    # every intended row carries its 8 episodes
    assert trial.confusion.counts.sum(axis=1).tolist() == [8] * 6
    assert trial.confusion.total == EPISODES_PER_TRIAL
    assert trial.accuracy == trial.confusion.trace / EPISODES_PER_TRIAL


def test_trial_determinism(world):
    t1 = _trial(world, BackendBinding(), seed=9)
    t2 = _trial(world, BackendBinding(), seed=9)
    assert [episode_to_dict(e) for e in t1.episodes] \
        == [episode_to_dict(e) for e in t2.episodes]
    t3 = _trial(world, BackendBinding(), seed=10)
    assert [episode_to_dict(e) for e in t1.episodes] \
        != [episode_to_dict(e) for e in t3.episodes]


def test_sender_view_cache_is_filled_and_reusable(world):
    cache = {}
    t1 = _trial(world, BackendBinding(), _sender_views=cache)
    assert sorted(cache) == [(f, a) for f in range(6) for a in range(8)]
    t2 = _trial(world, BackendBinding(), _sender_views=cache)
    assert [episode_to_dict(e) for e in t1.episodes] \
        == [episode_to_dict(e) for e in t2.episodes]


def test_run_trial_validation(world):
    ctx, sender, receiver, figures = world
    with pytest.raises(ValueError, match="6 figures"):
        run_trial(sender, receiver, figures[:5], BackendBinding(), 1, ctx=ctx)


def test_run_episode_validation(world):
    ctx, sender, receiver, figures = world
    with pytest.raises(ValueError, match="figure_id"):
        run_episode(sender, receiver, 6, 0, (0,) * 6, BackendBinding(), 1,
                    figures=figures, ctx=ctx, raster_hw=RASTER_HW)
    with pytest.raises(ValueError, match="sender_angle"):
        run_episode(sender, receiver, 0, 8, (0,) * 6, BackendBinding(), 1,
                    figures=figures, ctx=ctx, raster_hw=RASTER_HW)


# ------------------------------------------------------ channel discipline

def test_receiver_sees_only_the_message(world):
    ctx, _, _, _ = world
    seen = []

    def interpret_spy(msg, spy_ctx):
        assert isinstance(msg, Message)
        seen.append(msg)
        return pipeline.interpret(msg, spy_ctx.emb)

    trial = _trial(world, BackendBinding(overrides={
        "interpret": interpret_spy}))
    assert len(seen) == EPISODES_PER_TRIAL
    assert [m.tokens for m in seen] \
        == [e.message.tokens for e in trial.episodes]


def test_identify_override_receives_intended(world):
    got = []

    def identify_spy(rep, candidates, params, spy_ctx, intended):
        got.append(intended)
        return pipeline.identify(rep, candidates, params, spy_ctx)

    _trial(world, BackendBinding(overrides={"identify": identify_spy}))
    assert got == [f for f in range(6) for _ in range(8)]


def test_chosen_id_tracks_candidate_figure_ids(world):
    ctx, sender, receiver, figures = world
    # candidates deliberately out of figure order; choosing index 0 must
    # report that candidate's figure id, not 0
    shuffled = tuple(render_figure_view(figures[fid], 0, 16, 16)
                     for fid in (5, 4, 3, 2, 1, 0))

    def pick_first(rep, candidates, params, spy_ctx, intended):
        return 0, tuple(0.0 for _ in candidates)

    rec = run_episode(sender, receiver, 2, 0, (0,) * 6,
                      BackendBinding(overrides={"identify": pick_first}), 1,
                      figures=figures, ctx=ctx, raster_hw=RASTER_HW,
                      _candidates=shuffled)
    assert rec.chosen_id == 5
    assert not rec.success


# --------------------------------------------------------- error handling

def test_backend_failures_are_recorded_not_raised(world):
    def flaky_describe(rep, spy_ctx):
        raise BackendUnavailableError("backend unavailable: injected")

    seen = {"n": 0}

    def describe_for_fig3(rep, spy_ctx):
        # fail exactly the 8 episodes of figure 3 (they arrive in order)
        seen["n"] += 1
        if 3 * 8 < seen["n"] <= 4 * 8:
            raise BackendUnavailableError("backend unavailable: injected")
        return pipeline.describe(rep, spy_ctx.emb, spy_ctx.describe_k)

    trial = _trial(world, BackendBinding(overrides={
        "describe": describe_for_fig3}))
    assert trial.error_count == 8
    assert trial.confusion.total == 40
    assert trial.confusion.counts[3].sum() == 0
    errored = [e for e in trial.episodes if e.error_cause is not None]
    assert len(errored) == 8
    for ep in errored:
        assert ep.figure_id == 3
        assert ep.chosen_id == -1 and not ep.success
        assert ep.message is None and ep.scores == ()
        assert "injected" in ep.error_cause

    all_fail = _trial(world, BackendBinding(overrides={
        "describe": flaky_describe}))
    assert all_fail.error_count == EPISODES_PER_TRIAL
    assert all_fail.confusion.total == 0
    assert all_fail.accuracy == 0.0


def test_pipeline_errors_are_recorded_too(world):
    def bad_interpret(msg, spy_ctx):
        raise PipelineError("uninterpretable message")

    trial = _trial(world, BackendBinding(overrides={
        "interpret": bad_interpret}))
    assert trial.error_count == EPISODES_PER_TRIAL
    # the sender half still ran: distributions and messages were recorded
    assert all(e.message is not None for e in trial.episodes)


def test_unexpected_exceptions_propagate(world):
    def broken(rep, spy_ctx):
        raise KeyError("not a backend failure")

    with pytest.raises(KeyError):
        _trial(world, BackendBinding(overrides={"describe": broken}))


# ------------------------------------------------------------------- mock

def test_mock_trial_is_deterministic(world):
    bindings = BackendBinding(perceive="mock", imagine="mock",
                              describe="mock", interpret="mock",
                              identify="mock")
    t1 = _trial(world, bindings, seed=31)
    t2 = _trial(world, bindings, seed=31)
    assert [episode_to_dict(e) for e in t1.episodes] \
        == [episode_to_dict(e) for e in t2.episodes]
    assert t1.error_count == 0
    for ep in t1.episodes:
        assert len(ep.message.tokens) == world[0].describe_k
        assert ep.label_dist.probs.shape == (8,)


# ---------------------------------------------------------------- exports

def test_episode_log_round_trip(tmp_path, world):
    trial = _trial(world, BackendBinding())
    path = tmp_path / "episodes.jsonl"
    write_episode_log(trial, path)
    header, rows = read_episode_log(path)
    assert header["episodes"] == EPISODES_PER_TRIAL
    assert header["accuracy"] == trial.accuracy
    assert header["error_count"] == trial.error_count
    assert rows == [episode_to_dict(e) for e in trial.episodes]


def test_read_episode_log_rejects_other_files(tmp_path):
    path = tmp_path / "not-a-log.jsonl"
    path.write_text('{"kind": "something-else"}\n')
    with pytest.raises(ValueError, match="episode log"):
        read_episode_log(path)
    path.write_text('{"kind": "episode-log", "schema_version": 99}\n')
    with pytest.raises(ValueError, match="schema"):
        read_episode_log(path)


def test_confusion_csv_round_trip(tmp_path, world):
    trial = _trial(world, BackendBinding(overrides={
        "identify": oracle_identify}))
    names = [f.name for f in world[3]]
    path = tmp_path / "confusion.csv"
    write_confusion_csv(trial.confusion, names, path)
    cm, names_back = read_confusion_csv(path)
    assert names_back == names
    assert np.array_equal(cm.counts, trial.confusion.counts)
    with pytest.raises(ValueError):
        write_confusion_csv(trial.confusion, names[:3], path)
