"""Smallest end-to-end run: pretrain two tiny perceivers, play one trial.

Uses a 16x16 raster and a four-word vocabulary so the whole thing takes a
few seconds. Prints per-figure results and the confusion matrix; episode 0
is unpacked to show what actually crosses the channel.

    python3 demos/quickstart_trial.py
"""

from tntsim import nn, seeds
from tntsim.config import ExperimentConfig
from tntsim.episode import CHANCE_LEVEL, run_trial
from tntsim.figures import default_figures
from tntsim.learning import CalibrationConfig
from tntsim.pretrain import make_dataset, pretrain

SMALL = ExperimentConfig(
    seed=7, raster_width=16, raster_height=16,
    vocabulary=("ladder", "diamond", "cross", "moon"),
    embedding_dim=8, net_hidden=4, net_conv_widths=(2, 2, 3, 3),
    pretrain_epochs=6, pretrain_batch=8, pretrain_val_fraction=0.25,
    samples_per_class=12, calibration=CalibrationConfig(max_passes=5))


def pretrain_role(cfg: ExperimentConfig, role: str) -> nn.ParameterSet:
    dataset = make_dataset(cfg.vocabulary, cfg.samples_per_class,
                           seed=cfg.corpus_seed(role),
                           image_hw=(cfg.raster_height, cfg.raster_width))
    params, val_accuracy = pretrain(cfg.make_netspec(), dataset,
                                    cfg.make_pretrain_config(role))
    print(f"{role}: val accuracy {val_accuracy:.3f}")
    return params


def main() -> None:
    cfg = SMALL
    figures = default_figures()
    sender = pretrain_role(cfg, "sender")
    receiver = pretrain_role(cfg, "receiver")

    result = run_trial(sender, receiver, figures, cfg.make_bindings(),
                       seeds.derive(cfg.seed, "initial-trial"),
                       ctx=cfg.make_context(),
                       raster_hw=(cfg.raster_width, cfg.raster_height))

    first = result.episodes[0]
    print(f"\nepisode 0: figure {first.figure_id} at angle "
          f"{first.sender_angle} -> message {list(first.message.tokens)} "
          f"-> chose {first.chosen_id} "
          f"({'hit' if first.success else 'miss'})")

    names = [f.name for f in figures]
    print(f"\ntrial accuracy {result.accuracy:.4f} "
          f"(chance {CHANCE_LEVEL:.4f}, {result.error_count} errors)")
    print(f"{'':8s} " + " ".join(f"{n[:6]:>6s}" for n in names))
    for i, row in enumerate(result.confusion.counts):
        print(f"{names[i]:8s} " + " ".join(f"{int(c):6d}" for c in row))


if __name__ == "__main__":
    main()
