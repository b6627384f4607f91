"""Run a short calibration experiment and plot the accuracy series.

Two runs of three trials on the tiny 16x16 world: after every trial, the
receiver's perceiver is nudged toward the sender's label distributions on
the successful episodes, then the next trial is played with the calibrated
parameters. Writes the trajectory plot to out/demo-learning/series.svg.

At this toy scale the curve mostly wanders around chance; the demo shows
the moving parts. The statistically meaningful version is the full-size
experiment (64x64 raster, 16 labels, 10 runs x 10 trials):

    tntsim run-learning --config <cfg.toml>

    python3 demos/learning_curve.py
"""

from pathlib import Path

from quickstart_trial import SMALL, pretrain_role
from tntsim.episode import CHANCE_LEVEL
from tntsim.figures import default_figures
from tntsim.learning import run_learning
from tntsim.plots import render_series_svg

OUT = Path("out") / "demo-learning"


def main() -> None:
    cfg = SMALL
    sender = pretrain_role(cfg, "sender")
    receiver = pretrain_role(cfg, "receiver")

    series = run_learning(receiver, default_figures(), cfg.calibration,
                          trials=3, runs=2, seed=cfg.seed,
                          ctx=cfg.make_context(), sender_params=sender,
                          raster_hw=(cfg.raster_width, cfg.raster_height))

    print(f"\ninitial accuracy {series.initial:.4f} "
          f"(chance {CHANCE_LEVEL:.4f})")
    for r in range(series.runs):
        row = " -> ".join(f"{v:.3f}" for v in series.matrix[r, 1:])
        print(f"run {r}: {row}")

    OUT.mkdir(parents=True, exist_ok=True)
    svg = render_series_svg(series, CHANCE_LEVEL, series.initial)
    (OUT / "series.svg").write_text(svg, encoding="utf-8")
    print(f"wrote {OUT / 'series.svg'}")


if __name__ == "__main__":
    main()
