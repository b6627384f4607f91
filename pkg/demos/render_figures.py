"""Dump every stock figure at every 45-degree angle as PGM images.

Writes 48 files to out/renders/ and prints the fill fraction per view, the
quantity the rotation-invariance checks bound. Viewers: any image tool that
reads binary P5 (GIMP, feh, ImageMagick).

    python3 demos/render_figures.py
"""

from pathlib import Path

from tntsim.episode import render_figure_view
from tntsim.figures import default_figures

OUT = Path("out") / "renders"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    print(f"{'figure':8s} " + " ".join(f"a={k}" for k in range(8)))
    for fig in default_figures():
        fractions = []
        for k in range(8):
            view = render_figure_view(fig, k)
            (OUT / f"{fig.name}_{k}.pgm").write_bytes(view.to_pgm())
            fractions.append(view.fill_fraction)
        row = " ".join(f"{f:.3f}" for f in fractions)
        print(f"{fig.name:8s} {row}")
    print(f"wrote 48 images to {OUT}/")


if __name__ == "__main__":
    main()
