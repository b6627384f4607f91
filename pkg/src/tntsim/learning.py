"""Success-filtered calibration and the repeated-trial learning experiment.

After a trial, only the successful episodes are kept: for each one, the
sender's input raster is paired with the label distribution the sender's
perceiver produced on it. The receiver's perceiver is then nudged toward
reproducing those distributions, so the two agents' ways of seeing drift
together exactly where communication already works. A learning experiment
repeats {trial, calibrate} and charts accuracy per trial across runs.

Partner-keyed parameter snapshots let an agent resume the grounding it
built with a known partner instead of starting from the shared baseline.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nn, seeds
from .episode import TrialResult, run_trial
from .nn import NetSpec, ParameterSet, SnapshotIntegrityError
from .pipeline import BackendBinding, StageContext

_PARTNER_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")
# a pass must beat the best loss by this much to count as improvement,
# else oscillation around the minimum would reset patience forever
_LOSS_TOL = 1e-6


@dataclass(frozen=True)
class CalibrationConfig:
    """Knobs for one calibrate() call.

    A "pass" is `epochs` sweeps over the success set in `batch_size`
    chunks; passes repeat until the mean pass loss stops improving for
    `patience` consecutive passes or `max_passes` is hit.
    """

    batch_size: int = 1
    epochs: int = 1
    patience: int = 10
    lr: float = 0.05
    loss_kind: str = "mse"
    max_passes: int = 100

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.max_passes < 1:
            raise ValueError("batch_size, epochs, max_passes must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be nonnegative")
        if self.loss_kind not in ("mse", "cross_entropy"):
            raise ValueError(f"unknown loss {self.loss_kind!r}")


@dataclass(frozen=True)
class AccuracySeries:
    """runs x (trials+1) accuracies; column 0 is the shared initial level."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.float64))
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError("series must be a runs x (trials+1) matrix")
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("accuracies must lie in [0, 1]")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def runs(self) -> int:
        return self.matrix.shape[0]

    @property
    def trials(self) -> int:
        return self.matrix.shape[1] - 1

    @property
    def initial(self) -> float:
        return float(self.matrix[0, 0])

    def post_initial(self) -> np.ndarray:
        """All entries from trial 1 on, flattened run-major."""
        return self.matrix[:, 1:].ravel()


def filter_successes(trial: TrialResult) -> list[tuple]:
    """(sender raster, recorded probability vector) per successful episode."""
    out = []
    for rec in trial.episodes:
        if not rec.success:
            continue
        if rec.sender_raster is None:
            raise ValueError("episode record lacks its raster; "
                             "calibration needs in-memory trial results")
        out.append((rec.sender_raster, rec.label_dist.probs))
    return out


def calibrate(params: ParameterSet, successes, cfg: CalibrationConfig,
              netspec: NetSpec) -> tuple[ParameterSet, list[float]]:
    """Fit `params` toward the success-time targets; keep the best pass.

    Returns (best parameters, mean loss per pass). An empty success list
    returns the parameters unchanged with an empty loss list.
    """
    if not successes:
        return params, []
    best_params, best_loss = params, np.inf
    current = params
    since_best = 0
    pass_losses: list[float] = []
    for pass_idx in range(cfg.max_passes):
        total = 0.0
        for _ in range(cfg.epochs):
            for start in range(0, len(successes), cfg.batch_size):
                batch = successes[start:start + cfg.batch_size]
                try:
                    loss, grads = nn.loss_and_grad(current, batch,
                                                   cfg.loss_kind, netspec)
                except nn.NumericalOverflowError as err:
                    raise nn.NumericalOverflowError(
                        f"calibration diverged at pass {pass_idx}: {err}"
                    ) from err
                current = nn.sgd_step(current, grads, cfg.lr)
                total += loss * len(batch)
        mean_loss = total / (len(successes) * cfg.epochs)
        pass_losses.append(mean_loss)
        if mean_loss < best_loss - _LOSS_TOL:
            best_params, best_loss, since_best = current, mean_loss, 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break
    return best_params, pass_losses


def run_learning(base_params: ParameterSet, figures, cfg: CalibrationConfig,
                 trials: int = 10, runs: int = 10, seed: int = 0, *,
                 ctx: StageContext, bindings: BackendBinding | None = None,
                 sender_params: ParameterSet | None = None,
                 transport=None,
                 raster_hw: tuple[int, int] = (64, 64)) -> AccuracySeries:
    """Repeated {trial -> filter -> calibrate} from a shared baseline.

    Column 0 of the result is one initial trial run with the uncalibrated
    base parameters and shared by every run. Each run then starts again
    from `base_params` and alternates trials with calibration, so later
    columns reflect the accumulated grounding. The receiver is the learner;
    `sender_params` (default: the base itself) stays fixed throughout.
    """
    if trials < 1 or runs < 1:
        raise ValueError("trials and runs must be >= 1")
    if bindings is None:
        bindings = BackendBinding()
    sender = base_params if sender_params is None else sender_params

    sender_views: dict = {}
    initial = run_trial(sender, base_params, figures, bindings,
                        seeds.derive(seed, "initial-trial"), ctx=ctx,
                        transport=transport, raster_hw=raster_hw,
                        _sender_views=sender_views)
    matrix = np.zeros((runs, trials + 1))
    matrix[:, 0] = initial.accuracy
    for r in range(runs):
        current = base_params
        for t in range(1, trials + 1):
            trial_seed = seeds.derive(seed, f"run-{r}-trial", t)
            result = run_trial(sender, current, figures, bindings,
                               trial_seed, ctx=ctx, transport=transport,
                               raster_hw=raster_hw,
                               _sender_views=sender_views)
            matrix[r, t] = result.accuracy
            current, _ = calibrate(current, filter_successes(result),
                                   cfg, ctx.netspec)
    return AccuracySeries(matrix)


def write_series_csv(series: AccuracySeries, path) -> None:
    """CSV rows run,trial,accuracy covering every matrix entry."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("run,trial,accuracy\n")
        for r in range(series.runs):
            for t in range(series.trials + 1):
                fh.write(f"{r},{t},{float(series.matrix[r, t])!r}\n")


def read_series_csv(path) -> AccuracySeries:
    rows = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "run,trial,accuracy":
            raise ValueError(f"unexpected series header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            r, t, a = line.strip().split(",")
            rows[(int(r), int(t))] = float(a)
    runs = max(k[0] for k in rows) + 1
    cols = max(k[1] for k in rows) + 1
    m = np.zeros((runs, cols))
    for (r, t), a in rows.items():
        m[r, t] = a
    return AccuracySeries(m)


# ---------------------------------------------------------- partner memory

class PartnerMemory:
    """Directory of parameter snapshots keyed by partner id.

    Layout: `<root>/<id>/<version>.params` plus `<root>/index.json` holding
    the latest version, content hash, and metadata per partner. Snapshots
    are immutable; storing again writes the next version and retains the
    old file. Unknown partners fall back to the base parameters.
    """

    INDEX_SCHEMA = 1

    def __init__(self, root, base_params: ParameterSet):
        self.root = Path(root)
        self.base_params = base_params
        self.root.mkdir(parents=True, exist_ok=True)
        self._index_path = self.root / "index.json"
        if self._index_path.exists():
            with open(self._index_path, "r", encoding="utf-8") as fh:
                self._index = json.load(fh)
            if self._index.get("schema_version") != self.INDEX_SCHEMA:
                raise ValueError("unsupported partner index schema")
        else:
            self._index = {"schema_version": self.INDEX_SCHEMA, "partners": {}}

    def _write_index(self) -> None:
        tmp = self._index_path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self._index, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, self._index_path)

    def store(self, partner_id: str, params: ParameterSet,
              metadata: dict | None = None) -> str:
        """Persist a snapshot; returns the version tag it was stored under."""
        if not _PARTNER_ID_RE.match(partner_id):
            raise ValueError(f"bad partner id {partner_id!r}")
        entry = self._index["partners"].get(partner_id)
        next_version = 1
        if entry is not None:
            next_version = int(entry["latest"][1:]) + 1
        version = f"v{next_version:04d}"
        pdir = self.root / partner_id
        pdir.mkdir(exist_ok=True)
        tmp = pdir / f"{version}.params.tmp"
        nn.save_params(params, tmp)
        os.replace(tmp, pdir / f"{version}.params")
        self._index["partners"][partner_id] = {
            "latest": version,
            "hash": params.content_hash(),
            **(metadata or {})}
        self._write_index()
        return version

    def retrieve(self, partner_id: str) -> ParameterSet:
        """Latest snapshot for the partner, or the base parameters."""
        entry = self._index["partners"].get(partner_id)
        if entry is None:
            return self.base_params
        path = self.root / partner_id / f"{entry['latest']}.params"
        params = nn.load_params(path)
        if params.content_hash() != entry["hash"]:
            raise SnapshotIntegrityError(
                f"snapshot integrity: index hash mismatch for {partner_id}")
        return params

    def known_partners(self) -> list[str]:
        return sorted(self._index["partners"])


def partner_store(mem: PartnerMemory, partner_id: str,
                  params: ParameterSet) -> PartnerMemory:
    mem.store(partner_id, params)
    return mem


def partner_retrieve(mem: PartnerMemory, partner_id: str) -> ParameterSet:
    return mem.retrieve(partner_id)
