"""Run records: per-decoder losses and gains, and the objective-study result.

Reports serialize as one ``key = value`` metric per line so they diff cleanly
and reruns with the same seed are byte-identical.  Wall-clock timings are
deliberately kept out of the serialized form; the CLI logs them to stderr.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _fmt(x: float) -> str:
    return repr(float(x))


@dataclass(frozen=True)
class DecoderRow:
    """Losses of one decoder on the raw and on the denoised matrix."""

    name: str
    loss_direct: float
    loss_denoised: float
    clamps_direct: int | None = None
    clamps_denoised: int | None = None
    error: str | None = None

    @property
    def gain(self) -> float:
        if self.loss_denoised == 0.0:
            return 0.0 if self.loss_direct == 0.0 else float("inf")
        return self.loss_direct / self.loss_denoised - 1.0

    def __post_init__(self):
        if self.error is None and (self.loss_direct < 0.0 or self.loss_denoised < 0.0):
            raise ValueError("losses must be nonnegative")


@dataclass
class RunReport:
    """One denoise-and-decode run over a single input matrix."""

    dataset: str
    n: int
    seed: int
    delta_method: str
    delta_samples: int
    delta_seed: int | None
    delta_input: float
    delta_denoised: float
    encoder_loss: float
    rows: list[DecoderRow] = field(default_factory=list)
    wall_times: dict[str, float] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"dataset = {self.dataset}",
            f"n = {self.n}",
            f"seed = {self.seed}",
            f"delta_method = {self.delta_method}",
            f"delta_samples = {self.delta_samples}",
            f"delta_seed = {'' if self.delta_seed is None else self.delta_seed}",
            f"delta_input = {_fmt(self.delta_input)}",
            f"delta_denoised = {_fmt(self.delta_denoised)}",
            f"encoder_loss = {_fmt(self.encoder_loss)}",
            f"decoders = {','.join(r.name for r in self.rows)}",
        ]
        for r in self.rows:
            if r.error is not None:
                lines.append(f"{r.name}.error = {r.error}")
                continue
            lines.append(f"{r.name}.loss_direct = {_fmt(r.loss_direct)}")
            lines.append(f"{r.name}.loss_denoised = {_fmt(r.loss_denoised)}")
            lines.append(f"{r.name}.gain = {_fmt(r.gain)}")
            if r.clamps_direct is not None:
                lines.append(f"{r.name}.clamps_direct = {r.clamps_direct}")
                lines.append(f"{r.name}.clamps_denoised = {r.clamps_denoised}")
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict[str, str]:
    """Inverse of RunReport.to_text at the key/value level."""
    out: dict[str, str] = {}
    for line in text.splitlines():
        if " = " in line:
            key, val = line.split(" = ", 1)
            out[key.strip()] = val.strip()
    return out


@dataclass
class ObjectiveStudyResult:
    """Topology recovery under the distance-fit and clan-size objectives.

    ``scatter`` holds one row per trial with the four ground-truth distances
    in the order: l2 fit on distance measurements, Dasgupta fit on distance
    measurements, l2 fit on clan-size measurements, Dasgupta fit on clan-size
    measurements.
    """

    n: int
    trials: int
    pool_size: int
    scatter: np.ndarray

    def __post_init__(self):
        self.scatter = np.asarray(self.scatter, dtype=np.float64)
        if self.scatter.shape != (self.trials, 4):
            raise ValueError(f"scatter shape {self.scatter.shape} != ({self.trials}, 4)")
        if self.scatter.size and self.scatter.min() < 0.0:
            raise ValueError("tree distances must be nonnegative")

    @property
    def means(self) -> dict[str, float]:
        m = self.scatter.mean(axis=0)
        return {
            "l2_fit_on_distances": float(m[0]),
            "dasgupta_fit_on_distances": float(m[1]),
            "l2_fit_on_clan_sizes": float(m[2]),
            "dasgupta_fit_on_clan_sizes": float(m[3]),
        }

    def to_text(self) -> str:
        lines = [
            f"n = {self.n}",
            f"trials = {self.trials}",
            f"pool_size = {self.pool_size}",
        ]
        lines += [f"mean.{k} = {_fmt(v)}" for k, v in self.means.items()]
        lines.append("trial\tl2_on_dist\tdasg_on_dist\tl2_on_clan\tdasg_on_clan")
        for t, row in enumerate(self.scatter):
            lines.append(f"{t}\t" + "\t".join(_fmt(x) for x in row))
        return "\n".join(lines) + "\n"
