"""Training-set construction: synthesis, noise, masking, and CSV ingestion.

Synthetic sets integrate a registry model on a uniform grid and optionally
corrupt it with seeded multiplicative Gaussian noise (std proportional to the
signal, which keeps compartments of very different magnitudes comparable; an
additive variant scaled by the per-compartment maximum is selectable).
Real cumulative-case files arrive as ``date,S,I,D,R`` CSV.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from datetime import date as _date

import numpy as np

from .integrate import IntegratorConfig, Trajectory, integrate
from .models import CompartmentModel, registry_get

__all__ = [
    "Dataset",
    "NoiseSpec",
    "IngestionError",
    "synthesize",
    "from_trajectory",
    "mask_compartments",
    "ingest_real_csv",
]


class IngestionError(ValueError):
    """Malformed input file; message carries the offending line number."""


@dataclass(frozen=True)
class NoiseSpec:
    """Seeded observation noise. ``level`` is a fraction (0.05 = 5%).

    ``mode`` selects the noise model: ``"multiplicative"`` perturbs each value
    by ``x*(1 + level*z)``; ``"additive_max"`` adds ``level*max|x|*z`` per
    compartment. Both clamp at zero.
    """

    level: float = 0.0
    seed: int = 0
    mode: str = "multiplicative"

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("noise level must be >= 0")
        if self.mode not in ("multiplicative", "additive_max"):
            raise ValueError(f"unknown noise mode {self.mode!r}")


@dataclass
class Dataset:
    """Observations on a time grid with per-compartment visibility flags.

    ``mask[k]`` is True when compartment k is observed on the whole grid;
    ``init_only[k]`` marks hidden compartments whose t0 value is still known.
    ``scale[k]`` is the max-abs value used to normalize that compartment.
    """

    times: np.ndarray
    observations: np.ndarray
    mask: np.ndarray
    init_only: np.ndarray
    scale: np.ndarray
    model_name: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.observations = np.asarray(self.observations, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        self.init_only = np.asarray(self.init_only, dtype=bool)
        self.scale = np.asarray(self.scale, dtype=float)
        if self.observations.shape != (self.times.size, self.mask.size):
            raise ValueError("observations shape must be (times, compartments)")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        observed = self.observations[:, self.mask]
        if observed.size and not np.all(np.isfinite(observed)):
            raise ValueError("observed entries must be finite")
        if np.any(self.scale[self.mask] <= 0):
            raise ValueError("scale must be positive for observed compartments")

    @property
    def n_compartments(self) -> int:
        return self.mask.size

    def normalized(self) -> np.ndarray:
        return self.observations / self.scale

    def hidden_names(self, model: CompartmentModel) -> list[str]:
        return [c for c, m in zip(model.compartments, self.mask) if not m]

    def to_csv(self, path, compartments=None) -> None:
        """Write observations plus a ``<path>.meta.json`` mask sidecar."""
        ncomp = self.observations.shape[1]
        if compartments is None:
            compartments = [f"y{k}" for k in range(ncomp)]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", *compartments])
            for t, row in zip(self.times, self.observations):
                writer.writerow([f"{t:.17g}", *(f"{v:.17g}" for v in row)])
        meta = {
            "model": self.model_name,
            "compartments": list(compartments),
            "hidden": [c for c, m in zip(compartments, self.mask) if not m],
            "init_only": [c for c, f in zip(compartments, self.init_only) if f],
            "scale": [float(s) for s in self.scale],
        }
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)

    @classmethod
    def from_csv(cls, path, model_name="") -> "Dataset":
        traj = Trajectory.from_csv(path, model_name)
        ds = from_trajectory(traj)
        try:
            with open(str(path) + ".meta.json") as fh:
                meta = json.load(fh)
        except FileNotFoundError:
            return ds
        hidden = set(meta.get("hidden", []))
        names = meta.get("compartments", [])
        mask = np.array([c not in hidden for c in names], dtype=bool)
        init_only = np.array([c in set(meta.get("init_only", [])) for c in names])
        scale = np.asarray(meta.get("scale", ds.scale), dtype=float)
        return replace(
            ds, mask=mask, init_only=init_only, scale=scale,
            model_name=meta.get("model", model_name),
        )


def _scales(observations: np.ndarray) -> np.ndarray:
    scale = np.abs(observations).max(axis=0)
    scale[scale == 0.0] = 1.0
    return scale


def from_trajectory(traj: Trajectory) -> Dataset:
    """Wrap a clean trajectory as a fully-observed dataset."""
    ncomp = traj.states.shape[1]
    return Dataset(
        times=traj.times.copy(),
        observations=traj.states.copy(),
        mask=np.ones(ncomp, dtype=bool),
        init_only=np.zeros(ncomp, dtype=bool),
        scale=_scales(traj.states),
        model_name=traj.model_name,
    )


def synthesize(
    model: CompartmentModel,
    p_true: dict,
    y0,
    n_points: int,
    horizon: float,
    noise: NoiseSpec = NoiseSpec(),
    cfg: IntegratorConfig | None = None,
) -> Dataset:
    """Integrate on a uniform grid over [0, horizon] and apply seeded noise.

    Noise is independent across points and compartments; negative results are
    clamped to zero. Normalization scales come from the noisy data.
    """
    if n_points < 2:
        raise ValueError("need at least 2 points")
    grid = np.linspace(0.0, horizon, n_points)
    traj = integrate(model, p_true, y0, grid, cfg)
    obs = traj.states.copy()
    if noise.level > 0:
        rng = np.random.default_rng(noise.seed)
        z = rng.standard_normal(obs.shape)
        if noise.mode == "multiplicative":
            obs = obs * (1.0 + noise.level * z)
        else:
            obs = obs + noise.level * np.abs(obs).max(axis=0) * z
        obs = np.maximum(obs, 0.0)
    return Dataset(
        times=grid,
        observations=obs,
        mask=np.ones(obs.shape[1], dtype=bool),
        init_only=np.zeros(obs.shape[1], dtype=bool),
        scale=_scales(obs),
        model_name=model.name,
    )


def mask_compartments(ds: Dataset, hidden, model: CompartmentModel | None = None) -> Dataset:
    """Hide compartments: observed flag off, t0 value retained (init-only)."""
    model = model or registry_get(ds.model_name)
    hidden = set(hidden)
    unknown = hidden - set(model.compartments)
    if unknown:
        raise KeyError(f"unknown compartment(s) {sorted(unknown)} for {model.name}")
    mask = ds.mask.copy()
    init_only = ds.init_only.copy()
    for k, name in enumerate(model.compartments):
        if name in hidden:
            mask[k] = False
            init_only[k] = True
    return replace(ds, mask=mask, init_only=init_only)


def ingest_real_csv(path, subsample_every: float, train_cutoff: float):
    """Read a ``date,S,I,D,R`` cumulative-case CSV and split train/holdout.

    Time is measured in days from the first row. The training set keeps rows
    with ``t <= train_cutoff`` subsampled to one point per ``subsample_every``
    days (both endpoints included when divisible); everything later is the
    holdout. Returns ``(train, holdout)`` datasets for the SIRD model.
    """
    header_expected = ["date", "S", "I", "D", "R"]
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError("empty file") from None
        if [h.strip() for h in header] != header_expected:
            raise IngestionError(
                f"line 1: expected header {','.join(header_expected)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                day = _date.fromisoformat(row[0].strip())
                values = [float(v) for v in row[1:5]]
                if len(row) != 5:
                    raise ValueError("wrong column count")
            except (ValueError, IndexError) as exc:
                raise IngestionError(f"line {lineno}: {exc}") from None
            rows.append((lineno, day, values))

    if len(rows) < 2:
        raise IngestionError("need at least 2 data rows")
    for (ln_a, day_a, _), (ln_b, day_b, _) in zip(rows, rows[1:]):
        if day_b <= day_a:
            raise IngestionError(f"line {ln_b}: dates must be strictly increasing")

    day0 = rows[0][1]
    times = np.array([(day - day0).days for _, day, _ in rows], dtype=float)
    # CSV column order S,I,D,R matches the SIRD compartment order
    values = np.array([vals for _, _, vals in rows], dtype=float)
    values = values[:, [0, 1, 2, 3]]

    in_train = (times <= train_cutoff) & (np.mod(times, subsample_every) == 0)
    in_holdout = times > train_cutoff
    if in_train.sum() < 2:
        raise IngestionError("training window selects fewer than 2 points")

    def build(sel):
        obs = values[sel]
        return Dataset(
            times=times[sel],
            observations=obs,
            mask=np.ones(4, dtype=bool),
            init_only=np.zeros(4, dtype=bool),
            scale=_scales(obs) if obs.size else np.ones(4),
            model_name="covid_sird",
        )

    train = build(in_train)
    holdout = build(in_holdout) if in_holdout.any() else Dataset(
        times=np.empty(0),
        observations=np.empty((0, 4)),
        mask=np.ones(4, dtype=bool),
        init_only=np.zeros(4, dtype=bool),
        scale=np.ones(4),
        model_name="covid_sird",
    )
    return train, holdout
