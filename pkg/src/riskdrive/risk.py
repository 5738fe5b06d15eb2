"""Runtime risk cues and their fusion into a single intrusion risk score.

Three cues: curvature mismatch (actuation integrity), time-to-collision
proximity, and LiDAR distribution shift (Mahalanobis against a clean-data
model).  Fusion is a weighted Noisy-OR so any single confident cue can
raise the score on its own.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import IrsConfig

CUE_NAMES = ("CURV", "TTC", "OOD")


class OodFitError(ValueError):
    """Raised when the clean-scan set cannot support a covariance fit."""


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def curvature_cue(kappa_plan: float, kappa_exec: float, cfg: IrsConfig) -> float:
    """Rectified logistic of the normalized plan/execute curvature mismatch.

    Zero mismatch maps to zero risk (plain logistic would give 0.5).
    """
    x = abs(kappa_plan - kappa_exec) / cfg.kappa_max
    return 2.0 * _logistic(cfg.curvature_gain * x) - 1.0


def ttc_cue(d: float, v: float, cfg: IrsConfig) -> float:
    """exp(-d / (tau * v)): near 1 when contact is imminent."""
    return math.exp(-d / (cfg.tau_ttc_s * max(v, cfg.eps_closing)))


@dataclass
class OodModel:
    mean: np.ndarray                # (72,)
    cov: np.ndarray                 # (72, 72) raw sample covariance
    eps_reg: float
    center: float                   # calibration center of Mahalanobis distance
    scale: float                    # calibration scale, > 0
    _chol: np.ndarray = None        # Cholesky of regularized covariance

    def __post_init__(self) -> None:
        if self._chol is None:
            reg = self.cov + self.eps_reg * np.eye(len(self.mean))
            self._chol = np.linalg.cholesky(reg)

    def mahalanobis(self, z: np.ndarray) -> float:
        y = np.linalg.solve(self._chol, np.asarray(z, float) - self.mean)
        return float(np.sqrt(y @ y))

    def save(self, path: str | Path) -> None:
        payload = {
            "format": "riskdrive-ood",
            "version": 1,
            "mean": self.mean.tolist(),
            "cov": self.cov.tolist(),
            "eps_reg": self.eps_reg,
            "center": self.center,
            "scale": self.scale,
        }
        Path(path).write_text(json.dumps(payload))

    @classmethod
    def load(cls, path: str | Path) -> "OodModel":
        payload = json.loads(Path(path).read_text())
        if payload.get("format") != "riskdrive-ood":
            raise ValueError(f"{path}: not an OOD model artifact")
        return cls(mean=np.array(payload["mean"]),
                   cov=np.array(payload["cov"]),
                   eps_reg=payload["eps_reg"],
                   center=payload["center"],
                   scale=payload["scale"])


def fit_ood_model(clean_scans: np.ndarray,
                  eps_reg: float | None = None) -> OodModel:
    """Fit mean/covariance of clean scans with Tikhonov regularization.

    Calibration maps Mahalanobis distance onto a logistic via robust
    center (median) and scale (IQR / 1.349) of the fit-set distances.
    By default eps_reg is scale-aware: 1e-3 * trace(cov) / dim, floored
    at 1e-6 for degenerate data.
    """
    scans = np.asarray(clean_scans, float)
    if scans.ndim != 2 or scans.shape[0] < 2:
        raise OodFitError("need at least 2 clean scans")
    dim = scans.shape[1]
    mean = scans.mean(axis=0)
    cov = np.cov(scans, rowvar=False, bias=False)
    if eps_reg is None:
        eps_reg = max(1e-3 * float(np.trace(cov)) / dim, 1e-6)
    try:
        model = OodModel(mean=mean, cov=cov, eps_reg=eps_reg,
                         center=0.0, scale=1.0)
    except np.linalg.LinAlgError:
        try:
            model = OodModel(mean=mean, cov=cov, eps_reg=eps_reg * 10.0,
                             center=0.0, scale=1.0)
        except np.linalg.LinAlgError as exc:
            raise OodFitError("regularized covariance is not positive definite") from exc
    dists = np.array([model.mahalanobis(z) for z in scans])
    q25, q50, q75 = np.percentile(dists, [25, 50, 75])
    scale = max((q75 - q25) / 1.349, 1e-6)
    model.center = float(q50)
    model.scale = float(scale)
    return model


def ood_cue(z: np.ndarray, model: OodModel) -> float:
    d = model.mahalanobis(z)
    return _logistic((d - model.center) / model.scale)


@dataclass(frozen=True)
class RiskAssessment:
    irs: float
    cues: tuple[float, float, float]    # (curv, ttc, ood)
    dominant: int                       # index into CUE_NAMES
    raw: tuple[float, float, float, float, float]  # k_plan, k_exec, d, v, mahal


def fuse_irs(cues: tuple[float, float, float], cfg: IrsConfig,
             raw: tuple[float, float, float, float, float] = (0, 0, 0, 0, 0),
             ) -> RiskAssessment:
    """Noisy-OR fusion; dominant cue is argmax of the weighted contributions."""
    w = cfg.effective_weights()
    contrib = [wi * ri for wi, ri in zip(w, cues)]
    irs = 1.0
    for c in contrib:
        irs *= (1.0 - c)
    irs = 1.0 - irs
    dominant = int(np.argmax(contrib))
    return RiskAssessment(irs=irs, cues=tuple(cues), dominant=dominant, raw=raw)


def assess(observation, model: OodModel | None, cfg: IrsConfig) -> RiskAssessment:
    """Compute all cues from an Observation's diagnostics and scan."""
    k_plan, k_exec, d, v = observation.diagnostics
    r_curv = 0.0 if cfg.disable_curv else curvature_cue(k_plan, k_exec, cfg)
    r_ttc = 0.0 if cfg.disable_ttc else ttc_cue(d, v, cfg)
    mahal = 0.0
    r_ood = 0.0
    if model is not None and not cfg.disable_ood:
        mahal = model.mahalanobis(observation.lidar)
        r_ood = _logistic((mahal - model.center) / model.scale)
    return fuse_irs((r_curv, r_ttc, r_ood), cfg,
                    raw=(k_plan, k_exec, d, v, mahal))
