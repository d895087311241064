"""Synthetic scene generation with exact ground truth.

Targets are small spheres rendered as Gaussian-profile discs in each view.
Input trajectories can be smoothed (centered moving average) and upsampled
(frame-rate doubling by midpoint interpolation) before rendering, mirroring
how semi-natural test data is prepared from real tracks.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import pgm
from .errors import ParameterValidationError, TooShortTrajectoryError
from .geometry import CameraModel, project, save_rig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GroundTruthTrajectory:
    """One target's true path: contiguous frames and 3D positions."""

    target_id: int
    frames: np.ndarray  # (n,) int64, consecutive
    positions: np.ndarray  # (n, 3) float64

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.int64)
        positions = np.asarray(self.positions, dtype=np.float64).reshape(-1, 3)
        if len(frames) != len(positions):
            raise ParameterValidationError("frames/positions length mismatch")
        if len(frames) == 0:
            raise ParameterValidationError("empty trajectory")
        if len(frames) > 1 and not np.all(np.diff(frames) == 1):
            raise ParameterValidationError("frame indices must be consecutive")
        frames.setflags(write=False)
        positions.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "positions", positions)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True, eq=False)
class SceneConfig:
    """Rendering parameters shared by all frames of a synthetic scene."""

    rig: tuple[CameraModel, ...]
    target_radius: float = 0.01
    gaussian_sigma_px: float = 1.5
    peak_intensity: int = 230
    background_intensity: int = 20
    noise_sigma: float = 3.0
    frame_count: int = 1

    def __post_init__(self):
        if len(self.rig) != 3:
            raise ParameterValidationError("scene requires exactly 3 cameras")
        if not self.peak_intensity > self.background_intensity:
            raise ParameterValidationError("peak intensity must exceed background")
        if self.frame_count < 1:
            raise ParameterValidationError("frame_count must be >= 1")
        if self.gaussian_sigma_px <= 0:
            raise ParameterValidationError("gaussian_sigma_px must be positive")


def smooth_trajectory(
    traj: GroundTruthTrajectory, window: int = 7
) -> GroundTruthTrajectory:
    """Centered moving average; endpoints use the truncated symmetric window."""
    if window < 1 or window % 2 == 0:
        raise ParameterValidationError("window must be odd and >= 1")
    n = len(traj)
    if n < window:
        raise TooShortTrajectoryError(
            f"trajectory has {n} samples, needs >= {window}"
        )
    half = window // 2
    out = np.empty_like(traj.positions)
    for i in range(n):
        h = min(half, i, n - 1 - i)
        out[i] = traj.positions[i - h : i + h + 1].mean(axis=0)
    return GroundTruthTrajectory(traj.target_id, traj.frames.copy(), out)


def upsample_double(traj: GroundTruthTrajectory) -> GroundTruthTrajectory:
    """Double the frame rate: 2n-1 samples, odd outputs are midpoints."""
    n = len(traj)
    if n < 2:
        raise TooShortTrajectoryError("upsampling needs at least 2 samples")
    pos = np.empty((2 * n - 1, 3))
    pos[0::2] = traj.positions
    pos[1::2] = 0.5 * (traj.positions[:-1] + traj.positions[1:])
    first = 2 * int(traj.frames[0])
    frames = np.arange(first, first + 2 * n - 1, dtype=np.int64)
    return GroundTruthTrajectory(traj.target_id, frames, pos)


def render_frame(
    scene: SceneConfig,
    positions: Sequence[np.ndarray],
    frame_index: int = 0,
    seed: int | None = None,
) -> list[np.ndarray]:
    """Render one frame in all three views.

    Each visible target adds peak * exp(-d^2 / (2 sigma^2)) around its
    projected center; overlapping targets composite by per-pixel maximum
    (opaque bodies). Sensor noise is Gaussian, seeded per (camera, frame).
    """
    for p in positions:
        if not np.all(np.isfinite(p)):
            raise ParameterValidationError("target positions must be finite")
    sigma = scene.gaussian_sigma_px
    cutoff = int(np.ceil(5.0 * sigma))
    images = []
    for ci, cam in enumerate(scene.rig):
        w, h = cam.sensor_size
        contrib = np.zeros((h, w))
        for pos in positions:
            pt = project(cam, np.asarray(pos, dtype=float))
            if pt is None:
                continue
            if not (0.0 <= pt.u <= w - 1 and 0.0 <= pt.v <= h - 1):
                continue
            u0 = max(0, int(np.floor(pt.u)) - cutoff)
            u1 = min(w, int(np.floor(pt.u)) + cutoff + 2)
            v0 = max(0, int(np.floor(pt.v)) - cutoff)
            v1 = min(h, int(np.floor(pt.v)) + cutoff + 2)
            uu = np.arange(u0, u1, dtype=float)
            vv = np.arange(v0, v1, dtype=float)
            d2 = (uu[None, :] - pt.u) ** 2 + (vv[:, None] - pt.v) ** 2
            blob = scene.peak_intensity * np.exp(-d2 / (2.0 * sigma * sigma))
            np.maximum(contrib[v0:v1, u0:u1], blob, out=contrib[v0:v1, u0:u1])
        img = scene.background_intensity + contrib
        if scene.noise_sigma > 0:
            rng = np.random.default_rng(
                np.random.SeedSequence([0 if seed is None else seed, ci, frame_index])
            )
            img = img + rng.normal(0.0, scene.noise_sigma, size=img.shape)
        images.append(np.clip(np.rint(img), 0, 255).astype(np.uint8))
    return images


def positions_at_frame(
    trajectories: Sequence[GroundTruthTrajectory], frame: int
) -> list[np.ndarray]:
    out = []
    for traj in trajectories:
        if traj.frames[0] <= frame <= traj.frames[-1]:
            out.append(traj.positions[frame - int(traj.frames[0])])
    return out


def write_ground_truth(path, trajectories: Sequence[GroundTruthTrajectory]) -> None:
    """CSV `frame,target_id,x,y,z`; floats written with full precision."""
    rows = []
    for traj in trajectories:
        for f, p in zip(traj.frames, traj.positions):
            rows.append((int(f), int(traj.target_id), p))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w") as fh:
        fh.write("frame,target_id,x,y,z\n")
        for f, tid, p in rows:
            fh.write(f"{f},{tid},{p[0]!r},{p[1]!r},{p[2]!r}\n")


def read_ground_truth(path) -> list[GroundTruthTrajectory]:
    """Inverse of write_ground_truth; exact float round-trip."""
    by_target: dict[int, list[tuple[int, float, float, float]]] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "frame,target_id,x,y,z":
            raise ParameterValidationError(f"unexpected ground truth header: {header}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            f, tid, x, y, z = line.split(",")
            by_target.setdefault(int(tid), []).append(
                (int(f), float(x), float(y), float(z))
            )
    out = []
    for tid in sorted(by_target):
        samples = sorted(by_target[tid])
        frames = np.array([s[0] for s in samples], dtype=np.int64)
        pos = np.array([[s[1], s[2], s[3]] for s in samples])
        out.append(GroundTruthTrajectory(tid, frames, pos))
    return out


def generate_scene(
    trajectories: Sequence[GroundTruthTrajectory],
    scene: SceneConfig,
    seed: int,
    out_dir,
) -> Path:
    """Render all frames to `out_dir` and export ground truth and rig.

    The ground truth file is written before any rendering so evaluation
    never depends on pipeline outputs. Returns the output directory.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for traj in trajectories:
        if traj.frames[0] < 0 or traj.frames[-1] >= scene.frame_count:
            raise ParameterValidationError(
                f"trajectory {traj.target_id} extends outside [0, {scene.frame_count})"
            )

    write_ground_truth(out / "ground_truth.csv", trajectories)
    save_rig(out / "rig.txt", scene.rig)

    cam_dirs = []
    for ci in range(3):
        d = out / f"cam{ci + 1}"
        d.mkdir(exist_ok=True)
        cam_dirs.append(d)

    for frame in range(scene.frame_count):
        images = render_frame(
            scene, positions_at_frame(trajectories, frame), frame, seed
        )
        for ci, img in enumerate(images):
            pgm.write_pgm(cam_dirs[ci] / f"frame_{frame:06d}.pgm", img)
    logger.info("rendered %d frames x 3 views to %s", scene.frame_count, out)
    return out
