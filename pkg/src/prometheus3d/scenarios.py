"""Canned test scenarios: occlusion taxonomy cases and a seeded swarm.

Each builder returns the true trajectories, the scene to render, and the
pipeline parameters suited to that scene (linking radii derived from the
rendered blur scale). The occlusion cases are constructed geometrically:
the direction that moves a target while keeping its image (nearly) fixed
in two chosen views is the null direction of their stacked projection
Jacobians.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterValidationError
from .geometry import CameraModel, make_lookat_camera, project
from .synth import GroundTruthTrajectory, SceneConfig, smooth_trajectory, upsample_double


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    trajectories: list[GroundTruthTrajectory]
    scene: SceneConfig
    params: dict[str, str] = field(default_factory=dict)


def default_rig(
    distance: float = 6.0,
    focal_length_px: float = 1100.0,
    sensor_size: tuple[int, int] = (640, 480),
) -> tuple[CameraModel, ...]:
    """Three cameras on a ring looking at the origin.

    Views 1 and 3 are 30 degrees apart so that a target pair aligned with
    their common depth direction occludes in both; view 2 sits broadside
    and keeps the pair separated.
    """
    spots = [(np.deg2rad(75.0), 0.5), (np.deg2rad(180.0), 1.0), (np.deg2rad(105.0), -0.4)]
    return tuple(
        make_lookat_camera(
            (distance * np.cos(a), distance * np.sin(a), z),
            focal_length_px=focal_length_px,
            sensor_size=sensor_size,
        )
        for a, z in spots
    )


def world_blur_radius(scene: SceneConfig, center=(0.0, 0.0, 0.0)) -> float:
    """Rendered blur sigma converted to world units at the scene center."""
    center = np.asarray(center, dtype=float)
    depths = [np.linalg.norm(cam.center - center) for cam in scene.rig]
    f = scene.rig[0].focal_length_px
    return scene.gaussian_sigma_px * float(np.mean(depths)) / f


def projection_jacobian(cam: CameraModel, X: np.ndarray) -> np.ndarray:
    """2x3 derivative of the pixel coordinates with respect to the world point."""
    xc = cam.rotation @ X + cam.translation
    z = xc[2]
    f = cam.focal_length_px
    du = f * (cam.rotation[0] * z - xc[0] * cam.rotation[2]) / (z * z)
    dv = f * (cam.rotation[1] * z - xc[1] * cam.rotation[2]) / (z * z)
    return np.vstack([du, dv])


def occlusion_direction(cam_a: CameraModel, cam_b: CameraModel, X) -> np.ndarray:
    """Unit direction of least combined image motion in the two views."""
    X = np.asarray(X, dtype=float)
    J = np.vstack([projection_jacobian(cam_a, X), projection_jacobian(cam_b, X)])
    _, _, vt = np.linalg.svd(J)
    d = vt[-1]
    if d[np.argmax(np.abs(d))] < 0:
        d = -d
    return d


def image_distance(cam: CameraModel, a, b) -> float:
    pa = project(cam, np.asarray(a, dtype=float))
    pb = project(cam, np.asarray(b, dtype=float))
    if pa is None or pb is None:
        return np.inf
    return float(np.hypot(pa.u - pb.u, pa.v - pb.v))


def _base_params(scene: SceneConfig) -> dict[str, str]:
    blur = world_blur_radius(scene)
    r_static = 3.0 * blur
    return {
        "link.r_static": repr(r_static),
        "link.r_dynamic": repr(5.0 * blur),
        "link.sigma_w": repr(r_static / 2.0),
        "evaluate.match_radius": repr(3.0 * blur),
    }


def _static_scenario(name, offsets, rig, noise_sigma=0.0) -> Scenario:
    scene = SceneConfig(rig=rig, noise_sigma=noise_sigma, frame_count=1)
    trajs = [
        GroundTruthTrajectory(i, np.array([0]), np.asarray([off], dtype=float))
        for i, off in enumerate(offsets)
    ]
    params = _base_params(scene)
    params["background.mode"] = "constant"
    return Scenario(name, trajs, scene, params)


def fig1a(seed: int = 0, **_) -> Scenario:
    """Two targets, single frame, well separated in 3D and in every view."""
    rig = default_rig()
    return _static_scenario("fig1a", [(0.0, 0.0, 0.3), (0.0, 0.0, -0.3)], rig)


def fig1b(seed: int = 0, **_) -> Scenario:
    """Two targets separated in 3D but optically merged in views 1 and 3."""
    rig = default_rig()
    d = occlusion_direction(rig[0], rig[2], (0.0, 0.0, 0.0))
    a = np.array([0.0, 0.0, 0.0])
    b = a + 0.09 * d
    return _static_scenario("fig1b", [a, b], rig)


def fig1c(seed: int = 0, **_) -> Scenario:
    """Two targets in real 3D proximity: occluded in all three views."""
    rig = default_rig()
    a = np.array([0.0, 0.0, 0.0])
    b = a + 0.012 * np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
    return _static_scenario("fig1c", [a, b], rig)


def _linear_track(tid, start, stop, frames) -> GroundTruthTrajectory:
    t = np.linspace(0.0, 1.0, frames)[:, None]
    pos = np.asarray(start, dtype=float)[None, :] * (1 - t) + np.asarray(
        stop, dtype=float
    )[None, :] * t
    return GroundTruthTrajectory(tid, np.arange(frames), pos)


def fig2(seed: int = 0, frames: int | None = None, **_) -> Scenario:
    """Two crossing tracks: optical occlusion in views 1 and 3 only.

    The second track is displaced along the views-1/3 occlusion direction,
    so the images cross while the 3D separation never drops below ten times
    the reconstruction blur.
    """
    frames = 61 if frames is None else frames
    rig = default_rig()
    d = occlusion_direction(rig[0], rig[2], (0.0, 0.0, 0.0))
    off = 0.12 * d
    trajs = [
        _linear_track(0, (-0.5, 0.0, 0.0), (0.5, 0.0, 0.0), frames),
        _linear_track(1, np.array((0.5, 0.0, 0.0)) + off, np.array((-0.5, 0.0, 0.0)) + off, frames),
    ]
    scene = SceneConfig(rig=rig, frame_count=frames)
    return Scenario("fig2", trajs, scene, _base_params(scene))


def _meeting_tracks(frames: int, hold: int, gap: float, rig) -> list[GroundTruthTrajectory]:
    """Two tracks that converge, travel together `hold` frames at 3D
    distance `gap`, then separate. Occludes in every view while together."""
    approach = (frames - hold) // 2
    leave = frames - hold - approach
    y0 = 0.22

    def track(tid, sign):
        ys = np.concatenate(
            [
                np.linspace(sign * y0, sign * gap / 2.0, approach, endpoint=False),
                np.full(hold, sign * gap / 2.0),
                np.linspace(sign * gap / 2.0, sign * y0, leave + 1)[1:],
            ]
        )
        xs = np.linspace(-0.4, 0.4, frames)
        pos = np.stack([xs, ys, np.zeros(frames)], axis=1)
        return GroundTruthTrajectory(tid, np.arange(frames), pos)

    return [track(0, -1.0), track(1, 1.0)]


def fig3(seed: int = 0, frames: int | None = None, **_) -> Scenario:
    """Brief 3D proximity: merged for ~3 frames, split by spectral clustering."""
    frames = 61 if frames is None else frames
    rig = default_rig()
    scene = SceneConfig(rig=rig, frame_count=frames)
    trajs = _meeting_tracks(frames, hold=3, gap=0.012, rig=rig)
    return Scenario("fig3", trajs, scene, _base_params(scene))


def fig5(seed: int = 0, frames: int | None = None, **_) -> Scenario:
    """Long-term 3D proximity: characterization case, no correctness claim."""
    frames = 101 if frames is None else frames
    rig = default_rig()
    scene = SceneConfig(rig=rig, frame_count=frames)
    trajs = _meeting_tracks(frames, hold=40, gap=0.012, rig=rig)
    return Scenario("fig5", trajs, scene, _base_params(scene))


def swarm(
    seed: int = 0,
    frames: int | None = None,
    targets: int | None = None,
    **_,
) -> Scenario:
    """Seeded swarm of smooth random walks, smoothed and rate-doubled."""
    frames = 200 if frames is None else frames
    targets = 42 if targets is None else targets
    rig = default_rig()
    raw_n = frames // 2 + 1
    if raw_n < 8:
        raise ParameterValidationError("swarm needs at least 14 frames")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 94]))
    box = np.array([0.55, 0.55, 0.3])
    trajs = []
    for tid in range(targets):
        x = rng.uniform(-0.85, 0.85, 3) * box
        v = np.zeros(3)
        pts = [x.copy()]
        for _ in range(raw_n - 1):
            v = 0.9 * v + rng.normal(0.0, 0.008, 3) - 0.004 * x
            speed = np.linalg.norm(v)
            if speed > 0.034:
                v *= 0.034 / speed
            x = x + v
            for k in range(3):
                if x[k] > box[k]:
                    x[k] = 2 * box[k] - x[k]
                    v[k] = -v[k]
                elif x[k] < -box[k]:
                    x[k] = -2 * box[k] - x[k]
                    v[k] = -v[k]
            pts.append(x.copy())
        traj = GroundTruthTrajectory(tid, np.arange(raw_n), np.array(pts))
        traj = upsample_double(smooth_trajectory(traj, 7))
        trajs.append(
            GroundTruthTrajectory(tid, traj.frames[:frames], traj.positions[:frames])
        )
    scene = SceneConfig(rig=rig, frame_count=frames)
    params = _base_params(scene)
    params["background.threshold"] = "80"
    return Scenario("swarm", trajs, scene, params)


SCENARIOS: dict[str, Callable[..., Scenario]] = {
    "fig1a": fig1a,
    "fig1b": fig1b,
    "fig1c": fig1c,
    "fig2": fig2,
    "fig3": fig3,
    "fig5": fig5,
    "swarm": swarm,
}


def build_scenario(name: str, seed: int = 0, **kwargs) -> Scenario:
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise ParameterValidationError(
            f"unknown scenario {name!r}; known: {', '.join(sorted(SCENARIOS))}"
        ) from None
    return builder(seed=seed, **kwargs)


def merge_distance_px(scene: SceneConfig, threshold: float) -> float:
    """Image distance below which two rendered discs join into one blob."""
    ratio = scene.peak_intensity / max(threshold, 1.0)
    if ratio <= 1.0:
        return 0.0
    return 2.0 * scene.gaussian_sigma_px * float(np.sqrt(2.0 * np.log(ratio)))


def all_camera_occluded_targets(
    trajectories: Sequence[GroundTruthTrajectory],
    rig: Sequence[CameraModel],
    merge_px: float,
) -> set[int]:
    """Target ids that are, at some frame, occluded in all three views.

    A target counts as occluded in a view when another target's projected
    center lies within merge_px, or when it does not project cleanly into
    the sensor.
    """
    if not trajectories:
        return set()
    first = min(int(t.frames[0]) for t in trajectories)
    last = max(int(t.frames[-1]) for t in trajectories)
    occluded: set[int] = set()
    for frame in range(first, last + 1):
        live = [
            (t.target_id, t.positions[frame - int(t.frames[0])])
            for t in trajectories
            if t.frames[0] <= frame <= t.frames[-1]
        ]
        for cam in rig:
            pts = {}
            bad = set()
            for tid, pos in live:
                p = project(cam, pos)
                if p is None or not (
                    0 <= p.u <= cam.width - 1 and 0 <= p.v <= cam.height - 1
                ):
                    bad.add(tid)
                else:
                    pts[tid] = (p.u, p.v)
            per_view = set(bad)
            ids = list(pts)
            for i, ta in enumerate(ids):
                for tb in ids[i + 1 :]:
                    d = np.hypot(
                        pts[ta][0] - pts[tb][0], pts[ta][1] - pts[tb][1]
                    )
                    if d <= merge_px:
                        per_view.add(ta)
                        per_view.add(tb)
            if cam is rig[0]:
                frame_occluded = per_view
            else:
                frame_occluded &= per_view
        occluded |= frame_occluded
    return occluded
