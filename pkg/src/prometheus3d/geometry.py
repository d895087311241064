"""Pinhole camera algebra: projection, epipolar lines, trifocal transfer,
three-view triangulation.

Conventions: world frame is right-handed with z up; the camera frame has
x right, y down, z forward along the optical axis. ``rotation`` maps world
to camera coordinates, so a world point X lands at ``R @ X + t`` in the
camera frame and projects through ``K = [[f, 0, cx], [0, f, cy], [0, 0, 1]]``.
Image coordinates (u, v) are in pixels with pixel centers on the integer
grid, u along columns and v along rows.

All values are immutable after construction and all operations are pure
functions, so everything here is safe to call from concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    ParallelRaysError,
    ParameterValidationError,
    UnstableTransferError,
)

# Degeneracy tolerances; overridable per call.
COLLINEARITY_TOL = 1e-9
PARALLEL_RAYS_TOL = 1e-9
TRANSFER_RANK_TOL = 1e-12

WorldPoint = np.ndarray  # shape (3,), meters


@dataclass(frozen=True, eq=False)
class ImagePoint:
    """Pixel location in one view; camera_index is -1 when unbound."""

    u: float
    v: float
    camera_index: int = -1

    def homogeneous(self) -> np.ndarray:
        return np.array([self.u, self.v, 1.0])


@dataclass(frozen=True, eq=False)
class Ray:
    """Half-line in the world frame; direction must be unit length."""

    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float)
        direction = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
            raise ParameterValidationError("ray direction must be unit length")
        object.__setattr__(self, "origin", _frozen(origin))
        object.__setattr__(self, "direction", _frozen(direction))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Calibrated pinhole camera.

    Attributes:
        focal_length_px: focal length in pixels (square pixels).
        principal_point: (cx, cy) in pixels, inside the sensor.
        rotation: 3x3 orthonormal world-to-camera rotation.
        translation: world-to-camera translation in meters.
        sensor_size: (width, height) in pixels.
    """

    focal_length_px: float
    principal_point: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    sensor_size: tuple[int, int]

    # Derived, filled in __post_init__.
    K: np.ndarray = field(init=False, repr=False)
    P: np.ndarray = field(init=False, repr=False)
    center: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        pp = np.asarray(self.principal_point, dtype=float).reshape(2)
        w, h = (int(self.sensor_size[0]), int(self.sensor_size[1]))
        f = float(self.focal_length_px)

        if f <= 0:
            raise ParameterValidationError("focal length must be positive")
        if w <= 0 or h <= 0:
            raise ParameterValidationError("sensor dimensions must be positive")
        if np.max(np.abs(R.T @ R - np.eye(3))) >= 1e-9:
            raise ParameterValidationError("rotation is not orthonormal")
        if not (0.0 <= pp[0] <= w - 1 and 0.0 <= pp[1] <= h - 1):
            raise ParameterValidationError("principal point outside sensor")

        K = np.array([[f, 0.0, pp[0]], [0.0, f, pp[1]], [0.0, 0.0, 1.0]])
        object.__setattr__(self, "focal_length_px", f)
        object.__setattr__(self, "principal_point", _frozen(pp))
        object.__setattr__(self, "rotation", _frozen(R))
        object.__setattr__(self, "translation", _frozen(t))
        object.__setattr__(self, "sensor_size", (w, h))
        object.__setattr__(self, "K", _frozen(K))
        object.__setattr__(self, "P", _frozen(K @ np.hstack([R, t[:, None]])))
        object.__setattr__(self, "center", _frozen(-R.T @ t))

    @property
    def width(self) -> int:
        return self.sensor_size[0]

    @property
    def height(self) -> int:
        return self.sensor_size[1]

    def back_project_matrix(self) -> np.ndarray:
        """R^T K^{-1}: maps homogeneous pixels to world ray directions."""
        return self.rotation.T @ np.linalg.inv(self.K)


@dataclass(frozen=True, eq=False)
class TrifocalTensor:
    """Three-view tensor; slices[i] is the 3x3 matrix contracted with the
    i-th homogeneous coordinate of the view-1 point."""

    slices: np.ndarray  # (3, 3, 3)

    def __post_init__(self):
        s = np.asarray(self.slices, dtype=float).reshape(3, 3, 3)
        object.__setattr__(self, "slices", _frozen(s))


def make_lookat_camera(
    position,
    target=(0.0, 0.0, 0.0),
    up=(0.0, 0.0, 1.0),
    focal_length_px: float = 1100.0,
    sensor_size: tuple[int, int] = (640, 480),
    principal_point=None,
) -> CameraModel:
    """Build a camera at ``position`` whose optical axis points at ``target``."""
    position = np.asarray(position, dtype=float)
    target = np.asarray(target, dtype=float)
    up = np.asarray(up, dtype=float)

    forward = target - position
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise ParameterValidationError("camera position coincides with target")
    z_c = forward / norm
    x_c = np.cross(-up, z_c)
    nx = np.linalg.norm(x_c)
    if nx < 1e-12:
        raise ParameterValidationError("optical axis parallel to up vector")
    x_c /= nx
    y_c = np.cross(z_c, x_c)
    R = np.vstack([x_c, y_c, z_c])
    if principal_point is None:
        principal_point = (sensor_size[0] / 2.0, sensor_size[1] / 2.0)
    return CameraModel(
        focal_length_px=focal_length_px,
        principal_point=np.asarray(principal_point, dtype=float),
        rotation=R,
        translation=-R @ position,
        sensor_size=sensor_size,
    )


def project(camera: CameraModel, point) -> Optional[ImagePoint]:
    """Project a world point; returns None when it is behind the camera."""
    X = np.asarray(point, dtype=float)
    xc = camera.rotation @ X + camera.translation
    if xc[2] <= 0.0:
        return None
    u = camera.focal_length_px * xc[0] / xc[2] + camera.principal_point[0]
    v = camera.focal_length_px * xc[1] / xc[2] + camera.principal_point[1]
    return ImagePoint(u, v)


def project_batch(camera: CameraModel, points: np.ndarray):
    """Vectorized projection.

    Returns (uv, depth): uv is (N, 2); rows with depth <= 0 are NaN.
    """
    X = np.asarray(points, dtype=float).reshape(-1, 3)
    xc = X @ camera.rotation.T + camera.translation
    z = xc[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        uv = camera.focal_length_px * xc[:, :2] / z[:, None] + camera.principal_point
    uv[z <= 0.0] = np.nan
    return uv, z


def back_project(camera: CameraModel, u: float, v: float) -> Ray:
    """Ray from the camera center through pixel (u, v)."""
    d = camera.back_project_matrix() @ np.array([u, v, 1.0])
    d = d / np.linalg.norm(d)
    return Ray(origin=camera.center, direction=d)


def normalize_homogeneous(x: np.ndarray) -> np.ndarray:
    """Scale so the largest-magnitude component is 1 (bounds conditioning)."""
    m = np.max(np.abs(x))
    if m == 0.0:
        return x
    return x / m


def compute_trifocal(
    c1: CameraModel,
    c2: CameraModel,
    c3: CameraModel,
    collinearity_tol: float = COLLINEARITY_TOL,
) -> TrifocalTensor:
    """Trifocal tensor computed analytically from three camera matrices.

    Raises DegenerateConfigurationError when the camera centers are
    collinear (no trifocal geometry exists).
    """
    b1 = c2.center - c1.center
    b2 = c3.center - c1.center
    cr = np.linalg.norm(np.cross(b1, b2))
    if cr <= collinearity_tol * max(np.linalg.norm(b1) * np.linalg.norm(b2), 1.0):
        raise DegenerateConfigurationError("camera centers are collinear")

    P1, P2, P3 = c1.P, c2.P, c3.P
    T = np.empty((3, 3, 3))
    rows = [(1, 2), (0, 2), (0, 1)]
    for i in range(3):
        sign = 1.0 if i % 2 == 0 else -1.0
        a, b = rows[i]
        for q in range(3):
            for r in range(3):
                m = np.vstack([P1[a], P1[b], P2[q], P3[r]])
                T[i, q, r] = sign * np.linalg.det(m)
    T /= np.max(np.abs(T))
    return TrifocalTensor(slices=T)


def fundamental_matrix(src: CameraModel, dst: CameraModel) -> np.ndarray:
    """F such that the epipolar line in dst of a src pixel x is F @ x."""
    C = np.append(src.center, 1.0)
    e = dst.P @ C  # epipole: image of the src center in dst
    ex = _cross_matrix(e)
    return ex @ dst.P @ np.linalg.pinv(src.P)


def _cross_matrix(v: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def epipolar_line(
    cameras: Sequence[CameraModel],
    p: ImagePoint,
    target_view: int,
) -> np.ndarray:
    """Epipolar line of pixel ``p`` in ``target_view``.

    Returns homogeneous coefficients (a, b, c) scaled so a^2 + b^2 = 1;
    |a*u + b*v + c| is then the pixel distance from the line.
    """
    src = p.camera_index
    if src < 0 or src >= len(cameras):
        raise ParameterValidationError("image point is not bound to a camera")
    if target_view == src:
        raise ParameterValidationError("target view equals source view")
    F = fundamental_matrix(cameras[src], cameras[target_view])
    line = F @ normalize_homogeneous(p.homogeneous())
    n = np.hypot(line[0], line[1])
    if n == 0.0:
        raise UnstableTransferError("point coincides with the epipole")
    return line / n


def transfer_point(
    tensor: TrifocalTensor,
    p1: ImagePoint,
    p2: ImagePoint,
    rank_tol: float = TRANSFER_RANK_TOL,
) -> ImagePoint:
    """Transfer a view-1/view-2 pixel pair to view 3 through the tensor.

    The incidence constraint [x2]_x (sum_i x1^i T_i) [x3]_x = 0 makes every
    row of G = [x2]_x M proportional to x3; the largest row is the
    best-conditioned estimate.
    """
    x1 = normalize_homogeneous(p1.homogeneous())
    x2 = normalize_homogeneous(p2.homogeneous())
    M = x1[0] * tensor.slices[0] + x1[1] * tensor.slices[1] + x1[2] * tensor.slices[2]
    G = _cross_matrix(x2) @ M
    norms = np.linalg.norm(G, axis=1)
    best = int(np.argmax(norms))
    scale = np.linalg.norm(M)
    if norms[best] <= rank_tol * max(scale, 1e-300):
        raise UnstableTransferError("transfer system is rank-deficient")
    x3 = G[best]
    if abs(x3[2]) <= rank_tol * norms[best]:
        raise UnstableTransferError("transferred point is at infinity")
    return ImagePoint(x3[0] / x3[2], x3[1] / x3[2], camera_index=2)


def triangulate_rays(
    rays: Sequence[Ray],
    parallel_tol: float = PARALLEL_RAYS_TOL,
) -> np.ndarray:
    """Linear least-squares midpoint of two or more rays."""
    if len(rays) < 2:
        raise ParameterValidationError("triangulation needs at least two rays")
    dirs = np.array([r.direction for r in rays])
    # All rays parallel within tolerance -> the normal system is singular.
    parallel = True
    for i in range(len(rays)):
        for j in range(i + 1, len(rays)):
            if np.linalg.norm(np.cross(dirs[i], dirs[j])) > parallel_tol:
                parallel = False
                break
        if not parallel:
            break
    if parallel:
        raise ParallelRaysError("all rays are parallel")

    A = np.zeros((3, 3))
    b = np.zeros(3)
    for r in rays:
        proj = np.eye(3) - np.outer(r.direction, r.direction)
        A += proj
        b += proj @ r.origin
    return np.linalg.solve(A, b)


def triangulate(
    cameras: Sequence[CameraModel],
    pixels: Sequence[ImagePoint],
    parallel_tol: float = PARALLEL_RAYS_TOL,
) -> tuple[np.ndarray, float]:
    """Triangulate matched pixels; returns (point, RMS reprojection error px)."""
    if len(cameras) != len(pixels):
        raise ParameterValidationError("one pixel per camera required")
    rays = [back_project(cam, p.u, p.v) for cam, p in zip(cameras, pixels)]
    X = triangulate_rays(rays, parallel_tol=parallel_tol)
    sq = 0.0
    for cam, p in zip(cameras, pixels):
        q = project(cam, X)
        if q is None:
            sq += np.inf
        else:
            sq += (q.u - p.u) ** 2 + (q.v - p.v) ** 2
    err = float(np.sqrt(sq / len(pixels)))
    return X, err


# --- rig serialization ------------------------------------------------------
#
# Plain-text block, one `cameraN.field = values` line per field, floats
# written with repr() so parsing gives back bit-identical values.


def format_rig(cameras: Sequence[CameraModel]) -> str:
    lines = []
    for idx, cam in enumerate(cameras, start=1):
        p = f"camera{idx}"
        lines.append(f"{p}.focal_length_px = {cam.focal_length_px!r}")
        lines.append(
            f"{p}.principal_point = "
            + " ".join(repr(float(x)) for x in cam.principal_point)
        )
        lines.append(
            f"{p}.rotation = " + " ".join(repr(float(x)) for x in cam.rotation.ravel())
        )
        lines.append(
            f"{p}.translation = " + " ".join(repr(float(x)) for x in cam.translation)
        )
        lines.append(f"{p}.sensor_size = {cam.width} {cam.height}")
    return "\n".join(lines) + "\n"


def parse_rig(text: str) -> tuple[CameraModel, ...]:
    fields: dict[str, dict[str, list[str]]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterValidationError(f"bad rig line: {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if "." not in key:
            raise ParameterValidationError(f"bad rig key: {key!r}")
        section, name = key.split(".", 1)
        fields.setdefault(section, {})[name] = value.split()

    cameras = []
    for idx in range(1, len(fields) + 1):
        sec = fields.get(f"camera{idx}")
        if sec is None:
            raise ParameterValidationError(f"missing camera{idx} block")
        cameras.append(
            CameraModel(
                focal_length_px=float(sec["focal_length_px"][0]),
                principal_point=np.array([float(x) for x in sec["principal_point"]]),
                rotation=np.array([float(x) for x in sec["rotation"]]).reshape(3, 3),
                translation=np.array([float(x) for x in sec["translation"]]),
                sensor_size=(int(sec["sensor_size"][0]), int(sec["sensor_size"][1])),
            )
        )
    return tuple(cameras)


def save_rig(path, cameras: Sequence[CameraModel]) -> None:
    with open(path, "w") as fh:
        fh.write(format_rig(cameras))


def load_rig(path) -> tuple[CameraModel, ...]:
    with open(path) as fh:
        return parse_rig(fh.read())
