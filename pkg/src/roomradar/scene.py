"""Room geometry, reflectors and robot trajectory.

Two plain-text inputs describe a scene:

Mesh file (triangles, one element per line, ``#`` comments allowed)::

    v <x> <y> <z>                   vertex, meters
    f <i> <j> <k> <material-name>   face, 1-based vertex indices

Scenario file (key=value tokens after a record tag)::

    material <name> eps_r=<float> sigma=<float>          # sigma in S/m
    reflector id=<int> pos=<x>,<y>,<z> rcs=<source> [orient=<yaw>,<pitch>,<roll>]
    waypoint t=<s> pos=<x>,<y>,<z> heading=<rad>

Reflector ``rcs`` sources are either ``trihedral:<edge-length-m>`` or
``table:<path>`` (path relative to the scenario file). ``orient`` is in
degrees, intrinsic z-y-x, applied to the default frame whose boresight
(+z local) points straight down; omitted means facing the floor.

Every face material must be declared; waypoint times must strictly
increase; reflector positions must lie inside the mesh bounding box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi

# Intersections closer than this to a segment endpoint do not block
# line-of-sight; grazing contact at the endpoints is expected when the
# endpoints themselves sit on scene surfaces.
ENDPOINT_EPS = 1e-9
# Barycentric slack: edge and vertex hits count as hits.
BARY_EPS = 1e-12


class SceneFormatError(ValueError):
    """A mesh or scenario file failed to parse."""


class SceneValidationError(ValueError):
    """Parsed scene content violates a semantic constraint."""


def wrap_angle(angle: float) -> float:
    """Wrap an angle in radians to [-pi, pi)."""
    return (angle + math.pi) % TWO_PI - math.pi


@dataclass
class Material:
    """Wall material: relative permittivity and conductivity (S/m)."""

    eps_r: float
    sigma: float


@dataclass
class Reflector:
    """Passive landmark: position (m), an RCS source tag and an id.

    ``rcs_source`` is either ``trihedral:<edge_m>`` or ``table:<abs path>``
    (resolved against the scenario file at load time). ``orientation``
    maps reflector-local coordinates to world coordinates; the default
    faces straight down.
    """

    id: int
    position: np.ndarray
    rcs_source: str
    orientation: np.ndarray = field(
        default_factory=lambda: np.diag([1.0, -1.0, -1.0])
    )


@dataclass
class Pose:
    """Radar pose: position (m), heading (rad, [-pi, pi)), velocity (m/s)."""

    position: np.ndarray
    heading: float
    velocity: np.ndarray

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=np.float64)
        self.velocity = np.asarray(self.velocity, dtype=np.float64)
        self.heading = wrap_angle(float(self.heading))


@dataclass
class Trajectory:
    """Piecewise-linear waypoint track with strictly increasing times."""

    times: np.ndarray
    positions: np.ndarray
    headings: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


@dataclass
class Scene:
    """Triangle mesh plus materials, reflectors and the robot trajectory."""

    triangles: np.ndarray  # (T, 3, 3) vertex coordinates
    face_materials: list[str]  # per-face material name
    materials: dict[str, Material]
    reflectors: list[Reflector]
    trajectory: Trajectory | None
    # Derived, filled by __post_init__:
    bounds: tuple[np.ndarray, np.ndarray] | None = None
    normals: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.triangles = np.asarray(self.triangles, dtype=np.float64).reshape(-1, 3, 3)
        t = self.triangles
        self._v0 = t[:, 0, :]
        self._e1 = t[:, 1, :] - t[:, 0, :]
        self._e2 = t[:, 2, :] - t[:, 0, :]
        if len(t):
            n = np.cross(self._e1, self._e2)
            norm = np.linalg.norm(n, axis=1, keepdims=True)
            self.normals = n / norm
            verts = t.reshape(-1, 3)
            self.bounds = (verts.min(axis=0), verts.max(axis=0))
        else:
            self.normals = np.zeros((0, 3))
            self.bounds = None

    @property
    def n_faces(self) -> int:
        return len(self.triangles)

    def material_of(self, face: int) -> Material:
        return self.materials[self.face_materials[face]]


# ---------------------------------------------------------------------------
# Ray / segment queries
# ---------------------------------------------------------------------------


def ray_hits(
    scene: Scene, origins: np.ndarray, directions: np.ndarray, t_min: float = ENDPOINT_EPS
) -> tuple[np.ndarray, np.ndarray]:
    """First mesh hit for a batch of rays (Moeller-Trumbore, vectorized).

    Parameters
    ----------
    origins, directions:
        (K, 3) ray origins and unit directions.
    t_min:
        Hits closer than this along the ray are ignored.

    Returns
    -------
    (t, face):
        (K,) hit distances (inf where the ray escapes) and (K,) face
        indices (-1 where the ray escapes). Edge and vertex hits count.
    """
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    k = origins.shape[0]
    if scene.n_faces == 0:
        return np.full(k, np.inf), np.full(k, -1, dtype=np.intp)

    e1, e2, v0 = scene._e1, scene._e2, scene._v0
    h = np.cross(directions[:, None, :], e2[None, :, :])  # (K,T,3)
    a = np.einsum("tj,ktj->kt", e1, h)
    not_parallel = np.abs(a) > 1e-12
    f = 1.0 / np.where(not_parallel, a, 1.0)
    s = origins[:, None, :] - v0[None, :, :]
    u = f * np.einsum("ktj,ktj->kt", s, h)
    q = np.cross(s, e1[None, :, :])
    v = f * np.einsum("kj,ktj->kt", directions, q)
    t = f * np.einsum("tj,ktj->kt", e2, q)
    valid = (
        not_parallel
        & (u >= -BARY_EPS)
        & (v >= -BARY_EPS)
        & (u + v <= 1.0 + BARY_EPS)
        & (t >= t_min)
    )
    t = np.where(valid, t, np.inf)
    face = np.argmin(t, axis=1).astype(np.intp)
    t_best = t[np.arange(k), face]
    face[~np.isfinite(t_best)] = -1
    return t_best, face


def segment_blocked(scene: Scene, a: np.ndarray, b: np.ndarray) -> bool:
    """True when the open segment a->b intersects the mesh.

    Hits within ``ENDPOINT_EPS`` (meters) of either endpoint are ignored
    so that endpoints lying on scene surfaces do not self-occlude.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    length = float(np.linalg.norm(b - a))
    if length == 0.0 or scene.n_faces == 0:
        return False
    direction = (b - a) / length
    t, face = ray_hits(scene, a[None, :], direction[None, :], t_min=ENDPOINT_EPS)
    return bool(np.isfinite(t[0]) and t[0] <= length - ENDPOINT_EPS)


def los_visible(scene: Scene, a: np.ndarray, b: np.ndarray) -> bool:
    """True when the segment between two distinct points is unobstructed."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("line-of-sight endpoints must be finite")
    if np.array_equal(a, b):
        raise ValueError("line-of-sight endpoints must differ")
    return not segment_blocked(scene, a, b)


# Fixed, slightly skewed up-direction for the parity test so axis-aligned
# edges are not hit exactly.
_PARITY_DIR = np.array([1.2345e-4, 2.3571e-4, 1.0])
_PARITY_DIR = _PARITY_DIR / np.linalg.norm(_PARITY_DIR)


def point_inside(scene: Scene, p: np.ndarray) -> bool:
    """Ray-parity interior test (odd number of mesh crossings above p)."""
    p = np.asarray(p, dtype=np.float64)
    if scene.bounds is None:
        return False
    lo, hi = scene.bounds
    if np.any(p < lo) or np.any(p > hi):
        return False
    # Count all crossings, not just the nearest one.
    e1, e2, v0 = scene._e1, scene._e2, scene._v0
    d = _PARITY_DIR
    h = np.cross(d[None, :], e2)
    a = np.einsum("tj,tj->t", e1, h)
    not_parallel = np.abs(a) > 1e-12
    f = 1.0 / np.where(not_parallel, a, 1.0)
    s = p[None, :] - v0
    u = f * np.einsum("tj,tj->t", s, h)
    q = np.cross(s, e1)
    v = f * np.einsum("j,tj->t", d, q)
    t = f * np.einsum("tj,tj->t", e2, q)
    valid = (
        not_parallel
        & (u >= -BARY_EPS)
        & (v >= -BARY_EPS)
        & (u + v <= 1.0 + BARY_EPS)
        & (t > ENDPOINT_EPS)
    )
    hits = np.sort(t[valid])
    if len(hits) == 0:
        return False
    # Collapse duplicate crossings where the ray pierces a shared edge.
    distinct = 1 + int(np.sum(np.diff(hits) > 1e-7))
    return distinct % 2 == 1


# ---------------------------------------------------------------------------
# Trajectory
# ---------------------------------------------------------------------------


def trajectory_state(trajectory: Trajectory, t: float) -> Pose:
    """Interpolated pose at time t (position lerp, heading shortest-arc).

    Velocity is the finite difference of the bracketing waypoints and is
    therefore constant within a segment; segments are right-continuous
    at interior waypoints and the final waypoint belongs to the last
    segment. Raises ValueError outside the waypoint span.
    """
    times = trajectory.times
    if t < times[0] or t > times[-1]:
        raise ValueError(
            f"time {t} outside trajectory span [{times[0]}, {times[-1]}]"
        )
    if len(times) == 1:
        return Pose(trajectory.positions[0].copy(), float(trajectory.headings[0]), np.zeros(3))
    i = int(np.searchsorted(times, t, side="right") - 1)
    i = min(max(i, 0), len(times) - 2)
    dt = float(times[i + 1] - times[i])
    frac = (t - float(times[i])) / dt
    p0, p1 = trajectory.positions[i], trajectory.positions[i + 1]
    position = p0 + frac * (p1 - p0)
    h0, h1 = float(trajectory.headings[i]), float(trajectory.headings[i + 1])
    heading = h0 + frac * wrap_angle(h1 - h0)
    velocity = (p1 - p0) / dt
    return Pose(position, heading, velocity)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _parse_floats(text: str, n: int, where: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != n:
        raise SceneFormatError(f"{where}: expected {n} comma-separated values, got {text!r}")
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as exc:
        raise SceneFormatError(f"{where}: {exc}") from exc


def _kv_tokens(tokens: list[str], where: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for tok in tokens:
        if "=" not in tok:
            raise SceneFormatError(f"{where}: expected key=value token, got {tok!r}")
        key, value = tok.split("=", 1)
        if key in out:
            raise SceneFormatError(f"{where}: duplicate key {key!r}")
        out[key] = value
    return out


def _rotation_zyx(yaw_deg: float, pitch_deg: float, roll_deg: float) -> np.ndarray:
    cy, sy = math.cos(math.radians(yaw_deg)), math.sin(math.radians(yaw_deg))
    cp, sp = math.cos(math.radians(pitch_deg)), math.sin(math.radians(pitch_deg))
    cr, sr = math.cos(math.radians(roll_deg)), math.sin(math.radians(roll_deg))
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    return rz @ ry @ rx


def _load_mesh(path: Path) -> tuple[np.ndarray, list[str]]:
    vertices: list[np.ndarray] = []
    faces: list[tuple[int, int, int]] = []
    face_materials: list[str] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        tokens = line.split()
        tag, args = tokens[0], tokens[1:]
        if tag == "v":
            if len(args) != 3:
                raise SceneFormatError(f"{where}: vertex needs 3 coordinates")
            try:
                vertices.append(np.array([float(x) for x in args]))
            except ValueError as exc:
                raise SceneFormatError(f"{where}: {exc}") from exc
        elif tag == "f":
            if len(args) != 4:
                raise SceneFormatError(
                    f"{where}: face needs 3 vertex indices and a material name"
                )
            try:
                idx = tuple(int(x) for x in args[:3])
            except ValueError as exc:
                raise SceneFormatError(f"{where}: {exc}") from exc
            for i in idx:
                if i < 1 or i > len(vertices):
                    raise SceneFormatError(
                        f"{where}: face references missing vertex {i}"
                    )
            faces.append(tuple(i - 1 for i in idx))
            face_materials.append(args[3])
        else:
            raise SceneFormatError(f"{where}: unknown record {tag!r}")
    if faces:
        tri = np.stack([np.stack([vertices[i] for i in f]) for f in faces])
    else:
        tri = np.zeros((0, 3, 3))
    return tri, face_materials


def _load_scenario(
    path: Path,
) -> tuple[dict[str, Material], list[Reflector], Trajectory | None]:
    materials: dict[str, Material] = {}
    reflectors: list[Reflector] = []
    wp_t: list[float] = []
    wp_pos: list[np.ndarray] = []
    wp_head: list[float] = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{path}:{lineno}"
        tokens = line.split()
        tag, args = tokens[0], tokens[1:]
        if tag == "material":
            if len(args) < 1:
                raise SceneFormatError(f"{where}: material needs a name")
            name = args[0]
            kv = _kv_tokens(args[1:], where)
            missing = {"eps_r", "sigma"} - kv.keys()
            if missing:
                raise SceneFormatError(f"{where}: material missing {sorted(missing)}")
            if name in materials:
                raise SceneFormatError(f"{where}: duplicate material {name!r}")
            try:
                materials[name] = Material(float(kv["eps_r"]), float(kv["sigma"]))
            except ValueError as exc:
                raise SceneFormatError(f"{where}: {exc}") from exc
        elif tag == "reflector":
            kv = _kv_tokens(args, where)
            missing = {"id", "pos", "rcs"} - kv.keys()
            if missing:
                raise SceneFormatError(f"{where}: reflector missing {sorted(missing)}")
            try:
                rid = int(kv["id"])
            except ValueError as exc:
                raise SceneFormatError(f"{where}: {exc}") from exc
            pos = _parse_floats(kv["pos"], 3, where)
            source = kv["rcs"]
            kind, _, arg = source.partition(":")
            if kind not in ("trihedral", "table") or not arg:
                raise SceneFormatError(
                    f"{where}: rcs must be trihedral:<edge_m> or table:<path>, got {source!r}"
                )
            if kind == "trihedral":
                try:
                    edge = float(arg)
                except ValueError as exc:
                    raise SceneFormatError(f"{where}: {exc}") from exc
                if edge <= 0:
                    raise SceneFormatError(f"{where}: trihedral edge must be positive")
            else:
                source = f"table:{(path.parent / arg).resolve()}"
            orientation = np.diag([1.0, -1.0, -1.0])
            if "orient" in kv:
                ypr = _parse_floats(kv["orient"], 3, where)
                orientation = _rotation_zyx(*ypr) @ orientation
            reflectors.append(Reflector(rid, pos, source, orientation))
        elif tag == "waypoint":
            kv = _kv_tokens(args, where)
            missing = {"t", "pos", "heading"} - kv.keys()
            if missing:
                raise SceneFormatError(f"{where}: waypoint missing {sorted(missing)}")
            try:
                wp_t.append(float(kv["t"]))
                wp_head.append(float(kv["heading"]))
            except ValueError as exc:
                raise SceneFormatError(f"{where}: {exc}") from exc
            wp_pos.append(_parse_floats(kv["pos"], 3, where))
        else:
            raise SceneFormatError(f"{where}: unknown record {tag!r}")
    trajectory = None
    if wp_t:
        order_ok = all(a < b for a, b in zip(wp_t, wp_t[1:]))
        if not order_ok:
            raise SceneValidationError(f"{path}: waypoint times must strictly increase")
        trajectory = Trajectory(
            np.array(wp_t), np.stack(wp_pos), np.array([wrap_angle(h) for h in wp_head])
        )
    return materials, reflectors, trajectory


def validate_scene(scene: Scene) -> None:
    """Raise SceneValidationError on degenerate faces, unknown materials,
    duplicate reflector ids or reflectors outside the mesh bounds."""
    tri = scene.triangles
    if not np.all(np.isfinite(tri)):
        raise SceneValidationError("mesh contains non-finite vertices")
    if len(tri):
        areas = 0.5 * np.linalg.norm(np.cross(scene._e1, scene._e2), axis=1)
        bad = np.nonzero(areas < 1e-12)[0]
        if len(bad):
            raise SceneValidationError(f"degenerate faces (zero area): {bad.tolist()}")
    for i, name in enumerate(scene.face_materials):
        if name not in scene.materials:
            raise SceneValidationError(f"face {i} uses undeclared material {name!r}")
    seen: set[int] = set()
    for refl in scene.reflectors:
        if refl.id in seen:
            raise SceneValidationError(f"duplicate reflector id {refl.id}")
        seen.add(refl.id)
        if not np.all(np.isfinite(refl.position)):
            raise SceneValidationError(f"reflector {refl.id} has non-finite position")
        if scene.bounds is None:
            raise SceneValidationError(
                f"reflector {refl.id} with empty scene geometry"
            )
        lo, hi = scene.bounds
        if np.any(refl.position < lo) or np.any(refl.position > hi):
            raise SceneValidationError(
                f"reflector {refl.id} outside scene bounds "
                f"{lo.tolist()}..{hi.tolist()}"
            )


def load_scene(mesh_path: str | Path, scenario_path: str | Path) -> Scene:
    """Parse and validate a mesh + scenario file pair."""
    mesh_path = Path(mesh_path)
    scenario_path = Path(scenario_path)
    for p in (mesh_path, scenario_path):
        if not p.is_file():
            raise SceneFormatError(f"no such file: {p}")
    triangles, face_materials = _load_mesh(mesh_path)
    materials, reflectors, trajectory = _load_scenario(scenario_path)
    scene = Scene(triangles, face_materials, materials, reflectors, trajectory)
    validate_scene(scene)
    return scene
