"""Multipath channel: ray launching, specular tracing and path loss.

Paths between the colocated transmit/receive antennas and the room are
found by shooting-and-bouncing rays: a geodesic bundle of directions is
traced through up to three specular reflections, and a path candidate is
recorded whenever a ray segment passes the receiver within the reception
sphere r = d_unfolded * theta_ray / 2. Every candidate is then rebuilt
exactly with mirror images of the recorded reflection planes, re-traced
for validation, and de-duplicated on the corrected face sequence. The
result is a list of PathContribution records carrying loss, geometry and
Doppler for the baseband synthesizer.

Loss model per path: free space 20*log10(4*pi*d/lambda) over the total
unfolded distance d plus, per bounce, -20*log10|Gamma| with Gamma the
Fresnel reflection coefficient magnitude of the wall material at the
actual incidence angle (power-averaged over both polarizations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C0
from scipy.constants import epsilon_0

from .antenna import world_to_radar_angles
from .scene import ENDPOINT_EPS, Material, Pose, Scene, point_inside, ray_hits

#: Safety factor on the bundle's angular spacing; keeps reception spheres
#: large enough that no specular path can slip between launch directions.
THETA_SAFETY = 1.05

#: Re-trace agreement tolerance (m) when validating corrected paths.
RETRACE_TOL = 1e-6


@dataclass(frozen=True)
class PathContribution:
    """One resolved propagation path (ray-traced or reflector return)."""

    loss_db: float
    distance_m: float  # total unfolded path length
    range_m: float  # distance_m / 2, the beat-frequency range
    velocity_ms: float  # radial velocity, positive closing
    aoa_deg: tuple[float, float]  # (azimuth, elevation) in the radar frame
    phase_cycles: float
    source: str  # "ray" or "reflector"
    faces: tuple[int, ...] = ()


@dataclass(frozen=True)
class RayBundle:
    """Launch directions plus their angular spacing (radians)."""

    directions: np.ndarray  # (K, 3) unit vectors
    theta_ray: float
    subdivision: int

    def __len__(self) -> int:
        return len(self.directions)


# ---------------------------------------------------------------------------
# Geodesic launch bundle
# ---------------------------------------------------------------------------


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.intp,
    )
    return verts, faces


def launch_directions(subdivision: int) -> RayBundle:
    """Geodesic icosphere directions: 10 * 4**subdivision + 2 rays.

    ``theta_ray`` is the maximum angular gap of the set (twice the
    covering radius of the triangulation, with a small safety factor),
    which is what the reception-sphere radius is built from.
    """
    if not 0 <= subdivision <= 7:
        raise ValueError("subdivision must be in [0, 7]")
    verts, faces = _icosahedron()
    verts = [v for v in verts]
    cache: dict[tuple[int, int], int] = {}

    def midpoint(i: int, j: int) -> int:
        key = (i, j) if i < j else (j, i)
        if key in cache:
            return cache[key]
        m = verts[i] + verts[j]
        m /= np.linalg.norm(m)
        verts.append(m)
        cache[key] = len(verts) - 1
        return cache[key]

    face_list = [tuple(f) for f in faces]
    for _ in range(subdivision):
        new_faces: list[tuple[int, int, int]] = []
        for a, b, c in face_list:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        face_list = new_faces
    directions = np.stack(verts)
    assert len(directions) == 10 * 4**subdivision + 2

    fa = directions[[f[0] for f in face_list]]
    fb = directions[[f[1] for f in face_list]]
    fc = directions[[f[2] for f in face_list]]
    cc = np.cross(fb - fa, fc - fa)
    cc /= np.linalg.norm(cc, axis=1, keepdims=True)
    centroid_sign = np.sign(np.einsum("ij,ij->i", cc, fa + fb + fc))
    cc *= centroid_sign[:, None]
    covering = float(np.max(np.arccos(np.clip(np.einsum("ij,ij->i", cc, fa), -1, 1))))
    return RayBundle(
        directions=directions,
        theta_ray=2.0 * covering * THETA_SAFETY,
        subdivision=subdivision,
    )


# ---------------------------------------------------------------------------
# Loss model
# ---------------------------------------------------------------------------


def reflection_coefficient(
    material: Material, cos_incidence: float, frequency: float
) -> float:
    """Fresnel reflection magnitude, power-averaged over polarizations.

    Uses the complex relative permittivity eps_r - j*sigma/(omega*eps0)
    and returns sqrt((|Gamma_s|^2 + |Gamma_p|^2) / 2).
    """
    if not 0.0 <= cos_incidence <= 1.0 + 1e-12:
        raise ValueError(f"cos(incidence) must be in [0, 1], got {cos_incidence}")
    cos_incidence = min(cos_incidence, 1.0)
    eps = material.eps_r - 1j * material.sigma / (2 * math.pi * frequency * epsilon_0)
    sin2 = 1.0 - cos_incidence**2
    root = np.sqrt(eps - sin2)
    gamma_s = (cos_incidence - root) / (cos_incidence + root)
    gamma_p = (eps * cos_incidence - root) / (eps * cos_incidence + root)
    return float(np.sqrt((abs(gamma_s) ** 2 + abs(gamma_p) ** 2) / 2.0))


def path_loss(distance_m: float, gammas: list[float], wavelength_m: float) -> float:
    """Free-space loss over the unfolded distance plus reflection losses."""
    if distance_m <= 0:
        raise ValueError("path distance must be positive")
    if not gammas:
        raise ValueError("a traced path has at least one bounce")
    loss = 20.0 * math.log10(4.0 * math.pi * distance_m / wavelength_m)
    for g in gammas:
        if not 0.0 < g <= 1.0:
            raise ValueError(f"reflection magnitude outside (0, 1]: {g}")
        loss += -20.0 * math.log10(g)
    return loss


def ray_doppler(velocity: np.ndarray, arrival_direction: np.ndarray) -> float:
    """Radial velocity: radar velocity projected on the arrival direction.

    Positive when the radar moves toward where the path arrives from.
    """
    u = np.asarray(arrival_direction, dtype=np.float64)
    u = u / np.linalg.norm(u)
    return float(np.dot(np.asarray(velocity, dtype=np.float64), u))


# ---------------------------------------------------------------------------
# Shooting and bouncing rays
# ---------------------------------------------------------------------------


def _mirror(p: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    return p - 2.0 * (float(p @ normal) - offset) * normal


def _correct_candidate(
    scene: Scene, rx: np.ndarray, faces: tuple[int, ...]
) -> tuple[tuple[int, ...], list[np.ndarray], list[float]] | None:
    """Rebuild the exact specular path for a recorded face sequence.

    Mirrors the receiver through the face planes (image method), finds
    the exact reflection points, then re-traces each segment against the
    mesh. Returns (corrected face indices, reflection points, incidence
    cosines) or None when the sequence has no feasible specular path.
    """
    normals = scene.normals[list(faces)]
    offsets = np.einsum("ij,ij->i", normals, scene.triangles[list(faces), 0, :])

    images: list[np.ndarray] = [None] * len(faces)
    q = rx.copy()
    for j in range(len(faces) - 1, -1, -1):
        q = _mirror(q, normals[j], float(offsets[j]))
        images[j] = q

    points: list[np.ndarray] = []
    start = rx
    for j, (n, d) in enumerate(zip(normals, offsets)):
        target = images[j]
        seg = target - start
        denom = float(n @ seg)
        if abs(denom) < 1e-15:
            return None
        t = (float(d) - float(n @ start)) / denom
        if not 0.0 < t < 1.0:
            return None
        point = start + t * seg
        points.append(point)
        start = point

    corrected: list[int] = []
    cosines: list[float] = []
    start = rx
    for j, point in enumerate(points):
        seg = point - start
        length = float(np.linalg.norm(seg))
        if length < 1e-9:
            return None
        u = seg / length
        t_hit, face = ray_hits(scene, start[None, :], u[None, :], t_min=ENDPOINT_EPS)
        if face[0] < 0 or abs(float(t_hit[0]) - length) > RETRACE_TOL:
            return None
        hit_point = start + float(t_hit[0]) * u
        if np.linalg.norm(hit_point - point) > RETRACE_TOL:
            return None
        hit_normal = scene.normals[face[0]]
        if abs(abs(float(hit_normal @ normals[j])) - 1.0) > 1e-9:
            return None
        corrected.append(int(face[0]))
        cosines.append(abs(float(u @ normals[j])))
        start = point
    # closing segment back to the receiver must be clear
    seg = rx - start
    length = float(np.linalg.norm(seg))
    if length < 1e-9:
        return None
    u = seg / length
    t_hit, face = ray_hits(scene, start[None, :], u[None, :], t_min=ENDPOINT_EPS)
    if np.isfinite(t_hit[0]) and t_hit[0] <= length - ENDPOINT_EPS:
        return None
    return tuple(corrected), points, cosines


def trace_paths(
    scene: Scene,
    radar: Pose,
    bundle: RayBundle,
    max_order: int,
    frequency: float,
) -> list[PathContribution]:
    """All specular paths radar -> walls -> radar up to max_order bounces.

    Deterministic for a given scene/pose/bundle: candidates are found by
    the ray sweep, rebuilt exactly, validated and merged on the corrected
    face sequence, then sorted by (bounce count, distance).
    """
    if not 1 <= max_order <= 3:
        raise ValueError("max_order must be in [1, 3]")
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    if scene.n_faces == 0:
        return []
    rx = np.asarray(radar.position, dtype=np.float64)
    if not point_inside(scene, rx):
        raise ValueError(f"radar position {rx.tolist()} outside scene geometry")

    k = len(bundle)
    origins = np.broadcast_to(rx, (k, 3)).copy()
    dirs = bundle.directions.copy()
    acc = np.zeros(k)
    active = np.ones(k, dtype=bool)
    seq = np.full((k, max_order), -1, dtype=np.intp)
    candidates: set[tuple[int, ...]] = set()

    for level in range(max_order + 1):
        t_hit, face = ray_hits(scene, origins, dirs, t_min=ENDPOINT_EPS)
        t_hit = np.where(active, t_hit, -np.inf)
        if level >= 1:
            w = rx[None, :] - origins
            s = np.einsum("ij,ij->i", w, dirs)
            perp = np.linalg.norm(w - s[:, None] * dirs, axis=1)
            radius = (acc + s) * bundle.theta_ray / 2.0
            captured = active & (s > ENDPOINT_EPS) & (s < t_hit) & (perp <= radius)
            for i in np.nonzero(captured)[0]:
                candidates.add(tuple(int(f) for f in seq[i, :level]))
        if level == max_order:
            break
        hit = active & np.isfinite(t_hit) & (t_hit > 0)
        idx = np.nonzero(hit)[0]
        if len(idx) == 0:
            break
        n = scene.normals[face[idx]]
        d = dirs[idx]
        origins[idx] = origins[idx] + t_hit[idx, None] * d
        dirs[idx] = d - 2.0 * np.einsum("ij,ij->i", d, n)[:, None] * n
        acc[idx] += t_hit[idx]
        seq[idx, level] = face[idx]
        active = hit

    wavelength = C0 / frequency
    merged: dict[tuple[int, ...], PathContribution] = {}
    for cand in sorted(candidates):
        fixed = _correct_candidate(scene, rx, cand)
        if fixed is None:
            continue
        faces, points, cosines = fixed
        if faces in merged:
            continue
        segs = [points[0] - rx]
        segs += [points[j + 1] - points[j] for j in range(len(points) - 1)]
        segs.append(rx - points[-1])
        distance = float(sum(np.linalg.norm(s) for s in segs))
        gammas = [
            reflection_coefficient(scene.material_of(f), cos_i, frequency)
            for f, cos_i in zip(faces, cosines)
        ]
        arrival = points[-1] - rx
        arrival = arrival / np.linalg.norm(arrival)
        merged[faces] = PathContribution(
            loss_db=path_loss(distance, gammas, wavelength),
            distance_m=distance,
            range_m=distance / 2.0,
            velocity_ms=ray_doppler(radar.velocity, arrival),
            aoa_deg=world_to_radar_angles(arrival, radar.heading),
            phase_cycles=distance / wavelength,
            source="ray",
            faces=faces,
        )
    return sorted(merged.values(), key=lambda p: (len(p.faces), p.distance_m, p.faces))
