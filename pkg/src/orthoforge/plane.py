"""Ground plane estimation and plane-aligned coordinates.

RANSAC over minimal 3-point samples, least-squares refinement over the
consensus set, an orthonormal (u, v, n) frame, and the (u, v, h)
transform with upward-positive orientation fixing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateGeometryError, DomainError, NoPlaneError
from .pointcloud import ColoredPointCloud, bounding_box

DEFAULT_ITERATIONS = 1024
DEFAULT_THRESHOLD_FRAC = 0.01  # of the bounding-box diagonal
MIN_INLIER_FRACTION = 0.05
# Consensus counting runs on a deterministic subsample this size; the
# final inlier set and refinement use the full cloud.
SCORE_SUBSAMPLE = 20_000


@dataclass
class GroundPlane:
    normal: np.ndarray          # unit (a, b, c)
    offset: float               # d of a*x + b*y + c*z + d = 0
    centroid: np.ndarray        # centroid of the inliers used for fitting
    inlier_fraction: float
    threshold: float
    basis_u: np.ndarray | None = None
    basis_v: np.ndarray | None = None

    def coefficients(self) -> np.ndarray:
        return np.array([*self.normal, self.offset])


@dataclass
class PlanePointSet:
    coords: np.ndarray          # (N, 3) columns u, v, h
    colors: np.ndarray          # (N, 3) uint8, carried from the source cloud


def default_threshold(cloud: ColoredPointCloud) -> float:
    return DEFAULT_THRESHOLD_FRAC * bounding_box(cloud).diagonal


def _plane_from_three(p0, p1, p2):
    n = np.cross(p1 - p0, p2 - p0)
    norm = np.linalg.norm(n)
    if norm < 1e-300:
        return None
    n = n / norm
    return n, -float(n @ p0)


def _lsq_plane(points):
    """Smallest-eigenvector plane through the centroid of ``points``."""
    centroid = points.mean(axis=0)
    centered = points - centroid
    cov = centered.T @ centered
    eigval, eigvec = np.linalg.eigh(cov)
    n = eigvec[:, 0]
    n = n / np.linalg.norm(n)
    return n, -float(n @ centroid), centroid


def fit_plane_ransac(
    cloud: ColoredPointCloud,
    threshold: float | None = None,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> GroundPlane:
    """RANSAC plane fit, deterministic for a fixed seed.

    Best consensus is selected with lowest-iteration tie-break; the
    returned plane is a least-squares refinement over the full-cloud
    inliers of the winning candidate.
    """
    if cloud.count < 3:
        raise DegenerateGeometryError("plane fit needs at least 3 points")
    if threshold is None:
        threshold = default_threshold(cloud)
    if threshold <= 0:
        raise DomainError("RANSAC threshold must be positive")
    if iterations < 1:
        raise DomainError("iterations must be >= 1")

    pts = cloud.points
    n_pts = cloud.count
    rng = np.random.Generator(np.random.Philox(seed))

    if n_pts > SCORE_SUBSAMPLE:
        score_idx = rng.choice(n_pts, size=SCORE_SUBSAMPLE, replace=False)
        score_pts = pts[score_idx]
    else:
        score_pts = pts

    samples = np.empty((iterations, 3), dtype=np.int64)
    for i in range(iterations):
        samples[i] = rng.choice(n_pts, size=3, replace=False)

    best_count = -1
    best_model = None
    chunk = max(1, int(4e7) // max(1, len(score_pts)))
    for start in range(0, iterations, chunk):
        idx = samples[start : start + chunk]
        p0, p1, p2 = pts[idx[:, 0]], pts[idx[:, 1]], pts[idx[:, 2]]
        normals = np.cross(p1 - p0, p2 - p0)
        norms = np.linalg.norm(normals, axis=1)
        valid = norms > 1e-300
        normals[valid] /= norms[valid, None]
        offsets = -np.einsum("ij,ij->i", normals, p0)
        # (n_score, n_models) absolute distances, built in place
        dist = score_pts @ normals.T
        dist += offsets[None, :]
        np.abs(dist, out=dist)
        counts = (dist <= threshold).sum(axis=0)
        counts[~valid] = -1
        local_best = int(np.argmax(counts))
        if counts[local_best] > best_count:
            best_count = int(counts[local_best])
            best_model = (normals[local_best].copy(), float(offsets[local_best]))

    if best_model is None or best_count < 3:
        raise DegenerateGeometryError("no non-collinear minimal sample found")

    n, d = best_model
    inliers = np.abs(pts @ n + d) <= threshold
    if inliers.sum() < 3:
        raise DegenerateGeometryError("consensus set smaller than 3 points")
    n, d, centroid = _lsq_plane(pts[inliers])
    # Re-evaluate inliers once against the refined plane for reporting.
    inliers = np.abs(pts @ n + d) <= threshold
    if inliers.sum() >= 3:
        n, d, centroid = _lsq_plane(pts[inliers])
        inliers = np.abs(pts @ n + d) <= threshold
    frac = float(inliers.sum()) / n_pts
    if frac < MIN_INLIER_FRACTION:
        raise NoPlaneError(
            f"best inlier fraction {frac:.4f} < {MIN_INLIER_FRACTION}; "
            "consider the perspective fallback"
        )
    plane = GroundPlane(
        normal=n, offset=d, centroid=centroid,
        inlier_fraction=frac, threshold=float(threshold),
    )
    return build_frame(plane)


def build_frame(plane: GroundPlane) -> GroundPlane:
    """Attach basis_u = normalize(e_k x n) for the world axis e_k with the
    smallest |n_k| (ties to the lowest axis index) and basis_v = n x basis_u."""
    n = plane.normal / np.linalg.norm(plane.normal)
    k = int(np.argmin(np.abs(n)))  # argmin takes the first on ties
    e_k = np.zeros(3)
    e_k[k] = 1.0
    u = np.cross(e_k, n)
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    return replace(plane, normal=n, basis_u=u, basis_v=v)


def to_plane_coords(cloud: ColoredPointCloud, plane: GroundPlane) -> PlanePointSet:
    if plane.basis_u is None:
        raise DomainError("plane frame not built; call build_frame first")
    rel = cloud.points - plane.centroid
    coords = np.stack(
        [rel @ plane.basis_u, rel @ plane.basis_v, rel @ plane.normal], axis=1
    )
    return PlanePointSet(coords=coords, colors=cloud.colors)


def from_plane_coords(pts: PlanePointSet, plane: GroundPlane) -> np.ndarray:
    """Inverse of to_plane_coords; used by tests as a round-trip oracle."""
    u, v, h = pts.coords[:, 0], pts.coords[:, 1], pts.coords[:, 2]
    return (
        plane.centroid
        + u[:, None] * plane.basis_u
        + v[:, None] * plane.basis_v
        + h[:, None] * plane.normal
    )


def fix_orientation(
    pts: PlanePointSet, plane: GroundPlane
) -> tuple[PlanePointSet, GroundPlane]:
    """Flip the normal so more mass sits above the plane than below.

    The decision compares counts of h > eps against h < -eps with
    eps = the RANSAC threshold; flipping negates n, h and basis_v so the
    frame stays right-handed. Idempotent.
    """
    if len(pts.coords) == 0:
        raise DomainError("orientation fix needs a nonempty point set")
    eps = plane.threshold
    h = pts.coords[:, 2]
    above = int((h > eps).sum())
    below = int((h < -eps).sum())
    if above >= below:
        return pts, plane
    flipped = replace(
        plane,
        normal=-plane.normal,
        offset=-plane.offset,
        basis_v=-plane.basis_v,
    )
    coords = pts.coords.copy()
    coords[:, 1] = -coords[:, 1]
    coords[:, 2] = -coords[:, 2]
    return PlanePointSet(coords=coords, colors=pts.colors), flipped
