"""Nearest-hit ray casting against Gaussian ellipsoid cores.

Occluder j is the solid ellipsoid centred at p_j with semi-axes k_sigma * s_j
oriented by quaternion r_j. A ray hits it when it enters the ellipsoid at
t > 0; rays starting inside an ellipsoid ignore that ellipsoid, so a point
offset from a splatted surface is not blocked by its overlapping neighbours.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import njit, pick

NO_HIT = -1


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrices from (w, x, y, z) quaternions; (..., 4) -> (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    m = np.empty(q.shape[:-1] + (3, 3))
    m[..., 0, 0] = 1 - 2 * (y * y + z * z)
    m[..., 0, 1] = 2 * (x * y - w * z)
    m[..., 0, 2] = 2 * (x * z + w * y)
    m[..., 1, 0] = 2 * (x * y + w * z)
    m[..., 1, 1] = 1 - 2 * (x * x + z * z)
    m[..., 1, 2] = 2 * (y * z - w * x)
    m[..., 2, 0] = 2 * (x * z - w * y)
    m[..., 2, 1] = 2 * (y * z + w * x)
    m[..., 2, 2] = 1 - 2 * (x * x + y * y)
    return m


@dataclass
class Occluders:
    """Ellipsoids in a form the kernels consume.

    ``to_local[j]`` maps world offsets x - p_j into the unit-sphere frame of
    ellipsoid j; ``index[j]`` is the scene index it came from.
    """

    centers: np.ndarray
    to_local: np.ndarray
    radius: np.ndarray
    half_extent: np.ndarray
    index: np.ndarray

    @classmethod
    def from_scene(cls, scene, k_sigma=1.0, min_opacity=0.5):
        keep = np.flatnonzero(scene.opacities >= min_opacity)
        rot = quat_to_matrix(scene.rotations[keep])
        axes = k_sigma * scene.scales[keep]
        to_local = np.transpose(rot, (0, 2, 1)) / axes[:, :, None]
        half = np.sqrt(np.einsum("nij,nj->ni", rot**2, axes**2))
        return cls(
            centers=np.ascontiguousarray(scene.positions[keep]),
            to_local=np.ascontiguousarray(to_local),
            radius=axes.max(axis=1),
            half_extent=half,
            index=keep.astype(np.int64),
        )

    def __len__(self):
        return len(self.centers)


@njit
def _hit_t(o, d, c, A):
    """Entry distance of ray (o, d) into ellipsoid (c, A); -1 when missed."""
    ex = o[0] - c[0]
    ey = o[1] - c[1]
    ez = o[2] - c[2]
    cc = -1.0
    a = 0.0
    b = 0.0
    for r in range(3):
        q0 = A[r, 0] * ex + A[r, 1] * ey + A[r, 2] * ez
        qd = A[r, 0] * d[0] + A[r, 1] * d[1] + A[r, 2] * d[2]
        cc += q0 * q0
        a += qd * qd
        b += q0 * qd
    if cc <= 0.0 or b >= 0.0:
        return -1.0
    disc = b * b - a * cc
    if disc < 0.0:
        return -1.0
    return (-b - np.sqrt(disc)) / a


def _hit_t_numpy(o, d, c, A):
    """Vectorized :func:`_hit_t` over paired rows; -1 marks a miss."""
    q0 = np.einsum("nij,nj->ni", A, o - c)
    qd = np.einsum("nij,nj->ni", A, d)
    cc = np.einsum("ni,ni->n", q0, q0) - 1.0
    a = np.einsum("ni,ni->n", qd, qd)
    b = np.einsum("ni,ni->n", q0, qd)
    disc = b * b - a * cc
    ok = (cc > 0.0) & (disc >= 0.0) & (b < 0.0)
    t = np.full(len(o), -1.0)
    t[ok] = (-b[ok] - np.sqrt(disc[ok])) / a[ok]
    return t


# -- uniform grid (numba path) -------------------------------------------------


@dataclass
class Grid:
    lo: np.ndarray
    cell: float
    dims: np.ndarray
    offsets: np.ndarray
    items: np.ndarray


def build_grid(occ: Occluders, target_per_cell=2.0) -> Grid:
    n = len(occ)
    if n == 0:
        return Grid(np.zeros(3), 1.0, np.ones(3, np.int64), np.zeros(2, np.int64), np.zeros(0, np.int64))
    lo = (occ.centers - occ.half_extent).min(axis=0)
    hi = (occ.centers + occ.half_extent).max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    cells_wanted = max(1.0, n / target_per_cell)
    cell = float((np.prod(span) / cells_wanted) ** (1.0 / 3.0))
    cell = max(cell, float(np.median(occ.half_extent.max(axis=1))) * 2.0, 1e-9)
    dims = np.minimum(np.maximum(np.ceil(span / cell).astype(np.int64), 1), 256)
    cell = float(np.max(span / dims))
    dims = np.maximum(np.ceil(span / cell - 1e-9).astype(np.int64), 1)
    offsets, items = _fill_grid(occ.centers, occ.half_extent, lo, cell, dims)
    return Grid(lo, cell, dims, offsets, items)


@njit
def _fill_grid(centers, half, lo, cell, dims):
    n = centers.shape[0]
    ncell = dims[0] * dims[1] * dims[2]
    counts = np.zeros(ncell + 1, np.int64)
    rng = np.empty((n, 6), np.int64)
    for j in range(n):
        for a in range(3):
            i0 = int((centers[j, a] - half[j, a] - lo[a]) / cell)
            i1 = int((centers[j, a] + half[j, a] - lo[a]) / cell)
            rng[j, a] = min(max(i0, 0), dims[a] - 1)
            rng[j, 3 + a] = min(max(i1, 0), dims[a] - 1)
        for x in range(rng[j, 0], rng[j, 3] + 1):
            for y in range(rng[j, 1], rng[j, 4] + 1):
                for z in range(rng[j, 2], rng[j, 5] + 1):
                    counts[(x * dims[1] + y) * dims[2] + z + 1] += 1
    offsets = np.cumsum(counts)
    fill = offsets[:-1].copy()
    items = np.empty(offsets[-1], np.int64)
    for j in range(n):
        for x in range(rng[j, 0], rng[j, 3] + 1):
            for y in range(rng[j, 1], rng[j, 4] + 1):
                for z in range(rng[j, 2], rng[j, 5] + 1):
                    c = (x * dims[1] + y) * dims[2] + z
                    items[fill[c]] = j
                    fill[c] += 1
    return offsets, items


@njit
def _cast_grid_nb(origins, dirs, exclude, centers, to_local, scene_index, lo, cell, dims, offsets, items, any_hit):
    nray = origins.shape[0]
    hit = np.full(nray, -1, np.int64)
    tout = np.full(nray, np.inf)
    hi = np.empty(3)
    for a in range(3):
        hi[a] = lo[a] + dims[a] * cell
    cellidx = np.empty(3, np.int64)
    step = np.empty(3, np.int64)
    tmax = np.empty(3)
    tdelta = np.empty(3)
    for r in range(nray):
        o = origins[r]
        d = dirs[r]
        # clip against the grid box
        t0 = 0.0
        t1 = np.inf
        for a in range(3):
            if d[a] != 0.0:
                ta = (lo[a] - o[a]) / d[a]
                tb = (hi[a] - o[a]) / d[a]
                if ta > tb:
                    ta, tb = tb, ta
                t0 = max(t0, ta)
                t1 = min(t1, tb)
            elif o[a] < lo[a] or o[a] > hi[a]:
                t1 = -1.0
        if t0 > t1:
            continue
        for a in range(3):
            p = o[a] + t0 * d[a]
            ci = int((p - lo[a]) / cell)
            ci = min(max(ci, 0), dims[a] - 1)
            cellidx[a] = ci
            if d[a] > 0.0:
                step[a] = 1
                tmax[a] = (lo[a] + (ci + 1) * cell - o[a]) / d[a]
                tdelta[a] = cell / d[a]
            elif d[a] < 0.0:
                step[a] = -1
                tmax[a] = (lo[a] + ci * cell - o[a]) / d[a]
                tdelta[a] = -cell / d[a]
            else:
                step[a] = 0
                tmax[a] = np.inf
                tdelta[a] = np.inf
        best_t = np.inf
        best_j = -1
        while True:
            c = (cellidx[0] * dims[1] + cellidx[1]) * dims[2] + cellidx[2]
            for s in range(offsets[c], offsets[c + 1]):
                j = items[s]
                if scene_index[j] == exclude[r]:
                    continue
                t = _hit_t(o, d, centers[j], to_local[j])
                if t > 0.0 and (t < best_t or (t == best_t and scene_index[j] < scene_index[best_j])):
                    best_t = t
                    best_j = j
            t_exit = min(tmax[0], min(tmax[1], tmax[2]))
            if best_j >= 0 and (any_hit or best_t <= t_exit):
                break
            if t_exit > t1:
                break
            if tmax[0] <= tmax[1] and tmax[0] <= tmax[2]:
                a = 0
            elif tmax[1] <= tmax[2]:
                a = 1
            else:
                a = 2
            cellidx[a] += step[a]
            if cellidx[a] < 0 or cellidx[a] >= dims[a]:
                break
            tmax[a] += tdelta[a]
        if best_j >= 0:
            hit[r] = scene_index[best_j]
            tout[r] = best_t
    return hit, tout


def cast_rays_numba(origins, dirs, exclude, occ: Occluders, any_hit=False, grid: Grid | None = None):
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    exclude = np.ascontiguousarray(np.broadcast_to(exclude, (len(origins),)), dtype=np.int64)
    if len(occ) == 0:
        return np.full(len(origins), NO_HIT, np.int64), np.full(len(origins), np.inf)
    g = build_grid(occ) if grid is None else grid
    return _cast_grid_nb(
        origins, dirs, exclude, occ.centers, occ.to_local, occ.index,
        g.lo, g.cell, g.dims, g.offsets, g.items, any_hit,
    )


# -- cone culling (numpy path) -------------------------------------------------


def _cast_from_point_numpy(o, dirs, exclude, occ: Occluders):
    """Rays sharing origin ``o``: bounding-sphere cull, then exact tests."""
    nd = len(dirs)
    hit = np.full(nd, NO_HIT, np.int64)
    tout = np.full(nd, np.inf)
    keep = occ.index != exclude
    if not keep.any():
        return hit, tout
    centers = occ.centers[keep]
    rel = centers - o
    dist2 = np.einsum("ij,ij->i", rel, rel)
    r2 = occ.radius[keep] ** 2
    proj = dirs @ rel.T
    cand = ((proj > 0.0) & (dist2[None, :] - proj * proj <= r2[None, :])) | (dist2 <= r2)[None, :]
    ri, ji = np.nonzero(cand)
    if len(ri) == 0:
        return hit, tout
    A = occ.to_local[keep][ji]
    t = _hit_t_numpy(np.broadcast_to(o, (len(ri), 3)), dirs[ri], centers[ji], A)
    good = t > 0.0
    ri, ji, t = ri[good], ji[good], t[good]
    if len(ri) == 0:
        return hit, tout
    sidx = occ.index[keep][ji]
    order = np.lexsort((sidx, t, ri))
    ri, sidx, t = ri[order], sidx[order], t[order]
    first = np.ones(len(ri), dtype=bool)
    first[1:] = ri[1:] != ri[:-1]
    hit[ri[first]] = sidx[first]
    tout[ri[first]] = t[first]
    return hit, tout


def cast_rays_numpy(origins, dirs, exclude, occ: Occluders, any_hit=False, grid=None):
    origins = np.asarray(origins, dtype=np.float64)
    dirs = np.asarray(dirs, dtype=np.float64)
    exclude = np.broadcast_to(np.asarray(exclude, dtype=np.int64), (len(origins),))
    hit = np.full(len(origins), NO_HIT, np.int64)
    tout = np.full(len(origins), np.inf)
    if len(occ) == 0 or len(origins) == 0:
        return hit, tout
    # group rays by shared origin so each group gets one culling pass
    keys = np.concatenate([origins, exclude[:, None].astype(np.float64)], axis=1)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    for g in range(len(uniq)):
        sel = np.flatnonzero(inverse == g)
        h, t = _cast_from_point_numpy(origins[sel[0]], dirs[sel], int(exclude[sel[0]]), occ)
        hit[sel] = h
        tout[sel] = t
    return hit, tout


def cast_rays(origins, dirs, exclude, occ: Occluders, any_hit=False, grid=None):
    """Nearest opaque hit per ray. Returns ``(scene_index or -1, distance or inf)``.

    ``exclude`` (scalar or per-ray) is a scene index the ray must ignore.
    With ``any_hit`` the numba path may stop at the first hit found.
    """
    return pick(cast_rays_numba, cast_rays_numpy)(origins, dirs, exclude, occ, any_hit, grid)
