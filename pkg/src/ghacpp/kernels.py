"""Hot grid kernels: ray traversal, disc inflation and footprint-mask reductions.

Every kernel has two implementations with identical results: a numba
``@njit`` loop version (``*_nb``) and a vectorized numpy version (``*_np``).
The public names select one of them according to ``_jit.ENABLE_NUMBA``.

Grid convention used throughout the package: arrays are indexed ``[ix, iy]``
and cell ``(ix, iy)`` has its center at ``((ix + 0.5) * res, (iy + 0.5) * res)``.
"""
import math

import numpy as np

from ._jit import ENABLE_NUMBA, njit

UNKNOWN = np.uint8(0)
FREE = np.uint8(1)
OCCUPIED = np.uint8(2)

_EPS = 1e-9


# --------------------------------------------------------------------------
# Ray traversal (Amanatides-Woo grid walk)
# --------------------------------------------------------------------------


def _cast_ray_py(solid, res, x0, y0, angle, max_range):
    nx, ny = solid.shape
    dx = math.cos(angle)
    dy = math.sin(angle)
    ix = int(math.floor(x0 / res))
    iy = int(math.floor(y0 / res))
    if dx > _EPS:
        step_x = 1
        t_max_x = ((ix + 1) * res - x0) / dx
        t_dx = res / dx
    elif dx < -_EPS:
        step_x = -1
        t_max_x = (ix * res - x0) / dx
        t_dx = -res / dx
    else:
        step_x = 0
        t_max_x = math.inf
        t_dx = math.inf
    if dy > _EPS:
        step_y = 1
        t_max_y = ((iy + 1) * res - y0) / dy
        t_dy = res / dy
    elif dy < -_EPS:
        step_y = -1
        t_max_y = (iy * res - y0) / dy
        t_dy = -res / dy
    else:
        step_y = 0
        t_max_y = math.inf
        t_dy = math.inf
    t = 0.0
    while t <= max_range:
        if ix < 0 or iy < 0 or ix >= nx or iy >= ny:
            return math.inf, -1, -1
        if solid[ix, iy]:
            return t, ix, iy
        if t_max_x < t_max_y:
            t = t_max_x
            t_max_x += t_dx
            ix += step_x
        else:
            t = t_max_y
            t_max_y += t_dy
            iy += step_y
    return math.inf, -1, -1


cast_ray_nb = njit(_cast_ray_py)


def _sweep_rays_py(solid, known, res, x0, y0, angles, max_range):
    nx, ny = solid.shape
    for k in range(angles.shape[0]):
        angle = angles[k]
        dx = math.cos(angle)
        dy = math.sin(angle)
        ix = int(math.floor(x0 / res))
        iy = int(math.floor(y0 / res))
        if dx > _EPS:
            step_x = 1
            t_max_x = ((ix + 1) * res - x0) / dx
            t_dx = res / dx
        elif dx < -_EPS:
            step_x = -1
            t_max_x = (ix * res - x0) / dx
            t_dx = -res / dx
        else:
            step_x = 0
            t_max_x = math.inf
            t_dx = math.inf
        if dy > _EPS:
            step_y = 1
            t_max_y = ((iy + 1) * res - y0) / dy
            t_dy = res / dy
        elif dy < -_EPS:
            step_y = -1
            t_max_y = (iy * res - y0) / dy
            t_dy = -res / dy
        else:
            step_y = 0
            t_max_y = math.inf
            t_dy = math.inf
        t = 0.0
        while t <= max_range:
            if ix < 0 or iy < 0 or ix >= nx or iy >= ny:
                break
            if solid[ix, iy]:
                known[ix, iy] = 2
                break
            known[ix, iy] = 1
            if t_max_x < t_max_y:
                t = t_max_x
                t_max_x += t_dx
                ix += step_x
            else:
                t = t_max_y
                t_max_y += t_dy
                iy += step_y


sweep_rays_nb = njit(_sweep_rays_py)


def _ray_setup_np(res, x0, y0, angles):
    dx = np.cos(angles)
    dy = np.sin(angles)
    n = angles.shape[0]
    ix = np.full(n, int(math.floor(x0 / res)), dtype=np.int64)
    iy = np.full(n, int(math.floor(y0 / res)), dtype=np.int64)
    pos_x, neg_x = dx > _EPS, dx < -_EPS
    pos_y, neg_y = dy > _EPS, dy < -_EPS
    step_x = np.where(pos_x, 1, np.where(neg_x, -1, 0)).astype(np.int64)
    step_y = np.where(pos_y, 1, np.where(neg_y, -1, 0)).astype(np.int64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_max_x = np.where(pos_x, ((ix + 1) * res - x0) / dx, np.where(neg_x, (ix * res - x0) / dx, np.inf))
        t_max_y = np.where(pos_y, ((iy + 1) * res - y0) / dy, np.where(neg_y, (iy * res - y0) / dy, np.inf))
        t_dx = np.where(step_x != 0, res / np.abs(dx), np.inf)
        t_dy = np.where(step_y != 0, res / np.abs(dy), np.inf)
    return ix, iy, step_x, step_y, t_max_x, t_max_y, t_dx, t_dy


def sweep_rays_np(solid, known, res, x0, y0, angles, max_range):
    """Lock-step vectorized version of :func:`sweep_rays_nb` (one cell per ray per iteration)."""
    nx, ny = solid.shape
    ix, iy, step_x, step_y, t_max_x, t_max_y, t_dx, t_dy = _ray_setup_np(res, x0, y0, angles)
    t = np.zeros(angles.shape[0])
    active = np.ones(angles.shape[0], dtype=bool)
    while active.any():
        inside = (ix >= 0) & (iy >= 0) & (ix < nx) & (iy < ny)
        active &= inside & (t <= max_range)
        if not active.any():
            break
        a = np.flatnonzero(active)
        hit = solid[ix[a], iy[a]]
        known[ix[a[hit]], iy[a[hit]]] = 2
        known[ix[a[~hit]], iy[a[~hit]]] = 1
        active[a[hit]] = False
        a = a[~hit]
        go_x = t_max_x[a] < t_max_y[a]
        ax, ay = a[go_x], a[~go_x]
        t[ax] = t_max_x[ax]
        t_max_x[ax] += t_dx[ax]
        ix[ax] += step_x[ax]
        t[ay] = t_max_y[ay]
        t_max_y[ay] += t_dy[ay]
        iy[ay] += step_y[ay]


# --------------------------------------------------------------------------
# Disc inflation
# --------------------------------------------------------------------------


def disc_offsets(radius_m, res):
    """Integer cell offsets whose center distance from the origin cell is <= radius_m."""
    r = int(math.floor(radius_m / res + _EPS))
    ii, jj = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    keep = (ii * ii + jj * jj) * res * res <= radius_m * radius_m + _EPS
    return ii[keep].astype(np.int64), jj[keep].astype(np.int64)


def _inflate_py(source, di, dj):
    nx, ny = source.shape
    out = np.zeros((nx, ny), dtype=np.bool_)
    for ix in range(nx):
        for iy in range(ny):
            if source[ix, iy]:
                for k in range(di.shape[0]):
                    jx = ix + di[k]
                    jy = iy + dj[k]
                    if 0 <= jx < nx and 0 <= jy < ny:
                        out[jx, jy] = True
    return out


inflate_nb = njit(_inflate_py)


def inflate_np(source, di, dj):
    nx, ny = source.shape
    out = np.zeros((nx, ny), dtype=bool)
    for a, b in zip(di.tolist(), dj.tolist()):
        # out[x + a, y + b] |= source[x, y]
        xs, xd = (slice(0, nx - a), slice(a, nx)) if a >= 0 else (slice(-a, nx), slice(0, nx + a))
        ys, yd = (slice(0, ny - b), slice(b, ny)) if b >= 0 else (slice(-b, ny), slice(0, ny + b))
        out[xd, yd] |= source[xs, ys]
    return out


# --------------------------------------------------------------------------
# Footprint mask reductions
# --------------------------------------------------------------------------


def _mask_sum_py(grid, pci, pcj, di, dj):
    nx, ny = grid.shape
    out = np.zeros(pci.shape[0], dtype=np.int64)
    for p in range(pci.shape[0]):
        s = 0
        for k in range(di.shape[0]):
            jx = pci[p] + di[k]
            jy = pcj[p] + dj[k]
            if 0 <= jx < nx and 0 <= jy < ny and grid[jx, jy]:
                s += 1
        out[p] = s
    return out


mask_sum_nb = njit(_mask_sum_py)


def mask_sum_np(grid, pci, pcj, di, dj):
    nx, ny = grid.shape
    jx = pci[:, None] + di[None, :]
    jy = pcj[:, None] + dj[None, :]
    ok = (jx >= 0) & (jy >= 0) & (jx < nx) & (jy < ny)
    vals = np.zeros(jx.shape, dtype=bool)
    vals[ok] = grid[jx[ok], jy[ok]]
    return vals.sum(axis=1).astype(np.int64)


def _stamp_py(disinfected, free, ci, cj, di, dj):
    nx, ny = free.shape
    n = 0
    for k in range(di.shape[0]):
        jx = ci + di[k]
        jy = cj + dj[k]
        if 0 <= jx < nx and 0 <= jy < ny and free[jx, jy] and not disinfected[jx, jy]:
            disinfected[jx, jy] = True
            n += 1
    return n


stamp_nb = njit(_stamp_py)


def stamp_np(disinfected, free, ci, cj, di, dj):
    nx, ny = free.shape
    jx = ci + di
    jy = cj + dj
    ok = (jx >= 0) & (jy >= 0) & (jx < nx) & (jy < ny)
    jx, jy = jx[ok], jy[ok]
    fresh = free[jx, jy] & ~disinfected[jx, jy]
    disinfected[jx[fresh], jy[fresh]] = True
    return int(fresh.sum())


if ENABLE_NUMBA:
    cast_ray = cast_ray_nb
    sweep_rays = sweep_rays_nb
    inflate_disc = inflate_nb
    mask_sum = mask_sum_nb
    stamp = stamp_nb
else:
    cast_ray = _cast_ray_py
    sweep_rays = sweep_rays_np
    inflate_disc = inflate_np
    mask_sum = mask_sum_np
    stamp = stamp_np
