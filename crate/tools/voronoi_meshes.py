"""Centroidal Voronoi meshes of (0,1)^2 reflected across both axes.

Writes meshes/voronoi_<N>.mesh for N in {16, 64, 128, 256}.
"""

import sys
from pathlib import Path

import numpy as np
from scipy.spatial import Voronoi

LLOYD_STEPS = 200
SNAP = 1e-9


def bounded_cells(seeds):
    """Voronoi cells of `seeds` clipped to the unit square via mirror images."""
    n = len(seeds)
    mirrors = [seeds]
    for axis, side in [(0, 0.0), (0, 1.0), (1, 0.0), (1, 1.0)]:
        m = seeds.copy()
        m[:, axis] = 2 * side - m[:, axis]
        mirrors.append(m)
    vor = Voronoi(np.vstack(mirrors))
    cells = []
    for i in range(n):
        region = vor.regions[vor.point_region[i]]
        poly = vor.vertices[region]
        c = poly.mean(axis=0)
        order = np.argsort(np.arctan2(poly[:, 1] - c[1], poly[:, 0] - c[0]))
        cells.append(poly[order])
    return cells


def centroid(poly):
    x, y = poly[:, 0], poly[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cr = x * ys - xs * y
    a = cr.sum() / 2
    return np.array([((x + xs) * cr).sum(), ((y + ys) * cr).sum()]) / (6 * a)


def lloyd(n, rng):
    seeds = rng.random((n, 2))
    for _ in range(LLOYD_STEPS):
        seeds = np.array([centroid(c) for c in bounded_cells(seeds)])
    return bounded_cells(seeds)


def snap(v):
    v = np.where(np.abs(v) < SNAP, 0.0, v)
    return np.where(np.abs(v - 1) < SNAP, 1.0, v)


def reflected_mesh(cells):
    verts, index, loops = [], {}, []

    def vid(p):
        key = (round(p[0], 9), round(p[1], 9))
        if key not in index:
            index[key] = len(verts)
            verts.append(p)
        return index[key]

    for sx, sy in [(1, 1), (-1, 1), (-1, -1), (1, -1)]:
        for c in cells:
            pts = snap(c) * np.array([sx, sy])
            if sx * sy < 0:
                pts = pts[::-1]
            loop = []
            for p in pts:
                i = vid(p)
                if not loop or loop[-1] != i:
                    loop.append(i)
            if loop[0] == loop[-1]:
                loop.pop()
            loops.append(loop)
    return verts, loops


def write(path, verts, loops):
    with open(path, "w") as f:
        f.write("ncvem-mesh 1\n")
        f.write(f"vertices {len(verts)}\n")
        for p in verts:
            f.write(f"{float(p[0])!r} {float(p[1])!r}\n")
        f.write(f"elements {len(loops)}\n")
        for l in loops:
            f.write(" ".join(map(str, [len(l)] + l)) + "\n")


def main(out):
    out.mkdir(parents=True, exist_ok=True)
    for total in [16, 64, 128, 256]:
        rng = np.random.default_rng(total)
        verts, loops = reflected_mesh(lloyd(total // 4, rng))
        write(out / f"voronoi_{total}.mesh", verts, loops)


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "meshes")
