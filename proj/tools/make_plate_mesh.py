#!/usr/bin/env python3
# Copyright the ronorm contributors. All Rights Reserved.
# SPDX-License-Identifier: Apache-2.0
"""Writes the jittered L-shaped plate mesh and the two tiny reference meshes."""

import argparse
import pathlib

import numpy as np
from scipy.spatial import Delaunay


def l_plate(n=19, jitter=0.15, seed=7):
    h = 1.0 / (n - 1)
    rng = np.random.default_rng(seed)
    pts = []
    for i in range(n):
        for j in range(n):
            x, y = i * h, j * h
            if x > 0.5 + 1e-9 and y > 0.5 + 1e-9:
                continue
            on_edge = i in (0, n - 1) or j in (0, n - 1) or abs(x - 0.5) < 1e-9 or abs(y - 0.5) < 1e-9
            if not on_edge:
                x += rng.uniform(-jitter, jitter) * h
                y += rng.uniform(-jitter, jitter) * h
            pts.append((x, y))
    pts = np.array(pts)
    tri = Delaunay(pts).simplices
    c = pts[tri].mean(axis=1)
    keep = ~((c[:, 0] > 0.5) & (c[:, 1] > 0.5))
    return pts, tri[keep]


def write(path, pts, tris, comment):
    with open(path, "w") as f:
        f.write(f"# {comment}\n")
        f.write(f"{len(pts)} {len(tris)} 2\n")
        for p in pts:
            f.write(f"{p[0]:.17g} {p[1]:.17g}\n")
        for t in tris:
            a, b, c = (int(v) for v in t)
            # counter-clockwise orientation
            e1, e2 = pts[b] - pts[a], pts[c] - pts[a]
            if e1[0] * e2[1] - e1[1] * e2[0] < 0:
                b, c = c, b
            f.write(f"{a} {b} {c}\n")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "meshes"))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pts, tris = l_plate()
    write(out / "l_plate.msh", pts, tris, "L-shaped plate, jittered 19x19 grid, Delaunay")
    write(out / "triangle.msh", np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]), "single right triangle")
    write(out / "unit_square.msh", np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]), np.array([[0, 1, 2], [0, 2, 3]]),
          "unit square, two triangles")


if __name__ == "__main__":
    main()
