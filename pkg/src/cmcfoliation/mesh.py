"""Triangle meshes and ASCII OBJ I/O (``v`` and ``f`` records only)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Mesh:
    vertices: np.ndarray  # (N, 3) float
    faces: np.ndarray  # (M, 3) int, zero-based

    def merged(self, other: "Mesh") -> "Mesh":
        return Mesh(np.vstack([self.vertices, other.vertices]),
                    np.vstack([self.faces, other.faces + len(self.vertices)]))


def grid_faces(nu: int, nv: int, wrap_v: bool = True, drop_degenerate_row0: bool = False):
    """Triangulate an ``nu x nv`` vertex grid (row-major, ``v`` fastest)."""
    faces = []
    vmax = nv if wrap_v else nv - 1
    for i in range(nu - 1):
        for j in range(vmax):
            a = i * nv + j
            b = i * nv + (j + 1) % nv
            c = (i + 1) * nv + j
            d = (i + 1) * nv + (j + 1) % nv
            if not (drop_degenerate_row0 and i == 0):
                faces.append((a, b, d))
            faces.append((a, d, c))
    return np.array(faces, dtype=np.int64).reshape(-1, 3)


def revolve(r: np.ndarray, z: np.ndarray, n_theta: int) -> Mesh:
    """Surface of revolution of the profile ``(r_i, z_i)`` in 3-space."""
    th = 2.0 * np.pi * np.arange(n_theta) / n_theta
    R = np.asarray(r, dtype=float)[:, None]
    Z = np.asarray(z, dtype=float)[:, None]
    V = np.stack([R * np.cos(th)[None, :], R * np.sin(th)[None, :],
                  np.broadcast_to(Z, (len(r), n_theta))], axis=-1).reshape(-1, 3)
    on_axis = bool(r[0] == 0.0)
    return Mesh(V, grid_faces(len(r), n_theta, True, on_axis))


def write_obj(path, mesh: Mesh, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for v in mesh.vertices:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for f in mesh.faces:
            fh.write(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}\n")


def read_obj(path) -> Mesh:
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return Mesh(np.array(verts, dtype=float).reshape(-1, 3),
                np.array(faces, dtype=np.int64).reshape(-1, 3))
