"""Legacy ASCII VTK (version 2.0) unstructured-grid output for triangle meshes."""

from __future__ import annotations

from typing import Mapping, Optional

import numpy as np

_VTK_TRIANGLE = 5


def _fmt(x) -> str:
    return format(float(x), ".17g")


def vtk_string(vertices, triangles, point_data: Optional[Mapping[str, np.ndarray]] = None,
               cell_data: Optional[Mapping[str, np.ndarray]] = None, title: str = "thinhomog") -> str:
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=int)
    nv, nt = len(vertices), len(triangles)
    out = ["# vtk DataFile Version 2.0", title.replace("\n", " ")[:255], "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double"]
    out += [f"{_fmt(x)} {_fmt(y)} 0" for x, y in vertices[:, :2]]
    out.append(f"CELLS {nt} {4 * nt}")
    out += [f"3 {a} {b} {c}" for a, b, c in triangles]
    out.append(f"CELL_TYPES {nt}")
    out += [str(_VTK_TRIANGLE)] * nt

    def block(kind, n, data):
        if not data:
            return
        out.append(f"{kind} {n}")
        for name, vals in data.items():
            vals = np.asarray(vals)
            if vals.shape != (n,):
                raise ValueError(f"{kind} field {name!r} has shape {vals.shape}, expected ({n},)")
            integer = vals.dtype.kind in "biu"
            out.append(f"SCALARS {name} {'int' if integer else 'double'} 1")
            out.append("LOOKUP_TABLE default")
            conv = (lambda v: str(int(v))) if integer else _fmt
            out.extend(conv(v) for v in vals)

    block("CELL_DATA", nt, cell_data)
    block("POINT_DATA", nv, point_data)
    return "\n".join(out) + "\n"


def mesh_vtk(m, fields: Optional[Mapping[str, np.ndarray]] = None, title: str = "thinhomog") -> str:
    """VTK text for a thin or cell mesh; thin meshes carry the strip flag as cell data."""
    cells = None
    mask = getattr(m, "strip_mask", None)
    if mask is not None:
        cells = {"strip": mask.astype(np.int64)}
    return vtk_string(m.vertices, m.triangles, fields, cells, title)
