"""File exporters and parsers: OBJ polylines, VTK ImageData, CSV tables.

All writers are deterministic: fixed float formatting, fixed ordering.
The OBJ format uses ``v`` lines plus one ``l`` line per loop (1-based,
closed by repeating the first index); circulation and core radius travel
in header comments so export -> import -> export is byte-identical.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .curves import CurveSet
from .grid import ComplexField, GridSpec, VectorField

__all__ = [
    "export_curves_obj",
    "import_curves_obj",
    "export_grid_vti",
    "read_grid_vti",
    "export_timings_csv",
    "export_markers_csv",
]

_F = "{:.17g}"


def export_curves_obj(curves: CurveSet, path) -> None:
    lines = ["# closed polyline loops"]
    lines.append(f"# loops {curves.loop_count}")
    lines.append("# gamma " + _F.format(curves.gamma))
    lines.append("# core_radius " + _F.format(curves.core_radius))
    for v in curves.vertices:
        lines.append("v " + " ".join(_F.format(c) for c in v))
    for s, c in curves.loops:
        idx = [str(i + 1) for i in range(s, s + c)]
        lines.append("l " + " ".join(idx + [idx[0]]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def import_curves_obj(path) -> CurveSet:
    verts = []
    loops = []
    gamma, core = 1.0, 0.05
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# gamma "):
                gamma = float(line.split()[-1])
            elif line.startswith("# core_radius "):
                core = float(line.split()[-1])
            elif line.startswith("v "):
                verts.append([float(t) for t in line.split()[1:4]])
            elif line.startswith("l "):
                idx = [int(t) for t in line.split()[1:]]
                if len(idx) >= 2 and idx[-1] == idx[0]:
                    idx = idx[:-1]
                loops.append((idx[0] - 1, len(idx)))
    return CurveSet(np.asarray(verts).reshape(-1, 3), loops, gamma, core)


def _ascii_array(values: np.ndarray) -> str:
    return " ".join("{:.9g}".format(v) for v in values)


def export_grid_vti(field, path) -> None:
    """Write a node field as ASCII VTK XML ImageData.

    Complex fields produce the point arrays ``psi_re``, ``psi_im`` and
    ``psi_abs``; vector fields produce one 3-component array ``v``.
    Point ordering is the VTK convention (x fastest).
    """
    spec = field.spec
    nx, ny, nz = spec.dims
    extent = f"0 {nx - 1} 0 {ny - 1} 0 {nz - 1}"
    origin = " ".join(_F.format(c) for c in spec.origin)
    spacing = " ".join([_F.format(spec.spacing)] * 3)

    if isinstance(field, ComplexField):
        flat = field.values.transpose(2, 1, 0).ravel()
        arrays = [
            ("psi_re", 1, flat.real),
            ("psi_im", 1, flat.imag),
            ("psi_abs", 1, np.abs(flat)),
        ]
        scalars = "psi_abs"
    else:
        flat = field.values.transpose(2, 1, 0, 3).reshape(-1, 3)
        arrays = [("v", 3, flat.ravel())]
        scalars = "v"

    parts = [
        '<?xml version="1.0"?>',
        '<VTKFile type="ImageData" version="0.1" byte_order="LittleEndian">',
        f'  <ImageData WholeExtent="{extent}" Origin="{origin}" Spacing="{spacing}">',
        f'    <Piece Extent="{extent}">',
        f'      <PointData Scalars="{scalars}">',
    ]
    for name, comps, data in arrays:
        comp_attr = f' NumberOfComponents="{comps}"' if comps > 1 else ""
        parts.append(
            f'        <DataArray type="Float64" Name="{name}"{comp_attr} format="ascii">'
        )
        parts.append("          " + _ascii_array(data))
        parts.append("        </DataArray>")
    parts += [
        "      </PointData>",
        "    </Piece>",
        "  </ImageData>",
        "</VTKFile>",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def read_grid_vti(path):
    """Parse a file written by :func:`export_grid_vti`.

    Returns a ComplexField when ``psi_re``/``psi_im`` arrays are present,
    otherwise a VectorField from ``v``.
    """
    tree = ET.parse(path)
    image = tree.getroot().find("ImageData")
    extent = [int(t) for t in image.get("WholeExtent").split()]
    dims = (extent[1] + 1, extent[3] + 1, extent[5] + 1)
    origin = np.array([float(t) for t in image.get("Origin").split()])
    spacing = float(image.get("Spacing").split()[0])
    spec = GridSpec(dims, origin, spacing)

    data = {}
    for arr in image.find("Piece").find("PointData").findall("DataArray"):
        values = np.fromstring(arr.text, sep=" ")
        data[arr.get("Name")] = (int(arr.get("NumberOfComponents") or 1), values)

    nx, ny, nz = dims
    if "psi_re" in data and "psi_im" in data:
        re = data["psi_re"][1].reshape(nz, ny, nx).transpose(2, 1, 0)
        im = data["psi_im"][1].reshape(nz, ny, nx).transpose(2, 1, 0)
        return ComplexField(spec, re + 1j * im)
    if "v" in data:
        v = data["v"][1].reshape(nz, ny, nx, 3).transpose(2, 1, 0, 3)
        return VectorField(spec, v)
    raise ValueError(f"no recognized point arrays in {path}")


_PHASES = ("evaluate_v", "advect_psi", "construct_gamma", "construct_psi", "other")


def export_timings_csv(timings: list[dict], path) -> None:
    """Per-frame phase timings in seconds, six decimals, plus a total column."""
    lines = ["frame," + ",".join(_PHASES) + ",total"]
    for row in timings:
        cells = [f"{row[p]:.6f}" for p in _PHASES]
        total = sum(float(c) for c in cells)
        lines.append(f"{row['frame']}," + ",".join(cells) + f",{total:.6f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def export_markers_csv(markers: np.ndarray, active: np.ndarray, path) -> None:
    lines = ["x,y,z,active"]
    for p, a in zip(markers, active):
        lines.append(",".join(_F.format(c) for c in p) + f",{int(a)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
