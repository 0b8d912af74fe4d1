"""Soil class assignment from clay/silt/sand composition.

Membership in the four main texture groups is decided in the (clay, silt)
plane by an ordered table of polygons. A point is assigned to the first
polygon that contains it (boundary inclusive), which pins the tie-break
order for points on shared edges; the default table lists T, U, S, L, and
its final L polygon spans the whole composition simplex, so every valid
composition gets a class.

The default table is an editable approximation of the taxonomy's main
groups (clay-rich T above 45% clay; silt-rich U above 65% silt; sandy S at
low clay and low silt; loam L elsewhere). Users holding the official
polygon data can swap in their own CSV of labeled vertices.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .dataset import SoilClass, validate_composition
from .errors import DatasetError

_EPS = 1e-9


def _on_segment(px, py, x1, y1, x2, y2) -> bool:
    cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
    if abs(cross) > _EPS * max(1.0, abs(x2 - x1) + abs(y2 - y1)):
        return False
    return (min(x1, x2) - _EPS <= px <= max(x1, x2) + _EPS
            and min(y1, y2) - _EPS <= py <= max(y1, y2) + _EPS)


def point_in_polygon(px: float, py: float, vertices) -> bool:
    """Ray-casting containment test; points on the boundary count as inside."""
    verts = np.asarray(vertices, dtype=np.float64)
    if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
        raise DatasetError(f"polygon needs >= 3 (x, y) vertices, got shape {verts.shape}")
    inside = False
    n = verts.shape[0]
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if _on_segment(px, py, x1, y1, x2, y2):
            return True
        if (y1 > py) != (y2 > py):
            x_cross = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_cross:
                inside = not inside
    return inside


@dataclass(frozen=True)
class BoundaryTable:
    """Ordered (class, polygon) regions in the (clay, silt) plane."""

    regions: tuple[tuple[SoilClass, np.ndarray], ...]

    @classmethod
    def from_text(cls, text: str, where: str = "<string>") -> "BoundaryTable":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{where}: empty boundary table") from None
        if header != ["label", "clay_pct", "silt_pct"]:
            raise DatasetError(f"{where}: boundary table header must be label,clay_pct,silt_pct")
        order: list[SoilClass] = []
        polys: dict[SoilClass, list[tuple[float, float]]] = {}
        for row in reader:
            if len(row) != 3:
                raise DatasetError(f"{where}: row {reader.line_num}: expected 3 cells")
            label = SoilClass.from_name(row[0])
            try:
                clay, silt = float(row[1]), float(row[2])
            except ValueError:
                raise DatasetError(f"{where}: row {reader.line_num}: non-numeric vertex") from None
            if label not in polys:
                polys[label] = []
                order.append(label)
            polys[label].append((clay, silt))
        regions = []
        for label in order:
            verts = np.array(polys[label], dtype=np.float64)
            if verts.shape[0] < 3:
                raise DatasetError(f"{where}: class {label.name} polygon has < 3 vertices")
            regions.append((label, verts))
        if not regions:
            raise DatasetError(f"{where}: boundary table has no polygons")
        return cls(regions=tuple(regions))

    @classmethod
    def load(cls, path) -> "BoundaryTable":
        with open(path, encoding="utf-8") as handle:
            return cls.from_text(handle.read(), where=str(path))

    @classmethod
    def default(cls) -> "BoundaryTable":
        global _DEFAULT
        if _DEFAULT is None:
            text = resources.files("specnet").joinpath("ka5_default.csv").read_text(encoding="utf-8")
            _DEFAULT = cls.from_text(text, where="ka5_default.csv")
        return _DEFAULT

    def classify(self, clay: float, silt: float) -> SoilClass:
        for label, verts in self.regions:
            if point_in_polygon(clay, silt, verts):
                return label
        raise DatasetError(
            f"boundary table does not cover clay={clay}, silt={silt}; "
            "the last polygon should span the whole simplex"
        )


_DEFAULT: BoundaryTable | None = None


def assign_soil_class(clay_pct: float, silt_pct: float, sand_pct: float,
                      table: BoundaryTable | None = None) -> SoilClass:
    """Map a composition to its texture group via the boundary table."""
    validate_composition(clay_pct, silt_pct, sand_pct)
    table = table or BoundaryTable.default()
    return table.classify(clay_pct, silt_pct)
