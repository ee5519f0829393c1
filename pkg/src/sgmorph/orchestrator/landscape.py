"""Surrogate objective over the top-two principal plane of evaluated designs."""

import csv
from dataclasses import dataclass

import numpy as np

from ..design_opt import DesignObjective
from ..morphology import clamp_design
from ..numerics import pca_top2


@dataclass
class Landscape:
    pca: object
    z1: np.ndarray  # (grid,) first latent coordinate of each column
    z2: np.ndarray  # (grid,) second latent coordinate of each row
    designs: np.ndarray  # (grid, grid, d) clamped back-projections
    values: np.ndarray  # (grid, grid), values[row, col] at (z1[col], z2[row])
    evaluated: np.ndarray  # (n, d) the designs the plane was fitted to
    projections: np.ndarray  # (n, 2)


def _axis(lo, hi, grid):
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, grid)


def design_landscape(objective, evaluated_designs, grid=64):
    """Evaluate ``objective`` (a :class:`DesignObjective`) on a ``grid x grid`` latent lattice.

    The lattice spans the bounding rectangle of the evaluated designs'
    projections; every lattice point is mapped back to design space and
    clamped to the bounds before evaluation.
    """
    evaluated = np.atleast_2d(np.asarray(evaluated_designs, dtype=np.float64))
    if evaluated.shape[0] < 3:
        raise ValueError(f"the landscape needs at least 3 evaluated designs, got {evaluated.shape[0]}")
    if grid < 2:
        raise ValueError("grid must be at least 2")
    pca = pca_top2(evaluated)
    proj = pca.projections
    z1 = _axis(proj[:, 0].min(), proj[:, 0].max(), grid)
    z2 = _axis(proj[:, 1].min(), proj[:, 1].max(), grid)
    zz1, zz2 = np.meshgrid(z1, z2)
    latent = np.column_stack([zz1.ravel(), zz2.ravel()])
    designs = np.array([clamp_design(x, objective.space).values for x in pca.back_project(latent)])
    values = objective.evaluate_many(designs).reshape(grid, grid)
    return Landscape(pca, z1, z2, designs.reshape(grid, grid, -1), values, evaluated, proj)


def landscape_objective(gnn, graph, space, states):
    return DesignObjective(gnn, graph, space, states)


def write_landscape_csv(path, land):
    d = land.designs.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "z1", "z2", *[f"x{k}" for k in range(d)], "objective"])
        for i in range(land.values.shape[0]):
            for j in range(land.values.shape[1]):
                w.writerow([i, j, repr(land.z1[j]), repr(land.z2[i]), *map(repr, land.designs[i, j]), repr(land.values[i, j])])


def _colour(t):
    # dark blue -> yellow
    stops = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], dtype=float)
    x = np.clip(t, 0.0, 1.0) * (len(stops) - 1)
    k = min(int(x), len(stops) - 2)
    c = stops[k] + (x - k) * (stops[k + 1] - stops[k])
    return "#%02x%02x%02x" % tuple(int(round(v)) for v in c)


def write_landscape_svg(path, land, cell=6, title=""):
    rows, cols = land.values.shape
    lo, hi = float(land.values.min()), float(land.values.max())
    span = hi - lo if hi > lo else 1.0
    margin = 30
    width, height = cols * cell + 2 * margin, rows * cell + 2 * margin
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{margin}" y="18" font-family="sans-serif" font-size="12">{title} objective in [{lo:.4g}, {hi:.4g}]</text>',
    ]
    # latent row 0 (smallest z2) is drawn at the bottom
    for i in range(rows):
        y = margin + (rows - 1 - i) * cell
        for j in range(cols):
            colour = _colour((land.values[i, j] - lo) / span)
            out.append(f'<rect x="{margin + j * cell}" y="{y}" width="{cell}" height="{cell}" fill="{colour}"/>')

    def to_px(z, axis, n):
        lo_z, hi_z = axis[0], axis[-1]
        return (z - lo_z) / (hi_z - lo_z) * (n - 1) * cell + cell / 2

    for z in land.projections:
        px = margin + to_px(z[0], land.z1, cols)
        py = margin + (rows - 1) * cell - to_px(z[1], land.z2, rows) + cell
        out.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="3" fill="none" stroke="white" stroke-width="1.2"/>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
