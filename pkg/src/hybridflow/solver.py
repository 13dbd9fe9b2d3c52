"""Finite-volume solver for per-class densities along a single edge.

The scheme is a forward-only (downstream) first-order update: each interior
cell exchanges mass with its upstream neighbour through an upwind flux whose
advection speed is evaluated at a blend of the local and downstream total
density. The blend factor alpha in [0, 1] sets how far ahead riders look:
alpha = 1 means speed is chosen from the cell in front, alpha = 0 reduces
to classical upwind.

Boundary contract: cells 0 and n-1 are ghosts pinned to zero. Nothing flows
in through cell 0 (sources place density into cell 1 from outside) and
nothing flows out through the downstream end inside the solver: the last
cell of the solver domain is a wall, and mass leaves an edge only when the
node layer harvests the end cell. This makes every solver call exactly
conservative on its own.

When the downstream node is full, a zone of fullCells trailing cells is
frozen at jam density and excluded from the update; distribute_last_densities
compacts arrivals into the zone's upstream frontier and grows it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagrams import ModeDynamics
from .network import CellGrid, Edge, EdgeMode, Network, build_cell_grid

#: a cell more negative than this means the scheme itself is broken
NEGATIVE_DENSITY_ABORT = -1e-12


class NegativeDensityError(RuntimeError):
    """A density fell below the round-off tolerance: scheme or caller bug."""


class StabilityError(ValueError):
    """Timestep too large for the grid and free-flow speeds."""


@dataclass(frozen=True)
class JamEvent:
    """An edge's full zone reached back to its start cell."""

    edge_id: str
    step: int = -1  # stamped by the engine


@dataclass
class EdgeState:
    """Mutable per-edge simulation state.

    dens has shape (classes, n) in mode density units (people/m^2 or cars/m).
    For street edges, persons is a parallel grid of person-density carried by
    the cars (persons per metre of lane), advected by the identical kernel so
    per-parcel occupancy survives cell mixing exactly. full_cells counts
    trailing cells frozen because the downstream node is full.
    """

    edge_id: str
    mode: EdgeMode
    grid: CellGrid
    length: float
    width: float
    alpha: float
    dens: np.ndarray
    persons: np.ndarray | None = None
    full_cells: int = 0

    def total(self) -> np.ndarray:
        """Total density per cell (sum over classes)."""
        return self.dens.sum(axis=0)

    def mass(self) -> float:
        """Subject count on the edge: density integrated over width and cells."""
        return float(self.dens.sum()) * self.width * self.grid.dx

    def person_mass(self) -> float:
        """People on the edge (occupancy-weighted for streets)."""
        grid = self.persons if self.persons is not None else self.dens
        return float(grid.sum()) * self.width * self.grid.dx


@dataclass
class SolveStats:
    """Bookkeeping returned by solver calls for the audit and event log."""

    clamped_persons: float = 0.0
    jam_events: list[JamEvent] = field(default_factory=list)

    def merge(self, other: "SolveStats") -> "SolveStats":
        self.clamped_persons += other.clamped_persons
        self.jam_events.extend(other.jam_events)
        return self


def make_edge_state(edge: Edge, dyn: ModeDynamics, alpha: float) -> EdgeState:
    grid = build_cell_grid(edge)
    shape = (dyn.class_count, grid.n)
    persons = np.zeros(shape) if dyn.mode is EdgeMode.STREET else None
    return EdgeState(
        edge_id=edge.id,
        mode=edge.mode,
        grid=grid,
        length=edge.length,
        width=edge.width,
        alpha=alpha,
        dens=np.zeros(shape),
        persons=persons,
    )


def flux(dens_left: float, dens_center: float, dens_right: float,
         vff: float, dyn: ModeDynamics, alpha: float, dx: float,
         tot_left: float | None = None, tot_center: float | None = None,
         tot_right: float | None = None) -> tuple[float, float]:
    """Directional flux pair (downstream, upstream) for one cell of one class.

    The dens_* arguments are the class's own densities on the three-cell
    stencil; the tot_* arguments are the cell totals that set the speed and
    default to the class densities (the single-class case). Only the
    downstream component enters the scheme; the upstream one is its mirror
    and is kept for completeness.
    """
    tl = dens_left if tot_left is None else tot_left
    tc = dens_center if tot_center is None else tot_center
    tr = dens_right if tot_right is None else tot_right

    def speed(total: float) -> float:
        return vff * float(dyn.reduction(np.asarray([total]))[0])

    f_down = (dens_center * speed((1 - alpha) * tc + alpha * tr)
              - dens_left * speed((1 - alpha) * tl + alpha * tc)) / dx
    f_up = (dens_right * speed((1 - alpha) * tr + alpha * tc)
            - dens_center * speed((1 - alpha) * tc + alpha * tl)) / dx
    return f_down, f_up


def _clamp_roundoff(state: EdgeState) -> float:
    """Zero out tiny negative cells; abort on anything below the tolerance.

    Returns the person-count equivalent of mass added by clamping, which the
    audit credits back as slack. For streets only the persons grid
    contributes to the people audit.
    """
    added = 0.0
    people_grid = state.persons if state.persons is not None else state.dens
    for grid in (state.dens, state.persons):
        if grid is None:
            continue
        low = grid.min()
        if low < NEGATIVE_DENSITY_ABORT:
            raise NegativeDensityError(
                f"edge {state.edge_id!r}: density {low} below {NEGATIVE_DENSITY_ABORT}"
            )
        if low < 0.0:
            negative = np.minimum(grid, 0.0)
            if grid is people_grid:
                added -= float(negative.sum()) * state.width * state.grid.dx
            np.maximum(grid, 0.0, out=grid)
    return added


def step_edge(state: EdgeState, dyn: ModeDynamics, dt: float) -> SolveStats:
    """Advance one timestep on the edge's available (non-frozen) cells.

    Updates cells 1 .. n-2-full_cells in place. The caller guarantees the
    CFL bound dt <= dx / v_max; see stability_check.
    """
    stats = SolveStats()
    n = state.grid.n
    hi = n - 2 - state.full_cells
    if hi < 1:
        return stats  # jammed back to the start cell: nothing may move

    dx = state.grid.dx
    reps = dyn.representatives()[:, None]
    tot = state.total()
    # blended total governing the speed of flux out of cells 0 .. n-2
    blend = (1.0 - state.alpha) * tot[:-1] + state.alpha * tot[1:]
    vhat = dyn.reduction(blend)[None, :]

    for grid in (state.dens, state.persons):
        if grid is None:
            continue
        g = grid[:, : n - 1] * (reps * vhat)
        g[:, hi] = 0.0  # wall: only the node layer may take mass off the edge
        grid[:, 1 : hi + 1] += (dt / dx) * (g[:, 0:hi] - g[:, 1 : hi + 1])

    stats.clamped_persons += _clamp_roundoff(state)
    return stats


def distribute_last_densities(state: EdgeState, dyn: ModeDynamics) -> SolveStats:
    """Compact arrivals into the full zone's frontier cell.

    Moves the content of the last available cell into the frontier; when the
    pair exceeds jam density only the fitting fraction of each class moves,
    the frontier is now exactly full, and the zone grows by one cell (then
    repeat one cell upstream). Per-class proportions are preserved by the
    fractional move, and the persons grid moves with the same fractions.
    """
    if state.full_cells < 1:
        raise ValueError("distribute_last_densities requires a full zone")
    stats = SolveStats()
    n = state.grid.n

    while True:
        u = n - 1 - state.full_cells  # frontier: upstream end of the full zone
        p = u - 1  # last available cell
        if u <= 1:
            stats.jam_events.append(JamEvent(state.edge_id))
            break
        tot_u = float(state.dens[:, u].sum())
        tot_p = float(state.dens[:, p].sum())
        if tot_p + tot_u > dyn.rho_max:
            friction = 0.0
            if tot_p > 0.0:
                friction = min(1.0, max(0.0, (dyn.rho_max - tot_u) / tot_p))
            for grid in (state.dens, state.persons):
                if grid is None:
                    continue
                moved = friction * grid[:, p]
                grid[:, u] += moved
                grid[:, p] -= moved
            state.full_cells += 1
        else:
            for grid in (state.dens, state.persons):
                if grid is None:
                    continue
                grid[:, u] += grid[:, p]
                grid[:, p] = 0.0
            break

    return stats


def solve_edge(state: EdgeState, dyn: ModeDynamics, dt: float) -> SolveStats:
    """One edge timestep honouring a full downstream node.

    With a full zone present, arrivals are compacted into it both before the
    step (so the last available cell is empty and the step conserves mass)
    and after (so the step's arrivals queue up instead of lingering).
    """
    stats = SolveStats()
    if state.full_cells > 0:
        stats.merge(distribute_last_densities(state, dyn))
        stats.merge(step_edge(state, dyn, dt))
        stats.merge(distribute_last_densities(state, dyn))
    else:
        stats.merge(step_edge(state, dyn, dt))
    return stats


def stability_check(network: Network, dynamics: dict[EdgeMode, ModeDynamics],
                    dt: float) -> None:
    """Reject timesteps that violate dt <= dx / v_ff_max on any edge.

    The bound is inclusive and uses the fastest class band edge of the
    edge's mode, so every class representative is covered.
    """
    if dt <= 0.0:
        raise StabilityError(f"dt must be positive, got {dt}")
    bad: list[str] = []
    for eid in network.sorted_edge_ids():
        edge = network.edges[eid]
        v_max = dynamics[edge.mode].v_max
        limit = edge.dx / v_max
        if dt > limit:
            bad.append(f"edge {eid!r}: dt={dt} exceeds dx/v_max={limit:.6g}")
    if bad:
        raise StabilityError("; ".join(bad))


def edge_cfl(edge: Edge, dyn: ModeDynamics, dt: float) -> float:
    """Courant number of the fastest band on this edge (diagnostics)."""
    return dt * dyn.v_max / edge.dx
