"""Independent reference implementations used to check the package numerics.

Everything here is deliberately written with scalar math and plain loops,
with no imports from ``hybridflow``, so a bug in the package cannot hide
behind a shared code path.
"""

from __future__ import annotations

import math

PED_VFF = 1.34
PED_SIGMA = 0.26
PED_GAMMA = 1.913
PED_RHO_MAX = 5.4

CAR_VFF = 15.0
CAR_BIG_K = 6.83
CAR_N = 1.81
CAR_RHO_MAX = 0.12

OCCUPANCY_COUNTS = (452, 979, 273, 185, 62, 9)


def ped_speed(rho, vff=PED_VFF, gamma=PED_GAMMA, rho_max=PED_RHO_MAX):
    """Walking speed at crowd density rho (people/m^2)."""
    if rho <= 1e-12:
        return vff
    if rho >= rho_max:
        return 0.0
    return vff * (1.0 - math.exp(-gamma * (1.0 / rho - 1.0 / rho_max)))


def car_speed(rho, vff=CAR_VFF, big_k=CAR_BIG_K, n=CAR_N, rho_max=CAR_RHO_MAX):
    """Driving speed at linear car density rho (cars/m)."""
    if rho >= rho_max:
        return 0.0
    return vff * (rho_max**n - rho**n) / (rho_max**n + big_k * rho**n)


def normal_cdf(x, mu, sigma):
    return 0.5 * (1.0 + math.erf((x - mu) / (sigma * math.sqrt(2.0))))


def band_masses(boundaries, mu, sigma):
    """Probability mass of each [b_j, b_{j+1}] band under N(mu, sigma)."""
    return [
        normal_cdf(hi, mu, sigma) - normal_cdf(lo, mu, sigma)
        for lo, hi in zip(boundaries[:-1], boundaries[1:])
    ]


def upwind_constant_step(cells, speed, dt, dx):
    """One textbook first-order upwind step at constant speed.

    ``cells`` covers the whole grid including the two zero ghost cells.
    Inflow at the left boundary is zero and the right end of the interior
    acts as a wall: nothing crosses into the trailing ghost cell.
    """
    n = len(cells)
    nu = speed * dt / dx
    out = list(cells)
    for i in range(1, n - 1):
        outflux = 0.0 if i == n - 2 else nu * cells[i]
        influx = nu * cells[i - 1]
        out[i] = cells[i] - outflux + influx
    out[0] = 0.0
    out[n - 1] = 0.0
    return out


def enumerate_route_cost(out_edges, source, target, weights):
    """Minimum source->target cost over all simple paths, by exhaustion.

    ``out_edges`` maps node -> list of (edge_id, head_node). Costs are folded
    right-to-left along each path (w0 + (w1 + (... + 0))) so the floating
    point accumulation order matches a cost-to-go recursion exactly.
    Returns math.inf when no path exists.
    """
    best = math.inf

    def walk(node, visited, path):
        nonlocal best
        if node == target:
            cost = 0.0
            for eid in reversed(path):
                cost = weights[eid] + cost
            best = min(best, cost)
            return
        for eid, head in out_edges.get(node, ()):
            if weights[eid] == math.inf or head in visited:
                continue
            walk(head, visited | {head}, path + [eid])

    walk(source, {source}, [])
    return best


def occupancy_mean(counts=OCCUPANCY_COUNTS):
    total = sum(counts)
    return sum((k + 1) * c for k, c in enumerate(counts)) / total


# Values frozen from the oracles above (computed once, by hand-checked runs
# of this module) so regressions in the oracles themselves are also caught.
FROZEN = {
    "ped_speed_at_1": 1.0580628560768004,
    "ped_reduced_at_1": 0.7895991463259704,
    "car_speed_at_006": 3.6372682983549733,
    "band_mass_minus1_to_0_sigma": 0.3413447460685429,
    "empty_walkway_weight_len10": 7.462686567164178,
    "street_weight_len150_rho006": 41.239740292966694,
    "occupancy_mean": 2.210714285714286,
    "ped_vmax_3sigma": 2.12,
}
