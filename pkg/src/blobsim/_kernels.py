"""Compiled pair loops over the linked cell grid.

The Gaussian profile decays to e^-cutoff^2 at the neighborhood radius, so
every sum is restricted to the 27 cells around a point (cell size >= that
radius).  The hot self-evaluation kernel walks each unordered pair once via
the 13 forward cell offsets and accumulates both sides; all loops are
serial, so summation order is fixed and runs are reproducible.
"""
import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a hard dep, but keep tests alive
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


# forward half of the 3x3x3 neighborhood (excludes the self cell)
_HALF_OFFSETS = np.array(
    [
        [1, 0, 0], [1, 1, 0], [-1, 1, 0], [0, 1, 0],
        [0, 0, 1], [-1, 0, 1], [1, 0, 1], [-1, -1, 1],
        [0, -1, 1], [1, -1, 1], [-1, 1, 1], [0, 1, 1], [1, 1, 1],
    ],
    dtype=np.int64,
)


@njit(cache=True)
def self_density_grad(pos, order, start, nx, ny, nz, ox, oy, oz, h, beta, pref, cutoff2):
    """Raw kernel sums at every particle position (self term included).

    Returns (rho_raw, grad_raw): rho_raw[i] = sum_j pref*exp(-beta d_ij^2),
    grad_raw[i] = -2 beta sum_j w_ij (x_i - x_j).  Multiply by the particle
    mass to get density and its spatial gradient.
    """
    n = pos.shape[0]
    rho = np.full(n, pref)  # self contribution, zero gradient
    grad = np.zeros((n, 3))
    two_beta = 2.0 * beta
    for cz in range(nz):
        for cy in range(ny):
            for cx in range(nx):
                c = cx + nx * (cy + ny * cz)
                a0, a1 = start[c], start[c + 1]
                if a0 == a1:
                    continue
                # pairs inside the cell
                for ii in range(a0, a1):
                    i = order[ii]
                    xi, yi, zi = pos[i, 0], pos[i, 1], pos[i, 2]
                    for jj in range(ii + 1, a1):
                        j = order[jj]
                        dx = xi - pos[j, 0]
                        dy = yi - pos[j, 1]
                        dz = zi - pos[j, 2]
                        d2 = dx * dx + dy * dy + dz * dz
                        if d2 <= cutoff2:
                            w = pref * np.exp(-beta * d2)
                            rho[i] += w
                            rho[j] += w
                            gx = two_beta * w * dx
                            gy = two_beta * w * dy
                            gz = two_beta * w * dz
                            grad[i, 0] -= gx
                            grad[i, 1] -= gy
                            grad[i, 2] -= gz
                            grad[j, 0] += gx
                            grad[j, 1] += gy
                            grad[j, 2] += gz
                # pairs against the 13 forward neighbor cells
                for k in range(13):
                    bx = cx + _HALF_OFFSETS[k, 0]
                    by = cy + _HALF_OFFSETS[k, 1]
                    bz = cz + _HALF_OFFSETS[k, 2]
                    if bx < 0 or bx >= nx or by < 0 or by >= ny or bz < 0 or bz >= nz:
                        continue
                    b = bx + nx * (by + ny * bz)
                    b0, b1 = start[b], start[b + 1]
                    for ii in range(a0, a1):
                        i = order[ii]
                        xi, yi, zi = pos[i, 0], pos[i, 1], pos[i, 2]
                        for jj in range(b0, b1):
                            j = order[jj]
                            dx = xi - pos[j, 0]
                            dy = yi - pos[j, 1]
                            dz = zi - pos[j, 2]
                            d2 = dx * dx + dy * dy + dz * dz
                            if d2 <= cutoff2:
                                w = pref * np.exp(-beta * d2)
                                rho[i] += w
                                rho[j] += w
                                gx = two_beta * w * dx
                                gy = two_beta * w * dy
                                gz = two_beta * w * dz
                                grad[i, 0] -= gx
                                grad[i, 1] -= gy
                                grad[i, 2] -= gz
                                grad[j, 0] += gx
                                grad[j, 1] += gy
                                grad[j, 2] += gz
    return rho, grad


@njit(cache=True)
def probe_density_grad(probes, pos, order, start, nx, ny, nz, ox, oy, oz, h, beta, pref, cutoff2):
    """Raw kernel sums at arbitrary probe points (27-cell scan per probe)."""
    m = probes.shape[0]
    rho = np.zeros(m)
    grad = np.zeros((m, 3))
    two_beta = 2.0 * beta
    for q in range(m):
        px, py, pz = probes[q, 0], probes[q, 1], probes[q, 2]
        cx = int(np.floor((px - ox) / h))
        cy = int(np.floor((py - oy) / h))
        cz = int(np.floor((pz - oz) / h))
        s = 0.0
        gx = gy = gz = 0.0
        for bz in range(cz - 1, cz + 2):
            if bz < 0 or bz >= nz:
                continue
            for by in range(cy - 1, cy + 2):
                if by < 0 or by >= ny:
                    continue
                for bx in range(cx - 1, cx + 2):
                    if bx < 0 or bx >= nx:
                        continue
                    b = bx + nx * (by + ny * bz)
                    for jj in range(start[b], start[b + 1]):
                        j = order[jj]
                        dx = px - pos[j, 0]
                        dy = py - pos[j, 1]
                        dz = pz - pos[j, 2]
                        d2 = dx * dx + dy * dy + dz * dz
                        if d2 <= cutoff2:
                            w = pref * np.exp(-beta * d2)
                            s += w
                            gx -= two_beta * w * dx
                            gy -= two_beta * w * dy
                            gz -= two_beta * w * dz
        rho[q] = s
        grad[q, 0] = gx
        grad[q, 1] = gy
        grad[q, 2] = gz
    return rho, grad


@njit(cache=True)
def cross_sum(pos, order, start, nx, ny, nz, beta, pref, cutoff2, rho):
    """S_r = sum_p w_rp (x_p - x_r) / rho_p over grid neighbors.

    rho must hold the mass-scaled density at every particle; the self pair
    contributes nothing (zero separation).
    """
    n = pos.shape[0]
    out = np.zeros((n, 3))
    for cz in range(nz):
        for cy in range(ny):
            for cx in range(nx):
                c = cx + nx * (cy + ny * cz)
                a0, a1 = start[c], start[c + 1]
                if a0 == a1:
                    continue
                for ii in range(a0, a1):
                    i = order[ii]
                    xi, yi, zi = pos[i, 0], pos[i, 1], pos[i, 2]
                    for jj in range(ii + 1, a1):
                        j = order[jj]
                        dx = xi - pos[j, 0]
                        dy = yi - pos[j, 1]
                        dz = zi - pos[j, 2]
                        d2 = dx * dx + dy * dy + dz * dz
                        if d2 <= cutoff2:
                            w = pref * np.exp(-beta * d2)
                            out[i, 0] -= w * dx / rho[j]
                            out[i, 1] -= w * dy / rho[j]
                            out[i, 2] -= w * dz / rho[j]
                            out[j, 0] += w * dx / rho[i]
                            out[j, 1] += w * dy / rho[i]
                            out[j, 2] += w * dz / rho[i]
                for k in range(13):
                    bx = cx + _HALF_OFFSETS[k, 0]
                    by = cy + _HALF_OFFSETS[k, 1]
                    bz = cz + _HALF_OFFSETS[k, 2]
                    if bx < 0 or bx >= nx or by < 0 or by >= ny or bz < 0 or bz >= nz:
                        continue
                    b = bx + nx * (by + ny * bz)
                    for ii in range(a0, a1):
                        i = order[ii]
                        xi, yi, zi = pos[i, 0], pos[i, 1], pos[i, 2]
                        for jj in range(start[b], start[b + 1]):
                            j = order[jj]
                            dx = xi - pos[j, 0]
                            dy = yi - pos[j, 1]
                            dz = zi - pos[j, 2]
                            d2 = dx * dx + dy * dy + dz * dz
                            if d2 <= cutoff2:
                                w = pref * np.exp(-beta * d2)
                                out[i, 0] -= w * dx / rho[j]
                                out[i, 1] -= w * dy / rho[j]
                                out[i, 2] -= w * dz / rho[j]
                                out[j, 0] += w * dx / rho[i]
                                out[j, 1] += w * dy / rho[i]
                                out[j, 2] += w * dz / rho[i]
    return out
