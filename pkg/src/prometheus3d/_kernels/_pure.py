"""Pure numpy implementation of the hot kernels.

Operation-for-operation mirror of the compiled core (``_core.pyx``): the
expression trees and candidate orderings are kept identical, so both
backends return bit-identical arrays. Keep the two files in sync when
touching either.
"""

import numpy as np

BACKEND_NAME = "pure"

_CHUNK = 256  # view-1 pixels per epipolar band test chunk
_GRID_BIAS = 1 << 19
_GRID_SPAN = 1 << 20


def _empty_match():
    return (
        np.empty((0, 3), dtype=np.float64),
        np.empty(0, dtype=np.float64),
        np.empty((0, 6), dtype=np.int32),
    )


def match_triplets(
    pix1,
    pix2,
    pix3,
    h2,
    w3,
    h3,
    F12,
    T,
    P,
    origins,
    invKR,
    band_px,
    tol_px,
    max_depth,
):
    """Match foreground pixels across three views under the trifocal constraint.

    Args:
        pix1/pix2/pix3: (N, 2) int32 foreground pixel (u, v) arrays, each
            sorted by (v, u).
        h2: view-2 sensor height; w3/h3: view-3 sensor width and height.
        F12: (3, 3) fundamental matrix, view-1 pixel -> view-2 line.
        T: (3, 3, 3) trifocal tensor slices.
        P: (3, 3, 4) projection matrices.
        origins: (3, 3) camera centers (world).
        invKR: (3, 3, 3) back-projection matrices R^T K^-1.
        band_px: epipolar band half-width (px).
        tol_px: transfer / reprojection gate (px).
        max_depth: camera-frame depth cap (m).

    Returns:
        (positions (M, 3), errors (M,), triplets (M, 6) int32 as
        u1,v1,u2,v2,u3,v3), ordered by view-1 raster order then view-2
        candidate order.
    """
    if len(pix1) == 0 or len(pix2) == 0 or len(pix3) == 0:
        return _empty_match()

    u2 = pix2[:, 0].astype(np.float64)
    v2 = pix2[:, 1].astype(np.float64)

    occ = np.zeros((h3, w3), dtype=bool)
    occ[pix3[:, 1], pix3[:, 0]] = True

    pos_parts, err_parts, trip_parts = [], [], []
    for start in range(0, len(pix1), _CHUNK):
        chunk = pix1[start : start + _CHUNK]
        out = _match_chunk(
            chunk, u2, v2, pix2, occ, w3, h3,
            F12, T, P, origins, invKR, band_px, tol_px, max_depth,
        )
        if out is not None:
            pos_parts.append(out[0])
            err_parts.append(out[1])
            trip_parts.append(out[2])

    if not pos_parts:
        return _empty_match()
    return (
        np.concatenate(pos_parts),
        np.concatenate(err_parts),
        np.concatenate(trip_parts),
    )


def _match_chunk(
    pix1, u2, v2, pix2, occ, w3, h3,
    F12, T, P, origins, invKR, band_px, tol_px, max_depth,
):
    u1 = pix1[:, 0].astype(np.float64)
    v1 = pix1[:, 1].astype(np.float64)

    # Epipolar line of each view-1 pixel in view 2, normalized so that
    # a*u + b*v + c is the pixel distance from the line.
    la = F12[0, 0] * u1 + F12[0, 1] * v1 + F12[0, 2]
    lb = F12[1, 0] * u1 + F12[1, 1] * v1 + F12[1, 2]
    lc = F12[2, 0] * u1 + F12[2, 1] * v1 + F12[2, 2]
    nrm = np.sqrt(la * la + lb * lb)
    ok = nrm > 0.0
    nrm[~ok] = 1.0
    la = la / nrm
    lb = lb / nrm
    lc = lc / nrm

    dist = la[:, None] * u2[None, :] + lb[:, None] * v2[None, :] + lc[:, None]
    band = np.abs(dist) <= band_px
    band[~ok] = False
    ii, jj = np.nonzero(band)
    if len(ii) == 0:
        return None

    pu1 = u1[ii]
    pv1 = v1[ii]
    pu2 = u2[jj]
    pv2 = v2[jj]

    # Trifocal transfer: rows of G = [x2]_x (sum_i x1^i T_i) are all
    # proportional to the view-3 point; use the largest row.
    M = pu1[:, None, None] * T[0] + pv1[:, None, None] * T[1] + T[2]
    g0 = -M[:, 1, :] + pv2[:, None] * M[:, 2, :]
    g1 = M[:, 0, :] - pu2[:, None] * M[:, 2, :]
    g2 = -pv2[:, None] * M[:, 0, :] + pu2[:, None] * M[:, 1, :]
    n0 = np.sqrt((g0[:, 0] * g0[:, 0] + g0[:, 1] * g0[:, 1]) + g0[:, 2] * g0[:, 2])
    n1 = np.sqrt((g1[:, 0] * g1[:, 0] + g1[:, 1] * g1[:, 1]) + g1[:, 2] * g1[:, 2])
    n2 = np.sqrt((g2[:, 0] * g2[:, 0] + g2[:, 1] * g2[:, 1]) + g2[:, 2] * g2[:, 2])

    best = np.where(n1 > n0, 1, 0)
    nb = np.where(n1 > n0, n1, n0)
    best = np.where(n2 > nb, 2, best)
    nb = np.where(n2 > nb, n2, nb)

    G = np.stack([g0, g1, g2], axis=1)
    bg = np.take_along_axis(G, best[:, None, None].repeat(3, axis=2), axis=1)[:, 0, :]

    msq = (
        (
            (
                (
                    (
                        (
                            (M[:, 0, 0] * M[:, 0, 0] + M[:, 0, 1] * M[:, 0, 1])
                            + M[:, 0, 2] * M[:, 0, 2]
                        )
                        + M[:, 1, 0] * M[:, 1, 0]
                    )
                    + M[:, 1, 1] * M[:, 1, 1]
                )
                + M[:, 1, 2] * M[:, 1, 2]
            )
            + M[:, 2, 0] * M[:, 2, 0]
        )
        + M[:, 2, 1] * M[:, 2, 1]
    ) + M[:, 2, 2] * M[:, 2, 2]
    keep = nb > 1e-12 * np.sqrt(msq)
    keep &= np.abs(bg[:, 2]) > 1e-12 * nb
    if not np.any(keep):
        return None

    pu1, pv1, pu2, pv2, bg = pu1[keep], pv1[keep], pu2[keep], pv2[keep], bg[keep]
    u3t = bg[:, 0] / bg[:, 2]
    v3t = bg[:, 1] / bg[:, 2]

    # Nearest view-3 foreground pixel within tol (scan order: v asc, u asc;
    # strict < keeps the first of equal candidates).
    n = len(u3t)
    best_d2 = np.full(n, np.inf)
    best_u = np.zeros(n, dtype=np.int64)
    best_v = np.zeros(n, dtype=np.int64)
    v_lo = np.ceil(v3t - tol_px).astype(np.int64)
    u_lo = np.ceil(u3t - tol_px).astype(np.int64)
    span = int(np.floor(2.0 * tol_px)) + 1
    for kv in range(span):
        vv = v_lo + kv
        vv_ok = (vv >= 0) & (vv < h3) & (vv.astype(np.float64) <= v3t + tol_px)
        for ku in range(span):
            uu = u_lo + ku
            cand = vv_ok & (uu >= 0) & (uu < w3)
            cand &= uu.astype(np.float64) <= u3t + tol_px
            if not np.any(cand):
                continue
            hit = np.zeros(n, dtype=bool)
            hit[cand] = occ[vv[cand], uu[cand]]
            if not np.any(hit):
                continue
            du = uu.astype(np.float64) - u3t
            dv = vv.astype(np.float64) - v3t
            d2 = du * du + dv * dv
            better = hit & (d2 < best_d2)
            best_d2 = np.where(better, d2, best_d2)
            best_u = np.where(better, uu, best_u)
            best_v = np.where(better, vv, best_v)

    keep = best_d2 <= tol_px * tol_px
    if not np.any(keep):
        return None
    pu1, pv1, pu2, pv2 = pu1[keep], pv1[keep], pu2[keep], pv2[keep]
    pu3 = best_u[keep].astype(np.float64)
    pv3 = best_v[keep].astype(np.float64)

    # Triangulate the three back-projected rays (least-squares midpoint).
    dirs = []
    for i, (uu, vv) in enumerate(((pu1, pv1), (pu2, pv2), (pu3, pv3))):
        B = invKR[i]
        dx = (B[0, 0] * uu + B[0, 1] * vv) + B[0, 2]
        dy = (B[1, 0] * uu + B[1, 1] * vv) + B[1, 2]
        dz = (B[2, 0] * uu + B[2, 1] * vv) + B[2, 2]
        dn = np.sqrt((dx * dx + dy * dy) + dz * dz)
        dirs.append((dx / dn, dy / dn, dz / dn))
    (dx0, dy0, dz0), (dx1, dy1, dz1), (dx2, dy2, dz2) = dirs

    axx = (1.0 - dx0 * dx0) + (1.0 - dx1 * dx1) + (1.0 - dx2 * dx2)
    ayy = (1.0 - dy0 * dy0) + (1.0 - dy1 * dy1) + (1.0 - dy2 * dy2)
    azz = (1.0 - dz0 * dz0) + (1.0 - dz1 * dz1) + (1.0 - dz2 * dz2)
    axy = -(dx0 * dy0) - (dx1 * dy1) - (dx2 * dy2)
    axz = -(dx0 * dz0) - (dx1 * dz1) - (dx2 * dz2)
    ayz = -(dy0 * dz0) - (dy1 * dz1) - (dy2 * dz2)

    bx = np.zeros_like(axx)
    by = np.zeros_like(axx)
    bz = np.zeros_like(axx)
    for (ddx, ddy, ddz), o in zip(dirs, origins):
        ox, oy, oz = float(o[0]), float(o[1]), float(o[2])
        bx = bx + (((1.0 - ddx * ddx) * ox - (ddx * ddy) * oy) - (ddx * ddz) * oz)
        by = by + ((-(ddx * ddy) * ox + (1.0 - ddy * ddy) * oy) - (ddy * ddz) * oz)
        bz = bz + ((-(ddx * ddz) * ox - (ddy * ddz) * oy) + (1.0 - ddz * ddz) * oz)

    c00 = ayy * azz - ayz * ayz
    c01 = axz * ayz - axy * azz
    c02 = axy * ayz - axz * ayy
    det = (axx * c00 + axy * c01) + axz * c02
    keep = np.abs(det) > 1e-12
    if not np.any(keep):
        return None
    i11 = axx * azz - axz * axz
    i12 = axy * axz - axx * ayz
    i22 = axx * ayy - axy * axy
    safe_det = np.where(keep, det, 1.0)
    X = ((bx * c00 + by * c01) + bz * c02) / safe_det
    Y = ((bx * c01 + by * i11) + bz * i12) / safe_det
    Z = ((bx * c02 + by * i12) + bz * i22) / safe_det

    # Depth gate and RMS reprojection gate over the three views.
    e2 = []
    for i, (uu, vv) in enumerate(((pu1, pv1), (pu2, pv2), (pu3, pv3))):
        Pi = P[i]
        w = ((Pi[2, 0] * X + Pi[2, 1] * Y) + Pi[2, 2] * Z) + Pi[2, 3]
        keep &= (w > 0.0) & (w <= max_depth)
        wsafe = np.where(w == 0.0, 1.0, w)
        uh = ((Pi[0, 0] * X + Pi[0, 1] * Y) + Pi[0, 2] * Z) + Pi[0, 3]
        vh = ((Pi[1, 0] * X + Pi[1, 1] * Y) + Pi[1, 2] * Z) + Pi[1, 3]
        du = uh / wsafe - uu
        dv = vh / wsafe - vv
        e2.append(du * du + dv * dv)
    rms = np.sqrt(((e2[0] + e2[1]) + e2[2]) / 3.0)
    keep &= rms <= tol_px
    if not np.any(keep):
        return None

    positions = np.stack([X[keep], Y[keep], Z[keep]], axis=1)
    errors = rms[keep]
    triplets = np.stack(
        [pu1[keep], pv1[keep], pu2[keep], pv2[keep], pu3[keep], pv3[keep]],
        axis=1,
    ).astype(np.int32)
    return positions, errors, triplets


def _cell_keys(ic):
    if np.any(np.abs(ic) >= _GRID_BIAS):
        raise ValueError("point cloud extent exceeds the spatial hash range")
    return (
        (ic[:, 0] + _GRID_BIAS) * _GRID_SPAN + (ic[:, 1] + _GRID_BIAS)
    ) * _GRID_SPAN + (ic[:, 2] + _GRID_BIAS)


def _expand_ranges(lo, hi):
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return None, None
    rep = np.repeat(np.arange(len(lo)), counts)
    offs = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    return rep, np.repeat(lo, counts) + offs


def radius_edges(pos, frame_starts, frame_ids, cell, origin, r_static, r_dynamic):
    """Proximity edges over a frame-sorted cloud.

    Same-frame pairs within r_static, consecutive-frame pairs within
    r_dynamic; neighbor candidates come from a uniform grid with the given
    cell size. Returns (ei, ej, d2) with ei < ej, sorted by (ei, ej).
    """
    pos = np.asarray(pos, dtype=np.float64)
    n_groups = len(frame_ids)
    ic = np.floor((pos - origin) / cell).astype(np.int64)

    structs = {}

    def struct(g):
        if g not in structs:
            lo, hi = frame_starts[g], frame_starts[g + 1]
            keys = _cell_keys(ic[lo:hi])
            order = np.argsort(keys, kind="stable")
            structs[g] = (keys[order], order, lo)
        return structs[g]

    ei_parts, ej_parts, d2_parts = [], [], []

    def collect(ga, gb, radius, same):
        skeys, order, base_b = struct(gb)
        lo_a, hi_a = frame_starts[ga], frame_starts[ga + 1]
        ica = ic[lo_a:hi_a]
        pa = pos[lo_a:hi_a]
        r2 = radius * radius
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    shifted = ica + np.array([dx, dy, dz], dtype=np.int64)
                    nk = _cell_keys(shifted)
                    lo = np.searchsorted(skeys, nk, side="left")
                    hi = np.searchsorted(skeys, nk, side="right")
                    rep_a, slot = _expand_ranges(lo, hi)
                    if rep_a is None:
                        continue
                    b_local = order[slot]
                    gi = lo_a + rep_a
                    gj = base_b + b_local
                    if same:
                        mask = gj > gi
                        if not np.any(mask):
                            continue
                        gi, gj = gi[mask], gj[mask]
                        rep_a, b_local = rep_a[mask], b_local[mask]
                    ddx = pa[rep_a, 0] - pos[gj, 0]
                    ddy = pa[rep_a, 1] - pos[gj, 1]
                    ddz = pa[rep_a, 2] - pos[gj, 2]
                    d2 = (ddx * ddx + ddy * ddy) + ddz * ddz
                    near = d2 <= r2
                    if not np.any(near):
                        continue
                    ei_parts.append(gi[near])
                    ej_parts.append(gj[near])
                    d2_parts.append(d2[near])

    for g in range(n_groups):
        if frame_starts[g + 1] - frame_starts[g] > 0:
            collect(g, g, r_static, same=True)
        if g + 1 < n_groups and frame_ids[g + 1] == frame_ids[g] + 1:
            collect(g, g + 1, r_dynamic, same=False)

    if not ei_parts:
        return (
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.int64),
            np.empty(0, dtype=np.float64),
        )
    ei = np.concatenate(ei_parts)
    ej = np.concatenate(ej_parts)
    d2 = np.concatenate(d2_parts)
    order = np.lexsort((ej, ei))
    return ei[order], ej[order], d2[order]


def union_find_labels(n, edges_i, edges_j):
    """Connected-component labels via union-find with path compression.

    Labels are assigned in ascending order of each component's smallest
    node index.
    """
    parent = list(range(n))
    size = [1] * n
    for a, b in zip(edges_i.tolist(), edges_j.tolist()):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        while parent[b] != b:
            parent[b] = parent[parent[b]]
            b = parent[b]
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]

    labels = np.empty(n, dtype=np.int64)
    next_label = 0
    root_label = {}
    for node in range(n):
        r = node
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        lab = root_label.get(r)
        if lab is None:
            lab = next_label
            root_label[r] = lab
            next_label += 1
        labels[node] = lab
    return labels
