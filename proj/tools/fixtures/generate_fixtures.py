#!/usr/bin/env python3
"""Generate the benchmark mesh and partition fixtures.

Writes native-format meshes (.mesh) and element partitions (.part) plus a
manifest.json with element, node and interface-constraint counts. Output is
deterministic for a given numpy version.
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np
from scipy.spatial import Delaunay


def write_mesh(path, dim, nodes, elements, sets):
    with open(path, "w") as f:
        f.write(f"DIMENSION {dim}\n")
        f.write(f"NODES {len(nodes)}\n")
        for p in nodes:
            f.write(f"{float(p[0])!r} {float(p[1])!r}\n")
        f.write(f"ELEMENTS {len(elements)}\n")
        for kind, conn in elements:
            f.write(kind + " " + " ".join(str(int(n)) for n in conn) + "\n")
        f.write(f"SETS {len(sets)}\n")
        for name in sorted(sets):
            ids = sorted(set(int(n) for n in sets[name]))
            f.write(f"{name} {len(ids)} " + " ".join(map(str, ids)) + "\n")


def write_partition(path, part):
    with open(path, "w") as f:
        f.write("# subdomain id per element (1-based)\n")
        for s in part:
            f.write(f"{int(s)}\n")


def ccw(nodes, conn):
    a, b, c = (nodes[i] for i in conn[:3])
    area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return list(conn) if area > 0 else list(conn[::-1])


def constraint_count(elements, part, n_nodes, dirichlet, n_sub):
    counts = np.zeros((n_nodes, n_sub), dtype=np.int64)
    for (_, conn), s in zip(elements, part):
        for n in conn:
            counts[n, s - 1] += 1
    distinct = (counts > 0).sum(axis=1)
    free = np.ones(n_nodes, dtype=bool)
    free[list(dirichlet)] = False
    return int(np.maximum(distinct[free] - 1, 0).sum())


def tune_partition(elements, part, n_nodes, dirichlet, n_sub, target, rng, max_iter=2_000_000):
    """Single-element flips until the interface constraint count equals target."""
    part = np.array(part, dtype=np.int64)
    counts = np.zeros((n_nodes, n_sub), dtype=np.int64)
    conns = [np.array(conn) for _, conn in elements]
    for conn, s in zip(conns, part):
        counts[conn, s - 1] += 1
    free = np.ones(n_nodes, dtype=bool)
    free[list(dirichlet)] = False
    sizes = np.bincount(part - 1, minlength=n_sub)

    def rows(n):
        if not free[n]:
            return 0
        return max(int((counts[n] > 0).sum()) - 1, 0)

    current = sum(rows(n) for n in range(n_nodes))
    for _ in range(max_iter):
        if current == target:
            return part, current
        e = int(rng.integers(len(conns)))
        old = int(part[e])
        new = int(rng.integers(1, n_sub + 1))
        if new == old or sizes[old - 1] <= 1:
            continue
        conn = conns[e]
        before = sum(rows(n) for n in conn)
        counts[conn, old - 1] -= 1
        counts[conn, new - 1] += 1
        after = sum(rows(n) for n in conn)
        candidate = current - before + after
        if abs(candidate - target) < abs(current - target):
            part[e] = new
            sizes[old - 1] -= 1
            sizes[new - 1] += 1
            current = candidate
        else:
            counts[conn, new - 1] -= 1
            counts[conn, old - 1] += 1
    raise RuntimeError(f"partition search stopped at {current}, target {target}")


def patch_partition(centroids, patch, n_sub, rng, bounds):
    """Random subdomain per square patch; patches of one id are scattered."""
    x0, y0 = bounds
    keys = {}
    part = []
    for c in centroids:
        key = (int(math.floor((c[0] - x0) / patch)), int(math.floor((c[1] - y0) / patch)))
        if key not in keys:
            keys[key] = int(rng.integers(1, n_sub + 1))
        part.append(keys[key])
    part = np.array(part)
    for s in range(1, n_sub + 1):
        if not (part == s).any():
            part[int(rng.integers(len(part)))] = s
    return part


# ---------------------------------------------------------------------------
# Hemker: [-4, 10] x [-4, 4] with a unit circular hole at the origin


def hemker(grid_h, rings, ring_growth, n_theta):
    x0, x1, y0, y1 = -4.0, 10.0, -4.0, 4.0
    pts = []
    radii = [1.0]
    dr = 2.0 * math.pi / n_theta
    for _ in range(rings):
        radii.append(radii[-1] + dr)
        dr *= ring_growth
    for r in radii:
        for k in range(n_theta):
            t = 2.0 * math.pi * k / n_theta
            pts.append((r * math.cos(t), r * math.sin(t)))
    r_clear = radii[-1] + 0.6 * grid_h
    nx = int(round((x1 - x0) / grid_h))
    ny = int(round((y1 - y0) / grid_h))
    for j in range(ny + 1):
        for i in range(nx + 1):
            x = x0 + (x1 - x0) * i / nx
            y = y0 + (y1 - y0) * j / ny
            on_edge = i in (0, nx) or j in (0, ny)
            if math.hypot(x, y) < r_clear and not on_edge:
                continue
            pts.append((x, y))
    pts = np.array(pts)
    tri = Delaunay(pts)
    elements = []
    used = set()
    for simplex in tri.simplices:
        c = pts[simplex].mean(axis=0)
        if math.hypot(c[0], c[1]) < 1.0:
            continue
        conn = ccw(pts, simplex)
        elements.append(conn)
        used.update(conn)
    remap = {old: new for new, old in enumerate(sorted(used))}
    nodes = [tuple(pts[old]) for old in sorted(used)]
    elements = [("tri3", [remap[n] for n in conn]) for conn in elements]
    eps = 1e-9
    sets = {
        "circle": [i for i, p in enumerate(nodes) if abs(math.hypot(*p) - 1.0) < 1e-9],
        "left": [i for i, p in enumerate(nodes) if abs(p[0] - x0) < eps],
        "right": [i for i, p in enumerate(nodes) if abs(p[0] - x1) < eps],
        "bottom": [i for i, p in enumerate(nodes) if abs(p[1] - y0) < eps],
        "top": [i for i, p in enumerate(nodes) if abs(p[1] - y1) < eps],
    }
    part = []
    for _, conn in elements:
        c = np.mean([nodes[n] for n in conn], axis=0)
        if math.hypot(c[0], c[1]) < 2.0:
            part.append(1)
        elif c[0] > 0.0 and abs(c[1]) < 2.5:
            part.append(2)
        else:
            part.append(3)
    dirichlet = set(sets["circle"]) | set(sets["left"])
    return nodes, elements, sets, part, dirichlet


# ---------------------------------------------------------------------------
# advective chamber: [0, 4] x [0, 1], split rectangles


def advective(nx, ny):
    nodes = [(4.0 * i / nx, 1.0 * j / ny) for j in range(ny + 1) for i in range(nx + 1)]

    def nid(i, j):
        return j * (nx + 1) + i

    elements = []
    for j in range(ny):
        for i in range(nx):
            a, b, c, d = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            elements.append(("tri3", [a, b, c]))
            elements.append(("tri3", [a, c, d]))
    sets = {
        "left_lower": [nid(0, j) for j in range(ny + 1) if nodes[nid(0, j)][1] <= 0.5 + 1e-12],
        "left_upper": [nid(0, j) for j in range(ny + 1) if nodes[nid(0, j)][1] > 0.5 + 1e-12],
        "right": [nid(nx, j) for j in range(ny + 1)],
        "bottom": [nid(i, 0) for i in range(nx + 1)],
        "top": [nid(i, ny) for i in range(nx + 1)],
    }
    dirichlet = set(sets["left_lower"]) | set(sets["left_upper"])
    return nodes, elements, sets, dirichlet


# ---------------------------------------------------------------------------
# diffusion chamber: [0, 1]^2 quadrilaterals


def diffusion_full(ncx, ncy, n_split, rng):
    """Cells, some split by a diagonal, each refined into quadrilaterals."""
    index = {}
    nodes = []

    def node(p):
        key = (round(p[0] * 4 * ncx * ncy), round(p[1] * 4 * ncx * ncy))
        if key not in index:
            index[key] = len(nodes)
            nodes.append((float(p[0]), float(p[1])))
        return index[key]

    def mid(p, q):
        return ((p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0)

    split = set()
    cells = [(i, j) for j in range(ncy) for i in range(ncx)]
    for k in rng.choice(len(cells), size=n_split, replace=False):
        split.add(cells[int(k)])
    elements = []
    for j in range(ncy):
        for i in range(ncx):
            corners = [(i / ncx, j / ncy), ((i + 1) / ncx, j / ncy), ((i + 1) / ncx, (j + 1) / ncy),
                       (i / ncx, (j + 1) / ncy)]
            if (i, j) in split:
                polys = [[corners[0], corners[1], corners[2]], [corners[0], corners[2], corners[3]]]
            else:
                polys = [corners]
            for poly in polys:
                m = len(poly)
                centre = (sum(p[0] for p in poly) / m, sum(p[1] for p in poly) / m)
                for k in range(m):
                    prev_mid = mid(poly[k - 1], poly[k])
                    next_mid = mid(poly[k], poly[(k + 1) % m])
                    conn = [node(poly[k]), node(next_mid), node(centre), node(prev_mid)]
                    elements.append(("quad4", conn))
    return nodes, elements


def diffusion_reduced(n):
    nodes = [(i / n, j / n) for j in range(n + 1) for i in range(n + 1)]
    elements = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            elements.append(("quad4", [a, a + 1, a + n + 2, a + n + 1]))
    return nodes, elements


def diffusion_sets(nodes):
    eps = 1e-12
    return {
        "inlet_a": [k for k, p in enumerate(nodes) if abs(p[0]) < eps and p[1] >= 0.5 - eps],
        "inlet_b": [k for k, p in enumerate(nodes) if abs(p[0] - 1.0) < eps and p[1] <= 0.5 + eps],
        "left": [k for k, p in enumerate(nodes) if abs(p[0]) < eps],
        "right": [k for k, p in enumerate(nodes) if abs(p[0] - 1.0) < eps],
        "bottom": [k for k, p in enumerate(nodes) if abs(p[1]) < eps],
        "top": [k for k, p in enumerate(nodes) if abs(p[1] - 1.0) < eps],
    }


def centroids(nodes, elements):
    return [np.mean([nodes[n] for n in conn], axis=0) for _, conn in elements]


def emit(out, stem, nodes, elements, sets, part, dirichlet, n_sub, manifest):
    write_mesh(out / f"{stem}.mesh", 2, nodes, elements, sets)
    write_partition(out / f"{stem}.part", part)
    manifest[stem] = {
        "nodes": len(nodes),
        "elements": len(elements),
        "subdomains": n_sub,
        "interface_constraints": constraint_count(elements, part, len(nodes), dirichlet, n_sub),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[2] / "data" / "fixtures" / "v1"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {}

    for size, params in {"reduced": (0.4, 5, 1.25, 40), "full": (0.14, 10, 1.12, 96)}.items():
        nodes, elements, sets, part, dirichlet = hemker(*params)
        emit(out, f"hemker_{size}", nodes, elements, sets, part, dirichlet, 3, manifest)

    rng = np.random.default_rng(20110517)
    nodes, elements, sets, dirichlet = advective(48, 12)
    part = patch_partition(centroids(nodes, elements), 0.25, 4, rng, (0.0, 0.0))
    emit(out, "bimolecular_advective_reduced", nodes, elements, sets, part, dirichlet, 4, manifest)

    nodes, elements, sets, dirichlet = advective(122, 17)
    part = rng.integers(1, 5, size=len(elements))
    part, _ = tune_partition(elements, part, len(nodes), dirichlet, 4, 4151, rng)
    emit(out, "bimolecular_advective_full", nodes, elements, sets, part, dirichlet, 4, manifest)

    nodes, elements = diffusion_reduced(30)
    sets = diffusion_sets(nodes)
    dirichlet = set(sets["inlet_a"]) | set(sets["inlet_b"])
    part = patch_partition(centroids(nodes, elements), 0.1, 4, rng, (0.0, 0.0))
    emit(out, "bimolecular_diffusion_reduced", nodes, elements, sets, part, dirichlet, 4, manifest)

    nodes, elements = diffusion_full(37, 36, 57, rng)
    sets = diffusion_sets(nodes)
    dirichlet = set(sets["inlet_a"]) | set(sets["inlet_b"])
    part = rng.integers(1, 5, size=len(elements))
    part, _ = tune_partition(elements, part, len(nodes), dirichlet, 4, 10047, rng)
    emit(out, "bimolecular_diffusion_full", nodes, elements, sets, part, dirichlet, 4, manifest)

    with open(out / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps(manifest, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
