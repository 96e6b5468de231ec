"""Ring perception: cycle-bond detection and a minimum cycle basis (SSSR)."""

from __future__ import annotations

from collections import deque
from typing import Sequence


def ring_bond_set(n_atoms: int, edges: Sequence[tuple[int, int]]) -> frozenset[int]:
    """Indices of edges that are not bridges (i.e. lie on some cycle)."""
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n_atoms)]
    for ei, (a, b) in enumerate(edges):
        adj[a].append((b, ei))
        adj[b].append((a, ei))
    disc = [-1] * n_atoms
    low = [0] * n_atoms
    bridges: set[int] = set()
    timer = 0
    for root in range(n_atoms):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            node, parent_edge, it = stack[-1]
            advanced = False
            for nbr, ei in it:
                if ei == parent_edge:
                    continue
                if disc[nbr] == -1:
                    disc[nbr] = low[nbr] = timer
                    timer += 1
                    stack.append((nbr, ei, iter(adj[nbr])))
                    advanced = True
                    break
                low[node] = min(low[node], disc[nbr])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[node])
                    if low[node] > disc[parent]:
                        bridges.add(parent_edge)
    return frozenset(ei for ei in range(len(edges)) if ei not in bridges)


def _cycle_from_edges(edge_ids: list[int], edges: Sequence[tuple[int, int]]) -> tuple[int, ...]:
    """Order the atoms of a simple cycle given its edge set."""
    adj: dict[int, list[int]] = {}
    for ei in edge_ids:
        a, b = edges[ei]
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    start = min(adj)
    order = [start]
    prev, cur = None, start
    while True:
        nxt = [n for n in sorted(adj[cur]) if n != prev]
        if not nxt:
            break
        n = nxt[0]
        if n == start:
            break
        order.append(n)
        prev, cur = cur, n
        if len(order) > len(adj):
            break
    return tuple(order)


def sssr(n_atoms: int, edges: Sequence[tuple[int, int]], ring_bonds: frozenset[int]) -> list[tuple[int, ...]]:
    """Smallest set of smallest rings via Horton candidates and GF(2) elimination.

    Each ring is returned as a cyclic atom sequence.  Output order is
    deterministic: by ring size, then by sorted atom indices.
    """
    if not ring_bonds:
        return []
    # components of the ring-bond subgraph
    radj: dict[int, list[tuple[int, int]]] = {}
    for ei in sorted(ring_bonds):
        a, b = edges[ei]
        radj.setdefault(a, []).append((b, ei))
        radj.setdefault(b, []).append((a, ei))
    for lst in radj.values():
        lst.sort()
    seen: set[int] = set()
    rings: list[tuple[int, ...]] = []
    for start in sorted(radj):
        if start in seen:
            continue
        comp_atoms = []
        dq = deque([start])
        seen.add(start)
        while dq:
            a = dq.popleft()
            comp_atoms.append(a)
            for n, _ in radj[a]:
                if n not in seen:
                    seen.add(n)
                    dq.append(n)
        comp_set = set(comp_atoms)
        comp_edges = sorted({ei for a in comp_atoms for _, ei in radj[a]})
        rank = len(comp_edges) - len(comp_atoms) + 1
        if rank == 1:
            rings.append(_cycle_from_edges(comp_edges, edges))
            continue
        rings.extend(_horton(sorted(comp_set), comp_edges, edges, radj, rank))
    rings.sort(key=lambda r: (len(r), sorted(r)))
    return rings


def _horton(atoms, comp_edges, edges, radj, rank):
    bit = {ei: 1 << k for k, ei in enumerate(comp_edges)}
    candidates: dict[int, int] = {}  # edge mask -> size
    for r in atoms:
        parent: dict[int, tuple[int, int] | None] = {r: None}
        dist = {r: 0}
        dq = deque([r])
        while dq:
            a = dq.popleft()
            for n, ei in radj[a]:
                if n not in dist:
                    dist[n] = dist[a] + 1
                    parent[n] = (a, ei)
                    dq.append(n)

        def path(x):
            nodes, mask = [x], 0
            while parent[x] is not None:
                p, ei = parent[x]
                mask |= bit[ei]
                x = p
                nodes.append(x)
            return nodes, mask

        for ei in comp_edges:
            x, y = edges[ei]
            if parent.get(x) and parent[x][1] == ei:
                continue
            if parent.get(y) and parent[y][1] == ei:
                continue
            px, mx = path(x)
            py, my = path(y)
            if set(px) & set(py) != {r}:
                continue
            mask = mx | my | bit[ei]
            if mask not in candidates:
                candidates[mask] = len(px) + len(py) - 1
    ordered = sorted(candidates.items(), key=lambda kv: (kv[1], kv[0]))
    basis: list[int] = []  # reduced vectors, each with a distinct leading bit
    chosen: list[int] = []
    for mask, _size in ordered:
        v = mask
        for bvec in basis:
            v = min(v, v ^ bvec)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
            chosen.append(mask)
            if len(chosen) == rank:
                break
    inv = {b: ei for ei, b in bit.items()}
    out = []
    for mask in chosen:
        eids = [inv[1 << k] for k in range(mask.bit_length()) if mask >> k & 1]
        out.append(_cycle_from_edges(eids, edges))
    return out
