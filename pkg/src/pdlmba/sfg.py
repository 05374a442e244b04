"""Signal-flow graphs with per-frequency branch gains and Mason's gain rule.

Node values obey ``x_v = e_v + sum_u g(u -> v) * x_u`` where ``e`` is an
external excitation. :func:`mason_transfer` evaluates source-to-sink transfer
functions topologically; :func:`solve_linear` solves the same equations as a
dense linear system and serves as an independent check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .netcore import NPortNetwork, check_same_grid

DEFAULT_MAX_CYCLES = 10_000


class CycleLimitError(RuntimeError):
    """Loop enumeration exceeded the configured cap."""


@dataclass(frozen=True, eq=False)
class FlowGraph:
    """Directed graph of wave variables.

    ``gains`` maps ``(from, to)`` to a complex vector of length ``n_points``.
    Build instances with :meth:`from_branches`, which sums parallel branches.
    """

    nodes: tuple[str, ...]
    gains: Mapping[tuple[str, str], np.ndarray]
    sinks: tuple[str, ...] = ()
    n_points: int = 1

    def __post_init__(self) -> None:
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("node labels must be unique")
        known = set(self.nodes)
        for (u, v), g in self.gains.items():
            if u not in known or v not in known:
                raise ValueError(f"branch {u!r} -> {v!r} references an unknown node")
            if g.shape != (self.n_points,):
                raise ValueError(f"branch {u!r} -> {v!r} has gain shape {g.shape}")
        for s in self.sinks:
            if s not in known:
                raise ValueError(f"sink {s!r} is not a node")
        succ: dict[str, list[str]] = {n: [] for n in self.nodes}
        pred: dict[str, list[str]] = {n: [] for n in self.nodes}
        for u, v in self.gains:
            succ[u].append(v)
            pred[v].append(u)
        object.__setattr__(self, "_succ", {k: tuple(sorted(v)) for k, v in succ.items()})
        object.__setattr__(self, "_pred", {k: tuple(sorted(v)) for k, v in pred.items()})

    @classmethod
    def from_branches(cls, branches: Iterable[tuple[str, str, object]],
                      nodes: Iterable[str] = (), sinks: Sequence[str] = (),
                      n_points: int | None = None) -> FlowGraph:
        """Build a graph from ``(from, to, gain)`` triples.

        Gains may be scalars or per-frequency sequences; scalars are broadcast.
        Repeated ``(from, to)`` pairs are summed into one branch.
        """
        branches = [(u, v, np.asarray(g, dtype=complex)) for u, v, g in branches]
        if n_points is None:
            sizes = {g.size for _, _, g in branches if g.ndim > 0}
            if len(sizes) > 1:
                raise ValueError(f"inconsistent gain lengths {sorted(sizes)}")
            n_points = sizes.pop() if sizes else 1
        gains: dict[tuple[str, str], np.ndarray] = {}
        all_nodes = dict.fromkeys(nodes)
        for u, v, g in branches:
            g = np.broadcast_to(g.ravel() if g.ndim else g, (n_points,)).astype(complex)
            key = (u, v)
            gains[key] = gains[key] + g if key in gains else g
            all_nodes.setdefault(u)
            all_nodes.setdefault(v)
        for s in sinks:
            all_nodes.setdefault(s)
        for g in gains.values():
            g.setflags(write=False)
        return cls(tuple(sorted(all_nodes)), gains, tuple(sinks), n_points)

    def successors(self, node: str) -> tuple[str, ...]:
        return self._succ[node]

    def predecessors(self, node: str) -> tuple[str, ...]:
        return self._pred[node]

    @property
    def sources(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if not self._pred[n])

    def gain(self, u: str, v: str) -> np.ndarray:
        return self.gains[(u, v)]

    def relabel(self, mapping: Mapping[str, str]) -> FlowGraph:
        def r(n: str) -> str:
            return mapping.get(n, n)
        return FlowGraph.from_branches(
            ((r(u), r(v), g) for (u, v), g in self.gains.items()),
            nodes=(r(n) for n in self.nodes), sinks=[r(s) for s in self.sinks],
            n_points=self.n_points)

    def adjacency(self) -> tuple[list[str], np.ndarray]:
        """Return ``(order, A)`` with ``A[k, i, j]`` the gain of ``order[j] -> order[i]``."""
        index = {n: i for i, n in enumerate(self.nodes)}
        a = np.zeros((self.n_points, len(self.nodes), len(self.nodes)), dtype=complex)
        for (u, v), g in self.gains.items():
            a[:, index[v], index[u]] = g
        return list(self.nodes), a


def enumerate_paths(g: FlowGraph, src: str, dst: str) -> list[tuple[str, ...]]:
    """All simple directed paths ``src -> dst`` in lexicographic order."""
    for n in (src, dst):
        if n not in g._succ:
            raise KeyError(f"unknown node {n!r}")
    if src == dst:
        return [(src,)]
    paths: list[tuple[str, ...]] = []
    stack = [src]
    on_path = {src}

    def dfs(node: str) -> None:
        for nxt in g.successors(node):
            if nxt == dst:
                paths.append(tuple(stack) + (dst,))
            elif nxt not in on_path:
                stack.append(nxt)
                on_path.add(nxt)
                dfs(nxt)
                on_path.discard(stack.pop())

    dfs(src)
    return sorted(paths)


def enumerate_loops(g: FlowGraph, max_cycles: int = DEFAULT_MAX_CYCLES) -> list[tuple[str, ...]]:
    """All simple directed cycles, each rotated so its smallest label comes first.

    For each start node ``s`` (in sorted order) the search only visits nodes
    greater than ``s`` that can still reach ``s``, so every cycle is found
    exactly once, from its minimal node.
    """
    cycles: list[tuple[str, ...]] = []
    order = {n: i for i, n in enumerate(g.nodes)}
    for s in g.nodes:
        rank = order[s]
        # nodes above s that can reach s without passing below it
        reach = {s}
        frontier = [s]
        while frontier:
            v = frontier.pop()
            for u in g.predecessors(v):
                if order[u] > rank and u not in reach:
                    reach.add(u)
                    frontier.append(u)
        stack = [s]
        on_path = {s}

        def dfs(node: str) -> None:
            for nxt in g.successors(node):
                if nxt == s:
                    cycles.append(tuple(stack))
                    if len(cycles) > max_cycles:
                        raise CycleLimitError(
                            f"more than {max_cycles} simple cycles; graph is too densely looped")
                elif nxt in reach and nxt not in on_path and order[nxt] > rank:
                    stack.append(nxt)
                    on_path.add(nxt)
                    dfs(nxt)
                    on_path.discard(stack.pop())

        dfs(s)
    return sorted(cycles)


def _chain_gain(g: FlowGraph, nodes: Sequence[str], closed: bool) -> np.ndarray:
    out = np.ones(g.n_points, dtype=complex)
    for u, v in zip(nodes, nodes[1:]):
        out = out * g.gains[(u, v)]
    if closed:
        out = out * g.gains[(nodes[-1], nodes[0])]
    return out


@dataclass(frozen=True, eq=False)
class MasonSolution:
    """Transfer function ``source -> sink`` with the terms that produced it.

    ``transfer`` is NaN wherever ``singular`` is set (graph determinant zero).
    """

    source: str
    sink: str
    transfer: np.ndarray
    forward_paths: list[tuple[str, ...]]
    path_gains: np.ndarray
    cofactors: np.ndarray
    loops: list[tuple[str, ...]]
    loop_gains: np.ndarray
    determinant: np.ndarray
    singular: np.ndarray

    @property
    def ok(self) -> bool:
        return not bool(self.singular.any())


def _nontouching_terms(masks: list[int], gains: np.ndarray) -> tuple[list[int], np.ndarray, np.ndarray]:
    """Signed products over every set of mutually node-disjoint loops.

    Returns the union node mask of each set, the signed product (``-1`` per
    loop), and the sum of absolute term magnitudes (used to scale the
    singularity test).
    """
    term_masks: list[int] = []
    terms: list[np.ndarray] = []

    def extend(start: int, mask: int, prod: np.ndarray | None, sign: int) -> None:
        for i in range(start, len(masks)):
            if masks[i] & mask:
                continue
            p = gains[i] if prod is None else prod * gains[i]
            m = mask | masks[i]
            term_masks.append(m)
            terms.append(-sign * p)
            extend(i + 1, m, p, -sign)

    extend(0, 0, None, 1)
    n_points = gains.shape[1] if gains.ndim == 2 else 0
    stacked = np.array(terms) if terms else np.zeros((0, n_points), dtype=complex)
    return term_masks, stacked, np.abs(stacked).sum(axis=0)


def mason_transfer(g: FlowGraph, src: str, dst: str,
                   max_cycles: int = DEFAULT_MAX_CYCLES) -> MasonSolution:
    """Transfer from source node ``src`` to node ``dst`` by Mason's gain rule.

    ``Delta = 1 - sum(L1) + sum(L2) - ...`` where ``Lk`` ranges over products
    of ``k`` mutually non-touching (node-disjoint) loops. Each forward path
    gain is weighted by the determinant of the loops it does not touch.
    """
    if src not in g.sources:
        raise ValueError(f"{src!r} is not a source node (it has incoming branches)")
    if dst not in g._succ:
        raise KeyError(f"unknown node {dst!r}")
    index = {n: i for i, n in enumerate(g.nodes)}

    def mask_of(nodes: Iterable[str]) -> int:
        m = 0
        for n in nodes:
            m |= 1 << index[n]
        return m

    loops = enumerate_loops(g, max_cycles)
    loop_gains = (np.array([_chain_gain(g, c, True) for c in loops])
                  if loops else np.zeros((0, g.n_points), dtype=complex))
    term_masks, terms, scale = _nontouching_terms([mask_of(c) for c in loops], loop_gains)

    def det_excluding(mask: int) -> np.ndarray:
        keep = [i for i, m in enumerate(term_masks) if not m & mask]
        out = np.ones(g.n_points, dtype=complex)
        if keep:
            out = out + terms[keep].sum(axis=0)
        return out

    delta = det_excluding(0)
    paths = enumerate_paths(g, src, dst)
    path_gains = (np.array([_chain_gain(g, p, False) for p in paths])
                  if paths else np.zeros((0, g.n_points), dtype=complex))
    cofactors = (np.array([det_excluding(mask_of(p)) for p in paths])
                 if paths else np.zeros((0, g.n_points), dtype=complex))

    singular = np.abs(delta) <= 64 * np.finfo(float).eps * (1.0 + scale)
    numer = (path_gains * cofactors).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        transfer = np.where(singular, np.nan + 0j, numer / np.where(singular, 1.0, delta))
    return MasonSolution(src, dst, transfer, paths, path_gains, cofactors,
                         loops, loop_gains, delta, singular)


@dataclass(frozen=True, eq=False)
class LinearSolution:
    """Node values from :func:`solve_linear`; NaN at singular frequencies."""

    values: dict[str, np.ndarray]
    singular: np.ndarray

    def __getitem__(self, node: str) -> np.ndarray:
        return self.values[node]

    @property
    def ok(self) -> bool:
        return not bool(self.singular.any())


def solve_linear(g: FlowGraph, excitation: Mapping[str, object]) -> LinearSolution:
    """Solve ``(I - A) x = e`` at every frequency."""
    order, a = g.adjacency()
    index = {n: i for i, n in enumerate(order)}
    n = len(order)
    rhs = np.zeros((g.n_points, n), dtype=complex)
    for node, val in excitation.items():
        if node not in index:
            raise KeyError(f"unknown node {node!r}")
        rhs[:, index[node]] = val
    m = np.eye(n) - a
    singular = np.zeros(g.n_points, dtype=bool)
    try:
        x = np.linalg.solve(m, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        x = np.full((g.n_points, n), np.nan + 0j)
        for k in range(g.n_points):
            try:
                x[k] = np.linalg.solve(m[k], rhs[k])
            except np.linalg.LinAlgError:
                singular[k] = True
    bad = ~np.all(np.isfinite(x), axis=1)
    singular |= bad
    x[singular] = np.nan
    return LinearSolution({node: x[:, i] for node, i in index.items()}, singular)


def _fmt_gain(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}j"


def to_dot(g: FlowGraph, index: int = 0, name: str = "sfg",
           frequency_hz: float | None = None) -> str:
    """DOT text of the graph with branch gains evaluated at grid index ``index``."""
    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    if frequency_hz is not None:
        lines.append(f'  label="gains at {frequency_hz:.9g} Hz";')
    sources = set(g.sources)
    for n in g.nodes:
        shape = "box" if n in sources or n in g.sinks else "ellipse"
        lines.append(f'  "{n}" [shape={shape}];')
    for (u, v) in sorted(g.gains):
        lines.append(f'  "{u}" -> "{v}" [label="{_fmt_gain(g.gains[(u, v)][index])}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


Port = tuple[str, int]


def wave_label(block: str, port: int) -> str:
    """Label of the wave leaving ``port`` (1-based) of ``block``."""
    return f"b.{block}.{port}"


def network_graph(blocks: Mapping[str, NPortNetwork],
                  connections: Sequence[tuple[Port, Port]],
                  inputs: Mapping[str, Port],
                  outputs: Mapping[str, Port]) -> FlowGraph:
    """Flow graph of interconnected n-ports.

    Each wire between two ports carries two wave nodes, one per direction,
    named after the port that emits the wave. ``inputs`` name the incident
    wave at external ports; ``outputs`` name the emitted wave. Every other
    unconnected port is terminated in a matched load. Waves that are
    identically zero (no incoming branch) are pruned.
    """
    check_same_grid(*blocks.values())
    peer: dict[Port, Port] = {}
    for p, q in connections:
        for x in (p, q):
            if x in peer:
                raise ValueError(f"port {x} connected twice")
            blk, num = x
            if blk not in blocks or not 1 <= num <= blocks[blk].n_ports:
                raise ValueError(f"no such port {x}")
        peer[p], peer[q] = q, p
    incident_name = {port: label for label, port in inputs.items()}
    emitted_name = {port: label for label, port in outputs.items()}
    for port in list(incident_name) + list(emitted_name):
        if port in peer:
            raise ValueError(f"external port {port} is also connected internally")

    def incident(port: Port) -> str | None:
        if port in incident_name:
            return incident_name[port]
        if port in peer:
            return emitted(peer[port])
        return None

    def emitted(port: Port) -> str:
        return emitted_name.get(port, wave_label(*port))

    branches = []
    for name, net in blocks.items():
        for j in range(1, net.n_ports + 1):
            src = incident((name, j))
            if src is None:
                continue
            for i in range(1, net.n_ports + 1):
                gain = net.s[:, i - 1, j - 1]
                if np.any(gain != 0):
                    branches.append((src, emitted((name, i)), gain))

    keep_sources = set(inputs)
    while True:
        has_in = {v for _, v, _ in branches}
        dead = {u for u, _, _ in branches if u not in has_in and u not in keep_sources}
        if not dead:
            break
        branches = [b for b in branches if b[0] not in dead]
    n_points = len(next(iter(blocks.values())).grid)
    return FlowGraph.from_branches(branches, nodes=inputs, sinks=list(outputs),
                                   n_points=n_points)
