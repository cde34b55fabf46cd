"""Star and hierarchical graph structures.

A boundary between layer l-1 (n_prev nodes) and layer l (n_cur nodes) assigns
every lower node exactly one parent. With C = n_prev mod n_cur the first C
parents own ceil(n_prev / n_cur) consecutive children and the rest own
floor(n_prev / n_cur). Indices are 0-based internally; `dump()` prints them
1-based.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from rgn.errors import ConfigError, TopologyError
from rgn.schemas import LayerConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Boundary:
    n_prev: int
    n_cur: int
    parent: np.ndarray
    counts: np.ndarray = field(repr=False)
    starts: np.ndarray = field(repr=False)

    @property
    def remainder(self) -> int:
        """C: number of parents holding the larger child group."""
        return self.n_prev % self.n_cur

    def children(self, node: int) -> range:
        if not 0 <= node < self.n_cur:
            raise TopologyError(f"Parent index {node} out of range for a layer of {self.n_cur} nodes")
        start = int(self.starts[node])
        return range(start, start + int(self.counts[node]))


def build_boundary(n_prev: int, n_cur: int) -> Boundary:
    """Balanced contiguous partition of n_prev lower nodes among n_cur parents."""
    if n_cur < 1 or n_prev < 1:
        raise ConfigError(f"Layer widths must be >= 1, got {n_prev} -> {n_cur}")
    if n_cur > n_prev:
        raise ConfigError(f"Upper layer ({n_cur}) cannot be wider than the lower layer ({n_prev})")
    base, remainder = divmod(n_prev, n_cur)
    counts = np.full(n_cur, base, dtype=np.intp)
    counts[:remainder] += 1
    starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.intp)
    parent = np.repeat(np.arange(n_cur, dtype=np.intp), counts)
    for arr in (parent, counts, starts):
        arr.setflags(write=False)
    return Boundary(n_prev=n_prev, n_cur=n_cur, parent=parent, counts=counts, starts=starts)


@dataclass(frozen=True)
class StarTopology:
    """One central node linked to each of d surrounding nodes."""
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError(f"A star graph needs at least one surrounding node, got d={self.d}")

    @property
    def num_nodes(self) -> int:
        return self.d + 1


@dataclass(frozen=True, eq=False)
class HierTopology:
    widths: tuple
    boundaries: tuple

    @property
    def depth(self) -> int:
        return len(self.boundaries)

    @property
    def num_nodes(self) -> int:
        return int(sum(self.widths))

    def children_of(self, layer: int, node: int) -> range:
        """Indices in layer-1 whose parent is `node` of `layer` (1 <= layer <= L)."""
        if not 1 <= layer <= self.depth:
            raise TopologyError(f"Layer {layer} has no children; valid layers are 1..{self.depth}")
        return self.boundaries[layer - 1].children(node)

    def dump(self) -> List[str]:
        lines = []
        for l, b in enumerate(self.boundaries, start=1):
            parents = " ".join(str(p + 1) for p in b.parent)
            lines.append(f"layer {l}: parent[1..{b.n_prev}] = {parents}")
        return lines

    def summary(self) -> List[str]:
        lines = ["layer  nodes  children/parent  C"]
        lines.append(f"{0:>5}  {self.widths[0]:>5}  {'-':>15}  -")
        for l, b in enumerate(self.boundaries, start=1):
            sizes = f"{int(b.counts.min())}..{int(b.counts.max())}"
            lines.append(f"{l:>5}  {b.n_cur:>5}  {sizes:>15}  {b.remainder}")
        return lines


def build_hierarchy(cfg: LayerConfig) -> HierTopology:
    counts: Sequence[int] = cfg.node_counts
    boundaries = tuple(build_boundary(lower, upper) for lower, upper in zip(counts, counts[1:]))
    logger.debug(f"Built hierarchy with widths {list(counts)}")
    return HierTopology(widths=tuple(counts), boundaries=boundaries)
