"""Hierarchical reasoning graph network.

Layer 0 holds the D comparison nodes; latent layers 1..L are built from
balanced contiguous groups of the layer below. Each message passing step
transforms every node, abstracts comprehensive features bottom-up, relates
the top-layer nodes to each other by cosine similarity and propagates the
result back down.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Union

import numpy as np

from rgn.engine import (
    ParameterStore,
    Tensor,
    concat,
    cosine_matrix,
    init_params,
    matmul,
    mul,
    relu,
    reshape,
    segment_pool,
    segment_softmax,
    take,
)
from rgn.errors import DimensionError
from rgn.models.base import PairModel
from rgn.models.layers import MLP, comparison_nodes
from rgn.models.topology import HierTopology, build_hierarchy
from rgn.schemas import HRgnConfig

logger = logging.getLogger(__name__)

PREFIX = "hrgn"


@dataclass
class HierState:
    """Node features per graph layer, each (B, N_l, F)."""
    layers: List[Tensor]
    step: int = 0
    messages: Optional[List[Tensor]] = None
    comprehensive: Optional[List[Tensor]] = None

    @property
    def width(self) -> int:
        return self.layers[0].shape[-1]


@dataclass
class HRgnStepParams:
    u_trans: Tensor
    u_up: Tensor
    u_down: Tensor


def attention_weights(scorer: MLP, children: Tensor, starts) -> Tensor:
    """Scores of each child normalized by softmax inside its parent's group; (B, N, 1)."""
    return segment_softmax(scorer(children), starts, axis=1)


def init_hier(gx, gy, topo: HierTopology, cfg: HRgnConfig, scorer: Optional[MLP] = None, gz=None) -> HierState:
    """Comparison nodes at layer 0, then each latent node from its children's initial features."""
    if (gz is not None) != (cfg.subject_count == 3):
        raise DimensionError(f"subject_count={cfg.subject_count} does not match the given inputs")
    layers = [comparison_nodes(gx, gy, gz, d=cfg.d)]
    for boundary in topo.boundaries:
        children = layers[-1]
        if cfg.init_mode == "self-attention":
            weights = attention_weights(scorer, children, boundary.starts)
            layers.append(segment_pool("sum", mul(weights, children), boundary.starts, axis=1))
        else:
            layers.append(segment_pool(cfg.init_mode, children, boundary.starts, axis=1))
    return HierState(layers=layers, step=0)


def relate_top(c_top: Tensor, general: bool = False) -> Tensor:
    """h_n = sum_s cos(c_n, c_s) c_s over the top layer; identity for a single node."""
    if c_top.shape[1] == 1 and not general:
        return c_top
    return matmul(cosine_matrix(c_top), c_top)


def hrgn_step(state: HierState, params: HRgnStepParams, topo: HierTopology, cfg: HRgnConfig) -> HierState:
    if params.u_trans.shape[0] != state.width:
        raise DimensionError(
            f"Step expects input width {params.u_trans.shape[0]}, state has {state.width}"
        )
    depth = topo.depth

    m = [relu(matmul(h, params.u_trans)) for h in state.layers]

    c = [m[0]]
    for l in range(1, depth + 1):
        lower = c[l - 1] if cfg.lower_input_mode == "comprehensive" else m[l - 1]
        aggregated = segment_pool(cfg.aggre_pool, lower, topo.boundaries[l - 1].starts, axis=1)
        c.append(relu(matmul(concat([m[l], aggregated], axis=-1), params.u_up)))

    h: List[Optional[Tensor]] = [None] * (depth + 1)
    h[depth] = relate_top(c[depth])
    for l in range(depth - 1, -1, -1):
        from_parent = take(h[l + 1], topo.boundaries[l].parent, axis=1)
        h[l] = relu(matmul(concat([c[l], from_parent], axis=-1), params.u_down))

    return HierState(layers=h, step=state.step + 1, messages=m, comprehensive=c)


def readout(state: HierState) -> Tensor:
    """All node features in layer order, then node order, flattened per batch row."""
    stacked = concat(state.layers, axis=1)
    batch, n, width = stacked.shape
    return reshape(stacked, (batch, n * width))


class HRGN(PairModel):
    kind = "hrgn"
    prefix = PREFIX

    def __init__(
        self,
        cfg: HRgnConfig,
        seed: Union[int, np.random.Generator] = 0,
        store: Optional[ParameterStore] = None,
    ):
        super().__init__(store)
        self.cfg = cfg
        self.topology = build_hierarchy(cfg.layer_cfg)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

        self.scorer: Optional[MLP] = None
        if cfg.init_mode == "self-attention":
            self.scorer = MLP(
                self.store, f"{PREFIX}.attention", cfg.subject_count, [cfg.attention_hidden], 1, rng,
                activation=cfg.attention_activation, init=cfg.init,
            )

        self.steps: List[HRgnStepParams] = []
        widths = [cfg.subject_count, *cfg.dims]
        for k, (f_in, f_out) in enumerate(zip(widths, widths[1:]), start=1):
            name = f"{PREFIX}.layer{k}"
            self.steps.append(HRgnStepParams(
                u_trans=self.store.add(f"{name}.u_trans", init_params((f_in, f_out), cfg.init, rng)),
                u_up=self.store.add(f"{name}.u_up", init_params((2 * f_out, f_out), cfg.init, rng)),
                u_down=self.store.add(f"{name}.u_down", init_params((2 * f_out, f_out), cfg.init, rng)),
            ))

        self.head = MLP(
            self.store, f"{PREFIX}.head", self.topology.num_nodes * cfg.dims[-1], cfg.head_hidden, 1, rng,
            init=cfg.init,
        )
        logger.debug(f"H-RGN widths {list(self.topology.widths)} with {self.store.num_parameters()} parameters")

    @property
    def subject_count(self) -> int:
        return self.cfg.subject_count

    def encode(self, gx, gy, gz=None) -> HierState:
        state = init_hier(gx, gy, self.topology, self.cfg, self.scorer, gz)
        for params in self.steps:
            state = hrgn_step(state, params, self.topology, self.cfg)
        return state

    def forward(self, gx, gy, gz=None) -> Tensor:
        self._check_subjects(gz)
        logits = self.head(readout(self.encode(gx, gy, gz)))
        return reshape(logits, (logits.shape[0],))

    def checkpoint_meta(self) -> Dict[str, np.ndarray]:
        return {"meta.hrgn.layer_widths": np.asarray(self.topology.widths, dtype=np.float64)}
