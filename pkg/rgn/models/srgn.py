"""Star-shaped reasoning graph network.

D surrounding nodes (one per feature dimension) exchange messages with one
central node for K layers; the readout concatenates the central node and the
surrounding nodes and maps them to a single logit.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np

from rgn.engine import ParameterStore, Tensor, concat, init_params, matmul, pool, relu, reshape, take
from rgn.errors import DimensionError
from rgn.models.base import PairModel
from rgn.models.layers import MLP, comparison_nodes
from rgn.models.topology import StarTopology
from rgn.schemas import SRgnConfig

logger = logging.getLogger(__name__)

PREFIX = "srgn"


@dataclass
class StarState:
    surrounding: Tensor  # (B, D, F)
    central: Tensor  # (B, F)
    step: int = 0

    @property
    def width(self) -> int:
        return self.central.shape[-1]


@dataclass
class SRgnLayerParams:
    w_mess: Tensor
    w_surr: Tensor
    w_cen: Tensor
    w_mess_central: Optional[Tensor] = None

    @property
    def central_message(self) -> Tensor:
        return self.w_mess_central if self.w_mess_central is not None else self.w_mess


def init_star(gx, gy, cfg: SRgnConfig, gz=None) -> StarState:
    """Pair the d-th values of every subject into surrounding node d; pool them for the central node."""
    if (gz is not None) != (cfg.subject_count == 3):
        raise DimensionError(f"subject_count={cfg.subject_count} does not match the given inputs")
    nodes = comparison_nodes(gx, gy, gz, d=cfg.d)
    return StarState(surrounding=nodes, central=pool(cfg.init_pool, nodes, axis=1), step=0)


def srgn_layer(state: StarState, params: SRgnLayerParams, cfg: SRgnConfig) -> StarState:
    """One round of surrounding/central message passing."""
    if params.w_mess.shape[0] != state.width:
        raise DimensionError(
            f"Layer expects input width {params.w_mess.shape[0]}, state has {state.width}"
        )
    batch, d, _ = state.surrounding.shape
    width = params.w_mess.shape[1]

    m_d = relu(matmul(state.surrounding, params.w_mess))
    m_c = relu(matmul(state.central, params.central_message))
    m_c_nodes = take(reshape(m_c, (batch, 1, width)), np.zeros(d, dtype=np.intp), axis=1)

    h_d = relu(matmul(concat([m_d, m_c_nodes], axis=-1), params.w_surr))
    m_a = pool(cfg.aggre_pool, m_d, axis=1)
    h_c = relu(matmul(concat([m_c, m_a], axis=-1), params.w_cen))
    return StarState(surrounding=h_d, central=h_c, step=state.step + 1)


def readout(state: StarState) -> Tensor:
    """[h_c || h_1 || ... || h_D] per batch row."""
    batch, d, width = state.surrounding.shape
    stacked = concat([reshape(state.central, (batch, 1, width)), state.surrounding], axis=1)
    return reshape(stacked, (batch, (d + 1) * width))


class SRGN(PairModel):
    kind = "srgn"
    prefix = PREFIX

    def __init__(
        self,
        cfg: SRgnConfig,
        seed: Union[int, np.random.Generator] = 0,
        store: Optional[ParameterStore] = None,
    ):
        super().__init__(store)
        self.cfg = cfg
        self.topology = StarTopology(cfg.d)
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

        self.layers: List[SRgnLayerParams] = []
        widths = [cfg.subject_count, *cfg.dims]
        for k, (f_in, f_out) in enumerate(zip(widths, widths[1:]), start=1):
            name = f"{PREFIX}.layer{k}"
            layer = SRgnLayerParams(
                w_mess=self.store.add(f"{name}.w_mess", init_params((f_in, f_out), cfg.init, rng)),
                w_surr=self.store.add(f"{name}.w_surr", init_params((2 * f_out, f_out), cfg.init, rng)),
                w_cen=self.store.add(f"{name}.w_cen", init_params((2 * f_out, f_out), cfg.init, rng)),
            )
            if cfg.untie_central_message:
                layer.w_mess_central = self.store.add(
                    f"{name}.w_mess_central", init_params((f_in, f_out), cfg.init, rng)
                )
            self.layers.append(layer)

        self.head = MLP(
            self.store, f"{PREFIX}.head", (cfg.d + 1) * cfg.dims[-1], cfg.head_hidden, 1, rng, init=cfg.init
        )
        logger.debug(f"S-RGN with {self.store.num_parameters()} parameters")

    @property
    def subject_count(self) -> int:
        return self.cfg.subject_count

    def encode(self, gx, gy, gz=None) -> StarState:
        state = init_star(gx, gy, self.cfg, gz)
        for layer in self.layers:
            state = srgn_layer(state, layer, self.cfg)
        return state

    def forward(self, gx, gy, gz=None) -> Tensor:
        self._check_subjects(gz)
        state = self.encode(gx, gy, gz)
        logits = self.head(readout(state))
        return reshape(logits, (logits.shape[0],))
