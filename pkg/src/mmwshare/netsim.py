"""Time-slotted downlink simulation of multi-operator mmWave networks.

A drop is one realization of BS/UE positions plus slow link states. Within a
drop every scheduling domain (a BS, or a BS band) picks one UE per slot,
fading is redrawn i.i.d. per link per slot, and each UE accumulates the rate
it receives in the slots where it is served.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from . import geometry, radio
from .config import (BsSharingScheduler, InterferenceMode, ScenarioConfig, SchedulerPolicy,
                     SharingRegime)
from .radio import LinkClass

OUTSIDE = -1
MIN_LINK_DISTANCE_M = 1.0
CHUNK_SLOTS = 256

STREAMS = ("geometry", "shadowing", "fading", "interference")


def drop_streams(master_seed: int, drop: int) -> dict:
    """Named generators for one drop; independent of how many drops run."""
    return {name: np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(drop, k)))
            for k, name in enumerate(STREAMS)}


def associate(deployment: geometry.Deployment, regime: SharingRegime, dist=None) -> np.ndarray:
    """Serving BS index per UE (nearest admissible, lowest index on ties), OUTSIDE if none."""
    if dist is None:
        dist, _ = geometry.pairwise_distance_and_bearing(deployment.bs_xy, deployment.ue_xy,
                                                         deployment.region)
    if deployment.n_ue == 0:
        return np.zeros(0, dtype=int)
    if deployment.n_bs == 0:
        return np.full(deployment.n_ue, OUTSIDE)
    if not regime.shared_bs:
        foreign = deployment.bs_op[:, None] != deployment.ue_op[None, :]
        dist = np.where(foreign, np.inf, dist)
    serving = np.argmin(dist, axis=0)
    serving[~np.isfinite(dist[serving, np.arange(deployment.n_ue)])] = OUTSIDE
    return serving


def operative_bandwidth(ue_operator, regime: SharingRegime, operators) -> float:
    """Bandwidth a UE is served on: its own license, or the pooled band."""
    if regime.shared_spectrum:
        return float(sum(op.bandwidth_hz for op in operators))
    return float(operators[ue_operator].bandwidth_hz)


def schedule_slot(inst_snr, mean_snr, policy: SchedulerPolicy, slot_index: int,
                  rng: np.random.Generator):
    """Index of the UE a cell serves in this slot, or None for an empty cell."""
    n = len(inst_snr)
    if n == 0:
        return None
    if policy is SchedulerPolicy.ROUND_ROBIN:
        return slot_index % n
    metric = np.asarray(inst_snr, dtype=float) / np.asarray(mean_snr, dtype=float)
    best = np.flatnonzero(metric == metric.max())
    return int(best[0] if len(best) == 1 else rng.choice(best))


@dataclass
class DropResult:
    rates: np.ndarray  # bits/s, time average per UE
    ue_op: np.ndarray
    serving: np.ndarray  # BS index or OUTSIDE
    link_class: np.ndarray  # serving link class, -1 for OUTSIDE
    slot_share: np.ndarray  # fraction of slots in which each UE was served


@numba.njit(cache=True)
def _interference_kernel(sel_ue, pair_start, pair_count, pair_domain, pair_bs, pair_static,
                         ue_band, ux, uy, cos_half_bw, g_main, g_back, fade, out):
    k = 0
    c, D = sel_ue.shape
    for t in range(c):
        for d in range(D):
            v = sel_ue[t, d]
            acc = 0.0
            for j in range(pair_start[v], pair_start[v] + pair_count[v]):
                f = fade[k]
                k += 1
                target = sel_ue[t, pair_domain[j]]
                if ue_band[target] != ue_band[v]:
                    continue
                b = pair_bs[j]
                # departure angle inside the main lobe <=> cos >= cos(beamwidth / 2)
                cos_dep = ux[b, target] * ux[b, v] + uy[b, target] * uy[b, v]
                g = g_main if cos_dep >= cos_half_bw else g_back
                acc += g * pair_static[j] * f
            out[t, d] = acc


class DropModel:
    """Static part of a drop: link states, association, scheduling domains, interferer pairs."""

    def __init__(self, deployment: geometry.Deployment, cfg: ScenarioConfig,
                 shadowing_rng: np.random.Generator):
        self.cfg = cfg
        self.dep = deployment
        regime = cfg.regime
        K, U = deployment.n_bs, deployment.n_ue
        P = cfg.rate_model.tx_power_w
        bs_pat, ue_pat = cfg.bs_antenna, cfg.ue_antenna

        dist, bear = geometry.pairwise_distance_and_bearing(deployment.bs_xy, deployment.ue_xy,
                                                            deployment.region)
        cls, _, gain = radio.draw_link_states(np.maximum(dist, MIN_LINK_DISTANCE_M),
                                              cfg.channel, shadowing_rng)
        self.gain = gain
        self.serving = associate(deployment, regime, dist)
        ue = np.arange(U)
        has_bs = self.serving != OUTSIDE
        srv = np.where(has_bs, self.serving, 0)
        self.link_class = np.where(has_bs, cls[srv, ue] if K else -1, -1).astype(int)
        h_serving = np.where(has_bs, gain[srv, ue] if K else 0.0, 0.0)

        self.ue_band = deployment.ue_op.copy() if not regime.shared_spectrum else np.zeros(U, int)
        self.bandwidth = np.array([operative_bandwidth(o, regime, cfg.operators)
                                   for o in deployment.ue_op], dtype=float)
        self.noise = radio.noise_power(cfg.rate_model, self.bandwidth)
        self.signal_mean = P * bs_pat.main * ue_pat.main * h_serving

        # a UE with an outage serving link cannot be reached and takes no slots
        eligible = np.flatnonzero(has_bs & (h_serving > 0))
        per_bs = (regime is SharingRegime.BS_SHARING_ONLY
                  and cfg.bs_sharing_scheduler is BsSharingScheduler.PER_BS)
        key_band = np.zeros(U, int) if per_bs else self.ue_band
        n_key_bands = int(key_band.max()) + 1 if U else 1
        keys = self.serving[eligible] * n_key_bands + key_band[eligible]
        uniq, dom = np.unique(keys, return_inverse=True)
        order = np.lexsort((eligible, dom))
        self.sorted_ue = eligible[order]
        self.ue_domain = np.full(U, -1)
        self.ue_domain[eligible] = dom
        self.n_domains = len(uniq)
        sizes = np.bincount(dom, minlength=self.n_domains)
        self.sizes = sizes
        self.starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
        self.domain_bs = uniq // n_key_bands

        # candidate interferer pairs (victim v, domain d' at BS b')
        if cfg.interference is InterferenceMode.SINR and self.n_domains and len(eligible):
            table = np.full((K, n_key_bands), -1)
            table[self.domain_bs, uniq % n_key_bands] = np.arange(self.n_domains)
            b_idx, v_pos = np.nonzero(gain[:, eligible] > 0)
            v_idx = eligible[v_pos]
            d_idx = table[b_idx, key_band[v_idx]]
            keep = (b_idx != self.serving[v_idx]) & (d_idx >= 0)
            b_idx, v_idx, d_idx = b_idx[keep], v_idx[keep], d_idx[keep]
            by_victim = np.argsort(v_idx, kind="stable")
            b_idx, v_idx, d_idx = b_idx[by_victim], v_idx[by_victim], d_idx[by_victim]
            phi_a = geometry.angle_diff(bear[b_idx, v_idx], bear[self.serving[v_idx], v_idx])
            self.pair_bs, self.pair_victim, self.pair_domain = b_idx, v_idx, d_idx
            self.pair_count = np.bincount(v_idx, minlength=U)
            self.pair_start = np.concatenate([[0], np.cumsum(self.pair_count)[:-1]]).astype(int)
            self.pair_static = P * radio.antenna_gain(ue_pat, phi_a) * gain[b_idx, v_idx]
            rad = np.radians(bear)
            self.ux, self.uy = np.cos(rad), np.sin(rad)
            self.cos_half_bw = np.cos(np.radians(bs_pat.beamwidth_deg / 2.0))
        else:
            self.pair_bs = np.zeros(0, int)

    # -- per-slot pieces -------------------------------------------------------

    def select(self, fading: np.ndarray, slot0: int):
        """Selected position (into sorted_ue) per (slot, domain).

        `fading` is (slots, n_eligible) in sorted_ue order. Under the
        opportunistic rule the normalized SNR of a UE is its fading draw;
        exact ties have probability zero and resolve to the lowest index.
        """
        c = fading.shape[0]
        if self.cfg.policy is SchedulerPolicy.ROUND_ROBIN:
            t = np.arange(slot0, slot0 + c)[:, None]
            return self.starts[None, :] + t % self.sizes[None, :]
        seg_max = np.maximum.reduceat(fading, self.starts, axis=1)
        pos = np.arange(fading.shape[1])
        cand = np.where(fading == np.repeat(seg_max, self.sizes, axis=1), pos, fading.shape[1])
        return np.minimum.reduceat(cand, self.starts, axis=1)

    def interference(self, sel_ue: np.ndarray, rng: np.random.Generator):
        """Interference power at each domain's selected UE, shape (slots, domains).

        One fading value is drawn per candidate interferer of every selected
        victim, in (slot, domain, pair) order, whether or not the interferer
        ends up on the victim's band; the draws are returned for inspection.
        """
        c, D = sel_ue.shape
        out = np.zeros((c, D))
        if len(self.pair_bs) == 0:
            return out, np.zeros(0)
        fade = radio.fading_sample(rng, size=int(self.pair_count[sel_ue].sum()))
        _interference_kernel(sel_ue, self.pair_start, self.pair_count, self.pair_domain,
                             self.pair_bs, self.pair_static, self.ue_band, self.ux, self.uy,
                             self.cos_half_bw, self.cfg.bs_antenna.main,
                             self.cfg.bs_antenna.back, fade, out)
        return out, fade

    def run(self, fading_rng: np.random.Generator, slots: int,
            interference_rng: np.random.Generator = None) -> DropResult:
        """Time-average rates over `slots` slots.

        Interferer fades come from `interference_rng` (default: the fading
        stream), so with a separate stream the serving-link fades and
        scheduling decisions do not depend on the interference mode.
        """
        if interference_rng is None:
            interference_rng = fading_rng
        U = self.dep.n_ue
        rate_sum = np.zeros(U)
        served = np.zeros(U)
        n_elig = len(self.sorted_ue)
        rm = self.cfg.rate_model
        if n_elig:
            for slot0 in range(0, slots, CHUNK_SLOTS):
                c = min(CHUNK_SLOTS, slots - slot0)
                fading = radio.fading_sample(fading_rng, size=(c, n_elig))
                sel_pos = self.select(fading, slot0)
                sel_ue = self.sorted_ue[sel_pos]
                signal = self.signal_mean[sel_ue] * np.take_along_axis(fading, sel_pos, axis=1)
                interf, _ = self.interference(sel_ue, interference_rng)
                sinr = signal / (self.noise[sel_ue] + interf)
                r = radio.rate(rm, self.bandwidth[sel_ue], sinr)
                rate_sum += np.bincount(sel_ue.ravel(), weights=r.ravel(), minlength=U)
                served += np.bincount(sel_ue.ravel(), minlength=U)
        return DropResult(rates=rate_sum / slots, ue_op=self.dep.ue_op.copy(),
                          serving=self.serving.copy(), link_class=self.link_class,
                          slot_share=served / slots)


def run_drop(deployment: geometry.Deployment, cfg: ScenarioConfig, shadowing_rng,
             fading_rng, slots=None, interference_rng=None) -> DropResult:
    model = DropModel(deployment, cfg, shadowing_rng)
    return model.run(fading_rng, cfg.slots if slots is None else slots, interference_rng)


def simulate_drop(cfg: ScenarioConfig, drop: int) -> DropResult:
    rngs = drop_streams(cfg.seed, drop)
    dep = geometry.sample_deployment([op.bs_density for op in cfg.operators],
                                     [op.ue_density for op in cfg.operators],
                                     cfg.region, rngs["geometry"])
    return run_drop(dep, cfg, rngs["shadowing"], rngs["fading"],
                    interference_rng=rngs["interference"])


@dataclass
class RateDistribution:
    rates: np.ndarray
    operator: np.ndarray
    drop: np.ndarray
    ue_index: np.ndarray
    link_class: np.ndarray
    slot_share: np.ndarray
    config: ScenarioConfig

    @property
    def drops(self) -> int:
        return self.config.drops

    def for_operator(self, op: int) -> np.ndarray:
        return self.rates[self.operator == op]

    def fifth_percentile(self) -> float:
        from .stats import fifth_percentile
        return fifth_percentile(self.rates)

    def fifth_percentile_ci(self, level=0.95, resamples=1000, seed=None):
        from .stats import bootstrap_ci
        seed = self.config.seed if seed is None else seed
        return bootstrap_ci(self.rates, level=level, resamples=resamples,
                            rng=np.random.default_rng([seed, 0xB007]))


def _simulate_drop_args(args):
    return simulate_drop(*args)


def simulate(cfg: ScenarioConfig, drops=None, seed=None, threads: int = 1) -> RateDistribution:
    """Run independent drops and pool the per-UE rates. Deterministic in (cfg, seed)."""
    if seed is not None:
        cfg = cfg.with_(seed=int(seed))
    if drops is not None:
        cfg = cfg.with_(drops=int(drops))
    if cfg.drops < 1:
        raise ValueError("drops must be >= 1")
    jobs = [(cfg, i) for i in range(cfg.drops)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_simulate_drop_args, jobs))
    else:
        results = [simulate_drop(*j) for j in jobs]
    return RateDistribution(
        rates=np.concatenate([r.rates for r in results]),
        operator=np.concatenate([r.ue_op for r in results]).astype(int),
        drop=np.concatenate([np.full(len(r.rates), i) for i, r in enumerate(results)]).astype(int),
        ue_index=np.concatenate([np.arange(len(r.rates)) for r in results]).astype(int),
        link_class=np.concatenate([r.link_class for r in results]).astype(int),
        slot_share=np.concatenate([r.slot_share for r in results]),
        config=cfg,
    )


LINK_CLASS_NAMES = {int(LinkClass.LOS): "LOS", int(LinkClass.NLOS): "NLOS",
                    int(LinkClass.OUTAGE): "OUTAGE", OUTSIDE: "OUTSIDE"}
