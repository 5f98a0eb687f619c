"""Monte-Carlo estimation for the randomised algorithms.

Trial ``t`` draws its uniforms from ``numpy.random.default_rng(derive_seed(seed, t))``
in exactly the order the online algorithm classes consume them, so any single
trial can be replayed through :func:`classfair.core.run_online` and yields the
same matching as the vectorised kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .algorithms import SELECTORS, SEMI_OCS_C, EqualFillingOCS, p_bound
from .audit import ONE_MINUS_INV_E
from .core import Instance, run_online
from .errors import CapabilityError, DomainError
from .valuation import prop_share

MASK64 = (1 << 64) - 1
ALPHA = float(ONE_MINUS_INV_E)


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(seed: int, trial: int) -> int:
    """Seed of trial ``trial``: ``seed XOR splitmix64(trial)``."""
    return (seed & MASK64) ^ splitmix64(trial)


def _csr(rows):
    ptr = [0]
    flat = []
    for r in rows:
        flat.extend(r)
        ptr.append(len(flat))
    return np.asarray(ptr, dtype=np.int64), flat


def guiding_matching(inst: Instance) -> dict:
    """Exact guiding fractions ``x~[a, o]`` of Equal-Filling-OCS (independent of the randomness)."""
    algo = EqualFillingOCS()
    algo.start(inst.classes)
    for o in inst.items:
        algo.guide_step(inst.arrival(o))
    return dict(algo.guide)


def _mean_se(samples: np.ndarray):
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    if n < 2:
        return mean, np.zeros_like(mean)
    return mean, samples.std(axis=0, ddof=1) / math.sqrt(n)


@dataclass
class MonteCarloReport:
    algorithm: str
    trials: int
    seed: int
    agents: tuple
    k: int
    mean_value: list
    se_value: list
    mean_opt: list              # [i][j] = E[V*_i(Y_j)]
    cef_ratio: list             # ratio of means
    cef_ratio_of_means_se: list  # se of the per-trial difference V_i - alpha * V*_i(Y_j)
    cef_diff_mean: list
    cef_mean_of_ratios: list
    prop: list
    cprop_ratio: list
    cprop_se: list
    usw_mean: float
    usw_se: float
    selected_prob: dict = field(default_factory=dict)
    selected_se: dict = field(default_factory=dict)
    matched_prob: dict = field(default_factory=dict)
    matched_se: dict = field(default_factory=dict)
    guide_mass: dict = field(default_factory=dict)
    closed_form: dict = field(default_factory=dict)
    p_bound: dict = field(default_factory=dict)
    ci_valid: bool = True

    def cef_ok(self, alpha: float = ALPHA, z: float = 3.0) -> bool:
        """Every ordered pair satisfies ``mean(V_i - alpha V*_i(Y_j)) >= -z SE``."""
        return all(
            self.cef_diff_mean[i][j] >= -z * self.cef_ratio_of_means_se[i][j]
            for i in range(self.k) for j in range(self.k) if i != j
        )

    def cprop_min(self):
        vals = [(r, s) for r, s in zip(self.cprop_ratio, self.cprop_se) if r is not None]
        return min(vals, default=(math.inf, 0.0))

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["prop"] = [str(p) for p in self.prop]
        for key in ("selected_prob", "selected_se", "matched_prob", "matched_se", "guide_mass", "closed_form", "p_bound"):
            out[key] = {str(a): v for a, v in getattr(self, key).items()}
        out["agents"] = list(self.agents)
        return out


def _class_masks(inst: Instance, owner_class: np.ndarray) -> np.ndarray:
    """``owner_class[t, s]`` = class receiving step s in trial t (-1 none) -> per-class bitmasks."""
    n_trials, n_steps = owner_class.shape
    masks = np.zeros((n_trials, inst.k), dtype=np.uint64)
    for s in range(n_steps):
        bit = np.uint64(1 << s)
        col = owner_class[:, s]
        for j in range(inst.k):
            masks[col == j, j] |= bit
    return masks


def _class_adjacency(inst: Instance):
    pos = inst.step_of
    out = []
    for members in inst.classes:
        rows = []
        for a in members:
            mask = 0
            for o in inst.liked[a]:
                mask |= 1 << pos[o]
            rows.append(mask)
        out.append(rows)
    return out


def _liker_arrays(inst: Instance, index):
    return _csr([[index[a] for a in inst.likers[o]] for o in inst.items])


def _summarise(inst, name, trials, seed, assign, compare_class, agents):
    """Shared statistics: assign[t, s] is the agent index matched at step s."""
    k = inst.k
    index_class = np.asarray([inst.class_of[a] for a in agents], dtype=np.int64)
    matched_class = np.where(assign >= 0, index_class[np.maximum(assign, 0)], -1)
    values = np.stack([(matched_class == i).sum(axis=1) for i in range(k)], axis=1).astype(np.float64)
    masks = _class_masks(inst, compare_class)
    opt = _kernels.bundle_values(masks, _class_adjacency(inst), len(inst.items)).astype(np.float64)

    mean_v, se_v = _mean_se(values)
    mean_opt = opt.mean(axis=0)
    diff_mean = [[0.0] * k for _ in range(k)]
    diff_se = [[0.0] * k for _ in range(k)]
    ratio = [[math.inf] * k for _ in range(k)]
    mor = [[math.inf] * k for _ in range(k)]
    for i in range(k):
        for j in range(k):
            d = values[:, i] - ALPHA * opt[:, i, j]
            m, s = _mean_se(d)
            diff_mean[i][j], diff_se[i][j] = float(m), float(s)
            if mean_opt[i, j] > 0:
                ratio[i][j] = float(mean_v[i] / mean_opt[i, j])
            with np.errstate(divide="ignore", invalid="ignore"):
                r = np.where(opt[:, i, j] > 0, values[:, i] / np.where(opt[:, i, j] > 0, opt[:, i, j], 1), np.inf)
            mor[i][j] = float(np.mean(r))
    props = [prop_share(inst, i) for i in range(k)]
    cprop = [float(mean_v[i] / float(p)) if p else None for i, p in enumerate(props)]
    cprop_se = [float(se_v[i] / float(p)) if p else 0.0 for i, p in enumerate(props)]
    usw_mean, usw_se = _mean_se(values.sum(axis=1))

    matched_any = np.zeros((trials, len(agents)), dtype=bool)
    for s in range(assign.shape[1]):
        col = assign[:, s]
        hit = col >= 0
        matched_any[np.nonzero(hit)[0], col[hit]] = True
    mp, ms = _mean_se(matched_any.astype(np.float64))
    return MonteCarloReport(
        algorithm=name, trials=trials, seed=seed, agents=tuple(agents), k=k,
        mean_value=[float(v) for v in mean_v], se_value=[float(v) for v in se_v],
        mean_opt=[[float(v) for v in row] for row in mean_opt],
        cef_ratio=ratio, cef_ratio_of_means_se=diff_se, cef_diff_mean=diff_mean, cef_mean_of_ratios=mor,
        prop=props, cprop_ratio=cprop, cprop_se=cprop_se,
        usw_mean=float(usw_mean), usw_se=float(usw_se),
        matched_prob={a: float(mp[r]) for r, a in enumerate(agents)},
        matched_se={a: float(ms[r]) for r, a in enumerate(agents)},
        ci_valid=trials >= 30,
    )


def ocs_uniforms(seed: int, trials: int, n_steps: int) -> np.ndarray:
    us = np.empty((trials, n_steps), dtype=np.float64)
    for t in range(trials):
        us[t] = np.random.default_rng(derive_seed(seed, t)).random(n_steps)
    return us


def ranking_uniforms(seed: int, trials: int, n_agents: int, n_steps: int):
    keys = np.empty((trials, n_agents), dtype=np.float64)
    us = np.empty((trials, n_steps), dtype=np.float64)
    for t in range(trials):
        rng = np.random.default_rng(derive_seed(seed, t))
        keys[t] = rng.random(n_agents)
        us[t] = rng.random(n_steps)
    return keys, us


def _check_size(inst: Instance):
    if len(inst.items) > 64:
        raise CapabilityError("Monte-Carlo kernels support at most 64 items")


def monte_carlo_ocs(inst: Instance, selector: str = "independent", trials: int = 10_000, seed: int = 0,
                    backend=None) -> MonteCarloReport:
    """Equal-Filling-OCS over ``trials`` seeded replays of a static instance."""
    _check_size(inst)
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if selector not in SELECTORS:
        raise DomainError(f"unknown selector {selector!r}")
    mode = SELECTORS[selector]().mode
    agents = inst.agents
    index = {a: r for r, a in enumerate(agents)}
    guide = guiding_matching(inst)
    cand_rows = [[(index[a], guide[(a, o)]) for a in inst.likers[o] if (a, o) in guide] for o in inst.items]
    cand_ptr, flat = _csr(cand_rows)
    cand_agent = np.asarray([a for a, _ in flat], dtype=np.int64)
    cand_x = np.asarray([float(v) for _, v in flat], dtype=np.float64)
    liker_ptr, likers = _liker_arrays(inst, index)
    us = ocs_uniforms(seed, trials, len(inst.items))
    kern = backend if backend is not None else _kernels
    assign, counts = kern.ocs_trials(cand_ptr, cand_agent, cand_x, liker_ptr, np.asarray(likers, dtype=np.int64),
                                     len(agents), us, mode, SEMI_OCS_C)
    index_class = np.asarray([inst.class_of[a] for a in agents], dtype=np.int64)
    owner = np.where(assign >= 0, index_class[np.maximum(assign, 0)], -1)
    rep = _summarise(inst, f"equal-filling-ocs[{selector}]", trials, seed, assign, owner, agents)
    mass = {a: sum((v for (b, _), v in guide.items() if b == a), Fraction(0)) for a in agents}
    rep.guide_mass = {a: float(m) for a, m in mass.items()}
    rep.closed_form = {}
    for a in agents:
        stay = 1.0
        for o in inst.items:
            stay *= 1.0 - float(guide.get((a, o), 0))
        rep.closed_form[a] = 1.0 - stay
    rep.p_bound = {a: p_bound(float(m)) for a, m in mass.items()}
    for r, a in enumerate(agents):
        p = counts[r] / trials
        rep.selected_prob[a] = float(p)
        rep.selected_se[a] = float(math.sqrt(p * (1 - p) / (trials - 1))) if trials > 1 else 0.0
    return rep


def monte_carlo_ranking(inst: Instance, trials: int = 10_000, seed: int = 0, backend=None) -> MonteCarloReport:
    """Equal-Ranking; the envy comparison uses the class-level assignment (matched or not)."""
    _check_size(inst)
    if trials < 1:
        raise DomainError("trials must be at least 1")
    agents = inst.agents
    index = {a: r for r, a in enumerate(agents)}
    liker_ptr, likers = _liker_arrays(inst, index)
    agent_class = np.asarray([inst.class_of[a] for a in agents], dtype=np.int64)
    keys, us = ranking_uniforms(seed, trials, len(agents), len(inst.items))
    kern = backend if backend is not None else _kernels
    assign, chosen = kern.ranking_trials(liker_ptr, np.asarray(likers, dtype=np.int64), agent_class, keys, us)
    return _summarise(inst, "equal-ranking", trials, seed, assign, chosen, agents)


def replay_trial(inst: Instance, algorithm: str, seed: int, trial: int, selector: str = "independent"):
    """Re-run one Monte-Carlo trial through the ordinary online protocol."""
    from .algorithms import EqualRanking

    s = derive_seed(seed, trial)
    if algorithm == "equal-filling-ocs":
        algo = EqualFillingOCS(SELECTORS[selector](), seed=s)
    elif algorithm == "equal-ranking":
        algo = EqualRanking(seed=s)
    else:
        raise DomainError(f"{algorithm!r} is not a randomised algorithm")
    return run_online(inst, algo), algo
