"""Search orchestration: iterate selection, expansion, simulation, and
back-propagation against an environment and a prior policy.

Variant switches cover the ablations (scalar means instead of quantile
sets; UCT exploration instead of the curiosity bonus) and the
deterministicized baseline (mode-outcome environment wrapper plus scalar
means).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import SearchError
from .novelty import HashEmbedding, RndModel, StateBuffer
from .quantile import PsiOperator
from .tree import PathStep, Tree, backpropagate, recommend, select_action
from .envs.wrappers import deterministicize

VARIANTS = ("full", "no_dist", "no_ucc", "deterministic_baseline")


@dataclass(frozen=True)
class PlannerConfig:
    iterations: int = 200
    depth_limit: int = 10
    n_q: int = 51
    c1: float = 0.25
    gamma: float = 0.95
    qr_step: float = 2.0
    qr_step_decay: float = 0.75
    kappa: float = 0.05
    psi_operator: PsiOperator = PsiOperator.MEAN
    variant: str = "full"
    seed: int = 0
    # curiosity model
    embed_dim: int = 384
    rnd_learning_rate: float = 1e-5
    intrinsic_reward_weight: float = 0.01
    rnd_output_gain: float = 10.0
    buffer_capacity: int = 10_000
    rnd_batch_size: int = 64
    update_per_collect: int = 5
    # state identity
    identity: str = "digest"
    similarity_threshold: float = 0.95
    # baseline wrapper
    deterministicize_k: int = 5

    def __post_init__(self):
        checks = [
            (self.iterations >= 1, "iterations must be >= 1"),
            (self.depth_limit >= 1, "depth_limit must be >= 1"),
            (self.n_q >= 1, "n_q must be >= 1"),
            (self.c1 >= 0.0, "c1 must be >= 0"),
            (0.0 < self.gamma <= 1.0, "gamma must be in (0, 1]"),
            (self.qr_step > 0.0, "qr_step must be positive"),
            (0.0 < self.qr_step_decay <= 1.0, "qr_step_decay must be in (0, 1]"),
            (self.kappa > 0.0, "kappa must be positive"),
            (self.variant in VARIANTS, f"variant must be one of {VARIANTS}"),
        ]
        bad = [msg for ok, msg in checks if not ok]
        if bad:
            raise ValueError("; ".join(bad))
        object.__setattr__(self, "psi_operator", PsiOperator(self.psi_operator))


@dataclass(frozen=True)
class VariantBehavior:
    """Effective switches derived from the variant tag."""

    distributional: bool
    exploration: str  # "curiosity" or "uct"
    use_novelty: bool
    wrap_env: bool


def apply_variant(cfg: PlannerConfig) -> VariantBehavior:
    if cfg.variant == "full":
        return VariantBehavior(True, "curiosity", True, False)
    if cfg.variant == "no_dist":
        return VariantBehavior(False, "curiosity", True, False)
    if cfg.variant == "no_ucc":
        return VariantBehavior(True, "uct", False, False)
    if cfg.variant == "deterministic_baseline":
        return VariantBehavior(False, "curiosity", True, True)
    raise ValueError(f"unknown variant {cfg.variant!r}")


class UniformPolicy:
    """Fallback prior policy: every legal action gets prior 1/k."""

    def __init__(self, env):
        self.env = env

    def propose(self, state_text: str) -> list[tuple[str, float]]:
        actions = self.env.legal_actions(state_text)
        if not actions:
            return []
        return [(a, 1.0 / len(actions)) for a in actions]


@dataclass
class IterationTrace:
    index: int
    path_length: int
    terminal: bool
    total_reward: float
    novelty_values: list[float]
    wall_time: float
    recommended_so_far: str


@dataclass
class SearchResult:
    tree: Tree
    traces: list[IterationTrace]
    recommended_action: str
    config: PlannerConfig
    wall_time: float


def run_search(env, policy, cfg: PlannerConfig, embedding_provider=None) -> SearchResult:
    """Run cfg.iterations search iterations and extract the best root action.

    Each iteration descends from the root — selecting among expanded
    children, expanding leaves, and stepping the environment — until a
    terminal state or the depth limit, then trains the curiosity predictor
    on the states visited this iteration and backs the rewards up the path.
    The recommendation is the root action with the highest mean return; no
    exploration bonus enters the extraction.
    """
    behavior = apply_variant(cfg)
    if behavior.wrap_env:
        env = deterministicize(env, cfg.deterministicize_k)
    if policy is None:
        policy = UniformPolicy(env)

    root_text = env.reset(cfg.seed)
    provider = embedding_provider
    rnd = buffer = None
    if behavior.use_novelty:
        if provider is None:
            provider = HashEmbedding(cfg.embed_dim)
        rnd = RndModel(
            embed_dim=provider.dimension,
            learning_rate=cfg.rnd_learning_rate,
            intrinsic_reward_weight=cfg.intrinsic_reward_weight,
            output_gain=cfg.rnd_output_gain,
            seed=cfg.seed,
        )
        buffer = StateBuffer(cfg.buffer_capacity)

    tree = Tree(
        root_text,
        n_q=cfg.n_q,
        distributional=behavior.distributional,
        identity=cfg.identity,
        embedding_provider=provider if cfg.identity == "similar" else None,
        similarity_threshold=cfg.similarity_threshold,
    )

    def observe(text: str):
        if rnd is None:
            return
        emb = provider.embed(text)
        rnd.observe(emb)
        buffer.add(emb)

    def novelty_of(text: str) -> float:
        if rnd is None:
            return 0.0
        return rnd.novelty_reward(provider.embed(text))

    start = time.perf_counter()
    traces: list[IterationTrace] = []
    observe(root_text)
    for i in range(cfg.iterations):
        t0 = time.perf_counter()
        node = tree.root
        path: list[PathStep] = []
        novelty_values: list[float] = []
        try:
            while not node.is_terminal and node.depth < cfg.depth_limit:
                if not node.is_expanded:
                    tree.expand(node, policy.propose(node.key.canonical))
                r_i = novelty_of(node.key.canonical)
                novelty_values.append(r_i)
                a = select_action(node, r_i, cfg.c1, cfg.psi_operator, behavior.exploration)
                next_text, reward, done = env.step(node.key.canonical, a.action_text)
                child = tree.attach_outcome(a, next_text, node.depth + 1, done)
                path.append(PathStep(node, a, reward, child))
                observe(child.key.canonical)
                node = child
            if rnd is not None and len(buffer) > 0:
                rnd.train_predictor(buffer, cfg.rnd_batch_size, cfg.update_per_collect)
            if path:
                backpropagate(path, cfg.gamma, cfg.qr_step, cfg.kappa, cfg.qr_step_decay)
        except SearchError:
            raise
        except Exception as exc:
            raise SearchError(f"iteration {i} failed: {exc}") from exc
        traces.append(
            IterationTrace(
                index=i,
                path_length=len(path),
                terminal=node.is_terminal,
                total_reward=sum(ps.reward for ps in path),
                novelty_values=novelty_values,
                wall_time=time.perf_counter() - t0,
                recommended_so_far=recommend(tree.root).action_text if tree.root.actions else "",
            )
        )
    return SearchResult(
        tree=tree,
        traces=traces,
        recommended_action=recommend(tree.root).action_text,
        config=cfg,
        wall_time=time.perf_counter() - start,
    )


def rollout_recommended(env, tree: Tree, seed: int, max_steps: int | None = None):
    """Replay the learned plan greedily with fresh environment randomness.

    At each state the max-mean action of the matching tree node is taken;
    off-tree states fall back to a seeded random legal action. Returns
    (total_reward, reached_terminal, actions_taken).
    """
    rng = np.random.default_rng(seed)
    state = env.reset(seed)
    limit = max_steps if max_steps is not None else env.max_steps
    node = tree.root
    total = 0.0
    actions: list[str] = []
    done = False
    for _ in range(limit):
        if node is not None and node.is_expanded:
            a = recommend(node)
            action_text = a.action_text
        else:
            legal = env.legal_actions(state)
            if not legal:
                break
            action_text = legal[int(rng.integers(0, len(legal)))]
            a = None
        state, r, done = env.step(state, action_text)
        total += r
        actions.append(action_text)
        if done:
            break
        if a is not None:
            child = a.children.get(tree.resolve(state, node.depth + 1).digest)
        else:
            child = None
        node = child
    return total, done, actions
