"""Search tree of alternating state and action nodes.

State nodes hold visit counts; action nodes hold a quantile return
distribution (or a scalar running mean in the ablated form), a prior, a
visit count, and one child state node per observed stochastic outcome.
Selection maximizes the collapsed return plus a curiosity bonus; backups
run quantile-regression updates along the traversed path.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SearchError
from .quantile import PsiOperator, QuantileDistribution, collapse, init_from_prior, qr_update


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class StateKey:
    """Canonical state text plus a fixed-width content hash."""

    canonical: str
    digest: str

    @classmethod
    def from_text(cls, text: str) -> "StateKey":
        return cls(canonical=text, digest=_digest(text))


@dataclass
class ActionNode:
    """A state-action pair: prior, return estimate, visits, outcome children."""

    action_text: str
    prior: float
    z: QuantileDistribution | None = None  # None in scalar (mean-only) mode
    value: float = 0.0
    visits: int = 0
    children: dict[str, "StateNode"] = field(default_factory=dict)

    def estimate(self, operator: PsiOperator = PsiOperator.MEAN) -> float:
        """Collapsed return estimate (scalar mean when no distribution)."""
        if self.z is None:
            return self.value
        return collapse(self.z, operator)

    def mean_value(self) -> float:
        if self.z is None:
            return self.value
        return float(self.z.values.mean())


@dataclass
class StateNode:
    """A state at a depth; terminal nodes never get action children."""

    key: StateKey
    depth: int
    is_terminal: bool = False
    visits: int = 0
    actions: list[ActionNode] = field(default_factory=list)

    @property
    def is_expanded(self) -> bool:
        return bool(self.actions)


@dataclass(frozen=True)
class PathStep:
    """One traversed (state, action, reward, next state) transition."""

    state: StateNode
    action: ActionNode
    reward: float
    next_state: StateNode | None


class Tree:
    """Container indexing state nodes by (digest, depth).

    Re-encountering an outcome already represented at the same depth reuses
    the existing node, so repeated stochastic samples accumulate statistics
    instead of duplicating subtrees. An optional similarity identity mode
    merges states whose embeddings have cosine similarity above a threshold.
    """

    def __init__(
        self,
        root_text: str,
        n_q: int = 51,
        distributional: bool = True,
        identity: str = "digest",
        embedding_provider=None,
        similarity_threshold: float = 0.95,
    ):
        if identity not in ("digest", "similar"):
            raise ValueError(f"unknown identity mode {identity!r}")
        if identity == "similar" and embedding_provider is None:
            raise ValueError("similarity identity mode requires an embedding provider")
        self.n_q = n_q
        self.distributional = distributional
        self.identity = identity
        self.provider = embedding_provider
        self.similarity_threshold = similarity_threshold
        self._index: dict[tuple[str, int], StateNode] = {}
        self.root = self._register(StateKey.from_text(root_text), depth=0, terminal=False)

    def _register(self, key: StateKey, depth: int, terminal: bool) -> StateNode:
        node = self._index.get((key.digest, depth))
        if node is None:
            node = StateNode(key=key, depth=depth, is_terminal=terminal)
            self._index[(key.digest, depth)] = node
        return node

    def _resolve_key(self, text: str, depth: int) -> StateKey:
        key = StateKey.from_text(text)
        if self.identity == "digest" or (key.digest, depth) in self._index:
            return key
        vec = self.provider.embed(text)
        norm = np.linalg.norm(vec)
        if norm == 0.0:
            return key
        for (_, d), node in self._index.items():
            if d != depth:
                continue
            other = self.provider.embed(node.key.canonical)
            denom = norm * np.linalg.norm(other)
            if denom > 0.0 and float(vec @ other) / denom >= self.similarity_threshold:
                return node.key
        return key

    def resolve(self, text: str, depth: int) -> StateKey:
        """Public identity resolution (used when replaying a plan)."""
        return self._resolve_key(text, depth)

    def nodes(self) -> list[StateNode]:
        return list(self._index.values())

    def expand(self, s: StateNode, proposals: list[tuple[str, float]]) -> list[ActionNode]:
        """Create one action child per (action_text, prior) proposal."""
        if s.is_terminal:
            raise SearchError(f"cannot expand terminal state {s.key.digest}")
        if s.is_expanded:
            raise SearchError(f"state {s.key.digest} is already expanded")
        if not proposals:
            raise SearchError(f"no action proposals for state {s.key.digest}")
        for text, prior in proposals:
            if self.distributional:
                node = ActionNode(action_text=text, prior=prior, z=init_from_prior(prior, self.n_q))
            else:
                node = ActionNode(action_text=text, prior=prior, z=None, value=float(prior))
            s.actions.append(node)
        return s.actions

    def attach_outcome(self, a: ActionNode, next_text: str, depth: int, terminal: bool) -> StateNode:
        """Return the child for this outcome, creating it on first sight."""
        key = self._resolve_key(next_text, depth)
        child = a.children.get(key.digest)
        if child is None:
            child = self._register(key, depth, terminal)
            a.children[key.digest] = child
        return child


def select_action(
    s: StateNode,
    novelty: float,
    c1: float,
    operator: PsiOperator = PsiOperator.MEAN,
    exploration: str = "curiosity",
) -> ActionNode:
    """Pick the action child maximizing estimate + exploration bonus.

    The curiosity bonus is c1 * novelty / max(N, 1); the "uct" mode swaps in
    the classic c1 * sqrt(ln N_parent / N) term instead. Ties go to the
    lowest-index child.
    """
    if not s.actions:
        raise SearchError(f"select_action on a state with no actions ({s.key.digest})")
    if exploration == "uct":
        n_parent = max(sum(a.visits for a in s.actions), 1)
        bonuses = [
            c1 * math.sqrt(math.log(n_parent) / a.visits) if a.visits > 0 else math.inf
            for a in s.actions
        ]
    elif exploration == "curiosity":
        bonuses = [c1 * novelty / max(a.visits, 1) for a in s.actions]
    else:
        raise ValueError(f"unknown exploration mode {exploration!r}")
    scores = [a.estimate(operator) + b for a, b in zip(s.actions, bonuses)]
    return s.actions[int(np.argmax(scores))]


def backpropagate(
    path: list[PathStep], gamma: float, step: float, kappa: float, decay: float = 0.75
) -> None:
    """Update every action node on the path, from the last step backward.

    The final step's target set is {r}; an interior step's targets are
    r + gamma * theta'_j over the successor action node's quantiles (the
    action actually taken next on this path). Each node's per-visit update
    step decays as step / N**decay so early backups move fast and late
    estimates settle as visits accumulate.
    """
    if not path:
        raise SearchError("backpropagate on an empty path")
    for t, ps in enumerate(path[:-1]):
        if ps.next_state is not path[t + 1].state:
            raise SearchError(f"path is not parent-linked at step {t}")
    for t in range(len(path) - 1, -1, -1):
        ps = path[t]
        a = ps.action
        a.visits += 1
        ps.state.visits += 1
        if a.z is not None:
            if t == len(path) - 1:
                targets = np.array([ps.reward])
            else:
                succ = path[t + 1].action
                targets = ps.reward + gamma * succ.z.values
            a.z = qr_update(a.z, targets, step=step / a.visits**decay, kappa=kappa)
        else:
            if t == len(path) - 1:
                target = ps.reward
            else:
                target = ps.reward + gamma * path[t + 1].action.mean_value()
            a.value += (target - a.value) / a.visits


def recommend(root: StateNode) -> ActionNode:
    """Exploitation-only extraction: argmax of mean return, no bonuses."""
    if not root.actions:
        raise SearchError("recommend on an unexpanded root")
    return root.actions[int(np.argmax([a.mean_value() for a in root.actions]))]


def snapshot(tree: Tree) -> dict:
    """JSON-serializable dump of nodes, edges, means, and visit counts."""
    nodes = []
    ids: dict[int, int] = {}

    def state_id(s: StateNode) -> int:
        return ids.setdefault(id(s), len(ids))

    for s in tree.nodes():
        sid = state_id(s)
        action_entries = []
        for i, a in enumerate(s.actions):
            action_entries.append(
                {
                    "id": f"{sid}:{i}",
                    "kind": "action",
                    "action_text": a.action_text,
                    "prior": a.prior,
                    "mean": a.mean_value(),
                    "N": a.visits,
                    "children": sorted(state_id(c) for c in a.children.values()),
                }
            )
        nodes.append(
            {
                "id": sid,
                "kind": "state",
                "digest": s.key.digest,
                "canonical": s.key.canonical,
                "depth": s.depth,
                "terminal": s.is_terminal,
                "visits": s.visits,
                "actions": action_entries,
            }
        )
    return {"root": state_id(tree.root), "nodes": nodes}


def write_snapshot(tree: Tree, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(snapshot(tree), fh, indent=2, sort_keys=True)
