"""Random-network-distillation novelty signal over embedded states.

A frozen randomly initialized target network and a trainable predictor
network are evaluated on normalized state embeddings; the squared output
difference is the novelty reward. The predictor is trained toward the
target on states sampled from a FIFO buffer, so frequently visited states
lose novelty over time.
"""

from __future__ import annotations

import zlib
from collections import deque
from typing import Protocol

import numpy as np

DEFAULT_HIDDEN_SIZES = (64, 64, 128)
DEFAULT_LEARNING_RATE = 1e-5
DEFAULT_INTRINSIC_WEIGHT = 0.01
DEFAULT_EMBED_DIM = 384
OBS_CLAMP = 1.0


class EmbeddingProvider(Protocol):
    """Maps state text to a fixed-dimension vector, deterministically."""

    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


def hash_embed(text: str, d_e: int = DEFAULT_EMBED_DIM) -> np.ndarray:
    """Deterministic character-trigram feature hashing, L2-normalized.

    Offline stand-in for a sentence encoder: identical text gives an
    identical vector, the empty string gives the zero vector.
    """
    vec = np.zeros(d_e)
    if not text:
        return vec
    padded = f"  {text} "
    for i in range(len(padded) - 2):
        gram = padded[i : i + 3].encode("utf-8")
        h = zlib.crc32(gram)
        sign = 1.0 if (h >> 1) & 1 else -1.0
        vec[h % d_e] += sign
    norm = np.linalg.norm(vec)
    if norm > 0.0:
        vec /= norm
    return vec


class HashEmbedding:
    """Default EmbeddingProvider backed by hash_embed, with memoization."""

    def __init__(self, dimension: int = DEFAULT_EMBED_DIM):
        self.dimension = dimension
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = hash_embed(text, self.dimension)
            self._cache[text] = vec
        return vec


class Mlp:
    """Small ReLU MLP with manual forward/backward (numpy)."""

    def __init__(self, sizes, rng: np.random.Generator):
        self.sizes = tuple(sizes)
        self.weights = []
        self.biases = []
        for k in range(len(self.sizes) - 1):
            fan_in = self.sizes[k]
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(fan_in, self.sizes[k + 1]))
            b = rng.uniform(-1.0, 1.0, size=self.sizes[k + 1]) / np.sqrt(fan_in)
            self.weights.append(w)
            self.biases.append(b)

    def forward(self, x: np.ndarray) -> np.ndarray:
        h = np.atleast_2d(x)
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
        return h

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping pre-activation inputs for backward()."""
        h = np.atleast_2d(x)
        cache = [h]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if k < len(self.weights) - 1:
                h = np.maximum(h, 0.0)
            cache.append(h)
        return h, cache

    def sgd_step(self, cache, out_grad: np.ndarray, lr: float):
        """Backward pass from d(loss)/d(output), in-place SGD update."""
        grad = out_grad
        for k in range(len(self.weights) - 1, -1, -1):
            inp = cache[k]
            gw = inp.T @ grad
            gb = grad.sum(axis=0)
            if k > 0:
                grad = (grad @ self.weights[k].T) * (cache[k] > 0.0)
            self.weights[k] -= lr * gw
            self.biases[k] -= lr * gb

    def parameter_bytes(self) -> bytes:
        return b"".join(a.tobytes() for a in self.weights + self.biases)


class RunningNormalizer:
    """Per-dimension running mean/variance with output clamped to [-1, 1]."""

    def __init__(self, dim: int, clamp: float = OBS_CLAMP, eps: float = 1e-8):
        self.dim = dim
        self.clamp = clamp
        self.eps = eps
        self.count = 0
        self._mean = np.zeros(dim)
        self._m2 = np.zeros(dim)

    def update(self, x: np.ndarray):
        self.count += 1
        delta = x - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (x - self._mean)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        if self.count < 2:
            return np.clip(x - self._mean, -self.clamp, self.clamp)
        std = np.sqrt(self._m2 / self.count)
        return np.clip((x - self._mean) / np.maximum(std, self.eps), -self.clamp, self.clamp)


class StateBuffer:
    """FIFO buffer of embedded states used to train the predictor."""

    def __init__(self, capacity: int = 10_000):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._entries: deque[np.ndarray] = deque(maxlen=capacity)

    def add(self, x: np.ndarray):
        self._entries.append(np.asarray(x, dtype=np.float64))

    def __len__(self) -> int:
        return len(self._entries)

    def sample(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if not self._entries:
            raise ValueError("buffer is empty")
        idx = rng.integers(0, len(self._entries), size=batch_size)
        return np.stack([self._entries[i] for i in idx])

    def sample_weighted(self, batch_size: int, rng: np.random.Generator):
        """Uniform sample collapsed to unique rows with sampling weights.

        Equivalent to sample() for any loss that is a weighted mean over
        rows, but much cheaper when the buffer holds many repeats (states
        revisited across iterations share one cached embedding object).
        """
        if not self._entries:
            raise ValueError("buffer is empty")
        idx = rng.integers(0, len(self._entries), size=batch_size)
        counts: dict[int, list] = {}
        for i in idx:
            entry = self._entries[i]
            slot = counts.setdefault(id(entry), [entry, 0])
            slot[1] += 1
        rows = np.stack([slot[0] for slot in counts.values()])
        weights = np.array([slot[1] for slot in counts.values()], dtype=np.float64)
        return rows, weights / batch_size


class RndModel:
    """Frozen target network plus trainable predictor over embeddings."""

    def __init__(
        self,
        embed_dim: int = DEFAULT_EMBED_DIM,
        hidden_sizes=DEFAULT_HIDDEN_SIZES,
        learning_rate: float = DEFAULT_LEARNING_RATE,
        intrinsic_reward_weight: float = DEFAULT_INTRINSIC_WEIGHT,
        output_gain: float = 1.0,
        seed: int = 0,
    ):
        sizes = (embed_dim, *hidden_sizes)
        # distinct streams so target and predictor never share weights
        self.target = Mlp(sizes, np.random.default_rng((seed, 1)))
        self.predictor = Mlp(sizes, np.random.default_rng((seed, 2)))
        self.normalizer = RunningNormalizer(embed_dim)
        # feature scale applied to the output difference when scoring;
        # multiplies novelty by gain^2 without touching training dynamics
        self.output_gain = output_gain
        self.learning_rate = learning_rate
        self.intrinsic_reward_weight = intrinsic_reward_weight
        self.embed_dim = embed_dim
        self._rng = np.random.default_rng((seed, 3))

    def observe(self, x: np.ndarray):
        """Fold an embedding into the running normalization statistics."""
        self.normalizer.update(np.asarray(x, dtype=np.float64))

    def normalize_observation(self, x: np.ndarray) -> np.ndarray:
        return self.normalizer.normalize(np.asarray(x, dtype=np.float64))

    def novelty_reward(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.embed_dim,):
            raise ValueError(f"expected embedding of dim {self.embed_dim}, got {x.shape}")
        z = self.normalizer.normalize(x)
        diff = self.output_gain * (self.predictor.forward(z) - self.target.forward(z))
        return self.intrinsic_reward_weight * float((diff * diff).sum())

    def train_predictor(self, buffer: StateBuffer, batch_size: int = 64, steps: int = 5):
        """SGD steps moving the predictor toward the frozen target.

        Returns the per-step mean losses (squared error summed over output
        dims, averaged over the batch).
        """
        if len(buffer) == 0:
            raise ValueError("buffer is empty")
        losses = []
        for _ in range(steps):
            rows, weights = buffer.sample_weighted(min(batch_size, len(buffer)), self._rng)
            z = self.normalizer.normalize(rows)
            t = self.target.forward(z)
            p, cache = self.predictor.forward_cached(z)
            diff = p - t
            losses.append(float((diff * diff).sum(axis=1) @ weights))
            self.predictor.sgd_step(cache, 2.0 * diff * weights[:, None], self.learning_rate)
        return losses
