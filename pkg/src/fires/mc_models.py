"""Monte-Carlo base models: a dense neural net and a soft decision tree.

The marginal likelihood P(y|x) = E_theta[f_theta(x)] is approximated with
L reparameterised draws theta = mu + sigma * r, r ~ N(0, 1). Since
d theta/d mu = 1 and d theta/d sigma = r, parameter gradients follow from a
single backward pass per draw:

    dP/dmu_k    = mean_l df/dtheta_k (theta_l)
    dP/dsigma_k = mean_l df/dtheta_k (theta_l) * r_lk
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .prob import GaussianParamSet

P_FLOOR = 1e-10


@dataclass(frozen=True)
class McSamples:
    """L standard-normal draws ``r`` of shape (L, K) and the realised parameters."""

    r: np.ndarray
    theta: np.ndarray

    @classmethod
    def from_noise(cls, r, params: GaussianParamSet) -> "McSamples":
        r = np.atleast_2d(np.asarray(r, dtype=np.float64))
        return cls(r, params.mu + params.sigma * r)

    def __len__(self) -> int:
        return self.r.shape[0]


def _labels(y, n_rows):
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if not np.all((y == 1.0) | (y == -1.0)):
        raise ValueError("labels must be -1 or +1")
    if y.size != n_rows:
        raise ValueError(f"got {y.size} labels for {n_rows} rows")
    return y


def _reach(p):
    """Probability of reaching every heap node, shape (..., 2N+1); leaves last."""
    n_inner = p.shape[-1]
    reach = np.empty((*p.shape[:-1], 2 * n_inner + 1))
    reach[..., 0] = 1.0
    for n in range(n_inner):
        reach[..., 2 * n + 1] = reach[..., n] * (1.0 - p[..., n])
        reach[..., 2 * n + 2] = reach[..., n] * p[..., n]
    return reach


class McModel:
    """Shared Monte-Carlo machinery. Subclasses supply forward/backward passes."""

    name = "mc"

    def __init__(self, n_params: int, mc_samples: int, sigma_floor: float | None):
        if mc_samples < 1:
            raise ValueError("mc_samples must be >= 1")
        kw = {} if sigma_floor is None else {"sigma_floor": sigma_floor}
        self.params = GaussianParamSet.standard(n_params, **kw)
        self.mc_samples = int(mc_samples)

    def draw(self, rng: np.random.Generator) -> McSamples:
        r = rng.standard_normal((self.mc_samples, len(self.params)))
        return McSamples.from_noise(r, self.params)

    def _check_samples(self, samples: McSamples):
        K = len(self.params)
        if samples.r.ndim != 2 or samples.r.shape[1] != K or samples.theta.shape != samples.r.shape:
            raise ValueError(f"samples do not match a model with {K} parameters")
        if not np.array_equal(samples.theta, self.params.mu + self.params.sigma * samples.r):
            raise ValueError("samples were drawn from different parameters")

    def marginal(self, X, y, samples: McSamples) -> np.ndarray:
        """MC estimate of P(y|x) per row, shape (B,)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = _labels(y, X.shape[0])
        f, _ = self._forward(X, y, samples.theta)
        return f.mean(axis=0)

    def gradients(self, X, y, samples: McSamples, row_weights=None):
        """(dP/dmu, dP/dsigma) of sum_b row_weights[b] * P(y_b | x_b).

        With one row and no weights this is the plain gradient of P.
        """
        self._check_samples(samples)
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = _labels(y, X.shape[0])
        w = np.ones(X.shape[0]) if row_weights is None else np.asarray(row_weights, dtype=np.float64)
        f, cache = self._forward(X, y, samples.theta)
        upstream = np.broadcast_to(w, f.shape)
        d_theta, _ = self._backward(X, y, samples.theta, cache, upstream)
        L = len(samples)
        return d_theta.sum(axis=0) / L, (d_theta * samples.r).sum(axis=0) / L

    def loglik_gradients(self, X, y, rng: np.random.Generator):
        """Batch mean of grad log P, using one fresh set of draws."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = _labels(y, X.shape[0])
        samples = self.draw(rng)
        f, cache = self._forward(X, y, samples.theta)
        p = np.maximum(f.mean(axis=0), P_FLOOR)
        upstream = np.broadcast_to(1.0 / (p * X.shape[0]), f.shape)
        d_theta, extra = self._backward(X, y, samples.theta, cache, upstream)
        L = len(samples)
        d_theta = d_theta + self._objective_extra(X, samples.theta, cache)
        return d_theta.sum(axis=0) / L, (d_theta * samples.r).sum(axis=0) / L, extra

    def _objective_extra(self, X, theta, cache):
        return 0.0

    def apply_extra(self, extra, learning_rate: float) -> None:
        """Update any point-estimate parameters (none by default)."""

    def _forward(self, X, y, theta):
        raise NotImplementedError

    def _backward(self, X, y, theta, cache, upstream):
        raise NotImplementedError


class AnnModel(McModel):
    """Fully connected net with ReLU hidden layers and a logistic output.

    Weights carry no biases. Each layer's pre-activation is divided by
    sqrt(fan_in), so N(0, 1) weights keep activations O(1) at any width.
    P(+1|x) = logistic(output); P(-1|x) = 1 - P(+1|x).
    """

    name = "ann"

    def __init__(self, n_features: int, hidden=(100, 100, 100), mc_samples: int = 5, sigma_floor=None):
        self.layer_sizes = [int(n_features), *[int(h) for h in hidden], 1]
        self.n_features = int(n_features)
        self.shapes = list(zip(self.layer_sizes[:-1], self.layer_sizes[1:]))
        sizes = [a * b for a, b in self.shapes]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)])
        super().__init__(int(self.offsets[-1]), mc_samples, sigma_floor)

    def layer(self, flat, h):
        """View of layer ``h``'s weight matrix (fan_in, fan_out) in a flat vector."""
        a, b = self.shapes[h]
        lo, hi = self.offsets[h], self.offsets[h + 1]
        return flat[..., lo:hi].reshape(*flat.shape[:-1], a, b)

    def _forward(self, X, y, theta):
        L = theta.shape[0]
        act = np.broadcast_to(X, (L, *X.shape))
        acts, pres = [act], []
        last = len(self.shapes) - 1
        for h in range(len(self.shapes)):
            z = act @ self.layer(theta, h) / math.sqrt(self.shapes[h][0])
            pres.append(z)
            if h < last:
                act = np.maximum(z, 0.0)
                acts.append(act)
        logit = pres[-1][..., 0]
        f = expit(y * logit)
        return f, (acts, pres, f)

    def _backward(self, X, y, theta, cache, upstream):
        acts, pres, f = cache
        grad = np.empty_like(theta)
        g = (upstream * f * (1.0 - f) * y)[..., None]
        for h in range(len(self.shapes) - 1, -1, -1):
            scale = 1.0 / math.sqrt(self.shapes[h][0])
            lo, hi = self.offsets[h], self.offsets[h + 1]
            grad[:, lo:hi] = (np.swapaxes(acts[h], 1, 2) @ g * scale).reshape(theta.shape[0], -1)
            if h > 0:
                g = (g @ np.swapaxes(self.layer(theta, h), 1, 2)) * scale
                g = g * (pres[h - 1] > 0)
        return grad, None

    def feature_params(self) -> GaussianParamSet:
        return aggregate_ann(self)

    def predict_proba(self, X, theta=None):
        """P(+1|x) of the deterministic net at ``theta`` (default: the means)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        theta = self.params.mu if theta is None else np.asarray(theta, dtype=np.float64)
        f, _ = self._forward(X, np.ones(X.shape[0]), theta[None, :])
        return f[0]


class SdtModel(McModel):
    """Soft decision tree of fixed depth with Gaussian gate weights.

    Inner nodes are stored heap-style (children of n are 2n+1 left, 2n+2
    right); gate n sends x right with probability logistic(theta_n . x).
    Leaves hold deterministic scalar scores v; a leaf contributes
    logistic(y * v) to P(y|x).

    Training also subtracts the gate-balance penalty
    ``penalty * sum_n 2^-depth(n) * -(log a_n + log(1 - a_n)) / 2``,
    where a_n is the reach-weighted mean gate probability over the batch.
    Reach probabilities are treated as constants in its gradient.
    """

    name = "sdt"

    def __init__(self, n_features: int, depth: int = 3, mc_samples: int = 5, penalty: float = 0.01,
                 sigma_floor=None, seed=None):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        self.n_features = int(n_features)
        self.depth = int(depth)
        self.n_inner = 2**depth - 1
        self.n_leaves = 2**depth
        self.penalty = float(penalty)
        super().__init__(self.n_inner * self.n_features, mc_samples, sigma_floor)
        rng = np.random.default_rng(seed)
        self.leaves = rng.standard_normal(self.n_leaves)
        self.node_depth = np.floor(np.log2(np.arange(self.n_inner) + 1)).astype(int)

    def gates(self, flat):
        return flat.reshape(*flat.shape[:-1], self.n_inner, self.n_features)

    def _forward(self, X, y, theta):
        z = np.einsum("bj,lnj->lbn", X, self.gates(theta))
        p = expit(z)
        reach = _reach(p)
        leaf_val = expit(y[:, None] * self.leaves[None, :])
        f = np.einsum("lbk,bk->lb", reach[..., self.n_inner:], leaf_val)
        return f, (p, reach, leaf_val)

    def _backward(self, X, y, theta, cache, upstream):
        p, reach, leaf_val = cache
        L = theta.shape[0]
        value = np.empty_like(reach)
        value[..., self.n_inner:] = leaf_val
        for n in range(self.n_inner - 1, -1, -1):
            value[..., n] = p[..., n] * value[..., 2 * n + 2] + (1.0 - p[..., n]) * value[..., 2 * n + 1]
        right = value[..., 2 * np.arange(self.n_inner) + 2]
        left = value[..., 2 * np.arange(self.n_inner) + 1]
        d_z = reach[..., : self.n_inner] * p * (1.0 - p) * (right - left)
        d_gates = np.einsum("lbn,bj->lnj", upstream[..., None] * d_z, X)
        # leaves: d logistic(y v)/dv = y * s * (1 - s)
        d_leaf_val = y[:, None] * leaf_val * (1.0 - leaf_val)
        d_leaves = np.einsum("lb,lbk,bk->k", upstream, reach[..., self.n_inner:], d_leaf_val) / L
        return d_gates.reshape(L, -1), d_leaves

    def _objective_extra(self, X, theta, cache):
        if self.penalty == 0:
            return 0.0
        p, reach, _ = cache
        node_reach = reach[..., : self.n_inner]
        total = np.maximum(node_reach.sum(axis=1), P_FLOOR)
        a = np.clip((node_reach * p).sum(axis=1) / total, P_FLOOR, 1.0 - P_FLOOR)
        decay = self.penalty * 2.0 ** (-self.node_depth)
        d_c_d_a = -decay * 0.5 * (1.0 / a - 1.0 / (1.0 - a))
        d_a_d_z = node_reach * p * (1.0 - p) / total[:, None, :]
        d_c = np.einsum("lbn,bj->lnj", d_c_d_a[:, None, :] * d_a_d_z, X)
        return -d_c.reshape(theta.shape[0], -1)

    def penalty_value(self, X, theta) -> float:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        _, (p, reach, _) = self._forward(X, np.ones(X.shape[0]), np.atleast_2d(theta))
        node_reach = reach[..., : self.n_inner]
        a = (node_reach * p).sum(axis=1) / node_reach.sum(axis=1)
        decay = self.penalty * 2.0 ** (-self.node_depth)
        return float((-decay * 0.5 * (np.log(a) + np.log(1.0 - a))).sum(axis=-1).mean())

    def apply_extra(self, extra, learning_rate: float) -> None:
        if extra is not None:
            self.leaves = self.leaves + learning_rate * extra

    def feature_params(self) -> GaussianParamSet:
        return aggregate_sdt(self)


def sdt_path_probabilities(x, gates) -> np.ndarray:
    """Probability of reaching each leaf, shape (..., 2^d)."""
    gates = np.asarray(gates, dtype=np.float64)
    if gates.shape[0] & (gates.shape[0] + 1):
        raise ValueError("gate count must be 2^d - 1")
    p = expit(np.asarray(x, dtype=np.float64) @ gates.T)
    return _reach(p)[..., gates.shape[0]:]


def sdt_forward(x, gates, leaves):
    """P(+1|x) of a soft tree with gate matrix (N, J) and N + 1 leaf scores."""
    leaves = np.asarray(leaves, dtype=np.float64)
    path = sdt_path_probabilities(x, gates)
    if leaves.size != path.shape[-1]:
        raise ValueError("need one leaf score per leaf")
    return path @ expit(leaves)


def aggregate_sdt(model: SdtModel) -> GaussianParamSet:
    """Per-feature mean of gate mu and gate sigma over the inner nodes."""
    mu = model.gates(model.params.mu).mean(axis=0)
    sigma = model.gates(model.params.sigma).mean(axis=0)
    return GaussianParamSet(mu, sigma, model.params.sigma_floor)


def aggregate_ann(model: AnnModel) -> GaussianParamSet:
    """Sum over layers of the mean weight between nodes on feature j's path.

    The first layer contributes the mean of the weights leaving input j.
    In a dense net every node of a later layer lies on j's path, so each
    later layer contributes the mean of its whole weight matrix (the same
    constant for every feature). mu and sigma are aggregated identically.
    """
    out = []
    for flat in (model.params.mu, model.params.sigma):
        agg = model.layer(flat, 0).mean(axis=1)
        for h in range(1, len(model.shapes)):
            agg = agg + model.layer(flat, h).mean()
        out.append(agg)
    return GaussianParamSet(out[0], out[1], model.params.sigma_floor)


def mc_marginal(x, y, model: McModel, rng):
    """Draw fresh samples and return (P, samples); ``rng`` may be a seed."""
    samples = model.draw(np.random.default_rng(rng))
    p = model.marginal(x, y, samples)
    x = np.asarray(x)
    return (float(p[0]) if x.ndim == 1 else p), samples


def mc_gradients(x, y, model: McModel, samples: McSamples):
    """Gradients of the MC marginal for the given draws."""
    return model.gradients(x, y, samples)
