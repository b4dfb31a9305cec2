"""Policy distributions over control trajectories and their weighted updates.

Three policy classes share one contract: sample M control trajectories of
shape (T, n_u), then refit the distribution to the weighted empirical
sample.  Arrays are time-major: means (T, n_u), covariances (T, n_u, n_u).

Sampling splits the seed into a mode stream and a noise stream, so a
single-mode mixture draws exactly the same controls as the unimodal
Gaussian under the same seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

DEFAULT_COV_FLOOR = 1e-6
BANDWIDTH_FLOOR = 1e-3


def floor_covariance(cov: np.ndarray, floor: float) -> np.ndarray:
    """Symmetrize and clamp eigenvalues at ``floor`` (batched over leading dims)."""
    sym = 0.5 * (cov + np.swapaxes(cov, -1, -2))
    vals, vecs = np.linalg.eigh(sym)
    vals = np.maximum(vals, floor)
    return np.einsum("...ij,...j,...kj->...ik", vecs, vals, vecs)


def _check_covariances(cov: np.ndarray, floor: float, what: str):
    if not np.allclose(cov, np.swapaxes(cov, -1, -2), atol=1e-9):
        raise ValueError(f"{what}: covariances must be symmetric")
    min_eig = np.linalg.eigvalsh(cov).min()
    if min_eig < floor * (1 - 1e-9):
        raise ValueError(f"{what}: min eigenvalue {min_eig:.3e} below floor {floor:.3e}")


@dataclass
class UnimodalGaussianPolicy:
    """Independent Gaussian over controls at each timestep."""

    means: np.ndarray                       # (T, n_u)
    covariances: np.ndarray                 # (T, n_u, n_u)
    covariance_floor: float = DEFAULT_COV_FLOOR
    reset_cov: np.ndarray | None = None     # (n_u, n_u) used by warm-start blending

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float)
        self.covariances = np.asarray(self.covariances, dtype=float)
        if self.means.ndim != 2:
            raise ValueError("means must have shape (T, n_u)")
        T, n_u = self.means.shape
        if self.covariances.shape != (T, n_u, n_u):
            raise ValueError("covariances must have shape (T, n_u, n_u)")
        _check_covariances(self.covariances, self.covariance_floor, "gaussian policy")

    @property
    def horizon(self) -> int:
        return self.means.shape[0]

    @property
    def n_u(self) -> int:
        return self.means.shape[1]


@dataclass
class GaussianMixturePolicy:
    """L-mode Gaussian mixture; one mode is drawn per sampled trajectory."""

    mixture_weights: np.ndarray             # (L,)
    means: np.ndarray                       # (L, T, n_u)
    covariances: np.ndarray                 # (L, T, n_u, n_u)
    covariance_floor: float = DEFAULT_COV_FLOOR
    reset_cov: np.ndarray | None = None

    def __post_init__(self):
        self.mixture_weights = np.asarray(self.mixture_weights, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        self.covariances = np.asarray(self.covariances, dtype=float)
        if abs(self.mixture_weights.sum() - 1.0) > 1e-9 or (self.mixture_weights < 0).any():
            raise ValueError("mixture_weights must be a simplex vector")
        L, T, n_u = self.means.shape
        if self.mixture_weights.shape != (L,):
            raise ValueError("mixture_weights length must match number of modes")
        if self.covariances.shape != (L, T, n_u, n_u):
            raise ValueError("covariances must have shape (L, T, n_u, n_u)")
        _check_covariances(self.covariances, self.covariance_floor, "mixture policy")

    @property
    def num_modes(self) -> int:
        return self.means.shape[0]

    @property
    def horizon(self) -> int:
        return self.means.shape[1]

    @property
    def n_u(self) -> int:
        return self.means.shape[2]


@dataclass
class SteinPolicy:
    """Particle set of mean trajectories with a shared fixed rollout covariance."""

    particles: np.ndarray                   # (L, T, n_u)
    rollout_cov: np.ndarray                 # (n_u, n_u)
    step_size: float = 0.5
    rollouts_per_particle: int = 8
    bandwidth: float | str = "median"       # "median" or a fixed h > 0

    def __post_init__(self):
        self.particles = np.asarray(self.particles, dtype=float)
        self.rollout_cov = np.asarray(self.rollout_cov, dtype=float)
        if self.particles.ndim != 3:
            raise ValueError("particles must have shape (L, T, n_u)")
        if not (self.step_size > 0):
            raise ValueError("step_size must be positive")
        if self.rollouts_per_particle < 1:
            raise ValueError("rollouts_per_particle must be >= 1")
        n_u = self.particles.shape[2]
        if self.rollout_cov.shape != (n_u, n_u):
            raise ValueError("rollout_cov must have shape (n_u, n_u)")
        if isinstance(self.bandwidth, str) and self.bandwidth != "median":
            raise ValueError("bandwidth must be 'median' or a positive float")

    @property
    def num_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def horizon(self) -> int:
        return self.particles.shape[1]

    @property
    def n_u(self) -> int:
        return self.particles.shape[2]


PolicyParameters = UnimodalGaussianPolicy | GaussianMixturePolicy | SteinPolicy


# ---------------------------------------------------------------------------
# sampling


def _noise_streams(seed):
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    mode_ss, noise_ss = ss.spawn(2)
    return np.random.default_rng(mode_ss), np.random.default_rng(noise_ss)


def sample_controls(policy: PolicyParameters, num_samples: int, seed) -> np.ndarray:
    """Draw ``num_samples`` control trajectories, shape (M, T, n_u).

    Deterministic given the seed.  For a Stein policy, M must equal
    L * rollouts_per_particle and the samples are laid out in contiguous
    blocks: samples [l*S, (l+1)*S) are centered on particle l.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    mode_rng, noise_rng = _noise_streams(seed)

    if isinstance(policy, UnimodalGaussianPolicy):
        z = noise_rng.standard_normal((num_samples, policy.horizon, policy.n_u))
        chol = np.linalg.cholesky(policy.covariances)            # (T, n_u, n_u)
        return policy.means[None] + np.einsum("tij,mtj->mti", chol, z)

    if isinstance(policy, GaussianMixturePolicy):
        modes = mode_rng.choice(policy.num_modes, size=num_samples, p=policy.mixture_weights)
        z = noise_rng.standard_normal((num_samples, policy.horizon, policy.n_u))
        chol = np.linalg.cholesky(policy.covariances)            # (L, T, n_u, n_u)
        return policy.means[modes] + np.einsum("mtij,mtj->mti", chol[modes], z)

    if isinstance(policy, SteinPolicy):
        L, S = policy.num_particles, policy.rollouts_per_particle
        if num_samples != L * S:
            raise ValueError(f"stein sampling requires M = L*S = {L * S}, got {num_samples}")
        z = noise_rng.standard_normal((L, S, policy.horizon, policy.n_u))
        chol = np.linalg.cholesky(policy.rollout_cov)
        samples = policy.particles[:, None] + np.einsum("ij,lstj->lsti", chol, z)
        return samples.reshape(L * S, policy.horizon, policy.n_u)

    raise TypeError(f"unsupported policy type {type(policy)!r}")


# ---------------------------------------------------------------------------
# unimodal Gaussian update


def ug_update(
    samples: np.ndarray,
    weights: np.ndarray,
    prev: UnimodalGaussianPolicy,
    smoothing: float = 1.0,
) -> UnimodalGaussianPolicy:
    """Refit mean and covariance to the weighted samples.

    μ_t = Σ_m w_m u_t^m and Σ_t = Σ_m w_m (u_t^m - μ_t)(u_t^m - μ_t)^T,
    eigenvalue-floored.  ``smoothing`` β blends μ ← (1-β)μ_prev + βμ_new
    (β = 1 keeps the raw refit).
    """
    samples = np.asarray(samples, dtype=float)
    weights = np.asarray(weights, dtype=float)
    mu = np.einsum("m,mtu->tu", weights, samples)
    dev = samples - mu[None]
    cov = np.einsum("m,mtu,mtv->tuv", weights, dev, dev)
    cov = floor_covariance(cov, prev.covariance_floor)
    if smoothing != 1.0:
        mu = (1.0 - smoothing) * prev.means + smoothing * mu
    return replace(prev, means=mu, covariances=cov)


# ---------------------------------------------------------------------------
# Gaussian mixture EM update


def _gauss_logpdf(x: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    """log N(x; mean, cov) for x of shape (M, n)."""
    n = mean.shape[0]
    chol = np.linalg.cholesky(cov)
    diff = x - mean
    y = np.linalg.solve(chol, diff.T).T
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    return -0.5 * (n * np.log(2.0 * np.pi) + logdet + np.einsum("mi,mi->m", y, y))


def gmm_weighted_log_likelihood(
    samples: np.ndarray, weights: np.ndarray, policy: GaussianMixturePolicy
) -> float:
    """Σ_m Σ_t w_m log Σ_l φ_l N(u_t^m; μ_{l,t}, Σ_{l,t})."""
    M, T, _ = samples.shape
    L = policy.num_modes
    log_resp = np.empty((M, T, L))
    for l in range(L):
        for t in range(T):
            log_resp[:, t, l] = np.log(policy.mixture_weights[l] + 1e-300) + _gauss_logpdf(
                samples[:, t], policy.means[l, t], policy.covariances[l, t]
            )
    m = log_resp.max(axis=2)
    lse = m + np.log(np.exp(log_resp - m[..., None]).sum(axis=2))
    return float(np.einsum("m,mt->", weights, lse))


def gmm_em_update(
    samples: np.ndarray,
    weights: np.ndarray,
    prev: GaussianMixturePolicy,
    em_iters: int = 1,
) -> tuple[GaussianMixturePolicy, list[int]]:
    """Weighted EM refit of the mixture.

    Each iteration computes responsibilities η_l(u_t^m) under the previous
    parameters, then the closed-form M-step with per-timestep counts
    N_{l,t} = Σ_m η_l(u_t^m) w_m, N_l = Σ_t N_{l,t}:

        φ_l = N_l / Σ_l' N_l'
        μ_{l,t} = Σ_m η_l w_m u_t^m / N_{l,t}
        Σ_{l,t} = Σ_m η_l w_m (u - μ)(u - μ)^T / N_{l,t}

    A mode whose total count N_l falls below 1e-12 is relocated to the
    highest-weight sample with covariance reset, and its index returned so
    callers can log the collapse.
    """
    if em_iters < 1:
        raise ValueError("em_iters must be >= 1")
    samples = np.asarray(samples, dtype=float)
    weights = np.asarray(weights, dtype=float)
    M, T, n_u = samples.shape
    policy = prev
    reset_cov = prev.reset_cov if prev.reset_cov is not None else np.eye(n_u)
    reinitialized: list[int] = []

    for _ in range(em_iters):
        L = policy.num_modes
        log_resp = np.empty((M, T, L))
        for l in range(L):
            for t in range(T):
                log_resp[:, t, l] = np.log(policy.mixture_weights[l] + 1e-300) + _gauss_logpdf(
                    samples[:, t], policy.means[l, t], policy.covariances[l, t]
                )
        log_resp -= log_resp.max(axis=2, keepdims=True)
        resp = np.exp(log_resp)
        resp /= resp.sum(axis=2, keepdims=True)                  # (M, T, L)

        wn = resp * weights[:, None, None]                       # η_l w_m
        counts_lt = wn.sum(axis=0).T                             # (L, T)
        counts_l = counts_lt.sum(axis=1)                         # (L,)

        phi = counts_l / counts_l.sum()
        mu = np.einsum("mtl,mtu->ltu", wn, samples)
        cov = np.empty((L, T, n_u, n_u))
        safe = counts_lt > 1e-300
        for l in range(L):
            for t in range(T):
                if not safe[l, t]:
                    mu[l, t] = policy.means[l, t]
                    cov[l, t] = policy.covariances[l, t]
                    continue
                mu[l, t] /= counts_lt[l, t]
                dev = samples[:, t] - mu[l, t]
                cov[l, t] = np.einsum("m,mi,mj->ij", wn[:, t, l], dev, dev) / counts_lt[l, t]
        cov = floor_covariance(cov, policy.covariance_floor)

        empty = np.nonzero(counts_l < 1e-12)[0]
        if empty.size:
            best = int(np.argmax(weights))
            for l in empty:
                mu[l] = samples[best]
                cov[l] = np.broadcast_to(reset_cov, (T, n_u, n_u)).copy()
                phi[l] = 1.0 / L
                reinitialized.append(int(l))
            phi = phi / phi.sum()

        policy = replace(policy, mixture_weights=phi, means=mu, covariances=cov)

    return policy, reinitialized


# ---------------------------------------------------------------------------
# Stein variational update


def gaussian_trajectory_log_density(
    controls: np.ndarray, means: np.ndarray, cov: np.ndarray
) -> float:
    """log of the factored Gaussian trajectory density Π_t N(u_t; μ_t, Σ)."""
    total = 0.0
    for t in range(means.shape[0]):
        total += float(_gauss_logpdf(controls[t : t + 1], means[t], cov)[0])
    return total


def stein_scores(samples: np.ndarray, weights: np.ndarray, policy: SteinPolicy) -> np.ndarray:
    """Per-particle weighted score G(Θ_l), shape (L, T, n_u).

    G(Θ_l) = Σ_s w̃^{(l,s)} Σ^{-1}(u_t^{(l,s)} - Θ_{l,t}) with the block's
    weights w̃ renormalized to sum 1 within the block.  A block whose
    weights all vanish contributes zero drift.
    """
    L, S = policy.num_particles, policy.rollouts_per_particle
    T, n_u = policy.horizon, policy.n_u
    blocks = np.asarray(samples, dtype=float).reshape(L, S, T, n_u)
    w = np.asarray(weights, dtype=float).reshape(L, S)
    sums = w.sum(axis=1, keepdims=True)
    wt = np.divide(w, sums, out=np.zeros_like(w), where=sums > 0)
    prec = np.linalg.inv(policy.rollout_cov)
    dev = blocks - policy.particles[:, None]
    return np.einsum("ls,ij,lstj->lti", wt, prec, dev)


def _pairwise_bandwidths(particles: np.ndarray, mode: float | str) -> np.ndarray:
    """Per-timestep RBF bandwidth h_t, (T,)."""
    L, T, _ = particles.shape
    if not isinstance(mode, str):
        return np.full(T, float(mode))
    if L < 2:
        return np.ones(T)
    diff = particles[:, None] - particles[None]                 # (L, L, T, n_u)
    sqd = np.einsum("abtu,abtu->abt", diff, diff)
    iu = np.triu_indices(L, k=1)
    med = np.median(sqd[iu], axis=0)                            # (T,)
    return np.maximum(med / np.log(L + 1.0), BANDWIDTH_FLOOR)


def stein_update(samples: np.ndarray, weights: np.ndarray, prev: SteinPolicy) -> SteinPolicy:
    """Move each particle along the kernelized score plus kernel repulsion.

    Θ_l ← Θ_l + ε (1/L) Σ_l' [ k̂(Θ_l', Θ_l) G(Θ_l') + ∇_{Θ_l'} k̂(Θ_l', Θ_l) ]

    with k̂(a, b) = Σ_t exp(-||a_t - b_t||² / h_t) and h_t from the median
    heuristic over particle pairs (or the configured fixed bandwidth).
    """
    L = prev.num_particles
    theta = prev.particles
    G = stein_scores(samples, weights, prev)                    # (L, T, n_u)
    h = _pairwise_bandwidths(theta, prev.bandwidth)             # (T,)

    diff = theta[:, None] - theta[None]                         # (a, b, T, n_u)
    sqd = np.einsum("abtu,abtu->abt", diff, diff)
    k_t = np.exp(-sqd / h)                                      # (a, b, T)
    k_sum = k_t.sum(axis=2)                                     # scalar kernel k̂(a, b)
    grad_k = -(2.0 / h)[None, None, :, None] * diff * k_t[..., None]

    drift = np.einsum("ab,atu->btu", k_sum, G) + grad_k.sum(axis=0)
    new_particles = theta + prev.step_size * drift / L
    return replace(prev, particles=new_particles)


# ---------------------------------------------------------------------------
# deterministic mean extraction (used by TestPolicy)


def candidate_mean_controls(policy: PolicyParameters) -> list[np.ndarray]:
    """Deterministic candidate control trajectories for policy execution.

    Unimodal Gaussian: the mean.  Mixture: the highest-weight mode's mean.
    Stein: every particle (the caller picks the one with lowest cost).
    """
    if isinstance(policy, UnimodalGaussianPolicy):
        return [policy.means.copy()]
    if isinstance(policy, GaussianMixturePolicy):
        return [policy.means[int(np.argmax(policy.mixture_weights))].copy()]
    if isinstance(policy, SteinPolicy):
        return [p.copy() for p in policy.particles]
    raise TypeError(f"unsupported policy type {type(policy)!r}")


def refresh_covariance(
    policy: PolicyParameters, blend: float, scale: float = 1.0
) -> PolicyParameters:
    """Blend the covariance back toward ``scale² · Σ_reset``.

    Σ ← (1-b)Σ + b scale²Σ_reset keeps exploration alive when a policy is
    re-solved many times in a row (consecutive ADMM rounds collapse the
    refit covariance otherwise); scaling the target below 1 anneals the
    exploration over those rounds.  No-op for Stein policies, whose
    rollout covariance is fixed by construction.
    """
    if blend <= 0 or isinstance(policy, SteinPolicy):
        return policy
    if isinstance(policy, UnimodalGaussianPolicy) and policy.reset_cov is not None:
        target = scale**2 * policy.reset_cov
        cov = (1.0 - blend) * policy.covariances + blend * target[None]
        return replace(policy, covariances=floor_covariance(cov, policy.covariance_floor))
    if isinstance(policy, GaussianMixturePolicy) and policy.reset_cov is not None:
        target = scale**2 * policy.reset_cov
        cov = (1.0 - blend) * policy.covariances + blend * target[None, None]
        return replace(policy, covariances=floor_covariance(cov, policy.covariance_floor))
    return policy


def shift_policy(policy: PolicyParameters, cov_blend: float = 0.5) -> PolicyParameters:
    """Recede the policy one timestep for MPC warm starting.

    Means/particles drop their first step and repeat the last one.
    Covariances shift the same way and are then blended toward the
    policy's reset covariance: Σ ← (1-b)Σ + b Σ_reset.
    """

    def _shift_rows(arr):
        return np.concatenate([arr[1:], arr[-1:]], axis=0)

    if isinstance(policy, UnimodalGaussianPolicy):
        cov = _shift_rows(policy.covariances)
        if policy.reset_cov is not None and cov_blend > 0:
            cov = (1.0 - cov_blend) * cov + cov_blend * policy.reset_cov[None]
        return replace(policy, means=_shift_rows(policy.means),
                       covariances=floor_covariance(cov, policy.covariance_floor))
    if isinstance(policy, GaussianMixturePolicy):
        means = np.stack([_shift_rows(m) for m in policy.means])
        cov = np.stack([_shift_rows(c) for c in policy.covariances])
        if policy.reset_cov is not None and cov_blend > 0:
            cov = (1.0 - cov_blend) * cov + cov_blend * policy.reset_cov[None, None]
        return replace(policy, means=means,
                       covariances=floor_covariance(cov, policy.covariance_floor))
    if isinstance(policy, SteinPolicy):
        return replace(policy, particles=np.stack([_shift_rows(p) for p in policy.particles]))
    raise TypeError(f"unsupported policy type {type(policy)!r}")
