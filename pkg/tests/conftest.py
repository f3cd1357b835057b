"""Shared test oracles and instance factories.

The oracles here are intentionally independent of the library's solution
paths: the grid search enumerates designs directly from the gain formula,
and the Bayes oracle classifies with the raw mixture densities.
"""

import numpy as np

from aircomp_opt import DeviceProfile, build_gain_problem, synthetic_mixture
from aircomp_opt.rng import substream


def random_instance(
    seed,
    num_devices,
    num_antennas,
    num_classes=3,
    num_dims=2,
    noise_power=1.0,
    distinct_eps=False,
    power_scale=1.0,
):
    """A random unit-scale design instance (problem, stats, profiles, channels)."""
    rng = substream(seed, "instance")
    stats = synthetic_mixture(
        num_classes,
        num_dims,
        seed=seed,
        centroid_scale=0.8 + 0.4 * (seed % 5),
    )
    k, n = num_devices, num_antennas
    channels = (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))) / np.sqrt(2)
    if distinct_eps:
        eps2 = 0.2 + 0.3 * np.arange(1, k + 1) + rng.uniform(0, 0.05, k)
    else:
        eps2 = rng.uniform(0.1, 0.8, k)
    powers = power_scale * rng.uniform(0.5, 2.0, k)
    profiles = [
        DeviceProfile(eps2[i], powers[i], (10.0 + i, 0.0)) for i in range(k)
    ]
    dims = tuple(range(min(2, num_dims)))
    problem = build_gain_problem(stats, channels, profiles, noise_power, dims)
    return problem, stats, profiles, channels


def grid_search_gain(problem, theta_steps=320, power_steps=101):
    """Dense grid search over beamformer direction and steering powers.

    Valid for two antennas: the unit real beamformer is parameterized by an
    angle (sign is irrelevant), and the overall design scale cancels from
    the gain, so steering powers are gridded on [0, cap] per device.
    Resolution: pi/theta_steps in angle, 1/(power_steps-1) in normalized
    steering power.
    """
    if problem.num_antennas != 2 or problem.num_devices > 2:
        raise ValueError("grid oracle covers K <= 2, N = 2 instances")
    weight_g = problem.weight * problem.sq_diffs.sum(axis=0)  # (D,)
    sigma2 = problem.sigma2
    eps2 = problem.eps2
    noise = problem.noise_power
    t = np.linspace(0.0, 1.0, power_steps)
    best = 0.0
    for theta in np.linspace(0.0, np.pi, theta_steps, endpoint=False):
        f = np.array([np.cos(theta), np.sin(theta)])
        caps = np.sqrt(np.clip(problem.r(f), 0.0, None))
        if problem.num_devices == 1:
            c1 = t * caps[0]
            sum_c = c1
            sensing = c1**2 * eps2[0]
        else:
            c1 = (t * caps[0])[:, None]
            c2 = (t * caps[1])[None, :]
            sum_c = c1 + c2
            sensing = c1**2 * eps2[0] + c2**2 * eps2[1]
        total = np.zeros_like(sum_c)
        for d in range(len(sigma2)):
            denom = sigma2[d] * sum_c**2 + sensing + noise
            total += weight_g[d] * sum_c**2 / denom
        best = max(best, float(total.max()))
    return best


def probe_underestimation(problem, sub, rng, num_probes=1000):
    """Worst signed violation of the Taylor under-estimators at random points.

    Returns ``(r_violation, q_violation)`` where positive values mean the
    linearization exceeded the true convex function (should never exceed
    float noise).  Violations are relative to the local function scale.
    """
    n = num_probes
    f = sub.ref_f_hat[None, :] + rng.standard_normal((n, problem.num_antennas))
    r_true = 2.0 * problem.p_hat * np.einsum(
        "pi,kij,pj->pk", f, problem.chan_outer, f
    )
    r_hat = f @ sub.r_grad.T + sub.r_const
    r_viol = float(np.max((r_hat - r_true) / np.maximum(np.abs(r_true), 1.0)))

    c = sub.ref_c[None, :] * rng.uniform(0.0, 3.0, (n, problem.num_devices))
    alpha = sub.ref_alpha[None] * np.exp(
        rng.uniform(-2.0, 2.0, (n,) + sub.ref_alpha.shape)
    )
    alpha = np.maximum(alpha, 1e-12)
    sum_c = c.sum(axis=1)[:, None, None]
    q_true = sum_c**2 * problem.sq_diffs[None] / alpha
    q_hat = (
        sub.q_const[None]
        + sub.q_cgrad[None] * sum_c
        + sub.q_agrad[None] * alpha
    )
    diff = (q_hat - q_true) / np.maximum(np.abs(q_true), 1.0)
    q_viol = float(np.max(diff[:, sub.active]))
    return r_viol, q_viol


def bayes_accuracy(stats, trials, rng):
    """Monte-Carlo accuracy of the exact Bayes classifier on the mixture."""
    classes = rng.integers(0, stats.num_classes, size=trials)
    x = stats.centroids[classes] + np.sqrt(stats.variances) * rng.standard_normal(
        (trials, stats.num_dims)
    )
    scores = -np.sum(
        (x[:, None, :] - stats.centroids[None, :, :]) ** 2 / stats.variances, axis=2
    )
    return float(np.mean(np.argmax(scores, axis=1) == classes))
