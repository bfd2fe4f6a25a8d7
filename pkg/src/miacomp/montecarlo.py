"""Monte Carlo sampling of the Poisson downlink.

Each trial places the user at the origin, draws the serving geometry, the
Rayleigh fading gains and the interference field, and converts the
per-codeword SIRs into the accumulated MI rate ``C = sum log2(1 + SIR_i)``
and the decode time ``T_hat = K / C`` (quasi-static channel, so the rateless
decoder finishes exactly when ``t * C`` reaches K).

Interference is sampled explicitly out to a truncation radius and the
remaining far field is replaced by a Gamma variable with the exact mean and
variance of the Poisson shot noise beyond that radius.

Two paths exist. The single-trial functions (``gu_nc_trial`` and friends)
build explicit point patterns and are meant for inspection and tests. The
batched engine behind ``TrialSet`` draws ragged arrays per batch and reduces
them with the compiled ``interference_sums`` kernel; it is what the
estimators use. Every batch has its own counter-based Philox stream keyed by
(seed, scenario tag, batch index), so results do not depend on how batches
are spread over workers.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, stats

from ._backend import kernels
from .model import GU_MIA, GU_NC, WU_MIA, WU_NC, CcdfCurve, NetworkParams, Scenario

__all__ = [
    "Estimate",
    "PointPattern",
    "TrialOutcome",
    "TrialSet",
    "conditional_vertex_sirs",
    "estimate_ccdf",
    "estimate_ps_rate",
    "far_field_interference",
    "gu_mia_trial",
    "gu_nc_trial",
    "sample_annulus_ppp",
    "sample_vertex_distance",
    "simulate_sirs",
    "trial_stream",
    "truncation_sensitivity",
    "wu_mia_trial",
    "wu_nc_trial",
]

# Explicit sampling radius is max(TRUNCATION_RADIUS / sqrt(lam), SERVING_FACTOR * r_serving).
TRUNCATION_RADIUS = 15.0
SERVING_FACTOR = 10.0
BATCH_SIZE = 1000

SCENARIO_TAGS = {GU_NC: 1, GU_MIA: 2, WU_NC: 3, WU_MIA: 4}
CONDITIONAL_TAG = 5
NEAREST_SIR_TAG = 6


def trial_stream(seed, tag, batch_index):
    """Independent Philox generator for one batch of trials."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(tag), int(batch_index)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class PointPattern:
    """BS distances from the origin with their spreading-code tags (1 or 2)."""

    distances: np.ndarray
    codes: np.ndarray
    r_inner: float
    r_outer: float

    def __post_init__(self):
        if self.distances.size and (
            self.distances[0] < self.r_inner or self.distances[-1] > self.r_outer or np.any(np.diff(self.distances) < 0)
        ):
            raise ValueError("distances must be sorted within [r_inner, r_outer]")

    def __len__(self):
        return int(self.distances.size)


def sample_annulus_ppp(intensity, r_inner, r_outer, rng):
    """Homogeneous PPP of the given intensity on the annulus r_inner <= |x| <= r_outer.

    Only distances matter for the received power at the origin, so angles are
    not drawn. Squared distances are uniform on [r_inner**2, r_outer**2].
    """
    if not r_outer > r_inner >= 0:
        raise ValueError("need r_outer > r_inner >= 0")
    mean = intensity * math.pi * (r_outer**2 - r_inner**2)
    count = rng.poisson(mean) if mean > 0 else 0
    d2 = r_inner**2 + rng.random(count) * (r_outer**2 - r_inner**2)
    distances = np.sort(np.sqrt(d2))
    codes = rng.integers(1, 3, size=count).astype(np.int8)
    return PointPattern(distances, codes, float(r_inner), float(r_outer))


def far_field_moments(intensity, r_outer, alpha):
    """Mean and variance of Rayleigh-faded Poisson shot noise beyond ``r_outer``."""
    mean = 2.0 * math.pi * intensity * r_outer ** (2.0 - alpha) / (alpha - 2.0)
    var = 4.0 * math.pi * intensity * r_outer ** (2.0 - 2.0 * alpha) / (2.0 * alpha - 2.0)
    return mean, var


def far_field_interference(intensity, r_outer, alpha, rng, size=None):
    """Moment-matched Gamma stand-in for the interference beyond the sampling radius."""
    r_outer = np.asarray(r_outer, dtype=np.float64)
    mean, var = far_field_moments(intensity, r_outer, alpha)
    return rng.gamma(mean * mean / var, var / mean, size=size if size is not None else r_outer.shape)


def outer_radius(lam, r_serving, radius=TRUNCATION_RADIUS):
    return np.maximum(radius / math.sqrt(lam), SERVING_FACTOR * np.asarray(r_serving))


def sample_vertex_distance(params, rng, size=None):
    """Distance from a typical Voronoi vertex to its three equidistant BSs.

    ``pi*lam*D**2`` has density ``s*exp(-s)`` (Gamma with shape 2).
    """
    s = rng.gamma(2.0, 1.0, size=size)
    return np.sqrt(s / (math.pi * params.lam))


@dataclass
class TrialOutcome:
    sirs: tuple
    mi_rate: float
    decode_time: float
    truncated_time: float

    @classmethod
    def from_sirs(cls, sirs, kbits, n_max=math.inf):
        sirs = tuple(float(s) for s in sirs)
        c = sum(math.log2(1.0 + s) for s in sirs)
        t_hat = kbits / c if c > 0 else math.inf
        return cls(sirs, c, t_hat, min(n_max, t_hat))


_resample_count = 0


def resample_count():
    """Trials redrawn because the sampled interference was exactly zero."""
    return _resample_count


def _field(pattern, fading, lam_field, alpha, rng, mask=None):
    d = pattern.distances if mask is None else pattern.distances[mask]
    h = fading if mask is None else fading[mask]
    near = float(np.sum(h * d ** (-alpha)))
    return near + float(far_field_interference(lam_field, pattern.r_outer, alpha, rng, size=None))


def _with_interference(draw, rng):
    global _resample_count
    while True:
        out = draw(rng)
        if out is not None:
            return out
        _resample_count += 1


def gu_nc_trial(params, rng, n_max=math.inf, radius=TRUNCATION_RADIUS):
    """General user served by the nearest BS of the whole network (M = 1)."""
    lam, a = params.lam, params.alpha

    def draw(rng):
        r1 = math.sqrt(rng.standard_exponential() / (math.pi * lam))
        pattern = sample_annulus_ppp(lam, r1, float(outer_radius(lam, r1, radius)), rng)
        h = rng.standard_exponential(len(pattern) + 1)
        interference = _field(pattern, h[1:], lam, a, rng)
        if interference <= 0:
            return None
        return (h[0] * r1**-a / interference,)

    return TrialOutcome.from_sirs(_with_interference(draw, rng), params.kbits, n_max)


def gu_mia_trial(params, rng, n_max=math.inf, radius=TRUNCATION_RADIUS):
    """General user served by the nearest BS of each code class (M = 2)."""
    lam, a = params.lam, params.alpha

    def draw(rng):
        sirs = []
        for _ in (1, 2):
            r = math.sqrt(rng.standard_exponential() / (math.pi * lam / 2.0))
            pattern = sample_annulus_ppp(lam / 2.0, r, float(outer_radius(lam, r, radius)), rng)
            h = rng.standard_exponential(len(pattern) + 1)
            interference = _field(pattern, h[1:], lam / 2.0, a, rng)
            if interference <= 0:
                return None
            sirs.append(h[0] * r**-a / interference)
        return tuple(sirs)

    return TrialOutcome.from_sirs(_with_interference(draw, rng), params.kbits, n_max)


def wu_nc_trial(params, rng, n_max=math.inf, radius=TRUNCATION_RADIUS):
    """User at a Voronoi vertex: one of the three equidistant BSs serves, two interfere."""
    lam, a = params.lam, params.alpha

    def draw(rng):
        d = float(sample_vertex_distance(params, rng))
        pattern = sample_annulus_ppp(lam, d, float(outer_radius(lam, d, radius)), rng)
        h = rng.standard_exponential(len(pattern) + 3)
        outside = _field(pattern, h[3:], lam, a, rng)
        interference = (h[1] + h[2]) * d**-a + outside
        if interference <= 0:
            return None
        return (h[0] * d**-a / interference,)

    return TrialOutcome.from_sirs(_with_interference(draw, rng), params.kbits, n_max)


def wu_mia_trial(params, rng, n_max=math.inf, radius=TRUNCATION_RADIUS):
    """Vertex user served on codes 1 and 2; the third vertex BS interferes on code 1."""
    lam, a = params.lam, params.alpha

    def draw(rng):
        d = float(sample_vertex_distance(params, rng))
        pattern = sample_annulus_ppp(lam, d, float(outer_radius(lam, d, radius)), rng)
        h = rng.standard_exponential(len(pattern) + 3)
        i1 = _field(pattern, h[3:], lam / 2.0, a, rng, pattern.codes == 1)
        i2 = _field(pattern, h[3:], lam / 2.0, a, rng, pattern.codes == 2)
        if i1 <= 0 or i2 <= 0:
            return None
        return (h[0] * d**-a / (h[2] * d**-a + i1), h[1] * d**-a / i2)

    return TrialOutcome.from_sirs(_with_interference(draw, rng), params.kbits, n_max)


TRIAL_FUNCTIONS = {GU_NC: gu_nc_trial, GU_MIA: gu_mia_trial, WU_NC: wu_nc_trial, WU_MIA: wu_mia_trial}


# batched engine


def _batch_field(lam_field, lam, r_in, alpha, rng, radius):
    """Interference from a PPP of intensity ``lam_field`` outside ``r_in`` (one entry per trial)."""
    r_out = outer_radius(lam, r_in, radius)
    near = _annulus_sums(lam_field, r_in, r_out, alpha, rng)
    return near + far_field_interference(lam_field, r_out, alpha, rng)


def _draw_batch(scenario, params, n, rng, radius):
    lam, a = params.lam, params.alpha
    if scenario == GU_NC:
        r1 = np.sqrt(rng.standard_exponential(n) / (math.pi * lam))
        h1 = rng.standard_exponential(n)
        i1 = _batch_field(lam, lam, r1, a, rng, radius)
        return (h1 / (i1 * r1**a))[:, None], i1 > 0
    if scenario == GU_MIA:
        cols, ok = [], np.ones(n, dtype=bool)
        for _ in (1, 2):
            r = np.sqrt(rng.standard_exponential(n) / (math.pi * lam / 2.0))
            h = rng.standard_exponential(n)
            i = _batch_field(lam / 2.0, lam, r, a, rng, radius)
            cols.append(h / (i * r**a))
            ok &= i > 0
        return np.column_stack(cols), ok
    d = sample_vertex_distance(params, rng, size=n)
    h = rng.standard_exponential((3, n))
    da = d**a
    if scenario == WU_NC:
        i = _batch_field(lam, lam, d, a, rng, radius)
        return (h[0] / (h[1] + h[2] + i * da))[:, None], i > 0
    if scenario == WU_MIA:
        i1 = _batch_field(lam / 2.0, lam, d, a, rng, radius)
        i2 = _batch_field(lam / 2.0, lam, d, a, rng, radius)
        y1 = h[0] / (h[2] + i1 * da)
        y2 = h[1] / (i2 * da)
        return np.column_stack([y1, y2]), (i1 > 0) & (i2 > 0)
    raise ValueError(f"unknown scenario {scenario!r}")


def simulate_sirs(scenario, params, n, rng, radius=TRUNCATION_RADIUS):
    """Per-codeword SIRs for ``n`` trials, shape (n, M), plus the number of redrawn trials."""
    sirs, ok = _draw_batch(scenario, params, n, rng, radius)
    redrawn = 0
    while not ok.all():
        bad = np.flatnonzero(~ok)
        redrawn += bad.size
        fresh, ok_fresh = _draw_batch(scenario, params, bad.size, rng, radius)
        sirs[bad] = fresh
        ok[bad] = ok_fresh
    return sirs, redrawn


def _run_batch(task):
    scenario, params, seed, index, size, radius = task
    rng = trial_stream(seed, SCENARIO_TAGS[scenario], index)
    sirs, redrawn = simulate_sirs(scenario, params, size, rng, radius)
    rate = np.log2(1.0 + sirs).sum(axis=1)
    return params.kbits / rate, redrawn


def _batches(n_trials, batch_size):
    full, rest = divmod(n_trials, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


@dataclass
class Estimate:
    """Monte Carlo scalar estimate with its standard error."""

    mean: float
    stderr: float
    n_trials: int
    confidence: float = 0.99
    successes: Optional[int] = None

    def interval(self):
        """Normal interval, or Wilson's score interval for proportions with few successes."""
        z = stats.norm.ppf(0.5 + self.confidence / 2.0)
        if self.successes is not None and min(self.successes, self.n_trials - self.successes) < 100:
            n = self.n_trials
            p = self.successes / n
            centre = (p + z * z / (2 * n)) / (1 + z * z / n)
            half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
            return centre - half, centre + half
        return self.mean - z * self.stderr, self.mean + z * self.stderr


@dataclass
class TrialSet:
    """Decode times of a fixed set of trials for one scenario (common random numbers)."""

    scenario: Scenario
    params: NetworkParams
    decode_times: np.ndarray
    seed: int
    redrawn: int = 0
    _sorted: Optional[np.ndarray] = field(default=None, repr=False)
    _prefix: Optional[np.ndarray] = field(default=None, repr=False)

    @classmethod
    def simulate(cls, scenario, params, n_trials, seed=0, workers=1, batch_size=BATCH_SIZE, radius=TRUNCATION_RADIUS):
        if isinstance(scenario, str):
            scenario = Scenario.from_name(scenario)
        tasks = [(scenario, params, seed, i, size, radius) for i, size in enumerate(_batches(n_trials, batch_size))]
        if workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_batch, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
        else:
            results = [_run_batch(t) for t in tasks]
        times = np.concatenate([r[0] for r in results]) if results else np.empty(0)
        return cls(scenario, params, times, seed, sum(r[1] for r in results))

    @property
    def n_trials(self):
        return int(self.decode_times.size)

    def _prepare(self):
        if self._sorted is None:
            self._sorted = np.sort(self.decode_times)
            self._prefix = np.concatenate([[0.0], np.cumsum(self._sorted)])

    def ccdf(self, t_grid):
        """Empirical P(T_hat > t) with binomial standard errors."""
        self._prepare()
        t_grid = np.asarray(t_grid, dtype=np.float64)
        n = self.n_trials
        above = n - np.searchsorted(self._sorted, t_grid, side="right")
        p = above / n
        se = np.sqrt(p * (1.0 - p) / n)
        return CcdfCurve(t_grid, p, "monte_carlo", stderr=se, scenario=self.scenario)

    def truncated_mean(self, n_max):
        """Sample mean of min(N, T_hat)."""
        self._prepare()
        k = int(np.searchsorted(self._sorted, n_max, side="right"))
        return (self._prefix[k] + (self.n_trials - k) * n_max) / self.n_trials

    def ps_rate(self, n_max):
        """(p_s, R_N) estimates at delay constraint ``n_max``; R_N stderr by the delta method."""
        n = self.n_trials
        x = (self.decode_times <= n_max).astype(np.float64)
        y = np.minimum(self.decode_times, n_max)
        a, b = x.mean(), y.mean()
        successes = int(x.sum())
        ps = Estimate(a, math.sqrt(a * (1.0 - a) / n), n, successes=successes)
        if a == 0.0:
            return ps, Estimate(0.0, 0.0, n)
        k = self.params.kbits
        var_x = a * (1.0 - a)
        var_y = y.var()
        cov = np.mean(x * y) - a * b
        # gradient of K*a/b is (K/b, -K*a/b**2)
        var_r = k * k * (var_x / b**2 - 2.0 * a * cov / b**3 + a * a * var_y / b**4)
        return ps, Estimate(k * a / b, math.sqrt(max(var_r, 0.0) / n), n)

    def rate_curve(self, n_grid):
        self._prepare()
        n_grid = np.asarray(n_grid, dtype=np.float64)
        k = np.searchsorted(self._sorted, n_grid, side="right")
        means = (self._prefix[k] + (self.n_trials - k) * n_grid) / self.n_trials
        return self.params.kbits * (k / self.n_trials) / means

    def max_rate(self, n_grid):
        """(N_opt, max R_N) on a grid with golden-section refinement between neighbours."""
        n_grid = np.asarray(n_grid, dtype=np.float64)
        rates = self.rate_curve(n_grid)
        i = int(np.argmax(rates))
        if 0 < i < len(n_grid) - 1:
            res = optimize.minimize_scalar(
                lambda n: -float(self.rate_curve([n])[0]),
                bracket=(n_grid[i - 1], n_grid[i], n_grid[i + 1]),
                method="golden",
            )
            if -res.fun > rates[i] and n_grid[i - 1] <= res.x <= n_grid[i + 1]:
                return float(res.x), float(-res.fun)
        return float(n_grid[i]), float(rates[i])


def estimate_ccdf(scenario, params, t_grid, n_trials, base_seed=0, workers=1):
    """Empirical packet-time CCDF with per-point standard errors."""
    if n_trials < 1000:
        raise ValueError("n_trials must be at least 1000")
    return TrialSet.simulate(scenario, params, n_trials, base_seed, workers).ccdf(t_grid)


def estimate_ps_rate(scenario, params, n_max, n_trials, base_seed=0, workers=1):
    """(p_s, R_N) Monte Carlo estimates at one delay constraint."""
    if n_trials < 1000:
        raise ValueError("n_trials must be at least 1000")
    return TrialSet.simulate(scenario, params, n_trials, base_seed, workers).ps_rate(n_max)


def nearest_sir_samples(params, n_trials, seed=0, radius=TRUNCATION_RADIUS):
    """Nearest-BS SIR samples of the general user (the GU-NC trial SIRs)."""
    out = []
    for i, size in enumerate(_batches(n_trials, BATCH_SIZE)):
        rng = trial_stream(seed, NEAREST_SIR_TAG, i)
        out.append(simulate_sirs(GU_NC, params, size, rng, radius)[0][:, 0])
    return np.concatenate(out)


def conditional_vertex_sirs(params, r, n_trials, seed=0, radius=TRUNCATION_RADIUS):
    """Codeword SIRs of the vertex user with MIA, conditioned on vertex distance ``r``.

    Returns (Y1, Y2): Y1 shares code 1 with the third vertex BS, Y2 is alone on code 2.
    """
    lam, a = params.lam, params.alpha
    y1, y2 = [], []
    for i, size in enumerate(_batches(n_trials, BATCH_SIZE)):
        rng = trial_stream(seed, CONDITIONAL_TAG, i)
        d = np.full(size, float(r))
        h = rng.standard_exponential((3, size))
        i1 = _batch_field(lam / 2.0, lam, d, a, rng, radius)
        i2 = _batch_field(lam / 2.0, lam, d, a, rng, radius)
        y1.append(h[0] / (h[2] + i1 * r**a))
        y2.append(h[1] / (i2 * r**a))
    return np.concatenate(y1), np.concatenate(y2)


def truncation_sensitivity(params, n_trials, seed=0, threshold=1.0, radius=TRUNCATION_RADIUS):
    """Paired check of the sampling radius: P(SIR > threshold) for the GU-NC user
    computed from the same trials with the explicit field cut at the default
    radius and at twice that radius.

    Returns (p_default, p_doubled, stderr_of_each).
    """
    lam, a = params.lam, params.alpha
    hits_r = hits_2r = 0
    for i, size in enumerate(_batches(n_trials, BATCH_SIZE)):
        rng = trial_stream(seed, NEAREST_SIR_TAG + 1, i)
        r1 = np.sqrt(rng.standard_exponential(size) / (math.pi * lam))
        h1 = rng.standard_exponential(size)
        r_out = outer_radius(lam, r1, radius)
        inner = _annulus_sums(lam, r1, r_out, a, rng)
        outer = _annulus_sums(lam, r_out, 2.0 * r_out, a, rng)
        i_r = inner + far_field_interference(lam, r_out, a, rng)
        i_2r = inner + outer + far_field_interference(lam, 2.0 * r_out, a, rng)
        hits_r += int(np.sum(h1 / (i_r * r1**a) > threshold))
        hits_2r += int(np.sum(h1 / (i_2r * r1**a) > threshold))
    p1, p2 = hits_r / n_trials, hits_2r / n_trials
    return p1, p2, math.sqrt(p1 * (1.0 - p1) / n_trials)


def _annulus_sums(lam_field, r_in, r_out, alpha, rng):
    r2_in, r2_out = r_in * r_in, r_out * r_out
    counts = rng.poisson(lam_field * math.pi * (r2_out - r2_in))
    total = int(counts.sum())
    return kernels.interference_sums(counts, rng.random(total), rng.standard_exponential(total), r2_in, r2_out, alpha)
