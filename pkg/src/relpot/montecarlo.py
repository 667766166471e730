"""Path simulation by subordination and first-exit estimators.

X_{k+1} = X_k + sqrt(2 S_k) Z_k with S_k a tilted subordinator increment
over dt and Z_k standard normal.  Exits are detected on the time grid only.

All estimators run through ``run_batch``: paths start at the origin and every
requested start point is an offset of the same path (common random numbers),
so one path set serves a whole grid of starting points.  Paths are processed
in fixed-size chunks, each with its own PCG64 stream keyed by
(master_seed, stream tag, chunk index); results are therefore independent of
the number of workers.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import DomainError
from .kernels import BALL, HALFSPACE, INTERVAL, Domain, as_points
from .subordinator import McConfig, ProcessParams, sample_increment

CHUNK = 4096
_KIND_CODE = {HALFSPACE: 0, INTERVAL: 1, BALL: 2}


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate with its standard error over n paths."""

    value: float
    std_error: float
    n: int
    refined: "Estimate | None" = None
    capped_fraction: float = 0.0

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be positive")

    def to_dict(self):
        out = {"value": self.value, "std_error": self.std_error, "n": self.n}
        if self.refined is not None:
            out["refined"] = self.refined.to_dict()
        if self.capped_fraction:
            out["capped_fraction"] = self.capped_fraction
        return out


@dataclass
class PathSample:
    times: np.ndarray
    states: np.ndarray
    exit_index: int | None = None


@dataclass(frozen=True)
class Cells:
    """Tensor grid of axis-aligned cells: lo + width * index, index < shape."""

    lo: tuple
    width: tuple
    shape: tuple

    @classmethod
    def uniform(cls, lo, hi, n):
        lo, hi = np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float))
        n = np.broadcast_to(np.atleast_1d(n), lo.shape)
        return cls(tuple(lo), tuple((hi - lo) / n), tuple(int(k) for k in n))

    @property
    def d(self):
        return len(self.lo)

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def volume(self):
        return float(np.prod(self.width))

    def centers(self):
        axes = [lo + w * (np.arange(n) + 0.5) for lo, w, n in zip(self.lo, self.width, self.shape)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def index(self, y):
        """Flat cell index of a point, or -1 outside the grid."""
        y = np.atleast_1d(y)
        flat = 0
        for j in range(self.d):
            i = int(math.floor((y[j] - self.lo[j]) / self.width[j]))
            if not 0 <= i < self.shape[j]:
                return -1
            flat = flat * self.shape[j] + i
        return flat


# ---------------------------------------------------------------------------
# compiled path engine


@nb.njit(cache=True)
def _increment(gen, logc, beta, p, a1, a2, rate, halfstable, half_scale):
    while True:
        if halfstable:
            g = gen.standard_normal()
            if g == 0.0:
                continue
            s = half_scale / (g * g)
        else:
            u = math.pi * gen.random()
            if u == 0.0:
                continue
            e = gen.standard_exponential()
            la = (a1 * math.log(math.sin(beta * u)) + math.log(math.sin((1.0 - beta) * u))
                  - a2 * math.log(math.sin(u)))
            s = math.exp(logc + p * (la - math.log(e)))
        if rate == 0.0:
            return s
        x = rate * s
        v = gen.random()
        # exp(-x) >= 1 - x, so most proposals are accepted without calling exp
        if v < 1.0 - x or v < math.exp(-x):
            return s


@nb.njit(cache=True)
def _inside(kind, R, y, d):
    if kind == 0:
        return y[d - 1] > 0.0
    if kind == 1:
        return 0.0 < y[0] < R
    acc = 0.0
    for j in range(d):
        acc += y[j] * y[j]
    return acc < R * R


@nb.njit(cache=True)
def _paths(gen, n_paths, starts, kind, R, dt, n_steps, beta, rate,
           grid_lo, grid_w, grid_shape, cell_weight, box_c, box_h):
    K, d = starts.shape
    C = 1
    for j in range(grid_shape.size):
        C *= grid_shape[j]
    use_grid = grid_shape.size > 0
    use_weight = cell_weight.size > 0
    B = box_c.shape[1]
    halfstable = abs(beta - 0.5) < 1e-15
    logc = math.log(dt) / beta
    p = (1.0 - beta) / beta
    a1 = beta / (1.0 - beta)
    a2 = 1.0 / (1.0 - beta)
    half_scale = 0.5 * dt * dt
    sig = math.sqrt(2.0)

    exit_step = np.full((n_paths, K), -1, np.int32)
    exit_pos = np.zeros((n_paths, K, d))
    occ_sum = np.zeros((K, C if use_grid else 0))
    occ_sq = np.zeros((K, C if use_grid else 0))
    box_sum = np.zeros((K, B))
    box_sq = np.zeros((K, B))
    func = np.zeros((n_paths, K))
    steps_used = 0

    cnt = np.zeros((K, C if use_grid else 0), np.int64)
    tk = np.empty(K * (C if use_grid else 0), np.int64)
    tc = np.empty(K * (C if use_grid else 0), np.int64)
    bcnt = np.zeros((K, B), np.int64)
    pos = np.zeros(d)
    y = np.zeros(d)
    alive = np.ones(K, np.bool_)

    for path in range(n_paths):
        pos[:] = 0.0
        alive[:] = True
        n_alive = K
        n_touched = 0
        for s in range(n_steps + 1):
            if s > 0:
                inc = _increment(gen, logc, beta, p, a1, a2, rate, halfstable, half_scale)
                amp = sig * math.sqrt(inc)
                for j in range(d):
                    pos[j] += amp * gen.standard_normal()
            for k in range(K):
                if not alive[k]:
                    continue
                for j in range(d):
                    y[j] = starts[k, j] + pos[j]
                if s > 0 and not _inside(kind, R, y, d):
                    alive[k] = False
                    n_alive -= 1
                    exit_step[path, k] = s
                    for j in range(d):
                        exit_pos[path, k, j] = y[j]
                    continue
                if s == n_steps:
                    continue
                if use_grid:
                    flat = 0
                    ok = True
                    for j in range(d):
                        i = int(math.floor((y[j] - grid_lo[j]) / grid_w[j]))
                        if i < 0 or i >= grid_shape[j]:
                            ok = False
                            break
                        flat = flat * grid_shape[j] + i
                    if ok:
                        if cnt[k, flat] == 0:
                            tk[n_touched] = k
                            tc[n_touched] = flat
                            n_touched += 1
                        cnt[k, flat] += 1
                        if use_weight:
                            func[path, k] += dt * cell_weight[flat]
                for b in range(B):
                    h = box_h[k, b]
                    inb = True
                    for j in range(d):
                        if abs(y[j] - box_c[k, b, j]) > h:
                            inb = False
                            break
                    if inb:
                        bcnt[k, b] += 1
            steps_used += 1
            if n_alive == 0:
                break
        # paths alive at the horizon keep their final position in exit_pos
        for k in range(K):
            if alive[k]:
                for j in range(d):
                    exit_pos[path, k, j] = starts[k, j] + pos[j]
        for i in range(n_touched):
            c = cnt[tk[i], tc[i]]
            occ_sum[tk[i], tc[i]] += c
            occ_sq[tk[i], tc[i]] += c * c
            cnt[tk[i], tc[i]] = 0
        for k in range(K):
            for b in range(B):
                c = bcnt[k, b]
                box_sum[k, b] += c
                box_sq[k, b] += c * c
                bcnt[k, b] = 0
    return exit_step, exit_pos, occ_sum, occ_sq, box_sum, box_sq, func, steps_used


@nb.njit(cache=True)
def _displacements(gen, n_paths, d, n_steps, dt, beta, rate):
    halfstable = abs(beta - 0.5) < 1e-15
    logc = math.log(dt) / beta
    p = (1.0 - beta) / beta
    a1 = beta / (1.0 - beta)
    a2 = 1.0 / (1.0 - beta)
    out = np.zeros((n_paths, d))
    sig = math.sqrt(2.0)
    for path in range(n_paths):
        for _ in range(n_steps):
            amp = sig * math.sqrt(_increment(gen, logc, beta, p, a1, a2, rate, halfstable, 0.5 * dt * dt))
            for j in range(d):
                out[path, j] += amp * gen.standard_normal()
    return out


# ---------------------------------------------------------------------------
# batch driver


def _chunk_generator(master_seed, stream, chunk):
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, chunk))
    return np.random.Generator(np.random.PCG64(seq))


def _run_chunk(job):
    (chunk, n, master_seed, stream, starts, kind, R, dt, n_steps, beta, rate,
     grid_lo, grid_w, grid_shape, cell_weight, box_c, box_h) = job
    gen = _chunk_generator(master_seed, stream, chunk)
    return _paths(gen, n, starts, kind, R, dt, n_steps, beta, rate,
                  grid_lo, grid_w, grid_shape, cell_weight, box_c, box_h)


def effective_workers(requested: int) -> int:
    cap = os.environ.get("RELPOT_THREADS")
    workers = max(1, int(requested))
    if cap:
        workers = min(workers, max(1, int(cap)))
    return workers


@dataclass
class BatchResult:
    """Per-path exit data and aggregated occupation counts for a start grid."""

    starts: np.ndarray
    dt: float
    n_steps: int
    exit_step: np.ndarray
    exit_pos: np.ndarray
    cells: Cells | None
    occ_sum: np.ndarray
    occ_sq: np.ndarray
    box_sum: np.ndarray
    box_sq: np.ndarray
    box_volume: np.ndarray
    functional: np.ndarray
    steps_used: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.exit_step.shape[0]

    @property
    def horizon(self):
        return self.n_steps * self.dt

    def exit_time(self):
        """Discretized exit times; paths alive at the horizon get +inf."""
        t = self.exit_step.astype(float) * self.dt
        t[self.exit_step < 0] = np.inf
        return t

    def survival(self, t, k=None):
        """P(no monitored exit up to time t) per start (or for start k)."""
        if t > self.horizon + 1e-12:
            raise DomainError("survival requested beyond the simulated horizon")
        last = int(math.floor(t / self.dt + 1e-9))
        alive = (self.exit_step < 0) | (self.exit_step > last)
        sel = alive if k is None else alive[:, k]
        p = sel.mean(axis=0)
        se = np.sqrt(p * (1 - p) / self.n)
        if k is None:
            return [Estimate(float(a), float(b), self.n) for a, b in zip(p, se)]
        return Estimate(float(p), float(se), self.n)

    def mean_exit(self, k):
        steps = self.exit_step[:, k]
        capped = float(np.mean(steps < 0))
        t = np.where(steps < 0, self.n_steps, steps) * self.dt
        return Estimate(float(t.mean()), float(t.std(ddof=1) / math.sqrt(self.n)), self.n,
                        capped_fraction=capped)

    def green_cells(self, k):
        """Occupation density per grid cell from start k: (values, std errors)."""
        scale = self.dt / self.cells.volume
        mean = self.occ_sum[k] / self.n
        var = np.maximum(self.occ_sq[k] / self.n - mean ** 2, 0.0) * self.n / max(self.n - 1, 1)
        return mean * scale, np.sqrt(var / self.n) * scale

    def green_box(self, k, b):
        scale = self.dt / self.box_volume[k, b]
        mean = self.box_sum[k, b] / self.n
        var = max(self.box_sq[k, b] / self.n - mean ** 2, 0.0) * self.n / max(self.n - 1, 1)
        return Estimate(float(mean * scale), float(math.sqrt(var / self.n) * scale), self.n)


def run_batch(starts, domain: Domain, params: ProcessParams, cfg: McConfig, horizon: float,
              cells: Cells | None = None, boxes=None, cell_weight=None, stream: int = 0) -> BatchResult:
    """Simulate cfg.n_samples paths from every start point with common random numbers.

    ``boxes`` is an optional pair (centers[K, B, d], half_widths[K, B]) of
    cubes, one list per start, for localized occupation estimates.
    ``cell_weight`` assigns a value to each grid cell; the per-path time
    integral of the weight before exit is returned as ``functional``.
    """
    d = params.d
    if domain.d != d:
        raise DomainError("domain and process dimensions differ")
    starts = np.ascontiguousarray(np.atleast_2d(as_points(starts, d)).reshape(-1, d))
    for x0 in starts:
        if not domain.contains(x0):
            raise DomainError(f"start point {x0.tolist()} lies outside the domain")
    if params.m > 0 and cfg.dt > 1.0 / params.m:
        raise DomainError("dt must not exceed 1/m so that the tilting acceptance stays above 1/e")
    if horizon < 0:
        raise DomainError("horizon must be nonnegative")
    n_steps = int(math.ceil(horizon / cfg.dt - 1e-9))
    K = starts.shape[0]
    if cells is not None:
        if cells.d != d:
            raise DomainError("cell grid dimension differs from the process dimension")
        grid_lo = np.array(cells.lo, float)
        grid_w = np.array(cells.width, float)
        grid_shape = np.array(cells.shape, np.int64)
    else:
        grid_lo = grid_w = np.zeros(0)
        grid_shape = np.zeros(0, np.int64)
    if cell_weight is None:
        cell_weight = np.zeros(0)
    else:
        cell_weight = np.ascontiguousarray(cell_weight, dtype=float)
        if cells is None or cell_weight.size != cells.size:
            raise DomainError("cell_weight needs one value per grid cell")
    if boxes is None:
        box_c = np.zeros((K, 0, d))
        box_h = np.zeros((K, 0))
    else:
        box_c = np.ascontiguousarray(boxes[0], dtype=float).reshape(K, -1, d)
        box_h = np.ascontiguousarray(boxes[1], dtype=float).reshape(K, -1)
    kind = _KIND_CODE[domain.kind]
    R = float(domain.R) if domain.bounded else 0.0

    jobs = []
    for chunk, start in enumerate(range(0, cfg.n_samples, CHUNK)):
        n = min(CHUNK, cfg.n_samples - start)
        jobs.append((chunk, n, cfg.master_seed, stream, starts, kind, R, cfg.dt, n_steps,
                     params.beta, params.tilt_rate, grid_lo, grid_w, grid_shape, cell_weight,
                     box_c, box_h))
    workers = effective_workers(cfg.workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
    else:
        parts = [_run_chunk(job) for job in jobs]

    # reduction in chunk order keeps sums independent of scheduling
    occ_sum = np.zeros_like(parts[0][2])
    occ_sq = np.zeros_like(parts[0][3])
    box_sum = np.zeros_like(parts[0][4])
    box_sq = np.zeros_like(parts[0][5])
    for part in parts:
        occ_sum += part[2]
        occ_sq += part[3]
        box_sum += part[4]
        box_sq += part[5]
    box_volume = (2 * box_h) ** d
    return BatchResult(
        starts=starts, dt=cfg.dt, n_steps=n_steps,
        exit_step=np.concatenate([p[0] for p in parts]),
        exit_pos=np.concatenate([p[1] for p in parts]),
        cells=cells, occ_sum=occ_sum, occ_sq=occ_sq, box_sum=box_sum, box_sq=box_sq,
        box_volume=box_volume, functional=np.concatenate([p[6] for p in parts]),
        steps_used=int(sum(p[7] for p in parts)))


# ---------------------------------------------------------------------------
# public estimators


def simulate_path(x0, horizon: float, params: ProcessParams, cfg: McConfig,
                  rng: np.random.Generator, domain: Domain | None = None) -> PathSample:
    """One path on the grid k*dt up to the horizon; records the first exit if a domain is given."""
    d = params.d
    x0 = np.atleast_1d(as_points(x0, d)).astype(float)
    if params.m > 0 and cfg.dt > 1.0 / params.m:
        raise DomainError("dt must not exceed 1/m")
    n_steps = int(math.ceil(horizon / cfg.dt - 1e-9)) if horizon > 0 else 0
    if n_steps:
        inc = np.atleast_1d(sample_increment(cfg.dt, params, rng, size=n_steps))
        jumps = np.sqrt(2 * inc)[:, None] * rng.standard_normal((n_steps, d))
        states = np.vstack([x0, x0 + np.cumsum(jumps, axis=0)])
    else:
        states = x0[None, :]
    times = cfg.dt * np.arange(n_steps + 1)
    exit_index = None
    if domain is not None:
        outside = [k for k in range(1, n_steps + 1) if not domain.contains(states[k])]
        exit_index = outside[0] if outside else None
    return PathSample(times, states, exit_index)


def sample_displacements(n_steps: int, params: ProcessParams, cfg: McConfig, stream: int = 0):
    """X_{n dt} - X_0 for cfg.n_samples independent paths, shape (n, d)."""
    if params.m > 0 and cfg.dt > 1.0 / params.m:
        raise DomainError("dt must not exceed 1/m")
    parts = []
    for chunk, start in enumerate(range(0, cfg.n_samples, CHUNK)):
        gen = _chunk_generator(cfg.master_seed, stream, chunk)
        n = min(CHUNK, cfg.n_samples - start)
        parts.append(_displacements(gen, n, params.d, int(n_steps), cfg.dt, params.beta, params.tilt_rate))
    return np.concatenate(parts)


def _default_horizon(domain: Domain, params: ProcessParams):
    R = domain.R
    scale = max(R, R ** (params.alpha / 2))
    return 50.0 * (scale * scale / params.alpha + 1.0)


def estimate_survival(x0, t: float, domain: Domain, params: ProcessParams, cfg: McConfig,
                      stream: int = 0) -> Estimate:
    """P^x0(no monitored exit from the domain up to time t)."""
    res = run_batch([x0] if params.d > 1 else [float(np.atleast_1d(x0)[0])], domain, params, cfg, t,
                    stream=stream)
    return res.survival(t, 0)


def estimate_mean_exit(x0, domain: Domain, params: ProcessParams, cfg: McConfig,
                       horizon: float | None = None, refine: bool = True, stream: int = 0) -> Estimate:
    """Mean monitored exit time from a bounded domain.

    With ``refine`` a second run at dt/2 (a tenth of the paths, at least 1000)
    is attached as ``refined`` to expose the monitoring bias.
    """
    if not domain.bounded:
        raise DomainError("mean exit time is finite only for bounded domains")
    horizon = _default_horizon(domain, params) if horizon is None else horizon
    start = x0 if params.d > 1 else [float(np.atleast_1d(x0)[0])]
    est = run_batch(start, domain, params, cfg, horizon, stream=stream).mean_exit(0)
    if refine:
        fine_cfg = cfg.with_(dt=cfg.dt / 2, n_samples=max(1000, cfg.n_samples // 10))
        fine = run_batch(start, domain, params, fine_cfg, horizon, stream=stream + 1).mean_exit(0)
        est = Estimate(est.value, est.std_error, est.n, refined=fine, capped_fraction=est.capped_fraction)
    return est


def estimate_green(x0, domain: Domain, cells: Cells, params: ProcessParams, cfg: McConfig,
                   horizon: float | None = None, stream: int = 0):
    """Occupation-density estimate of the Green function on a cell grid.

    Returns (values, std_errors, result) where values[c] approximates the
    average of G_D(x0, .) over cell c.  For unbounded domains the horizon is
    required and the result reports the fraction of paths still alive there.
    """
    if horizon is None:
        if not domain.bounded:
            raise DomainError("unbounded domains need an explicit horizon cap")
        horizon = _default_horizon(domain, params)
    start = x0 if params.d > 1 else [float(np.atleast_1d(x0)[0])]
    res = run_batch(start, domain, params, cfg, horizon, cells=cells, stream=stream)
    vals, se = res.green_cells(0)
    res.extra["capped_fraction"] = float(np.mean(res.exit_step[:, 0] < 0))
    return vals, se, res


def estimate_exit_law(x0, domain: Domain, target, params: ProcessParams, cfg: McConfig,
                      horizon: float | None = None, stream: int = 0) -> Estimate:
    """P^x0(first monitored position outside the domain lies in the target).

    ``target`` is a predicate on points, or an interval (a, b) when d = 1.
    """
    if not domain.bounded:
        raise DomainError("exit law estimation needs a bounded domain")
    if callable(target):
        pred = target
    else:
        a, b = target
        if params.d != 1:
            raise DomainError("interval targets are for d = 1")
        if domain.kind == INTERVAL and not (b <= 0 or a >= domain.R):
            raise DomainError("target must lie outside the domain")
        pred = lambda y: a < y[0] < b  # noqa: E731
    horizon = _default_horizon(domain, params) if horizon is None else horizon
    start = x0 if params.d > 1 else [float(np.atleast_1d(x0)[0])]
    res = run_batch(start, domain, params, cfg, horizon, stream=stream)
    steps = res.exit_step[:, 0]
    hit = np.array([steps[i] >= 0 and pred(res.exit_pos[i, 0]) for i in range(res.n)], float)
    p = hit.mean()
    return Estimate(float(p), float(math.sqrt(p * (1 - p) / res.n)), res.n,
                    capped_fraction=float(np.mean(steps < 0)))
