"""Posterior summaries, Gelman-Rubin diagnostics, latent-time bands and predictive checks.

Windowing: a draw is kept when its iteration label ``it`` satisfies
``it >= start`` and ``(it - start) % thin == 0``. Sampler output is labelled
0..nsim (row 0 is the initial state); bare arrays are labelled 1..n.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .epidemic import Framework, PeriodSpec, epidemic_statistics, simulate
from .exceptions import EmptyWindow, InvalidConfig, NotSampled, SingleChain, ValidationError
from .io import read_rows, parse_float, write_rows
from .kernels import KernelParams, ParameterState
from .mcmc import LOGLIK, PERIOD_RATE_NAMES, ChainResult, PosteriorSample
from .rng import stream

QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)
QUANTILE_LABELS = ("2.5%", "25%", "50%", "75%", "97.5%")
STAT_NAMES = ("T1", "T2", "T3", "T4")

# spawn-key tag for posterior predictive replicate streams
PREDICT_STREAM = 2


def window_mask(iterations, start=0, thin=1):
    if thin < 1:
        raise ValidationError("thin must be >= 1")
    it = np.asarray(iterations)
    return (it >= start) & ((it - start) % thin == 0)


def _chain_windows(sample, start, thin):
    """(column names, list of per-chain windowed draw matrices)."""
    if isinstance(sample, PosteriorSample):
        cols = list(sample.columns)
        mats = [c.draws[window_mask(c.iterations, start, thin)] for c in sample.chains]
    else:
        arrays = sample if isinstance(sample, (list, tuple)) else [sample]
        mats = []
        for a in arrays:
            a = np.asarray(a, dtype=float)
            if a.ndim == 1:
                a = a[:, None]
            mats.append(a[window_mask(np.arange(1, a.shape[0] + 1), start, thin)])
        cols = [f"V{k + 1}" for k in range(mats[0].shape[1])]
    if any(m.shape[0] == 0 for m in mats):
        raise EmptyWindow(f"no draws left after start={start}, thin={thin}")
    return cols, mats


def batch_means_variance(x):
    """Asymptotic variance of the mean via floor(sqrt(n)) non-overlapping batch means."""
    n = x.size
    nb = int(math.isqrt(n))
    if nb < 2:
        return float(np.var(x, ddof=1)) if n > 1 else 0.0
    size = n // nb
    means = x[: nb * size].reshape(nb, size).mean(axis=1)
    return float(size * np.var(means, ddof=1))


@dataclass
class SummaryTable:
    names: list
    mean: np.ndarray
    sd: np.ndarray
    naive_se: np.ndarray
    ts_se: np.ndarray
    quantiles: np.ndarray
    n_draws: int
    nchains: int
    acceptance: dict = field(default_factory=dict)

    def row(self, name):
        k = self.names.index(name)
        return {
            "mean": float(self.mean[k]),
            "sd": float(self.sd[k]),
            "naive_se": float(self.naive_se[k]),
            "ts_se": float(self.ts_se[k]),
            **{q: float(v) for q, v in zip(QUANTILE_LABELS, self.quantiles[k])},
        }

    def credible_interval(self, name):
        k = self.names.index(name)
        return float(self.quantiles[k, 0]), float(self.quantiles[k, -1])

    def to_csv(self, path=None):
        header = ["quantity", "mean", "sd", "naive_se", "ts_se", *QUANTILE_LABELS]
        rows = [
            [name, self.mean[k], self.sd[k], self.naive_se[k], self.ts_se[k], *self.quantiles[k]]
            for k, name in enumerate(self.names)
        ]
        return write_rows(path, header, rows)

    def format(self):
        lines = [f"draws: {self.n_draws} from {self.nchains} chain(s)"]
        width = max(len(n) for n in self.names)
        lines.append(f"{'':{width}} {'Mean':>12} {'SD':>12} {'Naive SE':>12} {'Time-series SE':>15}")
        for k, name in enumerate(self.names):
            lines.append(
                f"{name:{width}} {self.mean[k]:12.6g} {self.sd[k]:12.6g} {self.naive_se[k]:12.6g} {self.ts_se[k]:15.6g}"
            )
        lines.append(f"{'':{width}} " + " ".join(f"{q:>12}" for q in QUANTILE_LABELS))
        for k, name in enumerate(self.names):
            lines.append(f"{name:{width}} " + " ".join(f"{v:12.6g}" for v in self.quantiles[k]))
        if self.acceptance:
            lines.append("acceptance rates:")
            for name, rate in self.acceptance.items():
                lines.append(f"  {name}: {rate:.6f}")
        return "\n".join(lines)


def summarize(sample, start=0, thin=1):
    """Pooled windowed summaries for every tracked quantity (including the log-likelihood)."""
    names, mats = _chain_windows(sample, start, thin)
    pooled = np.concatenate(mats, axis=0)
    n = pooled.shape[0]
    mean = pooled.mean(axis=0)
    sd = pooled.std(axis=0, ddof=1) if n > 1 else np.zeros(pooled.shape[1])
    naive = sd / math.sqrt(n)
    # variance of the pooled mean: sum_c n_c * sigma2_c / N^2
    ts = np.array(
        [math.sqrt(sum(m.shape[0] * batch_means_variance(m[:, k]) for m in mats)) / n for k in range(len(names))]
    )
    q = np.quantile(pooled, QUANTILES, axis=0).T
    acceptance = {}
    if isinstance(sample, PosteriorSample):
        keys = sample.chains[0].acceptance.keys()
        acceptance = {k: float(np.mean([c.acceptance.get(k, 0.0) for c in sample.chains])) for k in keys}
    return SummaryTable(names, mean, sd, naive, ts, q, n, len(mats), acceptance)


@dataclass
class PSRFReport:
    names: list
    point: np.ndarray
    upper: np.ndarray

    def __getitem__(self, name):
        return float(self.point[self.names.index(name)])

    def to_csv(self, path=None):
        rows = [[n, p, u] for n, p, u in zip(self.names, self.point, self.upper)]
        return write_rows(path, ["quantity", "psrf", "upper_ci"], rows)


def _psrf(x, confidence=0.95):
    """Point estimate and upper limit of the scale reduction factor for an (m, n) array."""
    m, n = x.shape
    s2 = x.var(axis=1, ddof=1)
    xbar = x.mean(axis=1)
    w = float(s2.mean())
    b = 0.0 if np.ptp(xbar) == 0 else float(n * xbar.var(ddof=1))
    if w == 0.0:
        return (1.0, 1.0) if b == 0.0 else (math.inf, math.inf)
    if np.ptp(s2) == 0:
        var_w = 0.0
        cov_wb = 0.0
    else:
        var_w = float(s2.var(ddof=1)) / m
        cov_wb = (n / m) * (np.cov(s2, xbar**2)[0, 1] - 2 * xbar.mean() * np.cov(s2, xbar)[0, 1])
    var_b = 2 * b * b / (m - 1)
    v = (n - 1) / n * w + (1 + 1 / m) * b / n
    var_v = ((n - 1) ** 2 * var_w + (1 + 1 / m) ** 2 * var_b + 2 * (n - 1) * (1 + 1 / m) * cov_wb) / n**2
    df_adj = 1.0
    if var_v > 0:
        df_v = 2 * v * v / var_v
        df_adj = (df_v + 3) / (df_v + 1)
    r2_random = (1 + 1 / m) * b / (n * w)
    w_df = 2 * w * w / var_w if var_w > 0 else math.inf
    qf = stats.f.ppf((1 + confidence) / 2, m - 1, w_df) if r2_random > 0 else 0.0
    point = math.sqrt(df_adj * (1 + r2_random))
    upper = math.sqrt(df_adj * (1 + qf * r2_random))
    return point, upper


def gelman_rubin(chains, start=0, thin=1, confidence=0.95):
    """Scale reduction factor per quantity from two or more equal-length chains."""
    if isinstance(chains, PosteriorSample):
        if chains.nchains < 2:
            raise SingleChain("the Gelman-Rubin diagnostic needs at least two chains")
    elif len(chains) < 2:
        raise SingleChain("the Gelman-Rubin diagnostic needs at least two chains")
    names, mats = _chain_windows(chains, start, thin)
    lengths = {m.shape[0] for m in mats}
    if len(lengths) != 1:
        raise ValidationError("chains differ in length after windowing")
    if lengths.pop() < 2:
        raise EmptyWindow("need at least two draws per chain")
    stack = np.stack(mats)
    if isinstance(chains, PosteriorSample):
        keep = [k for k, name in enumerate(names) if name != LOGLIK]
        names = [names[k] for k in keep]
        stack = stack[:, :, keep]
    res = [_psrf(stack[:, :, k], confidence) for k in range(len(names))]
    return PSRFReport(names, np.array([r[0] for r in res]), np.array([r[1] for r in res]))


@dataclass
class LatentSummary:
    ids: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def to_csv(self, path=None):
        rows = zip(self.ids, self.mean, self.lower, self.upper)
        return write_rows(path, ["id", "mean", "lower", "upper"], rows)


def summarize_latent_draws(draws, ids):
    draws = np.asarray(draws, dtype=float)
    lo, hi = np.quantile(draws, [0.025, 0.975], axis=0)
    return LatentSummary(np.asarray(ids), draws.mean(axis=0), lo, hi)


def latent_time_summary(sample, which="infection", start=0, thin=1):
    """Posterior mean and 95% band of latent infection or removal times, in observed record order."""
    attr = {"infection": "inf_draws", "removal": "rem_draws"}.get(which)
    if attr is None:
        raise ValidationError(f"which must be 'infection' or 'removal', got {which!r}")
    blocks = []
    for c in sample.chains:
        d = getattr(c, attr)
        if d is None:
            raise NotSampled(f"{which} times were not sampled in this fit")
        blocks.append(d[window_mask(c.latent_iterations, start, thin)])
    pooled = np.concatenate(blocks)
    if pooled.shape[0] == 0:
        raise EmptyWindow(f"no latent draws left after start={start}, thin={thin}")
    return summarize_latent_draws(pooled, sample.chains[0].latent_ids)


def config_from_row(template, columns, row):
    """SimConfig with parameters (and period rates) taken from one posterior draw."""
    p = template.params
    sus = p.sus_coeffs.copy()
    sus_pow = p.sus_powers.copy()
    trans = None if p.trans_coeffs is None else p.trans_coeffs.copy()
    trans_pow = None if p.trans_powers is None else p.trans_powers.copy()
    beta, beta2 = p.kernel.beta, p.kernel.beta2
    spark, gamma = p.spark, p.gamma
    periods = template.periods
    rates = {}
    for name, v in zip(columns, row):
        v = float(v)
        if name.startswith("Alpha_s["):
            sus[int(name[8:-1]) - 1] = v
        elif name.startswith("Psi_s["):
            sus_pow[int(name[6:-1]) - 1] = v
        elif name.startswith("Alpha_t["):
            trans[int(name[8:-1]) - 1] = v
        elif name.startswith("Psi_t["):
            trans_pow[int(name[6:-1]) - 1] = v
        elif name == "Spatial parameter":
            beta = v
        elif name == "Network parameter":
            beta2 = v
        elif name == "Spark":
            spark = v
        elif name == "Notification effect":
            gamma = v
        elif name in PERIOD_RATE_NAMES.values():
            rates[name] = v
    if rates:
        if template.framework is Framework.SIR:
            periods = PeriodSpec(periods.shape, rates.get(PERIOD_RATE_NAMES["infectious"], periods.rate))
        else:
            inc, delay = periods
            periods = (
                PeriodSpec(inc.shape, rates.get(PERIOD_RATE_NAMES["incubation"], inc.rate)),
                PeriodSpec(delay.shape, rates.get(PERIOD_RATE_NAMES["delay"], delay.rate)),
            )
    params = ParameterState(sus, sus_pow, trans, trans_pow, KernelParams(beta, beta2), spark, gamma)
    return template.replace(params=params, periods=periods)


@dataclass
class PredictiveResult:
    stats: np.ndarray
    observed: tuple
    rows: np.ndarray

    def interval(self, level=0.95):
        a = (1 - level) / 2
        return np.quantile(self.stats, [a, 1 - a], axis=0)

    def covers(self, level=0.95):
        lo, hi = self.interval(level)
        obs = np.asarray(self.observed, dtype=float)
        return (obs >= lo) & (obs <= hi)

    def to_csv(self, path=None):
        rows = [[r + 1, int(s[0]), *s[1:]] for r, s in enumerate(self.stats)]
        return write_rows(path, ["replicate", *STAT_NAMES], rows)


def _predictive_replicate(args):
    template, columns, pool, seed, rep = args
    rng = stream(seed, PREDICT_STREAM, rep)
    k = int(rng.integers(pool.shape[0]))
    cfg = config_from_row(template, columns, pool[k])
    return k, epidemic_statistics(simulate(cfg, rng))


def posterior_predictive(sample, template, observed, prefix, n_rep, seed=0, start=0, thin=1, workers=1):
    """Simulate ``n_rep`` epidemics from posterior draws, conditioned on the first ``prefix`` observed infections.

    Each replicate owns the stream ``(seed, PREDICT_STREAM, rep)``: it picks a
    windowed draw uniformly, then simulates with that draw's parameters.
    """
    if n_rep < 1:
        raise InvalidConfig("n_rep must be >= 1")
    if not 1 <= prefix <= observed.m:
        raise InvalidConfig(f"prefix must lie in 1..{observed.m}")
    names, mats = _chain_windows(sample, start, thin)
    pool = np.concatenate(mats)
    template = template.replace(initial_epi=observed.head(prefix), start_time=None)
    tasks = [(template, names, pool, int(seed), rep) for rep in range(n_rep)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_predictive_replicate, tasks, chunksize=max(1, n_rep // (4 * workers))))
    else:
        out = [_predictive_replicate(t) for t in tasks]
    rows = np.array([o[0] for o in out])
    stats_ = np.array([o[1] for o in out], dtype=float)
    return PredictiveResult(stats_, epidemic_statistics(observed), rows)


# draw directories ------------------------------------------------------------


def _latent_header(ids):
    return ["iteration", *[f"id{int(i)}" for i in ids]]


def write_chain(chain, out_dir):
    out = Path(out_dir)
    k = chain.chain_index + 1
    write_rows(
        out / f"chain_{k}.csv",
        ["iteration", *chain.columns],
        ([int(it), *row] for it, row in zip(chain.iterations, chain.draws)),
    )
    for attr, label in (("inf_draws", "inf_times"), ("rem_draws", "rem_times")):
        d = getattr(chain, attr)
        if d is not None:
            write_rows(
                out / f"chain_{k}_{label}.csv",
                _latent_header(chain.latent_ids),
                ([int(it), *row] for it, row in zip(chain.latent_iterations, d)),
            )


def write_sample(sample, out_dir, config_echo=None):
    """Per-chain CSVs, ``run.json`` (deterministic metadata) and ``timing.json`` (wall times)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for chain in sample.chains:
        write_chain(chain, out)
    meta = {
        "framework": sample.framework,
        "datatype": sample.datatype,
        "nchains": sample.nchains,
        "nsim": int(sample.chains[0].iterations[-1]),
        "columns": list(sample.columns),
        "seed": sample.meta.get("seed"),
        "chain_streams": [[c.seed, c.chain_index] for c in sample.chains],
        "acceptance": [c.acceptance for c in sample.chains],
        "config": config_echo,
    }
    (out / "run.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    timing = {"wall_time_seconds": [c.wall_time for c in sample.chains]}
    (out / "timing.json").write_text(json.dumps(timing, indent=2) + "\n")


def _read_numeric(path):
    header, rows = read_rows(path)
    data = np.array([[parse_float(v, missing=math.nan) for v in r] for r in rows], dtype=float)
    return header, data.reshape(len(rows), len(header))


def read_sample(draw_dir):
    """Rebuild a PosteriorSample from a directory written by :func:`write_sample`."""
    d = Path(draw_dir)
    meta_path = d / "run.json"
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    files = sorted(d.glob("chain_*.csv"), key=lambda p: p.name)
    main = [p for p in files if p.stem.count("_") == 1]
    if not main:
        raise ValidationError(f"no chain_<k>.csv files in {d}")
    main.sort(key=lambda p: int(p.stem.split("_")[1]))
    chains = []
    for p in main:
        k = int(p.stem.split("_")[1])
        header, data = _read_numeric(p)
        if header[0] != "iteration":
            raise ValidationError(f"{p}: first column must be 'iteration'")
        latent = {}
        ids = np.array([], dtype=np.int64)
        lat_it = np.array([], dtype=np.int64)
        for label in ("inf_times", "rem_times"):
            q = d / f"chain_{k}_{label}.csv"
            if q.exists():
                lh, ld = _read_numeric(q)
                ids = np.array([int(h[2:]) for h in lh[1:]], dtype=np.int64)
                lat_it = ld[:, 0].astype(np.int64)
                latent[label] = ld[:, 1:]
        acc = meta.get("acceptance", [])
        chains.append(
            ChainResult(
                columns=header[1:],
                draws=data[:, 1:],
                iterations=data[:, 0].astype(np.int64),
                acceptance=acc[k - 1] if k - 1 < len(acc) else {},
                latent_ids=ids,
                latent_iterations=lat_it,
                inf_draws=latent.get("inf_times"),
                rem_draws=latent.get("rem_times"),
                chain_index=k - 1,
                seed=int(meta.get("seed") or 0),
            )
        )
    return PosteriorSample(
        chains=chains,
        framework=meta.get("framework", "SIR"),
        datatype=meta.get("datatype", "known-epidemic"),
        meta={"seed": meta.get("seed")},
    )
