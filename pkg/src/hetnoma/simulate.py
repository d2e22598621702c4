"""Monte Carlo evaluation of the exact NOMA SIR decoding events.

One trial samples the whole network once (BS tiers, users, association,
void flags and every fading gain), then evaluates the decoding events of
both schemes in every tagged cell: a non-void inner-region BS with at
least two attached users, two of which are scheduled uniformly at random.

Randomness is organized so that each draw has its own deterministic
substream keyed by (seed, trial, purpose[, cell]):

  * trials are independent work units and can run in any order or in
    parallel; aggregate counts are identical either way,
  * a cell's scheduling choice and fading gains do not depend on which
    other cells are evaluated (so per-tier subsampling caps change
    nothing else), and
  * the non-cooperative and cooperative schemes are evaluated on the
    same draws (one gain per transmitter/receiver pair per snapshot),
    which makes the cooperative far-user event a superset of the
    non-cooperative one sample by sample.

Interference at a receiver sums over all non-void BSs in the full window
except the serving one; the cooperative signal sums over all void BSs of
every tier, evaluated at the receiving user's own location.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .geometry import PointSet, Window, associate, default_window, sample_ppp

SCHEMES = ("noncoop", "coop")
ROLES = ("near", "far")

# substream purposes within one (seed, trial)
_STREAM_POINTS = 0
_STREAM_CAP = 1
_STREAM_CELL = 2


class SimulationError(RuntimeError):
    pass


def _entropy(seed):
    return tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)


def _stream(seed, trial, *key):
    ss = np.random.SeedSequence(entropy=_entropy(seed), spawn_key=(int(trial), *key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class NetworkSnapshot:
    """One sampled realization of the network.

    nonvoid[b] is True iff BS b has at least one attached user (the
    indicator that the BS transmits).  Global BS indices concatenate the
    tiers in order.
    """

    params: object
    window: Window
    seed: object
    trial: int
    bs_per_tier: list
    users: PointSet
    assoc: object
    bs_xy: np.ndarray = field(repr=False, default=None)
    bs_tier: np.ndarray = field(repr=False, default=None)
    bs_power: np.ndarray = field(repr=False, default=None)
    nonvoid: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.bs_xy is None:
            self.bs_xy = np.concatenate([p.xy for p in self.bs_per_tier])
            self.bs_tier = np.concatenate(
                [np.full(len(p), t, dtype=np.intp) for t, p in enumerate(self.bs_per_tier)]
            )
            powers = np.array([t.power_watts for t in self.params.tiers])
            self.bs_power = powers[self.bs_tier]
            self.nonvoid = self.assoc.counts > 0

    @property
    def n_bs(self):
        return self.bs_xy.shape[0]

    def tagged_cells(self, tier=None):
        """Inner-region non-void BSs with >= 2 users, optionally one tier."""
        mask = (
            self.window.contains(self.bs_xy, inner=True)
            & self.nonvoid
            & (self.assoc.counts >= 2)
        )
        if tier is not None:
            mask &= self.bs_tier == tier
        return np.flatnonzero(mask)


def build_snapshot(params, window, seed, trial):
    """Sample all tiers and users, associate, and flag void cells.

    Bit-identical for identical (seed, trial).  Fails if the window is so
    small that it contains no base station.
    """
    rng = _stream(seed, trial, _STREAM_POINTS)
    bs_per_tier = [
        sample_ppp(t.intensity, window, rng, tag=i) for i, t in enumerate(params.tiers)
    ]
    users = sample_ppp(params.user_intensity, window, rng, tag="users")
    if sum(len(p) for p in bs_per_tier) == 0:
        raise SimulationError("window contains no base stations; enlarge the window")
    assoc = associate(bs_per_tier, users)
    return NetworkSnapshot(
        params=params, window=window, seed=seed, trial=trial,
        bs_per_tier=bs_per_tier, users=users, assoc=assoc,
    )


def snapshot_from_points(params, window, bs_xy_per_tier, users_xy, seed=0, trial=0):
    """Snapshot with hand-placed points (testing and worked examples)."""
    bs_per_tier = [PointSet(np.asarray(xy), tag=i) for i, xy in enumerate(bs_xy_per_tier)]
    users = PointSet(np.asarray(users_xy), tag="users")
    assoc = associate(bs_per_tier, users)
    return NetworkSnapshot(
        params=params, window=window, seed=seed, trial=trial,
        bs_per_tier=bs_per_tier, users=users, assoc=assoc,
    )


@dataclass
class TaggedCell:
    """A serving BS with its two scheduled users and all fading draws.

    Users are ordered so that the near user is index 0.  link_gains and
    link_dist_sq have shape (2, n_bs): row 0 is the near receiver, row 1
    the far receiver, columns follow global BS indexing (the serving
    column is excluded from interference by the evaluators).
    """

    bs_index: int
    tier: int
    bs_xy: np.ndarray
    user_indices: np.ndarray
    user_xy: np.ndarray
    distances: np.ndarray
    desired_gains: np.ndarray
    link_gains: np.ndarray = field(repr=False)
    link_dist_sq: np.ndarray = field(repr=False)
    scheme: object = None


def schedule_noma_users(snapshot, bs_index):
    """Pick two scheduled users of a BS uniformly at random.

    Returns None for void and single-user cells (those keep their void
    flag / full-power role but contribute no two-user NOMA statistics).
    The draw and all fading gains come from the cell's own substream, so
    the result depends only on (seed, trial, bs_index).
    """
    attached = snapshot.assoc.users_of(bs_index)
    if len(attached) < 2:
        return None
    rng = _stream(snapshot.seed, snapshot.trial, _STREAM_CELL, int(bs_index))
    pick = rng.choice(len(attached), size=2, replace=False)
    pair = attached[np.sort(pick)]
    bs_xy = snapshot.bs_xy[bs_index]
    user_xy = snapshot.users.xy[pair]
    dist = np.hypot(*(user_xy - bs_xy).T)
    if dist[1] < dist[0]:
        pair, user_xy, dist = pair[::-1], user_xy[::-1], dist[::-1]
    desired_gains = rng.standard_exponential(2)
    link_gains = rng.standard_exponential((2, snapshot.n_bs))
    diff = snapshot.bs_xy[None, :, :] - user_xy[:, None, :]
    link_dist_sq = np.einsum("rbc,rbc->rb", diff, diff)
    return TaggedCell(
        bs_index=int(bs_index), tier=int(snapshot.bs_tier[bs_index]), bs_xy=bs_xy,
        user_indices=pair, user_xy=user_xy, distances=dist,
        desired_gains=desired_gains, link_gains=link_gains, link_dist_sq=link_dist_sq,
    )


@dataclass(frozen=True)
class SirSample:
    """Decoding outcome of one tagged cell under one scheme.

    gamma_* are the own-signal SIRs (allocated power over interference);
    interference_* and coop_signal_* are the received powers at the near
    and far users.  near_covered requires both the far-signal decoding
    stage and the post-cancellation own-signal stage.
    """

    near_first_stage_ok: bool
    near_sic_ok: bool
    near_covered: bool
    far_covered: bool
    gamma_near: float
    gamma_far: float
    interference_near: float
    interference_far: float
    coop_signal_near: float = 0.0
    coop_signal_far: float = 0.0


def _received_powers(cell, snapshot):
    """Interference and void-cell cooperative power at the two receivers."""
    alpha = snapshot.params.pathloss_exponent
    contrib = (
        snapshot.bs_power[None, :]
        * cell.link_gains
        * cell.link_dist_sq ** (-alpha / 2.0)
    )
    int_mask = snapshot.nonvoid.copy()
    int_mask[cell.bs_index] = False
    interference = contrib @ int_mask
    coop = contrib @ ~snapshot.nonvoid
    return interference, coop


def _decoding_events(desired, interference, coop, theta, beta):
    """Cross-multiplied SIR events (division-free, exact for zero interference).

    desired[r] = P_m * H_r * d_r^(-alpha) is the full-power received
    signal; the far signal carries the fraction beta of it, the near
    signal 1 - beta, and both traverse the same serving-link fade.
    """
    first = beta * desired[0] + coop[0] >= theta * ((1.0 - beta) * desired[0] + interference[0])
    sic = (1.0 - beta) * desired[0] >= theta * interference[0]
    far = beta * desired[1] + coop[1] >= theta * ((1.0 - beta) * desired[1] + interference[1])
    return bool(first), bool(sic), bool(far)


def _gamma(power, interference):
    return math.inf if interference == 0.0 else power / interference


def evaluate_noncoop(cell, snapshot, theta, beta_m):
    """Exact decoding events of the two scheduled users, no cooperation."""
    interference, _ = _received_powers(cell, snapshot)
    p_m = snapshot.params.tiers[cell.tier].power_watts
    desired = p_m * cell.desired_gains * cell.distances ** (-snapshot.params.pathloss_exponent)
    first, sic, far = _decoding_events(desired, interference, (0.0, 0.0), theta, beta_m)
    return SirSample(
        near_first_stage_ok=first, near_sic_ok=sic, near_covered=first and sic,
        far_covered=far,
        gamma_near=_gamma((1.0 - beta_m) * desired[0], interference[0]),
        gamma_far=_gamma(beta_m * desired[1], interference[1]),
        interference_near=float(interference[0]), interference_far=float(interference[1]),
    )


def evaluate_coop(cell, snapshot, theta, beta_m):
    """Decoding events when all void BSs retransmit the far user's signal.

    The joint void-cell signal adds to the far-signal numerator at both
    receivers (each evaluated at its own location); the near user's
    post-cancellation stage is unchanged.
    """
    interference, coop = _received_powers(cell, snapshot)
    p_m = snapshot.params.tiers[cell.tier].power_watts
    desired = p_m * cell.desired_gains * cell.distances ** (-snapshot.params.pathloss_exponent)
    first, sic, far = _decoding_events(desired, interference, coop, theta, beta_m)
    return SirSample(
        near_first_stage_ok=first, near_sic_ok=sic, near_covered=first and sic,
        far_covered=far,
        gamma_near=_gamma((1.0 - beta_m) * desired[0], interference[0]),
        gamma_far=_gamma(beta_m * desired[1], interference[1]),
        interference_near=float(interference[0]), interference_far=float(interference[1]),
        coop_signal_near=float(coop[0]), coop_signal_far=float(coop[1]),
    )


@dataclass
class TrialTotals:
    """Associative, order-independent accumulator of decoding outcomes.

    successes has shape (n_tiers, n_schemes, n_roles) with scheme order
    SCHEMES and role order ROLES; samples counts tagged cells per tier.
    Squared scheduled-user distances are accumulated for the
    distance-distribution diagnostics.
    """

    successes: np.ndarray
    samples: np.ndarray
    sum_near_dist_sq: np.ndarray
    sum_far_dist_sq: np.ndarray
    n_trials: int = 0

    @classmethod
    def zeros(cls, n_tiers):
        return cls(
            successes=np.zeros((n_tiers, len(SCHEMES), len(ROLES)), dtype=np.int64),
            samples=np.zeros(n_tiers, dtype=np.int64),
            sum_near_dist_sq=np.zeros(n_tiers),
            sum_far_dist_sq=np.zeros(n_tiers),
        )

    def merge(self, other):
        self.successes += other.successes
        self.samples += other.samples
        self.sum_near_dist_sq += other.sum_near_dist_sq
        self.sum_far_dist_sq += other.sum_far_dist_sq
        self.n_trials += other.n_trials
        return self


def run_single_trial(params, window, seed, trial, max_cells_per_tier=None):
    """All tagged-cell outcomes of one snapshot, as TrialTotals.

    max_cells_per_tier, when set, evaluates a uniform random subsample of
    at most that many tagged cells per tier (unbiased; used to balance
    effort across tiers of very different density).
    """
    snapshot = build_snapshot(params, window, seed, trial)
    totals = TrialTotals.zeros(params.n_tiers)
    totals.n_trials = 1
    theta = params.sir_threshold
    for tier in range(params.n_tiers):
        cells = snapshot.tagged_cells(tier)
        if max_cells_per_tier is not None and len(cells) > max_cells_per_tier:
            rng = _stream(seed, trial, _STREAM_CAP, tier)
            cells = np.sort(rng.choice(cells, size=max_cells_per_tier, replace=False))
        beta = params.beta[tier]
        for bs_index in cells:
            cell = schedule_noma_users(snapshot, bs_index)
            non = evaluate_noncoop(cell, snapshot, theta, beta)
            coop = evaluate_coop(cell, snapshot, theta, beta)
            totals.successes[tier, 0, 0] += non.near_covered
            totals.successes[tier, 0, 1] += non.far_covered
            totals.successes[tier, 1, 0] += coop.near_covered
            totals.successes[tier, 1, 1] += coop.far_covered
            totals.samples[tier] += 1
            totals.sum_near_dist_sq[tier] += cell.distances[0] ** 2
            totals.sum_far_dist_sq[tier] += cell.distances[1] ** 2
    return totals


def _trial_worker(args):
    return run_single_trial(*args)


def run_trials(params, window=None, n_trials=20, seed=0, max_cells_per_tier=None, n_jobs=1):
    """Accumulated outcomes of n_trials independent snapshots.

    Trials use substreams keyed by (seed, trial); merging is a plain sum
    of integer counts, so serial and parallel execution agree exactly.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    window = window if window is not None else default_window(params)
    jobs = [(params, window, seed, trial, max_cells_per_tier) for trial in range(n_trials)]
    totals = TrialTotals.zeros(params.n_tiers)
    if n_jobs == 1:
        for job in jobs:
            totals.merge(_trial_worker(job))
    else:
        workers = n_jobs if n_jobs is not None else os.cpu_count()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_trial_worker, jobs, chunksize=1):
                totals.merge(part)
    return totals


@dataclass(frozen=True)
class CoverageEstimate:
    """Monte Carlo coverage estimate with a 95% normal-approximation CI."""

    scheme: str
    tier: int
    role: str
    p_hat: float
    ci_halfwidth: float
    n_samples: int
    low_samples: bool

    @classmethod
    def from_counts(cls, scheme, tier, role, successes, n):
        if n == 0:
            return cls(scheme, tier, role, math.nan, math.nan, 0, True)
        p = successes / n
        ci = 1.96 * math.sqrt(p * (1.0 - p) / n)
        return cls(scheme, tier, role, p, ci, int(n), n < 100)


def estimates_from_totals(totals, schemes=SCHEMES):
    out = []
    for tier in range(totals.successes.shape[0]):
        for scheme in schemes:
            s = SCHEMES.index(scheme)
            for r, role in enumerate(ROLES):
                out.append(
                    CoverageEstimate.from_counts(
                        scheme, tier, role,
                        int(totals.successes[tier, s, r]), int(totals.samples[tier]),
                    )
                )
    return out


def estimate_coverage(params, scheme=SCHEMES, window=None, n_trials=20, seed=0,
                      max_cells_per_tier=None, n_jobs=1):
    """Coverage estimates per (tier, role) for the requested scheme(s).

    scheme may be "noncoop", "coop", or a sequence of both.  Estimates
    with fewer than 100 tagged cells carry low_samples=True.
    """
    schemes = (scheme,) if isinstance(scheme, str) else tuple(scheme)
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}")
    totals = run_trials(params, window, n_trials, seed, max_cells_per_tier, n_jobs)
    return estimates_from_totals(totals, schemes)


@dataclass(frozen=True)
class CellCensus:
    """Void-cell and user-count statistics over inner-region BSs."""

    n_bs: int
    n_void: int
    count_histogram: np.ndarray

    @property
    def void_fraction(self):
        return self.n_void / self.n_bs


def cell_census(params, window=None, n_snapshots=100, seed=0):
    """Empirical per-BS user-count distribution over many snapshots."""
    window = window if window is not None else default_window(params)
    hist = np.zeros(1, dtype=np.int64)
    n_bs = 0
    n_void = 0
    for trial in range(n_snapshots):
        snap = build_snapshot(params, window, seed, trial)
        inner = window.contains(snap.bs_xy, inner=True)
        counts = snap.assoc.counts[inner]
        n_bs += counts.size
        n_void += int(np.sum(counts == 0))
        local = np.bincount(counts)
        if local.size > hist.size:
            hist = np.concatenate([hist, np.zeros(local.size - hist.size, dtype=np.int64)])
        hist[: local.size] += local
    return CellCensus(n_bs=n_bs, n_void=n_void, count_histogram=hist)
