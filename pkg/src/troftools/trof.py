"""Thresholded ROF segmentation.

The ROF problem is solved once. Its solution u is then thresholded at
tau_1 < ... < tau_{K-1}, the phase means m_i of the original image f
are computed on the induced phases, and the thresholds move to the
midpoints of adjacent means. A cleanup pass between updates removes
empty phases and thresholds that break the mean/threshold interleaving.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from troftools.core import (GrayImage, _as_grid, check_increasing,
                            label_means, partition_from_thresholds)
from troftools.rof import RofParams, solve_rof

# Slack for the mean/threshold comparisons made by cleanup.
CLEANUP_TOL = 1e-12

# Tolerance for reporting interleaving violations in a trace.
INTERLEAVE_TOL = 1e-9

# Outer iteration count above which a run is reported as slow.
SLOW_CONVERGENCE = 15


@dataclass(frozen=True, eq=False)
class ThresholdVector:
    """Non-decreasing thresholds in [0, 1].

    Midpoint updates can produce repeated values when two phase means
    coincide, so only `validated` insists on strict increase inside the
    open interval.
    """

    taus: np.ndarray

    def __post_init__(self):
        taus = np.array(self.taus, dtype=np.float64, copy=True).ravel()
        if not np.all(np.isfinite(taus)):
            raise ValueError(f'Thresholds must be finite: {taus}.')
        if np.any(np.diff(taus) < 0):
            raise ValueError(f'Thresholds must be non-decreasing: {taus}.')
        if taus.size and (taus[0] < 0 or taus[-1] > 1):
            raise ValueError(f'Thresholds must lie in [0, 1]: {taus}.')
        taus.flags.writeable = False
        object.__setattr__(self, 'taus', taus)

    @classmethod
    def validated(cls, taus):
        """Thresholds supplied by a user: strictly increasing in (0, 1)."""
        taus = check_increasing(taus)
        if taus.size and (taus[0] <= 0 or taus[-1] >= 1):
            raise ValueError(f'Thresholds must lie in (0, 1): {taus}.')
        return cls(taus)

    def __len__(self):
        return self.taus.size

    def __iter__(self):
        return iter(self.taus.tolist())

    @property
    def K(self):
        return self.taus.size + 1

    def is_strict(self):
        return bool(np.all(np.diff(self.taus) > 0))


@dataclass(frozen=True)
class TrofParams:
    K: int
    rof: RofParams
    eps_tau: float = 1e-5
    max_outer_iter: int = 100
    min_phase_size: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 2:
            raise ValueError(f'K must be an integer of at least 2, got {self.K}.')
        if not self.eps_tau > 0:
            raise ValueError(f'eps_tau must be positive, got {self.eps_tau}.')
        if int(self.max_outer_iter) != self.max_outer_iter or self.max_outer_iter < 1:
            raise ValueError(
                f'max_outer_iter must be a positive integer, got {self.max_outer_iter}.')
        if self.min_phase_size < 0:
            raise ValueError(
                f'min_phase_size must be non-negative, got {self.min_phase_size}.')


@dataclass(frozen=True, eq=False)
class TrofIteration:
    taus: np.ndarray
    means: np.ndarray
    # Sign sequence and its flip count, None when K changed since the
    # previous iteration or on the first one.
    zeta: np.ndarray | None
    sign_changes: int | None
    phase_count: int
    tau_delta: float

    def interleaving_violation(self):
        """Largest amount by which m_0 <= tau_1 <= m_1 <= ... fails."""
        chain = np.empty(self.means.size + self.taus.size)
        chain[0::2] = self.means
        chain[1::2] = self.taus
        if chain.size < 2:
            return 0.0
        return float(max(0.0, np.max(chain[:-1] - chain[1:])))


@dataclass(eq=False)
class TrofTrace:
    iterations: list = field(default_factory=list)

    def append(self, iteration):
        self.iterations.append(iteration)

    def __len__(self):
        return len(self.iterations)

    def __iter__(self):
        return iter(self.iterations)

    def __getitem__(self, idx):
        return self.iterations[idx]

    def interleaving_violations(self, tol=INTERLEAVE_TOL):
        return [k for k, it in enumerate(self.iterations)
                if it.interleaving_violation() > tol]

    def sign_change_pairs(self):
        """Consecutive (k, previous, current) entries with defined s_k."""
        pairs = []
        for k in range(1, len(self.iterations)):
            prev, cur = self.iterations[k - 1], self.iterations[k]
            if prev.sign_changes is None or cur.sign_changes is None:
                continue
            pairs.append((k, prev, cur))
        return pairs

    def sign_monotone_violations(self):
        """Iterations where s_k increased."""
        return [k for k, prev, cur in self.sign_change_pairs()
                if cur.sign_changes > prev.sign_changes]

    def strict_decrease_violations(self):
        """Iterations where zeta_1 flipped but s_k did not drop.

        A step where no threshold moved carries the all-tied sign
        convention rather than a direction and is skipped.
        """
        violations = []
        for k, prev, cur in self.sign_change_pairs():
            if prev.zeta.size == 0 or cur.zeta.size == 0:
                continue
            if cur.tau_delta == 0 or prev.tau_delta == 0:
                continue
            if cur.zeta[0] != prev.zeta[0] and not cur.sign_changes < prev.sign_changes:
                violations.append(k)
        return violations


@dataclass(frozen=True, eq=False)
class TrofResult:
    partition: object
    final_taus: ThresholdVector
    final_means: np.ndarray
    u: object
    trace: TrofTrace
    converged: bool
    outer_iterations: int

    @property
    def K(self):
        return self.partition.K

    def reconstruct(self):
        """Piecewise constant image taking the phase mean on each phase."""
        return GrayImage.from_array(self.final_means[self.partition.labels],
                                    clip=True)


def phase_means(u, f, taus):
    """Means of f over the phases cut from u by the thresholds."""
    partition = partition_from_thresholds(u, taus)
    means, _ = label_means(f, partition.labels, partition.K)
    return means


def update_thresholds(means):
    """Midpoints of adjacent phase means."""
    means = np.asarray(means, dtype=np.float64)
    return ThresholdVector(0.5 * (means[:-1] + means[1:]))


def _level_sets(u, taus):
    """Sigma_0 = Omega, Sigma_i = {u > tau_i}, Sigma_K = empty."""
    full = np.ones(u.shape, dtype=bool)
    return [full] + [u > t for t in taus] + [np.zeros(u.shape, dtype=bool)]


def _phase_mask(u, lower, upper):
    """{lower < u <= upper}; None leaves that side open."""
    mask = np.ones(u.shape, dtype=bool)
    if lower is not None:
        mask &= u > lower
    if upper is not None:
        mask &= ~(u > upper)
    return mask


def _phase_fits(u, f, lower, upper):
    """Whether the phase between two thresholds is nonempty with its f
    mean between them (0 and 1 stand in for open ends)."""
    mask = _phase_mask(u, lower, upper)
    count = np.count_nonzero(mask)
    if count == 0:
        return False
    mean = float(np.sum(f[mask]) / count)
    lo = 0.0 if lower is None else lower
    hi = 1.0 if upper is None else upper
    return lo - CLEANUP_TOL <= mean <= hi + CLEANUP_TOL


def _threshold_fits(u, f, taus, i, tau):
    """Whether both phases next to threshold i fit when it takes value tau."""
    lower = taus[i - 1] if i > 0 else None
    upper = taus[i + 1] if i + 1 < taus.size else None
    if (lower is not None and tau <= lower) or (upper is not None and tau >= upper):
        return False
    return _phase_fits(u, f, lower, tau) and _phase_fits(u, f, tau, upper)


def cleanup(u, f, taus, previous=None, min_phase_size=0, debug=False):
    """Repair a threshold vector until every cleanup check passes.

    Checks, restarting after each change:
      i)   a phase with at most min_phase_size pixels removes its upper
           threshold (the top phase removes the last threshold);
      ii)  a threshold next to a phase whose mean of f leaves its
           bounding thresholds is replaced by the first of its previous
           neighbours j = i, i-1, i+1 under which both adjacent phases
           fit again, at most once per index;
      iii) a phase whose mean falls outside its bounding thresholds
           (0 and 1 at the ends) removes its upper threshold.

    Returns the cleaned thresholds, strictly increasing.
    """
    u = _as_grid(u)
    f = _as_grid(f)
    taus = np.array(getattr(taus, 'taus', taus), dtype=np.float64, copy=True)
    if previous is not None:
        previous = np.asarray(getattr(previous, 'taus', previous), dtype=np.float64)
    replaced = set()

    while taus.size:
        K = taus.size + 1
        sigmas = _level_sets(u, taus)
        phases = [sigmas[i] & ~sigmas[i + 1] for i in range(K)]
        sizes = [int(np.count_nonzero(phase)) for phase in phases]

        # i) Empty (or too small) phases.
        small = [i for i in range(K) if sizes[i] <= min_phase_size]
        if small:
            drop = min(small[0], K - 2)
            if debug:
                print(f'Cleanup: phase {small[0]} has {sizes[small[0]]} pixels, '
                      f'dropping tau[{drop}]={taus[drop]:.6f}.')
            taus = np.delete(taus, drop)
            continue

        # ii) Repair from the previous iterate.
        if previous is not None and previous.size == taus.size:
            swap = _find_previous_swap(u, f, taus, previous, replaced)
            if swap is not None:
                i, j = swap
                if debug:
                    print(f'Cleanup: tau[{i}]={taus[i]:.6f} replaced by '
                          f'previous tau[{j}]={previous[j]:.6f}.')
                taus[i] = previous[j]
                replaced.add(i)
                continue

        # iii) Interleaving of adjacent pairs, boundaries included.
        bounds = np.concatenate(([0.0], taus, [1.0]))
        means = [float(np.sum(f[phase]) / size) for phase, size in zip(phases, sizes)]
        bad = [i for i in range(K)
               if not (bounds[i] - CLEANUP_TOL <= means[i] <= bounds[i + 1] + CLEANUP_TOL)]
        if bad:
            drop = min(bad[0], K - 2)
            if debug:
                print(f'Cleanup: mean {means[bad[0]]:.6f} of phase {bad[0]} outside '
                      f'[{bounds[bad[0]]:.6f}, {bounds[bad[0] + 1]:.6f}], '
                      f'dropping tau[{drop}]={taus[drop]:.6f}.')
            taus = np.delete(taus, drop)
            continue
        break
    return taus


def _find_previous_swap(u, f, taus, previous, replaced):
    for i in range(taus.size):
        if i in replaced or _threshold_fits(u, f, taus, i, taus[i]):
            continue
        for j in (i, i - 1, i + 1):
            if not 0 <= j < previous.size or previous[j] == taus[i]:
                continue
            if _threshold_fits(u, f, taus, i, previous[j]):
                return i, j
    return None


def sign_sequence(taus_now, taus_prev):
    """Direction of change of each threshold and the number of flips.

    A tied first entry copies the sign of the first entry that moved,
    later tied entries copy their predecessor. The sequence is extended
    by repeating its ends, which adds no flips.
    """
    now = np.asarray(getattr(taus_now, 'taus', taus_now), dtype=np.float64)
    prev = np.asarray(getattr(taus_prev, 'taus', taus_prev), dtype=np.float64)
    if now.shape != prev.shape:
        raise ValueError(f'Threshold vectors differ in length: {now.size} != {prev.size}.')
    diff = now - prev
    moved = np.flatnonzero(diff)
    zeta = np.ones(now.size, dtype=np.int64)
    if moved.size == 0:
        return zeta, 0
    for i in range(now.size):
        if diff[i] != 0:
            zeta[i] = 1 if diff[i] > 0 else -1
        elif i == 0:
            zeta[i] = 1 if diff[moved[0]] > 0 else -1
        else:
            zeta[i] = zeta[i - 1]
    extended = np.concatenate(([zeta[0]], zeta, [zeta[-1]]))
    return zeta, int(np.count_nonzero(extended[1:] != extended[:-1]))


class TrofSegmenter:
    """Segment one image, solving the ROF problem only once.

    The ROF solution is cached so the same image can be segmented with
    several phase counts or initial thresholds.
    """

    def __init__(self, f, rof_params, debug=False):
        if isinstance(f, GrayImage):
            f = f.data
        self.f = _as_grid(f)
        self.rof_params = rof_params
        self.debug = debug
        self.solution = None
        self.rof_seconds = None

    def solve(self):
        if self.solution is None:
            start = time.perf_counter()
            self.solution = solve_rof(self.f, self.rof_params, debug=self.debug)
            self.rof_seconds = time.perf_counter() - start
            if self.debug:
                print(f'ROF solved in {self.solution.iterations} iterations, '
                      f'{self.rof_seconds:.3f} s.')
        return self.solution

    def segment(self, taus0, eps_tau=1e-5, max_outer_iter=100, min_phase_size=0):
        taus0 = ThresholdVector.validated(taus0)
        solution = self.solve()
        u, f = solution.u, self.f

        trace = TrofTrace()
        taus = taus0.taus
        previous = None
        converged = False
        for k in range(max_outer_iter):
            taus = cleanup(u, f, taus, previous, min_phase_size=min_phase_size,
                           debug=self.debug)
            means = phase_means(u, f, taus)
            if previous is not None and previous.size == taus.size:
                zeta, sign_changes = sign_sequence(taus, previous)
                tau_delta = float(np.linalg.norm(taus - previous))
            else:
                zeta, sign_changes = None, None
                tau_delta = float('inf')
            trace.append(TrofIteration(taus=taus, means=means, zeta=zeta,
                                       sign_changes=sign_changes,
                                       phase_count=taus.size + 1,
                                       tau_delta=tau_delta))
            if self.debug:
                print(f'T-ROF iteration {k}: K={taus.size + 1} '
                      f'tau={np.round(taus, 6).tolist()} delta={tau_delta:.3e}')
            if tau_delta <= eps_tau:
                converged = True
                break
            previous = taus
            taus = update_thresholds(means).taus

        self.report_diagnostics(trace, converged, max_outer_iter)
        final_taus = ThresholdVector(trace[-1].taus)
        return TrofResult(partition=partition_from_thresholds(u, final_taus),
                          final_taus=final_taus,
                          final_means=trace[-1].means,
                          u=solution,
                          trace=trace,
                          converged=converged,
                          outer_iterations=len(trace))

    def fixed_threshold_baseline(self, taus0):
        """Threshold u once at the given thresholds, with no updates."""
        taus0 = ThresholdVector.validated(taus0)
        solution = self.solve()
        means = phase_means(solution.u, self.f, taus0)
        trace = TrofTrace([TrofIteration(taus=taus0.taus, means=means, zeta=None,
                                         sign_changes=None,
                                         phase_count=taus0.K,
                                         tau_delta=float('inf'))])
        return TrofResult(partition=partition_from_thresholds(solution.u, taus0),
                          final_taus=taus0,
                          final_means=means,
                          u=solution,
                          trace=trace,
                          converged=True,
                          outer_iterations=1)

    def report_diagnostics(self, trace, converged, max_outer_iter):
        if not converged:
            print(f'WARNING: thresholds did not converge in {max_outer_iter} '
                  f'outer iterations.')
        elif len(trace) > SLOW_CONVERGENCE:
            print(f'WARNING: thresholds needed {len(trace)} outer iterations '
                  f'(more than {SLOW_CONVERGENCE}).')
        violations = trace.interleaving_violations()
        if violations:
            print(f'WARNING: means and thresholds fail to interleave at '
                  f'iterations {violations}.')


def segment(f, params, taus0, debug=False):
    """Run T-ROF on f from the initial thresholds taus0."""
    taus0 = ThresholdVector.validated(taus0)
    if len(taus0) != params.K - 1:
        raise ValueError(f'{params.K - 1} initial thresholds required for '
                         f'K={params.K}, {len(taus0)} provided.')
    segmenter = TrofSegmenter(f, params.rof, debug=debug)
    return segmenter.segment(taus0, eps_tau=params.eps_tau,
                             max_outer_iter=params.max_outer_iter,
                             min_phase_size=params.min_phase_size)
