"""Exact divergence computations on finite joint distributions.

Everything here operates on explicit probability tables over a finite
``X x Y`` grid, so total variation, KL, pushforward laws, and the
marginal/conditional decomposition bounds can all be evaluated exactly
(up to float rounding) and certified against each other:

* ``decompose`` splits the joint TV into a marginal part and an expected
  conditional part and reports the resulting sandwich
  ``|TV_X - E TV_cond| <= TV_joint <= TV_X + E TV_cond`` together with the
  KL-based upper bound ``sqrt(KL_X/2) + sqrt(E KL_cond / 2)``.
* ``dpi_check`` verifies that post-processing through any channel cannot
  increase TV between the induced output laws.
* ``dominance_probe`` evaluates the coefficient
  ``c(alpha, beta) = log(beta/alpha) / (1 + log(beta/alpha))`` built from
  the conditional likelihood-ratio range, and compares the exact TV of the
  scalar log-joint channel against ``sqrt(max(0, c*KL_X - KL_cond)/2)``.

Conventions: conditionals at marginal-zero points contribute 0 to
expectations taken under the first argument's marginal.  Where the second
distribution has zero marginal mass but the first does not, the conditional
KL term is reported as ``inf`` and the conditional TV term uses a uniform
placeholder row, which keeps every reported bound valid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnboundedRatioError, ValidationError

MASS_TOL = 1e-9
_GROUP_ATOL = 1e-9


@dataclass(frozen=True)
class DiscreteJoint:
    """A full joint probability table over ``x_size * y_size`` atoms."""

    table: np.ndarray
    x_size: int
    y_size: int

    def __post_init__(self) -> None:
        t = self.table
        if t.shape != (self.x_size, self.y_size):
            raise ValidationError(f"table shape {t.shape} != ({self.x_size}, {self.y_size})")
        if not np.isfinite(t).all() or t.min() < 0:
            raise ValidationError("table entries must be finite and nonnegative")
        if abs(float(t.sum()) - 1.0) > 1e-12:
            raise ValidationError(f"table mass {t.sum()!r} != 1")

    @classmethod
    def from_array(cls, table) -> "DiscreteJoint":
        t = np.asarray(table, dtype=np.float64)
        if t.ndim != 2:
            raise ValidationError("joint table must be 2-D")
        return cls(table=t, x_size=t.shape[0], y_size=t.shape[1])

    def marginal_x(self) -> np.ndarray:
        return self.table.sum(axis=1)

    def conditional(self, x: int) -> np.ndarray:
        px = float(self.table[x].sum())
        if px <= 0.0:
            raise ValidationError(f"conditional undefined at x={x} (zero marginal)")
        return self.table[x] / px


@dataclass(frozen=True)
class ScoreChannel:
    """A deterministic map from (x, y) atoms to a finite outcome set."""

    outcomes: np.ndarray
    outcome_size: int

    def __post_init__(self) -> None:
        o = self.outcomes
        if o.ndim != 2 or o.dtype.kind not in "iu":
            raise ValidationError("outcomes must be a 2-D integer array")
        if o.size and (o.min() < 0 or o.max() >= self.outcome_size):
            raise ValidationError("outcome indices out of range")

    @classmethod
    def from_function(cls, fn, x_size: int, y_size: int) -> "ScoreChannel":
        out = np.empty((x_size, y_size), dtype=np.int64)
        for x in range(x_size):
            for y in range(y_size):
                out[x, y] = fn(x, y)
        return cls(outcomes=out, outcome_size=int(out.max()) + 1 if out.size else 0)


@dataclass(frozen=True)
class BoundsReport:
    """One decomposition instance; the inequality chain is the certificate."""

    tv_joint: float
    tv_marginal: float
    exp_cond_tv: float
    kl_x: float
    exp_kl_cond: float
    lower: float
    upper: float
    pinsker_upper: float


@dataclass(frozen=True)
class DominanceReport:
    kl_x: float
    exp_kl_cond: float
    alpha: float
    beta: float
    c: float
    condition_holds: bool
    adv_scalar_joint_lb: float
    adv_cond_ub: float
    tv_scalar_joint: float


def _check_mass_vector(v, name: str) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise ValidationError(f"{name} must be a nonempty vector")
    if not np.isfinite(a).all() or a.min() < 0:
        raise ValidationError(f"{name} entries must be finite and nonnegative")
    if abs(float(a.sum()) - 1.0) > MASS_TOL:
        raise ValidationError(f"{name} mass {a.sum()!r} != 1")
    return a


def tv(p, q) -> float:
    """Total variation distance ``0.5 * sum |p_i - q_i|``."""
    pa, qa = _check_mass_vector(p, "p"), _check_mass_vector(q, "q")
    if pa.size != qa.size:
        raise ValidationError("mass vectors must have equal length")
    return 0.5 * float(np.abs(pa - qa).sum())


def kl(p, q) -> float:
    """``sum p_i log(p_i/q_i)`` with 0 log(0/q) = 0; inf where q vanishes under p."""
    pa, qa = _check_mass_vector(p, "p"), _check_mass_vector(q, "q")
    if pa.size != qa.size:
        raise ValidationError("mass vectors must have equal length")
    support = pa > 0.0
    if np.any(qa[support] == 0.0):
        return math.inf
    # KL >= 0; rounding can leave a tiny negative residue when p ~ q
    return max(0.0, float(np.sum(pa[support] * np.log(pa[support] / qa[support]))))


def decompose(joint_p: DiscreteJoint, joint_q: DiscreteJoint) -> BoundsReport:
    """Exact TV/KL decomposition of a joint pair into marginal and conditional parts."""
    if (joint_p.x_size, joint_p.y_size) != (joint_q.x_size, joint_q.y_size):
        raise ValidationError("joint tables must have matching shapes")
    P, Q = joint_p.table, joint_q.table
    px, qx = joint_p.marginal_x(), joint_q.marginal_x()

    tv_joint = 0.5 * float(np.abs(P - Q).sum())
    tv_marginal = 0.5 * float(np.abs(px - qx).sum())
    kl_x = kl(px, qx)

    exp_cond_tv = 0.0
    exp_kl_cond = 0.0
    uniform = np.full(joint_p.y_size, 1.0 / joint_p.y_size)
    for x in range(joint_p.x_size):
        if px[x] <= 0.0:
            continue
        p_cond = P[x] / px[x]
        if qx[x] <= 0.0:
            exp_cond_tv += px[x] * 0.5 * float(np.abs(p_cond - uniform).sum())
            exp_kl_cond = math.inf
            continue
        q_cond = Q[x] / qx[x]
        exp_cond_tv += px[x] * 0.5 * float(np.abs(p_cond - q_cond).sum())
        if exp_kl_cond != math.inf:
            support = p_cond > 0.0
            if np.any(q_cond[support] == 0.0):
                exp_kl_cond = math.inf
            else:
                term = float(
                    np.sum(p_cond[support] * np.log(p_cond[support] / q_cond[support]))
                )
                exp_kl_cond += px[x] * max(0.0, term)

    pinsker_upper = math.sqrt(kl_x / 2.0) + math.sqrt(exp_kl_cond / 2.0) \
        if math.isfinite(kl_x) and math.isfinite(exp_kl_cond) else math.inf
    return BoundsReport(
        tv_joint=tv_joint,
        tv_marginal=tv_marginal,
        exp_cond_tv=exp_cond_tv,
        kl_x=kl_x,
        exp_kl_cond=exp_kl_cond,
        lower=abs(tv_marginal - exp_cond_tv),
        upper=tv_marginal + exp_cond_tv,
        pinsker_upper=pinsker_upper,
    )


def pushforward(joint: DiscreteJoint, channel: ScoreChannel) -> np.ndarray:
    """Outcome law induced by mapping every (x, y) atom through the channel."""
    if channel.outcomes.shape != joint.table.shape:
        raise ValidationError("channel does not cover the joint's index set")
    out = np.bincount(
        channel.outcomes.ravel(), weights=joint.table.ravel(), minlength=channel.outcome_size
    )
    total = float(out.sum())
    return out / total


def dpi_check(
    joint_p: DiscreteJoint, joint_q: DiscreteJoint, channel: ScoreChannel
) -> tuple[float, float]:
    """(TV before, TV after) the channel; post-processing cannot increase TV."""
    tv_before = 0.5 * float(np.abs(joint_p.table - joint_q.table).sum())
    tv_after = tv(pushforward(joint_p, channel), pushforward(joint_q, channel))
    if tv_after > tv_before + 1e-12:
        raise AssertionError(
            f"data-processing violated: {tv_after} > {tv_before}"
        )
    return tv_before, tv_after


def c_coeff(alpha: float, beta: float) -> float:
    """``log(beta/alpha) / (1 + log(beta/alpha))``; zero exactly when alpha == beta."""
    if not (np.isfinite(alpha) and np.isfinite(beta)):
        raise ValidationError("alpha and beta must be finite")
    if alpha <= 0.0 or alpha > beta:
        raise ValidationError(f"need 0 < alpha <= beta, got ({alpha!r}, {beta!r})")
    gap = math.log(beta) - math.log(alpha)
    return gap / (1.0 + gap)


def lr_constants(joint_p: DiscreteJoint, joint_q: DiscreteJoint) -> tuple[float, float]:
    """(min, max) of the conditional ratio ``P(y|x)/Q(y|x)`` over supported x."""
    if (joint_p.x_size, joint_p.y_size) != (joint_q.x_size, joint_q.y_size):
        raise ValidationError("joint tables must have matching shapes")
    px, qx = joint_p.marginal_x(), joint_q.marginal_x()
    lo, hi = math.inf, -math.inf
    for x in range(joint_p.x_size):
        if px[x] <= 0.0:
            continue
        if qx[x] <= 0.0:
            raise UnboundedRatioError(f"Q has no mass at supported x={x}")
        p_cond = joint_p.table[x] / px[x]
        q_cond = joint_q.table[x] / qx[x]
        for y in range(joint_p.y_size):
            if q_cond[y] == 0.0:
                if p_cond[y] > 0.0:
                    raise UnboundedRatioError(
                        f"conditional ratio unbounded at (x={x}, y={y})"
                    )
                continue  # 0/0: no constraint
            r = p_cond[y] / q_cond[y]
            lo, hi = min(lo, r), max(hi, r)
    if not math.isfinite(lo) or not math.isfinite(hi):
        raise UnboundedRatioError("no supported (x, y) pairs with defined ratios")
    return lo, hi


def scalar_log_joint_channel(joint: DiscreteJoint, atol: float = _GROUP_ATOL) -> ScoreChannel:
    """Channel collapsing (x, y) atoms whose model log-joint values coincide.

    Zero-probability atoms all score ``-inf`` and share one outcome.
    """
    flat = joint.table.ravel()
    outcomes = np.full(flat.size, -1, dtype=np.int64)
    next_id = 0
    zero = flat == 0.0
    if zero.any():
        outcomes[zero] = next_id
        next_id += 1
    finite_idx = np.nonzero(~zero)[0]
    logs = np.log(flat[finite_idx])
    order = np.argsort(logs, kind="mergesort")
    prev = None
    for pos in order:
        v = logs[pos]
        if prev is None or v - prev > atol:
            group = next_id
            next_id += 1
        outcomes[finite_idx[pos]] = group
        prev = v
    return ScoreChannel(
        outcomes=outcomes.reshape(joint.table.shape), outcome_size=next_id
    )


def scalar_conditional_channel(joint: DiscreteJoint, atol: float = _GROUP_ATOL) -> ScoreChannel:
    """Channel exposing the scalar conditional probability ``p(y|x)`` of the
    sampled pair; atoms with matching values coincide.  Undefined rows
    (zero marginal) share one outcome."""
    px = joint.marginal_x()
    vals = np.empty_like(joint.table)
    for x in range(joint.x_size):
        vals[x] = joint.table[x] / px[x] if px[x] > 0.0 else -1.0
    flat = vals.ravel()
    order = np.argsort(flat, kind="mergesort")
    outcomes = np.empty(flat.size, dtype=np.int64)
    next_id = 0
    prev = None
    for pos in order:
        v = flat[pos]
        if prev is None or v - prev > atol:
            next_id += 1
        outcomes[pos] = next_id - 1
        prev = v
    return ScoreChannel(outcomes=outcomes.reshape(joint.table.shape), outcome_size=next_id)


def _group_rows(rows: np.ndarray, atol: float) -> tuple[np.ndarray, int]:
    reps: list[np.ndarray] = []
    labels = np.empty(rows.shape[0], dtype=np.int64)
    for i, row in enumerate(rows):
        for j, rep in enumerate(reps):
            if np.allclose(row, rep, rtol=0.0, atol=atol):
                labels[i] = j
                break
        else:
            labels[i] = len(reps)
            reps.append(row)
    return labels, len(reps)


def log_joint_vector_channel(joint: DiscreteJoint, atol: float = _GROUP_ATOL) -> ScoreChannel:
    """Channel exposing the full per-class log-joint vector (a function of x).

    Two x atoms share an outcome only when their whole log rows coincide.
    """
    with np.errstate(divide="ignore"):
        rows = np.log(joint.table)
    labels, size = _group_rows(rows, atol)
    outcomes = np.repeat(labels[:, None], joint.y_size, axis=1)
    return ScoreChannel(outcomes=outcomes, outcome_size=size)


def softmax_channel(joint: DiscreteJoint, atol: float = _GROUP_ATOL) -> ScoreChannel:
    """Channel exposing the posterior row: log rows equal up to an additive
    shift collapse to the same outcome (the per-x normalizer is discarded)."""
    px = joint.marginal_x()
    rows = np.empty_like(joint.table)
    for x in range(joint.x_size):
        rows[x] = joint.table[x] / px[x] if px[x] > 0.0 else np.full(joint.y_size, -1.0)
    labels, size = _group_rows(rows, atol)
    outcomes = np.repeat(labels[:, None], joint.y_size, axis=1)
    return ScoreChannel(outcomes=outcomes, outcome_size=size)


def identity_channel(x_size: int, y_size: int) -> ScoreChannel:
    return ScoreChannel(
        outcomes=np.arange(x_size * y_size, dtype=np.int64).reshape(x_size, y_size),
        outcome_size=x_size * y_size,
    )


def constant_channel(x_size: int, y_size: int) -> ScoreChannel:
    return ScoreChannel(outcomes=np.zeros((x_size, y_size), dtype=np.int64), outcome_size=1)


def dominance_probe(joint_p: DiscreteJoint, joint_q: DiscreteJoint) -> DominanceReport:
    """Evaluate the scalar-joint dominance condition and both advantage bounds.

    ``condition_holds`` is ``c * KL_X > KL_cond``; when it does, the exact TV
    of the scalar log-joint channel is expected to clear
    ``sqrt(max(0, c*KL_X - KL_cond) / 2)`` while the conditional channel is
    capped by ``sqrt(KL_X/2) + sqrt(KL_cond/2)``.
    """
    alpha, beta = lr_constants(joint_p, joint_q)
    report = decompose(joint_p, joint_q)
    c = c_coeff(alpha, beta)
    gap = c * report.kl_x - report.exp_kl_cond
    channel = scalar_log_joint_channel(joint_p)
    tv_scalar = tv(pushforward(joint_p, channel), pushforward(joint_q, channel))
    adv_cond_ub = (
        math.sqrt(report.kl_x / 2.0) + math.sqrt(report.exp_kl_cond / 2.0)
        if math.isfinite(report.kl_x) and math.isfinite(report.exp_kl_cond)
        else math.inf
    )
    return DominanceReport(
        kl_x=report.kl_x,
        exp_kl_cond=report.exp_kl_cond,
        alpha=alpha,
        beta=beta,
        c=c,
        condition_holds=bool(gap > 0.0),
        adv_scalar_joint_lb=math.sqrt(max(0.0, gap) / 2.0) if math.isfinite(gap) else math.inf,
        adv_cond_ub=adv_cond_ub,
        tv_scalar_joint=tv_scalar,
    )


def sample_dirichlet_joint(rng: np.random.Generator, x_size: int, y_size: int) -> DiscreteJoint:
    """Flat-Dirichlet random table: full support almost surely."""
    flat = rng.dirichlet(np.ones(x_size * y_size))
    return DiscreteJoint.from_array(flat.reshape(x_size, y_size))


def matched_normalizer_pair(
    rng: np.random.Generator, group_sizes: tuple[int, ...] = (3, 2, 1), y_size: int = 4
) -> tuple[DiscreteJoint, DiscreteJoint]:
    """A pair built so the softmax quotient loses nothing.

    Within each group the target's rows are proportional (same posterior,
    different normalizer) and the shadow keeps a constant marginal ratio, so
    collapsing the normalizer changes neither induced TV.
    """
    x_size = sum(group_sizes)
    p = np.empty((x_size, y_size))
    px = rng.dirichlet(np.ones(x_size))
    q_ratio = np.empty(x_size)
    x = 0
    for g, size in enumerate(group_sizes):
        base = rng.dirichlet(np.ones(y_size))
        ratio = rng.uniform(0.25, 4.0)
        for _ in range(size):
            p[x] = px[x] * base
            q_ratio[x] = ratio
            x += 1
    qx = px * q_ratio
    qx /= qx.sum()
    q = qx[:, None] * rng.dirichlet(np.ones(y_size), size=x_size)
    return (
        DiscreteJoint.from_array(p / p.sum()),
        DiscreteJoint.from_array(q / q.sum()),
    )


def marginal_skew_pair(
    rng: np.random.Generator, x_size: int, y_size: int, delta: float = 0.05
) -> tuple[DiscreteJoint, DiscreteJoint]:
    """A pair with nearly matched conditionals but independent marginals.

    Small ``delta`` keeps the conditional likelihood ratios inside
    ``[1/(1+delta), 1/(1-delta)]`` so the marginal term can dominate.
    """
    if not 0.0 <= delta < 1.0:
        raise ValidationError(f"delta must lie in [0, 1), got {delta!r}")
    cond = rng.dirichlet(np.ones(y_size), size=x_size)
    px = rng.dirichlet(np.ones(x_size))
    qx = rng.dirichlet(np.ones(x_size))
    perturbed = cond * (1.0 + delta * rng.uniform(-1.0, 1.0, size=cond.shape))
    perturbed /= perturbed.sum(axis=1, keepdims=True)
    p = px[:, None] * cond
    q = qx[:, None] * perturbed
    return (
        DiscreteJoint.from_array(p / p.sum()),
        DiscreteJoint.from_array(q / q.sum()),
    )


def certify_bounds(
    trials: int, x_size: int, y_size: int, seed: int = 0
) -> tuple[list[BoundsReport], int]:
    """Run the randomized certification and count violated inequalities.

    Each Dirichlet-random pair must satisfy the sandwich, the KL-based upper
    bound, and the data-processing check for the softmax quotient against
    the full log-joint vector channel; the expected violation count is 0.
    """
    if trials < 0:
        raise ValidationError(f"trials must be nonnegative, got {trials}")
    if x_size < 2 or y_size < 2:
        raise ValidationError("need at least 2 atoms on each axis")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(7,)))
    tol = 1e-12
    reports: list[BoundsReport] = []
    violations = 0
    for _ in range(trials):
        jp = sample_dirichlet_joint(rng, x_size, y_size)
        jq = sample_dirichlet_joint(rng, x_size, y_size)
        rep = decompose(jp, jq)
        reports.append(rep)
        ok = rep.lower <= rep.tv_joint + tol and rep.tv_joint <= rep.upper + tol
        if math.isfinite(rep.pinsker_upper):
            ok = ok and rep.tv_joint <= rep.pinsker_upper + tol
            ok = ok and rep.upper <= rep.pinsker_upper + tol
        tv_vec = tv(
            pushforward(jp, log_joint_vector_channel(jp)),
            pushforward(jq, log_joint_vector_channel(jp)),
        )
        tv_soft = tv(
            pushforward(jp, softmax_channel(jp)),
            pushforward(jq, softmax_channel(jp)),
        )
        ok = ok and tv_soft <= tv_vec + tol
        probe = dominance_probe(jp, jq)
        if probe.condition_holds:
            ok = ok and probe.tv_scalar_joint >= probe.adv_scalar_joint_lb - tol
        if not ok:
            violations += 1
    return reports, violations
