"""Alternating damped secant search for two near-decoupled error levels.

Both the error-multiplier search and the SPRT endpoint search reduce to
the same problem: drive two achieved error probabilities to nominal
values, where each of two free coordinates mostly controls one error and
the achieved errors are monotone decreasing in their own coordinate on a
log scale.  Steps are secant proposals damped by a step cap, falling back
to bisection whenever a proposal leaves the sign-bracketing interval.
Because plans are discrete the achieved errors are step functions; the
search therefore stops either inside the requested tolerance or when the
bracket collapses to the resolution of the step structure ("stalled").
"""

import math
from dataclasses import dataclass, field

__all__ = ["MatchOutcome", "match_two_axes"]

_RESOLUTION = 1e-11
_BIG_MOVE = 0.15  # other-axis move beyond which brackets are rebuilt


@dataclass
class _Axis:
    value: float
    lo_limit: float
    hi_limit: float
    slope: float = -1.0
    # err is decreasing in value: positive errs live at smaller values
    br_pos: tuple | None = None   # (value, err) with err > 0
    br_neg: tuple | None = None   # (value, err) with err < 0
    prev: tuple | None = None     # last (value, err) along this axis
    stalled: bool = False

    def record(self, value, err):
        if self.prev is not None:
            dv = value - self.prev[0]
            de = err - self.prev[1]
            if abs(dv) > 1e-13 and de / dv < -1e-9:
                self.slope = de / dv
        self.prev = (value, err)
        if err > 0.0 and (self.br_pos is None or value > self.br_pos[0]):
            self.br_pos = (value, err)
        elif err < 0.0 and (self.br_neg is None or value < self.br_neg[0]):
            self.br_neg = (value, err)
        elif err == 0.0:
            self.br_pos = self.br_neg = (value, err)
        # keep the bracket consistent (monotone decreasing err)
        if (self.br_pos is not None and self.br_neg is not None
                and self.br_pos[0] >= self.br_neg[0] and self.br_pos[1] != 0.0):
            if self.br_pos == (value, err):
                self.br_neg = None
            else:
                self.br_pos = None
        if (self.br_pos is not None and self.br_neg is not None
                and self.br_neg[0] - self.br_pos[0] < _RESOLUTION * max(1.0, abs(value))):
            self.stalled = True

    def reset_brackets(self):
        self.br_pos = None
        self.br_neg = None
        self.prev = None
        self.stalled = False

    def propose(self, err, step_cap):
        v = self.value
        step = -err / self.slope
        if not math.isfinite(step):
            step = math.copysign(step_cap, err)
        if abs(step) > step_cap:
            step = math.copysign(step_cap, step)
        cand = v + step
        if self.br_pos is not None and self.br_neg is not None:
            lo, hi = self.br_pos[0], self.br_neg[0]
            if not lo < cand < hi:
                cand = 0.5 * (lo + hi)
        cand = min(max(cand, self.lo_limit), self.hi_limit)
        if cand == v:
            # pinned at a limit or at resolution; nudge toward the bracket
            if self.br_pos is not None and self.br_neg is not None:
                cand = 0.5 * (self.br_pos[0] + self.br_neg[0])
            else:
                cand = min(max(v + math.copysign(1e-3, step), self.lo_limit),
                           self.hi_limit)
            if cand == v:
                self.stalled = True
        return cand


@dataclass
class MatchOutcome:
    x: float
    y: float
    err_x: float
    err_y: float
    evaluations: int
    within_tight: bool
    within_rel: bool
    stalled: bool
    history: list = field(default_factory=list)


def match_two_axes(evaluate, x0, y0, *, rel_tol, tight_tol, max_updates,
                   x_limits, y_limits, step_cap=2.5):
    """Drive evaluate(x, y) -> (err_x, err_y) toward (0, 0).

    Errors are log ratios achieved/nominal; |err| <= log(1 + tol) is the
    convergence test.  Returns the best evaluated point if the update cap
    is reached.
    """
    tight = math.log1p(tight_tol)
    rel = math.log1p(rel_tol)
    memo = {}

    def run(x, y):
        key = (x, y)
        if key not in memo:
            memo[key] = evaluate(x, y)
        return memo[key]

    ax = _Axis(value=x0, lo_limit=x_limits[0], hi_limit=x_limits[1])
    ay = _Axis(value=y0, lo_limit=y_limits[0], hi_limit=y_limits[1])
    ex, ey = run(x0, y0)
    ax.record(x0, ex)
    ay.record(y0, ey)
    updates = 1
    history = [(x0, y0, ex, ey)]
    best = (max(abs(ex), abs(ey)), x0, y0, ex, ey)

    while updates < max_updates:
        need_x = abs(ex) > tight and not ax.stalled
        need_y = abs(ey) > tight and not ay.stalled
        if not need_x and not need_y:
            break
        if need_x and (not need_y or abs(ex) >= abs(ey)):
            axis, other, err = ax, ay, ex
            move_x = True
        else:
            axis, other, err = ay, ax, ey
            move_x = False

        cand = axis.propose(err, step_cap)
        if axis.stalled:
            continue
        moved = abs(cand - axis.value)
        axis.value = cand
        if move_x:
            ex, ey = run(ax.value, ay.value)
            axis.record(ax.value, ex)
        else:
            ex, ey = run(ax.value, ay.value)
            axis.record(ay.value, ey)
        if moved > _BIG_MOVE:
            other.reset_brackets()
        updates += 1
        history.append((ax.value, ay.value, ex, ey))
        score = max(abs(ex), abs(ey))
        if score < best[0]:
            best = (score, ax.value, ay.value, ex, ey)

    # settle on the best point seen
    _, bx, by, bex, bey = best
    return MatchOutcome(
        x=bx, y=by, err_x=bex, err_y=bey,
        evaluations=updates,
        within_tight=max(abs(bex), abs(bey)) <= tight,
        within_rel=max(abs(bex), abs(bey)) <= rel,
        stalled=(ax.stalled and abs(bex) > rel) or (ay.stalled and abs(bey) > rel),
        history=history,
    )
