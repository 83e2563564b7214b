"""Deliberately naive re-implementations used as test oracles."""

from __future__ import annotations

from datetime import datetime
from fractions import Fraction


def brute_sessionize(rows, break_s, terminal="zero"):
    """rows: (learner, iso timestamp, event_type, ref, source, line_no) tuples in any order.

    Splits each learner's stream into sessions first, then assigns dwell inside
    each session. Works on datetimes rather than integer ms.
    """
    out = []
    by_learner = {}
    for row in rows:
        by_learner.setdefault(row[0], []).append(row)
    for learner in sorted(by_learner):
        items = [(datetime.fromisoformat(r[1].replace("Z", "+00:00")), r) for r in by_learner[learner]]
        items.sort(key=lambda p: (p[0], p[1][2], p[1][3] or "", p[1][4], p[1][5]))
        deduped = []
        for t, r in items:
            if deduped and deduped[-1][0] == t and deduped[-1][1][2] == r[2] and deduped[-1][1][3] == r[3]:
                continue
            deduped.append((t, r))
        sessions = []
        for t, r in deduped:
            if sessions and (t - sessions[-1][-1][0]).total_seconds() <= break_s:
                sessions[-1].append((t, r))
            else:
                sessions.append([(t, r)])
        for session in sessions:
            for k, (t, r) in enumerate(session):
                if k + 1 < len(session):
                    dwell = session[k + 1][0] - t
                    dwell_ms = (dwell.days * 86_400_000 + dwell.seconds * 1000
                                + dwell.microseconds // 1000)
                else:
                    dwell_ms = round(break_s * 1000) if terminal == "cap" else 0
                out.append((learner, r[3], _ms(t), dwell_ms))
    return out


def _ms(t: datetime) -> int:
    delta = t - datetime(1970, 1, 1, tzinfo=t.tzinfo)
    return delta.days * 86_400_000 + delta.seconds * 1000 + delta.microseconds // 1000


def brute_lo_grades(rows, tag_rows, parent_of, sequentials):
    """Nested-loop join: for each learner, each LO, scan every grade row and every
    tag row to decide whether the row counts toward the LO."""
    learners = sorted({r[0] for r in rows})
    los = sorted({c for _, codes in tag_rows for c in codes})

    def under(module, seq):
        while module is not None:
            if module == seq:
                return True
            module = parent_of.get(module)
        return False

    result = {}
    for learner in learners:
        for lo in los:
            # exact rational sums, rounded once at the end
            earned = possible = Fraction(0)
            hit = False
            for (lrn, seq, e, p) in rows:
                if lrn != learner or p <= 0:
                    continue
                own = [codes for mid, codes in tag_rows if mid == seq]
                if own:
                    counts = lo in own[0]
                else:
                    counts = any(lo in codes and under(mid, seq) and mid != seq
                                 for mid, codes in tag_rows)
                if counts:
                    earned += Fraction(e)
                    possible += Fraction(p)
                    hit = True
            if hit and possible > 0:
                result[(learner, lo)] = (float(earned), float(possible))
    return result


def sorted_box(values, k=1.5):
    """Box statistics straight off a sorted list."""
    s = sorted(values)
    n = len(s)

    def q(p):
        h = (n - 1) * p
        lo = int(h)
        hi = min(lo + 1, n - 1)
        return s[lo] + (h - lo) * (s[hi] - s[lo])

    q1, med, q3 = q(0.25), q(0.5), q(0.75)
    iqr = q3 - q1
    low_fence, high_fence = q1 - k * iqr, q3 + k * iqr
    inside = [v for v in s if low_fence <= v <= high_fence]
    return dict(n=n, min=s[0], q1=q1, median=med, q3=q3, max=s[-1],
                # whiskers never retract inside the box
                lower_whisker=min(min(inside), q1), upper_whisker=max(max(inside), q3),
                outliers=[v for v in s if v < low_fence or v > high_fence])
