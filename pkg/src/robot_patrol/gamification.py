"""Points ledger, badges, leaderboard, and helpful-feedback notifications.

Point values are fixed per action: 1 for logging in, 1 for starting a
report, 5 for completing one, 0 for receiving helpful feedback (the
notification itself is the reward). Only registered and maintenance
users accumulate points; guest actions go through unscored so the app
can nudge them to register.

The ledger is append-only. Badges: helper_bronze / helper_silver /
helper_gold at 10 / 50 / 100 lifetime points, trusted_reporter once 5
reports have been confirmed by patrols. Each badge is earned at most
once.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum

from .datastore import Datastore, User

# Re-exported datastore errors are part of this module's surface.
from .datastore import UnknownReport  # noqa: F401


class GamificationError(Exception):
    pass


class GuestNotEligible(GamificationError):
    """Signal, not failure: the action is permitted, it just scores
    nothing. Callers catch this and proceed."""


class NotVerified(GamificationError):
    pass


class Action(str, Enum):
    LOGIN = "LOGIN"
    REPORT_STARTED = "REPORT_STARTED"
    REPORT_COMPLETED = "REPORT_COMPLETED"
    FEEDBACK_HELPFUL = "FEEDBACK_HELPFUL"


ACTION_POINTS = {
    Action.LOGIN: 1,
    Action.REPORT_STARTED: 1,
    Action.REPORT_COMPLETED: 5,
    Action.FEEDBACK_HELPFUL: 0,
}

POINT_BADGES = ((10, "helper_bronze"), (50, "helper_silver"), (100, "helper_gold"))
TRUSTED_REPORTER_AT = 5  # confirmed reports


@dataclass(frozen=True)
class Period:
    """Half-open [start, end) window over ledger timestamps; None = unbounded."""

    start: str | None = None
    end: str | None = None

    @classmethod
    def all_time(cls) -> "Period":
        return cls()

    @classmethod
    def week_of(cls, now: datetime) -> "Period":
        """The ISO calendar week containing `now` (Monday to Monday, UTC)."""
        day = now.astimezone(timezone.utc)
        monday = datetime(day.year, day.month, day.day, tzinfo=timezone.utc)
        monday -= timedelta(days=day.weekday())
        return cls(monday.isoformat(), (monday + timedelta(days=7)).isoformat())


def total_points(store: Datastore, user_id: str, period: Period | None = None) -> int:
    period = period or Period.all_time()
    return sum(r["points"] for r in store.ledger_rows(user_id, period.start, period.end))


def record_action(
    store: Datastore,
    user_id: str,
    action: Action,
    now: datetime,
    ref: int | None = None,
) -> tuple[int, list[str]]:
    """Append one scored action; returns (new total, newly earned badges).

    Raises GuestNotEligible for guest users before anything is written;
    the triggering action itself remains valid.
    """
    action = Action(action)
    user = store.get_user(user_id)
    if user.category == "guest":
        raise GuestNotEligible(f"{user_id} is a guest; register to earn points")
    at = now.isoformat()
    store.ledger_append(user_id, action.value, ACTION_POINTS[action], at, ref)
    total = total_points(store, user_id)
    return total, evaluate_badges(store, user_id, at, total=total)


def evaluate_badges(store: Datastore, user_id: str, at: str,
                    total: int | None = None) -> list[str]:
    """Award any thresholds newly crossed; returns fresh badges only."""
    if total is None:
        total = total_points(store, user_id)
    earned = []
    for threshold, badge in POINT_BADGES:
        if total >= threshold and store.award_badge(user_id, badge, at):
            earned.append(badge)
    if store.get_user(user_id).confirmed_count >= TRUSTED_REPORTER_AT:
        if store.award_badge(user_id, "trusted_reporter", at):
            earned.append("trusted_reporter")
    return earned


def record_feedback(
    store: Datastore, report_id: int, helpful: bool, now: datetime
) -> dict:
    """A route user found a verified report useful (or not).

    The reporter always gets a notification; a helpful mark on an
    eligible reporter also lands in the ledger at 0 points.
    """
    report = store.get_report(report_id)  # UnknownReport if missing
    if report.status != "verified":
        raise NotVerified(f"report {report_id} is {report.status}, not verified")
    at = now.isoformat()
    store.add_notification(report.reporter, report_id, helpful, at)
    if helpful:
        try:
            record_action(store, report.reporter, Action.FEEDBACK_HELPFUL, now, ref=report_id)
        except GuestNotEligible:
            pass
    return {"reporter": report.reporter, "report_id": report_id, "at": at,
            "helpful": helpful}


def leaderboard(
    store: Datastore, top_n: int = 10, period: Period | None = None
) -> list[tuple[User, int]]:
    """Users ranked by period points; ties go to whoever got there first,
    then to the smaller user id. Users without ledger entries in the
    period do not rank."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    period = period or Period.all_time()
    totals: dict[str, int] = {}
    reached_at: dict[str, str] = {}
    first_at: dict[str, str] = {}
    for row in store.ledger_rows(None, period.start, period.end):
        uid = row["user_id"]
        totals[uid] = totals.get(uid, 0) + row["points"]
        first_at.setdefault(uid, row["at"])
        if row["points"] > 0:
            reached_at[uid] = row["at"]
    ranked = sorted(
        totals,
        key=lambda uid: (-totals[uid], reached_at.get(uid, first_at[uid]), uid),
    )
    return [(store.get_user(uid), totals[uid]) for uid in ranked[:top_n]]


def period_winner(
    store: Datastore, period: Period | None = None
) -> tuple[User, int] | None:
    top = leaderboard(store, 1, period)
    return top[0] if top else None
