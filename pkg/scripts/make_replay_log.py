#!/usr/bin/env python3
"""Generate the synthetic interaction replay log shipped under fixtures/.

The log is constructed so the aggregate metrics come out exact:

  sessions            700
  users               250   -> sessions_per_user    = 700/250  = 2.8
  query tokens        1442  -> avg_query_length     = 1442/700 = 2.06
                               (658 two-token + 42 three-token queries)
  articles tab views  3052  -> per session            3052/700 = 4.36
  connections views   2247  ->                        2247/700 = 3.21
  companies views     1848  ->                        1848/700 = 2.64
  officers views       553  ->                         553/700 = 0.79
  clickthroughs        448  ->                         448/700 = 0.64

700 is the smallest session count for which every one of those ratios is
an integer count: the view rates need a multiple of 100 (3.21, 0.79) or
25 (4.36, 2.64, 0.64) and the user ratio needs a multiple of 14.

Counts are spread across sessions round-robin: with total T = b*700 + r,
sessions 0..r-1 get b+1 events and the rest get b. Session i belongs to
user u{i % 250}.
"""

import json
from pathlib import Path

SESSIONS = 700
USERS = 250

ARTICLE_VIEWS = 3052
CONNECTION_VIEWS = 2247
COMPANY_VIEWS = 1848
OFFICER_VIEWS = 553
CLICKTHROUGHS = 448
THREE_TOKEN_QUERIES = 42  # remaining 658 queries carry two tokens


def spread(total: int, sessions: int = SESSIONS) -> list[int]:
    base, extra = divmod(total, sessions)
    return [base + (1 if i < extra else 0) for i in range(sessions)]


def main() -> None:
    out_dir = Path(__file__).resolve().parent.parent / "fixtures"
    articles = spread(ARTICLE_VIEWS)
    connections = spread(CONNECTION_VIEWS)
    companies = spread(COMPANY_VIEWS)
    officers = spread(OFFICER_VIEWS)
    clicks = spread(CLICKTHROUGHS)

    events = []
    users = {}
    tick = 0

    def stamp() -> str:
        nonlocal tick
        tick += 1
        minutes, sec = divmod(tick, 60)
        hours, minute = divmod(minutes, 60)
        day, hour = divmod(hours, 24)
        return f"2021-06-{4 + day:02d}T{hour:02d}:{minute:02d}:{sec:02d}Z"

    for i in range(SESSIONS):
        sid = f"s{i:04d}"
        users[sid] = f"u{i % USERS:03d}"
        text = f"topic{i:04d} budget review" if i < THREE_TOKEN_QUERIES else f"topic{i:04d} update"
        events.append({"session": sid, "kind": "query", "timestamp": stamp(), "payload": {"text": text}})
        for tab, count in (
            ("articles", articles[i]),
            ("connections", connections[i]),
            ("companies", companies[i]),
            ("officers", officers[i]),
        ):
            for _ in range(count):
                events.append(
                    {"session": sid, "kind": "tab_view", "timestamp": stamp(), "payload": {"tab": tab}}
                )
        for j in range(clicks[i]):
            events.append(
                {
                    "session": sid,
                    "kind": "clickthrough",
                    "timestamp": stamp(),
                    "payload": {"doc_id": f"doc-{i:04d}-{j}"},
                }
            )

    log_path = out_dir / "replay_log.jsonl"
    with log_path.open("w", encoding="utf-8") as fh:
        for event in events:
            fh.write(json.dumps(event) + "\n")
    users_path = out_dir / "replay_users.json"
    users_path.write_text(json.dumps(users, indent=0) + "\n", encoding="utf-8")
    print(f"wrote {len(events)} events to {log_path}")
    print(f"wrote {len(users)} session-user pairs to {users_path}")


if __name__ == "__main__":
    main()
