#!/usr/bin/env python3
"""Regenerates the bundled sample data under data/.

  data/mind_fixture/  news.tsv + behaviors.tsv in MIND format (100 impressions)
  data/demo/          impressions.jsonl for one user and a 20-item feed.json
"""

import argparse
import json
import random
from datetime import datetime, timedelta
from pathlib import Path

TOPICS = {
    "sports": ["football", "basketball", "tennis", "marathon", "cycling"],
    "finance": ["stocks", "mortgage", "inflation", "savings", "crypto"],
    "food": ["cooking", "baking", "coffee", "noodles", "vegetarian"],
    "science": ["astronomy", "genetics", "climate", "robotics", "vaccines"],
    "travel": ["hiking", "airlines", "islands", "museums", "railways"],
    "entertainment": ["movies", "concerts", "celebrity", "gaming", "podcasts"],
}
FRAMES = [
    "Why is {a} suddenly everywhere",
    "How should beginners approach {a} and {b}",
    "What surprised you most about {a}",
    "Is {a} worth the hype compared with {b}",
    "Lessons learned from ten years of {a}",
    "The hidden costs of {a}",
]


def make_title(rng, category):
    words = TOPICS[category]
    a, b = rng.sample(words, 2)
    return rng.choice(FRAMES).format(a=a, b=b)


def mind_fixture(out: Path, seed: int) -> None:
    rng = random.Random(seed)
    news = []
    for i in range(1, 241):
        category = rng.choice(sorted(TOPICS))
        title = make_title(rng, category)
        news.append((f"N{i}", category, category + "-general", title, f"A short article: {title.lower()}.",
                     f"https://example.org/news/N{i}", "[]", "[]"))
    ids = [n[0] for n in news]
    users = [f"U{i}" for i in range(1, 13)]
    start = datetime(2019, 11, 11, 0, 0, 0)
    rows = []
    for imp in range(1, 101):
        user = rng.choice(users)
        when = start + timedelta(minutes=37 * imp + rng.randint(0, 30))
        hour = when.hour % 12 or 12
        ampm = "AM" if when.hour < 12 else "PM"
        stamp = f"{when.month}/{when.day}/{when.year} {hour}:{when.minute:02d}:{when.second:02d} {ampm}"
        shown = rng.sample(ids, rng.randint(6, 12))
        clicks = set(rng.sample(range(len(shown)), rng.choice([1, 1, 1, 2])))
        history = " ".join(rng.sample(ids, rng.randint(0, 5)))
        cells = " ".join(f"{n}-{1 if k in clicks else 0}" for k, n in enumerate(shown))
        rows.append((str(imp), user, stamp, history, cells))
    out.mkdir(parents=True, exist_ok=True)
    (out / "news.tsv").write_text("".join("\t".join(n) + "\n" for n in news))
    (out / "behaviors.tsv").write_text("".join("\t".join(r) + "\n" for r in rows))


def demo(out: Path, seed: int) -> None:
    rng = random.Random(seed)
    liked = {"science", "food"}
    base = 1_700_000_000_000
    lines = []
    counter = 0
    for imp in range(1, 51):
        displayed = []
        for _ in range(6):
            counter += 1
            category = rng.choice(sorted(TOPICS))
            item = {"id": f"d{counter}", "title": make_title(rng, category),
                    "summary": f"A discussion in {category}.", "category": category}
            displayed.append({"item": item, "clicked": category in liked and rng.random() < 0.7})
        lines.append(json.dumps({"impression_id": f"demo-{imp}", "user_id": "demo-user",
                                 "timestamp": base + imp * 3_600_000, "displayed": displayed}))
    feed = []
    for i in range(1, 21):
        category = sorted(TOPICS)[i % len(TOPICS)]
        feed.append({"id": f"f{i}", "title": make_title(rng, category),
                     "summary": f"A discussion in {category}.", "category": category})
    out.mkdir(parents=True, exist_ok=True)
    (out / "impressions.jsonl").write_text("\n".join(lines) + "\n")
    (out / "feed.json").write_text(json.dumps({"items": feed}, indent=2) + "\n")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()
    mind_fixture(args.data_dir / "mind_fixture", args.seed)
    demo(args.data_dir / "demo", args.seed)


if __name__ == "__main__":
    main()
