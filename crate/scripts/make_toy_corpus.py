"""Generate data/toy/toy_corpus.csv: 300 synthetic tweets in the public
dataset layout (unnamed index, count, hate_speech, offensive_language,
neither, class, tweet). Each class draws its keywords from its own invented
vocabulary, so the classes are separable by construction; shared filler
words, mentions, URLs, hashtags and retweet markers add realistic noise."""
import csv
import pathlib
import random

rng = random.Random(300)
OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "toy" / "toy_corpus.csv"

KEYWORDS = {
    0: ["vorpak", "skrell", "grommish", "zubbler", "threx", "kazzik", "morvul", "drenth"],
    1: ["blorf", "snazzle", "frump", "wonkle", "glib", "plonker", "scrumb", "twizzle"],
    2: ["sunny", "garden", "coffee", "concert", "library", "picnic", "bicycle", "recipe"],
}
FILLER = ["just", "the", "this", "is", "so", "really", "my", "you", "and", "that", "what", "today",
          "lol", "people", "always", "never", "going", "back", "again", "when", "they", "we"]
SIZES = {0: 60, 1: 150, 2: 90}


def votes(label):
    """Coder counts with a strict majority for `label`."""
    n = rng.choice([3, 3, 3, 3, 4, 6])
    counts = [0, 0, 0]
    majority = n // 2 + 1 if rng.random() < 0.5 else n
    counts[label] = majority
    for _ in range(n - majority):
        counts[rng.choice([c for c in range(3) if c != label])] += 1
    return n, counts


def tweet(label):
    words = [rng.choice(KEYWORDS[label]) for _ in range(rng.randint(2, 4))]
    words += [rng.choice(FILLER) for _ in range(rng.randint(3, 7))]
    rng.shuffle(words)
    if rng.random() < 0.3:
        words[0] = words[0].upper()
    text = " ".join(words)
    if rng.random() < 0.3:
        text = "@user%d %s" % (rng.randint(1, 40), text)
    if rng.random() < 0.2:
        text = "RT " + text
    if rng.random() < 0.2:
        text += " http://t.co/%05d" % rng.randint(0, 99999)
    if rng.random() < 0.2:
        text += " #" + rng.choice(["mood", "weekend", "facts", "tbt"])
    if rng.random() < 0.3:
        text += rng.choice(["!", "!!", "?", "..."])
    return text


def main():
    rows = []
    for label, size in SIZES.items():
        for _ in range(size):
            n, counts = votes(label)
            rows.append((n, counts, label, tweet(label)))
    rng.shuffle(rows)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["", "count", "hate_speech", "offensive_language", "neither", "class", "tweet"])
        for i, (n, counts, label, text) in enumerate(rows):
            w.writerow([i, n, *counts, label, text])
    print(f"wrote {len(rows)} rows to {OUT}")


if __name__ == "__main__":
    main()
