"""Generate the bundled mini-treebank: 500 Penn-tagged sentences from a small
hand-written grammar with deliberately ambiguous words (bark, run, like, that,
love, hate, fast, back, ...). Output is CoNLL-style `word TAB tag`, blank line
between sentences. Released with the repository under its license."""
import pathlib
import random

rng = random.Random(2017)
OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "treebank" / "mini_treebank.conll"

DT = ["the", "a", "this", "that", "every", "some", "no"]
DT_PL = ["the", "these", "those", "some", "all", "no"]
NN = ["dog", "cat", "game", "phone", "song", "team", "bird", "car", "city", "friend", "movie",
      "run", "love", "hate", "bark", "talk", "play", "walk", "house", "school", "coach", "rapper",
      "weekend", "party", "lyric", "video", "story", "joke", "fight", "kid", "man", "woman"]
NNS = ["dogs", "cats", "games", "phones", "songs", "teams", "birds", "cars", "cities", "friends",
       "movies", "kids", "people", "fans", "haters", "lyrics", "videos", "stories", "jokes", "men",
       "women", "players", "coaches", "tweets", "runs", "talks", "plays", "walks"]
NNP = ["monday", "lebron", "chicago", "twitter", "texas", "kendrick", "sunday", "obama", "london"]
PRP_SG = ["he", "she", "it"]
PRP_PL = ["they", "we", "you", "i"]
PRP_OBJ = ["him", "her", "them", "us", "me", "it"]
PRPS = ["my", "his", "her", "their", "our", "your"]
JJ = ["good", "bad", "stupid", "funny", "fast", "big", "little", "new", "old", "crazy", "real",
      "loyal", "happy", "sad", "ugly", "nice", "dumb", "great", "back", "last", "whole"]
VB = ["bark", "run", "play", "talk", "walk", "love", "hate", "like", "watch", "call", "see", "need",
      "want", "know", "tell", "stop", "leave", "win", "lose", "get", "make"]
VBZ = {v: (v + "es" if v.endswith(("ch", "sh", "s", "x")) else v + "s") for v in VB}
VBZ["watch"] = "watches"
VBZ["get"] = "gets"
VBD = {"bark": "barked", "run": "ran", "play": "played", "talk": "talked", "walk": "walked",
       "love": "loved", "hate": "hated", "like": "liked", "watch": "watched", "call": "called",
       "see": "saw", "need": "needed", "want": "wanted", "know": "knew", "tell": "told",
       "stop": "stopped", "leave": "left", "win": "won", "lose": "lost", "get": "got", "make": "made"}
VBG = {v: (v[:-1] + "ing" if v.endswith("e") and v not in ("see",) else v + "ing") for v in VB}
VBG.update({"run": "running", "stop": "stopping", "get": "getting", "win": "winning"})
VBN = dict(VBD)
VBN.update({"see": "seen", "know": "known", "win": "won", "run": "run", "make": "made"})
RB = ["really", "never", "always", "so", "very", "fast", "back", "still", "just", "too", "not", "well"]
IN = ["in", "on", "at", "with", "about", "like", "from", "for", "after", "before", "that"]
MD = ["can", "will", "should", "must", "would", "could"]
CC = ["and", "but", "or"]
UH = ["lol", "yo", "omg", "smh", "yeah", "well"]
CD = ["two", "three", "ten", "100", "5", "2017"]
WDT = ["that", "which"]


def pick(xs):
    return rng.choice(xs)


def np_subject():
    r = rng.random()
    if r < 0.25:
        return [(pick(DT), "DT")] + maybe_adj() + [(pick(NN), "NN")], "sg"
    if r < 0.5:
        return [(pick(DT_PL), "DT")] + maybe_adj() + [(pick(NNS), "NNS")], "pl"
    if r < 0.6:
        return [(pick(NNS), "NNS")], "pl"
    if r < 0.7:
        return [(pick(NNP), "NNP")], "sg"
    if r < 0.8:
        return [(pick(PRPS), "PRP$"), (pick(NN), "NN")], "sg"
    if r < 0.9:
        return [(pick(PRP_SG), "PRP")], "sg"
    return [(pick(PRP_PL), "PRP")], "pl"


def maybe_adj():
    return [(pick(JJ), "JJ")] if rng.random() < 0.35 else []


def np_object():
    r = rng.random()
    if r < 0.3:
        return [(pick(DT), "DT")] + maybe_adj() + [(pick(NN), "NN")]
    if r < 0.5:
        return maybe_adj() + [(pick(NNS), "NNS")]
    if r < 0.65:
        return [(pick(PRP_OBJ), "PRP")]
    if r < 0.75:
        return [(pick(NNP), "NNP")]
    if r < 0.85:
        return [(pick(CD), "CD"), (pick(NNS), "NNS")]
    return [(pick(PRPS), "PRP$")] + maybe_adj() + [(pick(NN), "NN")]


def pp():
    return [(pick([p for p in IN if p != "that"]), "IN")] + np_object()


def vp(number):
    r = rng.random()
    v = pick(VB)
    if r < 0.3:
        head = [(VBZ[v], "VBZ")] if number == "sg" else [(v, "VBP")]
    elif r < 0.5:
        head = [(VBD[v], "VBD")]
    elif r < 0.65:
        head = [(pick(MD), "MD"), (v, "VB")]
    elif r < 0.8:
        aux = ("is", "VBZ") if number == "sg" else ("are", "VBP")
        head = [aux, (VBG[v], "VBG")]
    elif r < 0.9:
        aux = ("has", "VBZ") if number == "sg" else ("have", "VBP")
        head = [aux, (VBN[v], "VBN")]
    else:
        aux = ("does", "VBZ") if number == "sg" else ("do", "VBP")
        head = [aux, ("not", "RB"), (v, "VB")]
    if rng.random() < 0.2:
        head = [(pick(["really", "never", "always", "just", "still"]), "RB")] + head
    out = list(head)
    if rng.random() < 0.7:
        out += np_object()
    if rng.random() < 0.3:
        out += pp()
    if rng.random() < 0.2:
        out += [(pick(["fast", "back", "too", "well", "so", "really"]), "RB")]
    if rng.random() < 0.15:
        out += [("to", "TO"), (pick(VB), "VB")] + np_object()
    return out


def sentence():
    out = []
    if rng.random() < 0.12:
        out += [(pick(UH), "UH"), (",", ",")]
    subj, number = np_subject()
    if rng.random() < 0.1 and subj[-1][1] in ("NN", "NNS"):
        rel_num = "sg" if subj[-1][1] == "NN" else "pl"
        subj = subj + [(pick(WDT), "WDT")] + vp(rel_num)
    out += subj + vp(number)
    if rng.random() < 0.2:
        s2, n2 = np_subject()
        out += [(pick(CC), "CC")] + s2 + vp(n2)
    if rng.random() < 0.15:
        out += [("that", "IN")]
        s3, n3 = np_subject()
        out += s3 + vp(n3)
    out.append((pick([".", "!", "?"]), "."))
    return out


def main():
    OUT.parent.mkdir(parents=True, exist_ok=True)
    seen = set()
    sents = []
    while len(sents) < 500:
        s = sentence()
        key = tuple(s)
        if key in seen:
            continue
        seen.add(key)
        sents.append(s)
    with open(OUT, "w") as f:
        for s in sents:
            for w, t in s:
                f.write(f"{w}\t{t}\n")
            f.write("\n")


if __name__ == "__main__":
    main()
