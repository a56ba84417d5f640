"""Regenerate the stemmer and syllable golden files from independent references.

Stems come from NLTK's PorterStemmer in ORIGINAL_ALGORITHM mode; syllable counts
come from the CMU pronouncing dictionary (first pronunciation, stress digits).
"""
import pathlib

import cmudict
from nltk.stem.porter import PorterStemmer

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "tests" / "data"

STEM_WORDS = """
caresses ponies ties caress cats feed agreed plastered bled motoring sing
conflated troubled sized hopping tanned falling hissing fizzed failing filing
happy sky relational conditional rational valenci hesitanci digitizer
conformabli radicalli differentli vileli analogousli vietnamization predication
operator feudalism decisiveness hopefulness callousness formaliti sensitiviti
sensibiliti triplicate formative formalize electriciti electrical hopeful
goodness revival allowance inference airliner gyroscopic adjustable defensible
irritant replacement adjustment dependent adoption homologou communism activate
angulariti homologous effective bowdlerize probate rate cease controll roll
generalizations oscillators running dogs fags faggots tweeting hating loved
happily crying tweets haters hateful offensive retweeted following ugly
deported boycotting insulted generously
connection misspelled relativity
""".split()

SYLLABLE_WORDS = """
cat create rhythm hello dog table people water music computer happy
beautiful language education family yesterday tomorrow morning evening little
bottle idea area radio video poem quiet science angry player player
tweet hate offensive speech language racist funny business chocolate
different every camera really animal orange simple lovely strange smile
through between
""".split()


def main():
    stemmer = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
    words = list(dict.fromkeys(STEM_WORDS))
    assert len(words) == 100, len(words)
    with open(OUT / "stems.golden", "w") as f:
        f.write("# word\tstem (Porter 1980, original algorithm)\n")
        for w in words:
            f.write(f"{w}\t{stemmer.stem(w)}\n")

    d = cmudict.dict()
    words = list(dict.fromkeys(SYLLABLE_WORDS))
    assert len(words) == 50, len(words)
    with open(OUT / "syllables.golden", "w") as f:
        f.write("# word\tsyllables (CMU pronouncing dictionary)\n")
        for w in words:
            phones = d[w][0]
            n = sum(1 for p in phones if p[-1].isdigit())
            f.write(f"{w}\t{n}\n")


if __name__ == "__main__":
    main()
