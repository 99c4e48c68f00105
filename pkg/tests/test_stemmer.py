import pytest

from mods.stemmer import porter_stem

# expected stems frozen from the published reference behavior of the
# five-step algorithm (including the bli/logi departures)
REFERENCE = {
    "caresses": "caress",
    "ponies": "poni",
    "ties": "ti",
    "caress": "caress",
    "cats": "cat",
    "feed": "feed",
    "agreed": "agre",
    "plastered": "plaster",
    "bled": "bled",
    "motoring": "motor",
    "sing": "sing",
    "conflated": "conflat",
    "troubled": "troubl",
    "sized": "size",
    "hopping": "hop",
    "tanned": "tan",
    "falling": "fall",
    "hissing": "hiss",
    "fizzed": "fizz",
    "failing": "fail",
    "filing": "file",
    "happy": "happi",
    "sky": "sky",
    "relational": "relat",
    "conditional": "condit",
    "rational": "ration",
    "valenci": "valenc",
    "hesitanci": "hesit",
    "digitizer": "digit",
    "conformabli": "conform",
    "radicalli": "radic",
    "differentli": "differ",
    "vileli": "vile",
    "generalizations": "gener",
    "oscillators": "oscil",
    "universities": "univers",
    "connections": "connect",
    "probably": "probabl",
    "argument": "argument",
    "analogousli": "analog",
    "vietnamization": "vietnam",
    "predication": "predic",
    "operator": "oper",
    "feudalism": "feudal",
    "decisiveness": "decis",
    "hopefulness": "hope",
    "callousness": "callous",
    "formaliti": "formal",
    "sensitiviti": "sensit",
    "sensibiliti": "sensibl",
    "triplicate": "triplic",
    "formative": "form",
    "formalize": "formal",
    "electriciti": "electr",
    "electrical": "electr",
    "hopeful": "hope",
    "goodness": "good",
    "revival": "reviv",
    "allowance": "allow",
    "inference": "infer",
    "airliner": "airlin",
    "gyroscopic": "gyroscop",
    "adjustable": "adjust",
    "defensible": "defens",
    "irritant": "irrit",
    "replacement": "replac",
    "adjustment": "adjust",
    "dependent": "depend",
    "adoption": "adopt",
    "communism": "commun",
    "activate": "activ",
    "angulariti": "angular",
    "homologi": "homolog",
    "effective": "effect",
    "bowdlerize": "bowdler",
    "probate": "probat",
    "rate": "rate",
    "cease": "ceas",
    "controll": "control",
    "roll": "roll",
}


@pytest.mark.parametrize("word,expected", sorted(REFERENCE.items()))
def test_reference_vectors(word, expected):
    assert porter_stem(word) == expected


def test_inflections_share_a_stem():
    stems = {porter_stem(w) for w in ("look", "looks", "looking", "looked")}
    assert stems == {"look"}


def test_short_words_unchanged():
    for word in ("", "a", "is", "by", "the"):
        assert porter_stem(word) == word


# words whose stems themselves still match a rule (agre -> agr); the
# reference algorithm is not idempotent on these, by design
UNSTABLE = {
    "agreed", "callousness", "cease", "decisiveness", "defensible",
    "universities",
}


def test_idempotent_on_stable_vocabulary():
    vocabulary = (set(REFERENCE) - UNSTABLE) | {
        "running", "better", "studies", "connection", "argument",
    }
    for word in vocabulary:
        once = porter_stem(word)
        assert porter_stem(once) == once, word


def test_known_unstable_words_follow_the_reference_chain():
    assert porter_stem("agreed") == "agre"
    assert porter_stem("agre") == "agr"  # matches the reference implementations
    assert porter_stem("surprise") == porter_stem("surprised") == "surpris"
