#!/usr/bin/env python3
"""Write the extraction golden corpus from the hand-derived expectations.

Each expected record list below was derived by manually walking the
lexicon tables and the documented matching rules (longest-phrase-first,
whole-word, clause-scoped recovery, nearest-preceding subject marker).
Do not regenerate these from the engine; they are the oracle.
"""

import json
from pathlib import Path

SWEEP_ORDER = ["asthma", "cold", "cough", "fever", "menstruation", "rhinitis"]


def removal_sweep(group, first=None):
    """All-conditions removal; a condition named in the utterance keeps its
    own trigger position and therefore sorts ahead of the cue-positioned rest."""
    order = ([first] + [c for c in SWEEP_ORDER if c != first]) if first else SWEEP_ORDER
    return [{"group": group, "action": "remove_condition", "condition": cond,
             "preference": None} for cond in order]


def rec(group, action, condition=None, preference=None):
    return {"group": group, "action": action, "condition": condition, "preference": preference}


GOLDENS = [
    # id, utterance, ctx {speaker, last}, expected records (ordered)
    ("g01", "Grandma's asthma has cleared up", {}, [rec("elderly", "remove_condition", "asthma")]),
    ("g02", "My son has a fever and I'm feeling quite cold lately",
     {"speaker": "adult_female"},
     [rec("child", "add_condition", "fever"),
      rec("adult_female", "set_preference", preference="slightly_cold_sensitive")]),
    ("g03", "", {}, []),
    ("g04", "what a lovely day", {}, []),
    ("g05", "Grandpa has recovered", {}, removal_sweep("elderly")),
    ("g06", "I have a cough", {"speaker": "adult_male"}, [rec("adult_male", "add_condition", "cough")]),
    ("g07", "my cough is all good now", {}, [rec("other", "remove_condition", "cough")]),
    ("g08", "The baby has a fever", {}, [rec("child", "add_condition", "fever")]),
    ("g09", "my husband is very heat-sensitive", {},
     [rec("adult_male", "set_preference", preference="very_heat_sensitive")]),
    ("g10", "grandma is very cold-sensitive", {},
     [rec("elderly", "set_preference", preference="very_cold_sensitive")]),
    ("g11", "my wife has rhinitis", {}, [rec("adult_female", "add_condition", "rhinitis")]),
    ("g12", "our daughter is asthmatic", {}, [rec("child", "add_condition", "asthma")]),
    ("g13", "dad caught a cold", {}, [rec("adult_male", "add_condition", "cold")]),
    ("g14", "mom is on her period", {}, [rec("adult_female", "add_condition", "menstruation")]),
    ("g15", "the kids are coughing", {}, [rec("child", "add_condition", "cough")]),
    ("g16", "granny feels feverish today", {}, [rec("elderly", "add_condition", "fever")]),
    ("g17", "my mother is menstruating", {}, [rec("adult_female", "add_condition", "menstruation")]),
    ("g18", "our guest is slightly heat-sensitive", {},
     [rec("other", "set_preference", preference="slightly_heat_sensitive")]),
    ("g19", "I am neutral about temperature", {"speaker": "adult_male"},
     [rec("adult_male", "set_preference", preference="neutral")]),
    ("g20", "grandpa prefers cool air", {},
     [rec("elderly", "set_preference", preference="slightly_heat_sensitive")]),
    ("g21", "my daughter has a runny nose", {}, [rec("child", "add_condition", "rhinitis")]),
    ("g22", "the toddler has a stuffy nose", {}, [rec("child", "add_condition", "rhinitis")]),
    ("g23", "grandma has a cold, and my son has a cough", {},
     [rec("elderly", "add_condition", "cold"), rec("child", "add_condition", "cough")]),
    ("g24", "I had a fever, but it's all good now", {"speaker": "adult_female"},
     removal_sweep("adult_female", first="fever")),
    ("g25", "her rhinitis has cleared up and the cough is gone away", {},
     [rec("other", "remove_condition", "rhinitis"), rec("other", "remove_condition", "cough")]),
    ("g26", "grandma recovered from her asthma", {}, [rec("elderly", "remove_condition", "asthma")]),
    ("g27", "the fever is back to normal", {}, [rec("other", "remove_condition", "fever")]),
    ("g28", "my son is all clear", {"speaker": "adult_female"}, removal_sweep("child")),
    ("g29", "I'm always freezing", {"speaker": "elderly"},
     [rec("elderly", "set_preference", preference="very_cold_sensitive")]),
    ("g30", "my husband hates the heat", {},
     [rec("adult_male", "set_preference", preference="very_heat_sensitive")]),
    ("g31", "the child is feeling quite warm", {},
     [rec("child", "set_preference", preference="slightly_heat_sensitive")]),
    ("g32", "grandmother has hay fever", {}, [rec("elderly", "add_condition", "rhinitis")]),
    ("g33", "our visitor seems a bit chilly", {},
     [rec("other", "set_preference", preference="slightly_cold_sensitive")]),
    ("g34", "daughter is sweating buckets", {},
     [rec("child", "set_preference", preference="very_heat_sensitive")]),
    ("g35", "I am fully recovered", {"speaker": "adult_male"}, removal_sweep("adult_male")),
    ("g36", "the elderly need warmth", {}, [rec("elderly", "set_group_info")]),
    ("g37", "my kid and my wife both have the sniffles", {},
     [rec("adult_female", "add_condition", "cold")]),
    ("g38", "son has asthma; grandpa has asthma", {},
     [rec("child", "add_condition", "asthma"), rec("elderly", "add_condition", "asthma")]),
    ("g39", "I feel feverish and I have a cough", {"speaker": "child"},
     [rec("child", "add_condition", "fever"), rec("child", "add_condition", "cough")]),
    ("g40", "mum says the baby is coughing", {}, [rec("child", "add_condition", "cough")]),
    ("g41", "it's hay fever season for my grandfather", {},
     [rec("elderly", "add_condition", "rhinitis")]),
    ("g42", "she is feeling better", {"last": "elderly"}, removal_sweep("elderly")),
    ("g43", "the cough has healed", {}, [rec("other", "remove_condition", "cough")]),
    ("g44", "everyone is all good now", {}, removal_sweep("other")),
    ("g45", "adult male in the house is always hot", {},
     [rec("adult_male", "set_preference", preference="very_heat_sensitive")]),
    ("g46", "my grandma is comfortable either way", {},
     [rec("elderly", "set_preference", preference="neutral")]),
    ("g47", "running a temperature, my poor daughter", {},
     [rec("child", "add_condition", "fever")]),
    ("g48", "the air feels cold in here", {}, []),
    ("g49", "I am slightly cold-sensitive", {},
     [rec("other", "set_preference", preference="slightly_cold_sensitive")]),
    ("g50", "grandpa's rhinitis is all clear, and the kid has a fever", {},
     [rec("elderly", "remove_condition", "rhinitis"), rec("child", "add_condition", "fever")]),
]


def main():
    out = Path(__file__).resolve().parent.parent / "src/airsteward/data/golden_utterances.jsonl"
    with open(out, "w", encoding="utf-8") as fh:
        for case_id, utterance, ctx, expected in GOLDENS:
            fh.write(json.dumps({
                "id": case_id,
                "utterance": utterance,
                "ctx": {
                    "speaker_default_group": ctx.get("speaker"),
                    "last_mentioned_group": ctx.get("last"),
                },
                "expected": expected,
            }, sort_keys=True) + "\n")
    print(f"wrote {len(GOLDENS)} goldens to {out}")


if __name__ == "__main__":
    main()
