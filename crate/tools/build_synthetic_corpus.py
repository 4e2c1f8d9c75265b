#!/usr/bin/env python3
"""Regenerate crates/core/assets/synthetic_corpus.jsonl.

Sentences use inline markup: {term} is a negated entity, [term] a
non-negated one. Records are assembled deterministically from the pools
below. Labels follow what the bundled lexicon's rules decide, including the
cases where a careful annotator would disagree (scope overreach, minus
shorthand, split abbreviations); those sentences are there so every error
category has an example.
"""

import json
import random
import re
import sys
from pathlib import Path

SHARED = [
    "Geen tekenen van {infectie}, maar [pneumonie] persisteert.",
    "Niet alleen [hoesten] maar ook [kortademigheid].",
    "Geen {koorts}, geen {braken}.",
    "Patiënt ontkent {pijn op de borst}.",
    "Er is [diabetes mellitus] in de voorgeschiedenis.",
    "Geen {dyspneu} of {orthopneu}.",
    "[Hypertensie] goed gereguleerd.",
    "Geen aanwijzingen voor {longembolie}.",
    "Geen {buikpijn}, wel [misselijkheid].",
    "Geen verandering in [hoofdpijnklachten].",
    "[Trombose] niet uitgesloten.",
    "{Fractuur} uitgesloten.",
    "Kweek op {MRSA} negatief.",
    "Pat. is bekend met [astma].",
    "Geen {oedeem} van de enkels.",
    "Zonder {koude rillingen}.",
    "Klachten van [moeheid] en [gewichtsverlies].",
]

POOLS = {
    "gp": [
        "Pat. meldt sinds drie dagen [keelpijn].",
        "Bleek-, [misselijk]-, klam+.",
        "Geen {slikklachten}.",
        "Evt. [antibiotica] starten bij [koorts]?",
        "Advies: terugkomen bij [benauwdheid].",
        "O.a. [rugpijn] en [stijfheid] in de ochtend.",
        "Toch geen {eczeem}?",
        "Geen verdere [klachten].",
        "[Otitis media] rechts, links geen {afwijkingen}.",
        "Niet {misselijk}, wel [duizelig].",
        "Nooit {flauwgevallen}.",
        "[Uitslag] op de armen, geen {jeuk}.",
        "Geen {buikpijn}, {schaafwond} aan been.",
    ],
    "specialist": [
        "Dit pleit tegen {reumatoide artritis}.",
        "De [klachten] zijn niet voorafgegaan door {trauma}.",
        "Geen evid. voor [aneurysma].",
        "Geen verdere analyse van [gewichtsverlies].",
        "Zonder {functieverlies} en {commotio} na de val.",
        "Lichamelijk onderzoek toont [crepitaties] basaal.",
        "Geen {pijn} bij palpatie, echter [zwelling] van de knie.",
        "Hoewel [vermoeidheid] aanwezig, geen {anemie}.",
        "Er is geen sprake van {artrose}.",
        "Behalve [tintelingen] geen {neurologische uitval}.",
        "[Polyneuropathie] lijkt waarschijnlijk.",
        "Dd. [migraine] of [spanningshoofdpijn].",
        "{Nekstijfheid} afwezig.",
        "Anamnestisch geen {allergieën}.",
        "Reflexen symmetrisch, {Babinski} afwezig.",
    ],
    "radiology": [
        "Geen aanwijzing voor {aneurysma}.",
        "Geen {pneumothorax}.",
        "[Consolidatie] in de rechter onderkwab.",
        "Indicatie: uitsluiten [osteopenie].",
        "Geen {vrij vocht} in het abdomen.",
        "{Fractuur} niet aangetoond.",
        "Status na [cholecystectomie].",
        "Geen {pleuravocht}, maar wel [atelectase] links.",
        "Mogelijk [lymfadenopathie] hilair.",
        "Geen tekenen van {decompensatio cordis}.",
        "[Degeneratieve veranderingen] van de wervelkolom, geen {hernia}.",
        "Geen toename van [hydrocefalus].",
        "Cor en longen: geen {afwijkingen}.",
        "[Calcificaties] in de aorta; geen {dissectie}.",
        "{Metastasen} zijn uitgesloten.",
    ],
    "discharge": [
        "Opname wegens [pneumonie].",
        "Tijdens opname geen {delier}.",
        "Ontslag zonder {complicaties}.",
        "Pat. werd opgenomen met [hartfalen].\nGeen {pijn} meer.",
        "Bloedkweken negatief voor [sepsis].",
        "Bekend met [COPD] en [atriumfibrilleren].",
        "Geen {recidief} van de {tumor}.",
        "[Wondinfectie] behandeld, geen {abces}.",
        "CT-scan toonde geen {bloeding}.",
        "Kweek {streptokokken} neg, verder [groei] van huidflora.",
        "Pat. knapte op, [koorts] verdween.",
        "Geen {trombose}, wel [lymfoedeem].",
        "Niet alleen [dyspneu] maar ook [oedeem].",
        "Na de operatie geen {nabloeding}.",
        "Controle op de polikliniek i.v.m. [anemie].",
    ],
}

RECORDS_PER_CATEGORY = 25
MARKUP = re.compile(r"\{([^}]*)\}|\[([^\]]*)\]")


def render(sentences):
    """Strip markup, returning plain text and (start, end, surface, label)."""
    text = ""
    entities = []
    for i, sentence in enumerate(sentences):
        if i:
            text += " "
        pos = 0
        for m in MARKUP.finditer(sentence):
            text += sentence[pos:m.start()]
            surface = m.group(1) if m.group(1) is not None else m.group(2)
            label = "negated" if m.group(1) is not None else "not_negated"
            start = len(text)
            text += surface
            entities.append((start, len(text), surface, label))
            pos = m.end()
        text += sentence[pos:]
    return text, entities


def build():
    rng = random.Random(20210523)
    records = []
    for category, pool in POOLS.items():
        for n in range(RECORDS_PER_CATEGORY):
            own = [pool[(2 * n) % len(pool)], pool[(2 * n + 1) % len(pool)]]
            picked = own[: rng.randint(1, 2)] + rng.sample(SHARED, rng.randint(1, 2))
            rng.shuffle(picked)
            text, spans = render(picked)
            records.append(
                {
                    "id": f"{category}-{n + 1:03}",
                    "category": category,
                    "text": text,
                    "entities": [
                        {
                            "entity_id": f"e{i + 1}",
                            "start": s,
                            "end": e,
                            "surface": surface,
                            "gold_label": label,
                        }
                        for i, (s, e, surface, label) in enumerate(spans)
                    ],
                }
            )
    return records


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "crates/core/assets/synthetic_corpus.jsonl"
    with out.open("w", encoding="utf-8") as f:
        for r in build():
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
