"""Regenerate the files under data/ (statement catalog, synthetic ground
truth, sample dump). Run from the repo root: python scripts/make_data.py"""

import csv
import json
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"

STATEMENTS_EN = {
    1: ("overall, being EU members is a disadvantage", "European Union disadvantages"),
    2: ("Italy should exit the euro", "exit the euro"),
    3: ("a common European army should exist", "common European army"),
    4: ("multinational corporations like Google and YouTube should pay copyright and taxes according to the rules of each European country", "taxes for multinationals compliant with rules of each European country"),
    5: ("european economic integration has driven too far: member states should regain greater autonomy", "members economic autonomy in the European Union"),
    6: ("the European Union should reform its immigration policy: Italy should receive more support from other Member States", "immigration handling in EU"),
    7: ("Italy should strengthen economic cooperation with China", "economic cooperation between China and Italy"),
    8: ("the recreational use of cannabis should be legal", "recreational use of cannabis"),
    9: ("Islam is a threat to Italy's values", "Islam threatens Italian values"),
    10: ("women must be guaranteed autonomy of choice over abortion", "autonomy of choice over abortion"),
    11: ("any form of self-defense within the private property should be legitimate", "self-defense in your own home"),
    12: ("the activities of the judiciary must be independent of political pressures", "independence of the judiciary from politics"),
    13: ("children who were born in Italy to foreign parents should receive Italian citizenship automatically", "Italian citizenship for children born in Italy to foreign parents"),
    14: ("wealth should be redistributed from wealthier citizens to poorer citizens", "redistribution of wealth to the poorest"),
    15: ("companies should be able to dismiss employees more easily", "ease of dismissal of employees"),
    16: ("healthcare should be more open to private operators", "healthcare open to private operators"),
    17: ("protecting the environment is more important than the economic growth", "environmental protection versus economic growth"),
    18: ("cutting public spending is a good way to solve the economic crisis", "public spending cuts as a solution for the economic crisis"),
    19: ("income support for the poorest sections of the population is positive for the Italian economy", "improve the economy by helping low-income segments of population"),
    20: ('the introduction of a single tax rate on income ("Flat Tax") would be beneficial for the Italian economy', "taxes with a single rate without progressive taxation"),
}

STATEMENTS_IT = {
    1: ("nel complesso, essere membri dell'UE è uno svantaggio", "svantaggi dell'Unione Europea"),
    2: ("l'Italia dovrebbe uscire dall'Euro", "uscire dall'euro"),
    3: ("dovrebbe esistere un esercito comune europeo", "esercito europeo comune"),
    4: ("le multinazionali come Google e Youtube dovrebbero pagare i diritti d'autore e le tasse secondo le regole di ciascun paese europeo", "tasse per le multinazionali in relazione alle regole di ciascun Paese Europeo"),
    5: ("l'integrazione economica europea si è spinta troppo oltre: gli Stati membri dovrebbero riguadagnare maggiore autonomia", "autonomia economica dei membri dell'Unione Europea"),
    6: ("l'Unione Europea dovrebbe riformare la propria politica dell'immigrazione: l'Italia dovrebbe ricevere più supporto dagli altri Stati membri", "gestione dell'immigrazione nell'Unione Europea"),
    7: ("l'Italia dovrebbe intensificare le sue relazioni economiche con la Cina", "relazioni economiche dell'Italia con la Cina"),
    8: ("l'uso ricreativo della cannabis dovrebbe essere legale", "uso ricreativo della cannabis"),
    9: ("l'Islam è una minaccia per i valori dell'Italia", "minaccia dell'Islam nei confronti dei valori italiani"),
    10: ("alle donne deve essere garantita autonomia di scelta sull'aborto", "autonomia di scelta sull'aborto"),
    11: ("ogni forma di auto-difesa all'interno della proprietà privata dovrebbe essere legittima", "legittima difesa nella propria abitazione con armi"),
    12: ("le attività della magistratura devono essere indipendenti dalle pressioni della politica", "indipendenza della magistratura dalla politica"),
    13: ("i bambini, nati in Italia da cittadini stranieri, dovrebbero ricevere la cittadinanza italiana automaticamente", "cittadinanza italiana per bambini nati in Italia da famiglie straniere"),
    14: ("la ricchezza dovrebbe essere redistribuita dai cittadini più abbienti ai cittadini più poveri", "redistribuzione della ricchezza verso i piu poveri"),
    15: ("le imprese dovrebbe poter licenziare i dipendenti più facilmente", "possibilita delle imprese di licenziare facilmente i propri dipendenti"),
    16: ("la Sanità dovrebbe essere più aperta agli operatori privati", "apertura della Sanità ad operatori privati"),
    17: ("proteggere l'ambiente è più importante della crescita economica", "importanza della protezione dell'ambiente"),
    18: ("tagliare la spesa pubblica è un buon modo per risolvere la crisi economica", "tagli alla spesa pubblica come soluzione per la crisi economica"),
    19: ("il sostegno al reddito alle fasce più povere della popolazione è positivo per l'economia italiana", "migliorare l'economia aiutando le fasce a basso reddito"),
    20: ('l\'introduzione di una aliquota unica sui redditi ("flat tax") sarebbe di beneficio all\'economia italiana', "conseguenze della flat tax per l'economia italiana"),
}

PARTIES = ["partyA", "partyB", "partyC", "partyD", "partyE", "partyF"]


def write_statements() -> None:
    with open(DATA / "statements.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["nr", "lang", "sentence", "topic"])
        for nr in range(1, 21):
            writer.writerow([nr, "en", *STATEMENTS_EN[nr]])
            writer.writerow([nr, "it", *STATEMENTS_IT[nr]])


def write_ground_truth() -> None:
    # Synthetic labels: real party positions are external data, not shipped.
    with open(DATA / "ground_truth.synthetic.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["party", "statement_nr", "label"])
        for i, party in enumerate(PARTIES):
            for nr in range(1, 21):
                writer.writerow([party, nr, (i + nr) % 5 + 1])


def write_sample_dump() -> None:
    kinds = ["original", "retweet", "reply", "quote"]
    with open(DATA / "sample_dump.jsonl", "w", encoding="utf-8") as fh:
        n = 0
        for p, party in enumerate(PARTIES):
            for nr in range(1, 21):
                for j in range(2):
                    n += 1
                    month = 1 + (nr + j) % 5  # Jan..May 2019, spans D3..D7 differently
                    day = 1 + (n % 25)
                    topic_en = STATEMENTS_EN[nr][1]
                    topic_it = STATEMENTS_IT[nr][1]
                    record = {
                        "id": f"{party}-s{nr:02d}-{j}",
                        "author": party,
                        "created_at": f"2019-{month:02d}-{day:02d}T1{j}:00:00Z",
                        "text": f"oggi parliamo ancora di {topic_it} perché conta davvero",
                        "text_translated": f"today we talk again about {topic_en} because it really matters",
                        "kind": kinds[(p + nr + j) % 4],
                    }
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    write_statements()
    write_ground_truth()
    write_sample_dump()
    print(f"wrote {DATA / 'statements.csv'}")
    print(f"wrote {DATA / 'ground_truth.synthetic.csv'}")
    print(f"wrote {DATA / 'sample_dump.jsonl'}")
