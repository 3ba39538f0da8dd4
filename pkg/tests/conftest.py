import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


@pytest.fixture
def conllu_two_sentences(tmp_path):
    # second sentence has a multiword-token range line that must be skipped
    text = "\n".join([
        "# sent_id = t1_1",
        "# text = cars drink gasoline",
        "1\tcars\tcar\tNOUN\t_\t_\t2\tnsubj\t_\t_",
        "2\tdrink\tdrink\tVERB\t_\t_\t0\troot\t_\t_",
        "3\tgasoline\tgasoline\tNOUN\t_\t_\t2\tobj\t_\t_",
        "",
        "# sent_id = t1_2",
        "1\the\the\tPRON\t_\t_\t2\tnsubj\t_\t_",
        "2\tstayed\tstay\tVERB\t_\t_\t0\troot\t_\t_",
        "3-4\tdon't\t_\t_\t_\t_\t_\t_\t_\t_",
        "3\tdo\tdo\tAUX\t_\t_\t2\taux\t_\t_",
        "4\tn't\tnot\tPART\t_\t_\t2\tadvmod\t_\t_",
        "",
    ]) + "\n"
    p = tmp_path / "parses.conllu"
    p.write_text(text, encoding="utf-8")
    return p


@pytest.fixture
def mini_corpus(tmp_path, conllu_two_sentences):
    """A tiny shared-task style corpus: CSV, contexts, parses, genre map."""
    csv_path = write_lines(tmp_path / "train.csv", [
        "id,sentence,verb_index,lemma,label",
        't1_1_1,"cars drink gasoline",1,drink,1',
        "t1_2_1,he stayed do n't,1,stay,0",
        "n9_1_0,run,0,run,0",
    ])
    ctx_path = write_lines(tmp_path / "contexts.jsonl", [
        json.dumps({"id": "t1_1", "text": "cars drink gasoline . he stayed do n't",
                    "sentences": ["1", "2"]}),
        json.dumps({"id": "n9_4", "text": "something unrelated"}),
    ])
    gmap = tmp_path / "genres.json"
    gmap.write_text(json.dumps({"t": "Academic", "n": "News"}), encoding="utf-8")
    return {"csv": csv_path, "contexts": ctx_path, "parses": conllu_two_sentences,
            "genre_map": gmap, "dir": tmp_path}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
    if not any(" AC8 " in line for line in mod.RESULTS):
        terminalreporter.write_line("[SKIP] AC8 VUA GloVe reproduction: needs DM_VUA_DIR with the licensed data")
