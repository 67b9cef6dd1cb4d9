import re

import pytest

from main import IO_ERROR, OK, PRECONDITION, STAGE_FAILURE, cli_main
from modules.bigraph import write_graph


@pytest.fixture
def dense_file(tmp_path):
    path = tmp_path / 'dense.txt'
    assert cli_main(['gen', '--upper', '64', '--lower', '64', '--density', '0.9', '--out', str(path)]) == OK
    return path


def test_generate_embed_verify(dense_file, tmp_path, capsys):
    emb = tmp_path / 'q3.emb'
    assert cli_main(['embed-drc', '--graph', str(dense_file), '--n', '3', '--seed', '1', '--out', str(emb)]) == OK
    out = capsys.readouterr().out
    assert out.startswith('command: embed-drc')
    assert 'outcome: ok' in out
    assert sum(1 for line in out.splitlines() if re.fullmatch(r'[01]{3} (upper|lower) \d+', line)) == 8

    assert cli_main(['verify', '--graph', str(dense_file), '--embedding', str(emb)]) == OK
    assert 'violations: 0' in capsys.readouterr().out


def test_same_seed_same_report(dense_file, capsys):
    argv = ['embed-drc', '--graph', str(dense_file), '--n', '3', '--seed', '5']
    cli_main(argv)
    first = capsys.readouterr().out
    cli_main(argv)
    assert capsys.readouterr().out == first


def test_verify_detects_a_foreign_host(dense_file, tmp_path):
    emb = tmp_path / 'q3.emb'
    assert cli_main(['embed-drc', '--graph', str(dense_file), '--n', '3', '--out', str(emb)]) == OK
    empty = tmp_path / 'empty.txt'
    empty.write_text('64 64\n')
    assert cli_main(['verify', '--graph', str(empty), '--embedding', str(emb)]) == STAGE_FAILURE


def test_verify_size_mismatch(dense_file, tmp_path, complete):
    emb = tmp_path / 'q3.emb'
    cli_main(['embed-drc', '--graph', str(dense_file), '--n', '3', '--out', str(emb)])
    other = tmp_path / 'other.txt'
    write_graph(complete(8, 8), other)
    assert cli_main(['verify', '--graph', str(other), '--embedding', str(emb)]) == IO_ERROR


def test_embed_auto_on_complete_host(tmp_path, complete, capsys):
    path = tmp_path / 'k88.txt'
    write_graph(complete(8, 8), path)
    assert cli_main(['embed-auto', '--graph', str(path), '--n', '3']) == OK
    assert 'branch: drc' in capsys.readouterr().out


def test_brute_force_on_a_tree(tmp_path, path_graph):
    path = tmp_path / 'tree.txt'
    write_graph(path_graph, path)
    assert cli_main(['brute', '--graph', str(path), '--n', '2']) == STAGE_FAILURE


def test_chernoff_tables(tmp_path, capsys):
    report = tmp_path / 'chernoff.txt'
    prefix = tmp_path / 'run'
    argv = ['chernoff', '--exhaustive', '--p', '0.5', '--n-vars', '4', '--report', str(report),
            '--csv-prefix', str(prefix)]
    assert cli_main(argv) == OK
    out = capsys.readouterr().out
    assert '# table chernoff' in out
    assert report.read_text() == out
    assert (tmp_path / 'run_chernoff.csv').exists()


def test_gen_blocks_then_embed(tmp_path):
    path = tmp_path / 'blocks.txt'
    assert cli_main(['gen-blocks', '--k', '4', '--g', '8', '--uppers', '16', '--gamma', '1', '--delta', '0.01',
                     '--out', str(path)]) == OK
    assert (tmp_path / 'blocks.txt.blocks').exists()
    argv = ['embed-blocks', '--graph', str(path), '--blocks', f'{path}.blocks', '--n', '3', '--u', '1', '--w', '1']
    assert cli_main(argv) == OK
    assert cli_main(argv + ['--strict']) == STAGE_FAILURE


@pytest.mark.parametrize('argv', [
    [],
    ['gen', '--bogus'],
    ['embed-drc', '--n', '3'],
    ['gen', '--upper', '4', '--lower', '4', '--density', '1.5', '--out', 'unused.txt'],
])
def test_usage_and_precondition_errors(argv, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli_main(argv) == PRECONDITION


def test_missing_file(tmp_path):
    assert cli_main(['embed-drc', '--graph', str(tmp_path / 'absent.txt'), '--n', '3']) == IO_ERROR


def test_malformed_file(tmp_path):
    path = tmp_path / 'bad.txt'
    path.write_text('2 2\n0 9\n')
    assert cli_main(['embed-drc', '--graph', str(path), '--n', '2']) == IO_ERROR


def test_help_exits_cleanly(capsys):
    assert cli_main(['--help']) == OK
    assert 'exit codes' in capsys.readouterr().out
