import json

import numpy as np
import pytest

from troftools import cli, segment, synthesise, verify
from troftools.core import GrayImage
from troftools.imageio import read_image, read_labels, write_image
from troftools.metrics import evaluate
from troftools.report import read_report
from troftools.utils import worker_count


@pytest.fixture
def blocks(tmp_path):
    f = np.full((16, 16), 0.2)
    f[:, 8:] = 0.8
    path = tmp_path / 'blocks.pgm'
    write_image(path, GrayImage(f))
    return path


def test_segment_writes_outputs(tmp_path, blocks, capsys):
    out = tmp_path / 'labels.png'
    out_mean = tmp_path / 'mean.pgm'
    report = tmp_path / 'report.json'
    code = segment.main([str(blocks), '-K', '2', '--out', str(out),
                         '--out-mean', str(out_mean), '--report', str(report)])
    assert code == 0
    labels = read_labels(out, K=2)
    assert labels.labels[0, 0] == 0 and labels.labels[0, -1] == 1
    assert read_image(out_mean).array[0, -1] == pytest.approx(0.8, abs=1 / 255)
    run = read_report(report)
    assert run.converged
    assert run.trof.init == 'fcm'
    assert 'K=2' in capsys.readouterr().out


def test_segment_with_explicit_thresholds_and_truth(tmp_path, blocks):
    truth = tmp_path / 'truth.png'
    segment.main([str(blocks), '--tau', '0.5', '--out', str(truth)])
    report = tmp_path / 'report.json'
    code = cli.main(['segment', str(blocks), '--tau', '0.3,0.6',
                     '--truth', str(truth), '--report', str(report)])
    assert code == 0
    run = read_report(report)
    assert run.trof.K == 3
    assert run.trof.init == 'explicit'
    assert len(run.final_m) == 2
    assert run.metrics.SA == 1.0


def test_baseline_mode(tmp_path, blocks):
    report = tmp_path / 'report.json'
    assert segment.main([str(blocks), '--tau', '0.3', '--baseline',
                         '--report', str(report)]) == 0
    run = read_report(report)
    assert run.trof.mode == 'baseline'
    assert run.outer_iterations == 1


@pytest.mark.parametrize('args', [
    [],
    ['missing.pgm'],
    ['{blocks}', '-K', '3', '--tau', '0.5'],
    ['{blocks}', '--init', 'explicit'],
    ['{blocks}', '--init', 'kmeans', '--tau', '0.5'],
    ['{blocks}', '--tau', '0.6,0.3'],
    ['{blocks}', '--mu', '0'],
])
def test_segment_usage_errors(blocks, args, capsys):
    args = [arg.format(blocks=blocks) for arg in args]
    assert segment.main(args) == 2
    assert 'error' in capsys.readouterr().err


def test_schema(capsys):
    assert segment.main(['--schema']) == 0
    schema = json.loads(capsys.readouterr().out)
    assert schema['title'] == 'RunReport'


def test_synth_writes_image_and_truth(tmp_path):
    out = tmp_path / 'example3.pgm'
    truth = tmp_path / 'truth.png'
    truth_raw = tmp_path / 'truth_raw.png'
    code = synthesise.main(['example3', '--size', '48', '--out', str(out),
                            '--truth', str(truth), '--truth-raw', str(truth_raw)])
    assert code == 0
    assert read_image(out).shape == (48, 48)
    assert read_labels(truth, K=5).K == 5
    assert read_labels(truth_raw, raw=True).K == 5


def test_synth_is_deterministic(tmp_path):
    first, second = tmp_path / 'a.pgm', tmp_path / 'b.pgm'
    for path in (first, second):
        assert cli.main(['synth', 'example7', '--size', '32', '--seed', '9',
                         '--out', str(path)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_synth_missing_mask(tmp_path):
    missing = tmp_path / 'missing.png'
    code = synthesise.main(['example1', '--size', '32', '--fraction', '0.5',
                            '--out', str(tmp_path / 'e1.pgm'),
                            '--missing', str(missing)])
    assert code == 0
    assert read_labels(missing).phase_sizes()[1] == 512


def test_synth_errors(tmp_path, capsys):
    out = str(tmp_path / 'x.pgm')
    assert synthesise.main(['example9', '--out', out]) == 2
    assert synthesise.main(['example3']) == 2
    assert synthesise.main(['example3', '--stripes', '4', '--out', out]) == 2
    assert synthesise.main(['example3', '--size', '0x4', '--out', out]) == 2
    capsys.readouterr()
    assert synthesise.main(['--list']) == 0
    assert 'retina-like' in capsys.readouterr().out


def test_verify_suites_pass(capsys):
    code = verify.main(['--suite', 'adjoint', '--suite', 'linkage',
                        '--suite', 'cleanup', '--trials', '3', '--workers', '1'])
    assert code == 0
    out = capsys.readouterr().out
    assert 'PASS' in out and 'FAIL' not in out


def test_verify_layer_cake_small_grid():
    assert verify.main(['--suite', 'layer-cake', '--grid', '2x2',
                        '--trials', '2', '--workers', '1']) == 0


def test_verify_reports_failures(monkeypatch, capsys):
    def failing(result, trials, grid, seed):
        result.checks += 1
        result.failures.append(f'seed {seed}: forced')

    monkeypatch.setitem(verify.SUITES, 'adjoint', failing)
    assert verify.main(['--suite', 'adjoint', '--workers', '1']) == 1
    assert 'seed 0: forced' in capsys.readouterr().out


def test_verify_list_and_errors(capsys):
    assert cli.main(['verify', '--list']) == 0
    assert 'layer-cake' in capsys.readouterr().out
    assert verify.main(['--trials', '0']) == 2


def test_worker_count_is_capped(monkeypatch):
    monkeypatch.setenv('TROF_THREADS', '2')
    assert worker_count(8) == 2
    monkeypatch.setenv('TROF_THREADS', 'many')
    assert worker_count(3) == 3


def test_cli_requires_a_command():
    with pytest.raises(SystemExit):
        cli.main([])


@pytest.mark.slow
@pytest.mark.parametrize('name,target', [('example1', 0.97), ('example3', 0.975)])
def test_preset_accuracy(name, target):
    run, truth, image = verify.segment_preset(name)
    assert run.K == truth.K
    assert evaluate(run.partition, truth.partition, image=image).sa >= target


@pytest.mark.slow
@pytest.mark.parametrize('suite', ['interleave', 'sign-monotone', 'convergence',
                                   'k-scaling', 'fcm-codebook'])
def test_preset_suites_pass(suite):
    result = verify.run_suite(suite)
    assert result.checks > 0
    assert result.passed, result.failures


def test_segment_clusters_on_rof_solution_by_default(tmp_path, blocks):
    report = tmp_path / 'report.json'
    assert segment.main([str(blocks), '-K', '2', '--report', str(report)]) == 0
    assert read_report(report).trof.cluster_on == 'rof'
    assert segment.main([str(blocks), '-K', '2', '--cluster-on', 'input',
                         '--report', str(report)]) == 0
    assert read_report(report).trof.cluster_on == 'input'
