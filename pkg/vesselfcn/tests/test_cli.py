# -*- coding: utf-8 -*-

# %% IMPORTS
# Built-in imports
import csv
import os
from os import path

# Package imports
import numpy as np
import pytest

# vesselfcn imports
from vesselfcn import cli
from vesselfcn._internal import NumericAbort, raise_error
from vesselfcn.cli import main
from vesselfcn.image_io import ProbMap, write_mask, write_prob_map
from vesselfcn.preprocess import read_stats
from vesselfcn.synth import SynthConfig, generate

# Arguments of a small synthetic dataset
SYNTH_ARGS = ['--synth.count', '3', '--synth.size', '32',
              '--synth.test_count', '1', '--synth.seed', '5']

# Arguments of a tiny and fast training run
TRAIN_ARGS = ['--model.base_channels', '2', '--model.depth', '2',
              '--train.epochs', '1', '--train.batch_size', '8',
              '--train.patches_per_image', '4', '--train.patch_size', '8',
              '--clahe.tiles_x', '2', '--clahe.tiles_y', '2']


# %% HELPER FUNCTIONS
def read_bytes(filename):
    with open(filename, 'rb') as f:
        return(f.read())


def read_csv(filename):
    with open(filename, 'r', newline='') as f:
        return(list(csv.reader(f)))


# Writes a synthetic dataset with the CLI and returns its root
def make_synth(tmpdir, name='data'):
    root = path.join(tmpdir.strpath, name)
    assert main(['synth', root]+SYNTH_ARGS) == 0
    return(root)


# %% PYTEST CLASSES AND FUNCTIONS
# Pytest for the argument handling and exit codes
class Test_main(object):
    def test_no_command(self, capsys):
        assert main([]) == 1
        assert 'vesselfcn: error:' in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(['segment', 'out']) == 1

    def test_unknown_key(self, tmpdir):
        out = path.join(tmpdir.strpath, 'out')
        assert main(['synth', out, '--synth.colour', 'red']) == 1
        assert not path.exists(out)

    def test_invalid_value(self, tmpdir):
        out = path.join(tmpdir.strpath, 'out')
        assert main(['synth', out, '--infer.stride=0']) == 1
        assert main(['synth', out, '--synth.size', 'big']) == 1

    def test_flag_without_value(self, tmpdir):
        assert main(['synth', tmpdir.strpath, '--synth.count']) == 1

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(['--version'])
        assert excinfo.value.code == 0
        assert 'vesselfcn' in capsys.readouterr().out

    def test_numeric_abort(self, tmpdir, monkeypatch):
        def abort(args, config):
            raise_error("Diverged!", NumericAbort, cli.logger)
        monkeypatch.setitem(cli.COMMANDS, 'synth', abort)
        assert main(['synth', tmpdir.strpath]) == 3

    def test_empty_dataset(self, tmpdir):
        out = path.join(tmpdir.strpath, 'out')
        assert main(['preprocess', tmpdir.strpath, out]) == 2

    def test_config_file(self, tmpdir):
        filename = path.join(tmpdir.strpath, 'run.cfg')
        with open(filename, 'w') as f:
            f.write("synth.count = 2\nsynth.size = 16\nsynth.test_count = 0\n")
        out = path.join(tmpdir.strpath, 'out')
        assert main(['synth', out, '--config', filename,
                     '--synth.count=3']) == 0
        assert len(os.listdir(path.join(out, 'images'))) == 3
        text = open(path.join(out, 'effective_config.txt')).read()
        assert 'synth.count = 3' in text and 'synth.size = 16' in text

    def test_crossval_k_recorded(self, tmpdir, monkeypatch):
        used = []

        def fake_crossval(dataset, config, folds):
            used.append((config['eval.k'], folds.k))
            return([])
        monkeypatch.setattr(cli, 'crossval', fake_crossval)
        root = make_synth(tmpdir)
        out = path.join(tmpdir.strpath, 'cv')
        assert main(['crossval', root, out, '--k', '3']) == 0
        assert used == [(3, 3)]
        text = open(path.join(out, 'effective_config.txt')).read()
        assert 'eval.k = 3\n' in text
        assert main(['crossval', root, out, '--k', '1']) == 1


# Pytest for the synth and preprocess commands
class Test_data_commands(object):
    def test_synth(self, tmpdir):
        root = make_synth(tmpdir)
        assert sorted(os.listdir(path.join(root, 'images'))) == [
            'synth_000.ppm', 'synth_001.ppm', 'synth_002.ppm']
        assert open(path.join(root, 'test.txt')).read() == "synth_002\n"
        other = make_synth(tmpdir, 'again')
        for name in ('images/synth_001.ppm', 'labels/synth_001.pgm'):
            assert (read_bytes(path.join(root, name)) ==
                    read_bytes(path.join(other, name)))

    def test_preprocess(self, tmpdir):
        root = make_synth(tmpdir)
        outs = [path.join(tmpdir.strpath, name) for name in ('a', 'b')]
        for out in outs:
            assert main(['preprocess', root, out]) == 0
        for name in ('synth_000.pgm', 'stats.txt'):
            assert (read_bytes(path.join(outs[0], name)) ==
                    read_bytes(path.join(outs[1], name)))

    def test_preprocess_with_stats(self, tmpdir):
        root = make_synth(tmpdir)
        first = path.join(tmpdir.strpath, 'first')
        assert main(['preprocess', root, first]) == 0
        stats_file = path.join(first, 'stats.txt')
        second = path.join(tmpdir.strpath, 'second')
        assert main(['preprocess', root, second, '--stats', stats_file]) == 0
        assert (read_stats(path.join(second, 'stats.txt')) ==
                read_stats(stats_file))


# Pytest for the evaluate command
class Test_evaluate(object):
    def make_dirs(self, tmpdir):
        dirs = [path.join(tmpdir.strpath, name)
                for name in ('pred', 'gt', 'fov')]
        for dirname in dirs:
            os.makedirs(dirname)
        cfg = SynthConfig(count=2, size=16, seed=3, test_count=0)
        for i, (_, gt, fov) in enumerate(generate(cfg)):
            prob = ProbMap(np.where(gt.data, 0.9, 0.1))
            write_prob_map(prob, path.join(dirs[0], 'im%i_prob.pgm' % (i)))
            write_mask(gt, path.join(dirs[1], 'im%i.pgm' % (i)))
            write_mask(fov, path.join(dirs[2], 'im%i.pgm' % (i)))
        return(dirs)

    def test_perfect_predictions(self, tmpdir, capsys):
        dirs = self.make_dirs(tmpdir)
        out = path.join(tmpdir.strpath, 'out')
        assert main(['evaluate', *dirs, out, '--plot']) == 0
        rows = read_csv(path.join(out, 'metrics.csv'))
        assert [row[0] for row in rows] == ['image_id', 'im0', 'im1', 'all']
        assert float(rows[-1][-1]) == 1.0
        for name in ('roc.csv', 'pr.csv', 'curves.png'):
            assert path.exists(path.join(out, name))
        assert 'all' in capsys.readouterr().out

    def test_missing_ground_truth(self, tmpdir):
        dirs = self.make_dirs(tmpdir)
        os.remove(path.join(dirs[1], 'im1.pgm'))
        assert main(['evaluate', *dirs, tmpdir.strpath]) == 2

    def test_no_predictions(self, tmpdir):
        dirs = self.make_dirs(tmpdir)
        assert main(['evaluate', dirs[1], dirs[1], dirs[2],
                     tmpdir.strpath]) == 2


# Pytest for training, prediction and evaluation from the command line
@pytest.mark.incremental
class Test_pipeline(object):
    root = None

    def test_train(self, tmpdir_factory):
        base = tmpdir_factory.mktemp('pipeline').strpath
        Test_pipeline.root = base
        data = path.join(base, 'data')
        assert main(['synth', data]+SYNTH_ARGS) == 0
        out = path.join(base, 'train')
        assert main(['train', data, out]+TRAIN_ARGS) == 0
        for name in ('best.fcnw', 'final.fcnw', 'history.csv', 'stats.txt',
                     'effective_config.txt'):
            assert path.exists(path.join(out, name))
        assert len(read_csv(path.join(out, 'history.csv'))) == 2

    def test_predict(self):
        base = Test_pipeline.root
        image = path.join(base, 'data', 'images', 'synth_002.ppm')
        out = path.join(base, 'pred')
        assert main(['predict', path.join(base, 'train', 'final.fcnw'), out,
                     image]+TRAIN_ARGS) == 0
        assert sorted(os.listdir(out)) == [
            'effective_config.txt', 'synth_002_mask.pgm',
            'synth_002_prob.pgm']

    def test_evaluate(self):
        base = Test_pipeline.root
        out = path.join(base, 'eval')
        assert main(['evaluate', path.join(base, 'pred'),
                     path.join(base, 'data', 'labels'),
                     path.join(base, 'data', 'fov'), out]) == 0
        rows = read_csv(path.join(out, 'metrics.csv'))
        assert [row[0] for row in rows[1:]] == ['synth_002', 'all']

    def test_missing_checkpoint(self):
        base = Test_pipeline.root
        image = path.join(base, 'data', 'images', 'synth_002.ppm')
        assert main(['predict', path.join(base, 'missing.fcnw'),
                     path.join(base, 'pred2'), image]) == 2
