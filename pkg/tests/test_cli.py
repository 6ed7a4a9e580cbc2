# Unitesting modules #
import unittest
import io
import json
import os
import shutil
import tempfile
from contextlib import redirect_stdout, redirect_stderr

# Nosetest flag #
__test__ = True

from suppauthors.main import main
from suppauthors.cli import parse_args, load_run_config, EXIT_OK, EXIT_INPUT, EXIT_CONFIG
from suppauthors.model import ConfigError

testfiles = os.path.join(os.path.dirname(os.path.abspath(__file__)), os.pardir, 'testfiles')
PRODUCTS = os.path.join(testfiles, 'products.jsonl')
RELATIONS = os.path.join(testfiles, 'relations.jsonl')
BLOCKLIST = os.path.join(testfiles, 'blocklist.txt')


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        status = main(list(argv) + ['-q'])
    return status, out.getvalue(), err.getvalue()

def inputs(*extra):
    return ['--products', PRODUCTS, '--relations', RELATIONS, '--blocklist', BLOCKLIST] + list(extra)

def content(path):
    with open(path, 'rb') as f:
        return f.read()


class Test_Bundled(unittest.TestCase):
    def test_selftest(self):
        status, out, err = call('test')
        self.assertEqual(status, EXIT_OK)
        self.assertIn("Pairs with authorship variations: 5/8 (62.50%)", out)

    def test_selftest_with_rule_retrofit(self):
        status, out, err = call('test', '--retrofit', 'rule')
        self.assertEqual(status, EXIT_OK)
        self.assertIn("6/9 (66.67%)", out)

    def test_selftest_with_interval_retrofit(self):
        status, out, err = call('test', '--retrofit', 'interval')
        self.assertEqual(status, EXIT_OK)
        self.assertIn("Pairs with authorship variations: 6/9 (66.67%)", out)

    def test_ingest_check(self):
        status, out, err = call('ingest-check', *inputs())
        self.assertEqual(status, EXIT_OK)
        reports = json.loads(out)
        self.assertEqual(reports['products']['records_accepted'], 20)
        self.assertEqual(reports['relations']['records_read'], 16)


class Test_Run(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def out(self, name):
        return os.path.join(self.tmp, name)

    def test_outputs(self):
        status, out, err = call('run', *inputs('--out', self.out('run')))
        self.assertEqual(status, EXIT_OK)
        for name in ('pairs.jsonl', 'noise.csv', 'annotations.jsonl', 'summary.json', 'pairs.csv', 'combos.csv'):
            self.assertTrue(os.path.exists(os.path.join(self.out('run'), name)), name)
        with open(os.path.join(self.out('run'), 'summary.json')) as f:
            summary = json.load(f)
        dataset = summary['dataset']
        self.assertEqual(dataset['total_pairs'], 6)
        self.assertEqual(dataset['varied_pct'], 50.0)
        self.assertEqual(dataset['event_counts'], {'addition': 2, 'removal': 2, 'shuffle': 2})
        self.assertEqual(dataset['combo_counts']['A+R+S'], 1)
        self.assertEqual(dataset['multi_event_pairs'], 2)
        self.assertEqual(dataset['shuffle_nonadjacent_count'], 1)
        self.assertEqual(dataset['exception_counts']['group_attribution'], 1)
        self.assertEqual(dataset['exception_counts']['null_intersection'], 1)
        self.assertEqual(summary['software']['varied_pairs'], 2)
        self.assertEqual(summary['combined']['varied_pct'], 62.5)
        noise = content(os.path.join(self.out('run'), 'noise.csv')).split(b'\r\n')
        self.assertEqual(len(noise), 4)
        self.assertTrue(all(line.endswith(b'blocklist') for line in noise[1:3]))

    def test_config_file(self):
        status, out, err = call('run', '--config', os.path.join(testfiles, 'config.toml'),
                                '--out', self.out('conf'))
        self.assertEqual(status, EXIT_OK)
        self.assertIn("5/8 (62.50%)", out)

    def test_rule_retrofit_writes_relations(self):
        status, out, err = call('run', *inputs('--out', self.out('r'), '--retrofit', 'rule'))
        self.assertEqual(status, EXIT_OK)
        lines = content(os.path.join(self.out('r'), 'inferred_relations.jsonl')).decode().splitlines()
        self.assertEqual(len(lines), 1)
        rel = json.loads(lines[0])
        self.assertEqual((rel['source'], rel['target'], rel['provenance']), ('P2', 'D8', 'inferred'))
        rows = content(os.path.join(self.out('r'), 'pairs.csv')).split(b'\r\n')
        inferred = [row for row in rows if b',inferred,' in row]
        self.assertEqual(len(inferred), 1)
        self.assertTrue(inferred[0].startswith(b'P2,D8,dataset,inferred,1,1,0,'), inferred[0])

    def test_interval_retrofit_writes_relations(self):
        status, out, err = call('run', *inputs('--out', self.out('i'), '--retrofit', 'interval'))
        self.assertEqual(status, EXIT_OK)
        lines = content(os.path.join(self.out('i'), 'inferred_relations.jsonl')).decode().splitlines()
        self.assertEqual(len(lines), 1)
        rel = json.loads(lines[0])
        self.assertEqual((rel['source'], rel['target'], rel['rule']), ('P2', 'D8', 'interval'))

    def test_dry_run(self):
        status, out, err = call('run', *inputs('--out', self.out('dry'), '--dry-run'))
        self.assertEqual(status, EXIT_OK)
        self.assertFalse(os.path.exists(self.out('dry')))

    def test_jobs_do_not_change_outputs(self):
        call('run', *inputs('--out', self.out('j1'), '-j', '1'))
        call('run', *inputs('--out', self.out('j2'), '-j', '2'))
        for name in ('summary.json', 'pairs.csv', 'combos.csv', 'annotations.jsonl'):
            self.assertEqual(content(os.path.join(self.out('j1'), name)),
                             content(os.path.join(self.out('j2'), name)), name)

    def test_chained_stages(self):
        call('run', *inputs('--out', self.out('all')))
        self.assertEqual(call('pairs', *inputs('--out', self.out('s1')))[0], EXIT_OK)
        self.assertEqual(call('annotate', '--pairs', os.path.join(self.out('s1'), 'pairs.jsonl'),
                              '--out', self.out('s2'))[0], EXIT_OK)
        self.assertEqual(call('report', '--annotations', os.path.join(self.out('s2'), 'annotations.jsonl'),
                              '--out', self.out('s3'))[0], EXIT_OK)
        for name in ('summary.json', 'pairs.csv', 'combos.csv'):
            self.assertEqual(content(os.path.join(self.out('all'), name)),
                             content(os.path.join(self.out('s3'), name)), name)

    def test_json_only(self):
        call('report', *inputs('--out', self.out('js'), '--format', 'json'))
        self.assertListEqual(sorted(os.listdir(self.out('js'))),
                             ['annotations.jsonl', 'noise.csv', 'pairs.jsonl', 'summary.json'])


class Test_Errors(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def test_missing_file(self):
        status, out, err = call('run', '--products', os.path.join(self.tmp, 'nope.jsonl'),
                                '--relations', RELATIONS, '--out', self.tmp)
        self.assertEqual(status, EXIT_CONFIG)
        self.assertIn('not found', err)

    def test_missing_out(self):
        self.assertEqual(call('run', *inputs())[0], EXIT_CONFIG)

    def test_missing_out_when_reading_stage_files(self):
        annotations = os.path.join(self.tmp, 'annotations.jsonl')
        pairs = os.path.join(self.tmp, 'pairs.jsonl')
        for path in (annotations, pairs):
            open(path, 'w').close()
        status, out, err = call('report', '--annotations', annotations)
        self.assertEqual(status, EXIT_CONFIG)
        self.assertIn('--out is required', err)
        self.assertEqual(call('annotate', '--pairs', pairs)[0], EXIT_CONFIG)
        self.assertEqual(call('report', '--annotations', annotations, '--dry-run')[0], EXIT_OK)
        self.assertListEqual(sorted(os.listdir(self.tmp)), ['annotations.jsonl', 'pairs.jsonl'])

    def test_bad_flags(self):
        self.assertEqual(call('test', '--retrofit', 'magic')[0], EXIT_CONFIG)
        self.assertEqual(call('test', '--format', 'xml')[0], EXIT_CONFIG)
        self.assertEqual(call('test', '--jobs', '0')[0], EXIT_CONFIG)
        self.assertEqual(call('test', '--fuzzy-threshold', 'high')[0], EXIT_CONFIG)

    def test_malformed_input(self):
        products = os.path.join(self.tmp, 'products.jsonl')
        with open(PRODUCTS) as f, open(products, 'w') as g:
            g.write(f.read().rstrip('\n') + '\n{"id": "broken"\n')
        args = ['--products', products, '--relations', RELATIONS, '--dry-run']
        with self.assertLogs('suppauthors.cli', 'WARNING') as logs:
            status, out, err = call('run', *args)
        self.assertEqual(status, EXIT_OK)
        self.assertIn('Skipped 1 of 21', logs.output[0])
        status, out, err = call('run', '--strict', *args)
        self.assertEqual(status, EXIT_INPUT)
        self.assertIn('malformed_json', err)

    def test_config_precedence(self):
        path = os.path.join(self.tmp, 'run.json')
        with open(path, 'w') as f:
            json.dump({'retrofit': {'window_days': 30}, 'match': {'fuzzy_threshold': 0.8}}, f)
        base = {'--config': path, '--retrofit': 'off', '--format': 'both'}
        cfg = parse_args(base)
        self.assertEqual((cfg.rule.window_days, cfg.match.fuzzy_threshold), (30, 0.8))
        cfg = parse_args(dict(base, **{'--window-days': '90'}))
        self.assertEqual((cfg.rule.window_days, cfg.match.fuzzy_threshold), (90, 0.8))
        self.assertEqual(parse_args({}).rule.window_days, 183)

    def test_bad_config(self):
        path = os.path.join(self.tmp, 'run.json')
        with open(path, 'w') as f:
            json.dump({'colours': {}}, f)
        self.assertRaises(ConfigError, load_run_config, path)
        with open(path, 'w') as f:
            json.dump({'weights': {'date': 2}}, f)
        self.assertRaises(ConfigError, load_run_config, path)
        with open(path, 'w') as f:
            json.dump({'paths': {'products': 3}}, f)
        self.assertRaises(ConfigError, load_run_config, path)
        self.assertEqual(call('run', '--config', path, '--dry-run')[0], EXIT_CONFIG)
        with open(path, 'w') as f:
            json.dump({'paths': {'mapping': 'mapping.json'}, 'mapping': {'id': 'pid'}}, f)
        self.assertRaises(ConfigError, load_run_config, path)

    def test_mapping_file_from_paths(self):
        path = os.path.join(self.tmp, 'run.json')
        with open(os.path.join(self.tmp, 'mapping.json'), 'w') as f:
            json.dump({'id': 'pid'}, f)
        with open(path, 'w') as f:
            json.dump({'paths': {'mapping': 'mapping.json'}}, f)
        self.assertEqual(load_run_config(path).mapping.id, 'pid')

    def test_weights_and_group_pattern_flags(self):
        base = {'--retrofit': 'interval', '--format': 'both'}
        cfg = parse_args(dict(base, **{'--weights': '0.1,0.2,0.3,0.4', '--group-patterns': 'lab, crew'}))
        self.assertEqual((cfg.weights.date, cfg.weights.authors), (0.1, 0.4))
        self.assertEqual(cfg.match.group_patterns, frozenset(['lab', 'crew']))
        self.assertRaises(ConfigError, parse_args, dict(base, **{'--weights': '0.5,0.5'}))
        self.assertRaises(ConfigError, parse_args, dict(base, **{'--weights': '1,1,1,1'}))
        self.assertRaises(ConfigError, parse_args, dict(base, **{'--weights': 'a,b,c,d'}))
        self.assertEqual(call('test', '--weights', '0.7,0.1,0.1,0.1')[0], EXIT_OK)
