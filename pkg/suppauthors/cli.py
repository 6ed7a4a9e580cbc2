"""
Usage:
   suppauthors  (--version | -h)
   suppauthors  run [options]
   suppauthors  ingest-check [options]
   suppauthors  pairs [options]
   suppauthors  retrofit [options]
   suppauthors  annotate [options]
   suppauthors  report [options]
   suppauthors  test [options]

Options:
   -h, --help                    Displays usage information and exits.
   --version                     Displays version information and exits.
   -c PATH, --config PATH        Run configuration file (JSON or TOML) with tables
                                 [paths], [mapping], [noise], [match], [retrofit], [weights].
   --products PATH               Products file (newline-delimited JSON).
   --relations PATH              Relations file (newline-delimited JSON).
   --mapping PATH                Field mapping file (JSON or TOML).
   --blocklist PATH              Generic titles to exclude, one per line.
   --pairs PATH                  Read pairs from a previous `pairs` run instead of selecting them.
   --annotations PATH            Read annotations from a previous `annotate` run.
   -o DIR, --out DIR             Output directory.
   --window-days N               Retrofit rule: max days between publication and supplement (default 183).
   --min-shared-authors N        Retrofit rule: min shared authors (default 1).
   --interval-multiplier X       Retrofit interval: half-width in sample std units (default 2).
   --weights D,T,S,A             Retrofit interval: weights of date, title, subjects and authors,
                                 summing to 1 (default 0.25 each).
   --fuzzy-threshold X           Min normalized similarity for fuzzy author matches (default 0.90).
   --no-fuzzy                    Match authors on ORCID and exact normalized names only.
   --group-patterns LIST         Comma-separated name substrings that mark a group author
                                 (replaces the built-in list).
   --fanin-threshold N           Publications per supplement above which short titles are noise (default 5).
   --min-title-length N          Titles shorter than this can be noise (default 12).
   --retrofit MODE               Relation retrofit: 'off', 'rule' or 'interval' [default: off].
   -j N, --jobs N                Worker processes for annotation. Default: number of CPUs.
   --strict                      Abort on the first malformed input record [default: False].
   --dry-run                     Compute everything, write nothing [default: False].
   --format FORMAT               Report formats: 'json', 'csv' or 'both' [default: both].
   -v, --verbose                 Debug logging.
   -q, --quiet                   Warnings and errors only.

Stage files written to the output directory: pairs.jsonl, noise.csv,
inferred_relations.jsonl, annotations.jsonl, summary.json, pairs.csv, combos.csv.
"""

import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace

from suppauthors.model import SuppAuthorsError, ConfigError, SupplementPair
from suppauthors.ingest import (MappingConfig, IngestError, read_products, read_relations,
                                read_config_file)
from suppauthors.pairs import (NoisePolicy, PairDiagnostics, load_blocklist, index_products,
                               select_supplement_pairs, select_linked_publications,
                               detect_dedup_noise, write_noise_csv)
from suppauthors.diff import MatchConfig, annotate_pairs
from suppauthors.retrofit import (RetrofitRuleConfig, Weights, RetrofitReport, retrofit_by_rule,
                                  retrofit_by_interval, write_relations)
from suppauthors.report import (summarize_all, export, headline, write_annotations,
                                read_annotations, COMBINED)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2
RETROFIT_MODES = ('off', 'rule', 'interval')
FORMAT_CHOICES = {'json': ('json',), 'csv': ('csv',), 'both': ('json', 'csv')}

here = os.path.dirname(os.path.abspath(__file__))
TESTFILES = os.path.join(here, os.pardir, 'testfiles')


def usage_string():
    return __doc__


##########################  Configuration  #########################


@dataclass(frozen=True)
class RunConfig:
    products: str = None
    relations: str = None
    blocklist: str = None
    pairs: str = None
    annotations: str = None
    out_dir: str = None
    mapping: MappingConfig = field(default_factory=MappingConfig)
    noise: NoisePolicy = field(default_factory=NoisePolicy)
    match: MatchConfig = field(default_factory=MatchConfig)
    rule: RetrofitRuleConfig = field(default_factory=RetrofitRuleConfig)
    weights: Weights = field(default_factory=Weights)
    interval_multiplier: float = 2.0
    retrofit: str = 'off'
    formats: tuple = ('json', 'csv')
    jobs: int = None
    strict: bool = False
    dry_run: bool = False


def _section(cls, table, name):
    try:
        return cls(**table)
    except TypeError as e:
        raise ConfigError("Invalid [%s] section: %s" % (name, e))

def _number(value, convert, flag):
    try:
        return convert(value)
    except (TypeError, ValueError):
        raise ConfigError("%s must be a number, got %r" % (flag, value))

def _path(value, what, must_exist=True):
    if value is None:
        return None
    path = os.path.abspath(value)
    if must_exist and not os.path.exists(path):
        raise ConfigError("%s file not found: %s" % (what, path))
    return path


def load_run_config(path):
    """RunConfig from a JSON/TOML file. Missing tables keep their defaults."""
    data = read_config_file(path)
    unknown = set(data) - set(['paths', 'mapping', 'noise', 'match', 'retrofit', 'weights'])
    if unknown:
        raise ConfigError("Unknown config tables: %s" % ', '.join(sorted(unknown)))
    base = os.path.dirname(os.path.abspath(path))
    table = data.get('paths', {})
    if not isinstance(table, dict):
        raise ConfigError("[paths] must be a table of file names")
    paths = {}
    for k, v in table.items():
        if not isinstance(v, str):
            raise ConfigError("[paths] %s must be a string, got %r" % (k, v))
        paths[k] = os.path.join(base, v)
    if 'out' in paths:
        paths['out_dir'] = paths.pop('out')
    mapping = data.get('mapping', {})
    if 'mapping' in paths:
        if 'mapping' in data:
            raise ConfigError("Field mapping given both in [paths] and as [mapping]")
        mapping = read_config_file(paths.pop('mapping'))
    if isinstance(mapping, str):
        mapping = read_config_file(os.path.join(base, mapping))
    noise = dict(data.get('noise', {}))
    if 'generic_title_blocklist' in noise:
        noise['generic_title_blocklist'] = frozenset(noise['generic_title_blocklist'])
    match = dict(data.get('match', {}))
    if 'group_patterns' in match:
        match['group_patterns'] = frozenset(match['group_patterns'])
    retro = dict(data.get('retrofit', {}))
    multiplier = retro.pop('interval_multiplier', 2.0)
    try:
        cfg = RunConfig(**paths)
    except TypeError as e:
        raise ConfigError("Invalid [paths] section: %s" % e)
    return replace(cfg,
                   mapping=MappingConfig.from_dict(mapping),
                   noise=_section(NoisePolicy, noise, 'noise'),
                   match=_section(MatchConfig, match, 'match'),
                   rule=_section(RetrofitRuleConfig, retro, 'retrofit'),
                   weights=_section(Weights, data.get('weights', {}), 'weights'),
                   interval_multiplier=_number(multiplier, float, 'interval_multiplier'))


def parse_args(args):
    """RunConfig from docopt *args*: defaults, then the --config file, then flags."""
    cfg = load_run_config(args['--config']) if args.get('--config') else RunConfig()
    if args.get('test'):
        cfg = replace(cfg, products=os.path.join(TESTFILES, 'products.jsonl'),
                      relations=os.path.join(TESTFILES, 'relations.jsonl'),
                      blocklist=os.path.join(TESTFILES, 'blocklist.txt'),
                      dry_run=not args.get('--out'))

    paths = {}
    for flag, name in [('--products', 'products'), ('--relations', 'relations'),
                       ('--blocklist', 'blocklist'), ('--pairs', 'pairs'),
                       ('--annotations', 'annotations'), ('--out', 'out_dir')]:
        if args.get(flag):
            paths[name] = args[flag]
    cfg = replace(cfg, **paths)

    if args.get('--mapping'):
        cfg = replace(cfg, mapping=MappingConfig.from_dict(read_config_file(args['--mapping'])))
    strict = bool(args.get('--strict')) or cfg.strict
    cfg = replace(cfg, strict=strict, mapping=replace(cfg.mapping, strict=strict),
                  dry_run=bool(args.get('--dry-run')) or cfg.dry_run)

    noise = cfg.noise
    if cfg.blocklist:
        noise = replace(noise, generic_title_blocklist=load_blocklist(_path(cfg.blocklist, 'Blocklist')))
    if args.get('--fanin-threshold') is not None:
        noise = replace(noise, fanin_threshold=_number(args['--fanin-threshold'], int, '--fanin-threshold'))
    if args.get('--min-title-length') is not None:
        noise = replace(noise, min_title_length=_number(args['--min-title-length'], int, '--min-title-length'))

    match = cfg.match
    if args.get('--fuzzy-threshold') is not None:
        match = replace(match, fuzzy_threshold=_number(args['--fuzzy-threshold'], float, '--fuzzy-threshold'))
    if args.get('--no-fuzzy'):
        match = replace(match, fuzzy_enabled=False)
    if args.get('--group-patterns') is not None:
        match = replace(match, group_patterns=frozenset(args['--group-patterns'].split(',')))

    rule = cfg.rule
    if args.get('--window-days') is not None:
        rule = replace(rule, window_days=_number(args['--window-days'], int, '--window-days'))
    if args.get('--min-shared-authors') is not None:
        rule = replace(rule, min_shared_authors=_number(args['--min-shared-authors'], int, '--min-shared-authors'))
    multiplier = cfg.interval_multiplier
    if args.get('--interval-multiplier') is not None:
        multiplier = _number(args['--interval-multiplier'], float, '--interval-multiplier')
    weights = cfg.weights
    if args.get('--weights') is not None:
        values = [_number(w, float, '--weights') for w in args['--weights'].split(',')]
        if len(values) != 4:
            raise ConfigError("--weights takes four comma-separated numbers, got %d" % len(values))
        weights = Weights(*values)

    mode = (args.get('--retrofit') or 'off').lower()
    if mode not in RETROFIT_MODES:
        raise ConfigError("--retrofit must be one of 'off', 'rule' or 'interval'.")
    fmt = (args.get('--format') or 'both').lower()
    if fmt not in FORMAT_CHOICES:
        raise ConfigError("--format must be one of 'json', 'csv' or 'both'.")
    jobs = None
    if args.get('--jobs') is not None:
        jobs = _number(args['--jobs'], int, '--jobs')
        if jobs < 1:
            raise ConfigError("--jobs must be at least 1")

    return replace(cfg, noise=noise, match=match, rule=rule, weights=weights,
                   interval_multiplier=multiplier, retrofit=mode, formats=FORMAT_CHOICES[fmt], jobs=jobs)


def check_inputs(cfg, stage):
    """Raise ConfigError unless the files *stage* reads exist and it has somewhere to write."""
    if not cfg.dry_run and stage != 'ingest-check' and not cfg.out_dir:
        raise ConfigError("--out is required unless --dry-run is given")
    if stage == 'report' and cfg.annotations:
        _path(cfg.annotations, 'Annotations')
        return
    if stage == 'annotate' and cfg.pairs:
        _path(cfg.pairs, 'Pairs')
        return
    if not cfg.products:
        raise ConfigError("--products is required")
    if not cfg.relations:
        raise ConfigError("--relations is required")
    _path(cfg.products, 'Products')
    _path(cfg.relations, 'Relations')


############################  Stages  ##############################


def _report_skips(report):
    if report.records_skipped:
        logger.warning("Skipped %d of %d %s records: %s", report.records_skipped,
                       report.records_read, report.name, dict(sorted(report.errors.items())))

def load_graph(cfg):
    products, preport = read_products(cfg.products, cfg.mapping)
    relations, rreport = read_relations(cfg.relations, cfg.mapping)
    _report_skips(preport)
    _report_skips(rreport)
    return products, relations, preport, rreport


def _outpath(cfg, name):
    if cfg.dry_run or not cfg.out_dir:
        return None
    if not os.path.isdir(cfg.out_dir):
        os.makedirs(cfg.out_dir)
    return os.path.join(cfg.out_dir, name)

def _select(index, relations, cfg):
    diag = PairDiagnostics()
    pairs = select_supplement_pairs(index, relations, diag)
    kept, flagged = detect_dedup_noise(pairs, index, cfg.noise)
    return kept, flagged, diag


def infer_relations(cfg, index, relations, known_pairs):
    """Inferred relations for cfg.retrofit ('rule' or 'interval')."""
    report = RetrofitReport()
    if cfg.retrofit == 'rule':
        inferred = retrofit_by_rule(index, relations, cfg.rule, cfg.match, report)
    else:
        inferred, interval = retrofit_by_interval(list(index.values()), relations, known_pairs,
                                                  cfg.weights, cfg.match, cfg.interval_multiplier, report)
        logger.info("Score interval: %s", json.dumps(interval.to_dict(), sort_keys=True))
    return inferred


def build_pairs(cfg):
    """Ingest, select, de-noise and (if asked) retrofit. Return (kept, flagged, inferred)."""
    products, relations, _, _ = load_graph(cfg)
    index = index_products(products)
    logger.info("%d publications linked to datasets or software",
                len(select_linked_publications(index, relations)))
    kept, flagged, diag = _select(index, relations, cfg)
    logger.info("Pair selection: %r", diag)
    inferred = []
    if cfg.retrofit != 'off':
        inferred = infer_relations(cfg, index, relations, kept)
        if inferred:
            kept, flagged, diag = _select(index, list(relations) + inferred, cfg)
    return kept, flagged, inferred


def write_pairs(pairs, path):
    with open(path, 'w', encoding='utf-8') as f:
        for p in pairs:
            f.write(json.dumps(p.to_dict(), sort_keys=True) + '\n')

def read_pairs(path):
    with open(path, encoding='utf-8') as f:
        return [SupplementPair.from_dict(json.loads(line)) for line in f if line.strip()]


def stage_ingest_check(cfg):
    products, relations, preport, rreport = load_graph(cfg)
    sys.stdout.write(json.dumps({'products': preport.to_dict(), 'relations': rreport.to_dict()},
                                indent=2, sort_keys=True) + '\n')
    return EXIT_OK

def stage_pairs(cfg):
    kept, flagged, inferred = build_pairs(cfg)
    path = _outpath(cfg, 'pairs.jsonl')
    if path:
        write_pairs(kept, path)
        write_noise_csv(flagged, _outpath(cfg, 'noise.csv'))
        if inferred:
            write_relations(inferred, _outpath(cfg, 'inferred_relations.jsonl'))
    sys.stdout.write("Selected %d pairs (%d flagged as noise)\n" % (len(kept), len(flagged)))
    return EXIT_OK

def stage_retrofit(cfg):
    if cfg.retrofit == 'off':
        cfg = replace(cfg, retrofit='rule')
    products, relations, _, _ = load_graph(cfg)
    index = index_products(products)
    kept, flagged, diag = _select(index, relations, cfg)
    inferred = infer_relations(cfg, index, relations, kept)
    path = _outpath(cfg, 'inferred_relations.jsonl')
    if path:
        write_relations(inferred, path)
    sys.stdout.write("Inferred %d IsSupplementedBy relations (%s)\n" % (len(inferred), cfg.retrofit))
    return EXIT_OK

def _annotations(cfg):
    if cfg.pairs:
        pairs = read_pairs(cfg.pairs)
        flagged = []
    else:
        pairs, flagged, inferred = build_pairs(cfg)
        if inferred and _outpath(cfg, 'inferred_relations.jsonl'):
            write_relations(inferred, _outpath(cfg, 'inferred_relations.jsonl'))
        path = _outpath(cfg, 'pairs.jsonl')
        if path:
            write_pairs(pairs, path)
            write_noise_csv(flagged, _outpath(cfg, 'noise.csv'))
    return annotate_pairs(pairs, cfg.match, cfg.jobs)

def stage_annotate(cfg):
    annotations = _annotations(cfg)
    path = _outpath(cfg, 'annotations.jsonl')
    if path:
        write_annotations(annotations, path)
    sys.stdout.write("Annotated %d pairs\n" % len(annotations))
    return EXIT_OK

def stage_report(cfg):
    if cfg.annotations:
        annotations = read_annotations(cfg.annotations)
    else:
        annotations = _annotations(cfg)
        path = _outpath(cfg, 'annotations.jsonl')
        if path:
            write_annotations(annotations, path)
    summaries = summarize_all(annotations)
    if not cfg.dry_run:
        export(summaries, annotations, cfg.out_dir, cfg.formats)
    sys.stdout.write(headline(summaries[COMBINED]) + '\n')
    return EXIT_OK

STAGES = {
    'ingest-check': stage_ingest_check,
    'pairs': stage_pairs,
    'retrofit': stage_retrofit,
    'annotate': stage_annotate,
    'report': stage_report,
    'run': stage_report,
    'test': stage_report,
}


######################################################################


def errmsg(message, status=EXIT_INPUT):
    sys.stderr.write('\n\t' + message + '\n\n')
    return status

def setup_logging(args):
    level = logging.INFO
    if args.get('--verbose'): level = logging.DEBUG
    elif args.get('--quiet'): level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')


def run(args):
    """Run the subcommand selected in docopt *args*. Return the exit status."""
    stage = next((s for s in STAGES if args.get(s)), 'run')
    try:
        cfg = parse_args(args)
        if stage == 'run':
            cfg = replace(cfg, annotations=None, pairs=None)
        check_inputs(cfg, stage)
    except ConfigError as e:
        return errmsg(str(e), EXIT_CONFIG)
    try:
        return STAGES[stage](cfg)
    except IngestError as e:
        return errmsg("Invalid input (%s): %s" % (e.error_class, e), EXIT_INPUT)
    except ConfigError as e:
        return errmsg(str(e), EXIT_CONFIG)
    except (SuppAuthorsError, IOError, OSError, ValueError) as e:
        return errmsg(str(e), EXIT_INPUT)
